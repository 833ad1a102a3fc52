#include "macsav/fastsolve.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <vector>

#include "macsav/ops.hpp"

namespace macsav {

namespace {

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class R2RPlan {
 public:
  R2RPlan() = default;
  R2RPlan(int rows, int cols, double* buf, fftw_r2r_kind row_kind, fftw_r2r_kind col_kind) {
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_r2r_2d(rows, cols, buf, buf, row_kind, col_kind, FFTW_ESTIMATE);
    if (plan_ == nullptr) throw std::runtime_error("FFTW failed to create an r2r plan");
  }
  R2RPlan(const R2RPlan&) = delete;
  R2RPlan& operator=(const R2RPlan&) = delete;
  ~R2RPlan() {
    if (plan_ != nullptr) {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan_);
    }
  }
  void execute() const { fftw_execute(plan_); }

 private:
  fftw_plan plan_ = nullptr;
};

void check_positive(double v, const char* what, const char* who) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    std::ostringstream os;
    os << who << ": " << what << " must be positive and finite, got " << v;
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

double laplacian_eigenvalue_1d(int k, const GridSpec& grid) {
  const double s = std::sin(k * std::numbers::pi / (2.0 * grid.n()));
  return 4.0 * s * s / (grid.h() * grid.h());
}

struct FastSolver::Impl {
  explicit Impl(GridSpec g)
      : grid(g),
        n(g.n()),
        cell_buf(static_cast<std::size_t>(n) * n),
        x_buf(static_cast<std::size_t>(n) * (n - 1)),
        y_buf(static_cast<std::size_t>(n - 1) * n),
        cell_fwd(n, n, cell_buf.data(), FFTW_REDFT10, FFTW_REDFT10),
        cell_bwd(n, n, cell_buf.data(), FFTW_REDFT01, FFTW_REDFT01),
        // x-edge buffer: rows j (cosine), columns i = 1..N-1 (sine)
        x_fwd(n, n - 1, x_buf.data(), FFTW_REDFT10, FFTW_RODFT00),
        x_bwd(n, n - 1, x_buf.data(), FFTW_REDFT01, FFTW_RODFT00),
        // y-edge buffer: rows j = 1..N-1 (sine), columns i (cosine)
        y_fwd(n - 1, n, y_buf.data(), FFTW_RODFT00, FFTW_REDFT10),
        y_bwd(n - 1, n, y_buf.data(), FFTW_RODFT00, FFTW_REDFT01) {
    lam.resize(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) lam[k] = laplacian_eigenvalue_1d(k, grid);
    // Unnormalized DCT-II/DCT-III and DST-I round trips both scale by 2N per axis.
    norm = 1.0 / (4.0 * n * n);
  }

  GridSpec grid;
  int n;
  std::vector<double> cell_buf, x_buf, y_buf;
  R2RPlan cell_fwd, cell_bwd, x_fwd, x_bwd, y_fwd, y_bwd;
  std::vector<double> lam;
  double norm = 1.0;

  void load(const CellField& f) {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) cell_buf[j * n + i] = f(i, j);
  }
  CellField store_cell() const {
    CellField out(grid);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) out.ref(i, j) = cell_buf[j * n + i];
    out.fill_ghosts();
    return out;
  }
};

FastSolver::FastSolver(GridSpec grid) : impl_(std::make_unique<Impl>(grid)) {}
FastSolver::~FastSolver() = default;
FastSolver::FastSolver(FastSolver&&) noexcept = default;
FastSolver& FastSolver::operator=(FastSolver&&) noexcept = default;

const GridSpec& FastSolver::grid() const { return impl_->grid; }

CellField FastSolver::solve_phase(const PhaseOperatorSpec& spec, const CellField& rhs) {
  check_positive(spec.tau, "tau", "solve_phase");
  check_positive(spec.epsilon, "epsilon", "solve_phase");
  Impl& s = *impl_;
  if (!(rhs.grid() == s.grid) || !(spec.grid == s.grid)) throw std::invalid_argument("solve_phase: grid mismatch");
  const double diag = 1.5 / spec.tau;
  const double eps2 = spec.epsilon * spec.epsilon;
  s.load(rhs);
  s.cell_fwd.execute();
  for (int ky = 0; ky < s.n; ++ky) {
    for (int kx = 0; kx < s.n; ++kx) {
      const double sigma = s.lam[kx] + s.lam[ky];
      s.cell_buf[ky * s.n + kx] *= s.norm / (diag + eps2 * sigma * sigma);
    }
  }
  s.cell_bwd.execute();
  return s.store_cell();
}

CellField FastSolver::solve_poisson_neumann(const CellField& rhs) {
  Impl& s = *impl_;
  if (!(rhs.grid() == s.grid)) throw std::invalid_argument("solve_poisson_neumann: grid mismatch");
  const double mean = cell_average(rhs);
  const double tol = kPoissonMeanTolerance * std::max(1.0, norm_inf(rhs));
  if (std::abs(mean) > tol) {
    std::ostringstream os;
    os << "solve_poisson_neumann: incompatible right-hand side, cell average " << mean << " exceeds " << tol;
    throw IncompatibleRhs(os.str(), mean);
  }
  s.load(rhs);
  s.cell_fwd.execute();
  s.cell_buf[0] = 0.0;  // mean-zero gauge
  for (int ky = 0; ky < s.n; ++ky) {
    for (int kx = (ky == 0 ? 1 : 0); kx < s.n; ++kx) {
      const double sigma = s.lam[kx] + s.lam[ky];
      s.cell_buf[ky * s.n + kx] *= -s.norm / sigma;
    }
  }
  s.cell_bwd.execute();
  return s.store_cell();
}

MacVector FastSolver::solve_velocity(const VelocityOperatorSpec& spec, const MacVector& rhs) {
  check_positive(spec.tau, "tau", "solve_velocity");
  check_positive(spec.nu, "nu", "solve_velocity");
  Impl& s = *impl_;
  if (!(rhs.grid() == s.grid) || !(spec.grid == s.grid)) throw std::invalid_argument("solve_velocity: grid mismatch");
  const int n = s.n;
  const int m = n - 1;
  const double diag = 1.5 / spec.tau;
  MacVector out(s.grid);

  for (int j = 0; j < n; ++j)
    for (int i = 1; i < n; ++i) s.x_buf[j * m + (i - 1)] = rhs.x(i, j);
  s.x_fwd.execute();
  for (int ky = 0; ky < n; ++ky) {
    for (int kx = 0; kx < m; ++kx) {
      const double sigma = s.lam[kx + 1] + s.lam[ky];
      s.x_buf[ky * m + kx] *= s.norm / (diag + spec.nu * sigma);
    }
  }
  s.x_bwd.execute();
  for (int j = 0; j < n; ++j)
    for (int i = 1; i < n; ++i) out.x.ref(i, j) = s.x_buf[j * m + (i - 1)];

  for (int j = 1; j < n; ++j)
    for (int i = 0; i < n; ++i) s.y_buf[(j - 1) * n + i] = rhs.y(i, j);
  s.y_fwd.execute();
  for (int ky = 0; ky < m; ++ky) {
    for (int kx = 0; kx < n; ++kx) {
      const double sigma = s.lam[kx] + s.lam[ky + 1];
      s.y_buf[ky * n + kx] *= s.norm / (diag + spec.nu * sigma);
    }
  }
  s.y_bwd.execute();
  for (int j = 1; j < n; ++j)
    for (int i = 0; i < n; ++i) out.y.ref(i, j) = s.y_buf[(j - 1) * n + i];

  out.fill_ghosts();
  return out;
}

namespace {

FastSolver& cached_solver(const GridSpec& grid) {
  thread_local std::map<int, std::unique_ptr<FastSolver>> cache;
  auto& slot = cache[grid.n()];
  if (!slot) slot = std::make_unique<FastSolver>(grid);
  return *slot;
}

}  // namespace

CellField solve_phase(const PhaseOperatorSpec& spec, const CellField& rhs) {
  return cached_solver(rhs.grid()).solve_phase(spec, rhs);
}

MacVector solve_velocity(const VelocityOperatorSpec& spec, const MacVector& rhs) {
  return cached_solver(rhs.grid()).solve_velocity(spec, rhs);
}

CellField solve_poisson_neumann(const CellField& rhs) { return cached_solver(rhs.grid()).solve_poisson_neumann(rhs); }

}  // namespace macsav

#include "macsav/diagnostics.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>

#include "macsav/ops.hpp"

namespace macsav {

double modified_energy(const SimState& s, const Params& params) {
  const double eps2 = params.epsilon() * params.epsilon();
  const double lambda = params.lambda();
  const double tau = params.tau();
  CellField extrap = 2.0 * s.phi_n;
  extrap -= s.phi_nm1;
  const double r_ext = 2.0 * s.r_n - s.r_nm1;
  const double q_ext = 2.0 * s.q_n - s.q_nm1;
  return 0.25 * eps2 * (grad_norm_sq(s.phi_n) + grad_norm_sq(extrap)) + 0.5 * (s.r_n * s.r_n + r_ext * r_ext) +
         0.25 * (s.q_n * s.q_n + q_ext * q_ext) + inner_mac(s.u_n, s.u_n) / (2.0 * lambda) +
         tau * tau / (3.0 * lambda) * grad_norm_sq(s.p_n);
}

double original_energy(const CellField& phi, const MacVector& u, const Params& params) {
  const int n = phi.grid().n();
  const double h = phi.grid().h();
  double bulk = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double w = phi(i, j) * phi(i, j) - 1.0;
      bulk += 0.25 * w * w + 1.0;
    }
  }
  const double eps2 = params.epsilon() * params.epsilon();
  return h * h * bulk + 0.5 * eps2 * grad_norm_sq(phi) + inner_mac(u, u) / (2.0 * params.lambda());
}

DiagRecord make_record(const SimState& s, const Params& params) {
  return DiagRecord{s.step,
                    s.time,
                    modified_energy(s, params),
                    original_energy(s.phi_n, s.u_n, params),
                    cell_average(s.phi_n),
                    norm_inf(div_mac(s.u_n)),
                    s.r_n,
                    s.q_n - 1.0,
                    std::sqrt(grad_norm_sq(s.phi_n))};
}

std::string csv_header() { return "step,time,energy_modified,energy_original,mass,max_div,r,q_minus_one,grad_phi_l2"; }

namespace {

void append_number(std::string& out, double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), res.ptr);
}

}  // namespace

std::string csv_row(const DiagRecord& rec) {
  std::string out = std::to_string(rec.step);
  for (double v : {rec.time, rec.energy_modified, rec.energy_original, rec.mass, rec.max_div, rec.r, rec.q_minus_one,
                   rec.grad_phi_l2}) {
    out.push_back(',');
    append_number(out, v);
  }
  return out;
}

double energy_bound_excess(const SimState& s, const Params& params, double e0) {
  const double root = std::sqrt(e0);
  const double grad_phi = std::sqrt(grad_norm_sq(s.phi_n));
  const double u_l2 = std::sqrt(inner_mac(s.u_n, s.u_n));
  return std::max({grad_phi - 2.0 * root / params.epsilon(), std::abs(s.r_n) - std::sqrt(2.0) * root,
                   std::abs(s.q_n) - 2.0 * root, u_l2 - std::sqrt(2.0 * params.lambda()) * root});
}

CellField random_cell_field(const GridSpec& grid, std::mt19937_64& rng, double amplitude) {
  std::uniform_real_distribution<double> dist(-amplitude, amplitude);
  CellField f(grid);
  for (int j = 0; j < grid.n(); ++j)
    for (int i = 0; i < grid.n(); ++i) f.ref(i, j) = dist(rng);
  f.fill_ghosts();
  return f;
}

MacVector random_mac_vector(const GridSpec& grid, std::mt19937_64& rng, double amplitude) {
  std::uniform_real_distribution<double> dist(-amplitude, amplitude);
  const int n = grid.n();
  MacVector v(grid);
  for (int j = 0; j < n; ++j)
    for (int i = 1; i < n; ++i) v.x.ref(i, j) = dist(rng);
  for (int j = 1; j < n; ++j)
    for (int i = 0; i < n; ++i) v.y.ref(i, j) = dist(rng);
  v.fill_ghosts();
  return v;
}

MacVector random_solenoidal(const GridSpec& grid, std::mt19937_64& rng, double amplitude) {
  std::uniform_real_distribution<double> dist(-amplitude, amplitude);
  const int n = grid.n();
  const double h = grid.h();
  // psi at nodes (i h, j h), zero on the boundary
  std::vector<double> psi(static_cast<std::size_t>(n + 1) * (n + 1), 0.0);
  auto at = [&](int i, int j) -> double& { return psi[static_cast<std::size_t>(j) * (n + 1) + i]; };
  for (int j = 1; j < n; ++j)
    for (int i = 1; i < n; ++i) at(i, j) = dist(rng) * h;
  MacVector v(grid);
  for (int j = 0; j < n; ++j)
    for (int i = 1; i < n; ++i) v.x.ref(i, j) = -(at(i, j + 1) - at(i, j)) / h;
  for (int j = 1; j < n; ++j)
    for (int i = 0; i < n; ++i) v.y.ref(i, j) = (at(i + 1, j) - at(i, j)) / h;
  v.fill_ghosts();
  return v;
}

double SbpReport::max_defect() const {
  return std::max({defect_div_free_gradient, defect_cell_laplacian, defect_vector_laplacian, defect_advection});
}

namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : (num == 0.0 ? 0.0 : INFINITY); }

}  // namespace

SbpReport check_sbp(const GridSpec& grid, int trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("check_sbp: trials must be >= 1");
  std::mt19937_64 rng(seed);
  SbpReport rep;
  for (int t = 0; t < trials; ++t) {
    const CellField f = random_cell_field(grid, rng);
    const CellField g = random_cell_field(grid, rng);
    const MacVector u_sol = random_solenoidal(grid, rng);
    const MacVector v = random_mac_vector(grid, rng);

    const MacVector grad_f = grad_cell(f);
    const double d2 = std::abs(inner_mac(u_sol, grad_f));
    rep.defect_div_free_gradient = std::max(
        rep.defect_div_free_gradient, ratio(d2, std::sqrt(inner_mac(u_sol, u_sol)) * std::sqrt(inner_mac(grad_f, grad_f))));

    const double gf2 = grad_norm_sq(f);
    rep.defect_cell_laplacian =
        std::max(rep.defect_cell_laplacian, ratio(std::abs(inner_cell(f, laplacian_5pt(f)) + gf2), gf2));

    const double gv2 = grad_norm_sq(v);
    rep.defect_vector_laplacian =
        std::max(rep.defect_vector_laplacian, ratio(std::abs(-inner_mac(v, laplacian_5pt(v)) - gv2), gv2));

    const MacVector f_grad_g = mu_grad_phi(f, g);
    const double lhs = -inner_cell(g, div_phi_u(f, v));
    const double rhs = inner_mac(v, f_grad_g);
    const double scale = std::sqrt(inner_mac(v, v)) * std::sqrt(inner_mac(f_grad_g, f_grad_g));
    rep.defect_advection = std::max(rep.defect_advection, ratio(std::abs(lhs - rhs), scale));
  }
  rep.pass = rep.max_defect() <= rep.tolerance;
  return rep;
}

ProjectionDefects projection_defects(const MacVector& u_hat, const MacVector& u) {
  const MacVector diff = u_hat - u;
  ProjectionDefects d;
  const double a = inner_mac(u_hat, u_hat);
  d.l2 = ratio(std::abs(a - inner_mac(u, u) - inner_mac(diff, diff)), a);
  const double b = grad_norm_sq(u_hat);
  d.h1 = ratio(std::abs(b - grad_norm_sq(u) - grad_norm_sq(diff)), b);
  return d;
}

}  // namespace macsav

#include "macsav/scheme.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "macsav/diagnostics.hpp"
#include "macsav/ops.hpp"
#include "macsav/snapshot.hpp"

namespace macsav {

Params::Params(double epsilon, double nu, double lambda, double tau, int n_cells, double t_end)
    : epsilon_(epsilon), nu_(nu), lambda_(lambda), tau_(tau), n_cells_(n_cells), t_end_(t_end) {
  auto require_positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      std::ostringstream os;
      os << "Params: " << name << " must be positive and finite, got " << v;
      throw std::invalid_argument(os.str());
    }
  };
  require_positive(epsilon, "epsilon");
  require_positive(nu, "nu");
  require_positive(lambda, "lambda");
  require_positive(tau, "tau");
  if (n_cells < 2) throw std::invalid_argument("Params: n_cells must be >= 2, got " + std::to_string(n_cells));
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw std::invalid_argument("Params: t_end must be >= 0");
}

long Params::num_steps() const {
  const double ratio = t_end_ / tau_;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, ratio)) return static_cast<long>(nearest);
  return static_cast<long>(std::floor(ratio));
}

BdfWeights BdfWeights::of(TimeOrder order) {
  if (order == TimeOrder::bdf1) return {1.0, -1.0, 0.0, 1.0, 0.0};
  return {1.5, -2.0, 0.5, 2.0, -1.0};
}

double compute_e1h(const CellField& phi) {
  const int n = phi.grid().n();
  double sum = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double p2 = phi(i, j) * phi(i, j);
      sum += 0.25 * p2 * p2 - 0.5 * p2 + 1.25;
    }
  }
  const double h = phi.grid().h();
  return h * h * sum;
}

SimState init_state(CellField phi0, MacVector u0) {
  if (!(phi0.grid() == u0.grid())) throw std::invalid_argument("init_state: phi0 and u0 on different grids");
  phi0.fill_ghosts();
  u0.fill_ghosts();
  const int n = phi0.grid().n();
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (!std::isfinite(phi0(i, j))) throw std::invalid_argument("init_state: phi0 has non-finite values");
  const double max_div = norm_inf(div_mac(u0));
  if (max_div > kDivergenceTolerance) {
    std::ostringstream os;
    os << "init_state: initial velocity is not divergence-free (max |div u| = " << max_div << ")";
    throw NonSolenoidalInput(os.str(), max_div);
  }
  SimState s(phi0.grid());
  s.phi_n = phi0;
  s.phi_nm1 = std::move(phi0);
  s.u_n = u0;
  s.u_nm1 = std::move(u0);
  s.r_n = s.r_nm1 = std::sqrt(compute_e1h(s.phi_n));
  s.q_n = s.q_nm1 = 1.0;
  return s;
}

namespace {

void require_finite(const CellField& f, const char* what) {
  const int n = f.grid().n();
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (!std::isfinite(f(i, j))) throw std::runtime_error(std::string(what) + " has non-finite values");
}

}  // namespace

StepWork assemble_star(const SimState& state, const Params& params, TimeOrder order) {
  const BdfWeights w = BdfWeights::of(order);
  const GridSpec g = state.grid();
  const int n = g.n();
  StepWork work(g);

  work.phi_star = w.s1 * state.phi_n;
  work.phi_star.axpy(w.s2, state.phi_nm1);
  work.u_star = w.s1 * state.u_n;
  work.u_star.axpy(w.s2, state.u_nm1);
  require_finite(work.phi_star, "assemble_star: phi*");

  work.e1h_star = compute_e1h(work.phi_star);

  CellField cubic(g);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double p = work.phi_star(i, j);
      cubic.ref(i, j) = p * p * p - p;
    }
  }
  cubic.fill_ghosts();

  const double eps2 = params.epsilon() * params.epsilon();
  work.mu_tilde_star = cubic;
  work.mu_tilde_star.axpy(-eps2, laplacian_5pt(work.phi_star));
  work.b_star = (1.0 / std::sqrt(work.e1h_star)) * std::move(cubic);
  return work;
}

CoupledSolution solve_coupled(const SimState& state, StepWork& work, const Params& params, TimeOrder order,
                              FastSolver* solver) {
  const BdfWeights w = BdfWeights::of(order);
  const GridSpec g = state.grid();
  const double tau = params.tau();
  const double eps2 = params.epsilon() * params.epsilon();
  const double lambda = params.lambda();

  auto phase_solve = [&](const CellField& rhs) {
    // c0/tau X + eps^2 Delta^2 X is the phase operator at an effective step 1.5 tau / c0.
    const PhaseOperatorSpec spec{1.5 * tau / w.c0, params.epsilon(), g};
    return solver ? solver->solve_phase(spec, rhs) : macsav::solve_phase(spec, rhs);
  };
  auto velocity_solve = [&](const MacVector& rhs) {
    const VelocityOperatorSpec spec{1.5 * tau / w.c0, params.nu(), g};
    return solver ? solver->solve_velocity(spec, rhs) : macsav::solve_velocity(spec, rhs);
  };

  // Phase pieces.
  CellField hist_phi = (-w.c1 / tau) * state.phi_n;
  hist_phi.axpy(-w.c2 / tau, state.phi_nm1);
  work.phi_0 = phase_solve(hist_phi);
  work.phi_r = phase_solve(laplacian_5pt(work.b_star));
  const CellField adv_phi = div_phi_u(work.phi_star, work.u_star);
  work.phi_q = phase_solve(-1.0 * adv_phi);

  // Velocity pieces.
  MacVector hist_u = (-w.c1 / tau) * state.u_n;
  hist_u.axpy(-w.c2 / tau, state.u_nm1);
  hist_u -= grad_cell(state.p_n);
  work.u_hat_0 = velocity_solve(hist_u);
  const MacVector surface = mu_grad_phi(work.mu_tilde_star, work.phi_star);
  const MacVector inertia = advect_velocity(work.u_star, work.u_star);
  MacVector forcing_q = lambda * surface;
  forcing_q -= inertia;
  work.u_hat_q = velocity_solve(forcing_q);
  // m = -mu~* grad phi* + lambda^{-1} u* . grad u*
  const MacVector m = (-1.0 / lambda) * forcing_q;

  const CellField lap_phi_0 = laplacian_5pt(work.phi_0);
  const CellField lap_phi_r = laplacian_5pt(work.phi_r);
  const CellField lap_phi_q = laplacian_5pt(work.phi_q);

  // r-equation, multiplied through by tau.
  CellField hist_total = w.c0 * work.phi_0;
  hist_total.axpy(w.c1, state.phi_n);
  hist_total.axpy(w.c2, state.phi_nm1);
  const double a11 = w.c0 * (1.0 - 0.5 * inner_cell(work.b_star, work.phi_r));
  const double a12 = -0.5 * w.c0 * inner_cell(work.b_star, work.phi_q);
  const double f1 = -w.c1 * state.r_n - w.c2 * state.r_nm1 + 0.5 * inner_cell(work.b_star, hist_total);

  // q-equation, multiplied through by tau.
  const double a21 = -tau * (inner_cell(adv_phi, work.b_star) - eps2 * inner_cell(adv_phi, lap_phi_r));
  const double a22 = w.c0 - tau * (-eps2 * inner_cell(adv_phi, lap_phi_q) + inner_mac(m, work.u_hat_q));
  const double f2 = -w.c1 * state.q_n - w.c2 * state.q_nm1 +
                    tau * (-eps2 * inner_cell(adv_phi, lap_phi_0) + inner_mac(m, work.u_hat_0));

  const double det = a11 * a22 - a12 * a21;
  const double a_norm_sq = a11 * a11 + a12 * a12 + a21 * a21 + a22 * a22;
  if (!(std::abs(det) >= 1e-12 * a_norm_sq)) {
    std::ostringstream os;
    os << "solve_coupled: singular scalar closure, A = [[" << a11 << ", " << a12 << "], [" << a21 << ", " << a22
       << "]], det = " << det << ", tau = " << tau;
    throw SingularClosure(os.str());
  }
  const double r = (f1 * a22 - a12 * f2) / det;
  const double q = (a11 * f2 - a21 * f1) / det;

  CellField phi = work.phi_0;
  phi.axpy(r, work.phi_r);
  phi.axpy(q, work.phi_q);
  MacVector u_hat = work.u_hat_0;
  u_hat.axpy(q, work.u_hat_q);

  CellField mu = r * work.b_star;
  mu.axpy(-eps2, lap_phi_0);
  mu.axpy(-eps2 * r, lap_phi_r);
  mu.axpy(-eps2 * q, lap_phi_q);
  work.mu_tilde_np1 = mu;

  return CoupledSolution{std::move(phi), std::move(u_hat), r, q, std::move(mu), det};
}

ProjectionResult project(const MacVector& u_hat, const CellField& p_n, double tau, FastSolver* solver) {
  if (!(tau > 0.0)) throw std::invalid_argument("project: tau must be positive");
  const CellField rhs = (1.5 / tau) * div_mac(u_hat);
  CellField dp = solver ? solver->solve_poisson_neumann(rhs) : solve_poisson_neumann(rhs);
  MacVector u = u_hat;
  u.axpy(-2.0 * tau / 3.0, grad_cell(dp));
  CellField p = p_n + dp;
  return ProjectionResult{std::move(u), std::move(p), std::move(dp)};
}

StepResult advance(const SimState& state, const Params& params, TimeOrder order, FastSolver* solver) {
  if (!(state.grid() == params.grid())) throw std::invalid_argument("advance: state grid does not match params");
  const BdfWeights w = BdfWeights::of(order);
  StepWork work = assemble_star(state, params, order);
  CoupledSolution coupled = solve_coupled(state, work, params, order, solver);
  ProjectionResult proj = project(coupled.u_hat, state.p_n, 1.5 * params.tau() / w.c0, solver);

  SimState next(state.grid());
  next.phi_nm1 = state.phi_n;
  next.phi_n = coupled.phi_np1;
  next.u_nm1 = state.u_n;
  next.u_n = std::move(proj.u_np1);
  next.p_n = std::move(proj.p_np1);
  next.r_nm1 = state.r_n;
  next.r_n = coupled.r_np1;
  next.q_nm1 = state.q_n;
  next.q_n = coupled.q_np1;
  next.step = state.step + 1;
  next.time = state.time + params.tau();
  return StepResult{std::move(next), std::move(work), std::move(coupled)};
}

namespace {

std::string describe(const Violation& v) {
  std::ostringstream os;
  os << "scheme invariant violated at step " << v.step << ": " << v.kind << " = " << v.value << " (tolerance "
     << v.tolerance << ")";
  return os.str();
}

}  // namespace

SchemeInvariantViolation::SchemeInvariantViolation(Violation v) : std::runtime_error(describe(v)), v_(std::move(v)) {}

std::vector<Violation> check_step(const SimState& before, const SimState& after, const Params& params, double mass0,
                                  bool check_energy) {
  std::vector<Violation> out;
  const long k = after.step;

  const double e_before = modified_energy(before, params);
  const double e_after = modified_energy(after, params);
  const double mass = cell_average(after.phi_n);
  const double max_div = norm_inf(div_mac(after.u_n));
  if (!std::isfinite(e_after) || !std::isfinite(mass) || !std::isfinite(max_div) || !std::isfinite(after.r_n) ||
      !std::isfinite(after.q_n)) {
    out.push_back({k, "non_finite", e_after, 0.0});
    return out;
  }
  if (check_energy) {
    const double slack = kEnergyTolerance * (1.0 + std::abs(e_before));
    if (e_after > e_before + slack) out.push_back({k, "energy_increase", e_after - e_before, slack});
  }
  if (std::abs(mass - mass0) > kMassTolerance) out.push_back({k, "mass_drift", mass - mass0, kMassTolerance});
  if (max_div > kDivergenceTolerance) out.push_back({k, "divergence", max_div, kDivergenceTolerance});
  return out;
}

SimState step(const SimState& state, const Params& params) {
  StepResult res = advance(state, params);
  const auto violations = check_step(state, res.next, params, cell_average(state.phi_n));
  if (!violations.empty()) throw SchemeInvariantViolation(violations.front());
  return std::move(res.next);
}

SimState startup(const SimState& initial, const Params& params, Startup mode, FastSolver* solver) {
  if (mode == Startup::copy_level) return initial;
  return std::move(advance(initial, params, TimeOrder::bdf1, solver).next);
}

void write_checkpoint(std::ostream& os, const SimState& s) {
  write_u64(os, static_cast<std::uint64_t>(s.grid().n()));
  write_u64(os, static_cast<std::uint64_t>(s.step));
  write_f64(os, s.time);
  write_f64(os, s.r_n);
  write_f64(os, s.r_nm1);
  write_f64(os, s.q_n);
  write_f64(os, s.q_nm1);
  write_field(os, s.phi_n);
  write_field(os, s.phi_nm1);
  write_field(os, s.u_n.x);
  write_field(os, s.u_n.y);
  write_field(os, s.p_n);
  write_field(os, s.u_nm1.x);
  write_field(os, s.u_nm1.y);
  if (!os) throw SnapshotError("checkpoint: write failed");
}

SimState read_checkpoint(std::istream& is) {
  const std::uint64_t n = read_u64(is);
  if (n < 2 || n > (1u << 20)) throw SnapshotError("checkpoint: implausible grid size " + std::to_string(n));
  SimState s{GridSpec(static_cast<int>(n))};
  s.step = static_cast<long>(read_u64(is));
  s.time = read_f64(is);
  s.r_n = read_f64(is);
  s.r_nm1 = read_f64(is);
  s.q_n = read_f64(is);
  s.q_nm1 = read_f64(is);
  s.phi_n = read_field<Placement::cell>(is);
  s.phi_nm1 = read_field<Placement::cell>(is);
  s.u_n.x = read_field<Placement::x_edge>(is);
  s.u_n.y = read_field<Placement::y_edge>(is);
  s.p_n = read_field<Placement::cell>(is);
  s.u_nm1.x = read_field<Placement::x_edge>(is);
  s.u_nm1.y = read_field<Placement::y_edge>(is);
  const GridSpec g = s.grid();
  for (const GridSpec& other : {s.phi_nm1.grid(), s.u_n.x.grid(), s.u_n.y.grid(), s.p_n.grid(), s.u_nm1.x.grid(),
                                s.u_nm1.y.grid()})
    if (!(other == g)) throw SnapshotError("checkpoint: field blocks disagree on grid size");
  return s;
}

}  // namespace macsav

#pragma once

// Second-order BDF SAV-ZEC stepper for the Cahn-Hilliard-Navier-Stokes system
// on the MAC grid.
//
// One step:
//   1. star profiles  phi* = 2 phi^n - phi^{n-1},  u* = 2 u^n - u^{n-1},
//      mu~* = (phi*)^3 - phi* - eps^2 Delta_h phi*,  b = ((phi*)^3 - phi*) / sqrt(E1h(phi*))
//   2. superposition: phi^{n+1} = phi_0 + r phi_r + q phi_q and
//      u^^{n+1} = u^_0 + q u^_q, each piece from one constant-coefficient solve
//   3. the r- and q-equations reduce to a 2x2 linear system for (r^{n+1}, q^{n+1})
//   4. pressure correction: Delta_h dp = 3/(2 tau) div u^, u^{n+1} = u^ - (2 tau/3) grad dp
//
// A first-order (backward Euler) variant of the same pipeline is available
// for the startup step.

#include <iosfwd>
#include <string>
#include <vector>

#include "macsav/fastsolve.hpp"
#include "macsav/grid.hpp"

namespace macsav {

class Params {
 public:
  /// Throws std::invalid_argument unless every value is strictly positive
  /// (t_end may be zero) and n_cells >= 2.
  Params(double epsilon, double nu, double lambda, double tau, int n_cells, double t_end);

  double epsilon() const { return epsilon_; }
  double nu() const { return nu_; }
  double lambda() const { return lambda_; }
  double tau() const { return tau_; }
  int n_cells() const { return n_cells_; }
  double t_end() const { return t_end_; }
  GridSpec grid() const { return GridSpec(n_cells_); }

  /// Number of whole steps that fit in [0, t_end].
  long num_steps() const;

  Params with_tau(double tau) const { return {epsilon_, nu_, lambda_, tau, n_cells_, t_end_}; }
  Params with_n_cells(int n) const { return {epsilon_, nu_, lambda_, tau_, n, t_end_}; }
  Params with_t_end(double t) const { return {epsilon_, nu_, lambda_, tau_, n_cells_, t}; }

 private:
  double epsilon_;
  double nu_;
  double lambda_;
  double tau_;
  int n_cells_;
  double t_end_;
};

struct SimState {
  explicit SimState(GridSpec grid)
      : phi_n(grid), phi_nm1(grid), u_n(grid), u_nm1(grid), p_n(grid) {}

  const GridSpec& grid() const { return phi_n.grid(); }

  CellField phi_n;
  CellField phi_nm1;
  MacVector u_n;
  MacVector u_nm1;
  CellField p_n;
  double r_n = 0.0;
  double r_nm1 = 0.0;
  double q_n = 1.0;
  double q_nm1 = 1.0;
  long step = 0;
  double time = 0.0;
};

enum class TimeOrder { bdf1, bdf2 };

/// Time-difference weights: d_t X ~ (c0 X^{n+1} + c1 X^n + c2 X^{n-1}) / tau,
/// with the explicit extrapolation X* = s1 X^n + s2 X^{n-1}.
struct BdfWeights {
  double c0, c1, c2;
  double s1, s2;
  static BdfWeights of(TimeOrder order);
};

/// Transient per-step quantities.
struct StepWork {
  explicit StepWork(GridSpec grid)
      : phi_star(grid), mu_tilde_star(grid), u_star(grid), b_star(grid),
        phi_0(grid), phi_r(grid), phi_q(grid), u_hat_0(grid), u_hat_q(grid), mu_tilde_np1(grid) {}

  CellField phi_star;
  CellField mu_tilde_star;
  MacVector u_star;
  CellField b_star;
  double e1h_star = 1.0;

  CellField phi_0;
  CellField phi_r;
  CellField phi_q;
  MacVector u_hat_0;
  MacVector u_hat_q;
  CellField mu_tilde_np1;
};

/// E_1h(phi) = <phi^4/4 - phi^2/2 + 5/4, 1>_c  (always >= 1).
double compute_e1h(const CellField& phi);

/// Thrown by init_state when the initial velocity is not discretely solenoidal.
class NonSolenoidalInput : public std::invalid_argument {
 public:
  NonSolenoidalInput(const std::string& what, double max_div) : std::invalid_argument(what), max_div_(max_div) {}
  double max_div() const { return max_div_; }

 private:
  double max_div_;
};

/// Level 0 from (phi0, u0); level -1 is a copy of level 0, r = sqrt(E1h), q = 1, p = 0.
SimState init_state(CellField phi0, MacVector u0);

StepWork assemble_star(const SimState& state, const Params& params, TimeOrder order = TimeOrder::bdf2);

class SingularClosure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CoupledSolution {
  CellField phi_np1;
  MacVector u_hat;
  double r_np1;
  double q_np1;
  CellField mu_tilde_np1;
  double det;  // determinant of the scalar closure
};

/// Solves the coupled (phi, u^, r, q) system; fills the superposition fields of `work`.
CoupledSolution solve_coupled(const SimState& state, StepWork& work, const Params& params,
                              TimeOrder order = TimeOrder::bdf2, FastSolver* solver = nullptr);

struct ProjectionResult {
  MacVector u_np1;
  CellField p_np1;
  CellField dp;
};

/// Pressure correction: Delta_h dp = 3/(2 tau) div u^, u = u^ - (2 tau/3) grad dp,
/// p^{n+1} = p^n + dp.
ProjectionResult project(const MacVector& u_hat, const CellField& p_n, double tau, FastSolver* solver = nullptr);

struct StepResult {
  SimState next;
  StepWork work;
  CoupledSolution coupled;
};

/// One step of the scheme without invariant checks.
StepResult advance(const SimState& state, const Params& params, TimeOrder order = TimeOrder::bdf2,
                   FastSolver* solver = nullptr);

/// A violated scheme invariant (energy increase, mass drift, divergence, non-finite).
struct Violation {
  long step;
  std::string kind;
  double value;
  double tolerance;
};

class SchemeInvariantViolation : public std::runtime_error {
 public:
  explicit SchemeInvariantViolation(Violation v);
  const Violation& violation() const { return v_; }

 private:
  Violation v_;
};

// Per-step tolerances.
inline constexpr double kEnergyTolerance = 1e-10;   // relative, per step
inline constexpr double kMassTolerance = 1e-12;     // absolute
inline constexpr double kDivergenceTolerance = 1e-10;

/// Checks the invariants of a step from `before` to `after`; `mass0` is the
/// reference mass. Energy decay is only checked when `check_energy` is set.
std::vector<Violation> check_step(const SimState& before, const SimState& after, const Params& params, double mass0,
                                  bool check_energy = true);

/// advance + invariant checks; throws SchemeInvariantViolation.
SimState step(const SimState& state, const Params& params);

enum class Startup { copy_level, first_order_step };

/// Produces the state the BDF2 loop starts from. copy_level returns `initial`
/// unchanged; first_order_step advances one backward-Euler step so that the
/// first BDF2 step sees a genuine level n-1.
SimState startup(const SimState& initial, const Params& params, Startup mode, FastSolver* solver = nullptr);

// Checkpoint: u64 N, u64 step, f64 time, f64 r_n, r_nm1, q_n, q_nm1, then MACF
// blocks phi^n, phi^{n-1}, u^n.x, u^n.y, p^n, u^{n-1}.x, u^{n-1}.y.
void write_checkpoint(std::ostream& os, const SimState& state);
SimState read_checkpoint(std::istream& is);

}  // namespace macsav

#pragma once

// Run orchestration, refinement studies and the invariant battery behind the CLI.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "macsav/config.hpp"
#include "macsav/diagnostics.hpp"
#include "macsav/ops.hpp"
#include "macsav/scheme.hpp"

namespace macsav {

/// 0.1 cos(pi x) cos(pi y) + 0.05 cos(2 pi x) cos(3 pi y), times `amplitude`.
CellField default_initial_phase(const GridSpec& grid, double amplitude = 1.0);

/// Level-0 state for the configured init_case (from_snapshot restores a checkpoint).
SimState initial_state(const RunConfig& config);

struct RunResult {
  std::vector<DiagRecord> records;
  std::vector<Violation> violations;
  SimState final_state;
  int exit_code() const { return violations.empty() ? 0 : 1; }
};

struct RunOptions {
  bool write_files = true;
  // Called after every step with the pre- and post-step states and the step internals.
  std::function<void(const SimState&, const StepResult&)> on_step;
};

/// Steps from the initial state to t_end, checking the scheme invariants each
/// step. With write_files set, writes diag.csv, violations.jsonl and
/// snap_<step>.macf checkpoints into output_dir. A non-finite state stops the run.
RunResult run(const RunConfig& config, const RunOptions& options = {});

enum class RateVariable { phi_h1, u_l2 };
std::string to_string(RateVariable v);

struct RateLevel {
  double resolution;  // tau or h of the coarser run of the pair
  double error;
};

struct RateReport {
  RateVariable variable;
  std::vector<RateLevel> levels;
  std::vector<double> observed_orders;  // log2(e_k / e_{k+1}), one fewer than levels
};

/// Thrown when a constituent run of a refinement study violates an invariant.
class ConvergenceFailure : public std::runtime_error {
 public:
  ConvergenceFailure(const std::string& what, Violation v) : std::runtime_error(what), v_(std::move(v)) {}
  const Violation& violation() const { return v_; }

 private:
  Violation v_;
};

/// Worker count from MAC_SAV_ZEC_THREADS (unset or 0 means hardware concurrency).
int worker_threads();

/// Runs tau, tau/2, ..., tau/2^levels to t_end on one grid. If t_end/tau is not
/// an integer, tau is first shrunk to t_end / ceil(t_end / tau) so every run
/// ends exactly at t_end. Errors are differences of successive runs, in
/// eps |grad_h .|_2 (phase) and |.|_2 (velocity).
std::vector<RateReport> convergence_time(const RunConfig& base, int levels);

/// Runs N, 2N, ..., 2^levels N at fixed tau. Finer solutions are restricted to
/// the coarser grid of each pair by averaging the 4 fine cells (cells) or the
/// 2 fine half-faces (edges).
std::vector<RateReport> convergence_space(const RunConfig& base, int levels);

/// rates_<variable>.csv with columns level,resolution,error,order.
void write_rate_csv(std::ostream& os, const RateReport& report);
void write_rate_files(const std::string& dir, const std::vector<RateReport>& reports);

CellField restrict_cell(const CellField& fine);
MacVector restrict_mac(const MacVector& fine);

/// The discrete operators exercised by the invariant battery; tests swap in
/// broken doubles to make sure the battery notices.
struct CheckOperators {
  std::function<MacVector(const CellField&)> grad = [](const CellField& f) { return grad_cell(f); };
  std::function<CellField(const MacVector&)> div = [](const MacVector& v) { return div_mac(v); };
  std::function<CellField(const CellField&)> lap_cell = [](const CellField& f) { return laplacian_5pt(f); };
  std::function<MacVector(const MacVector&)> lap_mac = [](const MacVector& v) { return laplacian_5pt(v); };
  std::function<MacVector(const CellField&, const CellField&)> mu_grad_phi = [](const CellField& mu,
                                                                                 const CellField& phi) {
    return macsav::mu_grad_phi(mu, phi);
  };
  std::function<CellField(const CellField&, const MacVector&)> div_phi_u = [](const CellField& phi,
                                                                               const MacVector& u) {
    return macsav::div_phi_u(phi, u);
  };
};

struct CheckRow {
  std::string name;
  int n;
  double value;
  double tolerance;
  bool pass;
};

struct CheckReport {
  std::vector<CheckRow> rows;
  bool pass() const;
  void print(std::ostream& os) const;
};

CheckReport check(const std::vector<int>& sizes, std::uint64_t seed, const CheckOperators& ops = {});

}  // namespace macsav

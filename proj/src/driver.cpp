#include "macsav/driver.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "macsav/fastsolve.hpp"
#include "macsav/snapshot.hpp"

namespace macsav {

namespace fs = std::filesystem;

CellField default_initial_phase(const GridSpec& grid, double amplitude) {
  constexpr double pi = std::numbers::pi;
  return sample<Placement::cell>(grid, [&](double x, double y) {
    return amplitude * (0.1 * std::cos(pi * x) * std::cos(pi * y) + 0.05 * std::cos(2 * pi * x) * std::cos(3 * pi * y));
  });
}

SimState initial_state(const RunConfig& config) {
  const GridSpec grid(config.n_cells);
  switch (config.init_case) {
    case InitCase::default_smooth:
      return init_state(default_initial_phase(grid, config.amplitude), MacVector(grid));
    case InitCase::equilibrium:
      return init_state(sample<Placement::cell>(grid, [](double, double) { return 1.0; }), MacVector(grid));
    case InitCase::random: {
      std::mt19937_64 rng(config.seed);
      return init_state(random_cell_field(grid, rng, 0.05 * config.amplitude), MacVector(grid));
    }
    case InitCase::from_snapshot: {
      std::ifstream in(config.snapshot_path, std::ios::binary);
      if (!in) throw SnapshotError("cannot open snapshot " + config.snapshot_path);
      SimState s = read_checkpoint(in);
      if (s.grid().n() != config.n_cells)
        throw SnapshotError("snapshot " + config.snapshot_path + " has N=" + std::to_string(s.grid().n()) +
                            ", config has n_cells=" + std::to_string(config.n_cells));
      return s;
    }
  }
  throw std::logic_error("initial_state: bad init_case");
}

namespace {

std::string format_number(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

}  // namespace

RunResult run(const RunConfig& config, const RunOptions& options) {
  const Params params = config.params();
  SimState state = initial_state(config);
  FastSolver solver(params.grid());
  const long total = params.num_steps();
  const double mass0 = cell_average(state.phi_n);

  std::ofstream diag, viol;
  const fs::path dir(config.output_dir);
  if (options.write_files) {
    fs::create_directories(dir);
    diag.open(dir / "diag.csv");
    viol.open(dir / "violations.jsonl");
    if (!diag || !viol) throw std::runtime_error("run: cannot write into " + dir.string());
    diag << csv_header() << '\n';
  }

  RunResult result{{}, {}, state};
  auto record = [&](const SimState& s) {
    result.records.push_back(make_record(s, params));
    if (options.write_files) diag << csv_row(result.records.back()) << '\n';
  };
  record(state);

  while (state.step < total) {
    const bool first_order = state.step == 0 && config.startup == Startup::first_order_step;
    StepResult res = advance(state, params, first_order ? TimeOrder::bdf1 : TimeOrder::bdf2, &solver);
    if (options.on_step) options.on_step(state, res);
    const auto violations = check_step(state, res.next, params, mass0);
    state = std::move(res.next);

    bool stop = false;
    for (const Violation& v : violations) {
      result.violations.push_back(v);
      if (options.write_files) {
        nlohmann::json j = {{"step", v.step}, {"kind", v.kind}, {"value", v.value}, {"tolerance", v.tolerance}};
        viol << j.dump() << '\n';
      }
      stop = stop || v.kind == "non_finite";
    }
    if (stop) break;

    if (state.step % config.diag_every == 0 || state.step == total) record(state);
    if (options.write_files && config.snapshot_every > 0 && state.step % config.snapshot_every == 0) {
      std::ofstream snap(dir / ("snap_" + std::to_string(state.step) + ".macf"), std::ios::binary);
      write_checkpoint(snap, state);
    }
  }
  result.final_state = std::move(state);
  return result;
}

std::string to_string(RateVariable v) { return v == RateVariable::phi_h1 ? "phi_h1" : "u_l2"; }

int worker_threads() {
  int n = 0;
  if (const char* env = std::getenv("MAC_SAV_ZEC_THREADS")) {
    const std::string_view s(env);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), n);
    if (res.ec != std::errc() || n < 0) n = 0;
  }
  if (n == 0) n = static_cast<int>(std::thread::hardware_concurrency());
  return std::max(n, 1);
}

namespace {

// Runs every job, at most worker_threads() at a time; rethrows the first failure.
void run_parallel(std::vector<std::function<void()>>& jobs) {
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      try {
        jobs[k]();
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(worker_threads()), jobs.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < count; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

SimState simulate(const RunConfig& config) {
  RunOptions opts;
  opts.write_files = false;
  RunResult res = run(config, opts);
  if (!res.violations.empty()) {
    const Violation& v = res.violations.front();
    std::ostringstream os;
    os << "refinement run (tau=" << config.tau << ", N=" << config.n_cells << ") violated " << v.kind << " at step "
       << v.step << ": " << v.value << " > " << v.tolerance;
    throw ConvergenceFailure(os.str(), v);
  }
  return std::move(res.final_state);
}

std::vector<RateReport> make_reports(const std::vector<double>& resolution, const std::vector<double>& e_phi,
                                     const std::vector<double>& e_u) {
  std::vector<RateReport> out;
  for (const auto& [var, errs] : {std::pair{RateVariable::phi_h1, &e_phi}, std::pair{RateVariable::u_l2, &e_u}}) {
    RateReport rep{var, {}, {}};
    for (std::size_t k = 0; k < errs->size(); ++k) rep.levels.push_back({resolution[k], (*errs)[k]});
    for (std::size_t k = 1; k < errs->size(); ++k) rep.observed_orders.push_back(std::log2((*errs)[k - 1] / (*errs)[k]));
    out.push_back(std::move(rep));
  }
  return out;
}

void require_levels(int levels, const char* who) {
  if (levels < 3) throw std::invalid_argument(std::string(who) + ": levels must be >= 3");
}

}  // namespace

std::vector<RateReport> convergence_time(const RunConfig& base, int levels) {
  require_levels(levels, "convergence_time");
  if (!(base.t_end > 0.0)) throw std::invalid_argument("convergence_time: t_end must be positive");
  const double steps = std::ceil(base.t_end / base.tau * (1.0 - 1e-12));
  const double tau0 = base.t_end / steps;

  std::vector<SimState> finals(static_cast<std::size_t>(levels) + 1, SimState(GridSpec(base.n_cells)));
  std::vector<std::function<void()>> jobs;
  std::vector<double> taus;
  for (int k = 0; k <= levels; ++k) {
    RunConfig c = base;
    c.tau = tau0 / std::ldexp(1.0, k);
    taus.push_back(c.tau);
    jobs.emplace_back([c, k, &finals] { finals[k] = simulate(c); });
  }
  run_parallel(jobs);

  std::vector<double> e_phi, e_u;
  for (int k = 0; k < levels; ++k) {
    const CellField dphi = finals[k].phi_n - finals[k + 1].phi_n;
    const MacVector du = finals[k].u_n - finals[k + 1].u_n;
    e_phi.push_back(base.epsilon * std::sqrt(grad_norm_sq(dphi)));
    e_u.push_back(std::sqrt(inner_mac(du, du)));
  }
  taus.pop_back();
  return make_reports(taus, e_phi, e_u);
}

CellField restrict_cell(const CellField& fine) {
  const int nf = fine.grid().n();
  if (nf % 2 != 0) throw std::invalid_argument("restrict_cell: fine grid size must be even");
  const int n = nf / 2;
  CellField out{GridSpec(n)};
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      out.ref(i, j) =
          0.25 * (fine(2 * i, 2 * j) + fine(2 * i + 1, 2 * j) + fine(2 * i, 2 * j + 1) + fine(2 * i + 1, 2 * j + 1));
  out.fill_ghosts();
  return out;
}

MacVector restrict_mac(const MacVector& fine) {
  const int nf = fine.grid().n();
  if (nf % 2 != 0) throw std::invalid_argument("restrict_mac: fine grid size must be even");
  const int n = nf / 2;
  MacVector out{GridSpec(n)};
  for (int j = 0; j < n; ++j)
    for (int i = 1; i < n; ++i) out.x.ref(i, j) = 0.5 * (fine.x(2 * i, 2 * j) + fine.x(2 * i, 2 * j + 1));
  for (int j = 1; j < n; ++j)
    for (int i = 0; i < n; ++i) out.y.ref(i, j) = 0.5 * (fine.y(2 * i, 2 * j) + fine.y(2 * i + 1, 2 * j));
  out.fill_ghosts();
  return out;
}

std::vector<RateReport> convergence_space(const RunConfig& base, int levels) {
  require_levels(levels, "convergence_space");
  if (base.init_case == InitCase::random || base.init_case == InitCase::from_snapshot)
    throw std::invalid_argument("convergence_space: initial data must be defined analytically");

  std::vector<SimState> finals;
  std::vector<double> hs;
  for (int k = 0; k <= levels; ++k) finals.emplace_back(GridSpec(base.n_cells << k));
  std::vector<std::function<void()>> jobs;
  for (int k = 0; k <= levels; ++k) {
    RunConfig c = base;
    c.n_cells = base.n_cells << k;
    hs.push_back(1.0 / c.n_cells);
    jobs.emplace_back([c, k, &finals] { finals[k] = simulate(c); });
  }
  run_parallel(jobs);

  std::vector<double> e_phi, e_u;
  for (int k = 0; k < levels; ++k) {
    const CellField dphi = finals[k].phi_n - restrict_cell(finals[k + 1].phi_n);
    const MacVector du = finals[k].u_n - restrict_mac(finals[k + 1].u_n);
    e_phi.push_back(base.epsilon * std::sqrt(grad_norm_sq(dphi)));
    e_u.push_back(std::sqrt(inner_mac(du, du)));
  }
  hs.pop_back();
  return make_reports(hs, e_phi, e_u);
}

void write_rate_csv(std::ostream& os, const RateReport& report) {
  os << "level,resolution,error,order\n";
  for (std::size_t k = 0; k < report.levels.size(); ++k) {
    os << k << ',' << format_number(report.levels[k].resolution) << ',' << format_number(report.levels[k].error) << ',';
    if (k > 0) os << format_number(report.observed_orders[k - 1]);
    os << '\n';
  }
}

void write_rate_files(const std::string& dir, const std::vector<RateReport>& reports) {
  fs::create_directories(dir);
  for (const RateReport& r : reports) {
    std::ofstream out(fs::path(dir) / ("rates_" + to_string(r.variable) + ".csv"));
    if (!out) throw std::runtime_error("cannot write rate table into " + dir);
    write_rate_csv(out, r);
  }
}

bool CheckReport::pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const CheckRow& r) { return r.pass; });
}

void CheckReport::print(std::ostream& os) const {
  char line[160];
  std::snprintf(line, sizeof line, "%-34s %5s %12s %12s  %s\n", "check", "N", "value", "tolerance", "result");
  os << line;
  for (const CheckRow& r : rows) {
    std::snprintf(line, sizeof line, "%-34s %5d %12.3e %12.3e  %s\n", r.name.c_str(), r.n, r.value, r.tolerance,
                  r.pass ? "PASS" : "FAIL");
    os << line;
  }
  os << (pass() ? "all checks passed" : "SOME CHECKS FAILED") << '\n';
}

namespace {

double safe_ratio(double num, double den) { return den > 0.0 ? num / den : (num == 0.0 ? 0.0 : INFINITY); }

}  // namespace

CheckReport check(const std::vector<int>& sizes, std::uint64_t seed, const CheckOperators& ops) {
  constexpr int kTrials = 20;
  constexpr int kSolves = 10;
  constexpr double kSbpTol = 1e-12;
  constexpr double kSolverTol = 1e-10;
  constexpr double kProjTol = 1e-12;
  constexpr double kFixedTol = 1e-12;

  CheckReport report;
  auto add = [&](const std::string& name, int n, double value, double tol) {
    report.rows.push_back({name, n, value, tol, std::isfinite(value) && value <= tol});
  };

  for (const int n : sizes) {
    const GridSpec grid(n);
    std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(n)));
    FastSolver solver(grid);

    double d_parts = 0, d_divfree = 0, d_lap = 0, d_vlap = 0, d_adv = 0;
    for (int t = 0; t < kTrials; ++t) {
      const CellField f = random_cell_field(grid, rng);
      const CellField g = random_cell_field(grid, rng);
      const MacVector u = random_mac_vector(grid, rng);
      const MacVector w = random_solenoidal(grid, rng);

      const MacVector grad_f = ops.grad(f);
      const double grad_f_norm = std::sqrt(inner_mac(grad_f, grad_f));
      const CellField div_u = ops.div(u);
      d_parts = std::max(d_parts, safe_ratio(std::abs(inner_mac(u, grad_f) + inner_cell(div_u, f)),
                                             std::sqrt(inner_mac(u, u)) * grad_f_norm));
      d_divfree = std::max(d_divfree, safe_ratio(std::abs(inner_mac(w, grad_f)), std::sqrt(inner_mac(w, w)) * grad_f_norm));
      const double gf2 = inner_mac(grad_f, grad_f);
      d_lap = std::max(d_lap, safe_ratio(std::abs(inner_cell(f, ops.lap_cell(f)) + gf2), gf2));
      const double gu2 = grad_norm_sq(u);
      d_vlap = std::max(d_vlap, safe_ratio(std::abs(inner_mac(u, ops.lap_mac(u)) + gu2), gu2));
      const MacVector f_grad_g = ops.mu_grad_phi(f, g);
      d_adv = std::max(d_adv, safe_ratio(std::abs(inner_cell(g, ops.div_phi_u(f, u)) + inner_mac(u, f_grad_g)),
                                         std::sqrt(inner_mac(u, u)) * std::sqrt(inner_mac(f_grad_g, f_grad_g))));
    }
    add("sbp <u,grad f> = -<div u,f>", n, d_parts, kSbpTol);
    add("sbp <w,grad f> = 0, div w = 0", n, d_divfree, kSbpTol);
    add("sbp <f,lap f> = -|grad f|^2", n, d_lap, kSbpTol);
    add("sbp <v,lap v> = -|grad v|^2", n, d_vlap, kSbpTol);
    add("sbp <g,div(f u)> = -<u,f grad g>", n, d_adv, kSbpTol);

    const double tau = 1e-2, eps = 0.1, nu = 1.0;
    double r_phase = 0, r_vel = 0, r_pois = 0;
    for (int t = 0; t < kSolves; ++t) {
      const CellField rhs = random_cell_field(grid, rng);
      const CellField x = solver.solve_phase({tau, eps, grid}, rhs);
      CellField res = (1.5 / tau) * x;
      res.axpy(eps * eps, ops.lap_cell(ops.lap_cell(x)));
      res -= rhs;
      r_phase = std::max(r_phase, norm_inf(res) / norm_inf(rhs));

      const MacVector vrhs = random_mac_vector(grid, rng);
      const MacVector v = solver.solve_velocity({tau, nu, grid}, vrhs);
      MacVector vres = (1.5 / tau) * v;
      vres.axpy(-nu, ops.lap_mac(v));
      vres -= vrhs;
      r_vel = std::max(r_vel, norm_inf(vres) / norm_inf(vrhs));

      CellField prhs = random_cell_field(grid, rng);
      const double mean = cell_average(prhs);
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) prhs.ref(i, j) -= mean;
      prhs.fill_ghosts();
      CellField pres = ops.lap_cell(solver.solve_poisson_neumann(prhs));
      pres -= prhs;
      r_pois = std::max(r_pois, norm_inf(pres) / norm_inf(prhs));
    }
    add("solver residual phase", n, r_phase, kSolverTol);
    add("solver residual velocity", n, r_vel, kSolverTol);
    add("solver residual poisson", n, r_pois, kSolverTol);

    auto projector = [&](const MacVector& u_hat) {
      const CellField dp = solver.solve_poisson_neumann((1.5 / tau) * ops.div(u_hat));
      MacVector u = u_hat;
      u.axpy(-2.0 * tau / 3.0, ops.grad(dp));
      return u;
    };
    double d_l2 = 0, d_h1 = 0, d_div = 0, d_idem = 0;
    for (int t = 0; t < kSolves; ++t) {
      const MacVector u_hat = random_mac_vector(grid, rng);
      const MacVector u = projector(u_hat);
      const ProjectionDefects pd = projection_defects(u_hat, u);
      d_l2 = std::max(d_l2, pd.l2);
      d_h1 = std::max(d_h1, pd.h1);
      d_div = std::max(d_div, norm_inf(ops.div(u)) / norm_inf(ops.div(u_hat)));
      const MacVector again = projector(u) - u;
      d_idem = std::max(d_idem, std::sqrt(inner_mac(again, again) / inner_mac(u, u)));
    }
    add("projection pythagoras l2", n, d_l2, kProjTol);
    add("projection pythagoras h1", n, d_h1, kProjTol);
    add("projection div / div u^", n, d_div, kSolverTol);
    add("projection fixed point", n, d_idem, kProjTol);

    for (const double sign : {1.0, -1.0}) {
      const Params params(eps, nu, 1.0, tau, n, 10 * tau);
      SimState s = init_state(sample<Placement::cell>(grid, [sign](double, double) { return sign; }), MacVector(grid));
      double drift = 0.0;
      for (int k = 0; k < 10; ++k) {
        SimState next = advance(s, params, TimeOrder::bdf2, &solver).next;
        drift = std::max({drift, norm_inf(next.phi_n - s.phi_n), norm_inf(next.u_n), norm_inf(next.p_n - s.p_n)});
        s = std::move(next);
      }
      add(sign > 0 ? "fixed point phi = +1" : "fixed point phi = -1", n, drift, kFixedTol);
    }
  }
  return report;
}

}  // namespace macsav

#include "CLI11.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mvhedge/analytic.hpp"
#include "mvhedge/config.hpp"
#include "mvhedge/evalsim.hpp"
#include "mvhedge/hedgedp.hpp"
#include "mvhedge/market.hpp"
#include "mvhedge/util.hpp"

namespace {

using namespace mvhedge;

std::string fmt(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);  // shortest round trip
  return std::string(buf, p);
}

RegressSpec parse_mesh(const std::string& s) {
  const auto sep = s.find('x');
  require(sep != std::string::npos && sep > 0 && sep + 1 < s.size(),
          "mesh must look like NFxND, got '" + s + "'");
  RegressSpec mesh;
  const char* b = s.data();
  auto a = std::from_chars(b, b + sep, mesh.n_f);
  auto c = std::from_chars(b + sep + 1, b + s.size(), mesh.n_d);
  require(a.ec == std::errc{} && a.ptr == b + sep && c.ec == std::errc{} &&
              c.ptr == b + s.size() && mesh.n_f >= 1 && mesh.n_d >= 1,
          "mesh must look like NFxND, got '" + s + "'");
  return mesh;
}

std::string mesh_name(const RegressSpec& m) {
  return std::to_string(m.n_f) + "x" + std::to_string(m.n_d);
}

// Everything an experiment needs, after config + flag overrides.
struct Workbench {
  ExperimentConfig cfg;
  TradingSchedule sched;
  HedgeConstraints constraints;  // x0 resolved

  explicit Workbench(const ExperimentConfig& c) : cfg(c), sched(c.schedule()) {
    cfg.market.validate();
    constraints = cfg.constraints;
    constraints.x0 = cfg.resolve_x0();
    constraints.validate();
  }
};

SolveResult solve_from_config(const Workbench& wb) {
  require(wb.cfg.solver.paths > 0, "[solver] paths must be positive");
  ScenarioSet s = simulate(wb.cfg.market, wb.sched, wb.cfg.solver.paths, wb.cfg.solver.seed);
  SolveResult r = solve_hedge(wb.cfg.solver.algo, s, wb.constraints,
                              {wb.cfg.solver.n_f, wb.cfg.solver.n_d}, wb.cfg.solver.optimize_x);
  r.policy.market = wb.cfg.market;
  return r;
}

int cmd_analytic(const ExperimentConfig& cfg) {
  cfg.market.validate();
  const MarketParams& p = cfg.market;
  std::cout << "Vopt,Vcur,V0,nu0_opt,nu0_delta\n"
            << fmt(optimal_residual_variance(p)) << ',' << fmt(classical_residual_variance(p))
            << ',' << fmt(value({0.0, p.d0, p.f0}, p)) << ','
            << fmt(optimal_hedge({0.0, p.d0, p.f0}, p)) << ','
            << fmt(tangent_delta({0.0, p.d0, p.f0}, p)) << '\n';
  return 0;
}

int cmd_optimize(const ExperimentConfig& cfg, const std::string& out_path) {
  Workbench wb(cfg);
  SolveResult r = solve_from_config(wb);
  if (!out_path.empty()) r.policy.save_file(out_path);
  const HedgeReport& rep = r.report;
  std::cout << "algo,paths,dates,mesh,nu0,x,variance,seconds\n"
            << algorithm_name(rep.algo) << ',' << rep.n_paths << ',' << rep.n_dates << ','
            << mesh_name(rep.mesh) << ',' << fmt(rep.nu0) << ',' << fmt(rep.x) << ','
            << fmt(rep.variance) << ',' << fmt(rep.seconds) << '\n';
  return 0;
}

int cmd_evaluate(const ExperimentConfig& cfg, const std::string& policy_path,
                 const std::string& strategy_flag, const std::string& dump_path) {
  Workbench wb(cfg);
  require(!(cfg.eval.paths == 0), "[eval] paths must be positive");
  require(cfg.eval.runs >= 1, "[eval] runs must be >= 1");

  std::vector<std::string> names;
  if (!strategy_flag.empty()) {
    names = {strategy_flag};
  } else if (!policy_path.empty()) {
    names = {"numerical"};
  } else if (!cfg.eval.strategies.empty()) {
    names = cfg.eval.strategies;
  } else {
    names = {"numerical", "analytic", "delta", "nohedge"};
  }

  bool want_numerical = false;
  for (const std::string& n : names) want_numerical |= (n == "numerical");

  PolicyTable policy;
  if (want_numerical) {
    if (!policy_path.empty()) {
      policy = PolicyTable::load_file(policy_path);
      require(policy.schedule.dates == wb.sched.dates,
              "policy was optimized on a different trading schedule");
    } else {
      policy = solve_from_config(wb).policy;
    }
  }

  require(dump_path.empty() || (names.size() == 1 && cfg.eval.runs == 1),
          "--dump-trajectories needs a single strategy and runs = 1");

  std::cout << "strategy,paths,seed,variance,mean_residual\n";
  for (int run = 0; run < cfg.eval.runs; ++run) {
    const std::uint64_t seed = cfg.eval.seed + static_cast<std::uint64_t>(run);
    ScenarioSet fresh = simulate(wb.cfg.market, wb.sched, cfg.eval.paths, seed);
    for (const std::string& name : names) {
      Strategy strat = Strategy::no_hedge();
      double x = wb.constraints.x0;
      if (name == "numerical") {
        strat = Strategy::numerical(policy);
        x = policy.x;  // the capital the policy was optimized for
      } else if (name == "analytic") {
        strat = Strategy::analytic_optimal();
      } else if (name == "delta") {
        strat = Strategy::tangent_delta();
      } else if (name == "nohedge") {
        strat = Strategy::no_hedge();
      } else {
        fail("unknown strategy '" + name + "' (want numerical|analytic|delta|nohedge)");
      }

      EvalResult res;
      if (!dump_path.empty()) {
        std::ofstream os(dump_path);
        require(static_cast<bool>(os), "cannot open " + dump_path);
        res = evaluate(strat, fresh, wb.cfg.market, wb.constraints, x, nullptr, &os);
      } else {
        res = evaluate(strat, fresh, wb.cfg.market, wb.constraints, x);
      }
      std::cout << name << ',' << res.n_paths << ',' << seed << ',' << fmt(res.variance) << ','
                << fmt(res.mean_residual) << '\n';
    }
  }
  return 0;
}

int cmd_convergence(const ExperimentConfig& cfg) {
  Workbench wb(cfg);
  const auto& cv = cfg.convergence;
  require(cv.runs >= 2, "[convergence] runs must be >= 2");

  std::cout << "sweep,algo,mesh,paths,runs,mean_variance,sigma_over_sqrt_n\n";
  const Algorithm algos[] = {Algorithm::valuefn, Algorithm::cashflow};

  for (int n : cv.mesh) {
    require(n >= 1, "[convergence] mesh entries must be >= 1");
    const RegressSpec mesh{n, n};
    const std::size_t paths = cv.paths_per_cell * static_cast<std::size_t>(n) *
                              static_cast<std::size_t>(n);
    for (Algorithm algo : algos) {
      MultiRunResult r = multi_run(wb.cfg.market, wb.sched, wb.constraints, algo, mesh, paths,
                                   cfg.solver.seed, cfg.solver.optimize_x, cv.runs);
      std::cout << "mesh," << algorithm_name(algo) << ',' << mesh_name(mesh) << ',' << paths
                << ',' << cv.runs << ',' << fmt(r.mean_variance) << ','
                << fmt(r.sigma_over_sqrt_n) << '\n';
    }
  }

  const RegressSpec fixed{cfg.solver.n_f, cfg.solver.n_d};
  for (std::size_t paths : cv.paths) {
    for (Algorithm algo : algos) {
      MultiRunResult r = multi_run(wb.cfg.market, wb.sched, wb.constraints, algo, fixed, paths,
                                   cfg.solver.seed, cfg.solver.optimize_x, cv.runs);
      std::cout << "paths," << algorithm_name(algo) << ',' << mesh_name(fixed) << ',' << paths
                << ',' << cv.runs << ',' << fmt(r.mean_variance) << ','
                << fmt(r.sigma_over_sqrt_n) << '\n';
    }
  }
  return 0;
}

int cmd_oracle_check() {
  const int failures = tree_oracle_suite(25, &std::cout);
  if (failures != 0) {
    std::cerr << "oracle-check: " << failures << " case(s) disagree with enumeration\n";
    return 1;
  }
  std::cout << "oracle-check: all cases match exhaustive enumeration\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-date mean-variance hedging of a power delivery claim"};
  app.require_subcommand(0, 1);

  std::string config_path;
  app.add_option("--config", config_path, "experiment config file")
      ->check(CLI::ExistingFile);
  int threads = 0;
  app.add_option("--threads", threads, "worker thread cap (0 = hardware)")
      ->envname("MVHEDGE_THREADS");
  std::string emit_path;
  app.add_option("--emit-config", emit_path,
                 "write the effective config to a file ('-' for stdout) and exit");

  CLI::App* c_analytic =
      app.add_subcommand("analytic", "closed-form variances, value and initial hedges");

  CLI::App* c_opt = app.add_subcommand("optimize", "run one backward optimization");
  std::string opt_algo, opt_mesh, opt_out;
  std::optional<std::size_t> opt_paths;
  std::optional<int> opt_dates;
  std::optional<std::uint64_t> opt_seed;
  std::optional<double> opt_depth, opt_xi, opt_lambda;
  bool opt_optimize_x = false;
  c_opt->add_option("--algo", opt_algo, "cashflow|valuefn|localrisk");
  c_opt->add_option("--paths", opt_paths, "optimization trajectories");
  c_opt->add_option("--dates", opt_dates, "equally spaced trading dates");
  c_opt->add_option("--mesh", opt_mesh, "regression mesh, NFxND");
  c_opt->add_option("--seed", opt_seed, "scenario seed");
  c_opt->add_option("--depth", opt_depth, "order depth per date, MW (sets both sides)");
  c_opt->add_option("--xi", opt_xi, "position lattice step, MW");
  c_opt->add_option("--lambda", opt_lambda, "proportional cost rate");
  c_opt->add_flag("--optimize-x", opt_optimize_x, "also optimize the initial capital");
  c_opt->add_option("--out", opt_out, "write the policy table here");

  CLI::App* c_eval = app.add_subcommand("evaluate", "replay strategies on fresh scenarios");
  std::string ev_policy, ev_strategy, ev_dump;
  std::optional<std::size_t> ev_paths;
  std::optional<std::uint64_t> ev_seed;
  c_eval->add_option("--policy", ev_policy, "stored policy table")->check(CLI::ExistingFile);
  c_eval->add_option("--strategy", ev_strategy, "numerical|analytic|delta|nohedge");
  c_eval->add_option("--paths", ev_paths, "evaluation trajectories");
  c_eval->add_option("--seed", ev_seed, "evaluation seed");
  c_eval->add_option("--dump-trajectories", ev_dump, "write per-path positions CSV here");

  CLI::App* c_conv = app.add_subcommand(
      "convergence", "mesh and path-count sweeps for both backward algorithms");

  CLI::App* c_oracle = app.add_subcommand(
      "oracle-check", "compare the dynamic program against exhaustive tree enumeration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // usage problems are config errors
  }

  try {
    set_max_threads(threads);

    // The oracle suite is self-contained; everything else needs a config.
    const bool needs_config =
        (!app.get_subcommands().empty() && !c_oracle->parsed()) || !emit_path.empty();
    ExperimentConfig cfg;
    if (needs_config) {
      require(!config_path.empty(), "--config is required");
      cfg = ExperimentConfig::parse_file(config_path);
    }

    // Flag overrides.
    if (c_opt->parsed()) {
      if (!opt_algo.empty()) cfg.solver.algo = algorithm_from_name(opt_algo);
      if (opt_paths) cfg.solver.paths = *opt_paths;
      if (opt_dates) {
        cfg.n_dates = *opt_dates;
        cfg.explicit_dates.clear();
        require(cfg.n_dates >= 2, "--dates needs at least two trading dates");
      }
      if (!opt_mesh.empty()) {
        const RegressSpec m = parse_mesh(opt_mesh);
        cfg.solver.n_f = m.n_f;
        cfg.solver.n_d = m.n_d;
      }
      if (opt_seed) cfg.solver.seed = *opt_seed;
      if (opt_depth) cfg.constraints.m_bar = cfg.constraints.l_bar = *opt_depth;
      if (opt_xi) cfg.constraints.xi = *opt_xi;
      if (opt_lambda) cfg.constraints.lambda = *opt_lambda;
      if (opt_optimize_x) cfg.solver.optimize_x = true;
    }
    if (c_eval->parsed()) {
      if (ev_paths) cfg.eval.paths = *ev_paths;
      if (ev_seed) cfg.eval.seed = *ev_seed;
      if (!ev_strategy.empty() && !ev_policy.empty())
        require(ev_strategy == "numerical", "--policy only combines with --strategy numerical");
    }

    if (!emit_path.empty()) {
      if (emit_path == "-") {
        cfg.emit(std::cout);
      } else {
        std::ofstream os(emit_path);
        require(static_cast<bool>(os), "cannot open " + emit_path);
        cfg.emit(os);
      }
      return 0;
    }
    require(!app.get_subcommands().empty(), "give a subcommand or --emit-config");

    if (c_analytic->parsed()) return cmd_analytic(cfg);
    if (c_opt->parsed()) return cmd_optimize(cfg, opt_out);
    if (c_eval->parsed()) return cmd_evaluate(cfg, ev_policy, ev_strategy, ev_dump);
    if (c_conv->parsed()) return cmd_convergence(cfg);
    if (c_oracle->parsed()) return cmd_oracle_check();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "mvhedge: " << e.what() << '\n';
    return 2;
  }
}

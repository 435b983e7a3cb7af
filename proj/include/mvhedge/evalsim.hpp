#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "mvhedge/analytic.hpp"
#include "mvhedge/hedgedp.hpp"

namespace mvhedge {

enum class StrategyKind { numerical, analytic_optimal, tangent_delta, no_hedge, fixed_position };
const char* strategy_name(StrategyKind k);

struct Strategy {
  StrategyKind kind = StrategyKind::no_hedge;
  const PolicyTable* policy = nullptr;  // numerical
  double fixed = 0;                     // fixed_position target, MW

  static Strategy numerical(const PolicyTable& p) { return {StrategyKind::numerical, &p, 0}; }
  static Strategy analytic_optimal() { return {StrategyKind::analytic_optimal, nullptr, 0}; }
  static Strategy tangent_delta() { return {StrategyKind::tangent_delta, nullptr, 0}; }
  static Strategy no_hedge() { return {StrategyKind::no_hedge, nullptr, 0}; }
  static Strategy fixed_position(double mw) { return {StrategyKind::fixed_position, nullptr, mw}; }
};

struct EvalResult {
  StrategyKind kind = StrategyKind::no_hedge;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  double variance = 0;       // mean squared residual
  double mean_residual = 0;
};

// Rounds the desired position to the lattice (half away from zero), then
// clamps the move against the per-date order bounds and the date's admissible
// range. `previous` must be on the lattice.
double clip_to_constraints(double desired, double previous, const HedgeConstraints& constraints,
                           const PositionGrid& grid, int date);

// Replays a strategy path-by-path on the scenario set. Residual per path:
// H - x - sum(nu_i * dS_i) + lambda * sum(|dnu| * S_i). Numerical strategies
// re-run the stored arbitration from the policy's coefficient surfaces (the
// same objective the optimizer used); analytic strategies are clipped to the
// constraints. Optionally collects residuals and dumps trajectories as CSV
// (`path,date_index,t,F,D,position`; the final row repeats the held position).
EvalResult evaluate(const Strategy& strategy, const ScenarioSet& scenarios,
                    const MarketParams& params, const HedgeConstraints& constraints, double x,
                    std::vector<double>* residuals = nullptr,
                    std::ostream* trajectories = nullptr);

// n_runs independent optimizations (fresh scenario seeds derived from
// base_seed), reporting the run-mean variance and sigma_hat / sqrt(n_runs).
struct MultiRunResult {
  double mean_variance = 0;
  double sigma_over_sqrt_n = 0;
  std::vector<HedgeReport> runs;
};

MultiRunResult multi_run(const MarketParams& params, const TradingSchedule& schedule,
                         const HedgeConstraints& constraints, Algorithm algo,
                         const RegressSpec& mesh, std::size_t n_paths, std::uint64_t base_seed,
                         bool optimize_x, int n_runs);

}  // namespace mvhedge

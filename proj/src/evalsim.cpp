#include "mvhedge/evalsim.hpp"

#include <algorithm>
#include <cmath>
#include <locale>
#include <ostream>
#include <vector>

#include "dp_common.hpp"

namespace mvhedge {

const char* strategy_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::numerical: return "numerical";
    case StrategyKind::analytic_optimal: return "analytic";
    case StrategyKind::tangent_delta: return "delta";
    case StrategyKind::no_hedge: return "nohedge";
    case StrategyKind::fixed_position: return "fixed";
  }
  fail("unknown strategy enum");
}

namespace {

long clip_level(double desired, long prev_k, const HedgeConstraints& c,
                const PositionGrid& grid) {
  // Move window intersected with the global position bounds; as long as the
  // previous position lies inside those bounds the interval is never empty.
  const long lo = std::max(grid.k_min, prev_k - grid.m_steps);
  const long hi = std::min(grid.k_max, prev_k + grid.l_steps);
  const long k = static_cast<long>(std::llround(desired / c.xi));  // half away from zero
  return std::clamp(k, lo, hi);
}

double msq(const double* v, std::size_t n) {
  double total = 0;
  for (std::size_t b = 0; b < n; b += kPathBlock) {
    const std::size_t e = std::min(n, b + kPathBlock);
    double part = 0;
    for (std::size_t j = b; j < e; ++j) part += v[j] * v[j];
    total += part;
  }
  return total / static_cast<double>(n);
}

}  // namespace

double clip_to_constraints(double desired, double previous, const HedgeConstraints& constraints,
                           const PositionGrid& grid, int date) {
  require(date >= 0 && date < grid.n_dates(), "clip: date out of range");
  const long prev_k = static_cast<long>(std::llround(previous / constraints.xi));
  return static_cast<double>(clip_level(desired, prev_k, constraints, grid)) *
         constraints.xi;
}

EvalResult evaluate(const Strategy& strategy, const ScenarioSet& scenarios,
                    const MarketParams& params, const HedgeConstraints& constraints, double x,
                    std::vector<double>* residuals, std::ostream* trajectories) {
  require(scenarios.schedule.dates.size() >= 2, "evaluate: need at least two schedule dates");
  require(scenarios.n_paths > 0, "evaluate: empty scenario set");
  const int n_trading = scenarios.n_steps();
  const std::size_t n = scenarios.n_paths;
  const std::size_t want = (static_cast<std::size_t>(n_trading) + 1) * n;
  require(scenarios.f.size() == want && scenarios.d.size() == want,
          "evaluate: scenario arrays are incomplete");
  const PositionGrid grid = build_position_grids(constraints, n_trading);

  const PolicyTable* pol = nullptr;
  long k0 = 0;
  if (strategy.kind == StrategyKind::numerical) {
    pol = strategy.policy;
    require(pol != nullptr, "evaluate: numerical strategy without a policy");
    require(pol->grid == grid, "evaluate: policy grid does not match the constraints");
    require(pol->schedule.dates == scenarios.schedule.dates,
            "evaluate: policy schedule does not match the scenarios");
    require(pol->dates.size() == static_cast<std::size_t>(n_trading) - 1,
            "evaluate: policy date count mismatch");
    k0 = static_cast<long>(std::llround(pol->nu0 / constraints.xi));
    require(k0 >= grid.k_lo[0] && k0 <= grid.k_hi[0],
            "evaluate: stored first position is infeasible");
  }
  if (strategy.kind == StrategyKind::analytic_optimal ||
      strategy.kind == StrategyKind::tangent_delta)
    params.validate();

  std::vector<double> res(n);
  std::vector<long> positions(trajectories ? n * static_cast<std::size_t>(n_trading) : 0);

  parallel_blocks(n, kPathBlock, [&](std::size_t b, std::size_t e) {
    for (std::size_t j = b; j < e; ++j) {
      long k_prev = 0;
      double gain = 0, cost = 0;
      for (int i = 0; i < n_trading; ++i) {
        const double f = scenarios.forward(i, j);
        const double d = scenarios.load(i, j);
        long k = 0;
        switch (strategy.kind) {
          case StrategyKind::numerical:
            if (i == 0) {
              k = k0;
            } else {
              const PolicyDate& pd = pol->dates[i - 1];
              const int cell = pd.partition.locate(f, d);
              const long plo = std::max(grid.k_lo[i], k_prev - grid.m_steps);
              const long phi = std::min(grid.k_hi[i], k_prev + grid.l_steps);
              k = detail::scan_argmin(
                  [&](long q) { return detail::eval3(pd.obj_at(q, cell), f, d); }, k_prev,
                  plo, phi);
            }
            break;
          case StrategyKind::analytic_optimal:
            k = clip_level(optimal_hedge({scenarios.schedule.dates[i], d, f}, params), k_prev,
                           constraints, grid);
            break;
          case StrategyKind::tangent_delta:
            k = clip_level(tangent_delta({scenarios.schedule.dates[i], d, f}, params), k_prev,
                           constraints, grid);
            break;
          case StrategyKind::no_hedge:
            k = 0;
            break;
          case StrategyKind::fixed_position:
            k = clip_level(strategy.fixed, k_prev, constraints, grid);
            break;
        }
        cost += detail::trade_cost(constraints.lambda, k - k_prev, constraints.xi, f);
        gain += static_cast<double>(k) * constraints.xi * (scenarios.forward(i + 1, j) - f);
        if (trajectories) positions[j * n_trading + i] = k;
        k_prev = k;
      }
      const double h = scenarios.forward(n_trading, j) * scenarios.load(n_trading, j);
      res[j] = h - x - gain + cost;
    }
  });

  EvalResult out;
  out.kind = strategy.kind;
  out.n_paths = n;
  out.seed = scenarios.seed;
  out.variance = msq(res.data(), n);
  out.mean_residual = block_mean(res.data(), n);

  if (trajectories) {
    std::ostream& os = *trajectories;
    os.imbue(std::locale::classic());
    os.precision(17);
    os << "path,date_index,t,F,D,position\n";
    for (std::size_t j = 0; j < n; ++j)
      for (int i = 0; i <= n_trading; ++i) {
        const long k = positions[j * n_trading + static_cast<std::size_t>(
                                                     std::min(i, n_trading - 1))];
        os << j << ',' << i << ',' << scenarios.schedule.dates[i] << ','
           << scenarios.forward(i, j) << ',' << scenarios.load(i, j) << ','
           << static_cast<double>(k) * constraints.xi << '\n';
      }
    require(static_cast<bool>(os), "evaluate: trajectory write failed");
  }
  if (residuals) *residuals = std::move(res);
  return out;
}

MultiRunResult multi_run(const MarketParams& params, const TradingSchedule& schedule,
                         const HedgeConstraints& constraints, Algorithm algo,
                         const RegressSpec& mesh, std::size_t n_paths, std::uint64_t base_seed,
                         bool optimize_x, int n_runs) {
  require(n_runs >= 2, "multi_run: need at least two runs");
  MultiRunResult out;
  out.runs.reserve(static_cast<std::size_t>(n_runs));
  for (int r = 0; r < n_runs; ++r) {
    const std::uint64_t seed = mix64(base_seed ^ static_cast<std::uint64_t>(r + 1));
    const ScenarioSet s = simulate(params, schedule, n_paths, seed);
    out.runs.push_back(solve_hedge(algo, s, constraints, mesh, optimize_x).report);
  }
  double mean = 0;
  for (const HedgeReport& h : out.runs) mean += h.variance;
  mean /= static_cast<double>(n_runs);
  double ss = 0;
  for (const HedgeReport& h : out.runs) ss += (h.variance - mean) * (h.variance - mean);
  out.mean_variance = mean;
  out.sigma_over_sqrt_n =
      std::sqrt(ss / static_cast<double>(n_runs - 1)) / std::sqrt(static_cast<double>(n_runs));
  return out;
}

}  // namespace mvhedge
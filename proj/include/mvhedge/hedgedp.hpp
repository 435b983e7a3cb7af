#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mvhedge/market.hpp"
#include "mvhedge/regress.hpp"

namespace mvhedge {

enum class Algorithm { cashflow, valuefn, localrisk };
const char* algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& name);

struct HedgeConstraints {
  double lambda = 0;    // proportional transaction-cost rate
  double m_bar = 0;     // max sale per date, MW
  double l_bar = 0;     // max purchase per date, MW
  double xi = 0;        // position lattice step, MW (> 0)
  double pos_min = 0;   // global position bounds, MW
  double pos_max = 0;
  double x0 = 0;        // initial capital, currency

  void validate() const;
  long m_steps() const;  // floor(m_bar / xi), lattice units
  long l_steps() const;
};

// Per-date admissible position lattice: positions reachable from 0 under the
// per-date order bounds, clipped by the global bounds. Grows by (m,l) steps
// per date until it fills [k_min, k_max].
struct PositionGrid {
  long k_min = 0, k_max = 0;      // global lattice bounds
  long m_steps = 0, l_steps = 0;  // per-date command bounds, lattice units
  std::vector<long> k_lo, k_hi;   // per trading date i = 0..N-1

  int n_dates() const { return static_cast<int>(k_lo.size()); }
  int n_levels(int date) const { return static_cast<int>(k_hi[date] - k_lo[date] + 1); }
  bool operator==(const PositionGrid&) const = default;
};

PositionGrid build_position_grids(const HedgeConstraints& constraints, int n_trading_dates);

struct RegressSpec {
  int n_f = 1;
  int n_d = 1;
};

// One decision date's learned policy: the state partition plus, per
// (cell, candidate position p), the regressed value surface and the
// arbitration surface (predicted conditional variance of the accumulated
// residual). The command objective for incoming level k and move l = p - k is
// the arbitration surface at p: the transaction-cost term is measurable in the
// regression state, so it cancels from the conditional variance; costs enter
// the value surfaces and the realized cash flows instead.
struct PolicyDate {
  CellPartition partition;
  long p_lo = 0, p_hi = 0;
  std::vector<double> value_coef;  // 3 per (p, cell), p-major
  std::vector<double> obj_coef;    // 3 per (p, cell), p-major

  int n_levels() const { return static_cast<int>(p_hi - p_lo + 1); }
  const double* value_at(long p, int cell) const;
  const double* obj_at(long p, int cell) const;
};

struct PolicyTable {
  Algorithm algo = Algorithm::cashflow;
  MarketParams market;
  HedgeConstraints constraints;
  TradingSchedule schedule;
  std::uint64_t seed = 0;
  std::uint64_t n_paths = 0;
  RegressSpec mesh;
  PositionGrid grid;
  double nu0 = 0;       // MW
  double x = 0;         // capital used
  double variance = 0;  // realized in-sample variance
  std::vector<PolicyDate> dates;  // decision dates t_1..t_{N-1}

  void save(std::ostream& os) const;
  void save_file(const std::string& path) const;
  static PolicyTable load(std::istream& is);
  static PolicyTable load_file(const std::string& path);
};

struct HedgeReport {
  Algorithm algo = Algorithm::cashflow;
  std::size_t n_paths = 0;
  int n_dates = 0;  // schedule points
  RegressSpec mesh;
  std::uint64_t seed = 0;
  double nu0 = 0;
  double x = 0;
  double variance = 0;
  double seconds = 0;
};

struct SolveResult {
  PolicyTable policy;
  HedgeReport report;
};

// Backward resolutions over a simulated scenario set. All three variants
// report the realized in-sample variance of the terminal residuals generated
// by their own policy (so the number is directly comparable with an
// out-of-sample replay). optimize_x selects x* as the sample mean of the
// pre-capital residual at the optimal first position; otherwise
// constraints.x0 is used.
SolveResult backward_cashflow(const ScenarioSet& scenarios, const HedgeConstraints& constraints,
                              const RegressSpec& mesh, bool optimize_x = false);
SolveResult backward_valuefn(const ScenarioSet& scenarios, const HedgeConstraints& constraints,
                             const RegressSpec& mesh, bool optimize_x = false);
SolveResult backward_localrisk(const ScenarioSet& scenarios, const HedgeConstraints& constraints,
                               const RegressSpec& mesh, bool optimize_x = false);
SolveResult solve_hedge(Algorithm algo, const ScenarioSet& scenarios,
                        const HedgeConstraints& constraints, const RegressSpec& mesh,
                        bool optimize_x = false);

// ---- single backward step (exposed for tests) ------------------------------
//
// Level-major working buffers, stride = n_paths. Row p - lo is the data for
// lattice level p. `realized` carries the path-wise cash flow; `value` and
// `risk` carry the regressed surfaces (value-function variants only).
struct StepBuffers {
  long lo = 0, hi = 0;
  std::size_t n_paths = 0;
  std::vector<double> realized;
  std::vector<double> value;
  std::vector<double> risk;

  void init_terminal(const ScenarioSet& s, const PositionGrid& grid, Algorithm algo);
  double* realized_row(long p) { return realized.data() + (p - lo) * n_paths; }
  double* value_row(long p) { return value.data() + (p - lo) * n_paths; }
  double* risk_row(long p) { return risk.data() + (p - lo) * n_paths; }
};

// Performs the date-i arbitration (decisions taken at t_i against outcomes at
// t_{i+1}) and rewrites the buffers for the date-i level window. Returns the
// stored policy block.
PolicyDate optimal_control_step(const ScenarioSet& scenarios, int date,
                                const HedgeConstraints& constraints, const PositionGrid& grid,
                                const RegressSpec& mesh, Algorithm algo, StepBuffers& buffers);

// ---- exact finite-tree solver and enumeration (oracle) ---------------------
//
// tree_solve computes the exact optimum of E[(H - x - gains + costs)^2] over
// adapted lattice policies by dynamic programming on (node, position, wealth
// offset); the offset dependence is piecewise monic quadratic and closed under
// the recursion, so the result is exact to rounding. tree_enumerate brute-
// forces every adapted policy. H = F*D at the terminal nodes.
double tree_solve(const TreeScenario& tree, const HedgeConstraints& constraints, double x);
double tree_enumerate(const TreeScenario& tree, const HedgeConstraints& constraints, double x);

// Deterministic randomized tree with martingale forward levels.
TreeScenario make_random_tree(std::uint64_t seed, int max_dates = 3, int max_branch = 4,
                              int max_grid_points = 7);
HedgeConstraints make_random_tree_constraints(std::uint64_t seed, int max_grid_points = 7);

// Runs n_cases seeded tree instances with lambda in {0, 0.01}, comparing
// tree_solve against tree_enumerate at 1e-12 relative. Returns the number of
// failures; optionally logs one line per case.
int tree_oracle_suite(int n_cases, std::ostream* log = nullptr);

}  // namespace mvhedge

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mvhedge/evalsim.hpp"

namespace mvhedge {

// Flat sectioned key = value text config. Sections: [market], [schedule],
// [constraints], [solver], [eval], and optional [convergence]. Unknown keys
// or sections are errors with line diagnostics. '#' starts a comment.
struct ExperimentConfig {
  MarketParams market;

  // schedule: either n_dates equally spaced points (including 0 and T), or an
  // explicit date list.
  int n_dates = 0;
  std::vector<double> explicit_dates;

  HedgeConstraints constraints;  // x0 holds the numeric override when !x0_analytic
  bool x0_analytic = true;

  struct Solver {
    Algorithm algo = Algorithm::cashflow;
    int n_f = 1, n_d = 1;
    std::size_t paths = 0;
    std::uint64_t seed = 1;
    bool optimize_x = false;
  } solver;

  struct Eval {
    std::size_t paths = 0;
    std::uint64_t seed = 2;
    int runs = 1;
    std::vector<std::string> strategies;  // of: numerical analytic delta nohedge
  } eval;

  struct Convergence {
    std::vector<int> mesh = {1, 2, 4, 6, 8, 10, 12};  // n_f = n_d sweep
    std::size_t paths_per_cell = 7000;                // paths = ppc * n_f * n_d
    std::vector<std::size_t> paths = {50000, 100000, 200000, 440000, 1000000};
    int runs = 4;                                     // runs averaged per point
  } convergence;

  TradingSchedule schedule() const;
  double resolve_x0() const;  // analytic value at t=0 unless overridden

  static ExperimentConfig parse(std::istream& is, const std::string& name);
  static ExperimentConfig parse_file(const std::string& path);
  void emit(std::ostream& os) const;
};

}  // namespace mvhedge

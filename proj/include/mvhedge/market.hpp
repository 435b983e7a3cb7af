#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "mvhedge/util.hpp"

namespace mvhedge {

// Two-factor market for a fixed delivery date T: a one-factor forward curve
// F(t,T) driven by an exponential Ornstein-Uhlenbeck factor (martingale in t),
// and a mean-reverting load D(t). The Brownian drivers are correlated,
// W^D = rho*W^E + sqrt(1-rho^2)*W_perp.
struct MarketParams {
  double f0 = 0;        // F(0,T), currency/MWh
  double sigma_e = 0;   // forward volatility, 1/sqrt(year)
  double a_e = 0;       // forward mean-reversion speed, 1/year
  double d_hat = 0;     // long-run load level, MW
  double d0 = 0;        // initial load D(0), MW
  double sigma_d = 0;   // load volatility, MW/sqrt(year)
  double a_d = 0;       // load mean-reversion speed, 1/year
  double rho = 0;       // driver correlation
  double maturity = 0;  // T, years

  void validate() const;
};

struct TradingSchedule {
  std::vector<double> dates;  // t_0 = 0 < t_1 < ... < t_N = maturity

  // n_dates points including both endpoints (so n_dates - 1 steps).
  static TradingSchedule equally_spaced(double maturity, int n_dates);

  int n_steps() const { return static_cast<int>(dates.size()) - 1; }
  double step(int i) const { return dates[i + 1] - dates[i]; }
  void validate(double maturity) const;
};

// Simulated paths, stored date-major: the values for date i are contiguous in
// [i*n_paths, (i+1)*n_paths), which is the access pattern of the per-date
// regressions downstream.
struct ScenarioSet {
  TradingSchedule schedule;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  std::vector<double> f;  // forward quotes F(t_i, T)
  std::vector<double> d;  // loads D(t_i)

  int n_steps() const { return schedule.n_steps(); }
  double forward(int date, std::size_t path) const {
    return f[static_cast<std::size_t>(date) * n_paths + path];
  }
  double load(int date, std::size_t path) const {
    return d[static_cast<std::size_t>(date) * n_paths + path];
  }
  const double* forward_col(int date) const {
    return f.data() + static_cast<std::size_t>(date) * n_paths;
  }
  const double* load_col(int date) const {
    return d.data() + static_cast<std::size_t>(date) * n_paths;
  }
};

// Exact-transition sampling (no Euler discretization): per step of length dt,
//   F <- F * exp(-0.5*vE + gE),     gE ~ N(0, vE) the log-forward increment,
//   D <- d_hat + (D - d_hat)*e^{-a_d dt} + gD,   gD ~ N(0, vD),
// where vE, vD are the exact OU increment variances and Cov(gE_raw, gD) is the
// exact cross-covariance of the two OU accumulators,
//   rho*sigma_e*sigma_d*(1 - e^{-(a_e+a_d)dt})/(a_e+a_d),
// so the joint law of (F(t_i), D(t_i)) does not depend on the schedule mesh.
// Path j draws from an independent generator seeded by mix64(seed ^ j').
ScenarioSet simulate(const MarketParams& params, const TradingSchedule& schedule,
                     std::size_t n_paths, std::uint64_t seed);

// Worst-interval moment bounds on the squared forward return over the
// schedule; delta < 1 is the contraction condition the backward recursions
// rely on.
struct AssumptionConstants {
  double k1;     // max_i E[(F_i/F_{i-1})^2]
  double k2;     // k1 with 3*sigma_e^2 in place of sigma_e^2
  double delta;  // max_i exp(-sigma_e^2 * (...)), always < 1 for sigma_e > 0
};
AssumptionConstants assumption_constants(const MarketParams& params,
                                         const TradingSchedule& schedule);

// CSV dump/load, header `path,date_index,t,F,D`, 17 significant digits.
void scenario_to_csv(const ScenarioSet& s, std::ostream& os);
ScenarioSet scenario_from_csv(std::istream& is);

}  // namespace mvhedge

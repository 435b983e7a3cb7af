#include "doctest.h"

#include "mvhedge/market.hpp"
#include "mvhedge/util.hpp"
#include "testutil.hpp"

#include <cmath>
#include <sstream>
#include <vector>

using namespace mvhedge;

namespace {

// exact per-step moments of the forward/load transition, used to
// standardize increments when checking distributional properties
struct StepMoments {
  double v_e;    // var of log F(t+dt) - log F(t)
  double v_d;    // var of D(t+dt) - mean
  double r;      // correlation of the two gaussian drivers
};

StepMoments step_moments(const MarketParams& p, double t0, double t1) {
  const double dt = t1 - t0;
  StepMoments m;
  m.v_e = p.sigma_e * p.sigma_e / (2.0 * p.a_e) *
          (std::exp(-2.0 * p.a_e * (p.maturity - t1)) -
           std::exp(-2.0 * p.a_e * (p.maturity - t0)));
  m.v_d = p.sigma_d * p.sigma_d / (2.0 * p.a_d) * (1.0 - std::exp(-2.0 * p.a_d * dt));
  const double vtil_e = p.sigma_e * p.sigma_e / (2.0 * p.a_e) * (1.0 - std::exp(-2.0 * p.a_e * dt));
  const double cov = p.rho * p.sigma_e * p.sigma_d / (p.a_e + p.a_d) *
                     (1.0 - std::exp(-(p.a_e + p.a_d) * dt));
  m.r = cov / std::sqrt(vtil_e * m.v_d);
  return m;
}

} // namespace

TEST_SUITE("market") {

TEST_CASE("parameter validation") {
  MarketParams p = power_market();
  CHECK_NOTHROW(p.validate());
  MarketParams bad = p;
  bad.f0 = 0.0;
  CHECK_THROWS(bad.validate());
  bad = p;
  bad.sigma_e = -0.1;
  CHECK_THROWS(bad.validate());
  bad = p;
  bad.a_e = 0.0;
  CHECK_THROWS(bad.validate());
  bad = p;
  bad.a_d = -1.0;
  CHECK_THROWS(bad.validate());
  bad = p;
  bad.rho = -1.5;
  CHECK_THROWS(bad.validate());
  bad = p;
  bad.maturity = 0.0;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("equally spaced schedule includes both endpoints") {
  TradingSchedule s = TradingSchedule::equally_spaced(0.25, 8);
  REQUIRE(s.dates.size() == 8);
  CHECK(s.dates.front() == 0.0);
  CHECK(s.dates.back() == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(s.n_steps() == 7);
  for (int i = 0; i < 7; ++i)
    CHECK(s.step(i) == doctest::Approx(0.25 / 7.0).epsilon(1e-14));
  CHECK_NOTHROW(s.validate(0.25));

  CHECK_THROWS(TradingSchedule::equally_spaced(0.25, 1));
  TradingSchedule bad;
  bad.dates = {0.0, 0.2, 0.1, 0.25};
  CHECK_THROWS(bad.validate(0.25));
  bad.dates = {0.05, 0.25};
  CHECK_THROWS(bad.validate(0.25));
  bad.dates = {0.0, 0.2};
  CHECK_THROWS(bad.validate(0.25));
}

TEST_CASE("noise-free limit reproduces deterministic curves") {
  MarketParams p = power_market();
  p.sigma_e = 1e-14;
  p.sigma_d = 0.0;
  p.d0 = 1.1 * p.d_hat;
  TradingSchedule s = TradingSchedule::equally_spaced(p.maturity, 8);
  ScenarioSet sc = simulate(p, s, 16, 99);
  for (int j = 0; j < sc.n_paths; ++j) {
    for (int i = 0; i < 8; ++i) {
      CHECK(sc.forward(i, j) == doctest::Approx(p.f0).epsilon(1e-9));
      const double want = p.d_hat + (p.d0 - p.d_hat) * std::exp(-p.a_d * s.dates[i]);
      CHECK(sc.load(i, j) == doctest::Approx(want).epsilon(1e-12));
    }
  }
  // pinned value of the mean-reverting curve one step into the schedule
  CHECK(sc.load(1, 0) == doctest::Approx(6794775.112750202).epsilon(1e-12));
}

TEST_CASE("forward is a martingale and log-variance matches the transition") {
  MarketParams p = power_market();
  p.d0 = 1.05 * p.d_hat;
  TradingSchedule s = TradingSchedule::equally_spaced(p.maturity, 8);
  const int n = 100000;
  ScenarioSet sc = simulate(p, s, n, 1234);

  REQUIRE(sc.f.size() == static_cast<size_t>(8 * n));
  for (int j = 0; j < n; ++j) {
    CHECK(sc.forward(0, j) == p.f0);
    CHECK(sc.load(0, j) == p.d0);
  }

  for (int i = 0; i < 7; ++i) {
    const double* f0c = sc.forward_col(i);
    const double* f1c = sc.forward_col(i + 1);
    std::vector<double> inc(n);
    for (int j = 0; j < n; ++j) inc[j] = f1c[j] - f0c[j];
    const double mean = block_mean(inc.data(), n);
    double var = 0.0;
    for (int j = 0; j < n; ++j) var += (inc[j] - mean) * (inc[j] - mean);
    var /= n - 1;
    const double se = std::sqrt(var / n);
    CHECK(std::abs(mean) < 4.0 * se);   // E[F(t+dt)|F(t)] = F(t)
  }

  // total variance of log F at each date
  for (int i = 1; i < 8; ++i) {
    const double want = p.sigma_e * p.sigma_e / (2.0 * p.a_e) *
                        (std::exp(-2.0 * p.a_e * (p.maturity - s.dates[i])) -
                         std::exp(-2.0 * p.a_e * p.maturity));
    const double* fc = sc.forward_col(i);
    std::vector<double> lf(n);
    for (int j = 0; j < n; ++j) {
      REQUIRE(fc[j] > 0.0);
      lf[j] = std::log(fc[j]);
    }
    const double mean = block_mean(lf.data(), n);
    double var = 0.0;
    for (int j = 0; j < n; ++j) var += (lf[j] - mean) * (lf[j] - mean);
    var /= n - 1;
    const double se = want * std::sqrt(2.0 / (n - 1));
    CHECK(std::abs(var - want) < 3.0 * se);
  }

  // load marginal at T: mean and variance of the stationary-approach law
  {
    const double* dc = sc.load_col(7);
    const double mean = block_mean(dc, n);
    const double want_mean = p.d_hat + (p.d0 - p.d_hat) * std::exp(-p.a_d * p.maturity);
    const double want_var = p.sigma_d * p.sigma_d / (2.0 * p.a_d) *
                            (1.0 - std::exp(-2.0 * p.a_d * p.maturity));
    double var = 0.0;
    for (int j = 0; j < n; ++j) var += (dc[j] - mean) * (dc[j] - mean);
    var /= n - 1;
    CHECK(std::abs(mean - want_mean) < 4.0 * std::sqrt(want_var / n));
    CHECK(std::abs(var - want_var) < 3.0 * want_var * std::sqrt(2.0 / (n - 1)));
  }
}

TEST_CASE("per-step driver correlation matches the bivariate OU law") {
  MarketParams p = power_market();
  p.d0 = p.d_hat;

  // pinned values of the step correlation for the benchmark parameters
  {
    StepMoments m7 = step_moments(p, 0.0, 0.25 / 7.0);
    CHECK(m7.r == doctest::Approx(-0.19667543926517855).epsilon(1e-12));
    StepMoments m2 = step_moments(p, 0.0, 0.125);
    CHECK(m2.r == doctest::Approx(-0.17174360848164383).epsilon(1e-12));
  }

  TradingSchedule s = TradingSchedule::equally_spaced(p.maturity, 8);
  const int n = 100000;
  ScenarioSet sc = simulate(p, s, n, 777);

  for (int i = 0; i < 7; ++i) {
    StepMoments m = step_moments(p, s.dates[i], s.dates[i + 1]);
    const double ed = std::exp(-p.a_d * s.step(i));
    const double* f0c = sc.forward_col(i);
    const double* f1c = sc.forward_col(i + 1);
    const double* d0c = sc.load_col(i);
    const double* d1c = sc.load_col(i + 1);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (int j = 0; j < n; ++j) {
      const double ge = std::log(f1c[j] / f0c[j]) + 0.5 * m.v_e;  // centred forward driver
      const double gd = d1c[j] - p.d_hat - (d0c[j] - p.d_hat) * ed;
      sxy += ge * gd;
      sxx += ge * ge;
      syy += gd * gd;
    }
    const double corr = sxy / std::sqrt(sxx * syy);
    const double se = (1.0 - m.r * m.r) / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(corr - m.r) < 3.5 * se);
  }

  // on a fine schedule the step correlation approaches the instantaneous rho
  TradingSchedule fine = TradingSchedule::equally_spaced(p.maturity, 64);
  StepMoments mf = step_moments(p, 0.0, fine.step(0));
  CHECK(std::abs(mf.r - p.rho) < 0.01);
  const int nf = 20000;
  ScenarioSet scf = simulate(p, fine, nf, 4321);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (int i = 0; i < 63; ++i) {
    StepMoments m = step_moments(p, fine.dates[i], fine.dates[i + 1]);
    const double ed = std::exp(-p.a_d * fine.step(i));
    const double sd_e = std::sqrt(m.v_e);
    const double sd_d = std::sqrt(m.v_d);
    const double* f0c = scf.forward_col(i);
    const double* f1c = scf.forward_col(i + 1);
    const double* d0c = scf.load_col(i);
    const double* d1c = scf.load_col(i + 1);
    for (int j = 0; j < nf; ++j) {
      const double x = (std::log(f1c[j] / f0c[j]) + 0.5 * m.v_e) / sd_e;
      const double y = (d1c[j] - p.d_hat - (d0c[j] - p.d_hat) * ed) / sd_d;
      sxy += x * y;
      sxx += x * x;
      syy += y * y;
    }
  }
  const double pooled = sxy / std::sqrt(sxx * syy);
  const double se = (1.0 - mf.r * mf.r) / std::sqrt(63.0 * nf);
  CHECK(std::abs(pooled - mf.r) < 3.5 * se);
}

TEST_CASE("simulation is reproducible and independent of thread count") {
  MarketParams p = power_market();
  p.d0 = 0.9 * p.d_hat;
  TradingSchedule s = TradingSchedule::equally_spaced(p.maturity, 5);
  const int saved = max_threads();
  set_max_threads(1);
  ScenarioSet a = simulate(p, s, 3000, 42);
  set_max_threads(5);
  ScenarioSet b = simulate(p, s, 3000, 42);
  set_max_threads(saved);
  REQUIRE(a.f.size() == b.f.size());
  CHECK(a.f == b.f);
  CHECK(a.d == b.d);

  ScenarioSet c = simulate(p, s, 3000, 43);
  CHECK(a.f != c.f);

  // path identity must not depend on the batch size
  ScenarioSet small = simulate(p, s, 10, 42);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 10; ++j) {
      CHECK(small.forward(i, j) == a.forward(i, j));
      CHECK(small.load(i, j) == a.load(i, j));
    }
}

TEST_CASE("squared-return constants of the hedging assumption") {
  MarketParams p = power_market();
  TradingSchedule s = TradingSchedule::equally_spaced(p.maturity, 8);
  AssumptionConstants c = assumption_constants(p, s);

  // pinned: K1 on the last interval, K2 = K1^3, delta on the first interval
  CHECK(c.k1 == doctest::Approx(1.0013437946258352).epsilon(1e-12));
  CHECK(c.k2 == doctest::Approx(1.004036803656098).epsilon(1e-12));
  CHECK(c.k2 == doctest::Approx(c.k1 * c.k1 * c.k1).epsilon(1e-12));
  CHECK(c.delta == doctest::Approx(0.99936586362879631).epsilon(1e-12));
  CHECK(c.delta < 1.0);
  CHECK(c.k1 > 1.0);

  MarketParams flat = p;
  flat.sigma_e = 1e-14;
  AssumptionConstants c0 = assumption_constants(flat, s);
  CHECK(c0.k1 == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(c0.k2 == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(c0.delta == doctest::Approx(1.0).epsilon(1e-10));

  // MC oracle: K1 is E[(F(t_{i+1})/F(t_i))^2] on the last interval
  const int n = 40000;
  ScenarioSet sc = simulate(p, s, n, 31337);
  const double* fa = sc.forward_col(6);
  const double* fb = sc.forward_col(7);
  double acc = 0.0;
  for (int j = 0; j < n; ++j) {
    const double q = fb[j] / fa[j];
    acc += q * q;
  }
  acc /= n;
  CHECK(acc == doctest::Approx(c.k1).epsilon(0.01));
}

TEST_CASE("scenario csv round trip is bit exact") {
  MarketParams p = power_market();
  p.d0 = 1.02 * p.d_hat;
  TradingSchedule s = TradingSchedule::equally_spaced(p.maturity, 3);
  ScenarioSet a = simulate(p, s, 7, 5);
  std::ostringstream out;
  scenario_to_csv(a, out);
  std::istringstream in(out.str());
  ScenarioSet b = scenario_from_csv(in);
  REQUIRE(b.n_paths == a.n_paths);
  REQUIRE(b.schedule.dates.size() == a.schedule.dates.size());
  for (size_t i = 0; i < a.schedule.dates.size(); ++i)
    CHECK(b.schedule.dates[i] == a.schedule.dates[i]);
  CHECK(b.f == a.f);
  CHECK(b.d == a.d);

  std::istringstream junk("not,a,scenario\n1,2,3\n");
  CHECK_THROWS(scenario_from_csv(junk));
}

} // TEST_SUITE

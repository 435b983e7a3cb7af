#include "mvhedge/market.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "mvhedge/util.hpp"

namespace mvhedge {

void MarketParams::validate() const {
  require(std::isfinite(f0) && f0 > 0, "market: f0 must be positive");
  require(std::isfinite(sigma_e) && sigma_e >= 0, "market: sigma_e must be >= 0");
  require(std::isfinite(a_e) && a_e > 0, "market: a_e must be positive");
  require(std::isfinite(d_hat), "market: d_hat must be finite");
  require(std::isfinite(d0), "market: d0 must be finite");
  require(std::isfinite(sigma_d) && sigma_d >= 0, "market: sigma_d must be >= 0");
  require(std::isfinite(a_d) && a_d > 0, "market: a_d must be positive");
  require(std::isfinite(rho) && rho >= -1.0 && rho <= 1.0, "market: rho must lie in [-1, 1]");
  require(std::isfinite(maturity) && maturity > 0, "market: maturity must be positive");
}

TradingSchedule TradingSchedule::equally_spaced(double maturity, int n_dates) {
  require(n_dates >= 2, "schedule: need at least 2 dates");
  require(maturity > 0, "schedule: maturity must be positive");
  TradingSchedule s;
  s.dates.resize(n_dates);
  for (int i = 0; i < n_dates; ++i)
    s.dates[i] = maturity * static_cast<double>(i) / (n_dates - 1);
  s.dates.back() = maturity;
  return s;
}

void TradingSchedule::validate(double maturity) const {
  require(dates.size() >= 2, "schedule: need at least 2 dates");
  require(dates.front() == 0.0, "schedule: first date must be 0");
  for (std::size_t i = 1; i < dates.size(); ++i)
    require(dates[i] > dates[i - 1], "schedule: dates must be strictly increasing");
  require(std::abs(dates.back() - maturity) <= 1e-9 * std::max(1.0, maturity),
          "schedule: last date must equal the maturity");
}

namespace {

struct StepCoef {
  double e_fwd;     // e^{-a_e (T - t_{i+1})}
  double v_e;       // var of the log-forward increment
  double sd_eta;    // sd of the raw forward OU accumulator
  double e_load;    // e^{-a_d dt}
  double sd_d;      // sd of the load increment noise
  double r;         // correlation of the two accumulators
};

std::vector<StepCoef> step_coefs(const MarketParams& p, const TradingSchedule& s) {
  const int n = s.n_steps();
  std::vector<StepCoef> c(n);
  for (int i = 0; i < n; ++i) {
    const double t0 = s.dates[i], t1 = s.dates[i + 1], dt = t1 - t0;
    StepCoef& k = c[i];
    k.e_fwd = std::exp(-p.a_e * (p.maturity - t1));
    const double vtil_e =
        p.sigma_e * p.sigma_e / (2.0 * p.a_e) * -std::expm1(-2.0 * p.a_e * dt);
    k.v_e = k.e_fwd * k.e_fwd * vtil_e;
    k.sd_eta = std::sqrt(vtil_e);
    k.e_load = std::exp(-p.a_d * dt);
    const double v_d =
        p.sigma_d * p.sigma_d / (2.0 * p.a_d) * -std::expm1(-2.0 * p.a_d * dt);
    k.sd_d = std::sqrt(v_d);
    const double denom = k.sd_eta * k.sd_d;
    if (denom > 0) {
      const double cov = p.rho * p.sigma_e * p.sigma_d / (p.a_e + p.a_d) *
                         -std::expm1(-(p.a_e + p.a_d) * dt);
      k.r = std::min(1.0, std::max(-1.0, cov / denom));
    } else {
      k.r = 0.0;
    }
  }
  return c;
}

} // namespace

ScenarioSet simulate(const MarketParams& params, const TradingSchedule& schedule,
                     std::size_t n_paths, std::uint64_t seed) {
  params.validate();
  schedule.validate(params.maturity);
  require(n_paths > 0, "simulate: n_paths must be positive");

  const std::size_t n_dates = schedule.dates.size();
  ScenarioSet out;
  out.schedule = schedule;
  out.n_paths = n_paths;
  out.seed = seed;
  out.f.resize(n_dates * n_paths);
  out.d.resize(n_dates * n_paths);

  const std::vector<StepCoef> coef = step_coefs(params, schedule);
  double* f = out.f.data();
  double* d = out.d.data();

  parallel_index(n_paths, [&](std::size_t j) {
    NormalRng rng(mix64(seed ^ mix64(j)));
    double fc = params.f0;
    double dc = params.d0;
    f[j] = fc;
    d[j] = dc;
    for (std::size_t i = 0; i < coef.size(); ++i) {
      const StepCoef& k = coef[i];
      const double z1 = rng.next();
      const double z2 = rng.next();
      fc *= std::exp(-0.5 * k.v_e + k.e_fwd * k.sd_eta * z1);
      dc = params.d_hat + (dc - params.d_hat) * k.e_load +
           k.sd_d * (k.r * z1 + std::sqrt(1.0 - k.r * k.r) * z2);
      f[(i + 1) * n_paths + j] = fc;
      d[(i + 1) * n_paths + j] = dc;
    }
  });
  return out;
}

AssumptionConstants assumption_constants(const MarketParams& params,
                                         const TradingSchedule& schedule) {
  params.validate();
  schedule.validate(params.maturity);
  double v_max = 0.0, v_min = std::numeric_limits<double>::infinity();
  for (const StepCoef& k : step_coefs(params, schedule)) {
    v_max = std::max(v_max, k.v_e);
    v_min = std::min(v_min, k.v_e);
  }
  return {std::exp(v_max), std::exp(3.0 * v_max), std::exp(-v_min)};
}

void scenario_to_csv(const ScenarioSet& s, std::ostream& os) {
  std::ostringstream buf;
  buf.imbue(std::locale::classic());
  buf.precision(17);
  buf << "path,date_index,t,F,D\n";
  for (std::size_t j = 0; j < s.n_paths; ++j)
    for (std::size_t i = 0; i < s.schedule.dates.size(); ++i)
      buf << j << ',' << i << ',' << s.schedule.dates[i] << ',' << s.forward(static_cast<int>(i), j)
          << ',' << s.load(static_cast<int>(i), j) << '\n';
  os << buf.str();
}

ScenarioSet scenario_from_csv(std::istream& is) {
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), "scenario csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require(line == "path,date_index,t,F,D", "scenario csv: unexpected header");

  struct Row {
    std::size_t path, date;
    double t, f, d;
  };
  std::vector<Row> rows;
  std::size_t max_path = 0, max_date = 0;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    ls.imbue(std::locale::classic());
    Row r{};
    char c1, c2, c3, c4;
    ls >> r.path >> c1 >> r.date >> c2 >> r.t >> c3 >> r.f >> c4 >> r.d;
    require(static_cast<bool>(ls) && c1 == ',' && c2 == ',' && c3 == ',' && c4 == ',',
            "scenario csv: malformed row: " + line);
    max_path = std::max(max_path, r.path);
    max_date = std::max(max_date, r.date);
    rows.push_back(r);
  }
  require(!rows.empty(), "scenario csv: no data rows");

  ScenarioSet out;
  out.n_paths = max_path + 1;
  const std::size_t n_dates = max_date + 1;
  out.schedule.dates.assign(n_dates, std::numeric_limits<double>::quiet_NaN());
  out.f.assign(n_dates * out.n_paths, std::numeric_limits<double>::quiet_NaN());
  out.d.assign(n_dates * out.n_paths, std::numeric_limits<double>::quiet_NaN());
  for (const Row& r : rows) {
    out.schedule.dates[r.date] = r.t;
    out.f[r.date * out.n_paths + r.path] = r.f;
    out.d[r.date * out.n_paths + r.path] = r.d;
  }
  for (double v : out.f) require(!std::isnan(v), "scenario csv: missing (path, date) rows");
  out.schedule.validate(out.schedule.dates.back());
  return out;
}

}  // namespace mvhedge

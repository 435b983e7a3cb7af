#include "mvhedge/hedgedp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <vector>

#include "dp_common.hpp"

namespace mvhedge {

const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::cashflow: return "cashflow";
    case Algorithm::valuefn: return "valuefn";
    case Algorithm::localrisk: return "localrisk";
  }
  fail("unknown algorithm enum");
}

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "cashflow") return Algorithm::cashflow;
  if (name == "valuefn") return Algorithm::valuefn;
  if (name == "localrisk") return Algorithm::localrisk;
  fail("unknown algorithm: " + name);
}

void HedgeConstraints::validate() const {
  require(std::isfinite(xi) && xi > 0, "constraints: xi must be positive");
  require(std::isfinite(lambda) && lambda >= 0, "constraints: lambda must be >= 0");
  require(std::isfinite(m_bar) && m_bar >= 0, "constraints: m_bar must be >= 0");
  require(std::isfinite(l_bar) && l_bar >= 0, "constraints: l_bar must be >= 0");
  require(std::isfinite(pos_min) && pos_min <= 0, "constraints: pos_min must be <= 0");
  require(std::isfinite(pos_max) && pos_max >= 0, "constraints: pos_max must be >= 0");
  require(pos_max > pos_min, "constraints: empty position range");
  require(std::isfinite(x0), "constraints: x0 must be finite");
}

// Near-integer ratios count as exact so "120 lots" does not become 119 lots
// through rounding in the quotient.
namespace {
long floor_ratio(double num, double den) { return static_cast<long>(std::floor(num / den + 1e-9)); }
long ceil_ratio(double num, double den) { return static_cast<long>(std::ceil(num / den - 1e-9)); }
} // namespace

long HedgeConstraints::m_steps() const { return floor_ratio(m_bar, xi); }
long HedgeConstraints::l_steps() const { return floor_ratio(l_bar, xi); }

PositionGrid build_position_grids(const HedgeConstraints& constraints, int n_trading_dates) {
  constraints.validate();
  require(n_trading_dates >= 1, "grid: need at least one trading date");
  PositionGrid g;
  g.k_min = ceil_ratio(constraints.pos_min, constraints.xi);
  g.k_max = floor_ratio(constraints.pos_max, constraints.xi);
  require(g.k_min <= 0 && g.k_max >= 0, "grid: lattice must contain the zero position");
  require(g.k_max > g.k_min, "grid: no tradable lattice positions");
  g.m_steps = constraints.m_steps();
  g.l_steps = constraints.l_steps();
  g.k_lo.resize(n_trading_dates);
  g.k_hi.resize(n_trading_dates);
  long lo = 0, hi = 0;
  for (int i = 0; i < n_trading_dates; ++i) {
    lo = std::max(g.k_min, lo - g.m_steps);
    hi = std::min(g.k_max, hi + g.l_steps);
    g.k_lo[i] = lo;
    g.k_hi[i] = hi;
  }
  return g;
}

const double* PolicyDate::value_at(long p, int cell) const {
  return value_coef.data() +
         3 * ((p - p_lo) * static_cast<long>(partition.n_cells()) + cell);
}

const double* PolicyDate::obj_at(long p, int cell) const {
  return obj_coef.data() + 3 * ((p - p_lo) * static_cast<long>(partition.n_cells()) + cell);
}

void StepBuffers::init_terminal(const ScenarioSet& s, const PositionGrid& grid, Algorithm algo) {
  const int last = grid.n_dates() - 1;
  lo = grid.k_lo[last];
  hi = grid.k_hi[last];
  n_paths = s.n_paths;
  const std::size_t rows = static_cast<std::size_t>(hi - lo + 1);
  const double* f_t = s.forward_col(s.n_steps());
  const double* d_t = s.load_col(s.n_steps());

  realized.resize(rows * n_paths);
  parallel_blocks(n_paths, kPathBlock, [&](std::size_t b, std::size_t e) {
    for (std::size_t j = b; j < e; ++j) {
      const double h = f_t[j] * d_t[j];
      for (std::size_t r = 0; r < rows; ++r) realized[r * n_paths + j] = h;
    }
  });
  if (algo != Algorithm::cashflow)
    value = realized;
  else
    value.clear();
  if (algo == Algorithm::valuefn)
    risk.assign(rows * n_paths, 0.0);
  else
    risk.clear();
}

PolicyDate optimal_control_step(const ScenarioSet& s, int date, const HedgeConstraints& c,
                                const PositionGrid& grid, const RegressSpec& mesh,
                                Algorithm algo, StepBuffers& buf) {
  require(date >= 1 && date < grid.n_dates(), "control step: date out of range");
  const std::size_t n = s.n_paths;
  const double* F = s.forward_col(date);
  const double* D = s.load_col(date);
  const double* Fn = s.forward_col(date + 1);
  const double xi = c.xi;

  const long in_lo = grid.k_lo[date - 1], in_hi = grid.k_hi[date - 1];
  const long lo = grid.k_lo[date], hi = grid.k_hi[date];
  const long np = hi - lo + 1;
  const long m = grid.m_steps, l = grid.l_steps;
  const bool need_value = algo != Algorithm::cashflow;
  const bool need_risk = algo == Algorithm::valuefn;

  PolicyDate pol;
  pol.p_lo = lo;
  pol.p_hi = hi;
  pol.partition = fit_partition(F, D, n, mesh.n_f, mesh.n_d);
  const CellFrame frame(pol.partition, F, D, n);
  const std::size_t nc = static_cast<std::size_t>(pol.partition.n_cells());
  pol.value_coef.assign(static_cast<std::size_t>(np) * nc * 3, 0.0);
  pol.obj_coef.assign(static_cast<std::size_t>(np) * nc * 3, 0.0);
  const std::int32_t* cell = frame.cell_of().data();

  // Per candidate level p: fit the value surface to the adjusted target, then
  // fit the arbitration surface to the squared fit residual (plus the carried
  // residual risk for the value-function recursion). The transaction-cost term
  // is affine in the date's state, so leaving it out of the target changes
  // neither the residuals nor the arbitration surface; costs are added back
  // when the buffers are rewritten below.
  std::vector<double> y(n), o(n);
  for (long p = lo; p <= hi; ++p) {
    const double* src = need_value ? buf.value_row(p) : buf.realized_row(p);
    const double pxi = static_cast<double>(p) * xi;
    double* vc = pol.value_coef.data() + static_cast<std::size_t>(p - lo) * nc * 3;
    parallel_blocks(n, kPathBlock, [&](std::size_t b, std::size_t e) {
      for (std::size_t j = b; j < e; ++j) y[j] = src[j] - pxi * (Fn[j] - F[j]);
    });
    frame.fit(y.data(), vc);
    const double* rk = need_risk ? buf.risk_row(p) : nullptr;
    parallel_blocks(n, kPathBlock, [&](std::size_t b, std::size_t e) {
      for (std::size_t j = b; j < e; ++j) {
        const double eh = y[j] - detail::eval3(vc + 3 * cell[j], F[j], D[j]);
        o[j] = eh * eh + (rk ? rk[j] : 0.0);
      }
    });
    frame.fit(o.data(), pol.obj_coef.data() + static_cast<std::size_t>(p - lo) * nc * 3);
  }

  // Arbitrate per (incoming level, path) and rewrite the buffer rows for the
  // incoming window in place; each path tile snapshots the candidate rows it
  // reads before overwriting, and tiles touch disjoint path ranges. When every
  // incoming level sees the whole candidate window, one shared arg-min per
  // path serves all levels (the tie-break depends on the incoming level, so
  // exact ties fall back to the per-level scan).
  const bool full_window = (in_hi - m <= lo) && (in_lo + l >= hi);
  parallel_blocks(n, kPathBlock, [&](std::size_t b, std::size_t e) {
    const std::size_t w = e - b;
    const std::size_t rows = static_cast<std::size_t>(np);
    std::vector<double> objv(rows * w), oldreal(rows * w);
    std::vector<double> vhat(need_value ? rows * w : 0), oldval(need_value ? rows * w : 0);
    for (long p = lo; p <= hi; ++p) {
      const std::size_t r = static_cast<std::size_t>(p - lo);
      const double* oc = pol.obj_coef.data() + r * nc * 3;
      const double* vc = pol.value_coef.data() + r * nc * 3;
      const double* rrow = buf.realized_row(p);
      const double* vrow = need_value ? buf.value_row(p) : nullptr;
      for (std::size_t j = b; j < e; ++j) {
        const std::size_t jj = j - b;
        objv[r * w + jj] = detail::eval3(oc + 3 * cell[j], F[j], D[j]);
        oldreal[r * w + jj] = rrow[j];
        if (vrow) {
          vhat[r * w + jj] = detail::eval3(vc + 3 * cell[j], F[j], D[j]);
          oldval[r * w + jj] = vrow[j];
        }
      }
    }

    std::vector<long> gbest(full_window ? w : 0);
    std::vector<char> gtie(full_window ? w : 0);
    if (full_window) {
      for (std::size_t jj = 0; jj < w; ++jj) {
        long best = lo;
        double bv = objv[jj];
        char tie = 0;
        for (long p = lo + 1; p <= hi; ++p) {
          const double v = objv[static_cast<std::size_t>(p - lo) * w + jj];
          if (v < bv) {
            bv = v;
            best = p;
            tie = 0;
          } else if (v == bv) {
            tie = 1;
          }
        }
        gbest[jj] = best;
        gtie[jj] = tie;
      }
    }

    for (long k = in_lo; k <= in_hi; ++k) {
      const long plo = std::max(lo, k - m), phi = std::min(hi, k + l);
      double* rk = buf.realized_row(k);
      double* vk = need_value ? buf.value_row(k) : nullptr;
      double* sk = need_risk ? buf.risk_row(k) : nullptr;
      for (std::size_t j = b; j < e; ++j) {
        const std::size_t jj = j - b;
        long p;
        if (full_window && !gtie[jj])
          p = gbest[jj];
        else
          p = detail::scan_argmin(
              [&](long q) { return objv[static_cast<std::size_t>(q - lo) * w + jj]; }, k, plo,
              phi);
        const std::size_t t = static_cast<std::size_t>(p - lo) * w + jj;
        const double cost = detail::trade_cost(c.lambda, p - k, xi, F[j]);
        rk[j] = oldreal[t] - static_cast<double>(p) * xi * (Fn[j] - F[j]) + cost;
        if (vk) vk[j] = vhat[t] + cost;
        if (sk) sk[j] = objv[t];
      }
    }
  });

  return pol;
}

namespace {

// Block-ordered mean of squared deviations; deterministic like block_sum.
double msq_about(const double* v, std::size_t n, double center) {
  double total = 0;
  for (std::size_t b = 0; b < n; b += kPathBlock) {
    const std::size_t e = std::min(n, b + kPathBlock);
    double part = 0;
    for (std::size_t j = b; j < e; ++j) {
      const double r = v[j] - center;
      part += r * r;
    }
    total += part;
  }
  return total / static_cast<double>(n);
}

struct DateZero {
  long k0 = 0;
  double x = 0;
  double variance = 0;
};

// First-date arbitration: the state is a point, so the criterion is a sample
// mean per candidate level rather than a regression. The reported variance is
// always the realized one at the chosen level, whatever criterion picked it.
DateZero solve_date_zero(const ScenarioSet& s, const HedgeConstraints& c,
                         const PositionGrid& grid, Algorithm algo, StepBuffers& buf,
                         bool optimize_x) {
  const std::size_t n = s.n_paths;
  const double f0 = s.forward_col(0)[0];
  const double* F1 = s.forward_col(1);
  const long lo = grid.k_lo[0], hi = grid.k_hi[0];

  std::vector<double> pre(n), smooth(n);
  auto fill_pre = [&](long k, const double* row, double* out) {
    const double kxi = static_cast<double>(k) * c.xi;
    const double cost = detail::trade_cost(c.lambda, k, c.xi, f0);
    for (std::size_t j = 0; j < n; ++j) out[j] = row[j] - kxi * (F1[j] - f0) + cost;
  };

  auto criterion = [&](long k) {
    if (algo == Algorithm::cashflow) {
      fill_pre(k, buf.realized_row(k), pre.data());
      const double center = optimize_x ? block_mean(pre.data(), n) : c.x0;
      return msq_about(pre.data(), n, center);
    }
    fill_pre(k, buf.value_row(k), smooth.data());
    const double center = optimize_x ? block_mean(smooth.data(), n) : c.x0;
    double crit = msq_about(smooth.data(), n, center);
    if (algo == Algorithm::valuefn) crit += block_mean(buf.risk_row(k), n);
    return crit;
  };

  DateZero z;
  z.k0 = detail::scan_argmin(criterion, 0, lo, hi);
  fill_pre(z.k0, buf.realized_row(z.k0), pre.data());
  z.x = optimize_x ? block_mean(pre.data(), n) : c.x0;
  z.variance = msq_about(pre.data(), n, z.x);
  return z;
}

}  // namespace

SolveResult solve_hedge(Algorithm algo, const ScenarioSet& s, const HedgeConstraints& c,
                        const RegressSpec& mesh, bool optimize_x) {
  const auto t0 = std::chrono::steady_clock::now();
  require(s.schedule.dates.size() >= 2, "solve: need at least two schedule dates");
  require(s.n_paths > 0, "solve: empty scenario set");
  require(mesh.n_f >= 1 && mesh.n_d >= 1, "solve: regression mesh must be positive");
  require(s.n_paths >= static_cast<std::size_t>(mesh.n_f) * static_cast<std::size_t>(mesh.n_d),
          "solve: fewer paths than regression cells");
  const std::size_t want = (static_cast<std::size_t>(s.n_steps()) + 1) * s.n_paths;
  require(s.f.size() == want && s.d.size() == want, "solve: scenario arrays are incomplete");

  const int n_trading = s.n_steps();
  const PositionGrid grid = build_position_grids(c, n_trading);

  StepBuffers buf;
  buf.init_terminal(s, grid, algo);

  PolicyTable pol;
  pol.algo = algo;
  pol.constraints = c;
  pol.schedule = s.schedule;
  pol.seed = s.seed;
  pol.n_paths = s.n_paths;
  pol.mesh = mesh;
  pol.grid = grid;
  pol.dates.resize(n_trading - 1);
  for (int i = n_trading - 1; i >= 1; --i)
    pol.dates[i - 1] = optimal_control_step(s, i, c, grid, mesh, algo, buf);

  const DateZero z = solve_date_zero(s, c, grid, algo, buf, optimize_x);
  pol.nu0 = static_cast<double>(z.k0) * c.xi;
  pol.x = z.x;
  pol.variance = z.variance;

  HedgeReport rep;
  rep.algo = algo;
  rep.n_paths = s.n_paths;
  rep.n_dates = n_trading + 1;
  rep.mesh = mesh;
  rep.seed = s.seed;
  rep.nu0 = pol.nu0;
  rep.x = pol.x;
  rep.variance = pol.variance;
  rep.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(pol), rep};
}

SolveResult backward_cashflow(const ScenarioSet& s, const HedgeConstraints& c,
                              const RegressSpec& mesh, bool optimize_x) {
  return solve_hedge(Algorithm::cashflow, s, c, mesh, optimize_x);
}
SolveResult backward_valuefn(const ScenarioSet& s, const HedgeConstraints& c,
                             const RegressSpec& mesh, bool optimize_x) {
  return solve_hedge(Algorithm::valuefn, s, c, mesh, optimize_x);
}
SolveResult backward_localrisk(const ScenarioSet& s, const HedgeConstraints& c,
                               const RegressSpec& mesh, bool optimize_x) {
  return solve_hedge(Algorithm::localrisk, s, c, mesh, optimize_x);
}

}  // namespace mvhedge

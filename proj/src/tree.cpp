#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <utility>
#include <vector>

#include "mvhedge/hedgedp.hpp"

namespace mvhedge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One branch of a piecewise monic quadratic in the wealth offset c:
// value (c - m)^2 + s on (previous upper, upper]. The last piece has
// upper = +inf. Monic pieces are closed under the three operations the
// backward recursion needs: shifting the argument, probability-weighted
// averaging (weights summing to 1), and pointwise minimum.
struct Piece {
  double upper, m, s;
};
using Curve = std::vector<Piece>;

void merge_adjacent(Curve& c) {
  std::size_t w = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (w > 0 && c[w - 1].m == c[i].m && c[w - 1].s == c[i].s)
      c[w - 1].upper = c[i].upper;
    else
      c[w++] = c[i];
  }
  c.resize(w);
}

// K(c) = J(c + delta)
Curve shifted(const Curve& j, double delta) {
  Curve out(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) out[i] = {j[i].upper - delta, j[i].m - delta, j[i].s};
  return out;
}

// sum_k w_k J_k(c); the m-spread form of the second term avoids cancelling
// huge m^2 values
Curve weighted_sum(const std::vector<std::pair<double, Curve>>& terms) {
  const std::size_t k = terms.size();
  std::vector<std::size_t> at(k, 0);
  Curve out;
  while (true) {
    double u = kInf;
    for (std::size_t i = 0; i < k; ++i) u = std::min(u, terms[i].second[at[i]].upper);
    double m_bar = 0;
    for (std::size_t i = 0; i < k; ++i) m_bar += terms[i].first * terms[i].second[at[i]].m;
    double s_bar = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const Piece& p = terms[i].second[at[i]];
      const double dm = p.m - m_bar;
      s_bar += terms[i].first * (p.s + dm * dm);
    }
    out.push_back({u, m_bar, s_bar});
    if (u == kInf) break;
    for (std::size_t i = 0; i < k; ++i)
      if (terms[i].second[at[i]].upper == u) ++at[i];
  }
  merge_adjacent(out);
  return out;
}

// pointwise min; two monic quadratics cross at most once, so each overlap
// interval splits at most in two
Curve lower_envelope(const Curve& a, const Curve& b) {
  Curve out;
  std::size_t ia = 0, ib = 0;
  double lo = -kInf;
  while (true) {
    const Piece& pa = a[ia];
    const Piece& pb = b[ib];
    const double hi = std::min(pa.upper, pb.upper);
    if (pa.m == pb.m) {
      const Piece& w = (pa.s <= pb.s) ? pa : pb;
      out.push_back({hi, w.m, w.s});
    } else {
      // (c-ma)^2+sa - (c-mb)^2-sb is affine with slope 2(mb-ma): the piece
      // with the larger m wins to the right of the crossing
      const double cross = 0.5 * (pa.m + pb.m) + (pb.s - pa.s) / (2.0 * (pb.m - pa.m));
      const Piece& left = (pb.m > pa.m) ? pa : pb;
      const Piece& right = (pb.m > pa.m) ? pb : pa;
      if (!(cross > lo))
        out.push_back({hi, right.m, right.s});
      else if (!(cross < hi))
        out.push_back({hi, left.m, left.s});
      else {
        out.push_back({cross, left.m, left.s});
        out.push_back({hi, right.m, right.s});
      }
    }
    if (hi == kInf) break;
    lo = hi;
    if (pa.upper == hi) ++ia;
    if (pb.upper == hi) ++ib;
  }
  merge_adjacent(out);
  return out;
}

double eval(const Curve& j, double c) {
  std::size_t i = 0;
  while (j[i].upper < c) ++i;
  const double dm = c - j[i].m;
  return dm * dm + j[i].s;
}

std::vector<double> payoffs(const TreeScenario& tree) {
  std::vector<double> h(tree.nodes.size(), 0.0);
  for (std::size_t i = 0; i < tree.nodes.size(); ++i)
    if (tree.nodes[i].children.empty()) h[i] = tree.nodes[i].f * tree.nodes[i].d;
  return h;
}

} // namespace

double tree_solve(const TreeScenario& tree, const HedgeConstraints& constraints, double x) {
  tree.validate();
  constraints.validate();
  const PositionGrid grid = build_position_grids(constraints, tree.n_steps());
  const double xi = constraints.xi;

  // J[node][k - incoming_lo]: optimal cost-to-go as a curve in the offset,
  // for incoming position k. Children precede nothing (ids grow down the
  // tree), so a reverse sweep sees every child before its parent.
  std::vector<std::vector<Curve>> J(tree.nodes.size());
  for (int n = static_cast<int>(tree.nodes.size()) - 1; n >= 0; --n) {
    const TreeScenario::Node& nd = tree.nodes[n];
    const int i = nd.date;
    const long in_lo = (i == 0) ? 0 : grid.k_lo[i - 1];
    const long in_hi = (i == 0) ? 0 : grid.k_hi[i - 1];
    J[n].resize(in_hi - in_lo + 1);
    if (nd.children.empty()) {
      const double h = nd.f * nd.d;
      for (Curve& cur : J[n]) cur = {{kInf, h, 0.0}};
      continue;
    }
    for (long k = in_lo; k <= in_hi; ++k) {
      const long p_lo = std::max(grid.k_lo[i], k - grid.m_steps);
      const long p_hi = std::min(grid.k_hi[i], k + grid.l_steps);
      Curve best;
      for (long p = p_lo; p <= p_hi; ++p) {
        const double cost = constraints.lambda * std::abs(static_cast<double>(p - k)) * xi * nd.f;
        std::vector<std::pair<double, Curve>> terms;
        terms.reserve(nd.children.size());
        for (int ch : nd.children) {
          const double delta =
              static_cast<double>(p) * xi * (tree.nodes[ch].f - nd.f) - cost;
          terms.emplace_back(tree.nodes[ch].prob, shifted(J[ch][p - grid.k_lo[i]], delta));
        }
        Curve cand = weighted_sum(terms);
        best = best.empty() ? std::move(cand) : lower_envelope(best, cand);
      }
      J[n][k - in_lo] = std::move(best);
    }
  }
  return eval(J[0][0], x);
}

namespace {

double enumerate_rec(const TreeScenario& tree, const HedgeConstraints& c,
                     const PositionGrid& grid, int node, long k, double offset) {
  const TreeScenario::Node& nd = tree.nodes[node];
  if (nd.children.empty()) {
    const double r = nd.f * nd.d - offset;
    return r * r;
  }
  const int i = nd.date;
  const long p_lo = std::max(grid.k_lo[i], k - grid.m_steps);
  const long p_hi = std::min(grid.k_hi[i], k + grid.l_steps);
  double best = kInf;
  for (long p = p_lo; p <= p_hi; ++p) {
    const double cost =
        c.lambda * std::abs(static_cast<double>(p - k)) * c.xi * nd.f;
    double acc = 0;
    for (int ch : nd.children) {
      const double delta = static_cast<double>(p) * c.xi * (tree.nodes[ch].f - nd.f) - cost;
      acc += tree.nodes[ch].prob * enumerate_rec(tree, c, grid, ch, p, offset + delta);
    }
    best = std::min(best, acc);
  }
  return best;
}

} // namespace

double tree_enumerate(const TreeScenario& tree, const HedgeConstraints& constraints, double x) {
  tree.validate();
  constraints.validate();
  const PositionGrid grid = build_position_grids(constraints, tree.n_steps());
  return enumerate_rec(tree, constraints, grid, 0, 0, x);
}

TreeScenario make_random_tree(std::uint64_t seed, int max_dates, int max_branch,
                              int max_grid_points) {
  require(max_dates >= 1 && max_branch >= 2 && max_grid_points >= 2, "tree gen: bad limits");
  std::mt19937_64 eng(mix64(seed ^ 0x7265657367656eULL));
  auto uni = [&](double a, double b) {
    return a + (b - a) * std::uniform_real_distribution<double>(0.0, 1.0)(eng);
  };
  const int n_steps = 1 + static_cast<int>(eng() % static_cast<std::uint64_t>(max_dates));

  TreeScenario t;
  t.dates.resize(n_steps + 1);
  for (int i = 0; i <= n_steps; ++i) t.dates[i] = 0.25 * i / n_steps;

  t.nodes.push_back({-1, 0, uni(30.0, 60.0), uni(100.0, 200.0), 1.0, {}});
  std::size_t head = 0;
  while (head < t.nodes.size()) {
    const std::size_t n = head++;
    if (t.nodes[n].date == n_steps) continue;
    const int nc = 2 + static_cast<int>(eng() % static_cast<std::uint64_t>(max_branch - 1));
    std::vector<double> prob(nc), jump(nc);
    double total = 0;
    for (int c = 0; c < nc; ++c) {
      prob[c] = uni(0.2, 1.0);
      total += prob[c];
    }
    double drift = 0;
    for (int c = 0; c < nc; ++c) {
      prob[c] /= total;
      jump[c] = uni(0.75, 1.3);
      drift += prob[c] * jump[c];
    }
    for (int c = 0; c < nc; ++c) {
      TreeScenario::Node child;
      child.parent = static_cast<int>(n);
      child.date = t.nodes[n].date + 1;
      child.f = t.nodes[n].f * jump[c] / drift;  // recentres E[F_child] on F
      child.d = t.nodes[n].d * uni(0.85, 1.18);
      child.prob = prob[c];
      t.nodes[n].children.push_back(static_cast<int>(t.nodes.size()));
      t.nodes.push_back(std::move(child));
    }
  }
  return t;
}

HedgeConstraints make_random_tree_constraints(std::uint64_t seed, int max_grid_points) {
  require(max_grid_points >= 3, "tree gen: need at least 3 grid points");
  std::mt19937_64 eng(mix64(seed ^ 0x636f6e7374ULL));
  auto uni = [&](double a, double b) {
    return a + (b - a) * std::uniform_real_distribution<double>(0.0, 1.0)(eng);
  };
  const long side = static_cast<long>((max_grid_points - 1) / 2);
  HedgeConstraints c;
  c.xi = uni(20.0, 60.0);
  const long k_max = 1 + static_cast<long>(eng() % static_cast<std::uint64_t>(side));
  const long k_min = -(1 + static_cast<long>(eng() % static_cast<std::uint64_t>(side)));
  c.pos_max = (static_cast<double>(k_max) + uni(0.0, 0.9)) * c.xi;
  c.pos_min = (static_cast<double>(k_min) - uni(0.0, 0.9)) * c.xi;
  if (eng() % 2 == 0) {
    c.m_bar = c.pos_max - c.pos_min;  // effectively unlimited per-date depth
    c.l_bar = c.m_bar;
  } else {
    c.m_bar = (1.0 + static_cast<double>(eng() % 2) + uni(0.0, 0.9)) * c.xi;
    c.l_bar = (1.0 + static_cast<double>(eng() % 2) + uni(0.0, 0.9)) * c.xi;
  }
  c.lambda = 0.0;
  c.x0 = 0.0;
  return c;
}

int tree_oracle_suite(int n_cases, std::ostream* log) {
  int failures = 0;
  for (int i = 0; i < n_cases; ++i) {
    const std::uint64_t seed = 0xACC00000ULL + static_cast<std::uint64_t>(i);
    const TreeScenario tree = make_random_tree(seed);
    HedgeConstraints cons = make_random_tree_constraints(seed);
    const double eh = tree_condexp(tree, 0, payoffs(tree));
    std::mt19937_64 eng(mix64(seed ^ 0x78303030ULL));
    const double x =
        eh * (0.9 + 0.2 * std::uniform_real_distribution<double>(0.0, 1.0)(eng));
    for (double lambda : {0.0, 0.01}) {
      cons.lambda = lambda;
      const double dp = tree_solve(tree, cons, x);
      const double brute = tree_enumerate(tree, cons, x);
      const double rel = std::abs(dp - brute) / std::max(1.0, std::abs(brute));
      const bool ok = rel <= 1e-12;
      if (!ok) ++failures;
      if (log)
        *log << "tree seed=" << seed << " nodes=" << tree.nodes.size() << " lambda=" << lambda
             << " dp=" << dp << " enum=" << brute << " rel=" << rel << (ok ? " ok" : " FAIL")
             << "\n";
    }
  }
  return failures;
}

}  // namespace mvhedge

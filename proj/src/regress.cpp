#include "mvhedge/regress.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

namespace mvhedge {

int CellPartition::n_cells() const {
  if (cell_offset.empty()) return n_f_strata();
  return cell_offset.back() + static_cast<int>(d_breaks.back().size()) + 1;
}

int CellPartition::locate(double f, double d) const {
  const int s = static_cast<int>(std::upper_bound(f_breaks.begin(), f_breaks.end(), f) -
                                 f_breaks.begin());
  if (d_breaks.empty()) return s;
  const std::vector<double>& db = d_breaks[s];
  const int sub = static_cast<int>(std::upper_bound(db.begin(), db.end(), d) - db.begin());
  return cell_offset[s] + sub;
}

void CellPartition::rebuild_offsets() {
  if (d_breaks.empty()) {
    cell_offset.clear();
    return;
  }
  require(static_cast<int>(d_breaks.size()) == n_f_strata(),
          "partition: need one d-break list per f-stratum");
  cell_offset.resize(d_breaks.size());
  int acc = 0;
  for (std::size_t k = 0; k < d_breaks.size(); ++k) {
    cell_offset[k] = acc;
    acc += static_cast<int>(d_breaks[k].size()) + 1;
  }
}

namespace {

// Midpoint breaks between bracketing order statistics of v restricted to
// idx[first, last), splitting into `parts` equal-count groups. Returns the
// group boundaries (positions into idx) and appends the break values.
// Sets *degenerate when a boundary falls inside a run of ties.
std::vector<std::size_t> equal_count_breaks(const double* v, std::vector<std::uint32_t>& idx,
                                            std::size_t first, std::size_t last, int parts,
                                            std::vector<double>& breaks, bool* degenerate) {
  std::sort(idx.begin() + first, idx.begin() + last,
            [v](std::uint32_t a, std::uint32_t b) { return v[a] < v[b] || (v[a] == v[b] && a < b); });
  const std::size_t m = last - first;
  std::vector<std::size_t> bounds(parts + 1);
  bounds[0] = first;
  for (int k = 0; k < parts; ++k)
    bounds[k + 1] = first + m * (k + 1) / parts;
  for (int k = 1; k < parts; ++k) {
    const double left = v[idx[bounds[k] - 1]];
    const double right = v[idx[bounds[k]]];
    const double mid = 0.5 * (left + right);
    if (!(left < mid && mid < right)) *degenerate = true;
    breaks.push_back(mid);
  }
  return bounds;
}

} // namespace

CellPartition fit_partition(const double* f, const double* d, std::size_t m, int n_f, int n_d) {
  require(n_f >= 1 && n_d >= 1, "partition: strata counts must be >= 1");
  require(m >= static_cast<std::size_t>(n_f) * n_d, "partition: fewer samples than cells");

  std::vector<std::uint32_t> idx(m);
  std::iota(idx.begin(), idx.end(), 0u);

  CellPartition part;
  std::vector<std::size_t> f_bounds =
      equal_count_breaks(f, idx, 0, m, n_f, part.f_breaks, &part.degenerate);
  part.d_breaks.resize(n_f);
  for (int k = 0; k < n_f; ++k)
    equal_count_breaks(d, idx, f_bounds[k], f_bounds[k + 1], n_d, part.d_breaks[k],
                       &part.degenerate);
  part.rebuild_offsets();
  return part;
}

double predict(const AffineModel& model, double f, double d) {
  require(model.partition != nullptr, "predict: model has no partition");
  return model.eval_cell(model.partition->locate(f, d), f, d);
}

// ---- CellFrame --------------------------------------------------------------

namespace {

// Inverts the symmetric positive (semi)definite Gram of the kept standardized
// regressors; k in {1, 2, 3}. Returns false when numerically singular.
bool invert_sym(const double* g, int k, double* inv) {
  if (k == 1) {
    if (g[0] <= 0) return false;
    inv[0] = 1.0 / g[0];
    return true;
  }
  if (k == 2) {
    const double det = g[0] * g[3] - g[1] * g[2];
    if (!(std::abs(det) > 1e-14 * std::max(1.0, std::abs(g[0] * g[3])))) return false;
    inv[0] = g[3] / det;
    inv[1] = -g[1] / det;
    inv[2] = -g[2] / det;
    inv[3] = g[0] / det;
    return true;
  }
  const double c00 = g[4] * g[8] - g[5] * g[7];
  const double c01 = g[5] * g[6] - g[3] * g[8];
  const double c02 = g[3] * g[7] - g[4] * g[6];
  const double det = g[0] * c00 + g[1] * c01 + g[2] * c02;
  if (!(std::abs(det) > 1e-14 * std::max(1.0, std::abs(g[0] * g[4] * g[8])))) return false;
  inv[0] = c00 / det;
  inv[1] = (g[2] * g[7] - g[1] * g[8]) / det;
  inv[2] = (g[1] * g[5] - g[2] * g[4]) / det;
  inv[3] = c01 / det;
  inv[4] = (g[0] * g[8] - g[2] * g[6]) / det;
  inv[5] = (g[2] * g[3] - g[0] * g[5]) / det;
  inv[6] = c02 / det;
  inv[7] = (g[1] * g[6] - g[0] * g[7]) / det;
  inv[8] = (g[0] * g[4] - g[1] * g[3]) / det;
  return true;
}

} // namespace

CellFrame::CellFrame(CellPartition partition, const double* f, const double* d, std::size_t m)
    : part_(std::move(partition)), f_(f), d_(d) {
  require(m > 0, "frame: no samples");
  const int nc = part_.n_cells();
  cell_of_.resize(m);
  parallel_blocks(m, kPathBlock, [&](std::size_t b, std::size_t e) {
    for (std::size_t j = b; j < e; ++j)
      cell_of_[j] = static_cast<std::int32_t>(part_.locate(f[j], d[j]));
  });

  // bucket samples by cell, preserving sample order within each cell
  std::vector<std::uint32_t> count(nc, 0);
  for (std::size_t j = 0; j < m; ++j) ++count[cell_of_[j]];
  cell_begin_.resize(nc + 1);
  cell_begin_[0] = 0;
  for (int c = 0; c < nc; ++c) cell_begin_[c + 1] = cell_begin_[c] + count[c];
  members_.resize(m);
  std::vector<std::uint32_t> pos(cell_begin_.begin(), cell_begin_.end() - 1);
  for (std::size_t j = 0; j < m; ++j) members_[pos[cell_of_[j]]++] = static_cast<std::uint32_t>(j);

  // per-cell standardization and factored Gram
  solve_.resize(nc);
  parallel_index(nc, [&](std::size_t c) {
    CellSolve& cs = solve_[c];
    const std::uint32_t* mem = members_.data() + cell_begin_[c];
    const std::size_t n = cell_begin_[c + 1] - cell_begin_[c];
    if (n == 0) return;  // all-zero coefficients; locate never produces empty training cells
    double sf = 0, sd = 0;
    for (std::size_t r = 0; r < n; ++r) {
      sf += f[mem[r]];
      sd += d[mem[r]];
    }
    cs.mf = sf / n;
    cs.md = sd / n;
    double vf = 0, vd = 0, vfd = 0;
    for (std::size_t r = 0; r < n; ++r) {
      const double zf = f[mem[r]] - cs.mf;
      const double zd = d[mem[r]] - cs.md;
      vf += zf * zf;
      vd += zd * zd;
      vfd += zf * zd;
    }
    cs.sf = std::sqrt(vf / n);
    cs.sd = std::sqrt(vd / n);
    cs.use_f = cs.sf > 1e-12 * (1.0 + std::abs(cs.mf));
    cs.use_d = cs.sd > 1e-12 * (1.0 + std::abs(cs.md));
    if (cs.use_f && cs.use_d) {
      const double r = vfd / std::sqrt(vf * vd);
      if ((1.0 + std::abs(r)) / (1.0 - std::abs(r)) > 1e12) cs.use_d = false;
    }
    if (!cs.use_f) cs.sf = 1.0;
    if (!cs.use_d) cs.sd = 1.0;

    // Gram of the kept standardized regressors [1, zf?, zd?]
    while (true) {
      const int k = 1 + (cs.use_f ? 1 : 0) + (cs.use_d ? 1 : 0);
      double g[9] = {0};
      for (std::size_t r = 0; r < n; ++r) {
        double row[3] = {1.0, 0.0, 0.0};
        int t = 1;
        if (cs.use_f) row[t++] = (f[mem[r]] - cs.mf) / cs.sf;
        if (cs.use_d) row[t++] = (d[mem[r]] - cs.md) / cs.sd;
        for (int a = 0; a < k; ++a)
          for (int b = 0; b < k; ++b) g[a * k + b] += row[a] * row[b];
      }
      if (invert_sym(g, k, cs.inv)) break;
      if (cs.use_d)
        cs.use_d = false;
      else if (cs.use_f)
        cs.use_f = false;
      else {
        cs.inv[0] = 0.0;  // empty cell or zero count: coefficients stay 0
        break;
      }
    }
  });
}

void CellFrame::fit(const double* y, double* out) const {
  const int nc = part_.n_cells();
  parallel_index(nc, [&](std::size_t c) {
    const CellSolve& cs = solve_[c];
    const std::uint32_t* mem = members_.data() + cell_begin_[c];
    const std::size_t n = cell_begin_[c + 1] - cell_begin_[c];
    double* o = out + 3 * c;
    o[0] = o[1] = o[2] = 0.0;
    if (n == 0) return;
    const int k = 1 + (cs.use_f ? 1 : 0) + (cs.use_d ? 1 : 0);
    double b[3] = {0, 0, 0};
    for (std::size_t r = 0; r < n; ++r) {
      const double yv = y[mem[r]];
      b[0] += yv;
      int t = 1;
      if (cs.use_f) b[t++] += yv * (f_[mem[r]] - cs.mf) / cs.sf;
      if (cs.use_d) b[t++] += yv * (d_[mem[r]] - cs.md) / cs.sd;
    }
    double beta[3] = {0, 0, 0};
    for (int a = 0; a < k; ++a)
      for (int t = 0; t < k; ++t) beta[a] += cs.inv[a * k + t] * b[t];
    // back to raw units
    int t = 1;
    double bf = 0.0, bd = 0.0;
    if (cs.use_f) bf = beta[t++] / cs.sf;
    if (cs.use_d) bd = beta[t++] / cs.sd;
    o[0] = beta[0] - bf * cs.mf - bd * cs.md;
    o[1] = bf;
    o[2] = bd;
  });
}

std::vector<double> CellFrame::fit(const double* y) const {
  std::vector<double> out(3 * static_cast<std::size_t>(part_.n_cells()));
  fit(y, out.data());
  return out;
}

AffineModel CellFrame::fit_model(const double* y) const {
  AffineModel m;
  m.partition = &part_;
  m.coef = fit(y);
  return m;
}

AffineModel fit_affine(const CellPartition& partition, const double* f, const double* d,
                       const double* y, std::size_t m) {
  CellFrame frame(partition, f, d, m);
  AffineModel model;
  model.partition = &partition;
  model.coef = frame.fit(y);
  return model;
}

// ---- scenario trees ---------------------------------------------------------

void TreeScenario::validate() const {
  require(dates.size() >= 2, "tree: need at least 2 dates");
  for (std::size_t i = 1; i < dates.size(); ++i)
    require(dates[i] > dates[i - 1], "tree: dates must be strictly increasing");
  require(!nodes.empty(), "tree: no nodes");
  require(nodes[0].parent == -1 && nodes[0].date == 0, "tree: node 0 must be the root");
  const int last = n_steps();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& nd = nodes[i];
    require(nd.f > 0, "tree: forward levels must be positive");
    require(nd.prob > 0 && nd.prob <= 1, "tree: branch probabilities must lie in (0, 1]");
    if (i > 0) {
      require(nd.parent >= 0 && nd.parent < static_cast<int>(i), "tree: bad parent link");
      require(nd.date == nodes[nd.parent].date + 1, "tree: child date must follow parent");
    }
    if (nd.date < last) {
      require(!nd.children.empty(), "tree: interior node without children");
      double total = 0;
      for (int c : nd.children) {
        require(c > static_cast<int>(i) && c < static_cast<int>(nodes.size()),
                "tree: bad child link");
        require(nodes[c].parent == static_cast<int>(i), "tree: child does not point back");
        total += nodes[c].prob;
      }
      require(std::abs(total - 1.0) <= 1e-12, "tree: child probabilities must sum to 1");
    } else {
      require(nd.date == last, "tree: node beyond the horizon");
      require(nd.children.empty(), "tree: leaf with children");
    }
  }
}

double tree_condexp(const TreeScenario& tree, int node, const std::vector<double>& leaf_values) {
  require(node >= 0 && node < static_cast<int>(tree.nodes.size()), "tree: bad node id");
  const TreeScenario::Node& nd = tree.nodes[node];
  if (nd.children.empty()) return leaf_values[node];
  double acc = 0;
  for (int c : nd.children) acc += tree.nodes[c].prob * tree_condexp(tree, c, leaf_values);
  return acc;
}

}  // namespace mvhedge

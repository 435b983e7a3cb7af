#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mvhedge/util.hpp"

namespace mvhedge {

// Equal-count nested stratification of the 2-d state (F, D): n_f strata on F
// by empirical quantiles, then n_d sub-strata on D within each F-stratum.
// Breakpoints are midpoints between the bracketing order statistics, so every
// training sample locates back into the cell it was counted in.
struct CellPartition {
  std::vector<double> f_breaks;               // ascending, size n_f_strata - 1
  std::vector<std::vector<double>> d_breaks;  // per F-stratum, ascending
  std::vector<int> cell_offset;               // first cell index per F-stratum
  bool degenerate = false;                    // some level could not be separated

  int n_f_strata() const { return static_cast<int>(f_breaks.size()) + 1; }
  int n_cells() const;
  // Out-of-range states clamp to the nearest stratum/cell.
  int locate(double f, double d) const;
  void rebuild_offsets();
};

CellPartition fit_partition(const double* f, const double* d, std::size_t m,
                            int n_f, int n_d);

// Per-cell affine form a + b_f*F + b_d*D; coefficients in raw state units.
struct AffineModel {
  const CellPartition* partition = nullptr;
  std::vector<double> coef;  // 3 per cell

  double eval_cell(int cell, double f, double d) const {
    const double* c = coef.data() + 3 * static_cast<std::size_t>(cell);
    return c[0] + c[1] * f + c[2] * d;
  }
};

double predict(const AffineModel& model, double f, double d);

// A date's regression frame: the partition plus per-cell membership,
// standardization constants, and factored Gram matrices. The factorization is
// done once and reused across every regression target at that date (only
// right-hand sides change). Least-squares is solved on standardized
// regressors; the condition estimate of the standardized Gram decides whether
// a nearly collinear or constant regressor is dropped (coefficient 0).
class CellFrame {
 public:
  CellFrame(CellPartition partition, const double* f, const double* d, std::size_t m);

  const CellPartition& partition() const { return part_; }
  int n_cells() const { return part_.n_cells(); }
  std::size_t n_samples() const { return cell_of_.size(); }
  const std::vector<std::int32_t>& cell_of() const { return cell_of_; }

  // Per-cell least squares of y on (1, F, D); writes 3 coefficients per cell
  // (raw units) to out. Summation runs in sample-index order per cell.
  void fit(const double* y, double* out) const;
  std::vector<double> fit(const double* y) const;
  AffineModel fit_model(const double* y) const;

 private:
  struct CellSolve {
    double mf = 0, md = 0, sf = 1, sd = 1;  // standardization
    bool use_f = false, use_d = false;
    double inv[9] = {0};  // inverse Gram of the kept standardized regressors
  };

  CellPartition part_;
  const double* f_;
  const double* d_;
  std::vector<std::int32_t> cell_of_;
  std::vector<std::uint32_t> members_;      // sample indices grouped by cell
  std::vector<std::uint32_t> cell_begin_;   // n_cells + 1 offsets into members_
  std::vector<CellSolve> solve_;
};

// One-shot convenience: build a frame for `partition` over the same samples
// and fit a single target.
AffineModel fit_affine(const CellPartition& partition, const double* f,
                       const double* d, const double* y, std::size_t m);

// ---- finite scenario trees (testing oracle) --------------------------------

// Explicit scenario tree: node 0 is the root; children probabilities are
// conditional on the parent and sum to 1.
struct TreeScenario {
  struct Node {
    int parent = -1;
    int date = 0;  // schedule index
    double f = 0;
    double d = 0;
    double prob = 1;  // conditional branch probability
    std::vector<int> children;
  };
  std::vector<double> dates;
  std::vector<Node> nodes;

  int n_steps() const { return static_cast<int>(dates.size()) - 1; }
  void validate() const;
};

// Exact conditional expectation at `node` of values attached to the leaves of
// its subtree (`leaf_values` is indexed by node id; interior entries ignored).
double tree_condexp(const TreeScenario& tree, int node,
                    const std::vector<double>& leaf_values);

}  // namespace mvhedge

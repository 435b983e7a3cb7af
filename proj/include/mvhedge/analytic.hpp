#pragma once

#include "mvhedge/market.hpp"

namespace mvhedge {

// Closed-form continuous-time benchmarks for the claim H = D(T)*F(T,T):
// contract value, the variance-optimal hedge position, the naive tangent
// (delta) hedge, and the residual variances of both continuous strategies.

struct AnalyticState {
  double t;  // years, 0 <= t <= T
  double d;  // current load, MW
  double f;  // current forward F(t,T), > 0
};

// E[H | state] = f * (d_hat + (d - d_hat) e^{-a_d (T-t)} + cross-term).
double value(const AnalyticState& state, const MarketParams& params);

// Variance-optimal continuous hedge position (MW). Rejects sigma_e = 0.
double optimal_hedge(const AnalyticState& state, const MarketParams& params);

// dV/dF, the naive hedge ignoring the load/price correlation carry (MW).
double tangent_delta(const AnalyticState& state, const MarketParams& params);

// dV/dD (exposed for derivative checks).
double value_dd(const AnalyticState& state, const MarketParams& params);

// Residual variance at t = 0 of the optimal continuous strategy; adaptive
// quadrature to relative tolerance 1e-8.
double optimal_residual_variance(const MarketParams& params);

// Same integral without the (1 - rho^2) factor: the residual variance of the
// tangent-delta strategy, independent of rho.
double classical_residual_variance(const MarketParams& params);

}  // namespace mvhedge

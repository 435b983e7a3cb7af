#include "mvhedge/analytic.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "mvhedge/util.hpp"

namespace mvhedge {

namespace {

// Cov(D_T, F_T/F_t | t): the load picked up by the forward through the
// correlated drivers over the remaining horizon.
double cross_term(const MarketParams& p, double tau) {
  return p.rho * p.sigma_e * p.sigma_d / (p.a_e + p.a_d) * -std::expm1(-(p.a_e + p.a_d) * tau);
}

double check_state(const AnalyticState& s, const MarketParams& p) {
  p.validate();
  require(s.t >= 0.0 && s.t <= p.maturity * (1.0 + 1e-12), "analytic: t outside [0, T]");
  require(s.f > 0.0, "analytic: forward must be positive");
  return std::max(0.0, p.maturity - s.t);
}

// Var of the residual of the tangent-delta strategy traded continuously:
// sigma_d^2 * int_0^T e^{-2 a_d (T-t)} E[F(t,T)^2] dt.
double residual_integral(const MarketParams& p) {
  p.validate();
  const double T = p.maturity;
  auto integrand = [&](double t) {
    const double var_log = p.sigma_e * p.sigma_e / (2.0 * p.a_e) *
                           (std::exp(-2.0 * p.a_e * (T - t)) - std::exp(-2.0 * p.a_e * T));
    return p.sigma_d * p.sigma_d * std::exp(-2.0 * p.a_d * (T - t)) * p.f0 * p.f0 *
           std::exp(var_log);
  };
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(integrand, 0.0, T, 15,
                                                                       1e-10);
}

}  // namespace

double value(const AnalyticState& s, const MarketParams& p) {
  const double tau = check_state(s, p);
  return s.f * (p.d_hat + (s.d - p.d_hat) * std::exp(-p.a_d * tau) + cross_term(p, tau));
}

double tangent_delta(const AnalyticState& s, const MarketParams& p) {
  const double tau = check_state(s, p);
  return p.d_hat + (s.d - p.d_hat) * std::exp(-p.a_d * tau) + cross_term(p, tau);
}

double value_dd(const AnalyticState& s, const MarketParams& p) {
  const double tau = check_state(s, p);
  return s.f * std::exp(-p.a_d * tau);
}

double optimal_hedge(const AnalyticState& s, const MarketParams& p) {
  const double tau = check_state(s, p);
  require(p.sigma_e > 0.0, "analytic: optimal hedge needs sigma_e > 0");
  return tangent_delta(s, p) +
         p.rho * p.sigma_d / p.sigma_e * std::exp((p.a_e - p.a_d) * tau);
}

double optimal_residual_variance(const MarketParams& p) {
  return (1.0 - p.rho * p.rho) * residual_integral(p);
}

double classical_residual_variance(const MarketParams& p) { return residual_integral(p); }

}  // namespace mvhedge

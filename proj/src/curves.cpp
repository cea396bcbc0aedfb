#include "mkteq/curves.hpp"

#include <cmath>
#include <string>

#include "mkteq/quadrature.hpp"

namespace mkteq {

namespace {

void check_filter_initials(const ModelParams& p) {
  if (p.sigma_w0 == 0.0 && p.b0 == 0.0) {
    throw DegenerateFilter(
        "sigma_w0 = 0 and B0 = 0: filter initial values are 0/0");
  }
}

double initial_denominator(const ModelParams& p) {
  return (p.m_rebalancers - 1) * p.b0 * p.b0 * p.sigma_a * p.sigma_a +
         p.sigma_w0 * p.sigma_w0;
}

// Denominator of the Nash B slope; depends on A and kappa(t) but not on B.
double nash_denominator(const ModelParams& p, double a, double kappa) {
  const double m = p.m_rebalancers;
  const double mb = p.m_trackers;
  const double n = m + mb;
  const double alpha = p.alpha;
  return p.gamma *
         (a * (n - 2.0) * (alpha * (n + 1.0) - 2.0 * n * kappa) +
          alpha * ((m * m + m - 1.0) * mb + m * m + 2.0 * m * mb * mb - m +
                   mb * mb * mb - 2.0) -
          2.0 *
              ((m * m - 1.0) * mb + (2.0 * m - 1.0) * mb * mb +
               (m - 2.0) * m + mb * mb * mb) *
              kappa);
}

struct State {
  double b, a, sigma, f1, f2;
};

struct Slopes {
  double b, a, sigma, f1, f2;
};

Slopes system_rhs(const ModelParams& p, EquilibriumKind kind, double t,
                  const State& s) {
  Slopes d;
  d.b = b_slope(p, kind, t, s.b, s.a);
  const double bp2 = d.b * d.b;
  d.a = -bp2 * s.sigma * (s.a + 1.0);
  d.sigma = -bp2 * s.sigma * s.sigma;
  d.f1 = -bp2 * s.sigma * s.f1;
  d.f2 = bp2 * s.sigma / s.f1;
  return d;
}

}  // namespace

double initial_a(const ModelParams& p) {
  check_filter_initials(p);
  return -(p.m_rebalancers - 1) * p.b0 * p.b0 * p.sigma_a * p.sigma_a /
         initial_denominator(p);
}

double initial_sigma(const ModelParams& p) {
  check_filter_initials(p);
  return (p.m_rebalancers - 1) * p.sigma_a * p.sigma_a * p.sigma_w0 *
         p.sigma_w0 / initial_denominator(p);
}

double b_slope(const ModelParams& p, EquilibriumKind kind, double t, double b,
               double a) {
  const double kappa = kappa_eval(p.kappa, t);
  if (kind == EquilibriumKind::PriceImpact) {
    return 2.0 * kappa * (p.m_trackers * b + 1.0) /
           (p.gamma * (a + p.m_trackers + 1.0));
  }
  const double m = p.m_rebalancers;
  const double mb = p.m_trackers;
  const double n = m + mb;
  const double alpha = p.alpha;
  const double den = nash_denominator(p, a, kappa);
  if (std::abs(den) < 1e-12 * p.gamma * (1.0 + std::abs(kappa)) * n * n * n) {
    throw NashDenominatorVanishes("B slope denominator vanishes at t=" +
                                  std::to_string(t));
  }
  const double num =
      2.0 * kappa *
      (mb * b * (n - 1.0) * (alpha * n - 2.0 * (n - 1.0) * kappa) +
       (n - 2.0) * (alpha * (n + 1.0) - 2.0 * n * kappa));
  return num / den;
}

EquilibriumCurves solve_curves(const ModelParams& params, EquilibriumKind kind,
                               const TimeGrid& grid, OdeScheme scheme) {
  require_valid(params, kind);
  check_filter_initials(params);

  EquilibriumCurves c;
  c.grid = grid;
  c.kind = kind;
  const int n = grid.n_nodes();
  c.b.resize(n);
  c.b_prime.resize(n);
  c.a.resize(n);
  c.sigma_filt.resize(n);
  c.f1.resize(n);
  c.f2.resize(n);

  State s{params.b0, initial_a(params), initial_sigma(params), 1.0, 0.0};
  const double dt = grid.dt();
  for (int k = 0; k < n; ++k) {
    const double t = grid.node(k);
    c.b[k] = s.b;
    c.a[k] = s.a;
    c.sigma_filt[k] = s.sigma;
    c.f1[k] = s.f1;
    c.f2[k] = s.f2;
    c.b_prime[k] = b_slope(params, kind, t, s.b, s.a);
    if (k == n - 1) break;

    if (scheme == OdeScheme::Euler) {
      const Slopes d = system_rhs(params, kind, t, s);
      s.b += dt * d.b;
      s.a += dt * d.a;
      s.sigma += dt * d.sigma;
      s.f1 += dt * d.f1;
      s.f2 += dt * d.f2;
      continue;
    }

    auto advance = [](const State& base, const Slopes& d, double h) {
      return State{base.b + h * d.b, base.a + h * d.a,
                   base.sigma + h * d.sigma, base.f1 + h * d.f1,
                   base.f2 + h * d.f2};
    };
    const Slopes k1 = system_rhs(params, kind, t, s);
    const Slopes k2 = system_rhs(params, kind, t + 0.5 * dt,
                                 advance(s, k1, 0.5 * dt));
    const Slopes k3 = system_rhs(params, kind, t + 0.5 * dt,
                                 advance(s, k2, 0.5 * dt));
    const Slopes k4 = system_rhs(params, kind, t + dt, advance(s, k3, dt));
    s.b += dt / 6.0 * (k1.b + 2.0 * k2.b + 2.0 * k3.b + k4.b);
    s.a += dt / 6.0 * (k1.a + 2.0 * k2.a + 2.0 * k3.a + k4.a);
    s.sigma +=
        dt / 6.0 * (k1.sigma + 2.0 * k2.sigma + 2.0 * k3.sigma + k4.sigma);
    s.f1 += dt / 6.0 * (k1.f1 + 2.0 * k2.f1 + 2.0 * k3.f1 + k4.f1);
    s.f2 += dt / 6.0 * (k1.f2 + 2.0 * k2.f2 + 2.0 * k3.f2 + k4.f2);
  }
  return c;
}

CrossCheckReport explicit_cross_checks(const EquilibriumCurves& curves,
                                       const ModelParams& params,
                                       bool include_b) {
  const int n = curves.grid.n_nodes();
  const double dt = curves.grid.dt();
  CrossCheckReport report;

  // int_0^t (B')^2 and int_0^t (B')^2 Sigma along the integrated curves.
  std::vector<double> bp2(n), bp2_sigma(n);
  for (int k = 0; k < n; ++k) {
    bp2[k] = curves.b_prime[k] * curves.b_prime[k];
    bp2_sigma[k] = bp2[k] * curves.sigma_filt[k];
  }
  const std::vector<double> int_bp2 = cumulative_integral(bp2, dt);
  const std::vector<double> int_bp2_sigma = cumulative_integral(bp2_sigma, dt);

  const double sigma0 = curves.sigma_filt[0];
  for (int k = 0; k < n; ++k) {
    const double sigma_closed =
        sigma0 == 0.0 ? 0.0 : 1.0 / (1.0 / sigma0 + int_bp2[k]);
    report.sigma_residual = std::max(
        report.sigma_residual, std::abs(curves.sigma_filt[k] - sigma_closed));
    const double a_closed =
        -1.0 + (1.0 + curves.a[0]) * std::exp(-int_bp2_sigma[k]);
    report.a_residual =
        std::max(report.a_residual, std::abs(curves.a[k] - a_closed));
  }

  if (!include_b) return report;
  if (curves.kind != EquilibriumKind::PriceImpact) {
    throw KindMismatch(
        "explicit B formula only exists for the price-impact system");
  }

  // B(t) = e^{Mc(t)} (B(0) + int_0^t g e^{-Mc}), with
  // Mc(t) = int_0^t 2 Mbar kappa / (gamma (A+1+Mbar)) and
  // g(s) = 2 kappa / (gamma (A+1+Mbar)).
  const double mb = params.m_trackers;
  std::vector<double> growth(n);
  for (int k = 0; k < n; ++k) {
    const double kappa = kappa_eval(params.kappa, curves.grid.node(k));
    growth[k] = 2.0 * kappa / (params.gamma * (curves.a[k] + 1.0 + mb));
  }
  std::vector<double> mb_growth(n);
  for (int k = 0; k < n; ++k) mb_growth[k] = mb * growth[k];
  const std::vector<double> mc = cumulative_integral(mb_growth, dt);
  std::vector<double> forced(n);
  for (int k = 0; k < n; ++k) forced[k] = growth[k] * std::exp(-mc[k]);
  const std::vector<double> int_forced = cumulative_integral(forced, dt);
  for (int k = 0; k < n; ++k) {
    const double b_closed = std::exp(mc[k]) * (curves.b[0] + int_forced[k]);
    report.b_residual =
        std::max(report.b_residual, std::abs(curves.b[k] - b_closed));
  }
  return report;
}

}  // namespace mkteq

#include "mkteq/coefficients.hpp"

#include <cmath>
#include <string>

namespace mkteq {

namespace {

void check_den(double value, const char* name, double t) {
  if (std::abs(value) < 1e-300 || !std::isfinite(value)) {
    throw DenominatorVanishes(std::string(name) + " vanishes at t=" +
                              std::to_string(t));
  }
}

// Shared Nash denominators D1, D2 and the polynomial P in D2's numerator.
struct NashDens {
  double d1, d2;
};

NashDens nash_dens(const ModelParams& p, double kappa, double t) {
  const double m = p.m_rebalancers;
  const double mb = p.m_trackers;
  const double n = m + mb;
  const double alpha = p.alpha;
  const double poly = (3.0 * m - 1.0) * mb * mb + m * (3.0 * m - 2.0) * mb +
                      (m - 2.0) * m * (m + 1.0) + mb * mb * mb;
  NashDens d;
  d.d1 = alpha * n - 2.0 * (n - 1.0) * kappa;
  d.d2 = alpha * poly - 2.0 * ((n - 2.0) * n * n + mb) * kappa;
  check_den(d.d1, "D1", t);
  check_den(d.d2, "D2", t);
  return d;
}

}  // namespace

double filter_gain0(const ModelParams& p) {
  const double den = p.sigma_w0 * p.sigma_w0 +
                     (p.m_rebalancers - 1) * p.b0 * p.b0 * p.sigma_a *
                         p.sigma_a;
  if (den == 0.0) {
    throw DegenerateFilter("filter gain undefined: sigma_w0 = B0 = 0");
  }
  return (p.m_rebalancers - 1) * p.b0 * p.sigma_a * p.sigma_a / den;
}

PerceptionCoeffs perception_coeffs(const EquilibriumCurves& curves,
                                   const ModelParams& p) {
  PerceptionCoeffs out;
  out.grid = curves.grid;
  out.kind = curves.kind;
  const int n_nodes = curves.grid.n_nodes();
  const double m = p.m_rebalancers;
  const double mb = p.m_trackers;
  const double n = m + mb;
  const double alpha = p.alpha;
  const double g = p.gamma;

  if (curves.kind == EquilibriumKind::PriceImpact) {
    out.f0.resize(n_nodes);
    out.f1.resize(n_nodes);
    out.f2.resize(n_nodes);
    out.f3.resize(n_nodes);
    out.fbar3.resize(n_nodes);
    out.fbar4.resize(n_nodes);
    out.fbar5.resize(n_nodes);
    for (int k = 0; k < n_nodes; ++k) {
      const double t = curves.grid.node(k);
      const double kap = kappa_eval(p.kappa, t);
      const double bp = curves.b_prime[k];
      const double a = curves.a[k];
      const double den = alpha - 2.0 * kap;
      check_den(den, "alpha - 2 kappa", t);
      out.f0[k] = 4.0 * mb * kap * (kap - alpha) / (n * den);
      out.f1[k] = (2.0 * g * bp * (kap - alpha) + 2.0 * alpha * kap) / den;
      out.f2[k] = 2.0 * g * bp * (kap - alpha) / den;
      out.f3[k] = 2.0 * g * bp * (alpha - kap) / (n * den);
      out.fbar3[k] = out.f3[k];
      out.fbar4[k] =
          2.0 * (alpha - kap) * (g * (a - m + 1.0) * bp - 2.0 * kap) /
          (n * den);
      out.fbar5[k] = 2.0 * kap * (alpha * (m - mb) + 2.0 * mb * kap) / (n * den);
    }
    return out;
  }

  out.mu1.resize(n_nodes);
  out.mu2.resize(n_nodes);
  out.mu3.resize(n_nodes);
  out.mubar4.resize(n_nodes);
  out.mubar5.resize(n_nodes);
  out.nu0.resize(n_nodes);
  out.nu1.resize(n_nodes);
  out.nu2.resize(n_nodes);
  out.nu3.resize(n_nodes);
  out.nubar3.resize(n_nodes);
  out.nubar4.resize(n_nodes);
  out.nubar5.resize(n_nodes);
  for (int k = 0; k < n_nodes; ++k) {
    const double t = curves.grid.node(k);
    const double kap = kappa_eval(p.kappa, t);
    const double bp = curves.b_prime[k];
    const double a = curves.a[k];
    const auto dens = nash_dens(p, kap, t);
    const double d1 = dens.d1;
    const double d2 = dens.d2;

    out.mu1[k] = (2.0 * g * (n - 2.0) * bp * (kap - alpha) +
                  2.0 * kap * (alpha * (n - 4.0) + 2.0 * kap)) /
                 d1;
    out.mu2[k] = -2.0 * g * (n - 2.0) * bp * (alpha - kap) / d1;
    out.mu3[k] =
        -4.0 * g * (n - 2.0) * bp * (alpha - kap) * (alpha - kap) / (d1 * d2);
    out.nu0[k] = 1.0 + 1.0 / (n - 2.0);
    out.nu1[k] =
        (2.0 * alpha * (n - 2.0) * kap - 2.0 * g * (n - 1.0) * bp *
                                             (alpha - kap)) /
        d1;
    out.nu2[k] = -2.0 * g * (n - 1.0) * bp * (alpha - kap) / d1;
    out.nu3[k] =
        -4.0 * g * (n - 1.0) * bp * (alpha - kap) * (alpha - kap) / (d1 * d2);
    out.nubar3[k] = 2.0 * g * (n - 2.0) * bp * (alpha - kap) / d2;
    out.nubar5[k] = 2.0 * (n - 1.0) * kap *
                    (alpha * (m * m + 2.0 * m * (mb - 1.0) +
                              (mb - 4.0) * mb) +
                     2.0 * mb * kap) /
                    d2;
    out.mubar5[k] =
        2.0 * kap *
        (alpha * (m * m * (3.0 * mb - 5.0) + m * m * m +
                  m * (mb * (3.0 * mb - 10.0) + 6.0) +
                  (mb - 4.0) * (mb - 1.0) * mb) +
         2.0 * (m * m + 2.0 * m * (mb - 1.0) + (mb - 1.0) * mb) * kap) /
        d2;
    out.mubar4[k] =
        -2.0 * (n - 2.0) * (alpha - kap) *
        (g * bp *
             (alpha * (-2.0 * a + (n - 1.0) * n * n - 2.0) -
              2.0 * kap * (-a + (3.0 * m - 2.0) * mb * mb +
                           m * (3.0 * m - 4.0) * mb +
                           (m - 1.0) * (m - 1.0) * m + mb * mb * mb + mb -
                           1.0)) +
         4.0 * kap * (alpha - kap)) /
        (d1 * d2);
    out.nubar4[k] =
        -2.0 * (n - 2.0) * (alpha - kap) *
        (g * bp *
             (alpha * (-a * (n + 2.0) +
                       (n - 1.0) * (m * m + 2.0 * m * mb + m + mb * mb) -
                       mb - 2.0) +
              2.0 * kap * (a * n + m * m * (1.0 - 3.0 * mb) - m * m * m -
                           3.0 * m * (mb - 1.0) * mb + m -
                           (mb - 2.0) * mb * mb)) +
         2.0 * kap * (alpha * (n + 2.0) - 2.0 * n * kap)) /
        (d1 * d2);
  }
  return out;
}

HoldingsCoeffs holdings_coeffs_substituted(const EquilibriumCurves& curves,
                                           const ModelParams& p) {
  if (curves.kind != EquilibriumKind::PriceImpact) {
    throw KindMismatch("substituted holdings form exists only for the "
                       "price-impact system");
  }
  HoldingsCoeffs out;
  out.grid = curves.grid;
  out.kind = curves.kind;
  const int n_nodes = curves.grid.n_nodes();
  const double m = p.m_rebalancers;
  const double mb = p.m_trackers;
  const double n = m + mb;
  const double alpha = p.alpha;
  out.reb_on_ai.resize(n_nodes);
  out.reb_on_qi.resize(n_nodes);
  out.reb_on_eta.resize(n_nodes);
  out.reb_on_Y.resize(n_nodes);
  out.trk_on_eta.resize(n_nodes);
  out.trk_on_w.resize(n_nodes);
  out.trk_on_aSigma.resize(n_nodes);
  for (int k = 0; k < n_nodes; ++k) {
    const double t = curves.grid.node(k);
    const double kap = kappa_eval(p.kappa, t);
    const double b = curves.b[k];
    const double a = curves.a[k];
    const double den = alpha - 2.0 * kap;
    const double den_a = a + mb + 1.0;
    check_den(den, "alpha - 2 kappa", t);
    check_den(den_a, "A + Mbar + 1", t);
    out.reb_on_ai[k] = -2.0 * kap * (a + mb * (1.0 - b)) / (den_a * den);
    out.reb_on_qi[k] = 2.0 * kap * (mb * b + 1.0) / (den_a * den);
    out.reb_on_eta[k] = -2.0 * kap * (mb * b + 1.0) / (n * den_a * den);
    out.reb_on_Y[k] = 2.0 * mb * kap / (n * den);
    out.trk_on_eta[k] = out.reb_on_eta[k];
    out.trk_on_w[k] = -2.0 * m * kap / (n * den);
    out.trk_on_aSigma[k] =
        2.0 * kap * (mb * b * (-a + m - 1.0) + m + mb) / (n * den_a * den);
  }
  return out;
}

HoldingsCoeffs holdings_coeffs(const EquilibriumCurves& curves,
                               const ModelParams& p) {
  HoldingsCoeffs out;
  out.grid = curves.grid;
  out.kind = curves.kind;
  const int n_nodes = curves.grid.n_nodes();
  const double m = p.m_rebalancers;
  const double mb = p.m_trackers;
  const double n = m + mb;
  const double alpha = p.alpha;
  const double g = p.gamma;
  out.reb_on_ai.resize(n_nodes);
  out.reb_on_qi.resize(n_nodes);
  out.reb_on_eta.resize(n_nodes);
  out.reb_on_Y.resize(n_nodes);
  out.trk_on_eta.resize(n_nodes);
  out.trk_on_w.resize(n_nodes);
  out.trk_on_aSigma.resize(n_nodes);

  for (int k = 0; k < n_nodes; ++k) {
    const double t = curves.grid.node(k);
    const double kap = kappa_eval(p.kappa, t);
    const double bp = curves.b_prime[k];
    const double a = curves.a[k];
    if (curves.kind == EquilibriumKind::PriceImpact) {
      const double den = 2.0 * kap - alpha;
      check_den(den, "2 kappa - alpha", t);
      out.reb_on_ai[k] = -(g * bp - 2.0 * kap) / den;
      out.reb_on_qi[k] = -g * bp / den;
      out.reb_on_eta[k] = g * bp / (n * den);
      out.reb_on_Y[k] = -2.0 * mb * kap / (n * den);
      out.trk_on_eta[k] = g * bp / (n * den);
      out.trk_on_w[k] = 2.0 * m * kap / (n * den);
      out.trk_on_aSigma[k] = (g * (a - m + 1.0) * bp - 2.0 * kap) / (n * den);
    } else {
      const auto dens = nash_dens(p, kap, t);
      const double d1 = dens.d1;
      const double d2 = dens.d2;
      out.reb_on_ai[k] = -(n - 2.0) * (2.0 * kap - g * bp) / d1;
      out.reb_on_qi[k] = g * (n - 2.0) * bp / d1;
      out.reb_on_eta[k] = -g * (n - 2.0) * (n - 2.0) * bp *
                          (alpha * (n + 1.0) - 2.0 * n * kap) / (d1 * d2);
      out.reb_on_Y[k] = 2.0 * mb * (n - 2.0) * (n - 1.0) * kap / d2;
      out.trk_on_eta[k] = -g * (n - 2.0) * (n - 1.0) * bp / d2;
      out.trk_on_w[k] = -2.0 * m * (n - 2.0) * (n - 1.0) * kap / d2;
      out.trk_on_aSigma[k] = (n - 2.0) * (n - 1.0) *
                             (g * (-a + m - 1.0) * bp + 2.0 * kap) / d2;
    }
  }

  if (curves.kind == EquilibriumKind::PriceImpact) {
    const HoldingsCoeffs alt = holdings_coeffs_substituted(curves, p);
    for (int k = 0; k < n_nodes; ++k) {
      const double worst = std::max(
          {std::abs(out.reb_on_ai[k] - alt.reb_on_ai[k]),
           std::abs(out.reb_on_qi[k] - alt.reb_on_qi[k]),
           std::abs(out.reb_on_eta[k] - alt.reb_on_eta[k]),
           std::abs(out.reb_on_Y[k] - alt.reb_on_Y[k]),
           std::abs(out.trk_on_eta[k] - alt.trk_on_eta[k]),
           std::abs(out.trk_on_w[k] - alt.trk_on_w[k]),
           std::abs(out.trk_on_aSigma[k] - alt.trk_on_aSigma[k])});
      const double scale = std::max(
          {1.0, std::abs(out.reb_on_ai[k]), std::abs(out.reb_on_qi[k]),
           std::abs(out.reb_on_eta[k]), std::abs(out.reb_on_Y[k]),
           std::abs(out.trk_on_eta[k]), std::abs(out.trk_on_w[k]),
           std::abs(out.trk_on_aSigma[k])});
      if (!(worst <= 1e-12 * scale)) {
        throw std::logic_error(
            "holdings forms disagree by " + std::to_string(worst) +
            " at t=" + std::to_string(curves.grid.node(k)));
      }
    }
  }
  return out;
}

DriftCoeffs drift_coeffs(const EquilibriumCurves& curves,
                         const ModelParams& p) {
  DriftCoeffs out;
  out.grid = curves.grid;
  out.kind = curves.kind;
  out.gamma = p.gamma;
  const int n_nodes = curves.grid.n_nodes();
  const double m = p.m_rebalancers;
  const double mb = p.m_trackers;
  const double n = m + mb;
  const double alpha = p.alpha;
  const double g = p.gamma;
  out.trk_on_eta.resize(n_nodes);
  out.trk_on_w.resize(n_nodes);
  out.trk_on_aSigma.resize(n_nodes);
  out.reb_on_eta.resize(n_nodes);
  out.reb_on_Y.resize(n_nodes);
  out.reb_on_aiqi.resize(n_nodes);
  for (int k = 0; k < n_nodes; ++k) {
    const double t = curves.grid.node(k);
    const double kap = kappa_eval(p.kappa, t);
    const double bp = curves.b_prime[k];
    const double a = curves.a[k];
    if (curves.kind == EquilibriumKind::PriceImpact) {
      out.trk_on_eta[k] = g * bp / n;
      out.trk_on_w[k] = -2.0 * mb * kap / n;
      out.trk_on_aSigma[k] = (g * (a - m + 1.0) * bp - 2.0 * kap) / n;
      out.reb_on_eta[k] = out.trk_on_eta[k];
      out.reb_on_Y[k] = out.trk_on_w[k];
      out.reb_on_aiqi[k] = -g * bp;
    } else {
      const auto dens = nash_dens(p, kap, t);
      const double d1 = dens.d1;
      const double d2 = dens.d2;
      out.trk_on_eta[k] =
          g * (n - 2.0) * bp * (alpha * (n + 1.0) - 2.0 * n * kap) / d2;
      out.trk_on_w[k] = -2.0 * mb * (n - 1.0) * kap * d1 / d2;
      out.trk_on_aSigma[k] = -(n - 2.0) *
                             (alpha * (n + 1.0) - 2.0 * n * kap) *
                             (g * (-a + m - 1.0) * bp + 2.0 * kap) / d2;
      out.reb_on_eta[k] = out.trk_on_eta[k];
      out.reb_on_Y[k] = out.trk_on_w[k];
      out.reb_on_aiqi[k] = -g * bp;
    }
  }
  return out;
}

OrthoCoeffs ortho_coeffs(const EquilibriumCurves& curves,
                         const ModelParams& p) {
  if (curves.kind != EquilibriumKind::PriceImpact) {
    throw KindMismatch("orthogonal representations exist only for the "
                       "price-impact system");
  }
  const HoldingsCoeffs h = holdings_coeffs(curves, p);
  const DriftCoeffs d = drift_coeffs(curves, p);
  const double phi = filter_gain0(p);
  const double b0 = p.b0;
  const double m = p.m_rebalancers;

  OrthoCoeffs out;
  out.grid = curves.grid;
  const int n_nodes = curves.grid.n_nodes();
  out.reb_on_ai.resize(n_nodes);
  out.reb_on_u.resize(n_nodes);
  out.reb_on_w0.resize(n_nodes);
  out.reb_on_wc.resize(n_nodes);
  out.reb_on_I.resize(n_nodes);
  out.trk_on_aSigma.resize(n_nodes);
  out.trk_on_w0.resize(n_nodes);
  out.trk_on_wc.resize(n_nodes);
  out.trk_on_I.resize(n_nodes);
  out.drift_on_aSigma.resize(n_nodes);
  out.drift_on_w0.resize(n_nodes);
  out.drift_on_wc.resize(n_nodes);
  out.drift_on_I.resize(n_nodes);
  out.rdrift_on_ai.resize(n_nodes);
  out.rdrift_on_u.resize(n_nodes);
  out.rdrift_on_w0.resize(n_nodes);
  out.rdrift_on_wc.resize(n_nodes);
  out.rdrift_on_I.resize(n_nodes);
  out.kernel.resize(n_nodes);

  for (int k = 0; k < n_nodes; ++k) {
    const double b = curves.b[k];
    const double f1 = curves.f1[k];
    const double f2 = curves.f2[k];
    out.kernel[k] = curves.b_prime[k] * curves.sigma_filt[k] / f1;
    // eta_t and q_{i,t} expanded through their explicit F1/F2 solutions:
    // eta loads F1*M*(phi*B0 + F2) on a_Sigma, -F1*M*phi on w_0, -F1*M on I;
    // q_i loads F1*(phi*B0 + F2) on u, -F1*phi on w_0, -F1 on I.
    const double eta_a = f1 * m * (phi * b0 + f2);
    const double eta_w0 = -f1 * m * phi;
    const double eta_i = -f1 * m;
    const double q_u = f1 * (phi * b0 + f2);
    const double q_w0 = -f1 * phi;
    const double q_i = -f1;

    const double c_ai = h.reb_on_ai[k];
    const double c_qi = h.reb_on_qi[k];
    const double c_e = h.reb_on_eta[k];
    const double c_y = h.reb_on_Y[k];
    out.reb_on_ai[k] = c_ai + c_e * eta_a - c_y * b;
    out.reb_on_u[k] = c_qi * q_u + c_e * eta_a - c_y * b;
    out.reb_on_w0[k] = c_qi * q_w0 + c_e * eta_w0 + c_y;
    out.reb_on_wc[k] = c_y;
    out.reb_on_I[k] = c_qi * q_i + c_e * eta_i;

    const double t_e = h.trk_on_eta[k];
    const double t_w = h.trk_on_w[k];
    const double t_a = h.trk_on_aSigma[k];
    out.trk_on_aSigma[k] = t_a + t_e * eta_a;
    out.trk_on_w0[k] = t_w + t_e * eta_w0;
    out.trk_on_wc[k] = t_w;
    out.trk_on_I[k] = t_e * eta_i;

    const double d_e = d.trk_on_eta[k];
    const double d_w = d.trk_on_w[k];
    const double d_a = d.trk_on_aSigma[k];
    out.drift_on_aSigma[k] = d_a + d_e * eta_a;
    out.drift_on_w0[k] = d_w + d_e * eta_w0;
    out.drift_on_wc[k] = d_w;
    out.drift_on_I[k] = d_e * eta_i;

    // Rebalancer-frame drift r_e eta + r_y Y + r_a (a_i + q_i) on the same
    // basis, with Y = w_0 + w_circ - B a_Sigma.
    const double r_e = d.reb_on_eta[k];
    const double r_y = d.reb_on_Y[k];
    const double r_a = d.reb_on_aiqi[k];
    out.rdrift_on_ai[k] = r_e * eta_a - r_y * b + r_a;
    out.rdrift_on_u[k] = r_e * eta_a - r_y * b + r_a * q_u;
    out.rdrift_on_w0[k] = r_e * eta_w0 + r_y + r_a * q_w0;
    out.rdrift_on_wc[k] = r_y;
    out.rdrift_on_I[k] = r_e * eta_i + r_a * q_i;
  }
  return out;
}

double price_impact_diagnostic(const ModelParams& params, double t) {
  if (params.n_traders() <= 2) {
    throw InvalidParams({{ParamError::NashSizeTooSmall,
                          "price impact diagnostic requires M + Mbar > 2"}});
  }
  const double kap = kappa_eval(params.kappa, t);
  return -2.0 * (kap - params.alpha) / (params.n_traders() - 2.0);
}

}  // namespace mkteq

#pragma once

#include <stdexcept>
#include <vector>

#include "mkteq/curves.hpp"
#include "mkteq/model.hpp"

namespace mkteq {

struct DenominatorVanishes : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Price-perception coefficient functions, one value per grid node.
// Price-impact kind fills the f-block; Nash fills the mu/nu-block.
struct PerceptionCoeffs {
  TimeGrid grid;
  EquilibriumKind kind = EquilibriumKind::PriceImpact;
  // price-impact family
  std::vector<double> f0, f1, f2, f3, fbar3, fbar4, fbar5;
  // Nash family
  std::vector<double> mu1, mu2, mu3, mubar4, mubar5;
  std::vector<double> nu0, nu1, nu2, nu3, nubar3, nubar4, nubar5;
};

// Equilibrium holdings loadings per node: rebalancer on (a_i, q_i, eta, Y),
// tracker on (eta, w, a_Sigma).
struct HoldingsCoeffs {
  TimeGrid grid;
  EquilibriumKind kind = EquilibriumKind::PriceImpact;
  std::vector<double> reb_on_ai, reb_on_qi, reb_on_eta, reb_on_Y;
  std::vector<double> trk_on_eta, trk_on_w, trk_on_aSigma;
};

// Equilibrium price-drift loadings per node in both observation frames.
// Tracker frame: drift on (eta, w, a_Sigma), diffusion gamma dw.
// Rebalancer frame: drift on (eta, Y, a_i + q_i), diffusion gamma dw_i.
struct DriftCoeffs {
  TimeGrid grid;
  EquilibriumKind kind = EquilibriumKind::PriceImpact;
  double gamma = 1.0;
  std::vector<double> trk_on_eta, trk_on_w, trk_on_aSigma;
  std::vector<double> reb_on_eta, reb_on_Y, reb_on_aiqi;
};

// Loadings on the independent Gaussian basis (price-impact only):
// rebalancer holdings on (a_i, u := a_Sigma - a_i, w_0, w_circ_t, I_t),
// tracker holdings on (a_Sigma, w_0, w_circ_t, I_t), and the tracker-frame
// price drift on (a_Sigma, w_0, w_circ_t, I_t), where
// I_t = int_0^t K(s) dw_circ_s with kernel K = B' Sigma / F1.
struct OrthoCoeffs {
  TimeGrid grid;
  std::vector<double> reb_on_ai, reb_on_u, reb_on_w0, reb_on_wc, reb_on_I;
  std::vector<double> trk_on_aSigma, trk_on_w0, trk_on_wc, trk_on_I;
  std::vector<double> drift_on_aSigma, drift_on_w0, drift_on_wc, drift_on_I;
  // rebalancer-frame price drift on (a_i, u, w_0, w_circ_t, I_t)
  std::vector<double> rdrift_on_ai, rdrift_on_u, rdrift_on_w0, rdrift_on_wc,
      rdrift_on_I;
  std::vector<double> kernel;  // K(t_k)
};

PerceptionCoeffs perception_coeffs(const EquilibriumCurves& curves,
                                   const ModelParams& params);

// Primary displayed form; for the price-impact kind the B'-substituted form
// is evaluated as well and both must agree to 1e-12 relative, pointwise.
HoldingsCoeffs holdings_coeffs(const EquilibriumCurves& curves,
                               const ModelParams& params);

// The substituted form alone (price-impact only), exposed for testing.
HoldingsCoeffs holdings_coeffs_substituted(const EquilibriumCurves& curves,
                                           const ModelParams& params);

DriftCoeffs drift_coeffs(const EquilibriumCurves& curves,
                         const ModelParams& params);

// Throws KindMismatch for Nash curves.
OrthoCoeffs ortho_coeffs(const EquilibriumCurves& curves,
                         const ModelParams& params);

// Price-impact coefficient in the rebalancer's perceived Nash stock-price
// dynamics: -2(kappa(t) - alpha)/(M + Mbar - 2), strictly negative.
double price_impact_diagnostic(const ModelParams& params, double t);

// Weight of -Y_{i,0} in q_{i,0} (and of -M Y_0 in eta_0):
// phi = (M-1) B(0) sigma_a^2 / (sigma_w0^2 + (M-1) B(0)^2 sigma_a^2).
double filter_gain0(const ModelParams& params);

}  // namespace mkteq

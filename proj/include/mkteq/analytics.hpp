#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mkteq/coefficients.hpp"
#include "mkteq/curves.hpp"
#include "mkteq/model.hpp"
#include "mkteq/simulate.hpp"

namespace mkteq {

struct BandwidthTooCoarse : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateIncrements : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ZeroDiffusion : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MissingBaseline : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class SeriesKind { Rebalancer, Tracker, Price };

struct CorrelationCurve {
  std::vector<double> t;
  std::vector<double> estimate;
  std::vector<double> se;  // zero for the closed-form curves
  double h = 0.0;          // base bandwidth before extrapolation
  bool scaled_by_h = true;
};

// Monte Carlo estimator of the scaled lag-h increment autocorrelation
// corr(x_{t+h}-x_t, x_{t+2h}-x_{t+h})/h, Richardson-extrapolated from
// bandwidths h and h/2, standard errors by path-batch means. Evaluated at
// every kept node t for which all five required nodes are retained.
CorrelationCurve trading_autocorrelation(const SimBatch& batch,
                                         SeriesKind series, double h);

CorrelationCurve price_autocorrelation(const SimBatch& batch, double h);

// Deterministic finite-bandwidth counterparts: the same Richardson target
// computed from the exact Gaussian covariance implied by the basis loadings
// (no sampling noise). Available for both equilibrium kinds.
CorrelationCurve trading_autocorrelation_exact(const EquilibriumCurves& curves,
                                               const ModelParams& params,
                                               SeriesKind series, double h,
                                               const std::vector<double>& t);

CorrelationCurve price_autocorrelation_exact(const EquilibriumCurves& curves,
                                             const ModelParams& params,
                                             double h,
                                             const std::vector<double>& t);

// Sign of the instantaneous rebalancer-tracker trade correlation (+1/-1)
// from the holdings' diffusion loadings on dw.
double instantaneous_cross_correlation(const EquilibriumCurves& curves,
                                       const ModelParams& params, double t);

// Var of the tracker-frame equilibrium price drift at every grid node,
// closed form via the explicit F1/F2 Gaussian representation.
std::vector<double> drift_variance_curve(const EquilibriumCurves& curves,
                                         const ModelParams& params);

struct ValueSurface {
  std::vector<double> a_grid;
  std::vector<double> j, j_se;                    // drift-form estimates
  std::vector<double> j_pathwise, j_pathwise_se;  // cross-check estimates
  std::vector<double> rc;                         // J(0) - J(a)
  double fit_c0 = 0.0, fit_c1 = 0.0, fit_c2 = 0.0;  // RC quadratic fit
  double fit_r2 = 0.0;
  int n_paths = 0;
};

// Conditional Monte Carlo of the rebalancer objective given (a_i, Y_0) under
// the convention w_0 := B(0)(a_Sigma - a_i), so Y_{i,0} = q_{i,0} = 0 and
// Y_0 = -B(0) a_i. Price-impact curves expected.
ValueSurface value_function(const ModelParams& params,
                            const EquilibriumCurves& curves,
                            const std::vector<double>& a_grid, int n_paths,
                            std::uint64_t master_seed);

// Fills rc and the quadratic fit; requires a_grid to contain 0.
void rebalancing_cost(ValueSurface& surface);

}  // namespace mkteq

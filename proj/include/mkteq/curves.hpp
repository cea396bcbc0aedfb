#pragma once

#include <stdexcept>
#include <vector>

#include "mkteq/model.hpp"

namespace mkteq {

struct NashDenominatorVanishes : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// sigma_w0 = 0 together with B(0) = 0 leaves the filter initials undefined.
struct DegenerateFilter : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct KindMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Node values of the deterministic equilibrium system on a uniform grid.
// b_prime holds the ODE right-hand side evaluated at each node, not a
// finite difference.
struct EquilibriumCurves {
  TimeGrid grid;
  EquilibriumKind kind = EquilibriumKind::PriceImpact;
  std::vector<double> b;
  std::vector<double> b_prime;
  std::vector<double> a;
  std::vector<double> sigma_filt;
  std::vector<double> f1;
  std::vector<double> f2;
};

enum class OdeScheme {
  Rk4,    // classic fourth order, the production scheme
  Euler,  // left-node scheme matching the path simulator's discretization
};

// Filter initials shared by both equilibria.
double initial_a(const ModelParams& params);
double initial_sigma(const ModelParams& params);

// Slope of B at (t, B, A) for the requested equilibrium kind.
double b_slope(const ModelParams& params, EquilibriumKind kind, double t,
               double b, double a);

EquilibriumCurves solve_curves(const ModelParams& params, EquilibriumKind kind,
                               const TimeGrid& grid,
                               OdeScheme scheme = OdeScheme::Rk4);

struct CrossCheckReport {
  double b_residual = 0.0;      // vs the exponential-integral closed form
  double sigma_residual = 0.0;  // vs 1/(1/Sigma(0) + int (B')^2)
  double a_residual = 0.0;      // vs -1 + (1+A(0)) exp(-int (B')^2 Sigma)
};

// Max absolute residuals between the integrated curves and their closed
// forms, quadratures on the curves' own grid. The B closed form only exists
// for the price-impact system; pass include_b = false for Nash curves or a
// KindMismatch is thrown.
CrossCheckReport explicit_cross_checks(const EquilibriumCurves& curves,
                                       const ModelParams& params,
                                       bool include_b = true);

}  // namespace mkteq

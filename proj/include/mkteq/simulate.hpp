#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mkteq/coefficients.hpp"
#include "mkteq/curves.hpp"
#include "mkteq/model.hpp"

namespace mkteq {

struct CurvesMissing : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RetentionOverflow : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InsufficientPaths : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One path's independent primitives: M private targets, the initial tracker
// target w0, and the Brownian increments of w_circ.
struct PrimitiveDraw {
  std::vector<double> targets;
  double w0 = 0.0;
  std::vector<double> dw;
  std::uint64_t seed = 0;
};

std::vector<PrimitiveDraw> draw_primitives(const ModelParams& params,
                                           const TimeGrid& grid, int n_paths,
                                           std::uint64_t master_seed);

enum class RetentionMode {
  Summary,  // per-node cross-path summaries at kept nodes only
  Series,   // plus per-path holdings/price values at kept nodes
  Full,     // plus complete per-path trajectories (verify_identities input)
};

struct SimConfig {
  int n_paths = 1000;
  std::uint64_t master_seed = 20260823ull;
  RetentionMode retention = RetentionMode::Summary;
  // Advance eta and q_i through their explicit F1/F2 solutions instead of
  // the Euler recursions.
  bool exact_transitions = false;
  // Grid nodes at which series values are retained; empty selects 41 evenly
  // spaced nodes.
  std::vector<int> keep_nodes;
  std::size_t memory_budget = std::size_t{2} << 30;
  bool serial = false;  // force the serial reference kernel
};

struct PathRecord {
  std::vector<double> targets;
  double w0 = 0.0;
  std::vector<double> dw;                        // n_steps
  std::vector<double> y, eta, w, price;          // n_nodes
  std::vector<std::vector<double>> q;            // M x n_nodes
  std::vector<std::vector<double>> reb_holding;  // M x n_nodes
  std::vector<double> trk_holding;               // n_nodes
  std::vector<double> wealth_sum;                // sum_k X_{k,t}, n_nodes
};

struct SimBatch {
  ModelParams params;
  EquilibriumKind kind = EquilibriumKind::PriceImpact;
  TimeGrid grid;
  SimConfig config;
  EquilibriumCurves ref_curves;   // the curves handed to simulate_paths
  EquilibriumCurves step_curves;  // discretization-consistent stepping curves
  HoldingsCoeffs holdings;        // evaluated on step_curves
  DriftCoeffs drifts;             // evaluated on step_curves
  std::vector<int> keep_nodes;
  // [kept node][path] series (Series and Full retention).
  std::vector<std::vector<double>> reb_theta, trk_theta, price;
  // Cross-path summaries at kept nodes.
  std::vector<double> mean_reb, var_reb, mean_trk, var_trk, mean_price,
      var_price;
  std::vector<PathRecord> full;  // Full retention only
};

// Euler-Maruyama simulation of the full system. The stepping uses an
// internal Euler-consistent twin of the curves so that clearing and
// drift-matching identities hold to rounding; exact_transitions steps eta
// and q_i through the explicit F1/F2 solutions on the passed curves instead.
SimBatch simulate_paths(const EquilibriumCurves& curves,
                        const ModelParams& params, const SimConfig& config);

struct IdentityReport {
  // Batch-level max residuals; *_rel are scaled by the corresponding
  // batch-level magnitude.
  double clearing_rel = 0.0;        // |sum_k theta_k| / max |theta|
  double drift_match_rel = 0.0;     // perception-drift equality across traders
  double frame_equiv_rel = 0.0;     // price increments, both frames
  double y_identity_abs = 0.0;      // Y - (w - B a_Sigma), stepping B
  double decomposition_abs = 0.0;   // sum_i q_i - eta - A a_Sigma, reference A
  double inverse_relation_abs = 0.0;  // q_i vs eta/M - F1(phi B0 + F2) a_i
  double initial_price_abs = 0.0;   // S_0 - Y_0
  double wealth_sum_abs = 0.0;      // sum_k X_{k,t}
};

// Requires Full retention. Residuals tied to the continuous-time limit
// (decomposition, inverse relation) are measured against the reference
// curves and shrink at first order in dt; the structural identities hold to
// rounding.
IdentityReport verify_identities(const SimBatch& batch);

struct FilterCheckpoint {
  double t = 0.0;
  int node = 0;
  // OLS of (u - q_recursive) on the observable features (intercept, Y_{i,0},
  // binned increments of Y_i): coefficient estimates, standard errors, and
  // the largest |coefficient|/se. All coefficients are zero when the
  // recursion computes the true conditional expectation.
  std::vector<double> coef_gap;
  std::vector<double> se;
  double max_abs_z = 0.0;
  double mean_q = 0.0;
  double mean_u = 0.0;
};

struct FilterOracleReport {
  std::vector<FilterCheckpoint> checkpoints;
};

// Gaussian-regression oracle for the filter: across paths, the residual
// u := a_Sigma - a_i minus the recursive q_{i,t} must be orthogonal to every
// linear functional of rebalancer i's observations.
FilterOracleReport filter_oracle(const ModelParams& params,
                                 const EquilibriumCurves& curves,
                                 const std::vector<double>& t_checkpoints,
                                 int n_paths, std::uint64_t master_seed,
                                 int n_bins = 16, double se_ceiling = 0.05);

}  // namespace mkteq

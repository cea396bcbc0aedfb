#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mkteq {

enum class EquilibriumKind { PriceImpact, Nash };

std::string to_string(EquilibriumKind kind);

// Deterministic target-penalty function kappa on [0,1]; must be positive,
// continuous, and bounded.
struct PenaltySpec {
  enum class Kind { Constant, Affine, Tabulated };

  Kind kind = Kind::Constant;
  double c0 = 1.0;            // constant value / affine intercept
  double c1 = 0.0;            // affine slope
  std::vector<double> nodes;  // tabulated values on a uniform grid over [0,1]

  static PenaltySpec constant(double value);
  static PenaltySpec affine(double intercept, double slope);
  static PenaltySpec tabulated(std::vector<double> values);

  // Smallest value attained on [0,1] (exact for all three kinds).
  double min_value() const;
};

// Evaluates kappa(t); throws OutOfDomain for t outside [0,1].
double kappa_eval(const PenaltySpec& spec, double t);

// Uniform time grid t_k = k/n_steps on [0,1].
struct TimeGrid {
  int n_steps = 2000;

  double dt() const { return 1.0 / n_steps; }
  int n_nodes() const { return n_steps + 1; }
  double node(int k) const { return static_cast<double>(k) / n_steps; }
};

struct ModelParams {
  int m_rebalancers = 5;   // M
  int m_trackers = 10;     // Mbar
  double sigma_a = 1.0;    // stddev of each rebalancer target
  double sigma_w0 = 1.0;   // stddev of initial tracker target
  double gamma = 1.0;      // stock-price volatility
  double alpha = 0.0;      // price-impact coefficient (<= 0)
  double b0 = -0.2;        // B(0)
  PenaltySpec kappa;

  int n_traders() const { return m_rebalancers + m_trackers; }
};

enum class ParamError {
  NonpositiveKappa,
  PositiveAlpha,
  NashSizeTooSmall,
  NonpositiveGamma,
  NonpositiveSigmaA,
  NegativeSigmaW0,
  BadTraderCount,
};

std::string to_string(ParamError code);

struct Violation {
  ParamError code;
  std::string message;
};

// Returns every violated constraint (empty when params are valid for kind).
std::vector<Violation> validate_params(const ModelParams& params,
                                       EquilibriumKind kind);

struct InvalidParams : std::runtime_error {
  explicit InvalidParams(std::vector<Violation> violations);
  std::vector<Violation> violations;
};

struct OutOfDomain : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Throws InvalidParams listing all violations unless params are valid.
void require_valid(const ModelParams& params, EquilibriumKind kind);

// Scenario file: flat "key value" text with an exact key set.
struct ScenarioConfig {
  ModelParams params;
  TimeGrid grid;
  // kind as requested in the file: "price-impact", "nash", or "both"
  bool run_price_impact = true;
  bool run_nash = false;
};

struct ConfigParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ScenarioConfig parse_config_text(const std::string& text);
ScenarioConfig parse_config_file(const std::string& path);

}  // namespace mkteq

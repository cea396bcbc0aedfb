#include "mkteq/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace mkteq {

std::string to_string(EquilibriumKind kind) {
  return kind == EquilibriumKind::PriceImpact ? "price-impact" : "nash";
}

PenaltySpec PenaltySpec::constant(double value) {
  PenaltySpec s;
  s.kind = Kind::Constant;
  s.c0 = value;
  return s;
}

PenaltySpec PenaltySpec::affine(double intercept, double slope) {
  PenaltySpec s;
  s.kind = Kind::Affine;
  s.c0 = intercept;
  s.c1 = slope;
  return s;
}

PenaltySpec PenaltySpec::tabulated(std::vector<double> values) {
  PenaltySpec s;
  s.kind = Kind::Tabulated;
  s.nodes = std::move(values);
  return s;
}

double PenaltySpec::min_value() const {
  switch (kind) {
    case Kind::Constant:
      return c0;
    case Kind::Affine:
      return std::min(c0, c0 + c1);
    case Kind::Tabulated:
      if (nodes.empty()) return 0.0;
      return *std::min_element(nodes.begin(), nodes.end());
  }
  return 0.0;
}

double kappa_eval(const PenaltySpec& spec, double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw OutOfDomain("kappa_eval: t=" + std::to_string(t) +
                      " outside [0,1]");
  }
  switch (spec.kind) {
    case PenaltySpec::Kind::Constant:
      return spec.c0;
    case PenaltySpec::Kind::Affine:
      return spec.c0 + spec.c1 * t;
    case PenaltySpec::Kind::Tabulated: {
      const auto n = spec.nodes.size();
      if (n == 0) throw OutOfDomain("kappa_eval: empty tabulated spec");
      if (n == 1) return spec.nodes[0];
      const double x = t * static_cast<double>(n - 1);
      const auto lo = std::min(static_cast<size_t>(x), n - 2);
      const double frac = x - static_cast<double>(lo);
      return spec.nodes[lo] * (1.0 - frac) + spec.nodes[lo + 1] * frac;
    }
  }
  throw OutOfDomain("kappa_eval: bad spec kind");
}

std::string to_string(ParamError code) {
  switch (code) {
    case ParamError::NonpositiveKappa: return "NonpositiveKappa";
    case ParamError::PositiveAlpha: return "PositiveAlpha";
    case ParamError::NashSizeTooSmall: return "NashSizeTooSmall";
    case ParamError::NonpositiveGamma: return "NonpositiveGamma";
    case ParamError::NonpositiveSigmaA: return "NonpositiveSigmaA";
    case ParamError::NegativeSigmaW0: return "NegativeSigmaW0";
    case ParamError::BadTraderCount: return "BadTraderCount";
  }
  return "Unknown";
}

std::vector<Violation> validate_params(const ModelParams& p,
                                       EquilibriumKind kind) {
  std::vector<Violation> v;
  auto add = [&v](ParamError code, std::string msg) {
    v.push_back({code, std::move(msg)});
  };
  if (p.m_rebalancers < 1 || p.m_trackers < 1) {
    add(ParamError::BadTraderCount,
        "need M >= 1 rebalancers and Mbar >= 1 trackers");
  }
  if (kind == EquilibriumKind::Nash && p.n_traders() <= 2) {
    add(ParamError::NashSizeTooSmall, "Nash kind requires M + Mbar > 2");
  }
  if (!(p.kappa.min_value() > 0.0)) {
    add(ParamError::NonpositiveKappa, "kappa must be > 0 on [0,1]");
  }
  if (p.alpha > 0.0) {
    add(ParamError::PositiveAlpha, "alpha must be <= 0");
  }
  if (!(p.gamma > 0.0)) {
    add(ParamError::NonpositiveGamma, "gamma must be > 0");
  }
  if (!(p.sigma_a > 0.0)) {
    add(ParamError::NonpositiveSigmaA, "sigma_a must be > 0");
  }
  if (p.sigma_w0 < 0.0) {
    add(ParamError::NegativeSigmaW0, "sigma_w0 must be >= 0");
  }
  return v;
}

namespace {
std::string join_messages(const std::vector<Violation>& vs) {
  std::string out = "invalid parameters:";
  for (const auto& v : vs) {
    out += " [" + to_string(v.code) + "] " + v.message + ";";
  }
  return out;
}
}  // namespace

InvalidParams::InvalidParams(std::vector<Violation> vs)
    : std::runtime_error(join_messages(vs)), violations(std::move(vs)) {}

void require_valid(const ModelParams& params, EquilibriumKind kind) {
  auto vs = validate_params(params, kind);
  if (!vs.empty()) throw InvalidParams(std::move(vs));
}

namespace {

const std::set<std::string> kKnownKeys = {
    "M",          "Mbar",       "sigma_a", "sigma_w0",
    "gamma",      "alpha",      "B0",      "kappa.kind",
    "kappa.c0",   "kappa.c1",   "grid.n_steps", "kind"};

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const double x = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return x;
  } catch (const std::exception&) {
    throw ConfigParseError("bad numeric value for key '" + key + "': " + value);
  }
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const int x = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return x;
  } catch (const std::exception&) {
    throw ConfigParseError("bad integer value for key '" + key + "': " + value);
  }
}

}  // namespace

ScenarioConfig parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key, value, extra;
    if (!(ls >> key)) continue;  // blank line
    if (!(ls >> value)) {
      throw ConfigParseError("line " + std::to_string(lineno) +
                             ": key '" + key + "' has no value");
    }
    if (ls >> extra) {
      throw ConfigParseError("line " + std::to_string(lineno) +
                             ": trailing token '" + extra + "'");
    }
    if (!kKnownKeys.count(key)) {
      throw ConfigParseError("unknown key '" + key + "'");
    }
    if (kv.count(key)) {
      throw ConfigParseError("duplicate key '" + key + "'");
    }
    kv[key] = value;
  }

  ScenarioConfig cfg;
  auto take = [&kv](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) return std::string();
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  if (auto v = take("M"); !v.empty()) cfg.params.m_rebalancers = parse_int("M", v);
  if (auto v = take("Mbar"); !v.empty()) cfg.params.m_trackers = parse_int("Mbar", v);
  if (auto v = take("sigma_a"); !v.empty()) cfg.params.sigma_a = parse_double("sigma_a", v);
  if (auto v = take("sigma_w0"); !v.empty()) cfg.params.sigma_w0 = parse_double("sigma_w0", v);
  if (auto v = take("gamma"); !v.empty()) cfg.params.gamma = parse_double("gamma", v);
  if (auto v = take("alpha"); !v.empty()) cfg.params.alpha = parse_double("alpha", v);
  if (auto v = take("B0"); !v.empty()) cfg.params.b0 = parse_double("B0", v);
  if (auto v = take("grid.n_steps"); !v.empty()) {
    cfg.grid.n_steps = parse_int("grid.n_steps", v);
    if (cfg.grid.n_steps < 1) throw ConfigParseError("grid.n_steps must be >= 1");
  }

  std::string kkind = take("kappa.kind");
  const std::string c0s = take("kappa.c0");
  const std::string c1s = take("kappa.c1");
  if (kkind.empty()) kkind = "constant";
  const double c0 = c0s.empty() ? 1.0 : parse_double("kappa.c0", c0s);
  const double c1 = c1s.empty() ? 0.0 : parse_double("kappa.c1", c1s);
  if (kkind == "constant") {
    cfg.params.kappa = PenaltySpec::constant(c0);
  } else if (kkind == "affine") {
    cfg.params.kappa = PenaltySpec::affine(c0, c1);
  } else {
    throw ConfigParseError("kappa.kind must be 'constant' or 'affine', got '" +
                           kkind + "'");
  }

  std::string kind = take("kind");
  if (kind.empty()) kind = "price-impact";
  if (kind == "price-impact") {
    cfg.run_price_impact = true;
    cfg.run_nash = false;
  } else if (kind == "nash") {
    cfg.run_price_impact = false;
    cfg.run_nash = true;
  } else if (kind == "both") {
    cfg.run_price_impact = true;
    cfg.run_nash = true;
  } else {
    throw ConfigParseError("kind must be price-impact|nash|both, got '" +
                           kind + "'");
  }
  return cfg;
}

ScenarioConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigParseError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace mkteq

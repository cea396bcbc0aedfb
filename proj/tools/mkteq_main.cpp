#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mkteq/analytics.hpp"
#include "mkteq/coefficients.hpp"
#include "mkteq/curves.hpp"
#include "mkteq/io.hpp"
#include "mkteq/model.hpp"
#include "mkteq/simulate.hpp"

namespace {

using nlohmann::ordered_json;
using namespace mkteq;

constexpr const char* kVersion = "mkteq 1.0.0";

struct CommonOpts {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 20260823ull;
  bool seed_set = false;
  std::string kind;
  int paths = 0;
  int steps = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "scenario config file");
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--seed", opts.seed, "master seed")
      ->each([&](const std::string&) { opts.seed_set = true; });
  cmd->add_option("--kind", opts.kind, "equilibrium kind")
      ->check(CLI::IsMember({"price-impact", "nash", "both"}));
  cmd->add_option("--paths", opts.paths, "Monte Carlo paths")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--steps", opts.steps, "time-grid steps")
      ->check(CLI::PositiveNumber);
}

ScenarioConfig resolve_config(const CommonOpts& opts) {
  ScenarioConfig cfg;
  if (!opts.config_path.empty()) cfg = parse_config_file(opts.config_path);
  if (!opts.kind.empty()) {
    cfg.run_price_impact = opts.kind != "nash";
    cfg.run_nash = opts.kind != "price-impact";
  }
  if (opts.steps > 0) cfg.grid.n_steps = opts.steps;
  return cfg;
}

std::vector<EquilibriumKind> requested_kinds(const ScenarioConfig& cfg) {
  std::vector<EquilibriumKind> kinds;
  if (cfg.run_price_impact) kinds.push_back(EquilibriumKind::PriceImpact);
  if (cfg.run_nash) kinds.push_back(EquilibriumKind::Nash);
  return kinds;
}

ordered_json config_echo(const ScenarioConfig& cfg) {
  const ModelParams& p = cfg.params;
  ordered_json j;
  j["M"] = p.m_rebalancers;
  j["Mbar"] = p.m_trackers;
  j["sigma_a"] = p.sigma_a;
  j["sigma_w0"] = p.sigma_w0;
  j["gamma"] = p.gamma;
  j["alpha"] = p.alpha;
  j["B0"] = p.b0;
  j["kappa.kind"] =
      p.kappa.kind == PenaltySpec::Kind::Constant ? "constant" : "affine";
  j["kappa.c0"] = p.kappa.c0;
  j["kappa.c1"] = p.kappa.c1;
  j["grid.n_steps"] = cfg.grid.n_steps;
  std::string kind = "price-impact";
  if (cfg.run_price_impact && cfg.run_nash) kind = "both";
  else if (cfg.run_nash) kind = "nash";
  j["kind"] = kind;
  return j;
}

// Collects emitted files, hashes, and stage timings into manifest.json.
struct Emitter {
  explicit Emitter(std::string dir, std::string command)
      : out_dir(std::move(dir)) {
    manifest["command"] = std::move(command);
    manifest["version"] = kVersion;
  }

  void emit(const std::string& name, const std::string& text) {
    write_text_file(out_dir + "/" + name, text);
    files[name] = content_hash(text);
  }

  template <typename Fn>
  auto stage(const std::string& name, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      stages[name] = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    } else {
      auto result = fn();
      stages[name] = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start)
                         .count();
      return result;
    }
  }

  void finish() {
    manifest["stages_seconds"] = stages;
    manifest["files"] = files;
    write_text_file(out_dir + "/manifest.json", manifest.dump(2) + "\n");
  }

  std::string out_dir;
  ordered_json manifest;
  ordered_json stages = ordered_json::object();
  ordered_json files = ordered_json::object();
};

std::string kind_slug(EquilibriumKind kind) {
  return kind == EquilibriumKind::PriceImpact ? "price-impact" : "nash";
}

ordered_json identity_json(const IdentityReport& r) {
  ordered_json j;
  j["clearing_rel"] = r.clearing_rel;
  j["drift_match_rel"] = r.drift_match_rel;
  j["frame_equiv_rel"] = r.frame_equiv_rel;
  j["y_identity_abs"] = r.y_identity_abs;
  j["decomposition_abs"] = r.decomposition_abs;
  j["inverse_relation_abs"] = r.inverse_relation_abs;
  j["initial_price_abs"] = r.initial_price_abs;
  j["wealth_sum_abs"] = r.wealth_sum_abs;
  return j;
}

int cmd_solve(const CommonOpts& opts) {
  const ScenarioConfig cfg = resolve_config(opts);
  Emitter em(opts.out_dir, "solve");
  em.manifest["config"] = config_echo(cfg);
  ordered_json checks = ordered_json::object();
  for (EquilibriumKind kind : requested_kinds(cfg)) {
    const std::string slug = kind_slug(kind);
    const EquilibriumCurves curves = em.stage("solve_" + slug, [&] {
      return solve_curves(cfg.params, kind, cfg.grid);
    });
    em.emit("curves_" + slug + ".csv", curves_csv(curves));
    em.emit("holdings_" + slug + ".csv",
            holdings_csv(holdings_coeffs(curves, cfg.params)));
    em.emit("drift_" + slug + ".csv",
            drift_csv(drift_coeffs(curves, cfg.params)));
    const bool pi = kind == EquilibriumKind::PriceImpact;
    if (pi) em.emit("ortho_" + slug + ".csv",
                    ortho_csv(ortho_coeffs(curves, cfg.params)));
    const CrossCheckReport cc = explicit_cross_checks(curves, cfg.params, pi);
    ordered_json res;
    if (pi) res["b_residual"] = cc.b_residual;
    res["sigma_residual"] = cc.sigma_residual;
    res["a_residual"] = cc.a_residual;
    checks[slug] = res;
  }
  em.manifest["cross_checks"] = checks;
  em.finish();
  return 0;
}

int cmd_simulate(const CommonOpts& opts) {
  const ScenarioConfig cfg = resolve_config(opts);
  Emitter em(opts.out_dir, "simulate");
  em.manifest["config"] = config_echo(cfg);
  em.manifest["seed"] = opts.seed;
  ordered_json identities = ordered_json::object();
  for (EquilibriumKind kind : requested_kinds(cfg)) {
    const std::string slug = kind_slug(kind);
    const EquilibriumCurves curves =
        solve_curves(cfg.params, kind, cfg.grid);
    em.manifest["curve_input_hash_" + slug] = content_hash(curves_csv(curves));

    SimConfig sim;
    sim.n_paths = opts.paths > 0 ? opts.paths : 1000;
    sim.master_seed = opts.seed;
    sim.retention = RetentionMode::Series;
    const SimBatch batch = em.stage("simulate_" + slug, [&] {
      return simulate_paths(curves, cfg.params, sim);
    });
    em.emit("series_reb_" + slug + ".csv", series_csv(batch, batch.reb_theta));
    em.emit("series_trk_" + slug + ".csv", series_csv(batch, batch.trk_theta));
    em.emit("series_price_" + slug + ".csv", series_csv(batch, batch.price));

    SimConfig idcfg = sim;
    idcfg.n_paths = std::min(sim.n_paths, 200);
    idcfg.retention = RetentionMode::Full;
    const SimBatch idbatch = simulate_paths(curves, cfg.params, idcfg);
    identities[slug] = identity_json(verify_identities(idbatch));
  }
  em.manifest["identity_report"] = identities;
  em.finish();
  return 0;
}

int cmd_verify(const CommonOpts& opts) {
  const ScenarioConfig cfg = resolve_config(opts);
  Emitter em(opts.out_dir, "verify");
  em.manifest["config"] = config_echo(cfg);
  em.manifest["seed"] = opts.seed;
  const double dt = cfg.grid.dt();
  bool all_pass = true;
  ordered_json report = ordered_json::object();

  auto check = [&](ordered_json& j, const std::string& name, double value,
                   double tol) {
    const bool ok = value <= tol;
    all_pass = all_pass && ok;
    ordered_json row;
    row["value"] = value;
    row["tolerance"] = tol;
    row["pass"] = ok;
    j[name] = row;
    std::printf("%-24s %s  (%.3e <= %.3e)\n", name.c_str(),
                ok ? "pass" : "FAIL", value, tol);
  };

  for (EquilibriumKind kind : requested_kinds(cfg)) {
    const std::string slug = kind_slug(kind);
    std::printf("[%s]\n", slug.c_str());
    const EquilibriumCurves curves =
        solve_curves(cfg.params, kind, cfg.grid);
    SimConfig sim;
    sim.n_paths = opts.paths > 0 ? opts.paths : 1000;
    sim.master_seed = opts.seed;
    sim.retention = RetentionMode::Full;
    const SimBatch batch = em.stage("simulate_" + slug, [&] {
      return simulate_paths(curves, cfg.params, sim);
    });
    const IdentityReport r = verify_identities(batch);
    ordered_json j = ordered_json::object();
    check(j, "clearing_rel", r.clearing_rel, 1e-10);
    check(j, "drift_match_rel", r.drift_match_rel, 1e-10);
    check(j, "frame_equiv_rel", r.frame_equiv_rel, 1e-10);
    check(j, "y_identity_abs", r.y_identity_abs, 1e-10);
    check(j, "decomposition_abs", r.decomposition_abs, 2.0 * dt);
    check(j, "inverse_relation_abs", r.inverse_relation_abs, 2.0 * dt);
    check(j, "initial_price_abs", r.initial_price_abs, 1e-12);
    check(j, "wealth_sum_abs", r.wealth_sum_abs, 1e-8);

    const int filter_paths = std::max(10 * sim.n_paths, 10000);
    const FilterOracleReport fo = em.stage("filter_" + slug, [&] {
      return filter_oracle(cfg.params, curves, {0.25, 0.5, 0.75},
                           filter_paths, opts.seed);
    });
    double max_z = 0.0;
    for (const auto& cp : fo.checkpoints) max_z = std::max(max_z, cp.max_abs_z);
    check(j, "filter_max_abs_z", max_z, 3.0);
    report[slug] = j;
  }
  em.manifest["verify"] = report;
  em.manifest["pass"] = all_pass;
  em.finish();
  std::printf("verify: %s\n", all_pass ? "pass" : "FAIL");
  return all_pass ? 0 : 1;
}

int cmd_compare(const CommonOpts& opts) {
  ScenarioConfig cfg = resolve_config(opts);
  cfg.run_price_impact = true;
  cfg.run_nash = true;
  Emitter em(opts.out_dir, "compare");
  em.manifest["config"] = config_echo(cfg);
  const EquilibriumCurves pi =
      solve_curves(cfg.params, EquilibriumKind::PriceImpact, cfg.grid);
  const EquilibriumCurves na =
      solve_curves(cfg.params, EquilibriumKind::Nash, cfg.grid);
  const HoldingsCoeffs hp = holdings_coeffs(pi, cfg.params);
  const HoldingsCoeffs hn = holdings_coeffs(na, cfg.params);
  const DriftCoeffs dp = drift_coeffs(pi, cfg.params);
  const DriftCoeffs dn = drift_coeffs(na, cfg.params);

  struct Row {
    std::string name;
    const std::vector<double>*p, *n;
  };
  const std::vector<Row> rows = {
      {"reb_on_ai", &hp.reb_on_ai, &hn.reb_on_ai},
      {"reb_on_qi", &hp.reb_on_qi, &hn.reb_on_qi},
      {"reb_on_eta", &hp.reb_on_eta, &hn.reb_on_eta},
      {"reb_on_Y", &hp.reb_on_Y, &hn.reb_on_Y},
      {"trk_on_eta", &hp.trk_on_eta, &hn.trk_on_eta},
      {"trk_on_w", &hp.trk_on_w, &hn.trk_on_w},
      {"trk_on_aSigma", &hp.trk_on_aSigma, &hn.trk_on_aSigma},
      {"drift_on_eta", &dp.trk_on_eta, &dn.trk_on_eta},
      {"drift_on_w", &dp.trk_on_w, &dn.trk_on_w},
      {"drift_on_aSigma", &dp.trk_on_aSigma, &dn.trk_on_aSigma},
  };
  std::string csv = "loading,max_rel_diff,sign_agree\n";
  std::string summary;
  bool all_signs = true;
  for (const Row& row : rows) {
    double scale = 0.0, diff = 0.0;
    for (std::size_t k = 0; k < row.p->size(); ++k) {
      const double a = (*row.p)[k], b = (*row.n)[k];
      scale = std::max(scale, std::abs(a));
      diff = std::max(diff, std::abs(a - b));
    }
    // Values within 1% of the loading's peak are treated as zero: loadings
    // that cross zero do so at marginally different times in the two
    // equilibria.
    const double dead_band = 0.01 * scale;
    bool signs = true;
    for (std::size_t k = 0; k < row.p->size(); ++k) {
      const double a = (*row.p)[k], b = (*row.n)[k];
      if (a * b < 0.0 && std::min(std::abs(a), std::abs(b)) > dead_band) {
        signs = false;
      }
    }
    const double rel = scale > 0.0 ? diff / scale : diff;
    all_signs = all_signs && signs;
    csv += row.name + "," + format_double(rel) + "," +
           (signs ? "true" : "false") + "\n";
    summary += row.name + ": max relative difference " + format_double(rel) +
               ", signs " + (signs ? "agree" : "DISAGREE") + "\n";
  }
  em.emit("compare.csv", csv);
  em.emit("compare_summary.txt", summary);
  em.manifest["sign_patterns_agree"] = all_signs;
  em.finish();
  std::fputs(summary.c_str(), stdout);
  return 0;
}

// Caption parameterizations shared by the loadings/correlation figure sets.
struct FigParam {
  std::string name;
  double gamma, sigma_w0;
};

const std::vector<FigParam> kFigParams = {
    {"gamma0.5_sw0.1", 0.5, 0.1},
    {"gamma0.5_sw1", 0.5, 1.0},
    {"gamma1_sw0.1", 1.0, 0.1},
    {"gamma1_sw1", 1.0, 1.0},
};

ModelParams figure_base_params() {
  ModelParams p;  // sigma_a = 1, M = 5, Mbar = 10, alpha = 0, B0 = -0.2
  p.kappa = PenaltySpec::constant(1.0);
  return p;
}

int cmd_figures(const CommonOpts& opts) {
  Emitter em(opts.out_dir, "figures");
  const TimeGrid grid{opts.steps > 0 ? opts.steps : 2000};
  em.manifest["grid.n_steps"] = grid.n_steps;
  em.manifest["seed"] = opts.seed;

  std::vector<double> t(grid.n_nodes());
  for (int k = 0; k < grid.n_nodes(); ++k) t[k] = grid.node(k);
  // Small bandwidth keeps the finite-h estimate clear of the isolated pole
  // where the holdings' diffusion loading crosses zero.
  const double h = 4.0 / grid.n_steps;
  std::vector<double> tc;
  for (double s = 0.0; s <= 1.0 - 2.0 * h + 1e-12; s += 0.01) tc.push_back(s);

  std::vector<std::string> names;
  // panel name -> columns across parameterizations
  std::map<std::string, std::vector<std::vector<double>>> panels;
  std::map<std::string, std::vector<std::vector<double>>> corr_panels;
  std::vector<std::vector<double>> variance_cols;

  em.stage("loadings_and_correlations", [&] {
    for (const FigParam& fp : kFigParams) {
      names.push_back(fp.name);
      ModelParams p = figure_base_params();
      p.gamma = fp.gamma;
      p.sigma_w0 = fp.sigma_w0;
      const EquilibriumCurves curves =
          solve_curves(p, EquilibriumKind::PriceImpact, grid);
      const OrthoCoeffs o = ortho_coeffs(curves, p);
      panels["fig1A"].push_back(o.reb_on_u);
      panels["fig1B"].push_back(o.trk_on_aSigma);
      panels["fig1C"].push_back(o.reb_on_w0);
      panels["fig1D"].push_back(o.trk_on_w0);
      panels["fig1E"].push_back(o.reb_on_ai);
      panels["fig3A"].push_back(o.rdrift_on_u);
      panels["fig3B"].push_back(o.drift_on_aSigma);
      panels["fig3C"].push_back(o.rdrift_on_w0);
      panels["fig3D"].push_back(o.drift_on_w0);
      panels["fig3E"].push_back(o.rdrift_on_ai);
      corr_panels["fig2A"].push_back(
          trading_autocorrelation_exact(curves, p, SeriesKind::Rebalancer, h,
                                        tc)
              .estimate);
      corr_panels["fig2B"].push_back(
          trading_autocorrelation_exact(curves, p, SeriesKind::Tracker, h, tc)
              .estimate);
      corr_panels["fig4A"].push_back(
          price_autocorrelation_exact(curves, p, h, tc).estimate);
      variance_cols.push_back(drift_variance_curve(curves, p));
    }
  });
  for (const auto& [name, cols] : panels) {
    em.emit(name + ".csv", panel_csv("t", t, names, cols));
  }
  for (const auto& [name, cols] : corr_panels) {
    em.emit(name + ".csv", panel_csv("t", tc, names, cols));
  }
  em.emit("fig4B.csv", panel_csv("t", t, names, variance_cols));

  // Value-function panels: M = Mbar = 10, alpha = -0.1, B0 = -1; panel A has
  // sigma_w0 = 1, panel B has sigma_w0 = 0.1, each with gamma in {1, 0.5}.
  em.stage("value_function", [&] {
    const int vf_paths = opts.paths > 0 ? opts.paths : 20000;
    em.manifest["value_function_paths"] = vf_paths;
    std::vector<double> a_grid;
    for (double a = -6.0; a <= 6.0 + 1e-12; a += 0.5) a_grid.push_back(a);
    const TimeGrid vf_grid{std::min(grid.n_steps, 1000)};
    for (const auto& [panel, sw] :
         std::vector<std::pair<std::string, double>>{{"fig6A", 1.0},
                                                     {"fig6B", 0.1}}) {
      std::vector<std::string> cols = {"gamma1", "gamma0.5"};
      std::vector<std::vector<double>> js;
      for (double g : {1.0, 0.5}) {
        ModelParams p;
        p.m_rebalancers = 10;
        p.m_trackers = 10;
        p.alpha = -0.1;
        p.b0 = -1.0;
        p.gamma = g;
        p.sigma_w0 = sw;
        p.kappa = PenaltySpec::constant(1.0);
        const EquilibriumCurves curves =
            solve_curves(p, EquilibriumKind::PriceImpact, vf_grid);
        js.push_back(
            value_function(p, curves, a_grid, vf_paths, opts.seed).j);
      }
      em.emit(panel + ".csv", panel_csv("a_i", a_grid, cols, js));
    }
  });
  em.finish();
  return 0;
}

int cmd_value_function(const CommonOpts& opts) {
  const ScenarioConfig cfg = resolve_config(opts);
  Emitter em(opts.out_dir, "value-function");
  em.manifest["config"] = config_echo(cfg);
  em.manifest["seed"] = opts.seed;
  const EquilibriumCurves curves =
      solve_curves(cfg.params, EquilibriumKind::PriceImpact, cfg.grid);
  std::vector<double> a_grid;
  const double sa = cfg.params.sigma_a;
  for (double a = -6.0 * sa; a <= 6.0 * sa + 1e-12; a += 0.5 * sa) {
    a_grid.push_back(a);
  }
  const int n_paths = opts.paths > 0 ? opts.paths : 20000;
  ValueSurface surface = em.stage("value_function", [&] {
    return value_function(cfg.params, curves, a_grid, n_paths, opts.seed);
  });
  rebalancing_cost(surface);
  em.emit("value_surface.csv", surface_csv(surface));
  em.manifest["n_paths"] = n_paths;
  em.manifest["fit_r2"] = surface.fit_r2;
  em.manifest["fit_c2"] = surface.fit_c2;
  em.finish();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"equilibrium curve solver, simulator, and figure pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  CommonOpts opts;
  CLI::App* solve = app.add_subcommand("solve", "solve equilibrium curves");
  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo paths");
  CLI::App* figures = app.add_subcommand("figures", "figure datasets");
  CLI::App* verify = app.add_subcommand("verify", "identity battery");
  CLI::App* compare = app.add_subcommand("compare", "equilibria comparison");
  CLI::App* value_fn =
      app.add_subcommand("value-function", "rebalancer value surface");
  for (CLI::App* cmd : {solve, simulate, figures, verify, compare, value_fn}) {
    add_common(cmd, opts);
  }

  CLI11_PARSE(app, argc, argv);
  try {
    if (solve->parsed()) return cmd_solve(opts);
    if (simulate->parsed()) return cmd_simulate(opts);
    if (figures->parsed()) return cmd_figures(opts);
    if (verify->parsed()) return cmd_verify(opts);
    if (compare->parsed()) return cmd_compare(opts);
    if (value_fn->parsed()) return cmd_value_function(opts);
  } catch (const InvalidParams& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    for (const auto& v : e.violations) {
      std::fprintf(stderr, "  %s: %s\n", to_string(v.code).c_str(),
                   v.message.c_str());
    }
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

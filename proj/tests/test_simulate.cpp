#include <cmath>
#include <cstdint>

#include "doctest.h"
#include "mkteq/curves.hpp"
#include "mkteq/simulate.hpp"

using namespace mkteq;

namespace {

ModelParams fig1_params() { return ModelParams{}; }

SimBatch run_batch(EquilibriumKind kind, SimConfig cfg,
                   int n_steps = 2000) {
  const ModelParams p = fig1_params();
  const auto c = solve_curves(p, kind, TimeGrid{n_steps});
  return simulate_paths(c, p, cfg);
}

}  // namespace

TEST_CASE("primitive draws are deterministic in the master seed") {
  const ModelParams p = fig1_params();
  const auto a = draw_primitives(p, TimeGrid{100}, 8, 42);
  const auto b = draw_primitives(p, TimeGrid{100}, 8, 42);
  const auto c = draw_primitives(p, TimeGrid{100}, 8, 43);
  REQUIRE(a.size() == 8);
  CHECK(a[3].targets == b[3].targets);
  CHECK(a[3].w0 == b[3].w0);
  CHECK(a[3].dw == b[3].dw);
  CHECK(a[3].w0 != c[3].w0);
  // Prefix stability: path p's draw does not depend on the batch size.
  const auto d = draw_primitives(p, TimeGrid{100}, 4, 42);
  CHECK(a[3].targets == d[3].targets);
  CHECK(a[3].dw == d[3].dw);
}

TEST_CASE("simulation output is deterministic and thread-count independent") {
  SimConfig cfg;
  cfg.n_paths = 64;
  cfg.retention = RetentionMode::Series;
  const auto a = run_batch(EquilibriumKind::PriceImpact, cfg, 400);
  const auto b = run_batch(EquilibriumKind::PriceImpact, cfg, 400);
  cfg.serial = true;
  const auto s = run_batch(EquilibriumKind::PriceImpact, cfg, 400);
  REQUIRE(a.keep_nodes == b.keep_nodes);
  for (std::size_t k = 0; k < a.keep_nodes.size(); ++k) {
    CHECK(a.price[k] == b.price[k]);    // bitwise
    CHECK(a.price[k] == s.price[k]);    // parallel == serial reference
    CHECK(a.reb_theta[k] == s.reb_theta[k]);
    CHECK(a.trk_theta[k] == s.trk_theta[k]);
  }
  CHECK(a.mean_price == s.mean_price);
  CHECK(a.var_reb == s.var_reb);
}

TEST_CASE("structural identities hold on simulated paths") {
  SimConfig cfg;
  cfg.n_paths = 100;
  cfg.retention = RetentionMode::Full;
  for (const auto kind :
       {EquilibriumKind::PriceImpact, EquilibriumKind::Nash}) {
    const auto batch = run_batch(kind, cfg);
    const auto rep = verify_identities(batch);
    CHECK(rep.clearing_rel <= 1e-10);
    CHECK(rep.drift_match_rel <= 1e-10);
    CHECK(rep.frame_equiv_rel <= 1e-10);
    CHECK(rep.y_identity_abs <= 1e-10);
    CHECK(rep.initial_price_abs <= 1e-12);
    CHECK(rep.wealth_sum_abs <= 1e-8);
    // Discretization-limited residuals at dt = 5e-4.
    CHECK(rep.decomposition_abs <= 1e-3);
    CHECK(rep.inverse_relation_abs <= 1e-3);
  }
}

TEST_CASE("discretization residuals shrink at first order") {
  SimConfig cfg;
  cfg.n_paths = 50;
  cfg.retention = RetentionMode::Full;
  const auto coarse = run_batch(EquilibriumKind::PriceImpact, cfg, 1000);
  const auto fine = run_batch(EquilibriumKind::PriceImpact, cfg, 4000);
  const auto rc = verify_identities(coarse);
  const auto rf = verify_identities(fine);
  CHECK(rf.decomposition_abs <= rc.decomposition_abs / 2.5);
  CHECK(rf.inverse_relation_abs <= rc.inverse_relation_abs / 2.5);
}

TEST_CASE("exact transitions remove the filter-recursion error") {
  SimConfig cfg;
  cfg.n_paths = 50;
  cfg.retention = RetentionMode::Full;
  cfg.exact_transitions = true;
  const auto batch = run_batch(EquilibriumKind::PriceImpact, cfg, 1000);
  const auto rep = verify_identities(batch);
  // eta and q_i follow their explicit solutions, so the decomposition and
  // inverse relations hold to quadrature accuracy rather than O(dt).
  CHECK(rep.decomposition_abs <= 1e-6);
  CHECK(rep.inverse_relation_abs <= 1e-6);
}

TEST_CASE("retention guards") {
  SimConfig cfg;
  cfg.n_paths = 2000;
  cfg.retention = RetentionMode::Full;
  cfg.memory_budget = std::size_t{1} << 20;  // 1 MiB cannot hold full paths
  const ModelParams p = fig1_params();
  const auto c = solve_curves(p, EquilibriumKind::PriceImpact, TimeGrid{2000});
  CHECK_THROWS_AS(simulate_paths(c, p, cfg), RetentionOverflow);

  SimConfig bad;
  bad.n_paths = 4;
  bad.keep_nodes = {0, 5000};  // beyond the grid
  CHECK_THROWS_AS(simulate_paths(c, p, bad), std::exception);
}

TEST_CASE("identity report requires full retention") {
  SimConfig cfg;
  cfg.n_paths = 16;
  cfg.retention = RetentionMode::Series;
  const auto batch = run_batch(EquilibriumKind::PriceImpact, cfg, 400);
  CHECK_THROWS_AS(verify_identities(batch), std::exception);
}

TEST_CASE("filter recursion matches the regression oracle") {
  const ModelParams p = fig1_params();
  const auto c = solve_curves(p, EquilibriumKind::PriceImpact, TimeGrid{1000});
  const auto rep = filter_oracle(p, c, {0.5}, 20000, 99);
  REQUIRE(rep.checkpoints.size() == 1);
  CHECK(rep.checkpoints[0].max_abs_z <= 4.0);
  CHECK(std::abs(rep.checkpoints[0].mean_q - rep.checkpoints[0].mean_u) <=
        0.1);
  CHECK_THROWS_AS(filter_oracle(p, c, {0.5}, 150, 99), InsufficientPaths);
}

TEST_CASE("static-learning paths keep the estimate frozen") {
  ModelParams p = fig1_params();
  p.sigma_w0 = 0.0;  // q_{i,0} already equals a_Sigma - a_i
  const auto c = solve_curves(p, EquilibriumKind::PriceImpact, TimeGrid{400});
  SimConfig cfg;
  cfg.n_paths = 8;
  cfg.retention = RetentionMode::Full;
  const auto batch = simulate_paths(c, p, cfg);
  for (const auto& rec : batch.full) {
    double a_sigma = 0.0;
    for (double a : rec.targets) a_sigma += a;
    for (std::size_t i = 0; i < rec.q.size(); ++i) {
      const double u = a_sigma - rec.targets[i];
      for (double qv : rec.q[i]) {
        CHECK(qv == doctest::Approx(u).epsilon(1e-9));
      }
    }
  }
}

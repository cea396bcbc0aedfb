#include "mkteq/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "mkteq/rng.hpp"

namespace mkteq {

namespace {

std::vector<int> default_keep_nodes(const TimeGrid& grid) {
  const int n_marks = std::min(40, grid.n_steps);
  std::vector<int> nodes;
  nodes.reserve(n_marks + 1);
  for (int j = 0; j <= n_marks; ++j) {
    nodes.push_back(static_cast<int>(
        std::llround(static_cast<double>(j) * grid.n_steps / n_marks)));
  }
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return nodes;
}

// One path's mutable state plus the stepping rule shared by every consumer.
struct PathWorker {
  const ModelParams& p;
  const EquilibriumCurves& c;  // stepping curves
  const HoldingsCoeffs& h;
  const DriftCoeffs& d;
  bool exact;
  double phi;
  int m;

  std::vector<double> targets;
  double a_sigma = 0.0, w0 = 0.0;
  double y = 0.0, eta = 0.0, w = 0.0, price = 0.0, stoch_i = 0.0;
  double y0 = 0.0, eta0 = 0.0;
  std::vector<double> q, q0;

  PathWorker(const ModelParams& params, const EquilibriumCurves& curves,
             const HoldingsCoeffs& hold, const DriftCoeffs& drift,
             bool exact_transitions)
      : p(params),
        c(curves),
        h(hold),
        d(drift),
        exact(exact_transitions),
        phi(filter_gain0(params)),
        m(params.m_rebalancers),
        targets(m),
        q(m),
        q0(m) {}

  void init(const std::vector<double>& draw_targets, double draw_w0) {
    targets = draw_targets;
    w0 = draw_w0;
    a_sigma = 0.0;
    for (double a : targets) a_sigma += a;
    w = w0;
    y = w0 - p.b0 * a_sigma;
    y0 = y;
    eta = -m * phi * y;
    eta0 = eta;
    for (int i = 0; i < m; ++i) {
      q[i] = -phi * (y + p.b0 * targets[i]);
      q0[i] = q[i];
    }
    price = y;
    stoch_i = 0.0;
  }

  double theta_reb(int k, int i) const {
    return h.reb_on_ai[k] * targets[i] + h.reb_on_qi[k] * q[i] +
           h.reb_on_eta[k] * eta + h.reb_on_Y[k] * y;
  }

  double theta_trk(int k) const {
    return h.trk_on_eta[k] * eta + h.trk_on_w[k] * w +
           h.trk_on_aSigma[k] * a_sigma;
  }

  double tracker_drift(int k) const {
    return d.trk_on_eta[k] * eta + d.trk_on_w[k] * w +
           d.trk_on_aSigma[k] * a_sigma;
  }

  double rebalancer_drift(int k, int i) const {
    return d.reb_on_eta[k] * eta + d.reb_on_Y[k] * y +
           d.reb_on_aiqi[k] * (targets[i] + q[i]);
  }

  // Advance node k -> k+1 with shock increment dwc.
  void step(int k, double dwc, double dt) {
    const double bp = c.b_prime[k];
    const double sig = c.sigma_filt[k];
    const double dy = dwc - bp * a_sigma * dt;
    const double dprice = tracker_drift(k) * dt + p.gamma * dwc;
    if (exact) {
      stoch_i += bp * sig / c.f1[k] * dwc;
      const double f1n = c.f1[k + 1];
      const double f2n = c.f2[k + 1];
      eta = f1n * (eta0 + m * f2n * a_sigma - m * stoch_i);
      for (int i = 0; i < m; ++i) {
        q[i] = f1n * (q0[i] + f2n * (a_sigma - targets[i]) - stoch_i);
      }
      w += dwc;
      y = y0 + (w - w0) - (c.b[k + 1] - c.b[0]) * a_sigma;
    } else {
      const double eta_new =
          eta - bp * bp * sig * eta * dt - m * bp * sig * dy;
      for (int i = 0; i < m; ++i) {
        const double dwi = dwc - bp * (a_sigma - targets[i] - q[i]) * dt;
        q[i] -= bp * sig * dwi;
      }
      eta = eta_new;
      y += dy;
      w += dwc;
    }
    price += dprice;
  }
};

std::size_t full_record_bytes(const ModelParams& p, const TimeGrid& grid) {
  const std::size_t n = grid.n_nodes();
  const std::size_t m = p.m_rebalancers;
  const std::size_t doubles =
      m + grid.n_steps + (4 + 2 * m + 2) * n;
  return doubles * sizeof(double) + 1024;
}

}  // namespace

std::vector<PrimitiveDraw> draw_primitives(const ModelParams& params,
                                           const TimeGrid& grid, int n_paths,
                                           std::uint64_t master_seed) {
  if (n_paths < 1) throw std::invalid_argument("n_paths must be >= 1");
  const double sqrt_dt = std::sqrt(grid.dt());
  std::vector<PrimitiveDraw> out(n_paths);
  for (int path = 0; path < n_paths; ++path) {
    PrimitiveDraw& draw = out[path];
    draw.seed = path_seed(master_seed, path);
    PathRng rng(draw.seed);
    draw.targets.resize(params.m_rebalancers);
    for (double& a : draw.targets) a = params.sigma_a * rng.normal();
    draw.w0 = params.sigma_w0 * rng.normal();
    draw.dw.resize(grid.n_steps);
    for (double& x : draw.dw) x = sqrt_dt * rng.normal();
  }
  return out;
}

SimBatch simulate_paths(const EquilibriumCurves& curves,
                        const ModelParams& params, const SimConfig& config) {
  if (curves.b.empty()) {
    throw CurvesMissing("simulate_paths requires solved curves");
  }
  require_valid(params, curves.kind);
  if (config.n_paths < 1) throw std::invalid_argument("n_paths must be >= 1");

  SimBatch batch;
  batch.params = params;
  batch.kind = curves.kind;
  batch.grid = curves.grid;
  batch.config = config;
  batch.ref_curves = curves;
  batch.step_curves =
      config.exact_transitions
          ? curves
          : solve_curves(params, curves.kind, curves.grid, OdeScheme::Euler);
  batch.holdings = holdings_coeffs(batch.step_curves, params);
  batch.drifts = drift_coeffs(batch.step_curves, params);
  batch.keep_nodes = config.keep_nodes.empty() ? default_keep_nodes(curves.grid)
                                               : config.keep_nodes;
  for (int node : batch.keep_nodes) {
    if (node < 0 || node >= curves.grid.n_nodes()) {
      throw std::invalid_argument("keep node outside grid");
    }
  }

  const int n_paths = config.n_paths;
  const int n_kept = static_cast<int>(batch.keep_nodes.size());
  std::size_t bytes =
      static_cast<std::size_t>(3) * n_kept * n_paths * sizeof(double);
  if (config.retention == RetentionMode::Full) {
    bytes += static_cast<std::size_t>(n_paths) *
             full_record_bytes(params, curves.grid);
  }
  if (bytes > config.memory_budget) {
    throw RetentionOverflow("retention needs " + std::to_string(bytes) +
                            " bytes, budget " +
                            std::to_string(config.memory_budget));
  }

  batch.reb_theta.assign(n_kept, std::vector<double>(n_paths));
  batch.trk_theta.assign(n_kept, std::vector<double>(n_paths));
  batch.price.assign(n_kept, std::vector<double>(n_paths));
  if (config.retention == RetentionMode::Full) {
    batch.full.resize(n_paths);
  }

  const int n_nodes = curves.grid.n_nodes();
  const int n_steps = curves.grid.n_steps;
  const double dt = curves.grid.dt();
  const double sqrt_dt = std::sqrt(dt);
  const int m = params.m_rebalancers;
  const double mbar = params.m_trackers;

  auto run_path = [&](int path) {
    PathWorker worker(params, batch.step_curves, batch.holdings, batch.drifts,
                      config.exact_transitions);
    PathRng rng(path_seed(config.master_seed, path));
    std::vector<double> targets(m);
    for (double& a : targets) a = params.sigma_a * rng.normal();
    const double w0 = params.sigma_w0 * rng.normal();
    worker.init(targets, w0);

    PathRecord* rec = nullptr;
    if (config.retention == RetentionMode::Full) {
      rec = &batch.full[path];
      rec->targets = targets;
      rec->w0 = w0;
      rec->dw.resize(n_steps);
      rec->y.resize(n_nodes);
      rec->eta.resize(n_nodes);
      rec->w.resize(n_nodes);
      rec->price.resize(n_nodes);
      rec->q.assign(m, std::vector<double>(n_nodes));
      rec->reb_holding.assign(m, std::vector<double>(n_nodes));
      rec->trk_holding.resize(n_nodes);
      rec->wealth_sum.resize(n_nodes);
    }

    double wealth_sum = 0.0;
    int kept = 0;
    for (int k = 0; k < n_nodes; ++k) {
      if (rec) {
        rec->y[k] = worker.y;
        rec->eta[k] = worker.eta;
        rec->w[k] = worker.w;
        rec->price[k] = worker.price;
        for (int i = 0; i < m; ++i) {
          rec->q[i][k] = worker.q[i];
          rec->reb_holding[i][k] = worker.theta_reb(k, i);
        }
        rec->trk_holding[k] = worker.theta_trk(k);
        rec->wealth_sum[k] = wealth_sum;
      }
      if (kept < n_kept && batch.keep_nodes[kept] == k) {
        batch.reb_theta[kept][path] = worker.theta_reb(k, 0);
        batch.trk_theta[kept][path] = worker.theta_trk(k);
        batch.price[kept][path] = worker.price;
        ++kept;
      }
      if (k == n_nodes - 1) break;

      const double dwc = sqrt_dt * rng.normal();
      if (rec) rec->dw[k] = dwc;
      double theta_total = mbar * worker.theta_trk(k);
      for (int i = 0; i < m; ++i) theta_total += worker.theta_reb(k, i);
      const double price_before = worker.price;
      worker.step(k, dwc, dt);
      wealth_sum += theta_total * (worker.price - price_before);
    }
  };

#ifdef MKTEQ_HAVE_OPENMP
  if (!config.serial) {
#pragma omp parallel for schedule(dynamic, 16)
    for (int path = 0; path < n_paths; ++path) run_path(path);
  } else {
    for (int path = 0; path < n_paths; ++path) run_path(path);
  }
#else
  for (int path = 0; path < n_paths; ++path) run_path(path);
#endif

  batch.mean_reb.resize(n_kept);
  batch.var_reb.resize(n_kept);
  batch.mean_trk.resize(n_kept);
  batch.var_trk.resize(n_kept);
  batch.mean_price.resize(n_kept);
  batch.var_price.resize(n_kept);
  auto summarize = [n_paths](const std::vector<double>& xs, double& mean,
                             double& var) {
    double s = 0.0;
    for (double x : xs) s += x;
    mean = s / n_paths;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    var = n_paths > 1 ? ss / (n_paths - 1) : 0.0;
  };
  for (int j = 0; j < n_kept; ++j) {
    summarize(batch.reb_theta[j], batch.mean_reb[j], batch.var_reb[j]);
    summarize(batch.trk_theta[j], batch.mean_trk[j], batch.var_trk[j]);
    summarize(batch.price[j], batch.mean_price[j], batch.var_price[j]);
  }
  return batch;
}

IdentityReport verify_identities(const SimBatch& batch) {
  if (batch.full.empty()) {
    throw std::invalid_argument(
        "verify_identities requires Full retention");
  }
  const ModelParams& p = batch.params;
  const EquilibriumCurves& sc = batch.step_curves;
  const EquilibriumCurves& rc = batch.ref_curves;
  const PerceptionCoeffs pc = perception_coeffs(sc, p);
  const double phi = filter_gain0(p);
  const int m = p.m_rebalancers;
  const double mbar = p.m_trackers;
  const double n_traders = p.n_traders();
  const int n_nodes = batch.grid.n_nodes();
  const double dt = batch.grid.dt();
  const double gamma = p.gamma;
  const bool nash = batch.kind == EquilibriumKind::Nash;

  IdentityReport rep;
  double max_theta = 0.0, max_clear = 0.0;
  double max_drift_resid = 0.0, max_drift_scale = 0.0;
  double max_frame_resid = 0.0, max_frame_scale = 0.0;

  for (const PathRecord& rec : batch.full) {
    double a_sigma = 0.0;
    for (double a : rec.targets) a_sigma += a;
    rep.initial_price_abs =
        std::max(rep.initial_price_abs, std::abs(rec.price[0] - rec.y[0]));
    for (int k = 0; k < n_nodes; ++k) {
      const double eta = rec.eta[k];
      const double y = rec.y[k];
      const double w = rec.w[k];
      const double kap = kappa_eval(p.kappa, batch.grid.node(k));
      const double bp = sc.b_prime[k];
      const double theta_j = rec.trk_holding[k];

      double theta_sum = mbar * theta_j;
      double q_sum = 0.0;
      for (int i = 0; i < m; ++i) {
        theta_sum += rec.reb_holding[i][k];
        q_sum += rec.q[i][k];
        max_theta = std::max(max_theta, std::abs(rec.reb_holding[i][k]));
      }
      max_theta = std::max(max_theta, std::abs(theta_j));
      max_clear = std::max(max_clear, std::abs(theta_sum));

      rep.y_identity_abs = std::max(
          rep.y_identity_abs, std::abs(y - (w - sc.b[k] * a_sigma)));
      // Mixed absolute/relative scale: the Euler-vs-reference gap grows
      // linearly in the drawn target sizes.
      const double draw_scale = 1.0 + std::abs(a_sigma) + std::abs(rec.w0);
      rep.decomposition_abs = std::max(
          rep.decomposition_abs,
          std::abs(q_sum - eta - rc.a[k] * a_sigma) / draw_scale);
      for (int i = 0; i < m; ++i) {
        const double q_inv =
            eta / m -
            rc.f1[k] * (phi * p.b0 + rc.f2[k]) * rec.targets[i];
        rep.inverse_relation_abs =
            std::max(rep.inverse_relation_abs,
                     std::abs(rec.q[i][k] - q_inv) / draw_scale);
      }
      rep.wealth_sum_abs =
          std::max(rep.wealth_sum_abs, std::abs(rec.wealth_sum[k]));

      // Perception drift matching: each rebalancer's rewritten perceived
      // drift must equal the common tracker-side expression.
      double rhs;
      if (!nash) {
        rhs = pc.fbar3[k] * eta + pc.fbar4[k] * a_sigma + pc.fbar5[k] * w +
              p.alpha * theta_j;
      } else {
        const double z_j =
            2.0 * (p.alpha - kap) / (n_traders - 1.0) * theta_j -
            (m * pc.mu3[k] + pc.mu2[k]) / (n_traders - 1.0) * eta -
            (mbar - 1.0) * (2.0 * kap + pc.mubar5[k]) / (n_traders - 1.0) *
                w -
            (sc.a[k] * pc.mu2[k] + (mbar - 1.0) * pc.mubar4[k] + 2.0 * kap +
             pc.mu1[k]) /
                (n_traders - 1.0) * a_sigma;
        rhs = z_j + pc.nubar3[k] * eta + pc.nubar4[k] * a_sigma +
              pc.nubar5[k] * w + p.alpha * theta_j;
      }
      max_drift_scale = std::max(max_drift_scale, std::abs(rhs));
      for (int i = 0; i < m; ++i) {
        const double ai = rec.targets[i];
        const double qi = rec.q[i][k];
        const double theta_i = rec.reb_holding[i][k];
        double lhs;
        if (!nash) {
          lhs = pc.f0[k] * y + pc.f1[k] * ai + pc.f2[k] * qi +
                pc.f3[k] * eta + p.alpha * theta_i -
                bp * (a_sigma - ai - qi) * gamma;
        } else {
          const double z_i =
              2.0 * (p.alpha - kap) / (n_traders - 1.0) * theta_i +
              (2.0 * kap + pc.mu1[k]) / (n_traders - 1.0) * ai +
              pc.mu2[k] / (n_traders - 1.0) * qi -
              ((m - 1.0) * pc.mu3[k] + pc.mu2[k]) / (n_traders - 1.0) * eta -
              mbar * (2.0 * kap + pc.mubar5[k]) / (n_traders - 1.0) * y;
          lhs = pc.nu0[k] * z_i + pc.nu1[k] * ai + pc.nu2[k] * qi +
                pc.nu3[k] * eta + p.alpha * theta_i -
                bp * (a_sigma - ai - qi) * gamma;
        }
        max_drift_resid = std::max(max_drift_resid, std::abs(lhs - rhs));
      }

      // Frame equivalence of realized price increments.
      if (k < n_nodes - 1) {
        const double ds = rec.price[k + 1] - rec.price[k];
        max_frame_scale = std::max(max_frame_scale, std::abs(ds));
        for (int i = 0; i < m; ++i) {
          const double ai = rec.targets[i];
          const double qi = rec.q[i][k];
          const double dwi =
              rec.dw[k] - bp * (a_sigma - ai - qi) * dt;
          const double drift_i = batch.drifts.reb_on_eta[k] * eta +
                                 batch.drifts.reb_on_Y[k] * y +
                                 batch.drifts.reb_on_aiqi[k] * (ai + qi);
          const double ds_reb = drift_i * dt + gamma * dwi;
          max_frame_resid =
              std::max(max_frame_resid, std::abs(ds - ds_reb));
        }
      }
    }
  }

  rep.clearing_rel = max_theta > 0.0 ? max_clear / max_theta : max_clear;
  rep.drift_match_rel =
      max_drift_resid / std::max(max_drift_scale, 1e-300);
  rep.frame_equiv_rel = max_frame_resid / std::max(max_frame_scale, 1e-300);
  return rep;
}

FilterOracleReport filter_oracle(const ModelParams& params,
                                 const EquilibriumCurves& curves,
                                 const std::vector<double>& t_checkpoints,
                                 int n_paths, std::uint64_t master_seed,
                                 int n_bins, double se_ceiling) {
  if (curves.b.empty()) throw CurvesMissing("filter_oracle requires curves");
  if (n_paths < 100) throw InsufficientPaths("need at least 100 paths");
  const EquilibriumCurves sc =
      solve_curves(params, curves.kind, curves.grid, OdeScheme::Euler);
  const double phi = filter_gain0(params);
  const int m = params.m_rebalancers;
  const double dt = curves.grid.dt();
  const double sqrt_dt = std::sqrt(dt);
  const int n_steps = curves.grid.n_steps;

  struct CkptAccum {
    int node = 0;
    double t = 0.0;
    int n_features = 0;
    std::vector<double> xtx;  // row-major symmetric
    std::vector<double> xty;
    double yty = 0.0;
    double sum_q = 0.0, sum_u = 0.0;
  };
  std::vector<CkptAccum> acc;
  for (double t : t_checkpoints) {
    CkptAccum a;
    a.t = t;
    a.node = static_cast<int>(std::llround(t * n_steps));
    if (a.node < 1 || a.node > n_steps) {
      throw OutOfDomain("checkpoint outside (0, 1]");
    }
    a.n_features = 2 + n_bins;  // intercept, Y_{i,0}, binned increments
    a.xtx.assign(a.n_features * a.n_features, 0.0);
    a.xty.assign(a.n_features, 0.0);
    acc.push_back(a);
  }

  std::vector<double> feats;
  std::vector<double> dyi(n_steps);
  for (int path = 0; path < n_paths; ++path) {
    PathRng rng(path_seed(master_seed, path));
    std::vector<double> targets(m);
    for (double& a : targets) a = params.sigma_a * rng.normal();
    const double w0 = params.sigma_w0 * rng.normal();
    double a_sigma = 0.0;
    for (double a : targets) a_sigma += a;
    const double u = a_sigma - targets[0];
    const double yi0 = w0 - params.b0 * u;
    double q = -phi * yi0;
    // Advance rebalancer 0's filter and record her observed increments.
    std::vector<double> q_at(acc.size(), 0.0);
    std::size_t next = 0;
    while (next < acc.size() && acc[next].node == 0) q_at[next++] = q;
    for (int k = 0; k < n_steps; ++k) {
      const double dwc = sqrt_dt * rng.normal();
      const double bp = sc.b_prime[k];
      const double sig = sc.sigma_filt[k];
      const double dy_i = dwc - bp * u * dt;
      dyi[k] = dy_i;
      const double dwi = dwc - bp * (u - q) * dt;
      q -= bp * sig * dwi;
      while (next < acc.size() && acc[next].node == k + 1) q_at[next++] = q;
    }
    for (std::size_t ci = 0; ci < acc.size(); ++ci) {
      CkptAccum& a = acc[ci];
      feats.assign(a.n_features, 0.0);
      feats[0] = 1.0;
      feats[1] = yi0;
      for (int k = 0; k < a.node; ++k) {
        const int bin = std::min(n_bins - 1, k * n_bins / a.node);
        feats[2 + bin] += dyi[k];
      }
      const double resid = u - q_at[ci];
      for (int r = 0; r < a.n_features; ++r) {
        for (int s = r; s < a.n_features; ++s) {
          a.xtx[r * a.n_features + s] += feats[r] * feats[s];
        }
        a.xty[r] += feats[r] * resid;
      }
      a.yty += resid * resid;
      a.sum_q += q_at[ci];
      a.sum_u += u;
    }
  }

  FilterOracleReport report;
  for (CkptAccum& a : acc) {
    const int nf = a.n_features;
    for (int r = 0; r < nf; ++r) {
      for (int s = 0; s < r; ++s) {
        a.xtx[r * nf + s] = a.xtx[s * nf + r];
      }
    }
    // Cholesky factorization and inverse for coefficient covariances.
    std::vector<double> chol = a.xtx;
    for (int r = 0; r < nf; ++r) {
      for (int s = 0; s <= r; ++s) {
        double v = chol[r * nf + s];
        for (int k = 0; k < s; ++k) v -= chol[r * nf + k] * chol[s * nf + k];
        if (r == s) {
          if (v <= 0.0) throw std::runtime_error("singular design matrix");
          chol[r * nf + r] = std::sqrt(v);
        } else {
          chol[r * nf + s] = v / chol[s * nf + s];
        }
      }
      for (int s = r + 1; s < nf; ++s) chol[r * nf + s] = 0.0;
    }
    auto solve = [&](std::vector<double> rhs) {
      for (int r = 0; r < nf; ++r) {
        double v = rhs[r];
        for (int k = 0; k < r; ++k) v -= chol[r * nf + k] * rhs[k];
        rhs[r] = v / chol[r * nf + r];
      }
      for (int r = nf - 1; r >= 0; --r) {
        double v = rhs[r];
        for (int k = r + 1; k < nf; ++k) v -= chol[k * nf + r] * rhs[k];
        rhs[r] = v / chol[r * nf + r];
      }
      return rhs;
    };
    const std::vector<double> beta = solve(a.xty);
    double explained = 0.0;
    for (int r = 0; r < nf; ++r) explained += beta[r] * a.xty[r];
    const double s2 =
        std::max(0.0, (a.yty - explained) / std::max(1, n_paths - nf));

    FilterCheckpoint ck;
    ck.t = a.t;
    ck.node = a.node;
    ck.coef_gap = beta;
    ck.se.resize(nf);
    for (int r = 0; r < nf; ++r) {
      std::vector<double> e(nf, 0.0);
      e[r] = 1.0;
      const std::vector<double> col = solve(e);
      ck.se[r] = std::sqrt(std::max(0.0, s2 * col[r]));
      if (ck.se[r] > 0.0) {
        ck.max_abs_z = std::max(ck.max_abs_z, std::abs(beta[r]) / ck.se[r]);
      }
    }
    ck.mean_q = a.sum_q / n_paths;
    ck.mean_u = a.sum_u / n_paths;
    const double mean_se = std::sqrt(s2 / n_paths);
    if (mean_se > se_ceiling) {
      throw InsufficientPaths("filter oracle SE " + std::to_string(mean_se) +
                              " above ceiling");
    }
    report.checkpoints.push_back(std::move(ck));
  }
  return report;
}

}  // namespace mkteq

#include "mkteq/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "mkteq/quadrature.hpp"
#include "mkteq/rng.hpp"

namespace mkteq {

namespace {

// Expansion of (eta_t, q_{i,t}) on the independent basis
// (a_i, u := a_Sigma - a_i, w_0, w_circ, I_t) through the explicit F1/F2
// solutions, plus the cumulative kernel moments G1 = int K, G2 = int K^2.
struct Basis {
  std::vector<double> eta_a;   // eta loading on a_Sigma
  std::vector<double> eta_w0;  // eta loading on w_0
  std::vector<double> eta_i;   // eta loading on I
  std::vector<double> q_u, q_w0, q_i;
  std::vector<double> kernel, g1, g2;
};

Basis make_basis(const EquilibriumCurves& c, const ModelParams& p) {
  const double phi = filter_gain0(p);
  const double m = p.m_rebalancers;
  const int n = c.grid.n_nodes();
  Basis b;
  b.eta_a.resize(n);
  b.eta_w0.resize(n);
  b.eta_i.resize(n);
  b.q_u.resize(n);
  b.q_w0.resize(n);
  b.q_i.resize(n);
  b.kernel.resize(n);
  for (int k = 0; k < n; ++k) {
    const double f1 = c.f1[k];
    const double f2 = c.f2[k];
    b.q_u[k] = f1 * (phi * p.b0 + f2);
    b.q_w0[k] = -f1 * phi;
    b.q_i[k] = -f1;
    b.eta_a[k] = m * b.q_u[k];
    b.eta_w0[k] = m * b.q_w0[k];
    b.eta_i[k] = -f1 * m;
    b.kernel[k] = c.b_prime[k] * c.sigma_filt[k] / f1;
  }
  std::vector<double> k2(n);
  for (int k = 0; k < n; ++k) k2[k] = b.kernel[k] * b.kernel[k];
  b.g1 = cumulative_integral(b.kernel, c.grid.dt());
  b.g2 = cumulative_integral(k2, c.grid.dt());
  return b;
}

struct SeriesLoads {
  std::vector<double> on_ai, on_u, on_w0, on_wc, on_i;
};

SeriesLoads holdings_loads(const EquilibriumCurves& c, const ModelParams& p,
                           const Basis& b, SeriesKind series) {
  const HoldingsCoeffs h = holdings_coeffs(c, p);
  const int n = c.grid.n_nodes();
  SeriesLoads out;
  out.on_ai.resize(n);
  out.on_u.resize(n);
  out.on_w0.resize(n);
  out.on_wc.resize(n);
  out.on_i.resize(n);
  for (int k = 0; k < n; ++k) {
    if (series == SeriesKind::Rebalancer) {
      const double c_ai = h.reb_on_ai[k], c_qi = h.reb_on_qi[k];
      const double c_e = h.reb_on_eta[k], c_y = h.reb_on_Y[k];
      out.on_ai[k] = c_ai + c_e * b.eta_a[k] - c_y * c.b[k];
      out.on_u[k] = c_qi * b.q_u[k] + c_e * b.eta_a[k] - c_y * c.b[k];
      out.on_w0[k] = c_qi * b.q_w0[k] + c_e * b.eta_w0[k] + c_y;
      out.on_wc[k] = c_y;
      out.on_i[k] = c_qi * b.q_i[k] + c_e * b.eta_i[k];
    } else {
      const double t_e = h.trk_on_eta[k], t_w = h.trk_on_w[k];
      const double t_a = h.trk_on_aSigma[k];
      const double on_as = t_a + t_e * b.eta_a[k];
      out.on_ai[k] = on_as;
      out.on_u[k] = on_as;
      out.on_w0[k] = t_w + t_e * b.eta_w0[k];
      out.on_wc[k] = t_w;
      out.on_i[k] = t_e * b.eta_i[k];
    }
  }
  return out;
}

double cov_series(const SeriesLoads& s, const Basis& b, const ModelParams& p,
                  const TimeGrid& grid, int k1, int k2) {
  if (k1 > k2) std::swap(k1, k2);
  const double va = p.sigma_a * p.sigma_a;
  const double vu = (p.m_rebalancers - 1) * va;
  const double vw = p.sigma_w0 * p.sigma_w0;
  double c = s.on_ai[k1] * s.on_ai[k2] * va + s.on_u[k1] * s.on_u[k2] * vu +
             s.on_w0[k1] * s.on_w0[k2] * vw;
  c += s.on_wc[k1] * s.on_wc[k2] * grid.node(k1);
  c += (s.on_wc[k1] * s.on_i[k2] + s.on_i[k1] * s.on_wc[k2]) * b.g1[k1];
  c += s.on_i[k1] * s.on_i[k2] * b.g2[k1];
  return c;
}

int bandwidth_steps(const TimeGrid& grid, double h) {
  const double steps = h * grid.n_steps;
  const int sh = static_cast<int>(std::llround(steps));
  if (sh < 2 || std::abs(steps - sh) > 1e-9 || sh % 2 != 0) {
    throw BandwidthTooCoarse(
        "bandwidth must be an even positive number of grid steps");
  }
  return sh;
}

template <typename CovFn>
double scaled_rho(CovFn&& cov, int k0, int sh, double h) {
  const int k1 = k0 + sh, k2 = k0 + 2 * sh;
  const double v1 = cov(k1, k1) - 2.0 * cov(k0, k1) + cov(k0, k0);
  const double v2 = cov(k2, k2) - 2.0 * cov(k1, k2) + cov(k1, k1);
  const double c12 = cov(k1, k2) - cov(k1, k1) - cov(k0, k2) + cov(k0, k1);
  if (v1 <= 0.0 || v2 <= 0.0) {
    throw DegenerateIncrements("zero-variance increments");
  }
  return c12 / std::sqrt(v1 * v2) / h;
}

CorrelationCurve exact_correlation(const EquilibriumCurves& curves,
                                   const ModelParams& params, double h,
                                   const std::vector<double>& t_eval,
                                   const SeriesLoads* series,
                                   const Basis& basis) {
  // series == nullptr selects the price process.
  const TimeGrid& grid = curves.grid;
  const int sh = bandwidth_steps(grid, h);
  const int n = grid.n_nodes();

  // Price covariance machinery (built lazily only when needed).
  std::vector<double> dw0_cum, da_cum, w_cum, p_cum;
  std::vector<double> iw, iw2, ik, ikp, ikw, ikwp, ik2, ik2p, ik2p2;
  if (series == nullptr) {
    const DriftCoeffs d = drift_coeffs(curves, params);
    std::vector<double> on_w0(n), on_as(n), on_wc(n), on_i(n);
    for (int k = 0; k < n; ++k) {
      on_w0[k] = d.trk_on_w[k] + d.trk_on_eta[k] * basis.eta_w0[k];
      on_as[k] = d.trk_on_aSigma[k] + d.trk_on_eta[k] * basis.eta_a[k];
      on_wc[k] = d.trk_on_w[k];
      on_i[k] = d.trk_on_eta[k] * basis.eta_i[k];
    }
    const double dt = grid.dt();
    dw0_cum = cumulative_integral(on_w0, dt);
    da_cum = cumulative_integral(on_as, dt);
    w_cum = cumulative_integral(on_wc, dt);
    p_cum = cumulative_integral(on_i, dt);
    std::vector<double> f(n);
    auto cum_of = [&](auto&& fn) {
      for (int k = 0; k < n; ++k) f[k] = fn(k);
      return cumulative_integral(f, dt);
    };
    const std::vector<double>& kk = basis.kernel;
    iw = cum_of([&](int k) { return w_cum[k]; });
    iw2 = cum_of([&](int k) { return w_cum[k] * w_cum[k]; });
    ik = cum_of([&](int k) { return kk[k]; });
    ikp = cum_of([&](int k) { return kk[k] * p_cum[k]; });
    ikw = cum_of([&](int k) { return kk[k] * w_cum[k]; });
    ikwp = cum_of([&](int k) { return kk[k] * w_cum[k] * p_cum[k]; });
    ik2 = cum_of([&](int k) { return kk[k] * kk[k]; });
    ik2p = cum_of([&](int k) { return kk[k] * kk[k] * p_cum[k]; });
    ik2p2 =
        cum_of([&](int k) { return kk[k] * kk[k] * p_cum[k] * p_cum[k]; });
  }

  auto cov = [&](int k1, int k2) {
    if (series != nullptr) {
      return cov_series(*series, basis, params, grid, k1, k2);
    }
    if (k1 > k2) std::swap(k1, k2);
    const double q1 = 1.0 + dw0_cum[k1], q2 = 1.0 + dw0_cum[k2];
    const double r1 = -params.b0 + da_cum[k1], r2 = -params.b0 + da_cum[k2];
    const double vw = params.sigma_w0 * params.sigma_w0;
    const double va = params.m_rebalancers * params.sigma_a * params.sigma_a;
    const double a1 = params.gamma + w_cum[k1];
    const double a2 = params.gamma + w_cum[k2];
    const double b1 = p_cum[k1], b2 = p_cum[k2];
    double c = q1 * q2 * vw + r1 * r2 * va;
    c += a1 * a2 * grid.node(k1) - (a1 + a2) * iw[k1] + iw2[k1];
    c += (a1 * b2 + a2 * b1) * ik[k1] - (a1 + a2) * ikp[k1] -
         (b1 + b2) * ikw[k1] + 2.0 * ikwp[k1];
    c += b1 * b2 * ik2[k1] - (b1 + b2) * ik2p[k1] + ik2p2[k1];
    return c;
  };

  CorrelationCurve out;
  out.h = h;
  out.scaled_by_h = true;
  for (double t : t_eval) {
    const int k0 = static_cast<int>(std::llround(t * grid.n_steps));
    if (k0 < 0 || k0 + 2 * sh >= n) {
      throw OutOfDomain("correlation node t=" + std::to_string(t) +
                        " leaves no room for two bandwidths");
    }
    const double rho_h = scaled_rho(cov, k0, sh, h);
    const double rho_h2 = scaled_rho(cov, k0, sh / 2, h / 2.0);
    out.t.push_back(grid.node(k0));
    out.estimate.push_back(2.0 * rho_h2 - rho_h);
    out.se.push_back(0.0);
  }
  return out;
}

CorrelationCurve batch_correlation(const SimBatch& batch,
                                   const std::vector<std::vector<double>>& xs,
                                   double h) {
  const TimeGrid& grid = batch.grid;
  const int sh = bandwidth_steps(grid, h);
  const int n_paths = batch.config.n_paths;
  if (n_paths < 100) throw InsufficientPaths("need at least 100 paths");
  std::map<int, int> kept_index;
  for (std::size_t j = 0; j < batch.keep_nodes.size(); ++j) {
    kept_index[batch.keep_nodes[j]] = static_cast<int>(j);
  }
  const int n_batches = std::min(50, n_paths / 20);

  CorrelationCurve out;
  out.h = h;
  out.scaled_by_h = true;
  for (std::size_t j = 0; j < batch.keep_nodes.size(); ++j) {
    const int k0 = batch.keep_nodes[j];
    const int need[4] = {k0, k0 + sh / 2, k0 + sh, k0 + 2 * sh};
    int idx[4];
    bool have = true;
    for (int r = 0; r < 4; ++r) {
      auto it = kept_index.find(need[r]);
      if (it == kept_index.end()) {
        have = false;
        break;
      }
      idx[r] = it->second;
    }
    if (!have || k0 + 2 * sh >= grid.n_nodes()) continue;

    const std::vector<double>& x0 = xs[idx[0]];
    const std::vector<double>& xh2 = xs[idx[1]];
    const std::vector<double>& xh = xs[idx[2]];
    const std::vector<double>& x2h = xs[idx[3]];
    // Richardson-extrapolated scaled correlation over a path range.
    auto estimate = [&](int lo, int hi) {
      auto corr = [&](auto&& d1, auto&& d2) {
        double s1 = 0, s2 = 0, s11 = 0, s22 = 0, s12 = 0;
        const int count = hi - lo;
        for (int path = lo; path < hi; ++path) {
          const double a = d1(path), b = d2(path);
          s1 += a;
          s2 += b;
          s11 += a * a;
          s22 += b * b;
          s12 += a * b;
        }
        const double v1 = s11 / count - (s1 / count) * (s1 / count);
        const double v2 = s22 / count - (s2 / count) * (s2 / count);
        const double c12 = s12 / count - (s1 / count) * (s2 / count);
        if (v1 <= 0.0 || v2 <= 0.0) {
          throw DegenerateIncrements("zero-variance increments");
        }
        return c12 / std::sqrt(v1 * v2);
      };
      const double rho_h =
          corr([&](int p) { return xh[p] - x0[p]; },
               [&](int p) { return x2h[p] - xh[p]; }) /
          h;
      const double rho_h2 =
          corr([&](int p) { return xh2[p] - x0[p]; },
               [&](int p) { return xh[p] - xh2[p]; }) /
          (h / 2.0);
      return 2.0 * rho_h2 - rho_h;
    };

    const double full = estimate(0, n_paths);
    double mean_b = 0.0, ss_b = 0.0;
    std::vector<double> per_batch(n_batches);
    for (int bi = 0; bi < n_batches; ++bi) {
      const int lo = static_cast<int>(
          static_cast<long long>(bi) * n_paths / n_batches);
      const int hi = static_cast<int>(
          static_cast<long long>(bi + 1) * n_paths / n_batches);
      per_batch[bi] = estimate(lo, hi);
      mean_b += per_batch[bi];
    }
    mean_b /= n_batches;
    for (double v : per_batch) ss_b += (v - mean_b) * (v - mean_b);
    const double se =
        std::sqrt(ss_b / (n_batches - 1.0) / n_batches);

    out.t.push_back(grid.node(k0));
    out.estimate.push_back(full);
    out.se.push_back(se);
  }
  if (out.t.empty()) {
    throw BandwidthTooCoarse(
        "no kept node has all four bandwidth nodes retained");
  }
  return out;
}

}  // namespace

CorrelationCurve trading_autocorrelation(const SimBatch& batch,
                                         SeriesKind series, double h) {
  if (series == SeriesKind::Price) {
    return price_autocorrelation(batch, h);
  }
  const auto& xs =
      series == SeriesKind::Rebalancer ? batch.reb_theta : batch.trk_theta;
  if (xs.empty()) {
    throw std::invalid_argument("batch retains no holdings series");
  }
  return batch_correlation(batch, xs, h);
}

CorrelationCurve price_autocorrelation(const SimBatch& batch, double h) {
  if (batch.price.empty()) {
    throw std::invalid_argument("batch retains no price series");
  }
  return batch_correlation(batch, batch.price, h);
}

CorrelationCurve trading_autocorrelation_exact(const EquilibriumCurves& curves,
                                               const ModelParams& params,
                                               SeriesKind series, double h,
                                               const std::vector<double>& t) {
  if (series == SeriesKind::Price) {
    return price_autocorrelation_exact(curves, params, h, t);
  }
  const Basis basis = make_basis(curves, params);
  const SeriesLoads loads = holdings_loads(curves, params, basis, series);
  return exact_correlation(curves, params, h, t, &loads, basis);
}

CorrelationCurve price_autocorrelation_exact(const EquilibriumCurves& curves,
                                             const ModelParams& params,
                                             double h,
                                             const std::vector<double>& t) {
  const Basis basis = make_basis(curves, params);
  return exact_correlation(curves, params, h, t, nullptr, basis);
}

double instantaneous_cross_correlation(const EquilibriumCurves& curves,
                                       const ModelParams& params, double t) {
  const HoldingsCoeffs h = holdings_coeffs(curves, params);
  const int k = static_cast<int>(std::llround(t * curves.grid.n_steps));
  if (k < 0 || k >= curves.grid.n_nodes()) {
    throw OutOfDomain("t outside [0,1]");
  }
  const double m = params.m_rebalancers;
  const double bs = curves.b_prime[k] * curves.sigma_filt[k];
  // State diffusion loadings on dw: Y and w load 1, eta loads -M B' Sigma,
  // q_i loads -B' Sigma.
  const double diff_reb =
      h.reb_on_Y[k] - (h.reb_on_qi[k] + m * h.reb_on_eta[k]) * bs;
  const double diff_trk = h.trk_on_w[k] - m * h.trk_on_eta[k] * bs;
  const double product = diff_reb * diff_trk;
  if (std::abs(product) < 1e-30) {
    throw ZeroDiffusion("holdings carry no diffusion at t=" +
                        std::to_string(t));
  }
  return product > 0.0 ? 1.0 : -1.0;
}

std::vector<double> drift_variance_curve(const EquilibriumCurves& curves,
                                         const ModelParams& params) {
  const Basis basis = make_basis(curves, params);
  const DriftCoeffs d = drift_coeffs(curves, params);
  const int n = curves.grid.n_nodes();
  const double va = params.m_rebalancers * params.sigma_a * params.sigma_a;
  const double vw = params.sigma_w0 * params.sigma_w0;
  std::vector<double> out(n);
  for (int k = 0; k < n; ++k) {
    const double on_w0 = d.trk_on_w[k] + d.trk_on_eta[k] * basis.eta_w0[k];
    const double on_as = d.trk_on_aSigma[k] + d.trk_on_eta[k] * basis.eta_a[k];
    const double on_wc = d.trk_on_w[k];
    const double on_i = d.trk_on_eta[k] * basis.eta_i[k];
    out[k] = on_as * on_as * va + on_w0 * on_w0 * vw +
             on_wc * on_wc * curves.grid.node(k) +
             2.0 * on_wc * on_i * basis.g1[k] + on_i * on_i * basis.g2[k];
  }
  return out;
}

ValueSurface value_function(const ModelParams& params,
                            const EquilibriumCurves& curves,
                            const std::vector<double>& a_grid, int n_paths,
                            std::uint64_t master_seed) {
  if (curves.b.empty()) throw CurvesMissing("value_function requires curves");
  if (n_paths < 100) throw InsufficientPaths("need at least 100 paths");
  const EquilibriumCurves sc =
      solve_curves(params, curves.kind, curves.grid, OdeScheme::Euler);
  const HoldingsCoeffs h = holdings_coeffs(sc, params);
  const DriftCoeffs d = drift_coeffs(sc, params);
  const double phi = filter_gain0(params);
  const double m = params.m_rebalancers;
  const double sigma0 = initial_sigma(params);
  const double sd_u = std::sqrt(sigma0);
  const int n_steps = curves.grid.n_steps;
  const double dt = curves.grid.dt();
  const double sqrt_dt = std::sqrt(dt);
  std::vector<double> kappa_nodes(n_steps);
  for (int k = 0; k < n_steps; ++k) {
    kappa_nodes[k] = kappa_eval(params.kappa, curves.grid.node(k));
  }

  ValueSurface out;
  out.a_grid = a_grid;
  out.n_paths = n_paths;
  const int n_a = static_cast<int>(a_grid.size());
  out.j.resize(n_a);
  out.j_se.resize(n_a);
  out.j_pathwise.resize(n_a);
  out.j_pathwise_se.resize(n_a);

  for (int ai = 0; ai < n_a; ++ai) {
    const double a = a_grid[ai];
    std::vector<double> obj_d(n_paths), obj_p(n_paths);
    auto run_path = [&](int path) {
      PathRng rng(path_seed(master_seed +
                                0x9E3779B97F4A7C15ull *
                                    static_cast<std::uint64_t>(ai + 1),
                            path));
      // Conditional draw: u | F_{i,0} ~ N(q_{i,0}, Sigma(0)) with the
      // conditioning convention forcing Y_{i,0} = q_{i,0} = 0.
      const double u = sd_u * rng.normal();
      const double a_sigma = a + u;
      double y = -params.b0 * a;
      double eta = -m * phi * y;
      double q = 0.0;
      double w = params.b0 * u;
      double acc_d = 0.0, acc_p = 0.0;
      for (int k = 0; k < n_steps; ++k) {
        const double theta = h.reb_on_ai[k] * a + h.reb_on_qi[k] * q +
                             h.reb_on_eta[k] * eta + h.reb_on_Y[k] * y;
        const double reb_drift = d.reb_on_eta[k] * eta + d.reb_on_Y[k] * y +
                                 d.reb_on_aiqi[k] * (a + q);
        const double trk_drift = d.trk_on_eta[k] * eta + d.trk_on_w[k] * w +
                                 d.trk_on_aSigma[k] * a_sigma;
        const double penalty =
            kappa_nodes[k] * (a - theta) * (a - theta) * dt;
        const double dwc = sqrt_dt * rng.normal();
        const double ds = trk_drift * dt + params.gamma * dwc;
        acc_d += theta * reb_drift * dt - penalty;
        acc_p += theta * ds - penalty;

        const double bp = sc.b_prime[k];
        const double sig = sc.sigma_filt[k];
        const double dy = dwc - bp * a_sigma * dt;
        const double dwi = dwc - bp * (u - q) * dt;
        eta += -bp * bp * sig * eta * dt - m * bp * sig * dy;
        q += -bp * sig * dwi;
        y += dy;
        w += dwc;
      }
      obj_d[path] = acc_d;
      obj_p[path] = acc_p;
    };
#ifdef MKTEQ_HAVE_OPENMP
#pragma omp parallel for schedule(static)
    for (int path = 0; path < n_paths; ++path) run_path(path);
#else
    for (int path = 0; path < n_paths; ++path) run_path(path);
#endif
    auto mean_se = [n_paths](const std::vector<double>& xs, double& mean,
                             double& se) {
      double s = 0.0;
      for (double x : xs) s += x;
      mean = s / n_paths;
      double ss = 0.0;
      for (double x : xs) ss += (x - mean) * (x - mean);
      se = std::sqrt(ss / (n_paths - 1.0) / n_paths);
    };
    mean_se(obj_d, out.j[ai], out.j_se[ai]);
    mean_se(obj_p, out.j_pathwise[ai], out.j_pathwise_se[ai]);
  }
  return out;
}

void rebalancing_cost(ValueSurface& surface) {
  const int n_a = static_cast<int>(surface.a_grid.size());
  int base = -1;
  for (int i = 0; i < n_a; ++i) {
    if (std::abs(surface.a_grid[i]) < 1e-12) base = i;
  }
  if (base < 0) {
    throw MissingBaseline("value surface grid must contain a_i = 0");
  }
  surface.rc.resize(n_a);
  for (int i = 0; i < n_a; ++i) {
    surface.rc[i] = surface.j[base] - surface.j[i];
  }
  // Least-squares quadratic fit of RC on (1, a, a^2).
  double s[5] = {0, 0, 0, 0, 0};
  double r0 = 0, r1 = 0, r2 = 0;
  for (int i = 0; i < n_a; ++i) {
    const double a = surface.a_grid[i];
    double pw = 1.0;
    for (int k = 0; k <= 4; ++k) {
      s[k] += pw;
      if (k < 3) {
        if (k == 0) r0 += surface.rc[i];
        if (k == 1) r1 += surface.rc[i] * a;
        if (k == 2) r2 += surface.rc[i] * a * a;
      }
      pw *= a;
    }
  }
  // Solve the 3x3 normal equations by Gaussian elimination.
  double mat[3][4] = {{s[0], s[1], s[2], r0},
                      {s[1], s[2], s[3], r1},
                      {s[2], s[3], s[4], r2}};
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int row = col + 1; row < 3; ++row) {
      if (std::abs(mat[row][col]) > std::abs(mat[pivot][col])) pivot = row;
    }
    std::swap(mat[col], mat[pivot]);
    for (int row = 0; row < 3; ++row) {
      if (row == col) continue;
      const double f = mat[row][col] / mat[col][col];
      for (int c2 = col; c2 < 4; ++c2) mat[row][c2] -= f * mat[col][c2];
    }
  }
  surface.fit_c0 = mat[0][3] / mat[0][0];
  surface.fit_c1 = mat[1][3] / mat[1][1];
  surface.fit_c2 = mat[2][3] / mat[2][2];
  double sst = 0.0, ssr = 0.0;
  const double mean_rc = r0 / n_a;
  for (int i = 0; i < n_a; ++i) {
    const double a = surface.a_grid[i];
    const double fit = surface.fit_c0 + surface.fit_c1 * a +
                       surface.fit_c2 * a * a;
    sst += (surface.rc[i] - mean_rc) * (surface.rc[i] - mean_rc);
    ssr += (surface.rc[i] - fit) * (surface.rc[i] - fit);
  }
  surface.fit_r2 = sst > 0.0 ? 1.0 - ssr / sst : 1.0;
}

}  // namespace mkteq

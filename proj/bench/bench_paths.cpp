// Compares the OpenMP path kernel against the serial reference kernel and
// checks that both produce identical output.
#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "mkteq/curves.hpp"
#include "mkteq/simulate.hpp"

using namespace mkteq;

namespace {

double run(const EquilibriumCurves& curves, const ModelParams& params,
           SimConfig cfg, SimBatch* out) {
  const auto t0 = std::chrono::steady_clock::now();
  SimBatch batch = simulate_paths(curves, params, cfg);
  const auto t1 = std::chrono::steady_clock::now();
  if (out) *out = std::move(batch);
  return std::chrono::duration<double>(t1 - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  const int n_paths = argc > 1 ? std::atoi(argv[1]) : 20000;
  const int n_steps = argc > 2 ? std::atoi(argv[2]) : 2000;
  const ModelParams params;
  const auto curves =
      solve_curves(params, EquilibriumKind::PriceImpact, TimeGrid{n_steps});

  SimConfig cfg;
  cfg.n_paths = n_paths;
  cfg.retention = RetentionMode::Series;

  SimBatch parallel, serial;
  run(curves, params, cfg, nullptr);  // warm-up
  const double t_par = run(curves, params, cfg, &parallel);
  cfg.serial = true;
  const double t_ser = run(curves, params, cfg, &serial);

  bool identical = parallel.keep_nodes == serial.keep_nodes;
  for (std::size_t k = 0; identical && k < parallel.price.size(); ++k) {
    identical = parallel.price[k] == serial.price[k] &&
                parallel.reb_theta[k] == serial.reb_theta[k] &&
                parallel.trk_theta[k] == serial.trk_theta[k];
  }

  std::printf("paths=%d steps=%d\n", n_paths, n_steps);
  std::printf("parallel kernel: %8.3f s  (%.2f Mpath-steps/s)\n", t_par,
              n_paths * static_cast<double>(n_steps) / t_par / 1e6);
  std::printf("serial kernel:   %8.3f s  (%.2f Mpath-steps/s)\n", t_ser,
              n_paths * static_cast<double>(n_steps) / t_ser / 1e6);
  std::printf("speedup: %.2fx, outputs %s\n", t_ser / t_par,
              identical ? "bitwise identical" : "DIFFER");
  return identical ? 0 : 1;
}

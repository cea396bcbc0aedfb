#include "mkteq/quadrature.hpp"

#include <stdexcept>

namespace mkteq {

double integrate_simpson(const std::vector<double>& f, double dt) {
  const size_t n = f.size();
  if (n < 2) return 0.0;
  size_t intervals = n - 1;
  double total = 0.0;
  size_t start = 0;
  if (intervals % 2 == 1) {
    if (intervals >= 3) {
      // 3/8 rule on the first three intervals keeps fourth order.
      total += dt * 3.0 / 8.0 * (f[0] + 3.0 * f[1] + 3.0 * f[2] + f[3]);
      start = 3;
    } else {
      return dt * 0.5 * (f[0] + f[1]);  // trapezoid fallback for 2 nodes
    }
  }
  for (size_t k = start; k + 2 <= n - 1; k += 2) {
    total += dt / 3.0 * (f[k] + 4.0 * f[k + 1] + f[k + 2]);
  }
  return total;
}

std::vector<double> cumulative_integral(const std::vector<double>& f,
                                        double dt) {
  const size_t n = f.size();
  std::vector<double> out(n, 0.0);
  if (n < 2) return out;
  if (n == 2) {
    out[1] = dt * 0.5 * (f[0] + f[1]);
    return out;
  }
  if (n == 3) {
    // quadratic through the three nodes
    out[1] = dt / 12.0 * (5.0 * f[0] + 8.0 * f[1] - f[2]);
    out[2] = out[1] + dt / 12.0 * (-f[0] + 8.0 * f[1] + 5.0 * f[2]);
    return out;
  }
  // Cubic (4-point) segment rules: one-sided at the ends, centered inside.
  out[1] = dt / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]);
  for (size_t k = 1; k + 2 <= n - 1; ++k) {
    out[k + 1] = out[k] + dt / 24.0 * (-f[k - 1] + 13.0 * f[k] +
                                       13.0 * f[k + 1] - f[k + 2]);
  }
  const size_t m = n - 1;
  out[m] = out[m - 1] + dt / 24.0 * (f[m - 3] - 5.0 * f[m - 2] +
                                     19.0 * f[m - 1] + 9.0 * f[m]);
  return out;
}

}  // namespace mkteq

#pragma once

#include <cstddef>
#include <vector>

namespace mkteq {

// Composite Simpson on a uniform grid (odd trailing interval handled with the
// 3/8 rule so the whole estimate stays fourth order).
double integrate_simpson(const std::vector<double>& f, double dt);

// Cumulative integral I[k] = int_0^{t_k} f, fourth order at every node
// (cubic Newton-Cotes segments; one-sided weights near the ends).
std::vector<double> cumulative_integral(const std::vector<double>& f,
                                        double dt);

}  // namespace mkteq

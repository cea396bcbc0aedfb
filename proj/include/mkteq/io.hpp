#pragma once

#include <string>
#include <vector>

#include "mkteq/analytics.hpp"
#include "mkteq/coefficients.hpp"
#include "mkteq/curves.hpp"
#include "mkteq/simulate.hpp"

namespace mkteq {

// Shortest round-trip decimal representation (17 significant digits).
std::string format_double(double value);

std::string curves_csv(const EquilibriumCurves& curves);
std::string holdings_csv(const HoldingsCoeffs& coeffs);
std::string drift_csv(const DriftCoeffs& coeffs);
std::string ortho_csv(const OrthoCoeffs& coeffs);
std::string correlation_csv(const CorrelationCurve& curve);
std::string variance_csv(const TimeGrid& grid,
                         const std::vector<double>& variance);
std::string surface_csv(const ValueSurface& surface);

// Per-path series at the batch's kept nodes: `t,path_id,value`.
std::string series_csv(const SimBatch& batch,
                       const std::vector<std::vector<double>>& series);

// Generic panel dataset: abscissa column plus one named column per line.
std::string panel_csv(const std::string& x_name, const std::vector<double>& x,
                      const std::vector<std::string>& names,
                      const std::vector<std::vector<double>>& columns);

// Creates missing parent directories.
void write_text_file(const std::string& path, const std::string& text);

// FNV-1a 64-bit digest of the byte content, lower-case hex.
std::string content_hash(const std::string& text);

}  // namespace mkteq

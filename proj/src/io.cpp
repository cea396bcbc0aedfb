#include "mkteq/io.hpp"

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace mkteq {

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

namespace {

std::string table_csv(const std::string& header,
                      const std::vector<double>& x,
                      const std::vector<const std::vector<double>*>& cols) {
  for (const auto* c : cols) {
    if (c->size() != x.size()) {
      throw std::invalid_argument("csv column length mismatch");
    }
  }
  std::string out = header;
  out += '\n';
  for (std::size_t k = 0; k < x.size(); ++k) {
    out += format_double(x[k]);
    for (const auto* c : cols) {
      out += ',';
      out += format_double((*c)[k]);
    }
    out += '\n';
  }
  return out;
}

std::vector<double> grid_nodes(const TimeGrid& grid) {
  std::vector<double> t(grid.n_nodes());
  for (int k = 0; k < grid.n_nodes(); ++k) t[k] = grid.node(k);
  return t;
}

}  // namespace

std::string curves_csv(const EquilibriumCurves& curves) {
  return table_csv("t,B,Bprime,A,Sigma,F1,F2", grid_nodes(curves.grid),
                   {&curves.b, &curves.b_prime, &curves.a, &curves.sigma_filt,
                    &curves.f1, &curves.f2});
}

std::string holdings_csv(const HoldingsCoeffs& coeffs) {
  return table_csv(
      "t,reb_on_ai,reb_on_qi,reb_on_eta,reb_on_Y,trk_on_eta,trk_on_w,"
      "trk_on_aSigma",
      grid_nodes(coeffs.grid),
      {&coeffs.reb_on_ai, &coeffs.reb_on_qi, &coeffs.reb_on_eta,
       &coeffs.reb_on_Y, &coeffs.trk_on_eta, &coeffs.trk_on_w,
       &coeffs.trk_on_aSigma});
}

std::string drift_csv(const DriftCoeffs& coeffs) {
  return table_csv(
      "t,trk_on_eta,trk_on_w,trk_on_aSigma,reb_on_eta,reb_on_Y,reb_on_aiqi",
      grid_nodes(coeffs.grid),
      {&coeffs.trk_on_eta, &coeffs.trk_on_w, &coeffs.trk_on_aSigma,
       &coeffs.reb_on_eta, &coeffs.reb_on_Y, &coeffs.reb_on_aiqi});
}

std::string ortho_csv(const OrthoCoeffs& coeffs) {
  return table_csv(
      "t,reb_on_ai,reb_on_u,reb_on_w0,reb_on_wc,reb_on_I,trk_on_aSigma,"
      "trk_on_w0,trk_on_wc,trk_on_I,drift_on_aSigma,drift_on_w0,drift_on_wc,"
      "drift_on_I,rdrift_on_ai,rdrift_on_u,rdrift_on_w0,rdrift_on_wc,"
      "rdrift_on_I,kernel",
      grid_nodes(coeffs.grid),
      {&coeffs.reb_on_ai, &coeffs.reb_on_u, &coeffs.reb_on_w0,
       &coeffs.reb_on_wc, &coeffs.reb_on_I, &coeffs.trk_on_aSigma,
       &coeffs.trk_on_w0, &coeffs.trk_on_wc, &coeffs.trk_on_I,
       &coeffs.drift_on_aSigma, &coeffs.drift_on_w0, &coeffs.drift_on_wc,
       &coeffs.drift_on_I, &coeffs.rdrift_on_ai, &coeffs.rdrift_on_u,
       &coeffs.rdrift_on_w0, &coeffs.rdrift_on_wc, &coeffs.rdrift_on_I,
       &coeffs.kernel});
}

std::string correlation_csv(const CorrelationCurve& curve) {
  std::string out = "t,estimate,se,h\n";
  const std::string h = format_double(curve.h);
  for (std::size_t k = 0; k < curve.t.size(); ++k) {
    out += format_double(curve.t[k]);
    out += ',';
    out += format_double(curve.estimate[k]);
    out += ',';
    out += format_double(curve.se[k]);
    out += ',';
    out += h;
    out += '\n';
  }
  return out;
}

std::string variance_csv(const TimeGrid& grid,
                         const std::vector<double>& variance) {
  return table_csv("t,variance", grid_nodes(grid), {&variance});
}

std::string surface_csv(const ValueSurface& surface) {
  std::string out = "a_i,J,J_se,RC\n";
  for (std::size_t k = 0; k < surface.a_grid.size(); ++k) {
    out += format_double(surface.a_grid[k]);
    out += ',';
    out += format_double(surface.j[k]);
    out += ',';
    out += format_double(surface.j_se[k]);
    out += ',';
    out += format_double(surface.rc.empty() ? 0.0 : surface.rc[k]);
    out += '\n';
  }
  return out;
}

std::string series_csv(const SimBatch& batch,
                       const std::vector<std::vector<double>>& series) {
  if (series.size() != batch.keep_nodes.size()) {
    throw std::invalid_argument("series does not match the batch's kept nodes");
  }
  std::string out = "t,path_id,value\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const std::string t = format_double(batch.grid.node(batch.keep_nodes[k]));
    for (std::size_t p = 0; p < series[k].size(); ++p) {
      out += t;
      out += ',';
      out += std::to_string(p);
      out += ',';
      out += format_double(series[k][p]);
      out += '\n';
    }
  }
  return out;
}

std::string panel_csv(const std::string& x_name, const std::vector<double>& x,
                      const std::vector<std::string>& names,
                      const std::vector<std::vector<double>>& columns) {
  if (names.size() != columns.size()) {
    throw std::invalid_argument("panel column names do not match columns");
  }
  std::string out = x_name;
  for (const auto& n : names) {
    out += ',';
    out += n;
  }
  out += '\n';
  std::vector<const std::vector<double>*> cols;
  cols.reserve(columns.size());
  for (const auto& c : columns) cols.push_back(&c);
  return out + table_csv("", x, cols).substr(1);  // drop the blank header
}

void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string content_hash(const std::string& text) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

}  // namespace mkteq

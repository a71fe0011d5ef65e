#pragma once
// File formats: dataset CSV (header `phi,x`) with a JSON metadata sidecar,
// density-matrix JSON (upper triangle), Wigner and photon-distribution CSV,
// and the estimate JSON payloads. Doubles are written with the shortest
// representation that round-trips exactly; all writes go through a temp file
// plus rename so readers never observe a partial file.

#include <charconv>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "qht/estimate.hpp"
#include "qht/model.hpp"
#include "qht/tomo.hpp"

namespace qht {

using ordered_json = nlohmann::ordered_json;

inline std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

inline void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("rename failed for " + path + ": " + ec.message());
}

inline void write_json_atomic(const std::string& path, const ordered_json& j) {
  write_text_atomic(path, j.dump(2) + "\n");
}

// `<name>.meta.json` next to `<name>.csv`.
inline std::string meta_path_for(const std::string& csv_path) {
  const std::string suffix = ".csv";
  if (csv_path.size() > suffix.size() &&
      csv_path.compare(csv_path.size() - suffix.size(), suffix.size(), suffix) == 0)
    return csv_path.substr(0, csv_path.size() - suffix.size()) + ".meta.json";
  return csv_path + ".meta.json";
}

inline ordered_json meta_to_json(const HomodyneDataset& ds) {
  ordered_json j;
  j["n"] = ds.records.size();
  j["seed"] = ds.meta.seed;
  j["calibrated"] = ds.calibrated;
  j["scale"] = ds.meta.scale;
  j["signal"] = {{"alpha_re", ds.meta.signal.alpha.real()},
                 {"alpha_im", ds.meta.signal.alpha.imag()},
                 {"squeeze_r", ds.meta.signal.squeeze_r},
                 {"n_thermal", ds.meta.signal.n_thermal}};
  j["channel"] = {{"g1t", ds.meta.channel.g1t},
                  {"g2t", ds.meta.channel.g2t},
                  {"eta", ds.meta.channel.eta},
                  {"visibility", ds.meta.channel.visibility}};
  return j;
}

inline void write_dataset(const std::string& csv_path, const HomodyneDataset& ds) {
  std::string body = "phi,x\n";
  body.reserve(body.size() + ds.records.size() * 40);
  for (const auto& r : ds.records) {
    body += format_double(r.phi);
    body += ',';
    body += format_double(r.x);
    body += '\n';
  }
  write_text_atomic(csv_path, body);
  write_json_atomic(meta_path_for(csv_path), meta_to_json(ds));
}

inline double parse_double_field(const std::string& s, const std::string& where) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  const auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e)
    throw std::invalid_argument("malformed number '" + s + "' in " + where);
  return v;
}

inline HomodyneDataset read_dataset(const std::string& csv_path) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open dataset: " + csv_path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty dataset file: " + csv_path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "phi,x")
    throw std::invalid_argument("expected header 'phi,x' in " + csv_path);
  HomodyneDataset ds;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::invalid_argument("missing comma at line " + std::to_string(lineno) + " of " +
                                  csv_path);
    const std::string where = csv_path + ":" + std::to_string(lineno);
    const double phi = parse_double_field(line.substr(0, comma), where);
    const double x = parse_double_field(line.substr(comma + 1), where);
    ds.records.push_back(HomodyneRecord{normalize_phase(phi), x});
  }
  ds.calibrated = false;
  ds.meta.source = csv_path;

  const std::string mpath = meta_path_for(csv_path);
  std::ifstream min(mpath, std::ios::binary);
  if (min) {
    ordered_json j;
    try {
      min >> j;
    } catch (const std::exception& e) {
      throw std::invalid_argument("malformed metadata " + mpath + ": " + e.what());
    }
    ds.calibrated = j.value("calibrated", false);
    ds.meta.seed = j.value("seed", std::uint64_t{0});
    ds.meta.scale = j.value("scale", 1.0);
    if (j.contains("signal")) {
      const auto& s = j["signal"];
      ds.meta.signal.alpha = {s.value("alpha_re", 0.0), s.value("alpha_im", 0.0)};
      ds.meta.signal.squeeze_r = s.value("squeeze_r", 0.0);
      ds.meta.signal.n_thermal = s.value("n_thermal", 0.0);
    }
    if (j.contains("channel")) {
      const auto& c = j["channel"];
      ds.meta.channel.g1t = c.value("g1t", 0.0);
      ds.meta.channel.g2t = c.value("g2t", 0.0);
      ds.meta.channel.eta = c.value("eta", 1.0);
      ds.meta.channel.visibility = c.value("visibility", 1.0);
    }
  }
  return ds;
}

inline ordered_json rho_to_json(const DensityMatrix& rho) {
  ordered_json j;
  j["n_max"] = rho.n_max();
  ordered_json elems = ordered_json::array();
  for (int row = 0; row <= rho.n_max(); ++row)
    for (int col = row; col <= rho.n_max(); ++col) {
      const EstimateResult& e = rho.at(row, col);
      elems.push_back(ordered_json{{"j", row},
                                   {"k", col},
                                   {"re", e.value.real()},
                                   {"im", e.value.imag()},
                                   {"err_re", e.stderr_re},
                                   {"err_im", e.stderr_im}});
    }
  j["elements"] = std::move(elems);
  return j;
}

inline void write_rho(const std::string& path, const DensityMatrix& rho) {
  write_json_atomic(path, rho_to_json(rho));
}

inline DensityMatrix read_rho(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open density matrix: " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::invalid_argument("malformed density matrix " + path + ": " + e.what());
  }
  if (!j.contains("n_max") || !j.contains("elements"))
    throw std::invalid_argument("density matrix " + path + " lacks n_max/elements");
  DensityMatrix rho(j["n_max"].get<int>());
  for (const auto& e : j["elements"]) {
    const int row = e.at("j").get<int>();
    const int col = e.at("k").get<int>();
    rho.upper(row, col) = EstimateResult{{e.at("re").get<double>(), e.at("im").get<double>()},
                                         e.at("err_re").get<double>(),
                                         e.at("err_im").get<double>()};
  }
  return rho;
}

inline void write_photon_csv(const std::string& path, const std::vector<PhotonBin>& bins) {
  std::string body = "n,p,err\n";
  for (const auto& b : bins) {
    body += std::to_string(b.n);
    body += ',';
    body += format_double(b.p);
    body += ',';
    body += format_double(b.err);
    body += '\n';
  }
  write_text_atomic(path, body);
}

inline void write_wigner_csv(const std::string& path, const WignerGrid& grid) {
  std::string body = "re_z,im_z,w\n";
  for (const auto& p : grid.points) {
    body += format_double(p.z.real());
    body += ',';
    body += format_double(p.z.imag());
    body += ',';
    body += format_double(p.w);
    body += '\n';
  }
  write_text_atomic(path, body);
  ordered_json meta;
  meta["n_max"] = grid.n_max;
  meta["d_max"] = grid.d_max;
  meta["normalization"] = grid.normalization;
  write_json_atomic(meta_path_for(path), meta);
}

inline ordered_json channel_fit_to_json(const ChannelFit& fit) {
  ordered_json j;
  j["g"] = fit.g_hat;
  j["delta2"] = fit.delta2_hat;
  j["g1t"] = fit.g1t_hat;
  j["g2t"] = fit.g2t_hat;
  j["loglik"] = fit.loglik;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["cov"] = {{fit.cov[0][0], fit.cov[0][1]}, {fit.cov[1][0], fit.cov[1][1]}};
  j["degenerate"] = fit.degenerate;
  j["non_physical"] = fit.non_physical;
  return j;
}

inline ordered_json loss_to_json(const LossEstimate& loss) {
  ordered_json j;
  j["gamma"] = loss.gamma;
  j["gamma_err"] = loss.gamma_err;
  j["n0"] = loss.n0.value.real();
  j["n0_err"] = loss.n0.stderr_re;
  j["ngamma"] = loss.n_gamma.value.real();
  j["ngamma_err"] = loss.n_gamma.stderr_re;
  j["visibility_exponent"] = loss.visibility_exponent;
  return j;
}

inline ordered_json mean_photon_to_json(const MeanPhotonResult& r) {
  ordered_json j;
  j["value"] = r.estimate.value.real();
  j["stderr"] = r.estimate.stderr_re;
  j["mu_re"] = r.mu.mu.real();
  j["mu_im"] = r.mu.mu.imag();
  return j;
}

}  // namespace qht

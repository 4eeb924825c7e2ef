// SPDX-License-Identifier: Apache-2.0
//
// Sweep configuration file (JSON) parsing and the JSON report writer.
// The schema mirrors SweepSpec exactly; unknown keys are rejected so a
// typo'd option can never be silently ignored.

#pragma once

#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "twr/harness.hpp"

namespace twr {

inline Scheme scheme_from_name(const std::string& name) {
  if (name == "proposed") return Scheme::Proposed;
  if (name == "channel_inversion") return Scheme::ChannelInversionNaive;
  if (name == "sdma_zf") return Scheme::SdmaZf;
  throw std::invalid_argument("unknown scheme: " + name);
}

/// Parse a sweep spec. Schema (weights optional, default all-ones):
/// {
///   "K": 3, "N_B": 4, "N_R": 4, "N_k": [2,2,2], "L_k": [2,1,1],
///   "noise_power": 1.0,
///   "weights_ul": [[1,1],[1],[1]], "weights_dl": [[1,1],[1],[1]],
///   "snr_db": [0, 10, 20], "n_b": [4, 8],
///   "trials": 100, "master_seed": 1,
///   "schemes": ["proposed", "channel_inversion", "sdma_zf"]
/// }
inline SweepSpec parse_sweep_spec(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "K",       "N_B",         "N_R",        "N_k",     "L_k",
      "noise_power", "weights_ul", "weights_dl", "snr_db", "n_b",
      "trials",  "master_seed", "schemes"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) {
      throw std::invalid_argument("config: unknown key '" + it.key() + "'");
    }
  }
  auto require = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key)) {
      throw std::invalid_argument(std::string("config: missing key '") +
                                  key + "'");
    }
    return j.at(key);
  };

  SweepSpec spec;
  SystemConfig& c = spec.base;
  c.K = require("K").get<int>();
  c.N_B = require("N_B").get<int>();
  c.N_R = require("N_R").get<int>();
  c.N_k = require("N_k").get<std::vector<int>>();
  c.L_k = require("L_k").get<std::vector<int>>();
  c.N0 = j.value("noise_power", 1.0);
  if (j.contains("weights_ul")) {
    c.w_ul = j.at("weights_ul").get<std::vector<std::vector<double>>>();
  } else {
    for (int lk : c.L_k) c.w_ul.push_back(std::vector<double>(lk, 1.0));
  }
  if (j.contains("weights_dl")) {
    c.w_dl = j.at("weights_dl").get<std::vector<std::vector<double>>>();
  } else {
    for (int lk : c.L_k) c.w_dl.push_back(std::vector<double>(lk, 1.0));
  }

  spec.snr_db_points = require("snr_db").get<std::vector<double>>();
  if (j.contains("n_b")) {
    spec.nb_points = j.at("n_b").get<std::vector<int>>();
  }
  spec.trials = require("trials").get<int>();
  spec.master_seed = j.value("master_seed", std::uint64_t{0});
  for (const auto& name : require("schemes")) {
    spec.schemes.push_back(scheme_from_name(name.get<std::string>()));
  }
  spec.validate();
  // Validate the derived config at every sweep point up front, so a bad
  // antenna/stream combination fails with exit code 1, not mid-run.
  std::vector<int> nb = spec.nb_points;
  if (nb.empty()) nb.push_back(spec.base.N_B);
  for (double snr : spec.snr_db_points) {
    for (int n_b : nb) config_at_point(spec.base, snr, n_b);
  }
  return spec;
}

inline SweepSpec load_sweep_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return parse_sweep_spec(j);
}

inline nlohmann::json records_to_json(const std::vector<TrialRecord>& records,
                                      const SweepSpec& spec) {
  nlohmann::json out;
  out["master_seed"] = spec.master_seed;
  out["trials"] = spec.trials;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json e;
    e["scheme"] = scheme_name(r.scheme);
    e["snr_db"] = r.snr_db;
    e["n_b"] = r.n_b;
    e["trial"] = r.trial;
    e["seed"] = r.seed;
    e["feasible"] = r.feasible;
    if (!r.note.empty()) e["note"] = r.note;
    if (r.feasible) {
      e["min_weighted_sinr_db"] = r.min_weighted_sinr_db;
      e["sum_rate_bps_hz"] = r.sum_rate_bps_hz;
      e["iterations"] = r.iterations;
      e["sinr_ul_db"] = r.sinr_ul_db;
      e["sinr_dl_db"] = r.sinr_dl_db;
    }
    e["wall_ms"] = r.wall_ms;
    arr.push_back(e);
  }
  out["records"] = arr;
  nlohmann::json agg = nlohmann::json::array();
  for (const auto& row : aggregate(records)) {
    nlohmann::json e;
    e["scheme"] = scheme_name(row.scheme);
    e["snr_db"] = row.snr_db;
    e["n_b"] = row.n_b;
    e["mean_sum_rate_bps_hz"] = row.mean_sum_rate;
    e["stderr_sum_rate_bps_hz"] = row.stderr_sum_rate;
    e["mean_min_weighted_sinr_db"] = row.mean_min_weighted_sinr_db;
    e["stderr_min_weighted_sinr_db"] = row.stderr_min_weighted_sinr_db;
    e["feasible_fraction"] = row.feasible_fraction;
    agg.push_back(e);
  }
  out["aggregate"] = agg;
  return out;
}

}  // namespace twr

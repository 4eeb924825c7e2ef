// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo sweep harness: seeded channel draws over (SNR, N_B) grid
// points, per-scheme transceiver design, metric records, CSV/JSON output.
//
// Determinism contract: the channel seed for a trial is a fixed 64-bit mix
// of (master_seed, point index, trial index) and is scheme-independent, so
// every scheme sees identical channels and reruns are byte-identical
// regardless of thread count. Records are written into preallocated slots
// in canonical (scheme, point, trial) order. Wall-clock time is kept in
// TrialRecord and the JSON report but deliberately left out of the CSV so
// the CSV stays byte-reproducible.

#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "twr/baselines.hpp"
#include "twr/channel.hpp"
#include "twr/config.hpp"
#include "twr/metrics.hpp"
#include "twr/stage_one.hpp"
#include "twr/stage_two.hpp"

namespace twr {

enum class Scheme { Proposed, ChannelInversionNaive, SdmaZf };

inline const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::Proposed: return "proposed";
    case Scheme::ChannelInversionNaive: return "channel_inversion";
    case Scheme::SdmaZf: return "sdma_zf";
  }
  return "?";
}

struct SweepSpec {
  SystemConfig base;                 // antenna/stream/weight template;
                                     // powers are derived per SNR point
  std::vector<double> snr_db_points;
  std::vector<int> nb_points;        // empty: keep base.N_B
  int trials = 1;
  std::uint64_t master_seed = 0;
  std::vector<Scheme> schemes;

  void validate() const {
    if (trials < 1) throw std::invalid_argument("spec: trials must be >= 1");
    if (snr_db_points.empty()) {
      throw std::invalid_argument("spec: no SNR points");
    }
    if (schemes.empty()) throw std::invalid_argument("spec: no schemes");
  }
};

struct TrialRecord {
  Scheme scheme = Scheme::Proposed;
  double snr_db = 0.0;
  int n_b = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  bool feasible = false;
  std::string note;                  // reason when infeasible/failed
  double min_weighted_sinr_db = 0.0;
  double sum_rate_bps_hz = 0.0;
  int iterations = 0;
  std::vector<double> sinr_ul_db;    // flat stream index
  std::vector<double> sinr_dl_db;
  double wall_ms = 0.0;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Channel seed for (master, point, trial); scheme never enters the mix.
inline std::uint64_t derive_seed(std::uint64_t master, int point, int trial) {
  return splitmix64(splitmix64(master + 0x9E3779B97F4A7C15ULL *
                                            (std::uint64_t(point) + 1)) +
                    std::uint64_t(trial) + 1);
}

/// Per-stream power rule: equal power per data stream at every node,
/// P_B / L = P_R / L = P_k / L_k, with SNR defined as P_B / N0.
inline SystemConfig config_at_point(const SystemConfig& base, double snr_db,
                                    int n_b) {
  SystemConfig c = base;
  c.N_B = n_b;
  const int L = c.total_streams();
  c.P_B = c.N0 * std::pow(10.0, snr_db / 10.0);
  c.P_R = c.P_B;
  c.P_k.resize(c.K);
  for (int k = 0; k < c.K; ++k) c.P_k[k] = c.P_B * c.L_k[k] / L;
  c.validate();
  return c;
}

namespace detail {

inline void fill_metrics(TrialRecord& rec, const TransceiverSet& t,
                         const ChannelSet& ch, const SystemConfig& c) {
  rec.min_weighted_sinr_db = 10.0 * std::log10(min_weighted_sinr(t, ch, c));
  rec.sum_rate_bps_hz = sum_rate(t, ch, c);
  for (StreamId s : c.all_streams(Direction::Uplink)) {
    rec.sinr_ul_db.push_back(10.0 * std::log10(ul_sinr(t, ch, c, s)));
  }
  for (StreamId s : c.all_streams(Direction::Downlink)) {
    rec.sinr_dl_db.push_back(10.0 * std::log10(dl_sinr(t, ch, c, s)));
  }
}

}  // namespace detail

/// Design + evaluate one scheme on one channel draw. Infeasibility and
/// numerical failures are flagged on the record, never thrown.
inline TrialRecord run_trial(Scheme scheme, const SystemConfig& c,
                             const ChannelSet& ch, double snr_db, int trial,
                             std::uint64_t seed) {
  TrialRecord rec;
  rec.scheme = scheme;
  rec.snr_db = snr_db;
  rec.n_b = c.N_B;
  rec.trial = trial;
  rec.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  try {
    switch (scheme) {
      case Scheme::Proposed: {
        if (!check_alignment_feasibility(c, ch)) {
          rec.note = "alignment infeasible";
          break;
        }
        StageOneResult s1 = stage_one_search(c, ch);
        StageTwoResult s2 = alternating_optimization(s1, c, ch);
        rec.iterations = s2.iterations;
        detail::fill_metrics(rec, s2.transceivers, ch, c);
        rec.feasible = true;
        break;
      }
      case Scheme::ChannelInversionNaive: {
        if (c.N_B < c.N_R) {
          rec.note = "requires N_B >= N_R";
          break;
        }
        TransceiverSet t = baseline_channel_inversion(c, ch);
        detail::fill_metrics(rec, t, ch, c);
        rec.feasible = true;
        break;
      }
      case Scheme::SdmaZf: {
        if (!check_sdma_feasibility(c, ch)) {
          rec.note = "sdma infeasible";
          break;
        }
        TransceiverSet t = baseline_sdma(c, ch);
        detail::fill_metrics(rec, t, ch, c);
        rec.feasible = true;
        break;
      }
    }
  } catch (const std::exception& e) {
    rec.feasible = false;
    rec.note = e.what();
    rec.sinr_ul_db.clear();
    rec.sinr_dl_db.clear();
  }
  rec.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - start)
                    .count();
  return rec;
}

/// The full sweep. Record count is always |schemes| x |points| x trials and
/// record content does not depend on num_threads.
inline std::vector<TrialRecord> run_sweep(const SweepSpec& spec,
                                          int num_threads = 1) {
  spec.validate();
  std::vector<int> nb = spec.nb_points;
  if (nb.empty()) nb.push_back(spec.base.N_B);

  struct Task {
    double snr_db;
    int n_b;
    int point;
    int trial;
  };
  std::vector<Task> tasks;
  int point = 0;
  for (double snr : spec.snr_db_points) {
    for (int n_b : nb) {
      for (int trial = 0; trial < spec.trials; ++trial) {
        tasks.push_back({snr, n_b, point, trial});
      }
      ++point;
    }
  }

  const int S = static_cast<int>(spec.schemes.size());
  std::vector<TrialRecord> records(tasks.size() * S);

  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& task = tasks[i];
      const SystemConfig c =
          config_at_point(spec.base, task.snr_db, task.n_b);
      const std::uint64_t seed =
          derive_seed(spec.master_seed, task.point, task.trial);
      const ChannelSet ch = sample_channels(c, seed);
      for (int s = 0; s < S; ++s) {
        // Canonical order: scheme-major, then point, then trial.
        records[s * tasks.size() + i] = run_trial(
            spec.schemes[s], c, ch, task.snr_db, task.trial, seed);
      }
    }
  };

  if (num_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < num_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return records;
}

struct AggregateRow {
  Scheme scheme;
  double snr_db;
  int n_b;
  double mean_sum_rate = 0.0;
  double stderr_sum_rate = 0.0;
  double mean_min_weighted_sinr_db = 0.0;
  double stderr_min_weighted_sinr_db = 0.0;
  double feasible_fraction = 0.0;
  int count = 0;  // feasible trials
};

inline std::vector<AggregateRow> aggregate(
    const std::vector<TrialRecord>& records) {
  if (records.empty()) throw std::invalid_argument("aggregate: no records");
  std::vector<AggregateRow> rows;
  auto find_row = [&](const TrialRecord& r) -> AggregateRow& {
    for (auto& row : rows) {
      if (row.scheme == r.scheme && row.snr_db == r.snr_db &&
          row.n_b == r.n_b) {
        return row;
      }
    }
    rows.push_back({r.scheme, r.snr_db, r.n_b});
    return rows.back();
  };
  // Two passes: accumulate means, then spread.
  std::vector<int> totals;
  for (const auto& r : records) {
    AggregateRow& row = find_row(r);
    if (r.feasible) {
      row.mean_sum_rate += r.sum_rate_bps_hz;
      row.mean_min_weighted_sinr_db += r.min_weighted_sinr_db;
      ++row.count;
    }
    row.feasible_fraction += 1.0;  // total trials for now
  }
  for (auto& row : rows) {
    const double total = row.feasible_fraction;
    row.feasible_fraction = total > 0 ? row.count / total : 0.0;
    if (row.count > 0) {
      row.mean_sum_rate /= row.count;
      row.mean_min_weighted_sinr_db /= row.count;
    }
  }
  for (const auto& r : records) {
    if (!r.feasible) continue;
    AggregateRow& row = find_row(r);
    row.stderr_sum_rate +=
        (r.sum_rate_bps_hz - row.mean_sum_rate) *
        (r.sum_rate_bps_hz - row.mean_sum_rate);
    row.stderr_min_weighted_sinr_db +=
        (r.min_weighted_sinr_db - row.mean_min_weighted_sinr_db) *
        (r.min_weighted_sinr_db - row.mean_min_weighted_sinr_db);
  }
  for (auto& row : rows) {
    if (row.count > 1) {
      row.stderr_sum_rate =
          std::sqrt(row.stderr_sum_rate / (row.count - 1) / row.count);
      row.stderr_min_weighted_sinr_db = std::sqrt(
          row.stderr_min_weighted_sinr_db / (row.count - 1) / row.count);
    } else {
      row.stderr_sum_rate = 0.0;
      row.stderr_min_weighted_sinr_db = 0.0;
    }
  }
  return rows;
}

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace detail

/// Canonical CSV. Column set is fixed by the stream layout of the base
/// config; absent metrics on infeasible rows are empty fields.
inline std::string to_csv(const std::vector<TrialRecord>& records,
                          const SystemConfig& base) {
  std::ostringstream out;
  out << "scheme,snr_db,n_b,trial,seed,feasible,min_weighted_sinr_db,"
         "sum_rate_bps_hz,iterations";
  for (int k = 0; k < base.K; ++k) {
    for (int l = 0; l < base.L_k[k]; ++l) {
      out << ",sinr_ul_" << (k + 1) << "_" << (l + 1) << "_db";
    }
  }
  for (int k = 0; k < base.K; ++k) {
    for (int l = 0; l < base.L_k[k]; ++l) {
      out << ",sinr_dl_" << (k + 1) << "_" << (l + 1) << "_db";
    }
  }
  out << "\n";
  const int L = base.total_streams();
  for (const auto& r : records) {
    out << scheme_name(r.scheme) << "," << detail::format_double(r.snr_db)
        << "," << r.n_b << "," << r.trial << "," << r.seed << ","
        << (r.feasible ? 1 : 0) << ",";
    if (r.feasible) {
      out << detail::format_double(r.min_weighted_sinr_db) << ","
          << detail::format_double(r.sum_rate_bps_hz) << "," << r.iterations;
      for (int j = 0; j < L; ++j) {
        out << "," << detail::format_double(r.sinr_ul_db[j]);
      }
      for (int j = 0; j < L; ++j) {
        out << "," << detail::format_double(r.sinr_dl_db[j]);
      }
    } else {
      out << ",," << r.iterations;
      for (int j = 0; j < 2 * L; ++j) out << ",";
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace twr

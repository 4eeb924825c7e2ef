// SPDX-License-Identifier: Apache-2.0
//
// System configuration and stream identifiers for the cellular two-way
// relaying model: one base station (BS), one relay station (RS), K mobile
// stations (MSs) exchanging L_k data streams each with the BS.

#pragma once

#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace twr {

enum class Direction { Uplink, Downlink };

struct StreamId {
  int k;          // user index, 0-based
  int l;          // stream index within user, 0-based
  Direction dir;
};

struct SystemConfig {
  int K = 0;                 // number of MSs
  int N_B = 0;               // BS antennas
  int N_R = 0;               // RS antennas
  std::vector<int> N_k;      // MS antennas, length K
  std::vector<int> L_k;      // streams per user, length K
  double P_B = 0.0;          // BS power budget (linear)
  double P_R = 0.0;          // RS power budget (linear)
  std::vector<double> P_k;   // MS power budgets (linear), length K
  double N0 = 1.0;           // noise power (linear)
  std::vector<std::vector<double>> w_ul;  // per-stream UL weights, ragged
  std::vector<std::vector<double>> w_dl;  // per-stream DL weights, ragged

  int total_streams() const {
    return std::accumulate(L_k.begin(), L_k.end(), 0);
  }

  /// Offset of user k's streams in the global stream ordering
  /// (users ascending, streams within a user ascending).
  int stream_offset(int k) const {
    return std::accumulate(L_k.begin(), L_k.begin() + k, 0);
  }

  int stream_index(int k, int l) const { return stream_offset(k) + l; }

  double weight(const StreamId& s) const {
    return s.dir == Direction::Uplink ? w_ul[s.k][s.l] : w_dl[s.k][s.l];
  }

  void validate() const {
    if (K < 1) throw std::invalid_argument("config: K must be >= 1");
    if (static_cast<int>(N_k.size()) != K ||
        static_cast<int>(L_k.size()) != K ||
        static_cast<int>(P_k.size()) != K ||
        static_cast<int>(w_ul.size()) != K ||
        static_cast<int>(w_dl.size()) != K) {
      throw std::invalid_argument("config: per-user array length != K");
    }
    const int L = total_streams();
    for (int k = 0; k < K; ++k) {
      if (L_k[k] < 1) throw std::invalid_argument("config: L_k must be >= 1");
      if (N_k[k] < L_k[k]) {
        throw std::invalid_argument("config: N_k must be >= L_k");
      }
      if (P_k[k] <= 0.0) {
        throw std::invalid_argument("config: MS power must be positive");
      }
      if (static_cast<int>(w_ul[k].size()) != L_k[k] ||
          static_cast<int>(w_dl[k].size()) != L_k[k]) {
        throw std::invalid_argument("config: weight list length != L_k");
      }
      for (int l = 0; l < L_k[k]; ++l) {
        if (w_ul[k][l] < 1.0 || w_dl[k][l] < 1.0) {
          throw std::invalid_argument("config: weights must be >= 1");
        }
      }
    }
    if (N_B < L) throw std::invalid_argument("config: N_B must be >= L");
    if (N_R < L) throw std::invalid_argument("config: N_R must be >= L");
    if (P_B <= 0.0 || P_R <= 0.0 || N0 <= 0.0) {
      throw std::invalid_argument("config: powers and N0 must be positive");
    }
  }

  std::vector<StreamId> all_streams(Direction dir) const {
    std::vector<StreamId> out;
    for (int k = 0; k < K; ++k) {
      for (int l = 0; l < L_k[k]; ++l) out.push_back({k, l, dir});
    }
    return out;
  }
};

}  // namespace twr

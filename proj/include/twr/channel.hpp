// SPDX-License-Identifier: Apache-2.0
//
// Channel model: i.i.d. Rayleigh MAC-phase channels (reverse channels are
// transposes by reciprocity and never stored) plus the rank/feasibility
// tests gating signal space alignment and SDMA-only processing.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "twr/config.hpp"
#include "twr/linalg.hpp"

namespace twr {

struct ChannelSet {
  CMatrix H_RB;                // N_R x N_B, BS -> RS
  std::vector<CMatrix> H_Rk;   // K matrices, N_R x N_k, MS k -> RS
};

namespace detail {

/// Deterministic standard normal via Box-Muller on mt19937_64 raw output.
/// std::normal_distribution is implementation-defined, so it is avoided.
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed) : rng_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  Complex next_cn01() {  // CN(0,1): real/imag parts iid N(0, 1/2)
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    return Complex(next() * inv_sqrt2, next() * inv_sqrt2);
  }

 private:
  double uniform01() {
    // 53 random bits mapped into (0, 1]; never returns 0 so log() is safe.
    return (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;
  }

  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

inline CMatrix random_cn01(Eigen::Index rows, Eigen::Index cols,
                           NormalSource& src) {
  CMatrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {     // column-by-column fill
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = src.next_cn01();
  }
  return m;
}

}  // namespace detail

inline ChannelSet sample_channels(const SystemConfig& config,
                                  std::uint64_t seed) {
  detail::NormalSource src(seed);
  ChannelSet ch;
  ch.H_RB = detail::random_cn01(config.N_R, config.N_B, src);
  ch.H_Rk.reserve(config.K);
  for (int k = 0; k < config.K; ++k) {
    ch.H_Rk.push_back(detail::random_cn01(config.N_R, config.N_k[k], src));
  }
  return ch;
}

/// Nullity of the relay-side signal space not occupied by the channel's
/// range: N_R - rank. This is the nullity that enters the alignment and
/// SDMA dimension counts (rank + nullity = N_R for every RS-side channel).
inline int rs_side_nullity(const CMatrix& h, int n_r) {
  return n_r - numerical_rank(h);
}

/// Rank conditions under which aligning UL and DL signal spaces is
/// feasible: rank(H_Rk) >= L_k, rank(H_RB) >= L, and every user's channel
/// leaves room for L aligned directions at the RS.
inline bool check_alignment_feasibility(const SystemConfig& config,
                                        const ChannelSet& channels) {
  const int L = config.total_streams();
  if (numerical_rank(channels.H_RB) < L) return false;
  for (int k = 0; k < config.K; ++k) {
    int rank_k = numerical_rank(channels.H_Rk[k]);
    if (rank_k < config.L_k[k]) return false;
    if (L > rank_k + rs_side_nullity(channels.H_Rk[k], config.N_R)) {
      return false;
    }
  }
  return true;
}

/// SDMA-only processing must keep all 2L streams linearly independent at
/// the relay, so the dimension count doubles.
inline bool check_sdma_feasibility(const SystemConfig& config,
                                   const ChannelSet& channels) {
  const int L = config.total_streams();
  if (numerical_rank(channels.H_RB) < L) return false;
  for (int k = 0; k < config.K; ++k) {
    int rank_k = numerical_rank(channels.H_Rk[k]);
    if (rank_k < config.L_k[k]) return false;
    if (2 * L > rank_k + rs_side_nullity(channels.H_Rk[k], config.N_R)) {
      return false;
    }
  }
  return true;
}

/// Achievable degrees of freedom of two-way relaying with i.i.d. channels:
/// min{N_B, N_R, sum_k N_k}.
inline int achievable_dof(const SystemConfig& config) {
  int sum_nk = 0;
  for (int n : config.N_k) sum_nk += n;
  return std::min({config.N_B, config.N_R, sum_nk});
}

}  // namespace twr

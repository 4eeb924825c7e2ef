// SPDX-License-Identifier: Apache-2.0
//
// Stage one: align each UL/DL pair at the relay and maximize the minimum
// weighted first-hop SINR. MS precoders come from eigenmode beams, the RS
// equalizer is the zero-forcing pseudo-inverse of the stacked effective UL
// directions, BS beams live in per-stream null spaces, and powers follow
// the closed-form allocation that equalizes weighted SINRs per node.

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "twr/channel.hpp"
#include "twr/config.hpp"
#include "twr/linalg.hpp"
#include "twr/transceiver.hpp"

namespace twr {

struct BeamSelection {
  std::vector<std::vector<int>> ms_beams;  // per user: L_k distinct indices
  std::vector<int> bs_beams;               // per stream (flat index): candidate
};

struct PowerAllocation {
  std::vector<std::vector<double>> lambda_ms;  // per user, per stream
  std::vector<double> lambda_bs;               // flat over all DL streams
};

struct StageOneResult {
  TransceiverSet transceivers;        // W_B, W_k, A_R, phi, psi populated
  std::vector<double> kappa_ul;       // flat stream index
  std::vector<double> kappa_dl;
  double achieved_min_weighted_sinr = 0.0;
  BeamSelection selection;
  PowerAllocation allocation;
};

/// Unit-norm eigenmode beam candidates for one MS: right singular vectors
/// of its channel whose singular value clears the rank tolerance.
inline std::vector<CVector> ms_candidate_beams(const CMatrix& h) {
  SvdResult s = svd(h);
  double smax = s.singular_values.size() > 0 ? s.singular_values(0) : 0.0;
  double tol = default_sv_tolerance(smax, h.rows(), h.cols());
  std::vector<CVector> beams;
  for (Eigen::Index i = 0; i < s.singular_values.size(); ++i) {
    if (s.singular_values(i) > tol) beams.push_back(s.right_vectors.col(i));
  }
  return beams;
}

/// A_R = pinv of the horizontally stacked effective UL directions
/// H_{R,k} g_k^{(l)}. Empty optional when the stacking is rank deficient
/// (the selection is inadmissible).
inline std::optional<CMatrix> rs_zf_equalizer(
    const ChannelSet& channels, const std::vector<std::vector<int>>& ms_beams,
    const std::vector<std::vector<CVector>>& candidates,
    const SystemConfig& config) {
  const int L = config.total_streams();
  CMatrix stacked(config.N_R, L);
  for (int k = 0; k < config.K; ++k) {
    for (int l = 0; l < config.L_k[k]; ++l) {
      stacked.col(config.stream_index(k, l)) =
          channels.H_Rk[k] * candidates[k][ms_beams[k][l]];
    }
  }
  if (numerical_rank(stacked) < L) return std::nullopt;
  return pinv(stacked);
}

/// BS beam candidates for stream (k,l): the orthonormal basis of
/// null(A-without-own-row * H_RB), plus the projection of the matched
/// direction onto that null space (it maximizes the effective DL gain).
inline std::vector<CVector> bs_candidate_beams(const CMatrix& a_r,
                                               const CMatrix& h_rb, int k,
                                               int l,
                                               const SystemConfig& config) {
  const int L = config.total_streams();
  const int row = config.stream_index(k, l);
  CMatrix a_tilde(L - 1, config.N_R);
  if (row > 0) a_tilde.topRows(row) = a_r.topRows(row);
  if (row < L - 1) a_tilde.bottomRows(L - 1 - row) = a_r.bottomRows(L - 1 - row);
  CMatrix basis = null_space(a_tilde * h_rb);
  if (basis.cols() == 0) {
    throw std::invalid_argument("bs_candidate_beams: empty null space "
                                "(requires N_B >= L)");
  }
  std::vector<CVector> out;
  for (Eigen::Index j = 0; j < basis.cols(); ++j) out.push_back(basis.col(j));
  CVector matched = (a_r.row(row) * h_rb).adjoint();
  CVector projected = basis * (basis.adjoint() * matched);
  double n = projected.norm();
  if (n > 1e-12 * std::max(1.0, matched.norm())) out.push_back(projected / n);
  return out;
}

/// Effective first-hop gain coefficients: gamma_tilde = kappa * lambda.
/// Zero kappa marks an unusable beam (selection rejected by the search).
inline void effective_gains_kappa(
    const CMatrix& a_r, const ChannelSet& channels,
    const std::vector<std::vector<int>>& ms_beams,
    const std::vector<std::vector<CVector>>& ms_cands,
    const std::vector<CVector>& bs_dirs, const SystemConfig& config,
    std::vector<double>& kappa_ul, std::vector<double>& kappa_dl) {
  const int L = config.total_streams();
  kappa_ul.assign(L, 0.0);
  kappa_dl.assign(L, 0.0);
  for (int k = 0; k < config.K; ++k) {
    for (int l = 0; l < config.L_k[k]; ++l) {
      const int j = config.stream_index(k, l);
      const CMatrix a_row = a_r.row(j);
      const double denom = config.N0 * a_row.squaredNorm();
      const Complex g_u =
          (a_row * channels.H_Rk[k] * ms_cands[k][ms_beams[k][l]])(0, 0);
      const Complex g_d = (a_row * channels.H_RB * bs_dirs[j])(0, 0);
      kappa_ul[j] = std::norm(g_u) / denom;
      kappa_dl[j] = std::norm(g_d) / denom;
    }
  }
}

/// Closed-form max-min allocation: lambda proportional to weight / kappa,
/// which equalizes the weighted first-hop SINRs within each node.
inline PowerAllocation power_allocation(const std::vector<double>& kappa_ul,
                                        const std::vector<double>& kappa_dl,
                                        const SystemConfig& config) {
  for (double k : kappa_ul) {
    if (k <= 0.0) throw std::domain_error("power_allocation: kappa <= 0");
  }
  for (double k : kappa_dl) {
    if (k <= 0.0) throw std::domain_error("power_allocation: kappa <= 0");
  }
  PowerAllocation alloc;
  alloc.lambda_ms.resize(config.K);
  alloc.lambda_bs.assign(config.total_streams(), 0.0);
  double bs_sum = 0.0;
  for (int k = 0; k < config.K; ++k) {
    double ms_sum = 0.0;
    for (int l = 0; l < config.L_k[k]; ++l) {
      ms_sum += config.w_ul[k][l] / kappa_ul[config.stream_index(k, l)];
      bs_sum += config.w_dl[k][l] / kappa_dl[config.stream_index(k, l)];
    }
    alloc.lambda_ms[k].resize(config.L_k[k]);
    for (int l = 0; l < config.L_k[k]; ++l) {
      alloc.lambda_ms[k][l] = config.w_ul[k][l] /
                              kappa_ul[config.stream_index(k, l)] *
                              config.P_k[k] / ms_sum;
    }
  }
  for (int k = 0; k < config.K; ++k) {
    for (int l = 0; l < config.L_k[k]; ++l) {
      const int j = config.stream_index(k, l);
      alloc.lambda_bs[j] = config.w_dl[k][l] / kappa_dl[j] * config.P_B / bs_sum;
    }
  }
  return alloc;
}

namespace detail {

/// Min weighted first-hop SINR achieved by the closed-form allocation:
/// per-MS value P_k / sum_q w/kappa, BS value P_B / sum w/kappa.
inline double stage_one_objective(const std::vector<double>& kappa_ul,
                                  const std::vector<double>& kappa_dl,
                                  const SystemConfig& config) {
  double worst = std::numeric_limits<double>::infinity();
  double bs_sum = 0.0;
  for (int k = 0; k < config.K; ++k) {
    double ms_sum = 0.0;
    for (int l = 0; l < config.L_k[k]; ++l) {
      const int j = config.stream_index(k, l);
      if (kappa_ul[j] <= 0.0 || kappa_dl[j] <= 0.0) return -1.0;
      ms_sum += config.w_ul[k][l] / kappa_ul[j];
      bs_sum += config.w_dl[k][l] / kappa_dl[j];
    }
    worst = std::min(worst, config.P_k[k] / ms_sum);
  }
  return std::min(worst, config.P_B / bs_sum);
}

/// All L_k-subsets of {0..n-1} in lexicographic order (deterministic
/// enumeration and tie-breaking).
inline std::vector<std::vector<int>> index_subsets(int n, int r) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  std::function<void(int)> rec = [&](int start) {
    if (static_cast<int>(cur.size()) == r) {
      out.push_back(cur);
      return;
    }
    for (int i = start; i <= n - (r - static_cast<int>(cur.size())); ++i) {
      cur.push_back(i);
      rec(i + 1);
      cur.pop_back();
    }
  };
  rec(0);
  return out;
}

}  // namespace detail

/// Exhaustive max-min search over MS beam subsets and BS beam candidates.
/// Deterministic: candidates are enumerated lexicographically and ties keep
/// the first (smallest) index tuple. Above `enumeration_cap` evaluated
/// selections the search degrades to a greedy per-stream BS choice.
inline StageOneResult stage_one_search(const SystemConfig& config,
                                       const ChannelSet& channels,
                                       std::int64_t enumeration_cap = 100000) {
  config.validate();
  const int L = config.total_streams();

  std::vector<std::vector<CVector>> ms_cands(config.K);
  std::vector<std::vector<std::vector<int>>> ms_subsets(config.K);
  for (int k = 0; k < config.K; ++k) {
    ms_cands[k] = ms_candidate_beams(channels.H_Rk[k]);
    if (static_cast<int>(ms_cands[k].size()) < config.L_k[k]) {
      throw std::domain_error("stage_one_search: channel rank below L_k");
    }
    ms_subsets[k] =
        detail::index_subsets(static_cast<int>(ms_cands[k].size()),
                              config.L_k[k]);
  }

  double best_obj = -1.0;
  std::optional<BeamSelection> best_sel;
  CMatrix best_a_r;
  std::vector<CVector> best_bs_dirs;
  std::vector<double> best_ku, best_kd;
  std::int64_t evaluated = 0;

  std::vector<int> subset_choice(config.K, 0);
  bool ms_done = false;
  while (!ms_done) {
    std::vector<std::vector<int>> ms_beams(config.K);
    for (int k = 0; k < config.K; ++k) {
      ms_beams[k] = ms_subsets[k][subset_choice[k]];
    }
    auto a_r = rs_zf_equalizer(channels, ms_beams, ms_cands, config);
    if (a_r) {
      std::vector<std::vector<CVector>> bs_cands(L);
      std::vector<int> cand_count(L);
      for (int k = 0; k < config.K; ++k) {
        for (int l = 0; l < config.L_k[k]; ++l) {
          const int j = config.stream_index(k, l);
          bs_cands[j] = bs_candidate_beams(*a_r, channels.H_RB, k, l, config);
          cand_count[j] = static_cast<int>(bs_cands[j].size());
        }
      }

      std::int64_t combos = 1;
      for (int j = 0; j < L; ++j) {
        combos *= cand_count[j];
        if (combos > enumeration_cap) break;
      }
      const bool greedy = evaluated + combos > enumeration_cap;

      auto try_selection = [&](const std::vector<int>& bs_pick) {
        ++evaluated;
        std::vector<CVector> bs_dirs(L);
        for (int j = 0; j < L; ++j) bs_dirs[j] = bs_cands[j][bs_pick[j]];
        std::vector<double> ku, kd;
        effective_gains_kappa(*a_r, channels, ms_beams, ms_cands, bs_dirs,
                              config, ku, kd);
        double obj = detail::stage_one_objective(ku, kd, config);
        if (obj > best_obj) {
          best_obj = obj;
          best_sel = BeamSelection{ms_beams, bs_pick};
          best_a_r = *a_r;
          best_bs_dirs = bs_dirs;
          best_ku = ku;
          best_kd = kd;
        }
      };

      if (greedy) {
        // Greedy fallback: the BS-side objective is separable in the
        // per-stream gains, so pick each stream's largest-gain candidate.
        std::vector<int> pick(L, 0);
        for (int k = 0; k < config.K; ++k) {
          for (int l = 0; l < config.L_k[k]; ++l) {
            const int j = config.stream_index(k, l);
            const CMatrix a_row = a_r->row(j);
            double best_gain = -1.0;
            for (int cidx = 0; cidx < cand_count[j]; ++cidx) {
              double g = std::norm(
                  (a_row * channels.H_RB * bs_cands[j][cidx])(0, 0));
              if (g > best_gain) {
                best_gain = g;
                pick[j] = cidx;
              }
            }
          }
        }
        try_selection(pick);
      } else {
        std::vector<int> pick(L, 0);
        bool done = false;
        while (!done) {
          try_selection(pick);
          done = true;
          for (int j = L - 1; j >= 0; --j) {
            if (++pick[j] < cand_count[j]) {
              done = false;
              break;
            }
            pick[j] = 0;
          }
        }
      }
    }

    ms_done = true;
    for (int k = config.K - 1; k >= 0; --k) {
      if (++subset_choice[k] < static_cast<int>(ms_subsets[k].size())) {
        ms_done = false;
        break;
      }
      subset_choice[k] = 0;
    }
  }

  if (!best_sel || best_obj <= 0.0) {
    throw std::domain_error("stage_one_search: no admissible beam selection");
  }

  StageOneResult res;
  res.selection = *best_sel;
  res.kappa_ul = best_ku;
  res.kappa_dl = best_kd;
  res.allocation = power_allocation(best_ku, best_kd, config);
  res.achieved_min_weighted_sinr = best_obj;

  TransceiverSet& t = res.transceivers;
  t.A_R = best_a_r;
  t.W_k.resize(config.K);
  t.W_B = CMatrix::Zero(config.N_B, L);
  t.phi.resize(config.K);
  t.psi.resize(config.K);
  for (int k = 0; k < config.K; ++k) {
    t.W_k[k] = CMatrix(config.N_k[k], config.L_k[k]);
    t.phi[k] = CVector(config.L_k[k]);
    t.psi[k] = CVector(config.L_k[k]);
    for (int l = 0; l < config.L_k[k]; ++l) {
      const int j = config.stream_index(k, l);
      const double sq_ms = std::sqrt(res.allocation.lambda_ms[k][l]);
      const double sq_bs = std::sqrt(res.allocation.lambda_bs[j]);
      // De-rotate the BS beam so the effective DL gain psi lands on the
      // positive real axis (a free phase choice; the UL gain phi is real
      // by the ZF construction). Keeping the gains real makes the
      // real-part-tightened SINR cones of stage two tight at every MMSE
      // fixed point instead of arbitrarily loose.
      CVector bs_dir = best_bs_dirs[j];
      const Complex chi = (best_a_r.row(j) * channels.H_RB * bs_dir)(0, 0);
      if (std::abs(chi) > 0.0) bs_dir *= std::conj(chi) / std::abs(chi);
      t.W_k[k].col(l) = sq_ms * ms_cands[k][best_sel->ms_beams[k][l]];
      t.W_B.col(j) = sq_bs * bs_dir;
      t.phi[k](l) =
          (best_a_r.row(j) * channels.H_Rk[k] * t.W_k[k].col(l))(0, 0);
      t.psi[k](l) = (best_a_r.row(j) * channels.H_RB * t.W_B.col(j))(0, 0);
    }
  }
  return res;
}

}  // namespace twr

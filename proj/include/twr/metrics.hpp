// SPDX-License-Identifier: Apache-2.0
//
// SINR / rate / power evaluators for the two-way relay link, plus a
// symbol-level Monte Carlo transmission simulator used to cross-check the
// analytic formulas.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "twr/channel.hpp"
#include "twr/config.hpp"
#include "twr/linalg.hpp"
#include "twr/transceiver.hpp"

namespace twr {

namespace detail {

inline void require_nonzero_row(const CMatrix& row, const char* what) {
  if (row.norm() == 0.0) {
    throw std::domain_error(std::string(what) + ": all-zero equalizer row");
  }
}

inline double sinr_from_terms(double desired, double interference,
                              double noise) {
  double denom = interference + noise;
  if (denom <= 0.0) {
    throw std::domain_error("SINR denominator is zero");
  }
  // Interference enters as a difference of norms; clamp tiny negative dust.
  return desired / denom;
}

}  // namespace detail

/// End-to-end UL SINR of stream (k,l): desired power through the relay over
/// residual UL interference plus relay-amplified and local noise.
inline double ul_sinr(const TransceiverSet& t, const ChannelSet& ch,
                      const SystemConfig& c, StreamId s) {
  const int k = s.k, l = s.l;
  const CMatrix w_r = t.relay_transform();
  const CMatrix v_row = t.V_B_block(c, k).row(l);
  detail::require_nonzero_row(v_row, "ul_sinr");
  const CMatrix front = v_row * ch.H_RB.transpose() * w_r;  // 1 x N_R
  const CMatrix u = effective_ul_channel(t, ch, c);
  const Complex gain = (front * ch.H_Rk[k] * t.W_k[k].col(l))(0, 0);
  const double desired = std::norm(gain);
  double interference = (front * u).squaredNorm() - desired;
  interference = std::max(interference, 0.0);
  const double noise = c.N0 * (front.squaredNorm() + v_row.squaredNorm());
  return detail::sinr_from_terms(desired, interference, noise);
}

/// End-to-end DL SINR of stream (k,l). The MS cancels its own UL echo, so
/// interference spans all DL streams plus the other users' UL streams.
inline double dl_sinr(const TransceiverSet& t, const ChannelSet& ch,
                      const SystemConfig& c, StreamId s) {
  const int k = s.k, l = s.l;
  const CMatrix w_r = t.relay_transform();
  const CMatrix v_row = t.V_k[k].row(l);
  detail::require_nonzero_row(v_row, "dl_sinr");
  const CMatrix front = v_row * ch.H_Rk[k].transpose() * w_r;  // 1 x N_R
  const CMatrix d = effective_dl_channel(t, ch);
  const CMatrix u_tilde = effective_ul_interference(t, ch, c, k);
  const Complex gain = (front * ch.H_RB * t.W_B_block(c, k).col(l))(0, 0);
  const double desired = std::norm(gain);
  double interference =
      (front * d).squaredNorm() + (front * u_tilde).squaredNorm() - desired;
  interference = std::max(interference, 0.0);
  const double noise = c.N0 * (front.squaredNorm() + v_row.squaredNorm());
  return detail::sinr_from_terms(desired, interference, noise);
}

/// Decomposed UL SINR: valid only when the alignment conditions hold, so the
/// relay output is F_R(Phi s_U + Psi s_D + A_R n_R).
inline double ul_sinr_decomposed(const TransceiverSet& t, const ChannelSet& ch,
                                 const SystemConfig& c, StreamId s) {
  const int k = s.k, l = s.l;
  const CMatrix v_row = t.V_B_block(c, k).row(l);
  detail::require_nonzero_row(v_row, "ul_sinr_decomposed");
  const CMatrix front = v_row * ch.H_RB.transpose();  // 1 x N_R
  const int j = c.stream_index(k, l);
  const Complex gain = (front * t.F_R.col(j))(0, 0) * t.phi[k](l);
  const double desired = std::norm(gain);
  double interference =
      (front * t.F_R * t.Phi(c)).squaredNorm() - desired;
  interference = std::max(interference, 0.0);
  const double noise =
      c.N0 * ((front * t.F_R * t.A_R).squaredNorm() + v_row.squaredNorm());
  return detail::sinr_from_terms(desired, interference, noise);
}

inline double dl_sinr_decomposed(const TransceiverSet& t, const ChannelSet& ch,
                                 const SystemConfig& c, StreamId s) {
  const int k = s.k, l = s.l;
  const CMatrix v_row = t.V_k[k].row(l);
  detail::require_nonzero_row(v_row, "dl_sinr_decomposed");
  const CMatrix front = v_row * ch.H_Rk[k].transpose();  // 1 x N_R
  const int j = c.stream_index(k, l);
  const Complex gain = (front * t.F_R.col(j))(0, 0) * t.psi[k](l);
  const double desired = std::norm(gain);
  double interference = (front * t.F_R * t.Psi(c)).squaredNorm() +
                        (front * t.F_R * t.Phi_tilde(c, k)).squaredNorm() -
                        desired;
  interference = std::max(interference, 0.0);
  const double noise =
      c.N0 * ((front * t.F_R * t.A_R).squaredNorm() + v_row.squaredNorm());
  return detail::sinr_from_terms(desired, interference, noise);
}

inline double stream_sinr(const TransceiverSet& t, const ChannelSet& ch,
                          const SystemConfig& c, StreamId s) {
  return s.dir == Direction::Uplink ? ul_sinr(t, ch, c, s)
                                    : dl_sinr(t, ch, c, s);
}

/// First-hop SINR of the relay-forwarded signal: |gain|^2 / (N0 ||a_row||^2).
inline double relay_forward_sinr(const TransceiverSet& t,
                                 const SystemConfig& c, StreamId s) {
  const CMatrix a_row = t.A_R_block(c, s.k).row(s.l);
  detail::require_nonzero_row(a_row, "relay_forward_sinr");
  const Complex gain =
      s.dir == Direction::Uplink ? t.phi[s.k](s.l) : t.psi[s.k](s.l);
  return std::norm(gain) / (c.N0 * a_row.squaredNorm());
}

/// Diagnostic ratio xi = gamma / gamma_tilde; the end-to-end SINR never
/// exceeds the first hop's.
inline double sinr_decomposition_ratio(const TransceiverSet& t,
                                       const ChannelSet& ch,
                                       const SystemConfig& c, StreamId s) {
  const double first_hop = relay_forward_sinr(t, c, s);
  if (first_hop == 0.0) {
    throw std::domain_error("sinr_decomposition_ratio: first-hop SINR is 0");
  }
  return stream_sinr(t, ch, c, s) / first_hop;
}

inline double per_stream_rate(double gamma) {
  if (gamma < 0.0) {
    throw std::domain_error("per_stream_rate: negative SINR");
  }
  return 0.5 * std::log2(1.0 + gamma);
}

inline double sum_rate(const TransceiverSet& t, const ChannelSet& ch,
                       const SystemConfig& c) {
  double total = 0.0;
  for (Direction dir : {Direction::Uplink, Direction::Downlink}) {
    for (StreamId s : c.all_streams(dir)) {
      total += per_stream_rate(stream_sinr(t, ch, c, s));
    }
  }
  return total;
}

inline double min_weighted_sinr(const TransceiverSet& t, const ChannelSet& ch,
                                const SystemConfig& c) {
  double best = std::numeric_limits<double>::infinity();
  for (Direction dir : {Direction::Uplink, Direction::Downlink}) {
    for (StreamId s : c.all_streams(dir)) {
      best = std::min(best, stream_sinr(t, ch, c, s) / c.weight(s));
    }
  }
  return best;
}

/// Average relay transmit power under unit-power symbols and AWGN.
inline double relay_tx_power(const TransceiverSet& t, const ChannelSet& ch,
                             const SystemConfig& c) {
  const CMatrix w_r = t.relay_transform();
  double power = (w_r * ch.H_RB * t.W_B).squaredNorm() +
                 c.N0 * w_r.squaredNorm();
  for (int k = 0; k < c.K; ++k) {
    power += (w_r * ch.H_Rk[k] * t.W_k[k]).squaredNorm();
  }
  return power;
}

/// Relay transmit power in the aligned decomposition:
/// ||F_R Phi||^2 + ||F_R Psi||^2 + N0 ||F_R A_R||^2. Equals relay_tx_power
/// whenever the alignment conditions hold.
inline double relay_tx_power_aligned(const TransceiverSet& t,
                                     const SystemConfig& c) {
  return (t.F_R * t.Phi(c)).squaredNorm() + (t.F_R * t.Psi(c)).squaredNorm() +
         c.N0 * (t.F_R * t.A_R).squaredNorm();
}

struct EmpiricalSinr {
  std::vector<double> ul;  // indexed by stream_index(k, l)
  std::vector<double> dl;
};

/// Symbol-level simulation: MAC phase, amplify-and-forward, BC phase, exact
/// self-interference subtraction, linear equalization. Per-stream SINR is
/// estimated by regressing the equalized samples on the known symbols.
inline EmpiricalSinr simulate_transmission(const TransceiverSet& t,
                                           const ChannelSet& ch,
                                           const SystemConfig& c,
                                           int num_symbols, uint64_t seed) {
  if (num_symbols < 1) {
    throw std::invalid_argument("simulate_transmission: num_symbols < 1");
  }
  const int L = c.total_streams();
  const CMatrix w_r = t.relay_transform();
  const CMatrix u_eff = effective_ul_channel(t, ch, c);  // N_R x L
  const CMatrix d_eff = effective_dl_channel(t, ch);     // N_R x L

  // Precompute the end-to-end linear maps per receive side.
  const CMatrix bs_front = ch.H_RB.transpose() * w_r;  // N_B x N_R
  std::vector<CMatrix> ms_front(c.K);
  std::vector<CMatrix> ms_self(c.K);
  for (int k = 0; k < c.K; ++k) {
    ms_front[k] = ch.H_Rk[k].transpose() * w_r;                // N_k x N_R
    ms_self[k] = ms_front[k] * ch.H_Rk[k] * t.W_k[k];          // own UL echo
  }
  const CMatrix bs_self = bs_front * ch.H_RB * t.W_B;          // own DL echo

  detail::NormalSource src(seed);
  const double noise_scale = std::sqrt(c.N0);

  // End-to-end gains of each stream's own symbol at its estimator output.
  // The simulator knows its inputs, so each sample splits exactly into the
  // stream's own contribution and the impairment (cross-stream interference,
  // forwarded relay noise, local noise); the SINR is the ratio of the two
  // measured average powers.
  const CMatrix bs_map = t.V_B * bs_front * u_eff;  // L x L
  CVector gain_u(L), gain_d(L);
  for (int j = 0; j < L; ++j) gain_u(j) = bs_map(j, j);
  for (int k = 0; k < c.K; ++k) {
    const CMatrix ms_map = t.V_k[k] * ms_front[k] * d_eff;  // L_k x L
    for (int l = 0; l < c.L_k[k]; ++l) {
      gain_d(c.stream_index(k, l)) = ms_map(l, c.stream_index(k, l));
    }
  }

  RVector ul_sig = RVector::Zero(L), dl_sig = RVector::Zero(L);
  RVector ul_imp = RVector::Zero(L), dl_imp = RVector::Zero(L);

  CVector s_u(L), s_d(L);
  for (int n = 0; n < num_symbols; ++n) {
    for (int j = 0; j < L; ++j) s_u(j) = src.next_cn01();
    for (int j = 0; j < L; ++j) s_d(j) = src.next_cn01();
    CVector n_r(c.N_R);
    for (int j = 0; j < c.N_R; ++j) n_r(j) = noise_scale * src.next_cn01();

    const CVector y_r = u_eff * s_u + d_eff * s_d + n_r;

    CVector n_b(c.N_B);
    for (int j = 0; j < c.N_B; ++j) n_b(j) = noise_scale * src.next_cn01();
    const CVector y_b = bs_front * y_r + n_b - bs_self * s_d;
    const CVector est_u = t.V_B * y_b;
    for (int j = 0; j < L; ++j) {
      const Complex own = gain_u(j) * s_u(j);
      ul_sig(j) += std::norm(own);
      ul_imp(j) += std::norm(est_u(j) - own);
    }

    for (int k = 0; k < c.K; ++k) {
      CVector n_k(c.N_k[k]);
      for (int j = 0; j < c.N_k[k]; ++j) n_k(j) = noise_scale * src.next_cn01();
      const CVector y_k = ms_front[k] * y_r + n_k -
                          ms_self[k] * s_u.segment(c.stream_offset(k),
                                                   c.L_k[k]);
      const CVector est_d = t.V_k[k] * y_k;
      for (int l = 0; l < c.L_k[k]; ++l) {
        const int j = c.stream_index(k, l);
        const Complex own = gain_d(j) * s_d(j);
        dl_sig(j) += std::norm(own);
        dl_imp(j) += std::norm(est_d(l) - own);
      }
    }
  }

  EmpiricalSinr out;
  out.ul.resize(L);
  out.dl.resize(L);
  for (int j = 0; j < L; ++j) {
    out.ul[j] = ul_sig(j) / std::max(ul_imp(j), 1e-300);
    out.dl[j] = dl_sig(j) / std::max(dl_imp(j), 1e-300);
  }
  return out;
}

}  // namespace twr

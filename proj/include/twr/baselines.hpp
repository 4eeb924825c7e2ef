// SPDX-License-Identifier: Apache-2.0
//
// Reference schemes. Both fill a TransceiverSet whose relay transformation
// is stored directly as F_R with A_R = I (the metrics only consume the
// product W_R = F_R A_R); the aligned-gain fields phi/psi stay empty and
// the decomposed SINR forms do not apply to these schemes.
//
// Baseline "channel inversion": the BS pre-inverts its channel so the DL
// streams arrive at the relay already aligned with the UL directions, and
// the relay separates streams by pseudo-inverse on receive and steers each
// one to its destination row on transmit. This is a reconstruction of the
// classic bidirectional channel-inversion scheme, not a bit-exact replica
// of any specific published variant.
//
// Baseline "SDMA": the relay spatially multiplexes all 2L streams without
// exploiting two-way alignment; needs twice the relay dimensions.

#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "twr/channel.hpp"
#include "twr/config.hpp"
#include "twr/linalg.hpp"
#include "twr/metrics.hpp"
#include "twr/transceiver.hpp"

namespace twr {

enum class BaselineKind { ChannelInversionNaive, SdmaZf };

/// MS-side defaults shared by every baseline: principal right singular
/// vectors with equal power split, and the transposed precoder as equalizer.
inline void ms_default_transceivers(const ChannelSet& ch,
                                    const SystemConfig& c,
                                    std::vector<CMatrix>& w_k,
                                    std::vector<CMatrix>& v_k) {
  w_k.resize(c.K);
  v_k.resize(c.K);
  for (int k = 0; k < c.K; ++k) {
    SvdResult s = svd(ch.H_Rk[k]);
    const double scale = std::sqrt(c.P_k[k] / c.L_k[k]);
    w_k[k] = scale * s.right_vectors.leftCols(c.L_k[k]);
    v_k[k] = w_k[k].transpose();
  }
}

namespace detail {

/// Scale F_R so the relay power budget is met with equality.
inline void scale_relay_to_budget(TransceiverSet& t, const ChannelSet& ch,
                                  const SystemConfig& c) {
  const double p = relay_tx_power(t, ch, c);
  if (p <= 0.0) throw std::domain_error("baseline: zero relay power");
  t.F_R *= std::sqrt(c.P_R / p);
}

}  // namespace detail

inline TransceiverSet baseline_channel_inversion(const SystemConfig& c,
                                                 const ChannelSet& ch) {
  if (c.N_B < c.N_R) {
    throw std::domain_error(
        "baseline_channel_inversion: requires N_B >= N_R");
  }
  const int L = c.total_streams();
  TransceiverSet t;
  ms_default_transceivers(ch, c, t.W_k, t.V_k);

  // Effective UL directions at the relay.
  const CMatrix u = [&] {
    CMatrix m(c.N_R, L);
    for (int k = 0; k < c.K; ++k) {
      m.middleCols(c.stream_offset(k), c.L_k[k]) = ch.H_Rk[k] * t.W_k[k];
    }
    return m;
  }();

  // BS pre-inversion: H_RB W_B proportional to U, so UL and DL pairs share
  // relay directions. Scaled to the BS budget.
  t.W_B = pinv(ch.H_RB) * u;
  t.W_B *= std::sqrt(c.P_B) / t.W_B.norm();

  // Per-stream receive rows at the MSs (default equalizers applied to the
  // reciprocal BC channel).
  CMatrix rx_rows(L, c.N_R);
  for (int k = 0; k < c.K; ++k) {
    rx_rows.middleRows(c.stream_offset(k), c.L_k[k]) =
        t.V_k[k] * ch.H_Rk[k].transpose();
  }

  // Separate streams on receive, steer each to its destination on transmit.
  t.A_R = CMatrix::Identity(c.N_R, c.N_R);
  t.F_R = pinv(rx_rows) * pinv(u);
  detail::scale_relay_to_budget(t, ch, c);

  // BS zero-forcing on the two-hop UL effective channel.
  t.V_B = pinv(ch.H_RB.transpose() * t.relay_transform() * u);
  return t;
}

inline TransceiverSet baseline_sdma(const SystemConfig& c,
                                    const ChannelSet& ch) {
  if (!check_sdma_feasibility(c, ch)) {
    throw std::domain_error("baseline_sdma: 2L streams not separable");
  }
  const int L = c.total_streams();
  TransceiverSet t;
  ms_default_transceivers(ch, c, t.W_k, t.V_k);

  // BS defaults: principal right singular vectors, equal power split.
  SvdResult s = svd(ch.H_RB);
  t.W_B = std::sqrt(c.P_B / L) * s.right_vectors.leftCols(L);
  t.V_B = t.W_B.transpose();

  CMatrix all_dirs(c.N_R, 2 * L);  // [U, D]
  for (int k = 0; k < c.K; ++k) {
    all_dirs.middleCols(c.stream_offset(k), c.L_k[k]) =
        ch.H_Rk[k] * t.W_k[k];
  }
  all_dirs.rightCols(L) = ch.H_RB * t.W_B;

  // Destination rows: UL streams to the BS equalizer rows, DL streams to
  // the MS equalizer rows.
  CMatrix rx_rows(2 * L, c.N_R);
  rx_rows.topRows(L) = t.V_B * ch.H_RB.transpose();
  for (int k = 0; k < c.K; ++k) {
    rx_rows.middleRows(L + c.stream_offset(k), c.L_k[k]) =
        t.V_k[k] * ch.H_Rk[k].transpose();
  }

  t.A_R = CMatrix::Identity(c.N_R, c.N_R);
  t.F_R = pinv(rx_rows) * pinv(all_dirs);
  detail::scale_relay_to_budget(t, ch, c);
  return t;
}

}  // namespace twr

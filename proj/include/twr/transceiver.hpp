// SPDX-License-Identifier: Apache-2.0
//
// Transceiver variables for the two-way relay design: BS/MS precoders, the
// RS equalizer/precoder split W_R = F_R * A_R, BS/MS equalizers, and the
// effective aligned-stream gains phi (UL) and psi (DL).

#pragma once

#include <vector>

#include "twr/channel.hpp"
#include "twr/config.hpp"
#include "twr/linalg.hpp"

namespace twr {

struct TransceiverSet {
  CMatrix W_B;                 // N_B x L, column blocks W_{B,k}
  std::vector<CMatrix> W_k;    // N_k x L_k each
  CMatrix A_R;                 // L x N_R, row blocks A_R^{(k)}
  CMatrix F_R;                 // N_R x L, column blocks F_R^{(k)}
  CMatrix V_B;                 // L x N_B, row blocks V_B^{(k)}
  std::vector<CMatrix> V_k;    // L_k x N_k each
  std::vector<CVector> phi;    // UL effective gains, length L_k each
  std::vector<CVector> psi;    // DL effective gains, length L_k each

  CMatrix relay_transform() const { return F_R * A_R; }  // W_R

  CMatrix W_B_block(const SystemConfig& c, int k) const {
    return W_B.middleCols(c.stream_offset(k), c.L_k[k]);
  }
  CMatrix A_R_block(const SystemConfig& c, int k) const {
    return A_R.middleRows(c.stream_offset(k), c.L_k[k]);
  }
  CMatrix F_R_block(const SystemConfig& c, int k) const {
    return F_R.middleCols(c.stream_offset(k), c.L_k[k]);
  }
  CMatrix V_B_block(const SystemConfig& c, int k) const {
    return V_B.middleRows(c.stream_offset(k), c.L_k[k]);
  }

  /// Phi = diag(phi^(1), ..., phi^(K)) stacked into an L x L diagonal.
  CMatrix Phi(const SystemConfig& c) const { return stack_diag(c, phi); }
  CMatrix Psi(const SystemConfig& c) const { return stack_diag(c, psi); }

  /// Phi with user k's entries zeroed: effective gains of the UL
  /// interference streams seen by MS k.
  CMatrix Phi_tilde(const SystemConfig& c, int k) const {
    CMatrix m = Phi(c);
    zero_user_block(c, k, m);
    return m;
  }
  CMatrix Psi_tilde(const SystemConfig& c, int k) const {
    CMatrix m = Psi(c);
    zero_user_block(c, k, m);
    return m;
  }

 private:
  static CMatrix stack_diag(const SystemConfig& c,
                            const std::vector<CVector>& gains) {
    const int L = c.total_streams();
    CMatrix m = CMatrix::Zero(L, L);
    for (int k = 0; k < c.K; ++k) {
      for (int l = 0; l < c.L_k[k]; ++l) {
        int j = c.stream_index(k, l);
        m(j, j) = gains[k](l);
      }
    }
    return m;
  }

  static void zero_user_block(const SystemConfig& c, int k, CMatrix& m) {
    for (int l = 0; l < c.L_k[k]; ++l) {
      int j = c.stream_index(k, l);
      m(j, j) = Complex(0.0, 0.0);
    }
  }
};

/// MAC-phase effective channel of the UL streams:
/// U = [H_{R,1} W_1, ..., H_{R,K} W_K], N_R x L.
inline CMatrix effective_ul_channel(const TransceiverSet& t,
                                    const ChannelSet& channels,
                                    const SystemConfig& c) {
  CMatrix u(c.N_R, c.total_streams());
  for (int k = 0; k < c.K; ++k) {
    u.middleCols(c.stream_offset(k), c.L_k[k]) = channels.H_Rk[k] * t.W_k[k];
  }
  return u;
}

/// MAC-phase effective channel of the DL streams: D = H_{R,B} W_B.
inline CMatrix effective_dl_channel(const TransceiverSet& t,
                                    const ChannelSet& channels) {
  return channels.H_RB * t.W_B;
}

/// U with user k's columns zeroed (UL interference seen by MS k).
inline CMatrix effective_ul_interference(const TransceiverSet& t,
                                         const ChannelSet& channels,
                                         const SystemConfig& c, int k) {
  CMatrix u = effective_ul_channel(t, channels, c);
  u.middleCols(c.stream_offset(k), c.L_k[k]).setZero();
  return u;
}

/// D with user k's columns zeroed (DL interference seen by MS k).
inline CMatrix effective_dl_interference(const TransceiverSet& t,
                                         const ChannelSet& channels,
                                         const SystemConfig& c, int k) {
  CMatrix d = effective_dl_channel(t, channels);
  d.middleCols(c.stream_offset(k), c.L_k[k]).setZero();
  return d;
}

}  // namespace twr

// SPDX-License-Identifier: Apache-2.0
//
// Stage two: fix the stage-one precoders and relay equalizer, then refine
// the relay precoder F_R and the BS/MS equalizers by alternating between
//   (a) a bisection over the target min weighted SINR gamma0, where each
//       feasibility test is a second-order-cone program in vec(F_R), and
//   (b) closed-form MMSE equalizer updates.
// The SINR cones follow the tightened (real-part) formulation, so cone
// feasibility implies every weighted SINR meets the target.

#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "twr/channel.hpp"
#include "twr/config.hpp"
#include "twr/linalg.hpp"
#include "twr/metrics.hpp"
#include "twr/socp.hpp"
#include "twr/stage_one.hpp"
#include "twr/transceiver.hpp"

namespace twr {

struct SinrConeTerms {
  CMatrix alpha_row;  // 1 x (N_R L): alpha = Re(alpha_row . vec(F_R))
  CMatrix beta_map;   // L x (N_R L): beta = beta_map . vec(F_R)
  double delta_const = 0.0;
};

struct PowerConeTerms {
  CMatrix rho_map;  // (L N_R) x (N_R L): rho = rho_map . vec(F_R)
  double budget = 0.0;  // sqrt(P_R)
};

struct BisectionConfig {
  double rel_tol = 1e-3;   // on the gamma0 interval and the outer loop
  int max_halvings = 40;
  int max_doublings = 20;
  double socp_tol = 1e-6;
  int socp_max_iter = 500;
};

struct StageTwoResult {
  TransceiverSet transceivers;
  double gamma0 = 0.0;        // achieved min weighted SINR
  std::vector<double> trace;  // min weighted SINR after each outer iteration
  int iterations = 0;
  bool converged = false;  // stop rule fired within the iteration cap
};

/// ||rho||^2 reproduces the relay transmit power for any F_R:
/// ||F_R Phi||^2 + ||F_R Psi||^2 + N0 ||F_R A_R||^2.
inline PowerConeTerms assemble_power_cone(const TransceiverSet& t,
                                          const SystemConfig& c) {
  const CMatrix phi = t.Phi(c);
  const CMatrix psi = t.Psi(c);
  CMatrix gram = phi * phi.adjoint() + psi * psi.adjoint() +
                 c.N0 * t.A_R * t.A_R.adjoint();
  PowerConeTerms out;
  out.rho_map = kron(hermitian_sqrt(gram).transpose(),
                     CMatrix::Identity(c.N_R, c.N_R));
  out.budget = std::sqrt(c.P_R);
  return out;
}

/// One tightened SINR cone per stream per direction (2L total). Satisfying
/// alpha >= ||[beta; delta]|| implies the stream's weighted SINR >= gamma0
/// under the fixed equalizers.
inline std::vector<SinrConeTerms> assemble_sinr_cones(
    double gamma0, const TransceiverSet& t, const ChannelSet& ch,
    const SystemConfig& c) {
  if (gamma0 <= 0.0) {
    throw std::invalid_argument("assemble_sinr_cones: gamma0 must be > 0");
  }
  const int L = c.total_streams();
  const CMatrix phi = t.Phi(c);
  const CMatrix psi = t.Psi(c);
  const CMatrix noise_gram = c.N0 * t.A_R * t.A_R.adjoint();

  std::vector<SinrConeTerms> cones;
  cones.reserve(2 * L);
  for (Direction dir : {Direction::Uplink, Direction::Downlink}) {
    for (StreamId s : c.all_streams(dir)) {
      const int j = c.stream_index(s.k, s.l);
      const bool ul = dir == Direction::Uplink;
      const CMatrix v_row = ul ? CMatrix(t.V_B_block(c, s.k).row(s.l))
                               : CMatrix(t.V_k[s.k].row(s.l));
      const CMatrix h = ul ? ch.H_RB : ch.H_Rk[s.k];
      const CMatrix front = v_row * h.transpose();  // 1 x N_R
      const Complex gain = ul ? t.phi[s.k](s.l) : t.psi[s.k](s.l);
      const double w = c.weight(s);

      CMatrix gram = ul ? CMatrix(phi * phi.adjoint() + noise_gram)
                        : CMatrix(psi * psi.adjoint() +
                                  t.Phi_tilde(c, s.k) *
                                      t.Phi_tilde(c, s.k).adjoint() +
                                  noise_gram);

      SinrConeTerms cone;
      const double scale =
          std::sqrt(1.0 + 1.0 / (w * gamma0)) * std::abs(gain);
      // alpha picks out column j of F_R: e_j^T kron front.
      CMatrix e_j = CMatrix::Zero(1, L);
      e_j(0, j) = 1.0;
      cone.alpha_row = scale * kron(e_j, front);
      cone.beta_map = kron(hermitian_sqrt(gram).transpose(), front);
      cone.delta_const = std::sqrt(c.N0) * v_row.norm();
      cones.push_back(std::move(cone));
    }
  }
  return cones;
}

/// Feasibility test of the relay precoder at target gamma0. Lifts all cones
/// into a real margin problem; Indeterminate counts as infeasible (keeps the
/// bisection's lower bound valid).
inline std::optional<CMatrix> solve_relay_precoder_feasibility(
    double gamma0, const TransceiverSet& t, const ChannelSet& ch,
    const SystemConfig& c, const BisectionConfig& bcfg) {
  const int L = c.total_streams();
  const int n_cplx = c.N_R * L;
  SocpProblem prob;
  prob.n = 2 * n_cplx;

  for (const SinrConeTerms& cone : assemble_sinr_cones(gamma0, t, ch, c)) {
    // Append the constant delta as an extra norm row with a zero map.
    CMatrix a(cone.beta_map.rows() + 1, n_cplx);
    a.topRows(cone.beta_map.rows()) = cone.beta_map;
    a.bottomRows(1).setZero();
    CVector b = CVector::Zero(a.rows());
    b(a.rows() - 1) = cone.delta_const;
    prob.constraints.push_back(lift_complex(a, b, cone.alpha_row, 0.0));
  }
  PowerConeTerms power = assemble_power_cone(t, c);
  prob.constraints.push_back(lift_complex(
      power.rho_map, CVector::Zero(power.rho_map.rows()),
      CMatrix::Zero(1, n_cplx), power.budget));

  SocpOutcome out = solve_margin(prob, bcfg.socp_tol, bcfg.socp_max_iter);
  if (out.status != SocpStatus::Feasible) return std::nullopt;
  const RVector& x = *out.point;
  CVector f = CVector(n_cplx);
  for (int i = 0; i < n_cplx; ++i) f(i) = Complex(x(i), x(n_cplx + i));
  return unvec(f, c.N_R, L);
}

namespace detail {

inline double min_weighted_sinr_fixed_eq(const TransceiverSet& t,
                                         const ChannelSet& ch,
                                         const SystemConfig& c) {
  double worst = std::numeric_limits<double>::infinity();
  for (StreamId s : c.all_streams(Direction::Uplink)) {
    worst = std::min(worst, ul_sinr_decomposed(t, ch, c, s) / c.weight(s));
  }
  for (StreamId s : c.all_streams(Direction::Downlink)) {
    worst = std::min(worst, dl_sinr_decomposed(t, ch, c, s) / c.weight(s));
  }
  return worst;
}

inline double max_weighted_sinr_fixed_eq(const TransceiverSet& t,
                                         const ChannelSet& ch,
                                         const SystemConfig& c) {
  double best = 0.0;
  for (StreamId s : c.all_streams(Direction::Uplink)) {
    best = std::max(best, ul_sinr_decomposed(t, ch, c, s) / c.weight(s));
  }
  for (StreamId s : c.all_streams(Direction::Downlink)) {
    best = std::max(best, dl_sinr_decomposed(t, ch, c, s) / c.weight(s));
  }
  return best;
}

}  // namespace detail

/// Bisection over gamma0 with the incumbent F_R as the fallback: the
/// result never scores below the incumbent under the fixed equalizers.
inline double bisect_relay_precoder(TransceiverSet& t, const ChannelSet& ch,
                                    const SystemConfig& c,
                                    const BisectionConfig& bcfg) {
  const double incumbent = detail::min_weighted_sinr_fixed_eq(t, ch, c);
  double lo = incumbent;
  double hi = std::max(detail::max_weighted_sinr_fixed_eq(t, ch, c),
                       incumbent * (1.0 + bcfg.rel_tol) + 1e-12);

  CMatrix best_f = t.F_R;
  double best_gamma = incumbent;
  bool have_feasible = false;

  // The current SINRs may undershoot the optimum: expand the upper bound
  // while the tightened problem stays feasible there.
  for (int d = 0; d < bcfg.max_doublings; ++d) {
    auto f = solve_relay_precoder_feasibility(hi, t, ch, c, bcfg);
    if (!f) break;
    best_f = *f;
    have_feasible = true;
    lo = hi;
    hi *= 2.0;
  }

  for (int it = 0; it < bcfg.max_halvings; ++it) {
    if (hi - lo <= bcfg.rel_tol * std::max(lo, 1e-12)) break;
    const double mid = 0.5 * (lo + hi);
    auto f = solve_relay_precoder_feasibility(mid, t, ch, c, bcfg);
    if (f) {
      best_f = *f;
      have_feasible = true;
      lo = mid;
    } else {
      hi = mid;
    }
  }

  if (have_feasible) {
    TransceiverSet cand = t;
    cand.F_R = best_f;
    const double achieved = detail::min_weighted_sinr_fixed_eq(cand, ch, c);
    // Monotonicity guard: only adopt the solve if it beats the incumbent.
    if (achieved >= best_gamma) {
      t.F_R = best_f;
      return lo;  // the last feasible target gamma0
    }
  }
  return incumbent;
}

/// MMSE equalizer at the BS: V_B = G^H (G G^H + Omega_B)^{-1} with
/// G = H_RB^T F_R Phi and Omega_B the aggregate-noise covariance.
inline CMatrix mmse_bs_equalizer(const TransceiverSet& t, const ChannelSet& ch,
                                 const SystemConfig& c) {
  const CMatrix g = ch.H_RB.transpose() * t.F_R * t.Phi(c);
  const CMatrix relay_noise = ch.H_RB.transpose() * t.F_R * t.A_R;
  const CMatrix cov = g * g.adjoint() +
                      c.N0 * relay_noise * relay_noise.adjoint() +
                      c.N0 * CMatrix::Identity(c.N_B, c.N_B);
  return cov.ldlt().solve(g).adjoint();
}

/// MMSE equalizer at MS k. The interference span excludes only the user's
/// own UL echo (cancelled), i.e. it covers [Psi, Phi_tilde_k].
inline CMatrix mmse_ms_equalizer(const TransceiverSet& t, const ChannelSet& ch,
                                 const SystemConfig& c, int k) {
  const CMatrix front = ch.H_Rk[k].transpose() * t.F_R;
  const CMatrix g =
      front.middleCols(c.stream_offset(k), c.L_k[k]) *
      t.psi[k].asDiagonal();  // desired streams only
  CMatrix span(c.N_k[k], 2 * c.total_streams());
  span.leftCols(c.total_streams()) = front * t.Psi(c);
  span.rightCols(c.total_streams()) = front * t.Phi_tilde(c, k);
  const CMatrix relay_noise = front * t.A_R;
  const CMatrix cov = span * span.adjoint() +
                      c.N0 * relay_noise * relay_noise.adjoint() +
                      c.N0 * CMatrix::Identity(c.N_k[k], c.N_k[k]);
  return cov.ldlt().solve(g).adjoint();
}

/// Alternating optimization: {bisect F_R; MMSE V_B; MMSE V_k}. Every step
/// can only raise the min weighted SINR, so the trace is non-decreasing.
inline StageTwoResult alternating_optimization(const StageOneResult& stage1,
                                               const SystemConfig& c,
                                               const ChannelSet& ch,
                                               const BisectionConfig& bcfg = {},
                                               int max_outer = 30) {
  StageTwoResult res;
  TransceiverSet& t = res.transceivers;
  t = stage1.transceivers;

  // Equalizer initialization from the stage-one precoders.
  t.V_B = t.W_B.transpose();
  t.V_k.resize(c.K);
  for (int k = 0; k < c.K; ++k) t.V_k[k] = t.W_k[k].transpose();

  // Initial relay precoder: forward each aligned stream along its ZF
  // direction, scaled to use the relay power budget with equality.
  t.F_R = pinv(t.A_R);
  {
    const double p = relay_tx_power_aligned(t, c);
    t.F_R *= std::sqrt(c.P_R / p);
  }

  // The loop tracks convergence through the bisection's gamma0 outputs (the
  // quantity the alternation produces each pass); the trace records the
  // evaluated min weighted SINR after the equalizer updates, which is the
  // monotone quantity.
  double prev_g0 = detail::min_weighted_sinr_fixed_eq(t, ch, c);
  for (int it = 0; it < max_outer; ++it) {
    ++res.iterations;
    const double g0 = bisect_relay_precoder(t, ch, c, bcfg);
    t.V_B = mmse_bs_equalizer(t, ch, c);
    for (int k = 0; k < c.K; ++k) t.V_k[k] = mmse_ms_equalizer(t, ch, c, k);
    res.trace.push_back(detail::min_weighted_sinr_fixed_eq(t, ch, c));
    const bool stop = g0 - prev_g0 < bcfg.rel_tol * std::max(prev_g0, 1e-12);
    prev_g0 = g0;
    if (stop) {
      res.converged = true;
      break;
    }
  }
  res.gamma0 = res.trace.empty() ? prev_g0 : res.trace.back();
  return res;
}

}  // namespace twr

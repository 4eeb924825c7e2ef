// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "twr/metrics.hpp"
#include "twr/stage_one.hpp"

using namespace twr;

namespace {

SystemConfig paper_config() {
  SystemConfig c;
  c.K = 2;
  c.N_B = 4;
  c.N_R = 4;
  c.N_k = {2, 2};
  c.L_k = {2, 2};
  c.P_B = 10.0;
  c.P_R = 10.0;
  c.P_k = {5.0, 5.0};
  c.N0 = 1.0;
  c.w_ul = {{1.0, 1.0}, {1.0, 1.0}};
  c.w_dl = {{1.0, 1.0}, {1.0, 1.0}};
  return c;
}

/// Brute-force max-min allocation for one node: grid over the power simplex
/// {lambda >= 0, sum = P} with the given step, maximizing
/// min_l kappa_l * lambda_l / w_l. Only supports 2 or 3 streams.
double grid_oracle_objective(const std::vector<double>& kappa,
                             const std::vector<double>& w, double p,
                             double step) {
  const int n = static_cast<int>(kappa.size());
  double best = -1.0;
  auto eval = [&](const std::vector<double>& lam) {
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      worst = std::min(worst, kappa[i] * lam[i] / w[i]);
    }
    best = std::max(best, worst);
  };
  if (n == 2) {
    for (double a = 0.0; a <= p + 1e-12; a += step) eval({a, p - a});
  } else if (n == 3) {
    for (double a = 0.0; a <= p + 1e-12; a += step) {
      for (double b = 0.0; a + b <= p + 1e-12; b += step) {
        eval({a, b, p - a - b});
      }
    }
  } else {
    FAIL("grid oracle supports 2 or 3 streams");
  }
  return best;
}

}  // namespace

TEST_CASE("allocation: worked example kappa=(1,4), unit weights, P=5") {
  SystemConfig c;
  c.K = 1;
  c.N_B = 2;
  c.N_R = 2;
  c.N_k = {2};
  c.L_k = {2};
  c.P_B = 5.0;
  c.P_R = 1.0;
  c.P_k = {5.0};
  c.N0 = 1.0;
  c.w_ul = {{1.0, 1.0}};
  c.w_dl = {{1.0, 1.0}};
  PowerAllocation alloc = power_allocation({1.0, 4.0}, {1.0, 4.0}, c);
  REQUIRE(alloc.lambda_ms[0][0] == Catch::Approx(4.0));
  REQUIRE(alloc.lambda_ms[0][1] == Catch::Approx(1.0));
  REQUIRE(alloc.lambda_bs[0] == Catch::Approx(4.0));
  REQUIRE(alloc.lambda_bs[1] == Catch::Approx(1.0));
  // Equalized weighted SINRs: kappa * lambda = 4 on both streams.
  REQUIRE(1.0 * alloc.lambda_ms[0][0] == Catch::Approx(4.0));
  REQUIRE(4.0 * alloc.lambda_ms[0][1] == Catch::Approx(4.0));

  REQUIRE_THROWS(power_allocation({0.0, 1.0}, {1.0, 1.0}, c));
}

TEST_CASE("allocation: closed form matches simplex grid oracle") {
  // Random-ish kappa/weight draws; the closed form must beat or match the
  // grid to within the grid resolution.
  struct Case {
    std::vector<double> kappa;
    std::vector<double> w;
    double p;
  };
  const Case cases[] = {
      {{1.0, 4.0}, {1.0, 1.0}, 5.0},
      {{0.3, 2.7}, {1.0, 2.0}, 3.0},
      {{5.0, 0.5}, {2.0, 1.0}, 8.0},
      {{1.0, 2.0, 4.0}, {1.0, 1.0, 1.0}, 6.0},
      {{2.2, 0.9, 1.4}, {1.0, 3.0, 1.5}, 4.0},
  };
  for (const auto& cs : cases) {
    const int n = static_cast<int>(cs.kappa.size());
    SystemConfig c;
    c.K = 1;
    c.N_B = n;
    c.N_R = n;
    c.N_k = {n};
    c.L_k = {n};
    c.P_B = cs.p;
    c.P_R = 1.0;
    c.P_k = {cs.p};
    c.N0 = 1.0;
    c.w_ul = {cs.w};
    c.w_dl = {cs.w};
    PowerAllocation alloc = power_allocation(cs.kappa, cs.kappa, c);
    double closed = std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      closed = std::min(closed,
                        cs.kappa[i] * alloc.lambda_ms[0][i] / cs.w[i]);
      sum += alloc.lambda_ms[0][i];
    }
    REQUIRE(sum == Catch::Approx(cs.p));  // budget used exactly
    const double step = 1e-3 * cs.p;
    double gridded = grid_oracle_objective(cs.kappa, cs.w, cs.p, step);
    REQUIRE(closed >= gridded - 1e-12);         // never worse than the grid
    REQUIRE(closed <= gridded * (1.0 + 5e-3));  // grid is near-tight
  }
}

TEST_CASE("index_subsets: lexicographic enumeration") {
  auto subsets = detail::index_subsets(4, 2);
  REQUIRE(subsets.size() == 6);
  REQUIRE(subsets[0] == std::vector<int>{0, 1});
  REQUIRE(subsets[1] == std::vector<int>{0, 2});
  REQUIRE(subsets[5] == std::vector<int>{2, 3});
  REQUIRE(detail::index_subsets(3, 3).size() == 1);
}

TEST_CASE("ms_candidate_beams: unit-norm eigenmodes of the channel") {
  SystemConfig c = paper_config();
  ChannelSet ch = sample_channels(c, 17);
  auto beams = ms_candidate_beams(ch.H_Rk[0]);
  REQUIRE(beams.size() == 2);
  for (const auto& b : beams) REQUIRE(b.norm() == Catch::Approx(1.0));
  // Orthogonal right singular vectors.
  REQUIRE(std::abs(beams[0].dot(beams[1])) < 1e-10);
}

TEST_CASE("rs_zf_equalizer: inverts the stacked directions exactly") {
  SystemConfig c = paper_config();
  ChannelSet ch = sample_channels(c, 23);
  std::vector<std::vector<CVector>> cands = {ms_candidate_beams(ch.H_Rk[0]),
                                             ms_candidate_beams(ch.H_Rk[1])};
  std::vector<std::vector<int>> pick = {{0, 1}, {0, 1}};
  auto a_r = rs_zf_equalizer(ch, pick, cands, c);
  REQUIRE(a_r.has_value());
  CMatrix stacked(c.N_R, 4);
  for (int k = 0; k < 2; ++k) {
    for (int l = 0; l < 2; ++l) {
      stacked.col(c.stream_index(k, l)) = ch.H_Rk[k] * cands[k][l];
    }
  }
  REQUIRE((*a_r * stacked - CMatrix::Identity(4, 4)).norm() < 1e-10);
}

TEST_CASE("bs_candidate_beams: null-space and matched-projection properties") {
  SystemConfig c = paper_config();
  ChannelSet ch = sample_channels(c, 29);
  std::vector<std::vector<CVector>> cands = {ms_candidate_beams(ch.H_Rk[0]),
                                             ms_candidate_beams(ch.H_Rk[1])};
  auto a_r = rs_zf_equalizer(ch, {{0, 1}, {0, 1}}, cands, c);
  REQUIRE(a_r.has_value());
  auto beams = bs_candidate_beams(*a_r, ch.H_RB, 1, 0, c);
  const int j = c.stream_index(1, 0);
  REQUIRE(beams.size() >= 1);
  double best_gain = -1.0;
  for (const auto& b : beams) {
    REQUIRE(b.norm() == Catch::Approx(1.0));
    // Every candidate is invisible to the other streams' RS rows.
    for (int i = 0; i < 4; ++i) {
      if (i == j) continue;
      REQUIRE(std::abs((a_r->row(i) * ch.H_RB * b)(0, 0)) < 1e-9);
    }
    best_gain = std::max(best_gain,
                         std::norm((a_r->row(j) * ch.H_RB * b)(0, 0)));
  }
  // The matched projection (appended last) dominates the raw basis vectors.
  double matched_gain =
      std::norm((a_r->row(j) * ch.H_RB * beams.back())(0, 0));
  REQUIRE(matched_gain == Catch::Approx(best_gain));
}

TEST_CASE("stage one: alignment, gains, budgets, and equalized SINRs") {
  SystemConfig c = paper_config();
  for (std::uint64_t seed : {101, 202, 303}) {
    ChannelSet ch = sample_channels(c, seed);
    StageOneResult r = stage_one_search(c, ch);
    const TransceiverSet& t = r.transceivers;

    // Alignment: A_R applied to both effective channels is diagonal.
    CMatrix u = effective_ul_channel(t, ch, c);
    CMatrix d = effective_dl_channel(t, ch);
    CMatrix au = t.A_R * u;
    CMatrix ad = t.A_R * d;
    CMatrix off_u = au - CMatrix(au.diagonal().asDiagonal());
    CMatrix off_d = ad - CMatrix(ad.diagonal().asDiagonal());
    REQUIRE(off_u.cwiseAbs().maxCoeff() < 1e-8);
    REQUIRE(off_d.cwiseAbs().maxCoeff() < 1e-8);

    // Stored gains match the diagonals and are real positive.
    for (int k = 0; k < c.K; ++k) {
      for (int l = 0; l < c.L_k[k]; ++l) {
        const int j = c.stream_index(k, l);
        REQUIRE(std::abs(t.phi[k](l) - au(j, j)) < 1e-10);
        REQUIRE(std::abs(t.psi[k](l) - ad(j, j)) < 1e-10);
        REQUIRE(t.phi[k](l).real() > 0.0);
        REQUIRE(std::abs(t.phi[k](l).imag()) < 1e-9 * t.phi[k](l).real());
        REQUIRE(t.psi[k](l).real() > 0.0);
        REQUIRE(std::abs(t.psi[k](l).imag()) < 1e-9 * t.psi[k](l).real());
        // phi = sqrt(lambda) since the ZF rows give unit raw gain.
        REQUIRE(t.phi[k](l).real() ==
                Catch::Approx(std::sqrt(r.allocation.lambda_ms[k][l])));
      }
    }

    // Power budgets are met with equality.
    REQUIRE(t.W_B.squaredNorm() == Catch::Approx(c.P_B));
    for (int k = 0; k < c.K; ++k) {
      REQUIRE(t.W_k[k].squaredNorm() == Catch::Approx(c.P_k[k]));
    }

    // The allocation equalizes weighted first-hop SINRs within each node
    // and the reported objective is the min over nodes.
    double reported = r.achieved_min_weighted_sinr;
    double min_seen = std::numeric_limits<double>::infinity();
    for (int k = 0; k < c.K; ++k) {
      double ref = relay_forward_sinr(t, c, {k, 0, Direction::Uplink}) /
                   c.w_ul[k][0];
      for (int l = 0; l < c.L_k[k]; ++l) {
        double v = relay_forward_sinr(t, c, {k, l, Direction::Uplink}) /
                   c.w_ul[k][l];
        REQUIRE(v == Catch::Approx(ref));
      }
      min_seen = std::min(min_seen, ref);
    }
    double bs_ref = relay_forward_sinr(t, c, {0, 0, Direction::Downlink}) /
                    c.w_dl[0][0];
    for (int k = 0; k < c.K; ++k) {
      for (int l = 0; l < c.L_k[k]; ++l) {
        double v = relay_forward_sinr(t, c, {k, l, Direction::Downlink}) /
                   c.w_dl[k][l];
        REQUIRE(v == Catch::Approx(bs_ref));
      }
    }
    min_seen = std::min(min_seen, bs_ref);
    REQUIRE(reported == Catch::Approx(min_seen));
  }
}

TEST_CASE("stage one: deterministic and greedy never beats exhaustive") {
  SystemConfig c = paper_config();
  ChannelSet ch = sample_channels(c, 404);
  StageOneResult a = stage_one_search(c, ch);
  StageOneResult b = stage_one_search(c, ch);
  REQUIRE((a.transceivers.W_B - b.transceivers.W_B).norm() == 0.0);
  REQUIRE(a.achieved_min_weighted_sinr == b.achieved_min_weighted_sinr);

  StageOneResult g = stage_one_search(c, ch, /*enumeration_cap=*/1);
  REQUIRE(g.achieved_min_weighted_sinr <=
          a.achieved_min_weighted_sinr * (1.0 + 1e-12));
  REQUIRE(g.achieved_min_weighted_sinr > 0.0);
}

TEST_CASE("stage one: weights shift power toward the weighted streams") {
  SystemConfig c = paper_config();
  c.w_ul[1] = {4.0, 1.0};
  ChannelSet ch = sample_channels(c, 505);
  StageOneResult r = stage_one_search(c, ch);
  // Within a node, gamma/w is equalized, so the 4x-weighted stream earns a
  // 4x higher raw first-hop SINR than its sibling.
  double g0 = relay_forward_sinr(r.transceivers, c, {1, 0, Direction::Uplink});
  double g1 = relay_forward_sinr(r.transceivers, c, {1, 1, Direction::Uplink});
  REQUIRE(g0 == Catch::Approx(4.0 * g1).epsilon(1e-9));
}

TEST_CASE("stage one: rank-deficient user channel is rejected") {
  SystemConfig c = paper_config();
  ChannelSet ch = sample_channels(c, 606);
  ch.H_Rk[0].col(1) = ch.H_Rk[0].col(0);
  REQUIRE_THROWS(stage_one_search(c, ch));
}

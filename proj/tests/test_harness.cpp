// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <sstream>

#include "twr/config_io.hpp"
#include "twr/harness.hpp"

using namespace twr;

namespace {

/// Small single-stream-per-user setup that all schemes can at least parse
/// quickly; SDMA needs N_R >= 4 here, so it is infeasible at N_R = 2.
SweepSpec small_spec() {
  SweepSpec spec;
  spec.base.K = 2;
  spec.base.N_B = 2;
  spec.base.N_R = 2;
  spec.base.N_k = {1, 1};
  spec.base.L_k = {1, 1};
  spec.base.N0 = 1.0;
  spec.base.w_ul = {{1.0}, {1.0}};
  spec.base.w_dl = {{1.0}, {1.0}};
  spec.base.P_B = spec.base.P_R = 1.0;  // overwritten per point
  spec.base.P_k = {1.0, 1.0};
  spec.snr_db_points = {5.0, 10.0};
  spec.trials = 3;
  spec.master_seed = 99;
  spec.schemes = {Scheme::Proposed, Scheme::ChannelInversionNaive,
                  Scheme::SdmaZf};
  return spec;
}

}  // namespace

TEST_CASE("derive_seed: scheme-free, collision-free over the grid") {
  std::set<std::uint64_t> seen;
  for (int point = 0; point < 50; ++point) {
    for (int trial = 0; trial < 50; ++trial) {
      seen.insert(derive_seed(7, point, trial));
    }
  }
  REQUIRE(seen.size() == 2500);  // no collisions on this grid
  REQUIRE(derive_seed(7, 3, 4) == derive_seed(7, 3, 4));
  REQUIRE(derive_seed(7, 3, 4) != derive_seed(8, 3, 4));
}

TEST_CASE("config_at_point: equal power per stream, SNR sets P_B") {
  SweepSpec spec = small_spec();
  SystemConfig c = config_at_point(spec.base, 20.0, 2);
  REQUIRE(c.P_B == Catch::Approx(100.0));
  REQUIRE(c.P_R == Catch::Approx(100.0));
  REQUIRE(c.P_k[0] == Catch::Approx(50.0));  // L_k / L = 1/2 of P_B

  SystemConfig base = spec.base;
  base.N_R = 4;
  base.L_k = {2, 1};
  base.N_k = {2, 1};
  base.w_ul = {{1.0, 1.0}, {1.0}};
  base.w_dl = {{1.0, 1.0}, {1.0}};
  SystemConfig c2 = config_at_point(base, 0.0, 4);
  REQUIRE(c2.P_B == Catch::Approx(1.0));
  REQUIRE(c2.P_k[0] == Catch::Approx(2.0 / 3.0));
  REQUIRE(c2.P_k[1] == Catch::Approx(1.0 / 3.0));
  REQUIRE(c2.N_B == 4);

  // The derived config is validated: N_B below L must throw.
  REQUIRE_THROWS(config_at_point(base, 0.0, 2));
}

TEST_CASE("run_sweep: full record grid, canonical order, channel pairing") {
  SweepSpec spec = small_spec();
  auto records = run_sweep(spec);
  const size_t per_scheme = 2 * 3;  // points x trials
  REQUIRE(records.size() == 3 * per_scheme);

  // Scheme-major layout with (point, trial) inner order.
  for (size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    REQUIRE(r.scheme == spec.schemes[i / per_scheme]);
    size_t inner = i % per_scheme;
    REQUIRE(r.snr_db == spec.snr_db_points[inner / 3]);
    REQUIRE(r.trial == static_cast<int>(inner % 3));
    // All schemes see the same seed for the same (point, trial).
    REQUIRE(r.seed == records[inner].seed);
  }

  // Proposed and channel inversion run here; SDMA cannot fit 4 streams in
  // a 2-antenna relay and must be flagged, not dropped or thrown.
  for (size_t i = 0; i < per_scheme; ++i) {
    REQUIRE(records[i].feasible);
    REQUIRE(records[i].iterations >= 1);
    REQUIRE(records[per_scheme + i].feasible);
    REQUIRE_FALSE(records[2 * per_scheme + i].feasible);
    REQUIRE(records[2 * per_scheme + i].note == "sdma infeasible");
  }
}

TEST_CASE("run_sweep: identical CSV across reruns and thread counts") {
  SweepSpec spec = small_spec();
  std::string csv1 = to_csv(run_sweep(spec, 1), spec.base);
  std::string csv2 = to_csv(run_sweep(spec, 1), spec.base);
  std::string csv4 = to_csv(run_sweep(spec, 4), spec.base);
  REQUIRE(csv1 == csv2);
  REQUIRE(csv1 == csv4);
  REQUIRE(csv1.find("wall") == std::string::npos);  // no timing in the CSV
}

TEST_CASE("to_csv: header layout and field formatting") {
  SweepSpec spec = small_spec();
  TrialRecord ok;
  ok.scheme = Scheme::Proposed;
  ok.snr_db = 12.5;
  ok.n_b = 2;
  ok.trial = 0;
  ok.seed = 42;
  ok.feasible = true;
  ok.min_weighted_sinr_db = 3.25;
  ok.sum_rate_bps_hz = 1.0 / 3.0;
  ok.iterations = 4;
  ok.sinr_ul_db = {1.0, 2.0};
  ok.sinr_dl_db = {3.0, 4.0};
  TrialRecord bad;
  bad.scheme = Scheme::SdmaZf;
  bad.snr_db = 12.5;
  bad.n_b = 2;
  bad.trial = 1;
  bad.seed = 43;
  bad.feasible = false;

  std::string csv = to_csv({ok, bad}, spec.base);
  std::istringstream lines(csv);
  std::string header, row_ok, row_bad;
  std::getline(lines, header);
  std::getline(lines, row_ok);
  std::getline(lines, row_bad);
  REQUIRE(header ==
          "scheme,snr_db,n_b,trial,seed,feasible,min_weighted_sinr_db,"
          "sum_rate_bps_hz,iterations,sinr_ul_1_1_db,sinr_ul_2_1_db,"
          "sinr_dl_1_1_db,sinr_dl_2_1_db");
  REQUIRE(row_ok ==
          "proposed,12.5,2,0,42,1,3.25,0.3333333333,4,1,2,3,4");
  REQUIRE(row_bad == "sdma_zf,12.5,2,1,43,0,,,0,,,,");
}

TEST_CASE("aggregate: means, stderr, and feasible fraction") {
  auto make = [](Scheme s, double snr, bool feasible, double rate,
                 double sinr_db) {
    TrialRecord r;
    r.scheme = s;
    r.snr_db = snr;
    r.n_b = 2;
    r.feasible = feasible;
    r.sum_rate_bps_hz = rate;
    r.min_weighted_sinr_db = sinr_db;
    return r;
  };
  std::vector<TrialRecord> recs = {
      make(Scheme::Proposed, 10.0, true, 2.0, 1.0),
      make(Scheme::Proposed, 10.0, true, 4.0, 3.0),
      make(Scheme::Proposed, 10.0, false, 0.0, 0.0),
      make(Scheme::SdmaZf, 10.0, true, 1.0, 0.5),
  };
  auto rows = aggregate(recs);
  REQUIRE(rows.size() == 2);
  const auto& p = rows[0];
  REQUIRE(p.scheme == Scheme::Proposed);
  REQUIRE(p.count == 2);
  REQUIRE(p.mean_sum_rate == Catch::Approx(3.0));
  REQUIRE(p.feasible_fraction == Catch::Approx(2.0 / 3.0));
  // Sample stderr of {2, 4}: sd = sqrt(2), stderr = sqrt(2)/sqrt(2) = 1.
  REQUIRE(p.stderr_sum_rate == Catch::Approx(1.0));
  REQUIRE(p.mean_min_weighted_sinr_db == Catch::Approx(2.0));
  const auto& q = rows[1];
  REQUIRE(q.count == 1);
  REQUIRE(q.stderr_sum_rate == 0.0);

  REQUIRE_THROWS(aggregate(std::vector<TrialRecord>{}));
}

TEST_CASE("config parsing: schema, defaults, and rejection of unknown keys") {
  nlohmann::json j = {
      {"K", 2},          {"N_B", 2},
      {"N_R", 2},        {"N_k", {1, 1}},
      {"L_k", {1, 1}},   {"snr_db", {0.0, 10.0}},
      {"trials", 2},     {"master_seed", 5},
      {"schemes", {"proposed", "sdma_zf"}}};
  SweepSpec spec = parse_sweep_spec(j);
  REQUIRE(spec.base.K == 2);
  REQUIRE(spec.base.N0 == 1.0);  // default noise power
  REQUIRE(spec.base.w_ul == std::vector<std::vector<double>>{{1.0}, {1.0}});
  REQUIRE(spec.trials == 2);
  REQUIRE(spec.master_seed == 5);
  REQUIRE(spec.schemes ==
          std::vector<Scheme>{Scheme::Proposed, Scheme::SdmaZf});

  nlohmann::json typo = j;
  typo["trails"] = 7;
  REQUIRE_THROWS(parse_sweep_spec(typo));

  nlohmann::json missing = j;
  missing.erase("snr_db");
  REQUIRE_THROWS(parse_sweep_spec(missing));

  nlohmann::json bad_scheme = j;
  bad_scheme["schemes"] = {"unknown"};
  REQUIRE_THROWS(parse_sweep_spec(bad_scheme));

  // A sweep point whose derived config is invalid is rejected up front.
  nlohmann::json bad_point = j;
  bad_point["n_b"] = {1};  // N_B = 1 < L = 2
  REQUIRE_THROWS(parse_sweep_spec(bad_point));

  REQUIRE(scheme_from_name("channel_inversion") ==
          Scheme::ChannelInversionNaive);
}

TEST_CASE("json report: records, notes, aggregate, wall time present") {
  SweepSpec spec = small_spec();
  spec.snr_db_points = {5.0};
  spec.trials = 1;
  auto records = run_sweep(spec);
  nlohmann::json j = records_to_json(records, spec);
  REQUIRE(j["master_seed"] == 99);
  REQUIRE(j["records"].size() == records.size());
  REQUIRE(j["records"][0]["feasible"] == true);
  REQUIRE(j["records"][0].contains("sum_rate_bps_hz"));
  REQUIRE(j["records"][0].contains("wall_ms"));
  // Infeasible SDMA entry carries its note and no metrics.
  const auto& last = j["records"][records.size() - 1];
  REQUIRE(last["feasible"] == false);
  REQUIRE(last["note"] == "sdma infeasible");
  REQUIRE_FALSE(last.contains("sum_rate_bps_hz"));
  REQUIRE(j["aggregate"].size() == 3);
}

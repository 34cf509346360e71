// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <sstream>

#include "icmac/harness.hpp"

using namespace icmac;

namespace {

SimConfig small_config() {
  SimConfig cfg;
  cfg.scheme = SchemeKind::TwoUser;
  cfg.nt = 2;
  cfg.n = 2;
  cfg.nr = 1;
  cfg.mod_order = 4;
  cfg.decoder = HarnessDecoder::Picgd;
  cfg.ebn0_start = 0.0;
  cfg.ebn0_stop = 5.0;
  cfg.ebn0_step = 5.0;
  cfg.min_trials = 200;
  cfg.max_trials = 2000;
  cfg.min_errors = 20;
  cfg.batch = 64;
  cfg.seed = 4711;
  return cfg;
}

bool points_equal(const SimPoint& a, const SimPoint& b) {
  return a.ebn0_db == b.ebn0_db && a.trials == b.trials && a.errors == b.errors &&
         a.per_user_errors == b.per_user_errors && a.cer == b.cer &&
         a.per_user_cer == b.per_user_cer && a.avg_visited_nodes == b.avg_visited_nodes &&
         a.degenerate == b.degenerate;
}

}  // namespace

TEST_CASE("determinism: worker count does not change the result") {
  SimConfig cfg = small_config();
  cfg.workers = 1;
  const SimResult a = run_sweep(cfg);
  cfg.workers = 3;
  const SimResult b = run_sweep(cfg);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i)
    CHECK(points_equal(a.points[i], b.points[i]));

  cfg.seed += 1;
  const SimResult c = run_sweep(cfg);
  CHECK_FALSE(points_equal(a.points[0], c.points[0]));  // seed actually matters
}

TEST_CASE("noiseless limit: zero errors at 60 dB") {
  SimConfig cfg = small_config();
  cfg.ebn0_start = cfg.ebn0_stop = 60.0;
  cfg.min_trials = cfg.max_trials = 1000;
  cfg.min_errors = 1u << 30;
  const SimResult res = run_sweep(cfg);
  REQUIRE(res.points.size() == 1);
  CHECK(res.points[0].trials == 1000);
  CHECK(res.points[0].errors == 0);
  CHECK(res.points[0].cer == 0.0);
}

TEST_CASE("stop rule: at least min_trials, stop once min_errors reached") {
  SimConfig cfg = small_config();
  cfg.ebn0_start = cfg.ebn0_stop = 0.0;  // errors plentiful
  cfg.min_trials = 128;
  cfg.batch = 64;
  cfg.min_errors = 5;
  cfg.max_trials = 100000;
  const SimResult res = run_sweep(cfg);
  CHECK(res.points[0].trials >= 128);
  CHECK(res.points[0].errors >= 5);
  CHECK(res.points[0].trials % 64 == 0);  // whole batches only
  CHECK(res.points[0].trials < 100000);
}

TEST_CASE("high-SNR sphere work settles to a constant no-backtrack floor") {
  SimConfig cfg = small_config();
  cfg.ebn0_start = 55.0;
  cfg.ebn0_stop = 60.0;
  cfg.ebn0_step = 5.0;
  cfg.min_trials = cfg.max_trials = 500;
  cfg.min_errors = 1u << 30;
  const SimResult res = run_sweep(cfg);
  REQUIRE(res.points.size() == 2);
  CHECK(res.points[0].avg_visited_nodes == res.points[1].avg_visited_nodes);
  // descend + one pruned sibling per level, two real searches per user
  CHECK(res.points[0].avg_visited_nodes ==
        doctest::Approx(static_cast<double>(2 * 2 * 2 * cfg.n)));
}

TEST_CASE("monotone CER across a short sweep (sanity, generous sampling)") {
  SimConfig cfg = small_config();
  cfg.ebn0_start = 0.0;
  cfg.ebn0_stop = 10.0;
  cfg.ebn0_step = 5.0;
  cfg.min_trials = 3000;
  cfg.max_trials = 3000;
  cfg.min_errors = 1u << 30;
  const SimResult res = run_sweep(cfg);
  for (std::size_t i = 1; i < res.points.size(); ++i)
    CHECK(res.points[i].cer <= res.points[i - 1].cer);
}

TEST_CASE("csv: exact schema and numeric round trip; empty sweep is header-only") {
  SimConfig cfg = small_config();
  const SimResult res = run_sweep(cfg);
  std::ostringstream os;
  emit_csv(res, os);
  const std::string text = os.str();
  CHECK(text.rfind("ebn0_db,trials,errors,cer,cer_user1,cer_user2,avg_visited_nodes\n", 0) ==
        0);

  std::istringstream is(text);
  const SimResult back = parse_csv(is);
  REQUIRE(back.points.size() == res.points.size());
  CHECK(back.K == res.K);
  for (std::size_t i = 0; i < res.points.size(); ++i) {
    CHECK(back.points[i].ebn0_db == res.points[i].ebn0_db);
    CHECK(back.points[i].trials == res.points[i].trials);
    CHECK(back.points[i].errors == res.points[i].errors);
    CHECK(back.points[i].cer == res.points[i].cer);
    CHECK(back.points[i].per_user_cer == res.points[i].per_user_cer);
    CHECK(back.points[i].avg_visited_nodes == res.points[i].avg_visited_nodes);
  }

  SimResult empty;
  empty.K = 2;
  std::ostringstream os2;
  emit_csv(empty, os2);
  CHECK(os2.str() == "ebn0_db,trials,errors,cer,cer_user1,cer_user2,avg_visited_nodes\n");
}

TEST_CASE("plot script references the csv and overlay series") {
  SimResult res;
  res.K = 2;
  res.rate = 0.5;
  std::ostringstream os;
  emit_plot_script(res, "results.csv", {{"fix/fig2.csv", "reference curve", "2"}}, os);
  const std::string s = os.str();
  CHECK(s.find("results.csv") != std::string::npos);
  CHECK(s.find("fix/fig2.csv") != std::string::npos);
  CHECK(s.find("external data") != std::string::npos);
  CHECK(s.find("logscale y") != std::string::npos);
}

TEST_CASE("config validation rejects contradictions") {
  SimConfig cfg = small_config();
  cfg.ebn0_step = 0.0;
  CHECK_THROWS_AS(run_sweep(cfg), ConfigError);
  cfg = small_config();
  cfg.scheme = SchemeKind::ThreeUser;
  cfg.n = 3;
  cfg.decoder = HarnessDecoder::Picgd;
  CHECK_THROWS_AS(run_sweep(cfg), ConfigError);
  cfg = small_config();
  cfg.min_errors = 0;
  CHECK_THROWS_AS(run_sweep(cfg), ConfigError);
  cfg = small_config();
  cfg.mod_order = 5;
  CHECK_THROWS_AS(run_sweep(cfg), ConfigError);
  cfg = small_config();
  cfg.nt = 3;
  cfg.n = 2;
  CHECK_THROWS_AS(run_sweep(cfg), ConfigError);
}

TEST_CASE("ml-joint decoder path runs and is sane at high SNR") {
  SimConfig cfg = small_config();
  cfg.decoder = HarnessDecoder::MlJoint;
  cfg.ebn0_start = cfg.ebn0_stop = 30.0;
  cfg.min_trials = cfg.max_trials = 200;
  cfg.min_errors = 1u << 30;
  const SimResult res = run_sweep(cfg);
  CHECK(res.points[0].cer <= 0.05);
}

#include <doctest.h>

#include <random>

#include "mods/bench.hpp"
#include "mods/json_io.hpp"
#include "mods/orchestrator.hpp"
#include "mods/parallel.hpp"
#include "oracles.hpp"

using namespace mods;

namespace {

StepConfig fast_step() {
  StepConfig s;
  s.detector = DetectorTier::Fast;
  s.descriptor = DescriptorKind::Binary;
  s.detector_params = DetectorParams::fast_defaults();
  s.matching.ratio_threshold = 0.9;
  return s;
}

StepConfig dog_step(std::vector<double> tilts) {
  StepConfig s;
  s.detector = DetectorTier::DoG;
  s.descriptor = DescriptorKind::RootSift;
  s.detector_params = DetectorParams::dog_defaults();
  s.synthesis.tilts = std::move(tilts);
  s.matching.ratio_threshold = 0.8;
  return s;
}

}  // namespace

TEST_CASE("self-match solves at step one with an identity model") {
  Image img = oracles::textured_image(320, 240, 70);
  ModsConfig cfg;
  cfg.steps = {fast_step(), dog_step({1.0, 3.0})};
  MatchReport report = run_mods(img, img, cfg);

  CHECK(report.solved);
  CHECK(report.step == 1);
  CHECK(report.n_matches >= cfg.theta_m);
  REQUIRE(report.steps.size() == 1);  // no later stage ever ran
  CHECK(report.steps[0].views1 == 1);

  REQUIRE(report.model.has_value());
  CHECK(report.model->kind == ModelKind::Homography);
  Mat3 h = report.model->matrix / report.model->matrix(2, 2);
  for (const Vec2& p : {Vec2(0, 0), Vec2(319, 0), Vec2(0, 239), Vec2(319, 239), Vec2(160, 120)}) {
    Vec3 q = h * Vec3(p.x(), p.y(), 1.0);
    CHECK((Vec2(q(0) / q(2), q(1) / q(2)) - p).norm() <= 1.0);
  }
}

TEST_CASE("a strong tilt needs escalation beyond step one") {
  Image img = oracles::textured_image(640, 480, 71);
  SynthesisConfig warp_cfg;
  warp_cfg.tilts = {5.0};
  SynthView warp = synthesize_view(img, warp_cfg, ViewParams{1.0, 5.0, 0.0});

  ModsConfig cfg;
  cfg.steps = {fast_step(), dog_step({1.0}), dog_step({1.0, 3.0, 6.0, 9.0})};
  MatchReport report = run_mods(img, warp.image, cfg);

  CHECK(report.solved);
  CHECK(report.step >= 2);

  // ground truth consistency of the output correspondences
  SolveCriteria crit;
  crit.mode = SolveMode::GtCorrespondenceCount;
  crit.gt_kind = GtKind::Affine;
  crit.gt = Mat3::Identity();
  crit.gt.block<2, 2>(0, 0) = warp.back_map.a;
  crit.gt.block<2, 1>(0, 2) = warp.back_map.b;
  crit.min_correct = 50;
  ScoreResult score = score_correspondences(report, crit);
  CHECK(score.solved);
}

TEST_CASE("fast tier alone handles a pure rotation") {
  Image img = oracles::textured_image(300, 300, 72);
  ImageTransform rot;
  double a = deg2rad(60.0);
  rot.a << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  WarpResult turned = warp_affine(img, rot);

  MatchReport report = run_single_config(img, turned.image, fast_step(), 15);
  CHECK(report.solved);
  CHECK(report.step == 1);
}

TEST_CASE("unrelated noise images exhaust every step without a solution") {
  Image a = oracles::textured_image(200, 150, 73);
  Image b = oracles::textured_image(200, 150, 7777);
  ModsConfig cfg;
  cfg.steps = {fast_step(), dog_step({1.0})};
  MatchReport report = run_mods(a, b, cfg);
  CHECK(!report.solved);
  CHECK(report.n_matches < cfg.theta_m);
  CHECK(report.steps.size() == cfg.steps.size());  // everything ran
}

TEST_CASE("cumulative feature counts never shrink") {
  Image img = oracles::textured_image(280, 210, 74);
  SynthesisConfig warp_cfg;
  warp_cfg.tilts = {4.0};
  SynthView warp = synthesize_view(img, warp_cfg, ViewParams{1.0, 4.0, 0.0});
  ModsConfig cfg;
  cfg.steps = {dog_step({1.0}), dog_step({1.0, 2.0}), dog_step({1.0, 2.0, 4.0})};
  cfg.theta_m = 1000000;  // force a full run
  MatchReport report = run_mods(img, warp.image, cfg);
  REQUIRE(report.steps.size() == 3);
  for (std::size_t i = 1; i < report.steps.size(); ++i) {
    CHECK(report.steps[i].total_features1 >= report.steps[i - 1].total_features1);
    CHECK(report.steps[i].total_features2 >= report.steps[i - 1].total_features2);
  }
  // step 2 re-synthesizes only the new tilt
  CHECK(report.steps[1].views1 == report.steps[1].views1);
  CHECK(report.steps[0].views1 == 1);
  CHECK(report.steps[1].views1 == 2);  // t=2 at delta_phi 360/t
}

TEST_CASE("reports are identical across runs and thread counts") {
  Image img = oracles::textured_image(256, 192, 75);
  SynthesisConfig warp_cfg;
  warp_cfg.tilts = {2.0};
  SynthView warp = synthesize_view(img, warp_cfg, ViewParams{1.0, 2.0, 0.0});

  ModsConfig cfg;
  cfg.steps = {fast_step(), dog_step({1.0, 2.0})};

  set_thread_count(1);
  MatchReport r1 = run_mods(img, warp.image, cfg);
  set_thread_count(2);
  MatchReport r2 = run_mods(img, warp.image, cfg);
  MatchReport r3 = run_mods(img, warp.image, cfg);
  set_thread_count(0);

  CHECK(report_to_json(r1, false) == report_to_json(r2, false));
  CHECK(report_to_json(r2, false) == report_to_json(r3, false));
}

TEST_CASE("config validation rejects bad escalations") {
  ModsConfig cfg;
  cfg.steps.clear();
  CHECK_THROWS_AS(cfg.validate(), Error);

  cfg = ModsConfig::default_config();
  cfg.theta_m = 3;
  CHECK_THROWS_AS(cfg.validate(), Error);

  cfg = ModsConfig::default_config();
  cfg.s_max = 99;
  CHECK_THROWS_AS(cfg.validate(), Error);

  StepConfig bad = fast_step();
  bad.synthesis.tilts = {};
  CHECK_THROWS_AS(run_single_config(Image(64, 64, 0.5f), Image(64, 64, 0.5f), bad, 15), Error);

  StepConfig mixed = fast_step();
  mixed.descriptor = DescriptorKind::RootSift;
  CHECK_THROWS_AS(mixed.validate(), Error);
}

TEST_CASE("config json round trip") {
  ModsConfig cfg = ModsConfig::default_config();
  std::string text = config_to_json(cfg);
  ModsConfig back = config_from_json(text);
  CHECK(config_to_json(back) == text);
  CHECK(back.steps.size() == 7);
  CHECK(back.steps[2].synthesis.scales.size() == 3);
}

TEST_CASE("report json carries the external interface fields") {
  Image img = oracles::textured_image(200, 150, 76);
  ModsConfig cfg;
  cfg.steps = {fast_step()};
  MatchReport report = run_mods(img, img, cfg);
  std::string text = report_to_json(report);
  MatchReport back = report_from_json(text);
  CHECK(back.solved == report.solved);
  CHECK(back.step == report.step);
  REQUIRE(back.model.has_value());
  CHECK(back.model->matrix.isApprox(report.model->matrix, 1e-12));
  REQUIRE(back.correspondences.size() == report.correspondences.size());
  for (std::size_t i = 0; i < back.correspondences.size(); ++i) {
    CHECK(back.correspondences[i].x1 == report.correspondences[i].x1);
    CHECK(back.correspondences[i].ratio == report.correspondences[i].ratio);
    CHECK(back.correspondences[i].laf_kept == report.correspondences[i].laf_kept);
  }
}

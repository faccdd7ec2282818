#pragma once

#include <map>
#include <optional>
#include <vector>

#include "mods/features.hpp"
#include "mods/matching.hpp"
#include "mods/synth.hpp"
#include "mods/verify.hpp"

namespace mods {

/// One escalation step: detector, descriptor and the views to synthesize.
struct StepConfig {
  DetectorTier detector = DetectorTier::Fast;
  DescriptorKind descriptor = DescriptorKind::Binary;
  SynthesisConfig synthesis;
  MatchingConfig matching;
  DetectorParams detector_params = DetectorParams::fast_defaults();

  void validate() const;  // descriptor must suit the tier
};

struct ModsConfig {
  std::vector<StepConfig> steps;
  int theta_m = 15;  // minimum verified matches to stop
  int s_max = -1;    // -1: run all steps
  RansacConfig ransac;

  void validate() const;
  int effective_s_max() const;

  /// The default escalation schedule: two fast-binary steps, two
  /// scale-synthesis blob steps, three affine-adaptation steps with
  /// progressively denser view sampling.
  static ModsConfig default_config();
};

struct StageTiming {
  double synth_ms = 0, detect_ms = 0, describe_ms = 0, match_ms = 0, verify_ms = 0;
  double total() const { return synth_ms + detect_ms + describe_ms + match_ms + verify_ms; }
  StageTiming& operator+=(const StageTiming& o);
};

struct StepStats {
  int step_index = 0;  // 1-based
  StageTiming timing;
  int views1 = 0, views2 = 0;  // newly synthesized this step
  int new_features1 = 0, new_features2 = 0;
  int total_features1 = 0, total_features2 = 0;
  int tentatives = 0;      // after duplicate filtering
  int ransac_inliers = 0;  // model support before the LAF check
  int matches = 0;         // after the LAF check
};

struct CorrespondenceRecord {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  double ratio = 0.0;
  int prune_count = 0;
  bool laf_kept = false;
};

struct MatchReport {
  bool solved = false;
  int step = 0;        // 1-based step the run stopped at (0: nothing ran)
  int n_matches = 0;   // verified correspondences after the LAF check
  std::optional<GeometryModel> model;
  std::vector<CorrespondenceRecord> correspondences;  // model support, flagged by LAF outcome
  std::vector<CorrespondenceRecord> tentatives;       // duplicate-filtered TCs of the reported step
  std::vector<StepStats> steps;
  double total_ms = 0.0;
  ModsConfig config;   // echo of the run configuration
};

/// The escalation loop: per step, synthesize views for both images, detect,
/// describe, reproject, extend the cumulative feature lists, re-match them,
/// filter duplicates, verify, and stop once the post-LAF support reaches
/// theta_m. When every step falls short the report keeps the best attempt.
MatchReport run_mods(const Image& img1, const Image& img2, const ModsConfig& cfg);

/// A single step without escalation.
MatchReport run_single_config(const Image& img1, const Image& img2, const StepConfig& step, int theta_m);

}  // namespace mods

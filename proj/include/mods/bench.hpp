#pragma once

#include <string>
#include <vector>

#include "mods/image.hpp"
#include "mods/orchestrator.hpp"

namespace mods {

/// The latitude series of the synthetic-warp protocol, degrees.
std::vector<double> default_latitude_series();

struct WarpCase {
  double latitude_deg = 0.0;
  double tilt = 1.0;
  Image warped;
  Mat3 gt;  // exact affine (homography form), warped coords -> original coords
};

/// One warped copy per latitude, produced by the same synthesis path the
/// matcher uses; the ground-truth map is stored analytically.
/// Throws ImageTooSmall when the strongest tilt leaves less than 32 columns.
std::vector<WarpCase> make_warp_series(const Image& img, const std::vector<double>& theta_deg);

enum class GtKind { Affine, Homography, Fundamental };
enum class SolveMode { GtCorrespondenceCount, MedianSymEpipolar };

struct SolveCriteria {
  SolveMode mode = SolveMode::GtCorrespondenceCount;
  GtKind gt_kind = GtKind::Homography;
  Mat3 gt = Mat3::Identity();
  int min_correct = 50;               // 50 synthetic, 10 real pairs
  double max_median_px = 6.0;
  double correct_threshold_px = 1.0;  // per-correspondence labeling
};

struct ScoreResult {
  bool solved = false;
  int correct_count = 0;
  double median_error_px = 0.0;
};

/// Scores the report's verified correspondences against the ground truth.
/// Error evaluation here is deliberately self-contained: the scorer shares no
/// code with the matcher's residual computations.
ScoreResult score_correspondences(const MatchReport& report, const SolveCriteria& crit);

enum class Difficulty { Unsolved, Easy, Medium, Hard };

/// Thresholds 0.50 / 0.90 / 0.99 on the solved fraction, highest label wins.
Difficulty classify_difficulty(double solved_fraction);
const char* difficulty_name(Difficulty d);

/// Side-by-side canvas with one line per reported correspondence; survivors
/// and LAF-discarded correspondences get distinct fixed colors.
RgbImage render_overlay(const Image& img1, const Image& img2, const MatchReport& report);

struct WarpBenchRow {
  std::string pair_id;
  std::string config_id;
  bool solved = false;
  int step = 0;
  int inliers = 0;
  int correct = 0;
  double median_err_px = 0.0;
  double ms_total = 0.0;
  StageTiming stages;
};

std::string csv_header();
std::string to_csv(const WarpBenchRow& row);

/// Aggregates a report + score into one CSV row.
WarpBenchRow make_row(const std::string& pair_id, const std::string& config_id, const MatchReport& report,
                      const ScoreResult& score);

}  // namespace mods

#include "mods/bench.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mods/synth.hpp"

namespace mods {

std::vector<double> default_latitude_series() { return {0, 20, 40, 60, 65, 70, 75, 80, 85}; }

std::vector<WarpCase> make_warp_series(const Image& img, const std::vector<double>& theta_deg) {
  std::vector<WarpCase> cases;
  cases.reserve(theta_deg.size());
  for (double theta : theta_deg) {
    double t = 1.0 / std::cos(deg2rad(theta));
    if (std::ceil(img.width() / t) < 32)
      fail(ErrorCode::ImageTooSmall, "make_warp_series: tilt " + std::to_string(t) + " leaves < 32 columns");

    WarpCase wc;
    wc.latitude_deg = theta;
    wc.tilt = t;
    SynthesisConfig cfg;
    cfg.scales = {1.0};
    cfg.tilts = {t};
    SynthView view = synthesize_view(img, cfg, ViewParams{1.0, t, 0.0});
    wc.warped = std::move(view.image);
    wc.gt = Mat3::Identity();
    wc.gt.block<2, 2>(0, 0) = view.back_map.a;
    wc.gt.block<2, 1>(0, 2) = view.back_map.b;
    cases.push_back(std::move(wc));
  }
  return cases;
}

namespace {

// Scorer-local error evaluation; intentionally independent of the matcher's
// residual code paths.

Vec2 apply_homography(const Mat3& m, const Vec2& p) {
  double w = m(2, 0) * p.x() + m(2, 1) * p.y() + m(2, 2);
  return Vec2((m(0, 0) * p.x() + m(0, 1) * p.y() + m(0, 2)) / w,
              (m(1, 0) * p.x() + m(1, 1) * p.y() + m(1, 2)) / w);
}

/// Symmetric transfer distance under an affine/homography ground truth that
/// maps image-2 coordinates onto image 1.
double gt_transfer_error(const Mat3& gt, const Vec2& p1, const Vec2& p2) {
  Vec2 fwd = apply_homography(gt, p2);
  Vec2 bwd = apply_homography(gt.inverse(), p1);
  return std::max((fwd - p1).norm(), (bwd - p2).norm());
}

/// Pixel-scale symmetric epipolar distance for a fundamental ground truth
/// with u in image 1 and v in image 2.
double gt_epipolar_error(const Mat3& f, const Vec2& u, const Vec2& v) {
  double l1 = f(0, 0) * u.x() + f(0, 1) * u.y() + f(0, 2);
  double l2 = f(1, 0) * u.x() + f(1, 1) * u.y() + f(1, 2);
  double l3 = f(2, 0) * u.x() + f(2, 1) * u.y() + f(2, 2);
  double m1 = f(0, 0) * v.x() + f(1, 0) * v.y() + f(2, 0);
  double m2 = f(0, 1) * v.x() + f(1, 1) * v.y() + f(2, 1);
  double s = v.x() * l1 + v.y() * l2 + l3;
  double na = l1 * l1 + l2 * l2;
  double nb = m1 * m1 + m2 * m2;
  if (na <= 0.0 && nb <= 0.0) return std::numeric_limits<double>::infinity();
  double e2 = s * s * ((na > 0 ? 1.0 / na : 0.0) + (nb > 0 ? 1.0 / nb : 0.0));
  return std::sqrt(e2);
}

}  // namespace

ScoreResult score_correspondences(const MatchReport& report, const SolveCriteria& crit) {
  if (!crit.gt.allFinite() || crit.gt.norm() == 0.0)
    fail(ErrorCode::MissingGroundTruth, "score_correspondences: ground truth matrix unusable");

  std::vector<double> errors;
  for (const auto& rec : report.correspondences) {
    if (!rec.laf_kept) continue;  // the matcher's output is the post-LAF set
    Vec2 p1(rec.x1, rec.y1), p2(rec.x2, rec.y2);
    double e = crit.gt_kind == GtKind::Fundamental ? gt_epipolar_error(crit.gt, p1, p2)
                                                   : gt_transfer_error(crit.gt, p1, p2);
    errors.push_back(e);
  }

  ScoreResult res;
  if (errors.empty()) {
    res.median_error_px = std::numeric_limits<double>::infinity();
    return res;
  }
  for (double e : errors)
    if (e <= crit.correct_threshold_px) ++res.correct_count;

  std::vector<double> sorted = errors;
  std::sort(sorted.begin(), sorted.end());
  std::size_t n = sorted.size();
  res.median_error_px = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

  res.solved = crit.mode == SolveMode::GtCorrespondenceCount ? res.correct_count >= crit.min_correct
                                                             : res.median_error_px <= crit.max_median_px;
  return res;
}

Difficulty classify_difficulty(double f) {
  if (f >= 0.99) return Difficulty::Hard;
  if (f >= 0.90) return Difficulty::Medium;
  if (f >= 0.50) return Difficulty::Easy;
  return Difficulty::Unsolved;
}

const char* difficulty_name(Difficulty d) {
  switch (d) {
    case Difficulty::Unsolved: return "unsolved";
    case Difficulty::Easy: return "easy";
    case Difficulty::Medium: return "medium";
    case Difficulty::Hard: return "hard";
  }
  return "?";
}

RgbImage render_overlay(const Image& img1, const Image& img2, const MatchReport& report) {
  int w = img1.width() + img2.width();
  int h = std::max(img1.height(), img2.height());
  RgbImage canvas(w, h);
  auto blit = [&](const Image& img, int x_off) {
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) {
        float v = std::clamp(img.at(y, x), 0.0f, 1.0f);
        auto b = static_cast<std::uint8_t>(v * 255.0f + 0.5f);
        canvas.set(x_off + x, y, b, b, b);
      }
  };
  blit(img1, 0);
  blit(img2, img1.width());

  auto line = [&](Vec2 a, Vec2 b, std::uint8_t r, std::uint8_t g, std::uint8_t bl) {
    int steps = static_cast<int>(std::ceil((b - a).norm())) + 1;
    for (int i = 0; i <= steps; ++i) {
      Vec2 p = a + (b - a) * (static_cast<double>(i) / steps);
      canvas.set(static_cast<int>(std::lround(p.x())), static_cast<int>(std::lround(p.y())), r, g, bl);
    }
  };
  for (const auto& rec : report.correspondences) {
    Vec2 a(rec.x1, rec.y1);
    Vec2 b(rec.x2 + img1.width(), rec.y2);
    if (rec.laf_kept)
      line(a, b, 40, 220, 40);
    else
      line(a, b, 230, 50, 50);
  }
  return canvas;
}

std::string csv_header() {
  return "pair_id,config_id,solved,step,inliers,correct,median_err_px,ms_total,ms_synth,ms_detect,"
         "ms_describe,ms_match,ms_verify";
}

std::string to_csv(const WarpBenchRow& r) {
  std::ostringstream os;
  os << r.pair_id << ',' << r.config_id << ',' << (r.solved ? 1 : 0) << ',' << r.step << ',' << r.inliers << ','
     << r.correct << ',' << r.median_err_px << ',' << r.ms_total << ',' << r.stages.synth_ms << ','
     << r.stages.detect_ms << ',' << r.stages.describe_ms << ',' << r.stages.match_ms << ',' << r.stages.verify_ms;
  return os.str();
}

WarpBenchRow make_row(const std::string& pair_id, const std::string& config_id, const MatchReport& report,
                      const ScoreResult& score) {
  WarpBenchRow row;
  row.pair_id = pair_id;
  row.config_id = config_id;
  row.solved = score.solved;
  row.step = report.step;
  row.inliers = report.n_matches;
  row.correct = score.correct_count;
  row.median_err_px = score.median_error_px;
  row.ms_total = report.total_ms;
  for (const auto& s : report.steps) row.stages += s.timing;
  return row;
}

}  // namespace mods

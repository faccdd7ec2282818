#include "mods/orchestrator.hpp"

#include <chrono>
#include <set>

#include "mods/parallel.hpp"

namespace mods {

void StepConfig::validate() const {
  synthesis.validate();
  matching.validate();
  bool compatible = (detector == DetectorTier::Fast && descriptor == DescriptorKind::Binary) ||
                    (detector != DetectorTier::Fast && descriptor == DescriptorKind::RootSift);
  if (!compatible) fail(ErrorCode::InvalidConfig, "step: descriptor kind does not suit the detector tier");
  if (detector_params.max_features < 1 || detector_params.adaptation_iterations < 1)
    fail(ErrorCode::InvalidConfig, "step: detector caps must be >= 1");
  if (detector_params.response_threshold < 0) fail(ErrorCode::InvalidConfig, "step: negative detector threshold");
}

void ModsConfig::validate() const {
  if (steps.empty()) fail(ErrorCode::InvalidConfig, "mods: no steps configured");
  for (const auto& s : steps) s.validate();
  if (theta_m < 4) fail(ErrorCode::InvalidConfig, "mods: theta_m must be >= 4");
  if (s_max != -1 && (s_max < 1 || s_max > static_cast<int>(steps.size())))
    fail(ErrorCode::InvalidConfig, "mods: s_max outside [1, len(steps)]");
  ransac.validate();
}

int ModsConfig::effective_s_max() const { return s_max == -1 ? static_cast<int>(steps.size()) : s_max; }

StageTiming& StageTiming::operator+=(const StageTiming& o) {
  synth_ms += o.synth_ms;
  detect_ms += o.detect_ms;
  describe_ms += o.describe_ms;
  match_ms += o.match_ms;
  verify_ms += o.verify_ms;
  return *this;
}

namespace {

StepConfig make_step(DetectorTier tier, DescriptorKind kind, std::vector<double> scales, std::vector<double> tilts,
                     double delta_phi) {
  StepConfig s;
  s.detector = tier;
  s.descriptor = kind;
  s.synthesis.scales = std::move(scales);
  s.synthesis.tilts = std::move(tilts);
  s.synthesis.delta_phi_base_deg = delta_phi;
  s.detector_params = DetectorParams::defaults_for(tier);
  s.matching.strategy = MatchStrategy::FGINN;
  // Binary ratios concentrate higher than float ones.
  s.matching.ratio_threshold = kind == DescriptorKind::Binary ? 0.9 : 0.8;
  return s;
}

}  // namespace

ModsConfig ModsConfig::default_config() {
  ModsConfig cfg;
  auto fast = DescriptorKind::Binary;
  auto root = DescriptorKind::RootSift;
  cfg.steps = {
      make_step(DetectorTier::Fast, fast, {1.0}, {1.0}, 360.0),
      make_step(DetectorTier::Fast, fast, {1.0}, {1.0, 5.0, 9.0}, 360.0),
      make_step(DetectorTier::DoG, root, {1.0, 0.25, 0.125}, {1.0}, 360.0),
      make_step(DetectorTier::DoG, root, {1.0, 0.25, 0.125}, {1.0, 3.0, 6.0, 9.0}, 360.0),
      make_step(DetectorTier::HessAff, root, {1.0}, {1.0, 2.0, 4.0, 6.0, 8.0}, 360.0),
      make_step(DetectorTier::HessAff, root, {1.0}, {1.0, 2.0, 4.0, 6.0, 8.0}, 120.0),
      make_step(DetectorTier::HessAff, root, {1.0}, {1.0, 2.0, 4.0, 6.0, 8.0, 10.0}, 60.0),
  };
  return cfg;
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(Clock::now() - t0).count();
}

struct ViewKey {
  double s, t, phi;
  bool operator<(const ViewKey& o) const {
    if (s != o.s) return s < o.s;
    if (t != o.t) return t < o.t;
    return phi < o.phi;
  }
};

struct ImagePipeline {
  const Image* img = nullptr;
  std::map<DescriptorKind, std::vector<DescribedFeature>> pools;
  std::map<DetectorTier, std::set<ViewKey>> seen;  // views already processed per tier
  int next_view_id = 0;
};

struct StepOutcome {
  std::vector<TentativeCorrespondence> tcs;
  std::optional<GeometryModel> model;
  VerifiedResult verified;
  int n_matches = 0;
};

std::vector<CorrespondenceRecord> to_records(const StepOutcome& o) {
  std::vector<CorrespondenceRecord> recs;
  if (!o.model) return recs;
  std::set<int> kept(o.verified.inliers_after_laf.begin(), o.verified.inliers_after_laf.end());
  recs.reserve(o.model->inliers.size());
  for (int idx : o.model->inliers) {
    const auto& tc = o.tcs[idx];
    CorrespondenceRecord r;
    r.x1 = tc.feat1.frame.center.x();
    r.y1 = tc.feat1.frame.center.y();
    r.x2 = tc.feat2.frame.center.x();
    r.y2 = tc.feat2.frame.center.y();
    r.ratio = tc.distance_ratio;
    r.prune_count = tc.prune_count;
    r.laf_kept = kept.count(idx) > 0;
    recs.push_back(r);
  }
  return recs;
}

}  // namespace

MatchReport run_mods(const Image& img1, const Image& img2, const ModsConfig& cfg) {
  cfg.validate();
  auto run_start = Clock::now();

  MatchReport report;
  report.config = cfg;

  ImagePipeline pipes[2];
  pipes[0].img = &img1;
  pipes[1].img = &img2;

  // Matching settings follow the latest step that touched each pool kind.
  std::map<DescriptorKind, MatchingConfig> match_cfg;

  StepOutcome best;
  int best_step = 0;

  int s_max = cfg.effective_s_max();
  for (int si = 0; si < s_max; ++si) {
    const StepConfig& step = cfg.steps[si];
    StepStats stats;
    stats.step_index = si + 1;

    // --- synthesis: only views this tier has not processed yet
    auto t0 = Clock::now();
    std::vector<SynthView> views[2];
    for (int im = 0; im < 2; ++im) {
      auto& seen = pipes[im].seen[step.detector];
      std::vector<ViewParams> fresh;
      for (const ViewParams& p : enumerate_views(step.synthesis)) {
        ViewKey key{p.scale, p.tilt, p.phi_deg};
        if (seen.insert(key).second) fresh.push_back(p);
      }
      views[im].resize(fresh.size());
      const Image& src = *pipes[im].img;
      parallel_for(fresh.size(), [&](std::size_t v) { views[im][v] = synthesize_view(src, step.synthesis, fresh[v]); });
    }
    stats.views1 = static_cast<int>(views[0].size());
    stats.views2 = static_cast<int>(views[1].size());
    stats.timing.synth_ms = ms_since(t0);

    // --- detection per view (view coordinates)
    t0 = Clock::now();
    std::vector<std::vector<AffineFrame>> frames[2];
    for (int im = 0; im < 2; ++im) {
      frames[im].resize(views[im].size());
      parallel_for(views[im].size(), [&](std::size_t v) {
        frames[im][v] = detect(step.detector, views[im][v].image, step.detector_params, &views[im][v].mask);
      });
    }
    stats.timing.detect_ms = ms_since(t0);

    // --- description on the views, then reprojection into original coords
    t0 = Clock::now();
    for (int im = 0; im < 2; ++im) {
      std::vector<std::vector<DescribedFeature>> described(views[im].size());
      parallel_for(views[im].size(), [&](std::size_t v) {
        described[v] = describe_features(views[im][v].image, frames[im][v], step.descriptor);
        const Image& orig = *pipes[im].img;
        std::vector<DescribedFeature> kept;
        kept.reserve(described[v].size());
        for (auto& df : described[v]) {
          df.frame.center = views[im][v].back_map.apply(df.frame.center);
          df.frame.shape = views[im][v].back_map.a * df.frame.shape;
          if (df.frame.center.x() < 0 || df.frame.center.y() < 0 || df.frame.center.x() >= orig.width() ||
              df.frame.center.y() >= orig.height())
            continue;
          kept.push_back(std::move(df));
        }
        described[v] = std::move(kept);
      });
      auto& pool = pipes[im].pools[step.descriptor];
      int added = 0;
      for (std::size_t v = 0; v < described.size(); ++v) {
        int view_id = pipes[im].next_view_id++;
        for (auto& df : described[v]) {
          df.frame.view_id = view_id;
          pool.push_back(std::move(df));
          ++added;
        }
      }
      (im == 0 ? stats.new_features1 : stats.new_features2) = added;
      int total = 0;
      for (const auto& [kind, p] : pipes[im].pools) total += static_cast<int>(p.size());
      (im == 0 ? stats.total_features1 : stats.total_features2) = total;
      views[im].clear();  // views are not needed past description
    }
    stats.timing.describe_ms = ms_since(t0);

    // --- cumulative re-matching over every pool kind present on both sides
    t0 = Clock::now();
    match_cfg[step.descriptor] = step.matching;
    StepOutcome outcome;
    for (const auto& [kind, mcfg] : match_cfg) {
      auto it1 = pipes[0].pools.find(kind);
      auto it2 = pipes[1].pools.find(kind);
      if (it1 == pipes[0].pools.end() || it2 == pipes[1].pools.end()) continue;
      auto tcs = match(it1->second, it2->second, mcfg);
      outcome.tcs.insert(outcome.tcs.end(), std::make_move_iterator(tcs.begin()), std::make_move_iterator(tcs.end()));
    }
    outcome.tcs = filter_duplicates(outcome.tcs);
    stats.tentatives = static_cast<int>(outcome.tcs.size());
    stats.timing.match_ms = ms_since(t0);

    // --- geometric verification
    t0 = Clock::now();
    if (outcome.tcs.size() >= 4) {
      outcome.model = auto_model(outcome.tcs, cfg.ransac);
      if (outcome.model) {
        outcome.verified = laf_check(outcome.tcs, *outcome.model, cfg.ransac);
        outcome.n_matches = static_cast<int>(outcome.verified.inliers_after_laf.size());
        stats.ransac_inliers = static_cast<int>(outcome.model->inliers.size());
      }
    }
    stats.matches = outcome.n_matches;
    stats.timing.verify_ms = ms_since(t0);

    report.steps.push_back(stats);
    if (outcome.n_matches > best.n_matches || best_step == 0) {
      best = std::move(outcome);
      best_step = si + 1;
    }
    if (best.n_matches >= cfg.theta_m) {
      report.solved = true;
      break;
    }
  }

  report.step = best_step;
  report.n_matches = best.n_matches;
  report.model = best.model;
  report.correspondences = to_records(best);
  report.tentatives.reserve(best.tcs.size());
  for (const auto& tc : best.tcs) {
    CorrespondenceRecord r;
    r.x1 = tc.feat1.frame.center.x();
    r.y1 = tc.feat1.frame.center.y();
    r.x2 = tc.feat2.frame.center.x();
    r.y2 = tc.feat2.frame.center.y();
    r.ratio = tc.distance_ratio;
    r.prune_count = tc.prune_count;
    report.tentatives.push_back(r);
  }
  report.total_ms = ms_since(run_start);
  return report;
}

MatchReport run_single_config(const Image& img1, const Image& img2, const StepConfig& step, int theta_m) {
  ModsConfig cfg;
  cfg.steps = {step};
  cfg.theta_m = theta_m;
  return run_mods(img1, img2, cfg);
}

}  // namespace mods

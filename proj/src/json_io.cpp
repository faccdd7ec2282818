#include "mods/json_io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace mods {

namespace {

using nlohmann::json;

json to_json(const SynthesisConfig& s) {
  return json{{"scales", s.scales},
              {"tilts", s.tilts},
              {"delta_phi_base", s.delta_phi_base_deg},
              {"sigma_base", s.sigma_base}};
}

void from_json_into(const json& j, SynthesisConfig& s) {
  s.scales = j.value("scales", s.scales);
  s.tilts = j.value("tilts", s.tilts);
  s.delta_phi_base_deg = j.value("delta_phi_base", s.delta_phi_base_deg);
  s.sigma_base = j.value("sigma_base", s.sigma_base);
}

json to_json(const MatchingConfig& m) {
  return json{{"strategy", m.strategy == MatchStrategy::FGINN ? "fginn" : "snn"},
              {"ratio_threshold", m.ratio_threshold},
              {"inconsistency_radius_px", m.inconsistency_radius_px},
              {"k_neighbors", m.k_neighbors}};
}

void from_json_into(const json& j, MatchingConfig& m) {
  std::string strategy = j.value("strategy", std::string("fginn"));
  if (strategy != "fginn" && strategy != "snn") fail(ErrorCode::InvalidConfig, "config: unknown matching strategy");
  m.strategy = strategy == "fginn" ? MatchStrategy::FGINN : MatchStrategy::SNN;
  m.ratio_threshold = j.value("ratio_threshold", m.ratio_threshold);
  m.inconsistency_radius_px = j.value("inconsistency_radius_px", m.inconsistency_radius_px);
  m.k_neighbors = j.value("k_neighbors", m.k_neighbors);
}

json to_json(const StepConfig& s) {
  return json{{"detector", tier_name(s.detector)},
              {"descriptor", descriptor_name(s.descriptor)},
              {"synthesis", to_json(s.synthesis)},
              {"matching", to_json(s.matching)},
              {"detector_params",
               {{"response_threshold", s.detector_params.response_threshold},
                {"max_features", s.detector_params.max_features},
                {"levels_per_octave", s.detector_params.levels_per_octave},
                {"adaptation_iterations", s.detector_params.adaptation_iterations}}}};
}

DetectorTier tier_from_name(const std::string& name) {
  if (name == "fast") return DetectorTier::Fast;
  if (name == "dog") return DetectorTier::DoG;
  if (name == "hessaff") return DetectorTier::HessAff;
  fail(ErrorCode::InvalidConfig, "config: unknown detector '" + name + "'");
}

DescriptorKind descriptor_from_name(const std::string& name) {
  if (name == "rootsift") return DescriptorKind::RootSift;
  if (name == "brief") return DescriptorKind::Binary;
  fail(ErrorCode::InvalidConfig, "config: unknown descriptor '" + name + "'");
}

StepConfig step_from_json(const json& j) {
  StepConfig s;
  s.detector = tier_from_name(j.value("detector", std::string("fast")));
  s.descriptor = descriptor_from_name(
      j.value("descriptor", std::string(s.detector == DetectorTier::Fast ? "brief" : "rootsift")));
  s.detector_params = DetectorParams::defaults_for(s.detector);
  s.matching.ratio_threshold = s.descriptor == DescriptorKind::Binary ? 0.9 : 0.8;
  if (j.contains("synthesis")) from_json_into(j["synthesis"], s.synthesis);
  if (j.contains("matching")) from_json_into(j["matching"], s.matching);
  if (j.contains("detector_params")) {
    const json& p = j["detector_params"];
    s.detector_params.response_threshold = p.value("response_threshold", s.detector_params.response_threshold);
    s.detector_params.max_features = p.value("max_features", s.detector_params.max_features);
    s.detector_params.levels_per_octave = p.value("levels_per_octave", s.detector_params.levels_per_octave);
    s.detector_params.adaptation_iterations =
        p.value("adaptation_iterations", s.detector_params.adaptation_iterations);
  }
  return s;
}

json to_json(const RansacConfig& r) {
  return json{{"h_inlier_threshold_px", r.h_inlier_threshold_px},
              {"f_inlier_threshold_px", r.f_inlier_threshold_px},
              {"confidence", r.confidence},
              {"max_iterations", r.max_iterations},
              {"lo_refit_rounds", r.lo_refit_rounds},
              {"seed", r.rng_seed}};
}

void from_json_into(const json& j, RansacConfig& r) {
  r.h_inlier_threshold_px = j.value("h_inlier_threshold_px", r.h_inlier_threshold_px);
  r.f_inlier_threshold_px = j.value("f_inlier_threshold_px", r.f_inlier_threshold_px);
  r.confidence = j.value("confidence", r.confidence);
  r.max_iterations = j.value("max_iterations", r.max_iterations);
  r.lo_refit_rounds = j.value("lo_refit_rounds", r.lo_refit_rounds);
  r.rng_seed = j.value("seed", r.rng_seed);
}

json config_json(const ModsConfig& cfg) {
  json steps = json::array();
  for (const auto& s : cfg.steps) steps.push_back(to_json(s));
  return json{{"steps", steps}, {"theta_m", cfg.theta_m}, {"s_max", cfg.s_max}, {"ransac", to_json(cfg.ransac)}};
}

}  // namespace

std::string report_to_json(const MatchReport& report, bool include_timings) {
  json j;
  j["solved"] = report.solved;
  j["step"] = report.step;
  j["n_matches"] = report.n_matches;
  if (report.model) {
    json model;
    model["kind"] = report.model->kind == ModelKind::Homography ? "homography" : "fundamental";
    std::vector<double> m(9);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m[r * 3 + c] = report.model->matrix(r, c);
    model["matrix"] = m;
    j["model"] = model;
  } else {
    j["model"] = nullptr;
  }
  json corr = json::array();
  for (const auto& rec : report.correspondences)
    corr.push_back(json{{"x1", rec.x1},
                        {"y1", rec.y1},
                        {"x2", rec.x2},
                        {"y2", rec.y2},
                        {"ratio", rec.ratio},
                        {"prune_count", rec.prune_count},
                        {"laf_kept", rec.laf_kept}});
  j["correspondences"] = corr;

  json steps = json::array();
  for (const auto& s : report.steps) {
    json step{{"step", s.step_index},
              {"views1", s.views1},
              {"views2", s.views2},
              {"new_features1", s.new_features1},
              {"new_features2", s.new_features2},
              {"total_features1", s.total_features1},
              {"total_features2", s.total_features2},
              {"tentatives", s.tentatives},
              {"ransac_inliers", s.ransac_inliers},
              {"matches", s.matches}};
    if (include_timings)
      step["timings_ms"] = json{{"synth", s.timing.synth_ms},
                                {"detect", s.timing.detect_ms},
                                {"describe", s.timing.describe_ms},
                                {"match", s.timing.match_ms},
                                {"verify", s.timing.verify_ms},
                                {"total", s.timing.total()}};
    steps.push_back(step);
  }
  j["steps"] = steps;
  if (include_timings) j["total_ms"] = report.total_ms;
  j["config"] = config_json(report.config);
  return j.dump(2);
}

std::string config_to_json(const ModsConfig& cfg) { return config_json(cfg).dump(2); }

ModsConfig config_from_json(const std::string& text) {
  json j = json::parse(text);
  ModsConfig cfg = ModsConfig::default_config();
  if (j.contains("steps")) {
    cfg.steps.clear();
    for (const auto& js : j["steps"]) cfg.steps.push_back(step_from_json(js));
  }
  cfg.theta_m = j.value("theta_m", cfg.theta_m);
  cfg.s_max = j.value("s_max", cfg.s_max);
  if (j.contains("ransac")) from_json_into(j["ransac"], cfg.ransac);
  cfg.validate();
  return cfg;
}

ModsConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

Mat3 load_matrix3(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open matrix file " + path);
  Mat3 m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      if (!(in >> m(r, c))) fail(ErrorCode::IoError, path + ": expected 9 numbers");
  return m;
}

MatchReport report_from_json(const std::string& text) {
  json j = json::parse(text);
  MatchReport report;
  report.solved = j.value("solved", false);
  report.step = j.value("step", 0);
  report.n_matches = j.value("n_matches", 0);
  report.total_ms = j.value("total_ms", 0.0);
  if (j.contains("model") && !j["model"].is_null()) {
    GeometryModel model;
    model.kind = j["model"].value("kind", std::string("homography")) == "fundamental" ? ModelKind::Fundamental
                                                                                      : ModelKind::Homography;
    auto m = j["model"]["matrix"].get<std::vector<double>>();
    if (m.size() != 9) fail(ErrorCode::IoError, "report: model matrix must have 9 entries");
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) model.matrix(r, c) = m[r * 3 + c];
    report.model = model;
  }
  for (const auto& rec : j.value("correspondences", json::array())) {
    CorrespondenceRecord r;
    r.x1 = rec.value("x1", 0.0);
    r.y1 = rec.value("y1", 0.0);
    r.x2 = rec.value("x2", 0.0);
    r.y2 = rec.value("y2", 0.0);
    r.ratio = rec.value("ratio", 0.0);
    r.prune_count = rec.value("prune_count", 0);
    r.laf_kept = rec.value("laf_kept", true);
    report.correspondences.push_back(r);
  }
  return report;
}

}  // namespace mods

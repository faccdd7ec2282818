#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "mods/bench.hpp"
#include "mods/json_io.hpp"
#include "mods/parallel.hpp"

namespace fs = std::filesystem;

namespace {

mods::ModsConfig resolve_config(const std::string& path, std::uint64_t seed, bool seed_set) {
  mods::ModsConfig cfg = path.empty() ? mods::ModsConfig::default_config() : mods::load_config(path);
  if (seed_set) cfg.ransac.rng_seed = seed;
  return cfg;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw mods::Error(mods::ErrorCode::IoError, "cannot write " + path);
  out << text;
}

int cmd_match(const std::string& img1_path, const std::string& img2_path, const std::string& config_path,
              const std::string& out_path, const std::string& overlay_path, const std::string& tcs_path,
              std::uint64_t seed, bool seed_set) {
  mods::Image img1 = mods::load_image(img1_path);
  mods::Image img2 = mods::load_image(img2_path);
  mods::ModsConfig cfg = resolve_config(config_path, seed, seed_set);

  mods::MatchReport report = mods::run_mods(img1, img2, cfg);
  std::cout << (report.solved ? "solved" : "not solved") << " step=" << report.step
            << " matches=" << report.n_matches << " total_ms=" << report.total_ms << "\n";

  if (!out_path.empty()) write_file(out_path, mods::report_to_json(report));
  if (!overlay_path.empty()) mods::save_png(overlay_path, mods::render_overlay(img1, img2, report));
  if (!tcs_path.empty()) {
    std::ostringstream os;
    for (const auto& tc : report.tentatives)
      os << tc.x1 << ' ' << tc.y1 << ' ' << tc.x2 << ' ' << tc.y2 << ' ' << tc.ratio << ' ' << tc.prune_count
         << '\n';
    write_file(tcs_path, os.str());
  }
  return report.solved ? 0 : 2;
}

int cmd_bench_warp(const std::string& dir, const std::string& config_path, const std::string& out_csv,
                   std::uint64_t seed, bool seed_set) {
  mods::ModsConfig cfg = resolve_config(config_path, seed, seed_set);
  std::string config_id = config_path.empty() ? "mods:1-7" : fs::path(config_path).stem().string();

  std::vector<fs::path> images;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    if (ext == ".png" || ext == ".pgm" || ext == ".PNG" || ext == ".PGM") images.push_back(entry.path());
  }
  std::sort(images.begin(), images.end());
  if (images.empty()) throw mods::Error(mods::ErrorCode::IoError, "no .png/.pgm images in " + dir);

  std::ofstream csv(out_csv);
  if (!csv) throw mods::Error(mods::ErrorCode::IoError, "cannot write " + out_csv);
  csv << mods::csv_header() << "\n";

  for (const auto& path : images) {
    mods::Image img = mods::load_image(path.string());
    for (const auto& wc : mods::make_warp_series(img, mods::default_latitude_series())) {
      mods::MatchReport report = mods::run_mods(img, wc.warped, cfg);
      mods::SolveCriteria crit;
      crit.mode = mods::SolveMode::GtCorrespondenceCount;
      crit.gt_kind = mods::GtKind::Affine;
      crit.gt = wc.gt;
      crit.min_correct = 50;
      mods::ScoreResult score = mods::score_correspondences(report, crit);
      std::string pair_id = path.stem().string() + ":theta" + std::to_string(static_cast<int>(wc.latitude_deg));
      csv << mods::to_csv(mods::make_row(pair_id, config_id, report, score)) << "\n";
      std::cout << pair_id << (score.solved ? " solved" : " failed") << " correct=" << score.correct_count << "\n";
    }
  }
  return 0;
}

int cmd_bench_score(const std::string& report_path, const std::string& gt_path, const std::string& criterion,
                    bool fundamental, int min_correct, double median_px, double label_px) {
  std::ifstream in(report_path);
  if (!in) throw mods::Error(mods::ErrorCode::IoError, "cannot open " + report_path);
  std::stringstream ss;
  ss << in.rdbuf();
  mods::MatchReport report = mods::report_from_json(ss.str());

  mods::SolveCriteria crit;
  crit.gt = mods::load_matrix3(gt_path);
  crit.gt_kind = fundamental ? mods::GtKind::Fundamental : mods::GtKind::Homography;
  crit.mode = criterion == "median-epipolar" ? mods::SolveMode::MedianSymEpipolar
                                             : mods::SolveMode::GtCorrespondenceCount;
  crit.min_correct = min_correct;
  crit.max_median_px = median_px;
  crit.correct_threshold_px = label_px;

  mods::ScoreResult res = mods::score_correspondences(report, crit);
  std::cout << "{\n  \"solved\": " << (res.solved ? "true" : "false") << ",\n  \"correct\": " << res.correct_count
            << ",\n  \"median_err_px\": " << res.median_error_px << "\n}\n";
  return res.solved ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-view matching with on-demand view synthesis"};
  app.require_subcommand(1);

  std::string img1, img2, config_path, out_path, overlay_path, tcs_path;
  std::uint64_t seed = 0;
  int threads = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON configuration file");
    cmd->add_option("--seed", seed, "RANSAC seed override");
    cmd->add_option("--threads", threads, "worker threads (0: all cores)");
  };

  CLI::App* match_cmd = app.add_subcommand("match", "match two images");
  match_cmd->add_option("img1", img1)->required();
  match_cmd->add_option("img2", img2)->required();
  match_cmd->add_option("--out", out_path, "write the match report JSON here");
  match_cmd->add_option("--overlay", overlay_path, "write a correspondence overlay PNG");
  match_cmd->add_option("--tcs", tcs_path, "dump tentative correspondences as text records");
  add_common(match_cmd);

  CLI::App* bench_cmd = app.add_subcommand("bench", "evaluation harness");
  bench_cmd->require_subcommand(1);

  std::string warp_dir, warp_csv = "results.csv";
  CLI::App* warp_cmd = bench_cmd->add_subcommand("warp", "synthetic warp study over an image directory");
  warp_cmd->add_option("img-dir", warp_dir)->required();
  warp_cmd->add_option("--out", warp_csv, "output CSV path");
  add_common(warp_cmd);

  std::string report_path, gt_path, criterion = "correct-count";
  bool gt_fundamental = false;
  int min_correct = 10;
  double median_px = 6.0, label_px = 1.0;
  CLI::App* score_cmd = bench_cmd->add_subcommand("score", "score a report against ground truth");
  score_cmd->add_option("report", report_path)->required();
  score_cmd->add_option("--gt", gt_path, "3x3 ground-truth matrix file")->required();
  score_cmd->add_option("--criterion", criterion)->check(CLI::IsMember({"correct-count", "median-epipolar"}));
  score_cmd->add_flag("--fundamental", gt_fundamental, "ground truth is a fundamental matrix");
  score_cmd->add_option("--min-correct", min_correct, "correct correspondences needed (10 real / 50 synthetic)");
  score_cmd->add_option("--median-px", median_px, "median epipolar error bound");
  score_cmd->add_option("--label-px", label_px, "per-correspondence correctness threshold");

  CLI11_PARSE(app, argc, argv);

  try {
    mods::set_thread_count(threads);
    bool seed_set = seed != 0;
    if (match_cmd->parsed())
      return cmd_match(img1, img2, config_path, out_path, overlay_path, tcs_path, seed, seed_set);
    if (warp_cmd->parsed()) return cmd_bench_warp(warp_dir, config_path, warp_csv, seed, seed_set);
    if (score_cmd->parsed())
      return cmd_bench_score(report_path, gt_path, criterion, gt_fundamental, min_correct, median_px, label_px);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

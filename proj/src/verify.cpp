#include "mods/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mods {

void RansacConfig::validate() const {
  if (!(h_inlier_threshold_px > 0.0) || !(f_inlier_threshold_px > 0.0))
    fail(ErrorCode::InvalidConfig, "ransac: thresholds must be positive");
  if (!(confidence > 0.0) || !(confidence < 1.0)) fail(ErrorCode::InvalidConfig, "ransac: confidence outside (0,1)");
  if (max_iterations < 1 || lo_refit_rounds < 0) fail(ErrorCode::InvalidConfig, "ransac: bad iteration counts");
}

double homography_transfer_error(const Mat3& h, const Vec2& u, const Vec2& v) {
  auto transfer = [](const Mat3& m, const Vec2& p) -> std::optional<Vec2> {
    Vec3 q = m * Vec3(p.x(), p.y(), 1.0);
    if (std::abs(q(2)) < 1e-12) return std::nullopt;
    return Vec2(q(0) / q(2), q(1) / q(2));
  };
  auto fwd = transfer(h, u);
  auto bwd = transfer(h.inverse(), v);
  if (!fwd || !bwd) return std::numeric_limits<double>::infinity();
  return std::max((*fwd - v).norm(), (*bwd - u).norm());
}

double sampson_error(const Mat3& f, const Vec2& u, const Vec2& v) {
  Vec3 uh(u.x(), u.y(), 1.0), vh(v.x(), v.y(), 1.0);
  Vec3 fu = f * uh;
  Vec3 ftv = f.transpose() * vh;
  double s = vh.dot(fu);
  double den = fu(0) * fu(0) + fu(1) * fu(1) + ftv(0) * ftv(0) + ftv(1) * ftv(1);
  if (den <= 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(s * s / den);
}

namespace {

struct PointPairs {
  std::vector<Vec2> u, v;
};

PointPairs extract_points(const std::vector<TentativeCorrespondence>& tcs) {
  PointPairs p;
  p.u.reserve(tcs.size());
  p.v.reserve(tcs.size());
  for (const auto& tc : tcs) {
    p.u.push_back(tc.feat1.frame.center);
    p.v.push_back(tc.feat2.frame.center);
  }
  return p;
}

/// Hartley normalization: centroid to origin, mean distance sqrt(2).
Mat3 normalizing_transform(const std::vector<Vec2>& pts, const std::vector<int>& idx) {
  Vec2 mean = Vec2::Zero();
  for (int i : idx) mean += pts[i];
  mean /= static_cast<double>(idx.size());
  double scale = 0.0;
  for (int i : idx) scale += (pts[i] - mean).norm();
  scale /= static_cast<double>(idx.size());
  double s = scale > 1e-12 ? std::sqrt(2.0) / scale : 1.0;
  Mat3 t = Mat3::Identity();
  t(0, 0) = t(1, 1) = s;
  t(0, 2) = -s * mean.x();
  t(1, 2) = -s * mean.y();
  return t;
}

Vec3 hom(const Vec2& p) { return Vec3(p.x(), p.y(), 1.0); }

/// Least-squares DLT homography on the selected correspondences.
std::optional<Mat3> solve_homography_dlt(const PointPairs& pts, const std::vector<int>& idx) {
  if (idx.size() < 4) return std::nullopt;
  Mat3 t1 = normalizing_transform(pts.u, idx);
  Mat3 t2 = normalizing_transform(pts.v, idx);

  Eigen::MatrixXd a(2 * idx.size(), 9);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    Vec3 un = t1 * hom(pts.u[idx[r]]);
    Vec3 vn = t2 * hom(pts.v[idx[r]]);
    un /= un(2);
    vn /= vn(2);
    a.row(2 * r) << 0, 0, 0, -un(0), -un(1), -1, vn(1) * un(0), vn(1) * un(1), vn(1);
    a.row(2 * r + 1) << un(0), un(1), 1, 0, 0, 0, -vn(0) * un(0), -vn(0) * un(1), -vn(0);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  Eigen::VectorXd h = svd.matrixV().col(8);
  Mat3 hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  Mat3 out = t2.inverse() * hn * t1;
  if (!out.allFinite() || std::abs(out.determinant()) < 1e-14) return std::nullopt;
  return out;
}

bool sample_degenerate(const std::vector<Vec2>& pts, const int s[4]) {
  // Any 3 collinear points in the sample spoil the homography solve.
  for (int skip = 0; skip < 4; ++skip) {
    Vec2 a = pts[s[(skip + 1) % 4]], b = pts[s[(skip + 2) % 4]], c = pts[s[(skip + 3) % 4]];
    Vec2 ab = b - a, ac = c - a;
    double cross = ab.x() * ac.y() - ab.y() * ac.x();
    double norm = ab.norm() * ac.norm();
    if (norm < 1e-12 || std::abs(cross) < 1e-6 * norm) return true;
  }
  return false;
}

/// Least-squares 8-point fundamental matrix with rank-2 projection.
std::optional<Mat3> solve_fundamental_lsq(const PointPairs& pts, const std::vector<int>& idx) {
  if (idx.size() < 8) return std::nullopt;
  Mat3 t1 = normalizing_transform(pts.u, idx);
  Mat3 t2 = normalizing_transform(pts.v, idx);
  Eigen::MatrixXd a(idx.size(), 9);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    Vec3 un = t1 * hom(pts.u[idx[r]]);
    Vec3 vn = t2 * hom(pts.v[idx[r]]);
    un /= un(2);
    vn /= vn(2);
    a.row(r) << vn(0) * un(0), vn(0) * un(1), vn(0), vn(1) * un(0), vn(1) * un(1), vn(1), un(0), un(1), 1.0;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  Eigen::VectorXd f = svd.matrixV().col(8);
  Mat3 fn;
  fn << f(0), f(1), f(2), f(3), f(4), f(5), f(6), f(7), f(8);
  Eigen::JacobiSVD<Mat3> rank(fn, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec3 sv = rank.singularValues();
  sv(2) = 0.0;
  fn = rank.matrixU() * sv.asDiagonal() * rank.matrixV().transpose();
  Mat3 out = t2.transpose() * fn * t1;
  if (!out.allFinite()) return std::nullopt;
  return out;
}

/// 7-point minimal solver: 1 to 3 rank-2 candidates.
std::vector<Mat3> solve_fundamental_7pt(const PointPairs& pts, const int s[7]) {
  std::vector<int> idx(s, s + 7);
  Mat3 t1 = normalizing_transform(pts.u, idx);
  Mat3 t2 = normalizing_transform(pts.v, idx);
  Eigen::Matrix<double, 7, 9> a;
  for (int r = 0; r < 7; ++r) {
    Vec3 un = t1 * hom(pts.u[s[r]]);
    Vec3 vn = t2 * hom(pts.v[s[r]]);
    un /= un(2);
    vn /= vn(2);
    a.row(r) << vn(0) * un(0), vn(0) * un(1), vn(0), vn(1) * un(0), vn(1) * un(1), vn(1), un(0), un(1), 1.0;
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, 7, 9>> svd(a, Eigen::ComputeFullV);
  Eigen::VectorXd f1 = svd.matrixV().col(7);
  Eigen::VectorXd f2 = svd.matrixV().col(8);
  Mat3 m1, m2;
  m1 << f1(0), f1(1), f1(2), f1(3), f1(4), f1(5), f1(6), f1(7), f1(8);
  m2 << f2(0), f2(1), f2(2), f2(3), f2(4), f2(5), f2(6), f2(7), f2(8);

  // det(x*m1 + (1-x)*m2) is cubic in x; fit its coefficients from 4 samples.
  auto det_at = [&](double x) { return Mat3(x * m1 + (1.0 - x) * m2).determinant(); };
  double d0 = det_at(0.0), d1 = det_at(1.0), d2 = det_at(2.0), dm1 = det_at(-1.0);
  // p(x) = c3 x^3 + c2 x^2 + c1 x + c0
  double c0 = d0;
  double c2 = 0.5 * (d1 + dm1) - d0;
  double c3 = (d2 - 2.0 * d1 + 2.0 * dm1 - d0) / 6.0;
  double c1 = d1 - d0 - c2 - c3;

  std::vector<double> roots;
  double scale = std::max({std::abs(c0), std::abs(c1), std::abs(c2), std::abs(c3)});
  if (scale == 0.0) return {};
  if (std::abs(c3) > 1e-12 * scale) {
    Mat3 companion = Mat3::Zero();
    companion(0, 2) = -c0 / c3;
    companion(1, 2) = -c1 / c3;
    companion(2, 2) = -c2 / c3;
    companion(1, 0) = companion(2, 1) = 1.0;
    Eigen::EigenSolver<Mat3> eig(companion);
    for (int i = 0; i < 3; ++i) {
      auto ev = eig.eigenvalues()(i);
      if (std::abs(ev.imag()) < 1e-8 * (1.0 + std::abs(ev.real()))) roots.push_back(ev.real());
    }
  } else if (std::abs(c2) > 1e-12 * scale) {
    double disc = c1 * c1 - 4.0 * c2 * c0;
    if (disc >= 0.0) {
      roots.push_back((-c1 + std::sqrt(disc)) / (2.0 * c2));
      roots.push_back((-c1 - std::sqrt(disc)) / (2.0 * c2));
    }
  } else if (std::abs(c1) > 1e-12 * scale) {
    roots.push_back(-c0 / c1);
  }

  std::vector<Mat3> out;
  for (double x : roots) {
    Mat3 fn = x * m1 + (1.0 - x) * m2;
    Mat3 denorm = t2.transpose() * fn * t1;
    if (denorm.allFinite() && denorm.norm() > 1e-14) out.push_back(denorm);
  }
  return out;
}

struct Scorer {
  double threshold;
  const PointPairs& pts;
  bool homography;

  double error(const Mat3& m, int i) const {
    return homography ? homography_transfer_error(m, pts.u[i], pts.v[i]) : sampson_error(m, pts.u[i], pts.v[i]);
  }

  /// Inliers and summed squared error over all correspondences.
  std::pair<std::vector<int>, double> score(const Mat3& m) const {
    std::vector<int> in;
    double sse = 0.0;
    for (int i = 0; i < static_cast<int>(pts.u.size()); ++i) {
      double e = error(m, i);
      if (e <= threshold) {
        in.push_back(i);
        sse += e * e;
      }
    }
    return {std::move(in), sse};
  }
};

int adaptive_iterations(int inliers, int total, int sample_size, double confidence, int cap) {
  double w = static_cast<double>(inliers) / total;
  double p_good = std::pow(w, sample_size);
  if (p_good <= 1e-12) return cap;
  double n = std::log(1.0 - confidence) / std::log(1.0 - p_good);
  if (!(n > 0.0)) return 1;
  if (n >= static_cast<double>(cap)) return cap;  // avoids the int overflow too
  return std::max(1, static_cast<int>(std::ceil(n)));
}

struct RansacState {
  Mat3 best = Mat3::Identity();
  std::vector<int> inliers;
  double sse = 0.0;
  bool found = false;

  bool better(std::size_t n_in, double n_sse) const {
    if (!found) return true;
    if (n_in != inliers.size()) return n_in > inliers.size();
    return n_sse < sse;
  }
};

template <typename Refit>
void local_optimization(RansacState& st, const Scorer& scorer, const Refit& refit, int rounds) {
  for (int round = 0; round < rounds; ++round) {
    auto model = refit(st.inliers);
    if (!model) return;
    auto [in, sse] = scorer.score(*model);
    // LO must never lose support.
    if (in.size() < st.inliers.size()) return;
    if (in.size() == st.inliers.size() && sse >= st.sse) return;
    st.best = *model;
    st.inliers = std::move(in);
    st.sse = sse;
  }
}

GeometryModel finalize(const RansacState& st, const Scorer& scorer, ModelKind kind) {
  GeometryModel model;
  model.kind = kind;
  model.matrix = canonicalize(st.best);
  model.inliers = st.inliers;
  model.residuals.reserve(st.inliers.size());
  for (int i : st.inliers) model.residuals.push_back(scorer.error(st.best, i));
  return model;
}

}  // namespace

std::optional<GeometryModel> estimate_homography(const std::vector<TentativeCorrespondence>& tcs,
                                                 const RansacConfig& cfg) {
  cfg.validate();
  if (tcs.size() < 4) fail(ErrorCode::InsufficientCorrespondences, "estimate_homography: need >= 4");
  PointPairs pts = extract_points(tcs);
  const int n = static_cast<int>(tcs.size());
  Scorer scorer{cfg.h_inlier_threshold_px, pts, true};
  auto refit = [&](const std::vector<int>& idx) { return solve_homography_dlt(pts, idx); };

  std::mt19937_64 rng(cfg.rng_seed);
  RansacState st;
  int iterations = cfg.max_iterations;
  for (int it = 0; it < iterations; ++it) {
    int s[4];
    for (int j = 0; j < 4; ++j) {
      bool fresh = true;
      do {
        s[j] = static_cast<int>(rng() % n);
        fresh = true;
        for (int p = 0; p < j; ++p)
          if (s[p] == s[j]) fresh = false;
      } while (!fresh);
    }
    if (n > 4 && sample_degenerate(pts.u, s)) continue;
    auto h = solve_homography_dlt(pts, std::vector<int>(s, s + 4));
    if (!h) continue;
    auto [in, sse] = scorer.score(*h);
    if (in.size() >= 4 && st.better(in.size(), sse)) {
      st.best = *h;
      st.inliers = std::move(in);
      st.sse = sse;
      st.found = true;
      local_optimization(st, scorer, refit, cfg.lo_refit_rounds);
      iterations = std::min(iterations,
                            it + 1 + adaptive_iterations(static_cast<int>(st.inliers.size()), n, 4,
                                                         cfg.confidence, cfg.max_iterations));
    }
  }
  if (!st.found) return std::nullopt;
  return finalize(st, scorer, ModelKind::Homography);
}

std::optional<GeometryModel> estimate_fundamental(const std::vector<TentativeCorrespondence>& tcs,
                                                  const RansacConfig& cfg) {
  cfg.validate();
  if (tcs.size() < 7) fail(ErrorCode::InsufficientCorrespondences, "estimate_fundamental: need >= 7");
  PointPairs pts = extract_points(tcs);
  const int n = static_cast<int>(tcs.size());
  Scorer scorer{cfg.f_inlier_threshold_px, pts, false};
  auto refit = [&](const std::vector<int>& idx) -> std::optional<Mat3> {
    if (idx.size() < 8) return std::nullopt;
    return solve_fundamental_lsq(pts, idx);
  };

  std::mt19937_64 rng(cfg.rng_seed);
  RansacState st;
  int iterations = cfg.max_iterations;
  for (int it = 0; it < iterations; ++it) {
    int s[7];
    for (int j = 0; j < 7; ++j) {
      bool fresh = true;
      do {
        s[j] = static_cast<int>(rng() % n);
        fresh = true;
        for (int p = 0; p < j; ++p)
          if (s[p] == s[j]) fresh = false;
      } while (!fresh);
    }
    for (const Mat3& f : solve_fundamental_7pt(pts, s)) {
      auto [in, sse] = scorer.score(f);
      if (in.size() >= 7 && st.better(in.size(), sse)) {
        st.best = f;
        st.inliers = std::move(in);
        st.sse = sse;
        st.found = true;
        local_optimization(st, scorer, refit, cfg.lo_refit_rounds);
        iterations = std::min(iterations,
                              it + 1 + adaptive_iterations(static_cast<int>(st.inliers.size()), n, 7,
                                                           cfg.confidence, cfg.max_iterations));
      }
    }
  }
  if (!st.found) return std::nullopt;
  return finalize(st, scorer, ModelKind::Fundamental);
}

namespace {

GeometryModel rescore_as_homography(const Mat3& h, const std::vector<TentativeCorrespondence>& tcs,
                                    const RansacConfig& cfg) {
  PointPairs pts = extract_points(tcs);
  Scorer scorer{cfg.h_inlier_threshold_px, pts, true};
  auto [in, sse] = scorer.score(h);
  RansacState st;
  st.best = h;
  st.inliers = std::move(in);
  st.sse = sse;
  st.found = true;
  return finalize(st, scorer, ModelKind::Homography);
}

}  // namespace

std::optional<GeometryModel> auto_model(const std::vector<TentativeCorrespondence>& tcs, const RansacConfig& cfg) {
  if (tcs.size() < 4) fail(ErrorCode::InsufficientCorrespondences, "auto_model: need >= 4");
  auto h = estimate_homography(tcs, cfg);
  if (tcs.size() < 7) return h;

  auto f = estimate_fundamental(tcs, cfg);
  if (!f) return h;

  // Homography-degeneracy test on the F support.
  std::vector<TentativeCorrespondence> support;
  support.reserve(f->inliers.size());
  for (int i : f->inliers) support.push_back(tcs[i]);
  if (support.size() >= 4) {
    std::optional<GeometryModel> h_sub;
    try {
      h_sub = estimate_homography(support, cfg);
    } catch (const Error&) {
      h_sub = std::nullopt;
    }
    if (h_sub) {
      int consistent = 0;
      for (const auto& tc : support)
        if (homography_transfer_error(h_sub->matrix, tc.feat1.frame.center, tc.feat2.frame.center) <=
            cfg.h_inlier_threshold_px)
          ++consistent;
      if (consistent >= cfg.degeneracy_h_fraction * static_cast<double>(support.size())) {
        GeometryModel from_f = rescore_as_homography(h_sub->matrix, tcs, cfg);
        // Degenerate F confirmed; report whichever homography carries more
        // of the full list.
        if (h && h->inliers.size() > from_f.inliers.size()) return h;
        return from_f;
      }
    }
  }

  // The 7-point search is hopeless below ~20% inlier ratio while the 4-point
  // one still succeeds; when the directly estimated homography carries
  // comparable support, the epipolar estimate is untrustworthy.
  if (h && static_cast<double>(h->inliers.size()) >= cfg.degeneracy_h_fraction * f->inliers.size()) return h;
  return f;
}

VerifiedResult laf_check(const std::vector<TentativeCorrespondence>& tcs, const GeometryModel& model,
                         const RansacConfig& cfg) {
  VerifiedResult out;
  out.model = model;
  double threshold = cfg.laf_threshold_factor *
                     (model.kind == ModelKind::Homography ? cfg.h_inlier_threshold_px : cfg.f_inlier_threshold_px);

  auto frame_map = [](const DescribedFeature& f) {
    Mat2 rot;
    rot << std::cos(f.orientation), -std::sin(f.orientation), std::sin(f.orientation), std::cos(f.orientation);
    return Mat2(f.frame.shape * rot);
  };

  auto line_distance = [](const Mat3& f, const Vec2& a, const Vec2& b) {
    // max of the two point-to-epipolar-line distances
    Vec3 ah(a.x(), a.y(), 1.0), bh(b.x(), b.y(), 1.0);
    Vec3 l2 = f * ah;          // line in image 2
    Vec3 l1 = f.transpose() * bh;  // line in image 1
    double d2 = std::abs(bh.dot(l2)) / std::hypot(l2(0), l2(1));
    double d1 = std::abs(ah.dot(l1)) / std::hypot(l1(0), l1(1));
    return std::max(d1, d2);
  };

  for (int idx : model.inliers) {
    const auto& tc = tcs[idx];
    Mat2 m1 = frame_map(tc.feat1);
    Mat2 m2 = frame_map(tc.feat2);
    // Extremal ellipse points of frame 1 and the same unit-circle parameters
    // on frame 2, so exactly-mapped frames agree identically.
    Eigen::JacobiSVD<Mat2> svd(m1, Eigen::ComputeFullV);
    bool ok = true;
    for (int axis = 0; axis < 2 && ok; ++axis) {
      Vec2 w = svd.matrixV().col(axis);
      Vec2 p1 = tc.feat1.frame.center + m1 * w;
      Vec2 p2 = tc.feat2.frame.center + m2 * w;
      if (model.kind == ModelKind::Homography) {
        Vec3 q = model.matrix * Vec3(p1.x(), p1.y(), 1.0);
        if (std::abs(q(2)) < 1e-12) {
          ok = false;
          break;
        }
        ok = (Vec2(q(0) / q(2), q(1) / q(2)) - p2).norm() <= threshold;
      } else {
        ok = line_distance(model.matrix, p1, p2) <= threshold;
      }
    }
    if (ok)
      out.inliers_after_laf.push_back(idx);
    else
      ++out.discarded_by_laf;
  }
  return out;
}

}  // namespace mods

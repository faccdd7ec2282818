#include "mods/descriptors.hpp"

#include <bit>
#include <cmath>

#include "mods/imgproc.hpp"

namespace mods {

const char* descriptor_name(DescriptorKind k) {
  return k == DescriptorKind::RootSift ? "rootsift" : "brief";
}

int hamming_distance(const std::array<std::uint64_t, kBinaryWords>& a,
                     const std::array<std::uint64_t, kBinaryWords>& b) {
  int d = 0;
  for (int i = 0; i < kBinaryWords; ++i) d += std::popcount(a[i] ^ b[i]);
  return d;
}

double descriptor_distance(const Descriptor& a, const Descriptor& b) {
  if (a.kind != b.kind) fail(ErrorCode::KindMismatch, "descriptor_distance: mixed descriptor kinds");
  if (a.kind == DescriptorKind::Binary) return static_cast<double>(hamming_distance(a.bits, b.bits));
  double acc = 0.0;
  for (int i = 0; i < kRootSiftDim; ++i) {
    double d = a.values[i] - b.values[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

// ---------------------------------------------------------------------------
// Frozen point-pair pattern for the binary descriptor. Generated at compile
// time from integer-only arithmetic, so the bit layout is identical on every
// platform; changing it breaks stored descriptors.

namespace {

struct PairSample {
  std::int8_t x1, y1, x2, y2;
};

constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::array<PairSample, kBinaryBits> make_pattern() {
  std::array<PairSample, kBinaryBits> pattern{};
  std::uint64_t state = 0x0ddba11c0ffee123ULL;
  for (int i = 0; i < kBinaryBits; ++i) {
    std::int8_t coords[4] = {0, 0, 0, 0};
    do {
      for (int c = 0; c < 4; ++c) coords[c] = static_cast<std::int8_t>(splitmix64(state) % 31) - 15;
    } while (coords[0] == coords[2] && coords[1] == coords[3]);
    pattern[i] = {coords[0], coords[1], coords[2], coords[3]};
  }
  return pattern;
}

constexpr auto kBriefPattern = make_pattern();

}  // namespace

Image normalize_patch(const Image& img, const AffineFrame& frame, double orientation, int size) {
  Mat2 rot;
  rot << std::cos(orientation), -std::sin(orientation), std::sin(orientation), std::cos(orientation);
  Mat2 m = kMeasurementScale * frame.shape * rot;

  // Supersample when one patch step covers more than ~0.8 source pixels.
  Eigen::JacobiSVD<Mat2> svd(m);
  double step = 2.0 * svd.singularValues()(0) / size;
  int k = std::max(1, static_cast<int>(std::ceil(step / 0.8)));

  int n = size * k;
  Image fine(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      double qx = 2.0 * (i + 0.5) / n - 1.0;
      double qy = 2.0 * (j + 0.5) / n - 1.0;
      Vec2 p = frame.center + m * Vec2(qx, qy);
      fine.at(j, i) = sample_bilinear(img, p.x(), p.y());
    }
  if (k == 1) return fine;

  Image out(size, size);
  float inv = 1.0f / (k * k);
  for (int j = 0; j < size; ++j)
    for (int i = 0; i < size; ++i) {
      float acc = 0.0f;
      for (int dj = 0; dj < k; ++dj)
        for (int di = 0; di < k; ++di) acc += fine.at(j * k + dj, i * k + di);
      out.at(j, i) = acc * inv;
    }
  return out;
}

std::vector<double> dominant_orientations(const Image& patch) {
  constexpr int kBins = 36;
  double hist[kBins] = {0};
  int n = patch.width();
  double center = (n - 1) / 2.0;
  double sigma = n / 3.0;

  // Circular support: corner content would rotate in and out of a square
  // window and skew the histogram under re-orientation.
  double r_max = (n - 2) / 2.0;
  for (int y = 1; y < patch.height() - 1; ++y)
    for (int x = 1; x < n - 1; ++x) {
      double dx = x - center, dy = y - center;
      if (dx * dx + dy * dy > r_max * r_max) continue;
      double gx = 0.5 * (patch.at(y, x + 1) - patch.at(y, x - 1));
      double gy = 0.5 * (patch.at(y + 1, x) - patch.at(y - 1, x));
      double mag = std::sqrt(gx * gx + gy * gy);
      if (mag <= 0) continue;
      double w = std::exp(-0.5 * (dx * dx + dy * dy) / (sigma * sigma));
      double angle = wrap_angle(std::atan2(gy, gx));
      // soft assignment into the two nearest bins
      double pos = angle / (2.0 * kPi) * kBins - 0.5;
      int b0 = static_cast<int>(std::floor(pos));
      double frac = pos - b0;
      hist[(b0 + kBins) % kBins] += mag * w * (1.0 - frac);
      hist[(b0 + 1 + kBins) % kBins] += mag * w * frac;
    }

  // Circular smoothing.
  for (int pass = 0; pass < 2; ++pass) {
    double prev = hist[kBins - 1], first = hist[0];
    for (int i = 0; i < kBins; ++i) {
      double next = i + 1 < kBins ? hist[i + 1] : first;
      double cur = hist[i];
      hist[i] = (prev + cur + next) / 3.0;
      prev = cur;
    }
  }

  double peak = 0.0;
  for (double v : hist) peak = std::max(peak, v);
  if (peak <= 1e-12) return {0.0};

  struct Candidate {
    double angle, value;
  };
  std::vector<Candidate> cands;
  for (int i = 0; i < kBins; ++i) {
    double l = hist[(i + kBins - 1) % kBins], c = hist[i], r = hist[(i + 1) % kBins];
    // >= on the left admits exact two-bin plateaus (symmetric stimuli)
    if (c < 0.8 * peak || c < l || c <= r) continue;
    double den = l - 2.0 * c + r;
    double off = den == 0.0 ? 0.0 : 0.5 * (l - r) / den;
    cands.push_back({wrap_angle((i + 0.5 + off) * 2.0 * kPi / kBins), c});
  }
  if (cands.empty()) return {0.0};
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) { return a.value > b.value; });
  std::vector<double> out;
  for (std::size_t i = 0; i < cands.size() && i < 2; ++i) out.push_back(cands[i].angle);
  return out;
}

Descriptor root_sift(const Image& patch) {
  constexpr int kCells = 4, kOri = 8;
  Descriptor d;
  d.kind = DescriptorKind::RootSift;
  d.values.assign(kRootSiftDim, 0.0f);

  int n = patch.width();
  double center = (n - 1) / 2.0;
  double sigma = n / 2.0;
  double acc[kCells][kCells][kOri] = {};

  double energy = 0.0;
  for (int y = 1; y < patch.height() - 1; ++y)
    for (int x = 1; x < n - 1; ++x) {
      double gx = 0.5 * (patch.at(y, x + 1) - patch.at(y, x - 1));
      double gy = 0.5 * (patch.at(y + 1, x) - patch.at(y - 1, x));
      double mag = std::sqrt(gx * gx + gy * gy);
      if (mag <= 0) continue;
      energy += mag;
      double dx = x - center, dy = y - center;
      double w = mag * std::exp(-0.5 * (dx * dx + dy * dy) / (sigma * sigma));

      double cx = (x + 0.5) / n * kCells - 0.5;
      double cy = (y + 0.5) / n * kCells - 0.5;
      double ob = wrap_angle(std::atan2(gy, gx)) / (2.0 * kPi) * kOri - 0.5;

      int cx0 = static_cast<int>(std::floor(cx)), cy0 = static_cast<int>(std::floor(cy));
      int ob0 = static_cast<int>(std::floor(ob));
      double fx = cx - cx0, fy = cy - cy0, fo = ob - ob0;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          for (int c = 0; c < 2; ++c) {
            int xi = cx0 + a, yi = cy0 + b;
            if (xi < 0 || yi < 0 || xi >= kCells || yi >= kCells) continue;
            int oi = (ob0 + c + kOri) % kOri;
            double wt = w * (a ? fx : 1 - fx) * (b ? fy : 1 - fy) * (c ? fo : 1 - fo);
            acc[yi][xi][oi] += wt;
          }
    }

  if (energy <= 0.0) {
    float fill = 1.0f / std::sqrt(static_cast<float>(kRootSiftDim));
    d.values.assign(kRootSiftDim, fill);
    return d;
  }

  Eigen::Map<Eigen::VectorXd> v(&acc[0][0][0], kRootSiftDim);
  v /= v.norm();
  v = v.cwiseMin(0.2);
  v /= v.sum();
  v = v.cwiseSqrt();
  for (int i = 0; i < kRootSiftDim; ++i) d.values[i] = static_cast<float>(v(i));
  return d;
}

Descriptor brief(const Image& patch) {
  Descriptor d;
  d.kind = DescriptorKind::Binary;
  int cx = patch.width() / 2, cy = patch.height() / 2;
  for (int i = 0; i < kBinaryBits; ++i) {
    const PairSample& p = kBriefPattern[i];
    float a = patch.at_clamped(cy + p.y1, cx + p.x1);
    float b = patch.at_clamped(cy + p.y2, cx + p.x2);
    if (a < b) d.bits[i / 64] |= 1ULL << (i % 64);
  }
  return d;
}

std::vector<DescribedFeature> describe_features(const Image& view_img, const std::vector<AffineFrame>& frames,
                                                DescriptorKind kind) {
  std::vector<DescribedFeature> out;
  out.reserve(frames.size());
  for (const AffineFrame& f : frames) {
    if (kind == DescriptorKind::Binary) {
      Image patch = normalize_patch(view_img, f, 0.0, kBriefPatchSize);
      patch = gaussian_blur(patch, 2.0, 2.0);
      DescribedFeature df;
      df.frame = f;
      df.orientation = 0.0;
      df.descriptor = brief(patch);
      out.push_back(std::move(df));
      continue;
    }
    Image upright = normalize_patch(view_img, f, 0.0, kSiftPatchSize);
    for (double angle : dominant_orientations(upright)) {
      DescribedFeature df;
      df.frame = f;
      df.orientation = angle;
      Image patch = angle == 0.0 ? upright : normalize_patch(view_img, f, angle, kSiftPatchSize);
      df.descriptor = root_sift(patch);
      out.push_back(std::move(df));
    }
  }
  return out;
}

}  // namespace mods

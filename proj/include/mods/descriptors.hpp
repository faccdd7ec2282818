#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mods/core.hpp"
#include "mods/features.hpp"
#include "mods/image.hpp"

namespace mods {

enum class DescriptorKind { RootSift, Binary };

const char* descriptor_name(DescriptorKind k);

constexpr int kRootSiftDim = 128;
constexpr int kBinaryBits = 256;
constexpr int kBinaryWords = kBinaryBits / 64;

struct Descriptor {
  DescriptorKind kind = DescriptorKind::RootSift;
  std::vector<float> values;                     // RootSift: 128 entries, unit L2
  std::array<std::uint64_t, kBinaryWords> bits{};  // Binary: 256 comparisons
};

double descriptor_distance(const Descriptor& a, const Descriptor& b);
int hamming_distance(const std::array<std::uint64_t, kBinaryWords>& a,
                     const std::array<std::uint64_t, kBinaryWords>& b);

struct DescribedFeature {
  AffineFrame frame;       // original-image coordinates after reprojection
  Descriptor descriptor;
  double orientation = 0.0;  // [0, 2*pi)
};

/// Measurement-region magnification applied on top of the frame ellipse.
constexpr double kMeasurementScale = 3.0;

/// Patch sizes per descriptor.
constexpr int kSiftPatchSize = 41;
constexpr int kBriefPatchSize = 32;

/// Samples a size x size patch through shape * R(orientation), magnified by
/// the measurement scale. Out-of-image taps are zero. Undersampling is
/// avoided by internal supersampling when the frame is large.
Image normalize_patch(const Image& img, const AffineFrame& frame, double orientation, int size);

/// Peaks of the 36-bin Gaussian-weighted gradient orientation histogram,
/// parabolically refined; at most two, each within [0, 2*pi). A flat patch
/// yields {0}.
std::vector<double> dominant_orientations(const Image& patch);

/// 4x4 x 8-bin gradient histogram, clipped at 0.2 after L2 normalization,
/// then L1-normalized and square-rooted (unit L2 by construction).
Descriptor root_sift(const Image& patch);

/// 256 fixed point-pair intensity comparisons; the pattern is frozen and is
/// part of the wire format. Expects a >= 32x32 patch pre-smoothed at sigma 2.
Descriptor brief(const Image& patch);

/// Detection-to-description pipeline for one view: orientation estimation
/// (dominant-gradient for RootSift, none for Fast frames whose rotation is
/// already folded into the shape) followed by descriptor extraction.
/// Frames stay in the view's coordinates.
std::vector<DescribedFeature> describe_features(const Image& view_img, const std::vector<AffineFrame>& frames,
                                                DescriptorKind kind);

}  // namespace mods

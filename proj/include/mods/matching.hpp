#pragma once

#include <vector>

#include "mods/core.hpp"
#include "mods/descriptors.hpp"

namespace mods {

enum class MatchStrategy { FGINN, SNN };

struct MatchingConfig {
  double inconsistency_radius_px = 10.0;  // FGINN neighborhood, pixels
  double ratio_threshold = 0.8;
  MatchStrategy strategy = MatchStrategy::FGINN;
  int k_neighbors = 10;  // candidate pool for the inconsistency scan

  void validate() const;
};

struct TentativeCorrespondence {
  DescribedFeature feat1, feat2;  // both in original-image coordinates
  double distance_ratio = 0.0;    // [0, 1]
  int prune_count = 0;            // duplicates absorbed by this survivor
  int index1 = -1, index2 = -1;   // positions in the source feature lists
};

/// Indices of the k nearest pool entries by descriptor distance, ties broken
/// by pool index. Throws KindMismatch when query and pool kinds differ.
std::vector<int> knn_search(const Descriptor& query, const std::vector<DescribedFeature>& pool, int k);

/// First-to-first-geometrically-inconsistent ratio test: the denominator is
/// the nearest neighbor whose center lies at least `inconsistency_radius_px`
/// from the first's. Falls back to the k-th distance when every candidate is
/// consistent, and accepts outright when the pool has fewer than 2 entries.
std::vector<TentativeCorrespondence> match_fginn(const std::vector<DescribedFeature>& feats1,
                                                 const std::vector<DescribedFeature>& feats2,
                                                 const MatchingConfig& cfg);

/// Standard second-nearest-neighbor ratio test.
std::vector<TentativeCorrespondence> match_snn(const std::vector<DescribedFeature>& feats1,
                                               const std::vector<DescribedFeature>& feats2,
                                               const MatchingConfig& cfg);

std::vector<TentativeCorrespondence> match(const std::vector<DescribedFeature>& feats1,
                                           const std::vector<DescribedFeature>& feats2,
                                           const MatchingConfig& cfg);

/// Greedy duplicate pruning: correspondences whose endpoints agree within
/// `radius` pixels on both sides collapse onto the lowest-ratio member
/// (ties: lowest index), which absorbs the cluster into prune_count.
std::vector<TentativeCorrespondence> filter_duplicates(const std::vector<TentativeCorrespondence>& tcs,
                                                       double radius = 5.0);

}  // namespace mods

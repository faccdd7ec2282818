#include "mods/matching.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "mods/parallel.hpp"

namespace mods {

void MatchingConfig::validate() const {
  if (!(inconsistency_radius_px > 0.0)) fail(ErrorCode::InvalidConfig, "matching: radius must be positive");
  if (!(ratio_threshold > 0.0) || ratio_threshold > 1.0)
    fail(ErrorCode::InvalidConfig, "matching: ratio threshold outside (0, 1]");
  if (k_neighbors < 2) fail(ErrorCode::InvalidConfig, "matching: k_neighbors must be >= 2");
}

namespace {

struct Neighbor {
  double dist;
  int index;
  bool operator<(const Neighbor& o) const { return dist != o.dist ? dist < o.dist : index < o.index; }
};

/// Top-k scan of one distance row; exact, ties by pool index.
void top_k(std::vector<Neighbor>& heap, double dist, int index, int k) {
  Neighbor n{dist, index};
  if (static_cast<int>(heap.size()) < k) {
    heap.push_back(n);
    std::push_heap(heap.begin(), heap.end());
    return;
  }
  if (n < heap.front()) {
    std::pop_heap(heap.begin(), heap.end());
    heap.back() = n;
    std::push_heap(heap.begin(), heap.end());
  }
}

DescriptorKind pool_kind(const std::vector<DescribedFeature>& feats) { return feats.front().descriptor.kind; }

/// All-pairs k-NN: float descriptors go through blocked gram products,
/// binary ones through popcount scans. Rows come back sorted.
std::vector<std::vector<Neighbor>> batch_knn(const std::vector<DescribedFeature>& queries,
                                             const std::vector<DescribedFeature>& pool, int k) {
  std::vector<std::vector<Neighbor>> out(queries.size());
  if (queries.empty() || pool.empty()) return out;
  if (pool_kind(queries) != pool_kind(pool)) fail(ErrorCode::KindMismatch, "knn: query/pool descriptor kinds differ");
  k = std::min<int>(k, static_cast<int>(pool.size()));

  if (pool_kind(queries) == DescriptorKind::Binary) {
    parallel_for(queries.size(), [&](std::size_t qi) {
      std::vector<Neighbor> heap;
      heap.reserve(k + 1);
      for (std::size_t pi = 0; pi < pool.size(); ++pi) {
        int d = hamming_distance(queries[qi].descriptor.bits, pool[pi].descriptor.bits);
        top_k(heap, static_cast<double>(d), static_cast<int>(pi), k);
      }
      std::sort(heap.begin(), heap.end());
      out[qi] = std::move(heap);
    });
    return out;
  }

  Eigen::MatrixXf pmat(kRootSiftDim, pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i)
    pmat.col(i) = Eigen::Map<const Eigen::VectorXf>(pool[i].descriptor.values.data(), kRootSiftDim);
  Eigen::VectorXf pnorm = pmat.colwise().squaredNorm();

  constexpr std::size_t kBlock = 256;
  std::size_t blocks = (queries.size() + kBlock - 1) / kBlock;
  parallel_for(blocks, [&](std::size_t b) {
    std::size_t lo = b * kBlock, hi = std::min(queries.size(), lo + kBlock);
    Eigen::MatrixXf qmat(kRootSiftDim, hi - lo);
    for (std::size_t i = lo; i < hi; ++i)
      qmat.col(i - lo) = Eigen::Map<const Eigen::VectorXf>(queries[i].descriptor.values.data(), kRootSiftDim);
    Eigen::MatrixXf dots;
    dots.noalias() = pmat.transpose() * qmat;  // pool x block
    for (std::size_t i = lo; i < hi; ++i) {
      float qn = qmat.col(i - lo).squaredNorm();
      std::vector<Neighbor> heap;
      heap.reserve(k + 1);
      for (std::size_t pi = 0; pi < pool.size(); ++pi) {
        float d2 = std::max(0.0f, qn + pnorm(pi) - 2.0f * dots(pi, i - lo));
        top_k(heap, std::sqrt(static_cast<double>(d2)), static_cast<int>(pi), k);
      }
      std::sort(heap.begin(), heap.end());
      out[i] = std::move(heap);
    }
  });
  return out;
}

std::vector<TentativeCorrespondence> run_match(const std::vector<DescribedFeature>& feats1,
                                               const std::vector<DescribedFeature>& feats2,
                                               const MatchingConfig& cfg, MatchStrategy strategy) {
  cfg.validate();
  std::vector<TentativeCorrespondence> out;
  if (feats1.empty() || feats2.empty()) return out;

  int k = strategy == MatchStrategy::FGINN ? cfg.k_neighbors : 2;
  auto knn = batch_knn(feats1, feats2, k);
  double r2 = cfg.inconsistency_radius_px * cfg.inconsistency_radius_px;

  for (std::size_t i = 0; i < feats1.size(); ++i) {
    const auto& nn = knn[i];
    if (nn.empty()) continue;
    double d1 = nn[0].dist;
    double ratio;
    // A zero denominator means an identical descriptor elsewhere in the
    // pool: such matches annihilate (the ratio tends to 1).
    if (feats2.size() < 2) {
      ratio = 0.0;
    } else if (strategy == MatchStrategy::SNN) {
      ratio = nn[1].dist > 0.0 ? d1 / nn[1].dist : 1.0;
    } else {
      const Vec2 c1 = feats2[nn[0].index].frame.center;
      double denom = nn.back().dist;  // lower bound of the (k+1)-th distance
      for (std::size_t j = 1; j < nn.size(); ++j) {
        if ((feats2[nn[j].index].frame.center - c1).squaredNorm() >= r2) {
          denom = nn[j].dist;
          break;
        }
      }
      ratio = denom > 0.0 ? d1 / denom : 1.0;
    }
    if (ratio > cfg.ratio_threshold) continue;
    TentativeCorrespondence tc;
    tc.feat1 = feats1[i];
    tc.feat2 = feats2[nn[0].index];
    tc.distance_ratio = ratio;
    tc.index1 = static_cast<int>(i);
    tc.index2 = nn[0].index;
    out.push_back(std::move(tc));
  }
  return out;
}

}  // namespace

std::vector<int> knn_search(const Descriptor& query, const std::vector<DescribedFeature>& pool, int k) {
  if (pool.empty()) fail(ErrorCode::InvalidConfig, "knn_search: empty pool");
  std::vector<DescribedFeature> q(1);
  q[0].descriptor = query;
  auto rows = batch_knn(q, pool, k);
  std::vector<int> idx;
  idx.reserve(rows[0].size());
  for (const auto& n : rows[0]) idx.push_back(n.index);
  return idx;
}

std::vector<TentativeCorrespondence> match_fginn(const std::vector<DescribedFeature>& feats1,
                                                 const std::vector<DescribedFeature>& feats2,
                                                 const MatchingConfig& cfg) {
  return run_match(feats1, feats2, cfg, MatchStrategy::FGINN);
}

std::vector<TentativeCorrespondence> match_snn(const std::vector<DescribedFeature>& feats1,
                                               const std::vector<DescribedFeature>& feats2,
                                               const MatchingConfig& cfg) {
  return run_match(feats1, feats2, cfg, MatchStrategy::SNN);
}

std::vector<TentativeCorrespondence> match(const std::vector<DescribedFeature>& feats1,
                                           const std::vector<DescribedFeature>& feats2,
                                           const MatchingConfig& cfg) {
  return run_match(feats1, feats2, cfg, cfg.strategy);
}

std::vector<TentativeCorrespondence> filter_duplicates(const std::vector<TentativeCorrespondence>& tcs,
                                                       double radius) {
  std::vector<TentativeCorrespondence> out;
  if (tcs.empty()) return out;

  std::vector<std::size_t> order(tcs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (tcs[a].distance_ratio != tcs[b].distance_ratio) return tcs[a].distance_ratio < tcs[b].distance_ratio;
    return a < b;
  });

  // Coarse grid over image-1 endpoints keeps the scan near-linear.
  double cell = std::max(radius, 1e-6);
  auto key = [cell](const Vec2& p) {
    auto gx = static_cast<long long>(std::floor(p.x() / cell));
    auto gy = static_cast<long long>(std::floor(p.y() / cell));
    return (gx << 21) ^ gy;
  };
  std::unordered_map<long long, std::vector<std::size_t>> grid;  // -> indices into `kept`
  std::vector<TentativeCorrespondence> kept;
  std::vector<std::size_t> survivor_src;
  double r2 = radius * radius;

  for (std::size_t src : order) {
    const auto& tc = tcs[src];
    long long base_x = static_cast<long long>(std::floor(tc.feat1.frame.center.x() / cell));
    long long base_y = static_cast<long long>(std::floor(tc.feat1.frame.center.y() / cell));
    std::size_t owner = kept.size();
    for (long long gy = base_y - 1; gy <= base_y + 1 && owner == kept.size(); ++gy)
      for (long long gx = base_x - 1; gx <= base_x + 1 && owner == kept.size(); ++gx) {
        auto it = grid.find((gx << 21) ^ gy);
        if (it == grid.end()) continue;
        for (std::size_t ki : it->second) {
          if ((kept[ki].feat1.frame.center - tc.feat1.frame.center).squaredNorm() <= r2 &&
              (kept[ki].feat2.frame.center - tc.feat2.frame.center).squaredNorm() <= r2) {
            owner = ki;
            break;
          }
        }
      }
    if (owner < kept.size()) {
      kept[owner].prune_count += 1;
    } else {
      kept.push_back(tc);
      survivor_src.push_back(src);
      grid[key(tc.feat1.frame.center)].push_back(kept.size() - 1);
    }
  }

  // Restore the input order of the survivors.
  std::vector<std::size_t> perm(kept.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return survivor_src[a] < survivor_src[b]; });
  out.reserve(kept.size());
  for (std::size_t i : perm) out.push_back(std::move(kept[i]));
  return out;
}

}  // namespace mods

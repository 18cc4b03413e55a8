#pragma once

#include "lagflow/types.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

namespace lagflow {

/// Uniform grid over R^{2n} bucketing point indices by cell.
class SpatialHash {
 public:
  SpatialHash() = default;

  SpatialHash(const std::vector<Vec>& points, double cell) : cell_(cell) {
    if (!(cell > 0.0)) throw Error(ErrorCode::ConfigError, "hash cell size must be positive");
    dim_ = points.empty() ? 0 : static_cast<int>(points.front().size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      buckets_[key_of(points[i])].push_back(static_cast<int>(i));
    }
  }

  double cell() const { return cell_; }

  /// Calls f(index) for every stored point in cells overlapping the ball
  /// B(x, radius). Callers filter by exact distance.
  template <class F>
  void for_each_candidate(const Vec& x, double radius, F&& f) const {
    if (buckets_.empty()) return;
    const int reach = static_cast<int>(std::ceil(radius / cell_));
    Key base = key_of(x);
    Key probe = base;
    visit(0, reach, base, probe, f);
  }

 private:
  using Key = std::array<std::int64_t, kMaxAmbient>;

  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      std::uint64_t h = 1469598103934665603ull;
      for (std::int64_t c : k) {
        h ^= static_cast<std::uint64_t>(c) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      }
      return static_cast<std::size_t>(h);
    }
  };

  Key key_of(const Vec& x) const {
    Key k{};
    for (int d = 0; d < static_cast<int>(x.size()); ++d) {
      k[d] = static_cast<std::int64_t>(std::floor(x[d] / cell_));
    }
    return k;
  }

  template <class F>
  void visit(int d, int reach, const Key& base, Key& probe, F& f) const {
    if (d == dim_) {
      auto it = buckets_.find(probe);
      if (it == buckets_.end()) return;
      for (int idx : it->second) f(idx);
      return;
    }
    for (int o = -reach; o <= reach; ++o) {
      probe[d] = base[d] + o;
      visit(d + 1, reach, base, probe, f);
    }
    probe[d] = base[d];
  }

  double cell_ = 1.0;
  int dim_ = 0;
  std::unordered_map<Key, std::vector<int>, KeyHash> buckets_;
};

}  // namespace lagflow

#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "tetipc/common.hpp"

namespace tetipc {

template <class T>
struct Aabb {
  Vec3<T> lo = Vec3<T>::Constant(std::numeric_limits<T>::max());
  Vec3<T> hi = Vec3<T>::Constant(std::numeric_limits<T>::lowest());

  void extend(const Vec3<T>& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  Aabb inflated(T r) const { return {lo.array() - r, hi.array() + r}; }
  bool overlaps(const Aabb& o) const {
    return (lo.array() <= o.hi.array()).all() && (o.lo.array() <= hi.array()).all();
  }
};

// Uniform-grid hash over AABBs. Each box is registered in every cell it
// touches; queries return the ids of stored boxes that actually overlap the
// probe box, sorted and deduplicated so downstream iteration order is
// reproducible.
template <class T>
class SpatialHash {
 public:
  void build(std::vector<Aabb<T>> boxes, T cell_size) {
    boxes_ = std::move(boxes);
    cell_ = cell_size;
    table_.clear();
    table_.reserve(boxes_.size() * 2);
    for (index_t i = 0; i < static_cast<index_t>(boxes_.size()); ++i) {
      visit_cells(boxes_[i], [&](std::uint64_t key) { table_[key].push_back(i); });
    }
  }

  void query(const Aabb<T>& box, std::vector<index_t>& out) const {
    out.clear();
    visit_cells(box, [&](std::uint64_t key) {
      auto it = table_.find(key);
      if (it == table_.end()) return;
      for (index_t id : it->second)
        if (boxes_[id].overlaps(box)) out.push_back(id);
    });
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }

  T cell_size() const { return cell_; }

 private:
  template <class F>
  void visit_cells(const Aabb<T>& box, F&& fn) const {
    std::int64_t lo[3], hi[3];
    for (int k = 0; k < 3; ++k) {
      lo[k] = static_cast<std::int64_t>(std::floor(box.lo[k] / cell_));
      hi[k] = static_cast<std::int64_t>(std::floor(box.hi[k] / cell_));
    }
    for (std::int64_t i = lo[0]; i <= hi[0]; ++i)
      for (std::int64_t j = lo[1]; j <= hi[1]; ++j)
        for (std::int64_t k = lo[2]; k <= hi[2]; ++k) fn(cell_key(i, j, k));
  }

  static std::uint64_t cell_key(std::int64_t i, std::int64_t j, std::int64_t k) {
    return (static_cast<std::uint64_t>(i) * 73856093ull) ^
           (static_cast<std::uint64_t>(j) * 19349663ull) ^
           (static_cast<std::uint64_t>(k) * 83492791ull);
  }

  T cell_ = T(1);
  std::vector<Aabb<T>> boxes_;
  std::unordered_map<std::uint64_t, std::vector<index_t>> table_;
};

}  // namespace tetipc

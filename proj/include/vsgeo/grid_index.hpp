#ifndef VSGEO_GRID_INDEX_HPP
#define VSGEO_GRID_INDEX_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "vsgeo/dataset.hpp"
#include "vsgeo/errors.hpp"

namespace vsgeo {

// Square-window membership list around one observation.
struct Neighborhood {
  std::size_t center_index = 0;
  std::vector<std::size_t> member_indices;
  std::size_t count() const { return member_indices.size(); }
};

// Uniform bucket grid over the point set.  Queries are half-open boxes
// (s - delta, s + delta], so a rebuild with cell_size = 2*delta makes every
// query touch at most four cells.
class GridIndex {
 public:
  GridIndex(std::span<const Location> locations, double cell_size)
      : points_(locations.begin(), locations.end()), cell_(cell_size) {
    if (!(cell_size > 0.0)) throw ParameterError("grid index: cell_size must be > 0");
    if (points_.empty()) throw ParameterError("grid index: empty location list");
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (!location_finite(points_[i])) throw ParameterError("grid index: non-finite location");
      buckets_[key(cell_x(points_[i].x), cell_y(points_[i].y))].push_back(i);
    }
  }

  std::size_t size() const { return points_.size(); }
  std::size_t bucket_count() const { return buckets_.size(); }
  const Location& point(std::size_t i) const { return points_[i]; }

  // All j with s_j in (center - delta, center + delta] component-wise.
  // Results are sorted by index, independent of insertion order.
  Neighborhood query_square(const Location& center, double delta,
                            std::size_t center_index = 0) const {
    if (!(delta > 0.0)) throw ParameterError("grid index: delta must be > 0");
    Neighborhood nb;
    nb.center_index = center_index;
    const double lox = center.x - delta, hix = center.x + delta;
    const double loy = center.y - delta, hiy = center.y + delta;
    // Lower-open edge: a point exactly at center - delta is excluded, so the
    // first candidate cell is the one containing values just above lox.
    const std::int64_t cx0 = cell_x(std::nextafter(lox, hix));
    const std::int64_t cx1 = cell_x(hix);
    const std::int64_t cy0 = cell_y(std::nextafter(loy, hiy));
    const std::int64_t cy1 = cell_y(hiy);
    for (std::int64_t cx = cx0; cx <= cx1; ++cx)
      for (std::int64_t cy = cy0; cy <= cy1; ++cy) {
        auto it = buckets_.find(key(cx, cy));
        if (it == buckets_.end()) continue;
        for (std::size_t j : it->second) {
          const Location& s = points_[j];
          if (s.x > lox && s.x <= hix && s.y > loy && s.y <= hiy) nb.member_indices.push_back(j);
        }
      }
    std::sort(nb.member_indices.begin(), nb.member_indices.end());
    return nb;
  }

 private:
  std::int64_t cell_x(double x) const { return static_cast<std::int64_t>(std::floor(x / cell_)); }
  std::int64_t cell_y(double y) const { return static_cast<std::int64_t>(std::floor(y / cell_)); }
  static std::uint64_t key(std::int64_t cx, std::int64_t cy) {
    return (static_cast<std::uint64_t>(cx) << 32) ^ (static_cast<std::uint64_t>(cy) & 0xffffffffu);
  }

  std::vector<Location> points_;
  double cell_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets_;
};

inline GridIndex build_index(std::span<const Location> locations, double cell_size) {
  return GridIndex(locations, cell_size);
}

}  // namespace vsgeo

#endif

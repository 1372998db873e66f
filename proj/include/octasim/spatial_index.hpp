#pragma once

#include "octasim/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace octasim {

/// Exact radius and nearest-neighbour queries over a dynamic set of 3D points.
///
/// Points are bucketed in a sparse uniform grid (hash of integer cell
/// coordinates). Queries visit every cell overlapping the query ball, or every
/// occupied cell when that is fewer, and test true Euclidean distance, so
/// results always equal a linear scan.
class PointIndex {
 public:
  using Id = std::uint32_t;

  struct Hit {
    Id id;
    double distance;
    friend bool operator==(const Hit&, const Hit&) = default;
  };

  explicit PointIndex(double cell_size = 0.01) : cell_size_(cell_size) {
    if (!(cell_size > 0.0)) throw std::invalid_argument("PointIndex: cell size must be positive");
  }

  static PointIndex build(std::span<const std::pair<Id, Vec3>> points, double cell_size = 0.01) {
    PointIndex index(cell_size);
    for (const auto& [id, p] : points) index.insert(id, p);
    return index;
  }

  void insert(Id id, const Vec3& position) {
    if (locators_.contains(id)) {
      throw std::logic_error("PointIndex: duplicate id " + std::to_string(id));
    }
    const auto key = key_of(position);
    auto& cell = cells_[key];
    locators_.emplace(id, Locator{key, static_cast<std::uint32_t>(cell.size())});
    cell.push_back(Entry{id, position});
  }

  void remove(Id id) {
    const auto it = locators_.find(id);
    if (it == locators_.end()) {
      throw std::logic_error("PointIndex: remove of missing id " + std::to_string(id));
    }
    const Locator loc = it->second;
    locators_.erase(it);
    auto cell_it = cells_.find(loc.cell);
    auto& cell = cell_it->second;
    if (loc.slot + 1 != cell.size()) {
      cell[loc.slot] = cell.back();
      locators_[cell[loc.slot].id].slot = loc.slot;
    }
    cell.pop_back();
    if (cell.empty()) cells_.erase(cell_it);
  }

  [[nodiscard]] bool contains(Id id) const { return locators_.contains(id); }
  [[nodiscard]] std::size_t size() const { return locators_.size(); }
  [[nodiscard]] bool empty() const { return locators_.empty(); }
  [[nodiscard]] double cell_size() const { return cell_size_; }

  [[nodiscard]] const Vec3& position(Id id) const {
    const auto it = locators_.find(id);
    if (it == locators_.end()) throw std::out_of_range("PointIndex: unknown id " + std::to_string(id));
    return cells_.at(it->second.cell)[it->second.slot].position;
  }

  /// All (id, position) entries, sorted by id.
  [[nodiscard]] std::vector<std::pair<Id, Vec3>> entries() const {
    std::vector<std::pair<Id, Vec3>> out;
    out.reserve(size());
    for (const auto& [key, cell] : cells_) {
      for (const auto& e : cell) out.emplace_back(e.id, e.position);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
  }

  /// Calls visit(id, position, distance) for every entry with distance <= radius.
  /// Visit order is unspecified.
  template <class Visitor>
  void for_each_within(const Vec3& query, double radius, Visitor&& visit) const {
    if (cells_.empty() || !(radius >= 0.0)) return;
    const auto lo = cell_coords(query.array() - radius);
    const auto hi = cell_coords(query.array() + radius);
    const double box_cells = double(hi[0] - lo[0] + 1) * double(hi[1] - lo[1] + 1) * double(hi[2] - lo[2] + 1);
    const auto test_cell = [&](const std::vector<Entry>& cell) {
      for (const auto& e : cell) {
        const double dist = (e.position - query).norm();
        if (dist <= radius) visit(e.id, e.position, dist);
      }
    };
    if (box_cells > static_cast<double>(cells_.size())) {
      for (const auto& [key, cell] : cells_) test_cell(cell);
      return;
    }
    for (std::int64_t i = lo[0]; i <= hi[0]; ++i) {
      for (std::int64_t j = lo[1]; j <= hi[1]; ++j) {
        for (std::int64_t k = lo[2]; k <= hi[2]; ++k) {
          const auto it = cells_.find(pack(i, j, k));
          if (it != cells_.end()) test_cell(it->second);
        }
      }
    }
  }

  /// Closest entry within radius; ties go to the smallest id.
  [[nodiscard]] std::optional<Hit> nearest_within(const Vec3& query, double radius) const {
    std::optional<Hit> best;
    for_each_within(query, radius, [&](Id id, const Vec3&, double dist) {
      if (!best || dist < best->distance || (dist == best->distance && id < best->id)) best = Hit{id, dist};
    });
    return best;
  }

  /// Every entry within radius, sorted by (distance, id).
  [[nodiscard]] std::vector<Hit> range_query(const Vec3& query, double radius) const {
    std::vector<Hit> hits;
    for_each_within(query, radius, [&](Id id, const Vec3&, double dist) { hits.push_back(Hit{id, dist}); });
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
      return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
    });
    return hits;
  }

  /// True if any entry lies strictly closer than radius.
  [[nodiscard]] bool any_closer_than(const Vec3& query, double radius) const {
    bool found = false;
    for_each_within(query, radius, [&](Id, const Vec3&, double dist) { found = found || dist < radius; });
    return found;
  }

 private:
  struct Entry {
    Id id;
    Vec3 position;
  };
  struct Locator {
    std::uint64_t cell;
    std::uint32_t slot;
  };

  static constexpr std::int64_t kBias = std::int64_t{1} << 20;
  static constexpr std::uint64_t kMask = (std::uint64_t{1} << 21) - 1;

  [[nodiscard]] std::array<std::int64_t, 3> cell_coords(const Eigen::Array3d& p) const {
    std::array<std::int64_t, 3> c{};
    for (int a = 0; a < 3; ++a) {
      const double f = std::floor(p[a] / cell_size_);
      c[a] = static_cast<std::int64_t>(std::clamp(f, double(-kBias), double(kBias - 1)));
    }
    return c;
  }

  static std::uint64_t pack(std::int64_t i, std::int64_t j, std::int64_t k) {
    return (std::uint64_t(i + kBias) & kMask) << 42 | (std::uint64_t(j + kBias) & kMask) << 21 |
           (std::uint64_t(k + kBias) & kMask);
  }

  [[nodiscard]] std::uint64_t key_of(const Vec3& p) const {
    const auto c = cell_coords(p.array());
    return pack(c[0], c[1], c[2]);
  }

  double cell_size_;
  std::unordered_map<std::uint64_t, std::vector<Entry>> cells_;
  std::unordered_map<Id, Locator> locators_;
};

}  // namespace octasim

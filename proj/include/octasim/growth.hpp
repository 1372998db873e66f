#pragma once

// Space-colonization growth of arterial and venous trees inside a thin slab.
//
// Positions live in simulation units: the slab is [0,1] x [0,1] x [0, depth]
// and one unit equals `SimulationSettings::fov_mm` millimetres. Phase
// parameters are given in millimetres and converted on use.

#include "octasim/geometry.hpp"
#include "octasim/phase_config.hpp"
#include "octasim/random.hpp"
#include "octasim/spatial_index.hpp"
#include "octasim/vessel_graph.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace octasim {

struct SimulationSettings {
  double fov_mm = 3.0;
  double slab_depth = 1.0 / 76.0;
  int root_count = 16;
  double faz_radius_mean_mm = 0.45;
  double faz_radius_std_mm = 0.021;
  /// Multiplies the raw epsilon_n value before it is used as a distance in
  /// simulation units. The formula's ul/ml factor is 1e-3.
  double eps_n_calibration = 1e-3;
  double min_segment_length_mm = 0.04;
  /// Scale bifurcation/sprouting probability by (dist / r_rot)^2 near the FAZ.
  bool faz_suppression = true;
  double index_cell_size = 0.01;

  friend bool operator==(const SimulationSettings&, const SimulationSettings&) = default;
};

// ---------------------------------------------------------------------------
// Pure geometric rules

/// Indices of attraction points inside a leaf's perception cone: within
/// `delta` of the node and at most gamma/2 off the parent->node direction.
inline std::vector<std::size_t> filter_cone_leaf(const Vec3& parent, const Vec3& node, std::span<const Vec3> points,
                                                 double delta, double gamma_deg) {
  const Vec3 forward = node - parent;
  const double half = deg_to_rad(gamma_deg) / 2.0;
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec3 v = points[i] - node;
    const double dist = v.norm();
    if (dist == 0.0 || dist > delta) continue;
    if (angle_between(forward, v) <= half) kept.push_back(i);
  }
  return kept;
}

/// Murray-optimal angles for sprouting a new branch off an inter-node:
/// new_branch is the new branch's angle from the parent axis, existing the
/// existing child's, both for the parent radius after the hypothetical update.
struct SproutAngles {
  double new_branch;  // radians
  double existing;    // radians
};

inline std::optional<SproutAngles> sprout_angles(double r_existing, double r_new, double kappa) {
  const double r_parent = murray_parent_radius(r_existing, r_new, kappa);
  const auto phi1 = murray_branch_angle(r_parent, r_new, r_existing);
  const auto phi2 = murray_branch_angle(r_parent, r_existing, r_new);
  if (!phi1 || !phi2) return std::nullopt;
  return SproutAngles{*phi1, *phi2};
}

/// Indices of attraction points inside an inter-node's perception frustum:
///   phi1 + phi2 - gamma/2 <= angle(node->child, node->att) <= phi1 + phi2 + gamma/2
///   angle(parent->node, node->att) <= gamma/2 + phi2
inline std::vector<std::size_t> filter_frustum_internode(const Vec3& parent, const Vec3& node, const Vec3& child,
                                                         std::span<const Vec3> points, double delta, double gamma_deg,
                                                         const SproutAngles& angles) {
  const Vec3 forward = node - parent;
  const Vec3 child_axis = child - node;
  const double half = deg_to_rad(gamma_deg) / 2.0;
  const double centre = angles.new_branch + angles.existing;
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec3 v = points[i] - node;
    const double dist = v.norm();
    if (dist == 0.0 || dist > delta) continue;
    const double to_child = angle_between(child_axis, v);
    if (to_child < centre - half || to_child > centre + half) continue;
    if (angle_between(forward, v) <= half + angles.existing) kept.push_back(i);
  }
  return kept;
}

/// Root-mean-square angle (degrees) between each unit attraction vector and
/// the mean direction.
inline double attraction_spread_deg(std::span<const Vec3> unit_dirs, const Vec3& mean_dir) {
  if (unit_dirs.empty()) return 0.0;
  double sum_sq = 0.0;
  for (const auto& u : unit_dirs) {
    const double a = rad_to_deg(angle_between(u, mean_dir));
    sum_sq += a * a;
  }
  return std::sqrt(sum_sq / static_cast<double>(unit_dirs.size()));
}

/// g = norm(omega * v_opt + (1 - omega) * sum(unit_dirs)); empty if degenerate.
inline std::optional<Vec3> elongation_direction(const Vec3& v_opt, std::span<const Vec3> unit_dirs, double omega) {
  Vec3 sum = Vec3::Zero();
  for (const auto& u : unit_dirs) sum += u;
  const Vec3 g = omega * v_opt + (1.0 - omega) * sum;
  const double n = g.norm();
  if (!(n > 1e-12)) return std::nullopt;
  return g / n;
}

/// Member of the cone {v : angle(v, axis) = half_angle} closest to `a`. When
/// `a` is parallel to the axis the azimuth is taken from the world z axis
/// (or x if the axis is vertical) projected into the cone's base plane.
inline Vec3 closest_cone_direction(const Vec3& axis, double half_angle, const Vec3& a) {
  const Vec3 u = axis.normalized();
  Vec3 perp = a - a.dot(u) * u;
  if (perp.norm() < 1e-12) {
    perp = Vec3::UnitZ() - u.z() * u;
    if (perp.norm() < 1e-12) perp = Vec3::UnitX() - u.x() * u;
  }
  return std::cos(half_angle) * u + std::sin(half_angle) * perp.normalized();
}

/// Lateral (x, y) FAZ steering of an elongation direction. `node` and
/// `faz_center` in simulation units, radii in millimetres.
///   c = center - node, w = sqrt(r_rot - |c|), v_out = -c/|c|,
///   v_rot = c/|c| rotated 90 degrees toward `a`,
///   result = norm((1 - w) g + 2w/3 v_rot + w/3 v_out).
/// Identity outside the rotation region.
inline Vec3 faz_adjust(const Vec3& node, const Vec3& g, const Vec3& a, const Vec3& faz_center, double r_rot_mm,
                       double mm_per_unit) {
  Vec3 c(faz_center.x() - node.x(), faz_center.y() - node.y(), 0.0);
  const double dist_mm = c.norm() * mm_per_unit;
  if (!(dist_mm < r_rot_mm) || dist_mm == 0.0) return g;
  const double w = std::sqrt(r_rot_mm - dist_mm);
  const Vec3 c_hat = c.normalized();
  const Vec3 v_out = -c_hat;
  Vec3 v_rot(-c_hat.y(), c_hat.x(), 0.0);
  if (v_rot.dot(a) < 0.0) v_rot = -v_rot;
  const Vec3 mixed = (1.0 - w) * g + (2.0 * w / 3.0) * v_rot + (w / 3.0) * v_out;
  const double n = mixed.norm();
  if (!(n > 1e-12)) return g;
  return mixed / n;
}

/// Normal of the plane that holds `node` and the total-least-squares line
/// through `points`. Falls back to the plane of `a` and `forward` when the
/// scatter has no principal axis or the line passes through the node.
inline Vec3 bifurcation_plane_normal(const Vec3& node, std::span<const Vec3> points, const Vec3& a,
                                     const Vec3& forward) {
  Vec3 normal = Vec3::Zero();
  if (points.size() >= 2) {
    Vec3 mean = Vec3::Zero();
    for (const auto& p : points) mean += p;
    mean /= static_cast<double>(points.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& p : points) cov += (p - mean) * (p - mean).transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    const auto& vals = solver.eigenvalues();
    if (vals[2] > 1e-18 && vals[2] > 1e-9 * (vals[0] + vals[1] + vals[2])) {
      const Vec3 line_dir = solver.eigenvectors().col(2);
      const Vec3 to_mean = mean - node;
      const Vec3 n = to_mean.cross(line_dir);
      if (n.norm() > 1e-9 * std::max(1e-300, to_mean.norm())) normal = n;
    }
  }
  if (normal.norm() < 1e-15) {
    normal = a.cross(forward);
    if (normal.norm() < 1e-12) normal = any_orthogonal(a);
  }
  normal.normalize();
  // Canonical sign so the child order does not depend on the eigen solver.
  if (normal.z() < 0 || (normal.z() == 0 && (normal.y() < 0 || (normal.y() == 0 && normal.x() < 0)))) {
    normal = -normal;
  }
  return normal;
}

/// Child directions at +-alpha (radians) from the mean attraction direction,
/// rotated within the plane with the given normal.
inline std::pair<Vec3, Vec3> bifurcation_directions(const Vec3& a, const Vec3& plane_normal, double alpha) {
  Vec3 in_plane = a - a.dot(plane_normal) * plane_normal;
  in_plane = in_plane.norm() > 1e-12 ? in_plane.normalized() : a.normalized();
  return {rotate_about(in_plane, plane_normal, alpha).normalized(),
          rotate_about(in_plane, plane_normal, -alpha).normalized()};
}

// ---------------------------------------------------------------------------
// Simulation state

/// Bookkeeping for every oxygen sink ever inserted. Sequence numbers order
/// insertions and conversions globally.
struct SinkRecord {
  static constexpr std::uint64_t kNever = std::numeric_limits<std::uint64_t>::max();
  Vec3 position = Vec3::Zero();
  int phase = 0;
  int inserted_at = 0;
  std::uint64_t inserted_seq = 0;
  std::uint64_t converted_seq = kNever;  // oxygen sink -> CO2 source
  std::uint64_t removed_seq = kNever;    // CO2 source satisfied
};

/// Distances of a phase at the current iteration, in simulation units.
struct ScaledPhase {
  double sigma;
  double segment_length;
  double sink_spacing;
  double satisfaction_range;
  double perception_distance;
  double eps_n_scale;  // multiply raw epsilon_n by this
};

struct Attraction {
  NodeId node;
  PointIndex::Id sink;
};

struct Attractions {
  std::vector<Attraction> arterial;  // oxygen sinks -> arterial nodes
  std::vector<Attraction> venous;    // CO2 sources -> venous nodes
};

struct IterationStats {
  int iteration = 0;
  std::size_t sinks_placed = 0;
  std::size_t elongations = 0;
  std::size_t bifurcations = 0;
  std::size_t sprouts = 0;
  std::size_t sinks_converted = 0;
  std::size_t sources_removed = 0;
};

class GrowthState {
 public:
  GrowthState(SimulationSettings settings, std::uint64_t seed)
      : settings_(settings),
        seed_(seed),
        forest_(settings.fov_mm),
        arterial_(settings.index_cell_size),
        venous_(settings.index_cell_size),
        growing_arterial_(settings.index_cell_size),
        growing_venous_(settings.index_cell_size),
        oxygen_(settings.index_cell_size),
        co2_(settings.index_cell_size),
        sink_rng_(seed, "sinks"),
        root_rng_(seed, "roots"),
        faz_rng_(seed, "faz"),
        suppression_rng_(seed, "faz-suppression") {
    r_faz_mm_ = std::max(0.0, faz_rng_.normal(settings_.faz_radius_mean_mm, settings_.faz_radius_std_mm));
    faz_center_ = Vec3(0.5, 0.5, settings_.slab_depth / 2.0);
  }

  [[nodiscard]] const SimulationSettings& settings() const { return settings_; }
  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] const VesselForest& forest() const { return forest_; }
  VesselForest& forest() { return forest_; }
  [[nodiscard]] int iteration() const { return t_; }
  [[nodiscard]] double sigma() const { return sigma_; }
  [[nodiscard]] const std::vector<double>& scale_history() const { return scale_history_; }
  [[nodiscard]] double faz_radius_mm() const { return r_faz_mm_; }
  [[nodiscard]] const Vec3& faz_center() const { return faz_center_; }
  [[nodiscard]] const PointIndex& oxygen_sinks() const { return oxygen_; }
  [[nodiscard]] const PointIndex& co2_sources() const { return co2_; }
  [[nodiscard]] const PointIndex& arterial_nodes() const { return arterial_; }
  [[nodiscard]] const PointIndex& venous_nodes() const { return venous_; }
  [[nodiscard]] const std::vector<SinkRecord>& sink_log() const { return sinks_; }
  [[nodiscard]] const std::vector<IterationStats>& stats() const { return stats_; }
  [[nodiscard]] double mm_per_unit() const { return settings_.fov_mm; }

  /// Overrides the sampled FAZ radius (tests and fixed-FAZ configs).
  void set_faz_radius_mm(double r) { r_faz_mm_ = r; }

  [[nodiscard]] ScaledPhase scaled_phase(const PhaseConfig& phase) const {
    const double unit = settings_.fov_mm;
    const double s = scale_factor(t_, phase.scale_rate);
    return ScaledPhase{
        s,
        scaled_segment_length(phase.segment_length_mm, t_, phase.scale_rate, settings_.min_segment_length_mm) / unit,
        phase.sink_spacing_mm / s / unit,
        phase.satisfaction_range_mm / s / unit,
        phase.perception_distance_mm / s / unit,
        settings_.eps_n_calibration / s,
    };
  }

  /// Lateral distance (mm) from a point to the FAZ axis.
  [[nodiscard]] double faz_distance_mm(const Vec3& p) const {
    return lateral_distance(p, faz_center_) * settings_.fov_mm;
  }

  /// Places `root_count` stumps on the four lateral faces, alternating
  /// arterial/venous, each with one child one segment length inward.
  void place_roots(const PhaseConfig& phase) {
    const auto sp = scaled_phase(phase);
    for (int i = 0; i < settings_.root_count; ++i) {
      const int face = i * 4 / std::max(1, settings_.root_count);
      const double along = root_rng_.uniform();
      const double z = root_rng_.uniform(0.0, settings_.slab_depth);
      Vec3 pos;
      Vec3 inward;
      switch (face) {
        case 0: pos = {along, 0.0, z}; inward = Vec3::UnitY(); break;
        case 1: pos = {1.0, along, z}; inward = -Vec3::UnitX(); break;
        case 2: pos = {along, 1.0, z}; inward = -Vec3::UnitY(); break;
        default: pos = {0.0, along, z}; inward = Vec3::UnitX(); break;
      }
      const auto kind = (i % 2 == 0) ? VesselKind::arterial : VesselKind::venous;
      const NodeId root = forest_.add_root(pos, phase.terminal_radius_mm, kind);
      forest_.at(root).kappa = phase.bifurcation_exponent;
      const NodeId child = forest_.add_child(root, pos + sp.segment_length * inward, phase.terminal_radius_mm, 0);
      forest_.at(child).kappa = phase.bifurcation_exponent;
      node_index(kind).insert(root, forest_.at(root).position);
      node_index(kind).insert(child, forest_.at(child).position);
      growing_index(kind).insert(child, forest_.at(child).position);
    }
  }

  /// Advances the scale: t += 1, sigma = 1 + t * delta_sigma.
  void advance(const PhaseConfig& phase) {
    ++t_;
    sigma_ = scale_factor(t_, phase.scale_rate);
    scale_history_.push_back(sigma_);
  }

  /// Whether `p` passes all three sink placement rules at the current scale.
  [[nodiscard]] bool sink_position_valid(const Vec3& p, const ScaledPhase& sp) const {
    if (faz_distance_mm(p) < r_faz_mm_) return false;
    if (oxygen_.any_closer_than(p, sp.sink_spacing)) return false;
    const double reach = epsilon_n_peak * sp.eps_n_scale;
    for (const PointIndex* index : {&arterial_, &venous_}) {
      bool blocked = false;
      index->for_each_within(p, reach, [&](PointIndex::Id id, const Vec3&, double dist) {
        if (!blocked && dist < epsilon_n(forest_.nodes()[id].radius_mm) * sp.eps_n_scale) blocked = true;
      });
      if (blocked) return false;
    }
    return true;
  }

  /// Samples N uniform candidates in the slab; accepted ones become sinks.
  std::size_t place_oxygen_sinks(const PhaseConfig& phase) {
    const auto sp = scaled_phase(phase);
    std::size_t placed = 0;
    for (int i = 0; i < phase.sinks_per_iteration; ++i) {
      const double x = sink_rng_.uniform();
      const double y = sink_rng_.uniform();
      const double z = sink_rng_.uniform(0.0, settings_.slab_depth);
      const Vec3 p(x, y, z);
      if (!sink_position_valid(p, sp)) continue;
      add_sink(p);
      ++placed;
    }
    return placed;
  }

  /// Inserts an oxygen sink without validation. Returns its id.
  PointIndex::Id add_sink(const Vec3& p) {
    const auto id = static_cast<PointIndex::Id>(sinks_.size());
    SinkRecord rec;
    rec.position = p;
    rec.phase = phase_index_;
    rec.inserted_at = t_;
    rec.inserted_seq = seq_++;
    sinks_.push_back(rec);
    oxygen_.insert(id, p);
    alive_oxygen_.push_back(id);
    return id;
  }

  /// Each oxygen sink picks its closest arterial node within delta, each CO2
  /// source its closest venous node. Sorted by (node, sink).
  [[nodiscard]] Attractions assign_attractions(const PhaseConfig& phase) const {
    const auto sp = scaled_phase(phase);
    Attractions out;
    const auto assign = [&](const std::vector<PointIndex::Id>& sinks, const PointIndex& candidates,
                            std::vector<Attraction>& dst) {
      for (const auto s : sinks) {
        if (const auto hit = candidates.nearest_within(sinks_[s].position, sp.perception_distance)) {
          dst.push_back(Attraction{hit->id, s});
        }
      }
      std::sort(dst.begin(), dst.end(), [](const Attraction& a, const Attraction& b) {
        return a.node < b.node || (a.node == b.node && a.sink < b.sink);
      });
    };
    assign(alive_oxygen_, growing_arterial_, out.arterial);
    assign(alive_co2_, growing_venous_, out.venous);
    return out;
  }

  /// Grows every attracted node once (ascending node id). Returns the ids of
  /// all nodes created.
  std::vector<NodeId> proliferate(const PhaseConfig& phase, const Attractions& attractions,
                                  IterationStats* stats = nullptr) {
    std::vector<NodeId> created;
    for (const auto* group : {&attractions.arterial, &attractions.venous}) {
      std::size_t i = 0;
      std::vector<Vec3> points;
      while (i < group->size()) {
        const NodeId node = (*group)[i].node;
        points.clear();
        for (; i < group->size() && (*group)[i].node == node; ++i) points.push_back(sinks_[(*group)[i].sink].position);
        grow_node(phase, node, points, created, stats);
      }
    }
    for (const NodeId id : created) {
      const auto& n = forest_.at(id);
      node_index(n.kind).insert(id, n.position);
      growing_index(n.kind).insert(id, n.position);
      const auto& parent = forest_.at(*n.parent);
      if (parent.child_count == 2 && growing_index(n.kind).contains(parent.id)) growing_index(n.kind).remove(parent.id);
    }
    return created;
  }

  /// Removes CO2 sources within eps_k of new venous nodes, then converts
  /// oxygen sinks within eps_k of new arterial nodes into CO2 sources.
  void satisfy_sinks(const PhaseConfig& phase, std::span<const NodeId> new_nodes, IterationStats* stats = nullptr) {
    const auto sp = scaled_phase(phase);
    std::vector<PointIndex::Id> hit;
    for (const NodeId id : new_nodes) {
      const auto& n = forest_.at(id);
      if (n.kind != VesselKind::venous) continue;
      for (const auto& h : co2_.range_query(n.position, sp.satisfaction_range)) hit.push_back(h.id);
    }
    for (const auto s : unique_sorted(hit)) {
      co2_.remove(s);
      sinks_[s].removed_seq = seq_++;
      if (stats) ++stats->sources_removed;
    }
    hit.clear();
    for (const NodeId id : new_nodes) {
      const auto& n = forest_.at(id);
      if (n.kind != VesselKind::arterial) continue;
      for (const auto& h : oxygen_.range_query(n.position, sp.satisfaction_range)) hit.push_back(h.id);
    }
    for (const auto s : unique_sorted(hit)) {
      oxygen_.remove(s);
      co2_.insert(s, sinks_[s].position);
      sinks_[s].converted_seq = seq_++;
      if (stats) ++stats->sinks_converted;
    }
    refresh_alive_lists();
  }

  /// One full iteration: expand scale, place sinks, attract, grow, satisfy.
  IterationStats step(const PhaseConfig& phase) {
    IterationStats stats;
    advance(phase);
    stats.iteration = t_;
    stats.sinks_placed = place_oxygen_sinks(phase);
    const auto attractions = assign_attractions(phase);
    const auto created = proliferate(phase, attractions, &stats);
    satisfy_sinks(phase, created, &stats);
    stats_.push_back(stats);
    return stats;
  }

  /// Starts a phase: the scale counter restarts at t = 0, sigma = 1.
  void begin_phase(const PhaseConfig& phase) {
    phase.validate();
    t_ = 0;
    sigma_ = 1.0;
  }

  void end_phase() { ++phase_index_; }

  void run_phase(const PhaseConfig& phase) {
    begin_phase(phase);
    for (int i = 0; i < phase.iterations; ++i) step(phase);
    end_phase();
  }

  /// Index of the phase currently running (counts completed run_phase calls).
  [[nodiscard]] int phase_index() const { return phase_index_; }

 private:
  PointIndex& node_index(VesselKind kind) { return kind == VesselKind::arterial ? arterial_ : venous_; }
  PointIndex& growing_index(VesselKind kind) {
    return kind == VesselKind::arterial ? growing_arterial_ : growing_venous_;
  }

  static std::vector<PointIndex::Id> unique_sorted(std::vector<PointIndex::Id>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  }

  void refresh_alive_lists() {
    std::erase_if(alive_oxygen_, [&](PointIndex::Id s) { return sinks_[s].converted_seq != SinkRecord::kNever; });
    alive_co2_.clear();
    for (const auto& [id, pos] : co2_entries_sorted()) alive_co2_.push_back(id);
  }

  std::vector<std::pair<PointIndex::Id, Vec3>> co2_entries_sorted() const { return co2_.entries(); }

  /// Draw deciding whether branching may happen at lateral FAZ distance dist_mm.
  bool branching_allowed(const PhaseConfig& phase, double dist_mm) {
    if (!settings_.faz_suppression || dist_mm >= phase.rotation_radius_mm) return true;
    const double ratio = dist_mm / phase.rotation_radius_mm;
    return suppression_rng_.uniform() < ratio * ratio;
  }

  void grow_node(const PhaseConfig& phase, NodeId id, std::span<const Vec3> attractors, std::vector<NodeId>& created,
                 IterationStats* stats) {
    const VesselNode node = forest_.at(id);
    if (node.is_root() || node.child_count == 2) return;
    const auto sp = scaled_phase(phase);
    const Vec3& parent_pos = forest_.at(*node.parent).position;
    const Vec3 forward = (node.position - parent_pos).normalized();
    const double r = phase.terminal_radius_mm;
    const double kappa = phase.bifurcation_exponent;

    if (node.child_count == 0) {
      const auto kept = filter_cone_leaf(parent_pos, node.position, attractors, sp.perception_distance,
                                         phase.perception_angle_deg);
      if (kept.empty()) return;
      std::vector<Vec3> dirs;
      std::vector<Vec3> pts;
      Vec3 sum = Vec3::Zero();
      for (const auto k : kept) {
        dirs.push_back((attractors[k] - node.position).normalized());
        pts.push_back(attractors[k]);
        sum += dirs.back();
      }
      if (!(sum.norm() > 1e-12)) return;
      const Vec3 a = sum.normalized();
      const double faz_dist = faz_distance_mm(node.position);
      bool bifurcate = attraction_spread_deg(dirs, a) > phase.bifurcation_spread_deg;
      if (bifurcate) bifurcate = branching_allowed(phase, faz_dist);
      if (bifurcate) {
        const auto angles = try_bifurcation_angles(murray_parent_radius(r, r, kappa), r);
        if (!angles) return;
        const Vec3 normal = bifurcation_plane_normal(node.position, pts, a, forward);
        const auto [d1, d2] = bifurcation_directions(a, normal, deg_to_rad(angles->alpha_deg));
        created.push_back(forest_.add_child(id, node.position + sp.segment_length * d1, r, t_));
        created.push_back(forest_.add_child(id, node.position + sp.segment_length * d2, r, t_));
        forest_.at(created.back()).kappa = kappa;
        forest_.at(created[created.size() - 2]).kappa = kappa;
        update_radii_upstream(forest_, id, kappa);
        if (stats) ++stats->bifurcations;
        return;
      }
      auto g = elongation_direction(forward, dirs, phase.optimal_direction_weight);
      if (!g) return;
      if (faz_dist < phase.rotation_radius_mm) {
        *g = faz_adjust(node.position, *g, a, faz_center_, phase.rotation_radius_mm, settings_.fov_mm);
      }
      const NodeId c = forest_.add_child(id, node.position + sp.segment_length * *g, r, t_);
      forest_.at(c).kappa = kappa;
      created.push_back(c);
      if (stats) ++stats->elongations;
      return;
    }

    // Inter-node sprouting.
    const auto& child = forest_.at(node.children[0]);
    const auto angles = sprout_angles(child.radius_mm, r, kappa);
    if (!angles) return;
    const auto kept = filter_frustum_internode(parent_pos, node.position, child.position, attractors,
                                               sp.perception_distance, phase.perception_angle_deg, *angles);
    if (kept.empty()) return;
    std::vector<Vec3> dirs;
    Vec3 sum = Vec3::Zero();
    for (const auto k : kept) {
      dirs.push_back((attractors[k] - node.position).normalized());
      sum += dirs.back();
    }
    if (!(sum.norm() > 1e-12)) return;
    if (!branching_allowed(phase, faz_distance_mm(node.position))) return;
    const Vec3 a = sum.normalized();
    const Vec3 v_opt = closest_cone_direction(child.position - node.position, angles->new_branch + angles->existing, a);
    const auto g = elongation_direction(v_opt, dirs, phase.optimal_direction_weight);
    if (!g) return;
    const NodeId c = forest_.add_child(id, node.position + sp.segment_length * *g, r, t_);
    forest_.at(c).kappa = kappa;
    created.push_back(c);
    update_radii_upstream(forest_, id, kappa);
    if (stats) ++stats->sprouts;
  }

  SimulationSettings settings_;
  std::uint64_t seed_;
  VesselForest forest_;
  PointIndex arterial_;
  PointIndex venous_;
  PointIndex growing_arterial_;
  PointIndex growing_venous_;
  PointIndex oxygen_;
  PointIndex co2_;
  std::vector<SinkRecord> sinks_;
  std::vector<PointIndex::Id> alive_oxygen_;
  std::vector<PointIndex::Id> alive_co2_;
  std::vector<double> scale_history_;
  std::vector<IterationStats> stats_;
  Rng sink_rng_;
  Rng root_rng_;
  Rng faz_rng_;
  Rng suppression_rng_;
  double r_faz_mm_ = 0.0;
  Vec3 faz_center_;
  int t_ = 0;
  double sigma_ = 1.0;
  int phase_index_ = 0;
  std::uint64_t seq_ = 0;
};

/// Runs the given phases in order from 16 fresh root stumps. The first phase
/// sets the stump geometry. Fully determined by (settings, phases, seed).
inline GrowthState simulate_phases(std::span<const PhaseConfig> phases, std::uint64_t seed,
                                   const SimulationSettings& settings = {}) {
  GrowthState state(settings, seed);
  if (phases.empty()) return state;
  for (const auto& p : phases) p.validate();
  state.place_roots(phases.front());
  for (const auto& p : phases) state.run_phase(p);
  return state;
}

inline GrowthState simulate(const PhaseConfig& svc, const PhaseConfig& dvc, std::uint64_t seed,
                            const SimulationSettings& settings = {}) {
  const PhaseConfig phases[] = {svc, dvc};
  return simulate_phases(phases, seed, settings);
}

}  // namespace octasim

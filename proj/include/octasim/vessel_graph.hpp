#pragma once

#include "octasim/geometry.hpp"
#include "octasim/random.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace octasim {

using NodeId = std::uint32_t;

enum class VesselKind : std::uint8_t { arterial, venous };

enum class NodeClass : std::uint8_t { leaf, inter, bounded };

inline std::string_view to_string(VesselKind kind) {
  return kind == VesselKind::arterial ? "arterial" : "venous";
}

inline VesselKind parse_vessel_kind(std::string_view s) {
  if (s == "arterial") return VesselKind::arterial;
  if (s == "venous") return VesselKind::venous;
  throw std::invalid_argument("unknown vessel kind '" + std::string(s) + "'");
}

inline std::string_view to_string(NodeClass c) {
  switch (c) {
    case NodeClass::leaf: return "leaf";
    case NodeClass::inter: return "inter";
    case NodeClass::bounded: return "bounded";
  }
  return "?";
}

/// A vessel node. `radius_mm` belongs to the segment from the parent to this
/// node (for roots: the stump radius, kept equal to the child's).
struct VesselNode {
  NodeId id = 0;
  Vec3 position = Vec3::Zero();
  double radius_mm = 0.0;
  std::optional<NodeId> parent;
  std::array<NodeId, 2> children{};
  std::uint8_t child_count = 0;
  std::uint32_t tree = 0;
  VesselKind kind = VesselKind::arterial;
  /// Bifurcation exponent this node's radius obeys once it has two children.
  double kappa = 0.0;
  /// Growth iteration that created the node (0 for roots and stumps).
  int created_at = 0;

  [[nodiscard]] NodeClass node_class() const {
    return child_count == 0 ? NodeClass::leaf : child_count == 1 ? NodeClass::inter : NodeClass::bounded;
  }
  [[nodiscard]] bool is_root() const { return !parent.has_value(); }
};

struct TreeInfo {
  NodeId root = 0;
  VesselKind kind = VesselKind::arterial;
};

class DegenerateGeometry : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Forest of rooted binary trees. Node ids are dense indices in creation order.
class VesselForest {
 public:
  VesselForest() = default;
  explicit VesselForest(double mm_per_unit) : mm_per_unit_(mm_per_unit) {}

  NodeId add_root(const Vec3& position, double radius_mm, VesselKind kind) {
    const auto tree = static_cast<std::uint32_t>(trees_.size());
    const auto id = next_id();
    VesselNode n;
    n.id = id;
    n.position = position;
    n.radius_mm = radius_mm;
    n.tree = tree;
    n.kind = kind;
    nodes_.push_back(n);
    trees_.push_back(TreeInfo{id, kind});
    return id;
  }

  NodeId add_child(NodeId parent, const Vec3& position, double radius_mm, int created_at = 0) {
    auto& p = at(parent);
    if (p.child_count >= 2) {
      throw std::logic_error("node " + std::to_string(parent) + " already has two children");
    }
    const auto id = next_id();
    p.children[p.child_count++] = id;
    VesselNode n;
    n.id = id;
    n.position = position;
    n.radius_mm = radius_mm;
    n.parent = parent;
    n.tree = p.tree;
    n.kind = p.kind;
    n.created_at = created_at;
    nodes_.push_back(n);
    return id;
  }

  [[nodiscard]] const VesselNode& at(NodeId id) const {
    if (id >= nodes_.size()) throw std::out_of_range("unknown node id " + std::to_string(id));
    return nodes_[id];
  }
  VesselNode& at(NodeId id) {
    if (id >= nodes_.size()) throw std::out_of_range("unknown node id " + std::to_string(id));
    return nodes_[id];
  }

  [[nodiscard]] const std::vector<VesselNode>& nodes() const { return nodes_; }
  [[nodiscard]] const std::vector<TreeInfo>& trees() const { return trees_; }
  [[nodiscard]] std::size_t size() const { return nodes_.size(); }
  [[nodiscard]] bool empty() const { return nodes_.empty(); }
  [[nodiscard]] std::size_t edge_count() const { return nodes_.size() - trees_.size(); }

  /// Length in millimetres of one simulation-space unit.
  [[nodiscard]] double mm_per_unit() const { return mm_per_unit_; }
  void set_mm_per_unit(double v) { mm_per_unit_ = v; }

  friend bool operator==(const VesselForest& a, const VesselForest& b) {
    if (a.mm_per_unit_ != b.mm_per_unit_ || a.nodes_.size() != b.nodes_.size() ||
        a.trees_.size() != b.trees_.size()) {
      return false;
    }
    for (std::size_t i = 0; i < a.trees_.size(); ++i) {
      if (a.trees_[i].root != b.trees_[i].root || a.trees_[i].kind != b.trees_[i].kind) return false;
    }
    for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
      const auto& x = a.nodes_[i];
      const auto& y = b.nodes_[i];
      if (x.position != y.position || x.radius_mm != y.radius_mm || x.parent != y.parent ||
          x.child_count != y.child_count || x.tree != y.tree || x.kind != y.kind) {
        return false;
      }
      for (int c = 0; c < x.child_count; ++c) {
        if (x.children[c] != y.children[c]) return false;
      }
    }
    return true;
  }

 private:
  NodeId next_id() const {
    if (nodes_.size() >= std::numeric_limits<NodeId>::max()) throw std::length_error("forest too large");
    return static_cast<NodeId>(nodes_.size());
  }

  double mm_per_unit_ = 3.0;
  std::vector<VesselNode> nodes_;
  std::vector<TreeInfo> trees_;
};

inline NodeClass classify(const VesselForest& forest, NodeId id) { return forest.at(id).node_class(); }

namespace detail {

// Snaps cosines that left [-1, 1] by rounding only.
inline double snap_cosine(double c) {
  constexpr double kSlack = 1e-12;
  if (c > 1.0 && c <= 1.0 + kSlack) return 1.0;
  if (c < -1.0 && c >= -1.0 - kSlack) return -1.0;
  return c;
}

}  // namespace detail

/// Murray-optimal angle (radians) between the parent axis and a branch of
/// radius r_branch, given the sibling radius r_sibling:
///   cos = (r_p^4 + r_b^4 - r_s^4) / (2 r_p^2 r_b^2).
/// Empty when the cosine leaves [-1, 1].
inline std::optional<double> murray_branch_angle(double r_parent, double r_branch, double r_sibling) {
  const double p2 = r_parent * r_parent;
  const double b2 = r_branch * r_branch;
  const double s2 = r_sibling * r_sibling;
  const double c = detail::snap_cosine((p2 * p2 + b2 * b2 - s2 * s2) / (2.0 * p2 * b2));
  if (!(c >= -1.0 && c <= 1.0)) return std::nullopt;
  return std::acos(c);
}

struct BifurcationAngles {
  double alpha_deg;
  double beta_deg;
};

/// Symmetric bifurcation angles for two children of radius r_child:
/// alpha = arccos(r_p^4 / (2 r_p^2 r_c^2)), beta = -alpha.
inline std::optional<BifurcationAngles> try_bifurcation_angles(double r_parent, double r_child) {
  if (!(r_parent > 0.0) || !(r_child > 0.0)) return std::nullopt;
  const double p2 = r_parent * r_parent;
  const double c = detail::snap_cosine((p2 * p2) / (2.0 * p2 * r_child * r_child));
  if (!(c >= -1.0 && c <= 1.0)) return std::nullopt;
  const double alpha = rad_to_deg(std::acos(c));
  return BifurcationAngles{alpha, -alpha};
}

inline BifurcationAngles bifurcation_angles(double r_parent, double r_child) {
  if (!(r_parent > 0.0) || !(r_child > 0.0)) throw std::invalid_argument("bifurcation_angles: radii must be positive");
  auto angles = try_bifurcation_angles(r_parent, r_child);
  if (!angles) throw DegenerateGeometry("bifurcation_angles: arccos argument outside [-1, 1]");
  return *angles;
}

/// (r1^kappa + r2^kappa)^(1/kappa)
inline double murray_parent_radius(double r1, double r2, double kappa) {
  if (!(kappa > 0.0)) throw std::invalid_argument("murray_parent_radius: kappa must be positive");
  return std::pow(std::pow(r1, kappa) + std::pow(r2, kappa), 1.0 / kappa);
}

/// Re-establishes Murray's law from `id` up to its root. `id` takes exponent
/// `kappa`; every other bounded ancestor keeps the exponent it was created
/// with, and single-child ancestors copy their child's radius.
inline void update_radii_upstream(VesselForest& forest, NodeId id, double kappa) {
  forest.at(id).kappa = kappa;
  std::optional<NodeId> cur = id;
  while (cur) {
    auto& n = forest.at(*cur);
    double updated = n.radius_mm;
    if (n.child_count == 2) {
      updated = murray_parent_radius(forest.at(n.children[0]).radius_mm, forest.at(n.children[1]).radius_mm, n.kappa);
    } else if (n.child_count == 1) {
      updated = forest.at(n.children[0]).radius_mm;
    }
    if (updated == n.radius_mm && *cur != id) break;
    n.radius_mm = updated;
    cur = n.parent;
  }
}

struct SubtreeRemoval {
  VesselForest forest;
  double drop_probability = 0.0;
  /// Edges selected by the Bernoulli draws, before descendants are cascaded.
  std::size_t selected_edges = 0;
  std::size_t removed_nodes = 0;
};

/// Drops every non-root edge independently with probability p, together with
/// all descendants. Surviving nodes keep their relative order and are
/// renumbered densely.
inline SubtreeRemoval remove_subtrees_with_probability(const VesselForest& forest, double p, Rng& rng) {
  SubtreeRemoval out;
  out.drop_probability = p;
  const auto& nodes = forest.nodes();
  std::vector<bool> dropped(nodes.size(), false);
  // Parents always precede children, so a forward pass cascades removals.
  for (const auto& n : nodes) {
    if (n.is_root()) continue;
    const bool selected = rng.uniform() < p;
    if (selected) ++out.selected_edges;
    dropped[n.id] = selected || dropped[*n.parent];
  }
  VesselForest kept(forest.mm_per_unit());
  std::vector<NodeId> remap(nodes.size(), 0);
  for (const auto& n : nodes) {
    if (dropped[n.id]) {
      ++out.removed_nodes;
      continue;
    }
    NodeId nid = 0;
    if (n.is_root()) {
      nid = kept.add_root(n.position, n.radius_mm, n.kind);
    } else {
      nid = kept.add_child(remap[*n.parent], n.position, n.radius_mm, n.created_at);
    }
    kept.at(nid).kappa = n.kappa;
    remap[n.id] = nid;
  }
  out.forest = std::move(kept);
  return out;
}

/// Non-perfusion augmentation: p ~ Uniform(0, probability_upper) once per
/// forest, then remove_subtrees_with_probability.
inline SubtreeRemoval remove_random_subtrees(const VesselForest& forest, double probability_upper, Rng& rng) {
  if (!(probability_upper >= 0.0 && probability_upper <= 1.0)) {
    throw std::invalid_argument("remove_random_subtrees: probability_upper must lie in [0, 1]");
  }
  const double p = rng.uniform(0.0, probability_upper);
  return remove_subtrees_with_probability(forest, p, rng);
}

}  // namespace octasim

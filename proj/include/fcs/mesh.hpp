#pragma once

// Quadtree background mesh over a rectangular grid of square root cells.
// All topology lives on an integer lattice (kLatticeUnit units per root
// cell side), so containment, adjacency, midpoints and node identities are
// exact and the derived orderings are deterministic.

#include <array>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "fcs/geometry.hpp"

namespace fcs::mesh {

constexpr int kMaxLevel = 20;
constexpr std::int64_t kLatticeUnit = std::int64_t(1) << kMaxLevel;

struct RootGrid {
  int nx = 1, ny = 1;          // root cells per direction
  double origin_x = 0, origin_y = 0;
  double cell_size = 1;        // root cells are square

  geo::Box bounds() const {
    return {origin_x, origin_y, origin_x + nx * cell_size,
            origin_y + ny * cell_size};
  }
  // Physical coordinate of a lattice position.
  double px(std::int64_t gx) const {
    return origin_x + gx * (cell_size / kLatticeUnit);
  }
  double py(std::int64_t gy) const {
    return origin_y + gy * (cell_size / kLatticeUnit);
  }
};

struct Leaf {
  std::int64_t gx = 0, gy = 0;  // lower-left corner, lattice units
  std::int32_t level = 0;       // refinement level relative to the root
  geo::CellClass cls = geo::CellClass::Inside;
  bool classified = false;

  std::int64_t side() const { return kLatticeUnit >> level; }
};

class Forest {
 public:
  explicit Forest(RootGrid grid);
  static Forest uniform(RootGrid grid, int level);
  // Builds a forest from an explicit leaf set (sorted internally); the set
  // must tile the box exactly.
  static Forest from_leaves(RootGrid grid, std::vector<Leaf> leaves);

  const RootGrid& grid() const { return grid_; }
  std::int64_t num_leaves() const { return static_cast<std::int64_t>(leaves_.size()); }
  const Leaf& leaf(std::int64_t id) const { return leaves_[id]; }
  Leaf& leaf_mutable(std::int64_t id) { return leaves_[id]; }
  const std::vector<Leaf>& leaves() const { return leaves_; }
  int max_level() const { return max_level_; }

  geo::Box leaf_box(std::int64_t id) const;
  double level_width(int level) const {
    return grid_.cell_size / double(std::int64_t(1) << level);
  }

  // Leaf containing the lattice point (half-open cells); -1 outside the box.
  std::int64_t find_leaf(std::int64_t px, std::int64_t py) const;
  // Ids of leaves sharing a positive-length edge with leaf id.
  std::vector<std::int64_t> edge_neighbors(std::int64_t id) const;

  // Replaces each marked leaf by its four children, then restores sorted
  // order. Ids are invalidated.
  void refine(const std::vector<std::int64_t>& ids);

  // Exact tiling check in lattice units.
  bool tiles_exactly() const;

 private:
  void rebuild_index();
  RootGrid grid_;
  std::vector<Leaf> leaves_;  // sorted by (gy, gx)
  std::unordered_map<std::uint64_t, std::int64_t> corner_;
  int max_level_ = 0;
};

// Classifies every leaf that does not have a cached class yet.
void classify_forest(Forest& forest, const geo::DomainGeometry& geom);

// Refines every Cut leaf to r_max, re-balancing afterwards; iterates until
// stable so leaves introduced by balancing are classified and refined too.
Forest refine_adaptive(Forest forest, const geo::DomainGeometry& geom, int r_max);

// 2:1 edge balance by refinement only; idempotent.
Forest balance_2to1(Forest forest);

// One coarsening step: every sibling group at the current maximum level is
// replaced by its parent, then the forest is re-balanced. Throws when all
// leaves are at level 0.
Forest coarsen_level(const Forest& fine);

// node ids index NodeTable::nodes, sorted by (gy, gx)
struct NodeTable {
  struct Node {
    std::int64_t gx = 0, gy = 0;
    bool hanging = false;
    std::int64_t free_index = -1;  // contiguous over non-hanging nodes
  };
  std::vector<Node> nodes;
  std::unordered_map<std::uint64_t, std::int32_t> by_coord;
  std::vector<std::array<std::int32_t, 4>> leaf_nodes;  // local order (0,0),(1,0),(0,1),(1,1)
  std::int64_t free_count = 0;

  std::int32_t node_at(std::int64_t gx, std::int64_t gy) const;
};

struct ConstraintMap {
  // hanging node -> closed list of (free node, weight), sorted by node id
  std::unordered_map<std::int32_t, std::vector<std::pair<std::int32_t, double>>> rows;

  bool constrained(std::int32_t node) const { return rows.count(node) != 0; }
};

struct MeshLevel {
  Forest forest;
  NodeTable nodes;
  ConstraintMap constraints;
};

// Enumerates nodes and free DoFs (lexicographic by (y, x)) and closes the
// hanging-node constraints. Requires a balanced forest.
MeshLevel build_mesh_level(Forest forest);

// Nested hierarchy via repeated coarsen_level; result[0] is the coarsest,
// result[depth-1] the given fine forest.
std::vector<Forest> build_forest_hierarchy(Forest fine, int depth);

}  // namespace fcs::mesh

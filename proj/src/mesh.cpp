#include "fcs/mesh.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <stdexcept>
#include <string>

namespace fcs::mesh {

namespace {

inline std::uint64_t pack(std::int64_t gx, std::int64_t gy) {
  return (static_cast<std::uint64_t>(gx) << 32) | static_cast<std::uint64_t>(gy);
}

inline bool leaf_order(const Leaf& a, const Leaf& b) {
  return a.gy != b.gy ? a.gy < b.gy : a.gx < b.gx;
}

}  // namespace

Forest::Forest(RootGrid grid) : grid_(grid) {
  if (grid.nx < 1 || grid.ny < 1 || grid.cell_size <= 0)
    throw std::invalid_argument("Forest: bad root grid");
  leaves_.reserve(static_cast<std::size_t>(grid.nx) * grid.ny);
  for (int ry = 0; ry < grid.ny; ++ry)
    for (int rx = 0; rx < grid.nx; ++rx)
      leaves_.push_back(Leaf{rx * kLatticeUnit, ry * kLatticeUnit, 0});
  rebuild_index();
}

Forest Forest::uniform(RootGrid grid, int level) {
  Forest f(grid);
  for (int l = 0; l < level; ++l) {
    std::vector<std::int64_t> all(f.num_leaves());
    for (std::int64_t i = 0; i < f.num_leaves(); ++i) all[i] = i;
    f.refine(all);
  }
  return f;
}

Forest Forest::from_leaves(RootGrid grid, std::vector<Leaf> leaves) {
  Forest f(grid);
  f.leaves_ = std::move(leaves);
  f.rebuild_index();
  if (!f.tiles_exactly())
    throw std::invalid_argument("Forest::from_leaves: leaves do not tile the box");
  return f;
}

void Forest::rebuild_index() {
  std::sort(leaves_.begin(), leaves_.end(), leaf_order);
  corner_.clear();
  corner_.reserve(leaves_.size() * 2);
  max_level_ = 0;
  for (std::int64_t i = 0; i < num_leaves(); ++i) {
    const Leaf& l = leaves_[i];
    if (!corner_.emplace(pack(l.gx, l.gy), i).second)
      throw std::logic_error("Forest: duplicate leaf corner");
    max_level_ = std::max(max_level_, int(l.level));
  }
}

geo::Box Forest::leaf_box(std::int64_t id) const {
  const Leaf& l = leaves_[id];
  const std::int64_t s = l.side();
  return {grid_.px(l.gx), grid_.py(l.gy), grid_.px(l.gx + s), grid_.py(l.gy + s)};
}

std::int64_t Forest::find_leaf(std::int64_t px, std::int64_t py) const {
  if (px < 0 || py < 0 || px >= grid_.nx * kLatticeUnit ||
      py >= grid_.ny * kLatticeUnit)
    return -1;
  for (int lev = max_level_; lev >= 0; --lev) {
    const std::int64_t side = kLatticeUnit >> lev;
    const std::int64_t ax = (px / side) * side;
    const std::int64_t ay = (py / side) * side;
    auto it = corner_.find(pack(ax, ay));
    if (it == corner_.end()) continue;
    const Leaf& l = leaves_[it->second];
    if (px < l.gx + l.side() && py < l.gy + l.side()) return it->second;
  }
  return -1;
}

std::vector<std::int64_t> Forest::edge_neighbors(std::int64_t id) const {
  const Leaf& l = leaves_[id];
  const std::int64_t s = l.side();
  std::vector<std::int64_t> out;
  auto walk_x = [&](std::int64_t probe_x) {
    if (probe_x < 0 || probe_x >= grid_.nx * kLatticeUnit) return;
    std::int64_t y = l.gy;
    while (y < l.gy + s) {
      const std::int64_t n = find_leaf(probe_x, y);
      if (n < 0) break;
      out.push_back(n);
      y = leaves_[n].gy + leaves_[n].side();
    }
  };
  auto walk_y = [&](std::int64_t probe_y) {
    if (probe_y < 0 || probe_y >= grid_.ny * kLatticeUnit) return;
    std::int64_t x = l.gx;
    while (x < l.gx + s) {
      const std::int64_t n = find_leaf(x, probe_y);
      if (n < 0) break;
      out.push_back(n);
      x = leaves_[n].gx + leaves_[n].side();
    }
  };
  walk_x(l.gx + s);
  walk_x(l.gx - 1);
  walk_y(l.gy + s);
  walk_y(l.gy - 1);
  return out;
}

void Forest::refine(const std::vector<std::int64_t>& ids) {
  if (ids.empty()) return;
  std::vector<char> mark(leaves_.size(), 0);
  for (std::int64_t id : ids) {
    if (id < 0 || id >= num_leaves())
      throw std::out_of_range("Forest::refine: bad leaf id");
    mark[id] = 1;
  }
  std::vector<Leaf> next;
  next.reserve(leaves_.size() + 3 * ids.size());
  for (std::int64_t i = 0; i < num_leaves(); ++i) {
    const Leaf& l = leaves_[i];
    if (!mark[i]) {
      next.push_back(l);
      continue;
    }
    if (l.level + 1 >= kMaxLevel)
      throw std::runtime_error("Forest::refine: maximum refinement level reached");
    const std::int64_t h = l.side() >> 1;
    for (int cy = 0; cy < 2; ++cy)
      for (int cx = 0; cx < 2; ++cx)
        next.push_back(Leaf{l.gx + cx * h, l.gy + cy * h, l.level + 1});
  }
  leaves_ = std::move(next);
  rebuild_index();
}

bool Forest::tiles_exactly() const {
  std::int64_t sum = 0;
  for (const Leaf& l : leaves_) sum += l.side() * l.side();
  const std::int64_t total =
      (std::int64_t(grid_.nx) * kLatticeUnit) * (std::int64_t(grid_.ny) * kLatticeUnit);
  return sum == total;  // together with corner uniqueness: exact tiling
}

void classify_forest(Forest& forest, const geo::DomainGeometry& geom) {
  for (std::int64_t i = 0; i < forest.num_leaves(); ++i) {
    Leaf& l = forest.leaf_mutable(i);
    if (l.classified) continue;
    l.cls = geom.classify(forest.leaf_box(i));
    l.classified = true;
  }
}

Forest balance_2to1(Forest forest) {
  for (;;) {
    std::vector<std::int64_t> marks;
    std::vector<char> marked(forest.num_leaves(), 0);
    for (std::int64_t i = 0; i < forest.num_leaves(); ++i) {
      const int level = forest.leaf(i).level;
      for (std::int64_t n : forest.edge_neighbors(i)) {
        if (forest.leaf(n).level < level - 1 && !marked[n]) {
          marked[n] = 1;
          marks.push_back(n);
        }
      }
    }
    if (marks.empty()) return forest;
    std::sort(marks.begin(), marks.end());
    forest.refine(marks);
  }
}

Forest refine_adaptive(Forest forest, const geo::DomainGeometry& geom, int r_max) {
  if (r_max < 0) throw std::invalid_argument("refine_adaptive: r_max < 0");
  for (;;) {
    classify_forest(forest, geom);
    std::vector<std::int64_t> marks;
    for (std::int64_t i = 0; i < forest.num_leaves(); ++i) {
      const Leaf& l = forest.leaf(i);
      if (l.cls == geo::CellClass::Cut && l.level < r_max) marks.push_back(i);
    }
    if (marks.empty()) {
      Forest balanced = balance_2to1(std::move(forest));
      classify_forest(balanced, geom);
      // Balancing may have exposed new cut leaves below r_max.
      bool again = false;
      for (std::int64_t i = 0; i < balanced.num_leaves(); ++i) {
        const Leaf& l = balanced.leaf(i);
        if (l.cls == geo::CellClass::Cut && l.level < r_max) {
          again = true;
          break;
        }
      }
      if (!again) return balanced;
      forest = std::move(balanced);
      continue;
    }
    forest.refine(marks);
  }
}

Forest coarsen_level(const Forest& fine) {
  const int r_max = fine.max_level();
  if (r_max == 0) throw std::runtime_error("cannot coarsen root grid");
  std::vector<Leaf> next;
  next.reserve(fine.leaves().size());
  std::unordered_map<std::uint64_t, int> group_count;
  for (const Leaf& l : fine.leaves()) {
    if (l.level != r_max) {
      next.push_back(l);
      continue;
    }
    const std::int64_t ps = l.side() * 2;
    const std::int64_t pgx = (l.gx / ps) * ps;
    const std::int64_t pgy = (l.gy / ps) * ps;
    if (++group_count[pack(pgx, pgy)] == 4) {
      Leaf parent;
      parent.gx = pgx;
      parent.gy = pgy;
      parent.level = r_max - 1;
      next.push_back(parent);
    }
  }
  for (const auto& [key, count] : group_count) {
    (void)key;
    if (count != 4)
      throw std::logic_error("coarsen_level: incomplete sibling group");
  }
  return balance_2to1(Forest::from_leaves(fine.grid(), std::move(next)));
}

std::vector<Forest> build_forest_hierarchy(Forest fine, int depth) {
  if (depth < 1)
    throw std::invalid_argument("build_forest_hierarchy: depth must be >= 1");
  std::vector<Forest> levels;
  levels.reserve(depth);
  levels.push_back(std::move(fine));
  for (int l = 1; l < depth; ++l) levels.push_back(coarsen_level(levels.back()));
  std::reverse(levels.begin(), levels.end());
  return levels;
}

std::int32_t NodeTable::node_at(std::int64_t gx, std::int64_t gy) const {
  auto it = by_coord.find(pack(gx, gy));
  return it == by_coord.end() ? -1 : it->second;
}

MeshLevel build_mesh_level(Forest forest) {
  MeshLevel level{std::move(forest), {}, {}};
  const Forest& f = level.forest;
  NodeTable& nt = level.nodes;

  // Collect unique leaf corners.
  {
    std::unordered_map<std::uint64_t, char> seen;
    seen.reserve(f.num_leaves() * 4);
    std::vector<std::pair<std::int64_t, std::int64_t>> coords;
    coords.reserve(f.num_leaves() * 4);
    for (const Leaf& l : f.leaves()) {
      const std::int64_t s = l.side();
      const std::pair<std::int64_t, std::int64_t> c[4] = {
          {l.gx, l.gy}, {l.gx + s, l.gy}, {l.gx, l.gy + s}, {l.gx + s, l.gy + s}};
      for (const auto& [x, y] : c)
        if (seen.emplace(pack(x, y), 0).second) coords.emplace_back(x, y);
    }
    std::sort(coords.begin(), coords.end(),
              [](const auto& a, const auto& b) {
                return a.second != b.second ? a.second < b.second : a.first < b.first;
              });
    nt.nodes.reserve(coords.size());
    nt.by_coord.reserve(coords.size());
    for (const auto& [x, y] : coords) {
      nt.by_coord.emplace(pack(x, y), static_cast<std::int32_t>(nt.nodes.size()));
      nt.nodes.push_back(NodeTable::Node{x, y, false, -1});
    }
  }

  // Corner nodes per leaf, local order (0,0),(1,0),(0,1),(1,1).
  nt.leaf_nodes.resize(f.num_leaves());
  for (std::int64_t i = 0; i < f.num_leaves(); ++i) {
    const Leaf& l = f.leaf(i);
    const std::int64_t s = l.side();
    nt.leaf_nodes[i] = {nt.node_at(l.gx, l.gy), nt.node_at(l.gx + s, l.gy),
                        nt.node_at(l.gx, l.gy + s), nt.node_at(l.gx + s, l.gy + s)};
  }

  // A node is hanging iff it sits at the midpoint of some leaf edge; its
  // parents are that edge's endpoints.
  std::unordered_map<std::int32_t, std::array<std::int32_t, 2>> raw_parents;
  for (const Leaf& l : f.leaves()) {
    const std::int64_t s = l.side();
    if (s < 2) continue;
    const std::int64_t h = s / 2;
    struct Edge {
      std::int64_t mx, my, ax, ay, bx, by;
    };
    const Edge edges[4] = {
        {l.gx + h, l.gy, l.gx, l.gy, l.gx + s, l.gy},              // bottom
        {l.gx + h, l.gy + s, l.gx, l.gy + s, l.gx + s, l.gy + s},  // top
        {l.gx, l.gy + h, l.gx, l.gy, l.gx, l.gy + s},              // left
        {l.gx + s, l.gy + h, l.gx + s, l.gy, l.gx + s, l.gy + s},  // right
    };
    for (const Edge& e : edges) {
      const std::int32_t mid = nt.node_at(e.mx, e.my);
      if (mid < 0) continue;
      const std::array<std::int32_t, 2> parents{nt.node_at(e.ax, e.ay),
                                                nt.node_at(e.bx, e.by)};
      auto [it, inserted] = raw_parents.emplace(mid, parents);
      if (!inserted && it->second != parents)
        throw std::logic_error("build_mesh_level: conflicting hanging-node parents");
      nt.nodes[mid].hanging = true;
    }
  }

  // Close the constraints so every parent is a free node.
  std::unordered_map<std::int32_t, std::vector<std::pair<std::int32_t, double>>> closed;
  auto close = [&](auto&& self, std::int32_t node, int depth)
      -> const std::vector<std::pair<std::int32_t, double>>& {
    if (depth > kMaxLevel)
      throw std::logic_error("build_mesh_level: constraint closure too deep");
    auto hit = closed.find(node);
    if (hit != closed.end()) return hit->second;
    std::map<std::int32_t, double> acc;
    for (std::int32_t p : raw_parents.at(node)) {
      if (raw_parents.count(p)) {
        for (const auto& [q, w] : self(self, p, depth + 1)) acc[q] += 0.5 * w;
      } else {
        acc[p] += 0.5;
      }
    }
    auto& slot = closed[node];
    slot.assign(acc.begin(), acc.end());
    return slot;
  };
  for (const auto& [node, parents] : raw_parents) {
    (void)parents;
    close(close, node, 0);
  }
  level.constraints.rows = std::move(closed);

  // Contiguous free indices in (y, x) order.
  std::int64_t next_free = 0;
  for (auto& n : nt.nodes)
    if (!n.hanging) n.free_index = next_free++;
  nt.free_count = next_free;
  return level;
}

}  // namespace fcs::mesh

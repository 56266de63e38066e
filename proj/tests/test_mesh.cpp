#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fcs/mesh.hpp"
#include "test_support.hpp"

using namespace fcs;

namespace {

geo::DomainGeometry channel_geometry() {
  geo::LevelSet omega = geo::half_plane(-1, 0, 0);
  omega = geo::ls_intersection(omega, geo::half_plane(1, 0, -2.2));
  omega = geo::ls_intersection(omega, geo::half_plane(0, -1, 0));
  omega = geo::ls_intersection(omega, geo::half_plane(0, 1, -0.41));
  omega = geo::ls_intersection(omega,
                               geo::ls_complement(geo::circle(0.2, 0.2, 0.05)));
  return geo::DomainGeometry::immersed(omega, {-0.025, -0.02, 2.225, 0.43});
}

mesh::RootGrid channel_roots() { return {5, 1, -0.025, -0.02, 0.45}; }

// All-pairs adjacency scan in lattice coordinates; the independent check the
// balance tests compare against.
bool brute_force_balanced(const mesh::Forest& f) {
  for (std::int64_t i = 0; i < f.num_leaves(); ++i) {
    const auto& a = f.leaf(i);
    for (std::int64_t j = i + 1; j < f.num_leaves(); ++j) {
      const auto& b = f.leaf(j);
      const std::int64_t ax1 = a.gx + a.side(), ay1 = a.gy + a.side();
      const std::int64_t bx1 = b.gx + b.side(), by1 = b.gy + b.side();
      const bool share_x = a.gx == bx1 || b.gx == ax1;
      const bool share_y = a.gy == by1 || b.gy == ay1;
      const bool overlap_y = std::min(ay1, by1) > std::max(a.gy, b.gy);
      const bool overlap_x = std::min(ax1, bx1) > std::max(a.gx, b.gx);
      const bool edge_adjacent = (share_x && overlap_y) || (share_y && overlap_x);
      if (edge_adjacent && std::abs(a.level - b.level) > 1) return false;
    }
  }
  return true;
}

mesh::Forest random_forest(test::Rng& rng, int rounds) {
  mesh::Forest f(mesh::RootGrid{2, 2, 0, 0, 1});
  for (int r = 0; r < rounds; ++r) {
    std::vector<std::int64_t> marks;
    for (std::int64_t i = 0; i < f.num_leaves(); ++i)
      if (f.leaf(i).level < 4 && rng.next_double() < 0.3) marks.push_back(i);
    if (marks.empty()) break;
    f.refine(marks);
  }
  return f;
}

bool same_leaves(const mesh::Forest& a, const mesh::Forest& b) {
  if (a.num_leaves() != b.num_leaves()) return false;
  for (std::int64_t i = 0; i < a.num_leaves(); ++i) {
    if (a.leaf(i).gx != b.leaf(i).gx || a.leaf(i).gy != b.leaf(i).gy ||
        a.leaf(i).level != b.leaf(i).level)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("uniform forests tile the box exactly") {
  for (int level : {0, 1, 3}) {
    auto f = mesh::Forest::uniform(channel_roots(), level);
    CHECK(f.tiles_exactly());
    CHECK(f.num_leaves() == 5ll << (2 * level));
  }
}

TEST_CASE("refine_adaptive") {
  auto geom = channel_geometry();
  SUBCASE("r_max = 0 leaves the root grid unchanged") {
    auto f = mesh::refine_adaptive(mesh::Forest(channel_roots()), geom, 0);
    CHECK(f.num_leaves() == 5);
  }
  SUBCASE("no cut cells means no refinement") {
    auto fit = geo::DomainGeometry::fitted({0, 0, 1, 1}, {-1, -1, -1, -1});
    auto f = mesh::refine_adaptive(mesh::Forest(mesh::RootGrid{2, 2, 0, 0, 0.5}),
                                   fit, 4);
    CHECK(f.num_leaves() == 4);
  }
  SUBCASE("every leaf straddling the cylinder reaches r_max = 3") {
    auto f = mesh::refine_adaptive(mesh::Forest(channel_roots()), geom, 3);
    CHECK(f.tiles_exactly());
    CHECK(brute_force_balanced(f));
    for (std::int64_t i = 0; i < f.num_leaves(); ++i) {
      const geo::Box b = f.leaf_box(i);
      // analytic straddle test against the cylinder circle
      const double cx = 0.2, cy = 0.2, r = 0.05;
      const double dx = std::max({b.x0 - cx, 0.0, cx - b.x1});
      const double dy = std::max({b.y0 - cy, 0.0, cy - b.y1});
      const double dmin = std::hypot(dx, dy);
      const double ex = std::max(std::abs(b.x0 - cx), std::abs(b.x1 - cx));
      const double ey = std::max(std::abs(b.y0 - cy), std::abs(b.y1 - cy));
      const double dmax = std::hypot(ex, ey);
      if (dmin < r && dmax > r) CHECK(f.leaf(i).level == 3);
    }
  }
}

TEST_CASE("balance_2to1") {
  SUBCASE("already balanced forest is unchanged") {
    auto f = mesh::Forest::uniform(mesh::RootGrid{2, 1, 0, 0, 1}, 2);
    auto g = mesh::balance_2to1(f);
    CHECK(same_leaves(f, g));
  }
  SUBCASE("level-3 leaf beside level-0 roots forces grading") {
    mesh::Forest f(mesh::RootGrid{3, 1, 0, 0, 1});
    // drill down at the right edge of root 0, beside the level-0 root 1
    for (int i = 0; i < 3; ++i)
      f.refine({f.find_leaf(mesh::kLatticeUnit - 1, 0)});
    CHECK(!brute_force_balanced(f));
    auto g = mesh::balance_2to1(f);
    CHECK(brute_force_balanced(g));
    CHECK(g.tiles_exactly());
  }
  SUBCASE("idempotent on randomized forests") {
    test::Rng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
      auto f = random_forest(rng, 5);
      auto b1 = mesh::balance_2to1(f);
      auto b2 = mesh::balance_2to1(b1);
      CHECK(brute_force_balanced(b1));
      CHECK(same_leaves(b1, b2));
    }
  }
}

TEST_CASE("coarsen_level") {
  SUBCASE("uniform level 2 becomes uniform level 1") {
    auto f = mesh::Forest::uniform(mesh::RootGrid{1, 1, 0, 0, 1}, 2);
    auto c = mesh::coarsen_level(f);
    CHECK(c.num_leaves() == 4);
    CHECK(c.max_level() == 1);
  }
  SUBCASE("only the deepest sibling groups merge") {
    // uniform level 2, then refine one cell to level 3
    auto f = mesh::Forest::uniform(mesh::RootGrid{1, 1, 0, 0, 1}, 2);
    f.refine({0});
    auto c = mesh::coarsen_level(f);
    // the level-3 group became its level-2 parent; everything else untouched
    CHECK(c.max_level() == 2);
    CHECK(c.num_leaves() == 16);
    CHECK(brute_force_balanced(c));
  }
  SUBCASE("root grid cannot be coarsened") {
    mesh::Forest f(mesh::RootGrid{2, 2, 0, 0, 1});
    CHECK_THROWS_WITH_AS(mesh::coarsen_level(f), "cannot coarsen root grid",
                         std::runtime_error);
  }
  SUBCASE("result is always balanced (randomized)") {
    test::Rng rng(8);
    for (int trial = 0; trial < 10; ++trial) {
      auto f = mesh::balance_2to1(random_forest(rng, 6));
      if (f.max_level() == 0) continue;
      CHECK(brute_force_balanced(mesh::coarsen_level(f)));
    }
  }
}

TEST_CASE("build_forest_hierarchy") {
  SUBCASE("depth 1 is just the fine grid") {
    auto f = mesh::Forest::uniform(mesh::RootGrid{1, 1, 0, 0, 1}, 2);
    auto h = mesh::build_forest_hierarchy(f, 1);
    CHECK(h.size() == 1);
    CHECK(same_leaves(h[0], f));
  }
  SUBCASE("uniform level-3 grid, depth 4: 64:16:4:1 per root") {
    auto f = mesh::Forest::uniform(mesh::RootGrid{2, 1, 0, 0, 1}, 3);
    auto h = mesh::build_forest_hierarchy(f, 4);
    REQUIRE(h.size() == 4);
    CHECK(h[0].num_leaves() == 2 * 1);
    CHECK(h[1].num_leaves() == 2 * 4);
    CHECK(h[2].num_leaves() == 2 * 16);
    CHECK(h[3].num_leaves() == 2 * 64);
  }
  SUBCASE("channel hierarchy is nested") {
    auto geom = channel_geometry();
    auto fine = mesh::refine_adaptive(mesh::Forest(channel_roots()), geom, 4);
    auto h = mesh::build_forest_hierarchy(fine, 3);
    for (std::size_t l = 0; l + 1 < h.size(); ++l) {
      const auto& coarse = h[l];
      const auto& finer = h[l + 1];
      for (std::int64_t i = 0; i < finer.num_leaves(); ++i) {
        const auto& leaf = finer.leaf(i);
        const std::int64_t c = coarse.find_leaf(leaf.gx, leaf.gy);
        REQUIRE(c >= 0);
        const auto& cl = coarse.leaf(c);
        // fine leaf fully contained in (or equal to) the coarse leaf
        CHECK(cl.gx <= leaf.gx);
        CHECK(cl.gy <= leaf.gy);
        CHECK(leaf.gx + leaf.side() <= cl.gx + cl.side());
        CHECK(leaf.gy + leaf.side() <= cl.gy + cl.side());
      }
    }
  }
}

TEST_CASE("node enumeration and hanging-node constraints") {
  SUBCASE("uniform grid: (nx+1)(ny+1) free nodes, no constraints") {
    auto lvl = mesh::build_mesh_level(mesh::Forest(mesh::RootGrid{4, 3, 0, 0, 1}));
    CHECK(lvl.nodes.free_count == 5 * 4);
    CHECK(lvl.constraints.rows.empty());
    // lexicographic order: free index increases with (y, x)
    for (std::size_t i = 1; i < lvl.nodes.nodes.size(); ++i) {
      const auto& a = lvl.nodes.nodes[i - 1];
      const auto& b = lvl.nodes.nodes[i];
      CHECK((a.gy < b.gy || (a.gy == b.gy && a.gx < b.gx)));
    }
  }
  SUBCASE("one refined cell beside a coarse cell: midpoint constrained 1/2 1/2") {
    mesh::Forest f(mesh::RootGrid{2, 1, 0, 0, 1});
    f.refine({0});
    auto lvl = mesh::build_mesh_level(std::move(f));
    REQUIRE(lvl.constraints.rows.size() == 1);
    const auto& [node, weights] = *lvl.constraints.rows.begin();
    CHECK(lvl.nodes.nodes[node].hanging);
    CHECK(lvl.nodes.nodes[node].gx == mesh::kLatticeUnit);
    CHECK(lvl.nodes.nodes[node].gy == mesh::kLatticeUnit / 2);
    REQUIRE(weights.size() == 2);
    CHECK(weights[0].second == 0.5);
    CHECK(weights[1].second == 0.5);
    for (const auto& [p, w] : weights) {
      (void)w;
      CHECK(!lvl.nodes.nodes[p].hanging);
    }
  }
  SUBCASE("closure: no parent is itself constrained (randomized)") {
    test::Rng rng(9);
    for (int trial = 0; trial < 12; ++trial) {
      auto f = mesh::balance_2to1(random_forest(rng, 6));
      auto lvl = mesh::build_mesh_level(std::move(f));
      for (const auto& [node, weights] : lvl.constraints.rows) {
        (void)node;
        double sum = 0;
        for (const auto& [p, w] : weights) {
          CHECK(!lvl.constraints.constrained(p));
          CHECK(lvl.nodes.nodes[p].free_index >= 0);
          sum += w;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("tiling invariant holds after every operation") {
  test::Rng rng(10);
  auto f = random_forest(rng, 6);
  CHECK(f.tiles_exactly());
  auto b = mesh::balance_2to1(f);
  CHECK(b.tiles_exactly());
  if (b.max_level() > 0) CHECK(mesh::coarsen_level(b).tiles_exactly());
}

TEST_CASE("identical meshes give identical node orderings") {
  // same leaf set reached through different refinement orders
  mesh::Forest a(mesh::RootGrid{2, 1, 0, 0, 1});
  a.refine({0});
  a.refine({a.num_leaves() - 1});
  mesh::Forest b(mesh::RootGrid{2, 1, 0, 0, 1});
  b.refine({0});
  b.refine({b.num_leaves() - 1});
  auto la = mesh::build_mesh_level(std::move(a));
  auto lb = mesh::build_mesh_level(std::move(b));
  REQUIRE(la.nodes.nodes.size() == lb.nodes.nodes.size());
  for (std::size_t i = 0; i < la.nodes.nodes.size(); ++i) {
    CHECK(la.nodes.nodes[i].gx == lb.nodes.nodes[i].gx);
    CHECK(la.nodes.nodes[i].gy == lb.nodes.nodes[i].gy);
    CHECK(la.nodes.nodes[i].free_index == lb.nodes.nodes[i].free_index);
  }
}

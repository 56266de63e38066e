#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fcs/geometry.hpp"
#include "test_support.hpp"

using namespace fcs;

namespace {

constexpr int kTagInflow = 0, kTagWall = 1, kTagCylinder = 2, kTagOutflow = 3;

// Channel with a cylindrical obstacle, all boundaries immersed.
geo::DomainGeometry channel_geometry() {
  geo::LevelSet omega = geo::half_plane(-1, 0, 0, kTagInflow);
  omega = geo::ls_intersection(omega, geo::half_plane(1, 0, -2.2, kTagOutflow));
  omega = geo::ls_intersection(omega, geo::half_plane(0, -1, 0, kTagWall));
  omega = geo::ls_intersection(omega, geo::half_plane(0, 1, -0.41, kTagWall));
  omega = geo::ls_intersection(
      omega, geo::ls_complement(geo::circle(0.2, 0.2, 0.05, kTagCylinder)));
  return geo::DomainGeometry::immersed(omega, {-0.025, -0.02, 2.225, 0.43});
}

double quad_area(const geo::VolumeQuadrature& q) {
  double s = 0;
  for (double w : q.w) s += w;
  return s;
}

double quad_physical_area(const geo::VolumeQuadrature& q) {
  double s = 0;
  for (std::size_t i = 0; i < q.size(); ++i)
    if (q.alpha[i] == 1.0) s += q.w[i];
  return s;
}

}  // namespace

TEST_CASE("level set evaluation on the channel domain") {
  auto geom = channel_geometry();
  CHECK(geom.levelset(0.2, 0.2) > 0);     // cylinder center is fictitious
  CHECK(geom.levelset(1.1, 0.205) < 0);   // mid-channel
  CHECK(geom.levelset(0.5, 0.2) < 0);
  // circle primitive: zero exactly at distance r
  auto c = geo::circle(0.7, -0.3, 0.25);
  CHECK(c.value(0.95, -0.3) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("cell classification") {
  auto geom = channel_geometry();
  CHECK(geom.classify({1.0, 0.1, 1.1, 0.2}) == geo::CellClass::Inside);
  CHECK(geom.classify({0.18, 0.18, 0.22, 0.22}) == geo::CellClass::Outside);
  CHECK(geom.classify({0.2, 0.15, 0.3, 0.25}) == geo::CellClass::Cut);
  // fitted domains are physical everywhere
  auto fit = geo::DomainGeometry::fitted({0, 0, 1, 1}, {0, 1, 2, 3});
  CHECK(fit.classify({0.4, 0.4, 0.6, 0.6}) == geo::CellClass::Inside);
}

TEST_CASE("volume quadrature: alphas and partition of unity") {
  auto geom = channel_geometry();
  geo::QuadratureSpec spec;
  spec.alpha_fict = 1e-10;

  SUBCASE("inside cell: uniform alpha = 1") {
    auto q = geom.volume_quadrature({1.0, 0.1, 1.1, 0.2}, spec);
    for (double a : q.alpha) CHECK(a == 1.0);
  }
  SUBCASE("outside cell: uniform alpha = alpha_fict") {
    auto q = geom.volume_quadrature({0.18, 0.18, 0.22, 0.22}, spec);
    for (double a : q.alpha) CHECK(a == 1e-10);
  }
  SUBCASE("cut cells: weights sum to the cell area for every depth") {
    const geo::Box cell{0.2, 0.15, 0.3, 0.25};
    for (int k = 0; k <= 5; ++k) {
      spec.subdivision_depth = k;
      auto q = geom.volume_quadrature(cell, spec);
      CHECK(quad_area(q) == doctest::Approx(cell.area()).epsilon(1e-12));
      for (double a : q.alpha) CHECK((a == 1.0 || a == 1e-10));
    }
  }
}

TEST_CASE("cut-cell physical area vs Monte-Carlo oracle (quarter circle)") {
  // Cell [0,0.1]^2 against a disc of radius 0.1 centered at the origin;
  // physical domain is the disc complement.
  auto geom = geo::DomainGeometry::immersed(
      geo::ls_complement(geo::circle(0, 0, 0.1)), {-0.2, -0.2, 0.2, 0.2});
  const geo::Box cell{0, 0, 0.1, 0.1};
  geo::QuadratureSpec spec;
  spec.subdivision_depth = 4;

  test::Rng rng(101);
  std::int64_t hits = 0;
  const std::int64_t samples = 1000000;
  for (std::int64_t i = 0; i < samples; ++i) {
    const double x = rng.uniform(0, 0.1), y = rng.uniform(0, 0.1);
    if (geom.levelset(x, y) < 0) ++hits;
  }
  const double mc_area = cell.area() * double(hits) / double(samples);
  const auto q = geom.volume_quadrature(cell, spec);
  CHECK(quad_physical_area(q) ==
        doctest::Approx(mc_area).epsilon(0.02));
  // sanity: analytic value 0.01 * (1 - pi/4)
  CHECK(quad_physical_area(q) ==
        doctest::Approx(0.01 * (1 - std::acos(-1.0) / 4)).epsilon(0.01));
}

TEST_CASE("surface quadrature on a straight wall") {
  auto geom = channel_geometry();
  const geo::Box cell{1.0, 0.36, 1.1, 0.46};  // top wall y = 0.41 crosses
  REQUIRE(geom.classify(cell) == geo::CellClass::Cut);
  geo::QuadratureSpec spec;
  auto s = geom.surface_quadrature(cell, spec);
  REQUIRE(!s.points.empty());
  double arclength = 0;
  for (const auto& p : s.points) {
    arclength += p.weight;
    CHECK(std::hypot(p.nx, p.ny) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.nx == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(p.ny == doctest::Approx(1.0).epsilon(1e-6));  // out of the channel
    CHECK(p.tag == kTagWall);
  }
  CHECK(arclength == doctest::Approx(cell.width()).epsilon(1e-8));
}

TEST_CASE("cylinder arclength within 1% at resolution 8") {
  auto geom = channel_geometry();
  geo::QuadratureSpec spec;
  spec.surface_resolution = 8;
  const double h = 0.02;
  double total = 0;
  for (int j = 0; j < 10; ++j) {
    for (int i = 0; i < 10; ++i) {
      const geo::Box cell{0.1 + i * h, 0.1 + j * h, 0.1 + (i + 1) * h,
                          0.1 + (j + 1) * h};
      if (geom.classify(cell) != geo::CellClass::Cut) continue;
      for (const auto& p : geom.surface_quadrature(cell, spec).points) {
        CHECK(p.tag == kTagCylinder);
        total += p.weight;
      }
    }
  }
  CHECK(total == doctest::Approx(std::acos(-1.0) * 0.1).epsilon(0.01));
}

TEST_CASE("normals point out of the physical domain") {
  auto geom = channel_geometry();
  geo::QuadratureSpec spec;
  const geo::Box cells[] = {{0.2, 0.15, 0.3, 0.25},
                            {-0.02, 0.1, 0.03, 0.15},
                            {1.0, 0.38, 1.05, 0.43},
                            {2.18, 0.2, 2.23, 0.25}};
  for (const auto& cell : cells) {
    if (geom.classify(cell) != geo::CellClass::Cut) continue;
    const double delta = 1e-6 * cell.width();
    for (const auto& p : geom.surface_quadrature(cell, spec).points) {
      CHECK(geom.levelset(p.x + delta * p.nx, p.y + delta * p.ny) >
            geom.levelset(p.x - delta * p.nx, p.y - delta * p.ny));
    }
  }
}

TEST_CASE("geometric fidelity improves monotonically with subdivision depth") {
  auto geom = channel_geometry();
  const double exact = 2.2 * 0.41 - std::acos(-1.0) * 0.05 * 0.05;
  // 160 x 32 tiling (cells of size 0.45/32). On coarser tilings the signed
  // global error changes sign around k = 2 and its magnitude dips before the
  // halving regime takes over, so the mesh for this check is pinned here.
  const geo::Box box = geom.embedding();
  const int nx = 160, ny = 32;
  const double hx = box.width() / nx, hy = box.height() / ny;
  double prev_err = -1;
  for (int k = 1; k <= 5; ++k) {
    geo::QuadratureSpec spec;
    spec.subdivision_depth = k;
    double area = 0;
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const geo::Box cell{box.x0 + i * hx, box.y0 + j * hy,
                            box.x0 + (i + 1) * hx, box.y0 + (j + 1) * hy};
        area += quad_physical_area(geom.volume_quadrature(cell, spec));
      }
    const double err = std::abs(area - exact);
    if (prev_err >= 0) CHECK(err <= prev_err);
    prev_err = err;
  }
}

TEST_CASE("fitted box surface quadrature covers tagged sides") {
  auto fit = geo::DomainGeometry::fitted({0, 0, 1, 1}, {0, 1, 2, 3});
  geo::QuadratureSpec spec;
  // corner cell touching left and bottom
  auto s = fit.surface_quadrature({0, 0, 0.25, 0.25}, spec);
  double left_len = 0, bottom_len = 0;
  for (const auto& p : s.points) {
    if (p.tag == 0) {
      left_len += p.weight;
      CHECK(p.nx == -1.0);
    }
    if (p.tag == 2) {
      bottom_len += p.weight;
      CHECK(p.ny == -1.0);
    }
  }
  CHECK(left_len == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(bottom_len == doctest::Approx(0.25).epsilon(1e-14));
  // interior cell has no surface
  CHECK(fit.surface_quadrature({0.3, 0.3, 0.6, 0.6}, spec).points.empty());
  // negative tag suppresses the side
  auto fit2 = geo::DomainGeometry::fitted({0, 0, 1, 1}, {-1, 1, 2, 3});
  CHECK(fit2.surface_quadrature({0, 0, 0.25, 0.25}, spec).points.size() ==
        s.points.size() / 2);
}

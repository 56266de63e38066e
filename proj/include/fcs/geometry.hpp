#pragma once

// Implicit domain description and cut-cell integration. The physical domain
// is either immersed in the embedding box through a level set (phi < 0
// inside) or coincides with the box (boundary-fitted configurations used by
// the manufactured-solution verification). Produces alpha-weighted volume
// rules and immersed-boundary surface rules per cell.

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

namespace fcs::geo {

struct Box {
  double x0 = 0, y0 = 0, x1 = 1, y1 = 1;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
};

struct LsNode;

// CSG of signed primitives. Union = min, intersection = max, complement = -.
class LevelSet {
 public:
  LevelSet() = default;
  double value(double x, double y) const;
  // Tag of the primitive whose zero set is closest at (x, y); -1 when no
  // primitive carries a tag.
  int nearest_tag(double x, double y) const;

  friend LevelSet half_plane(double a, double b, double c, int tag);
  friend LevelSet circle(double cx, double cy, double r, int tag);
  friend LevelSet ls_union(const LevelSet&, const LevelSet&);
  friend LevelSet ls_intersection(const LevelSet&, const LevelSet&);
  friend LevelSet ls_complement(const LevelSet&);

 private:
  std::shared_ptr<const LsNode> root_;
};

// phi = (a x + b y + c) / |(a,b)|; negative on the side where the expression
// is negative.
LevelSet half_plane(double a, double b, double c, int tag = -1);
// phi = |x - center| - r; negative inside the disc.
LevelSet circle(double cx, double cy, double r, int tag = -1);
LevelSet ls_union(const LevelSet& a, const LevelSet& b);
LevelSet ls_intersection(const LevelSet& a, const LevelSet& b);
LevelSet ls_complement(const LevelSet& a);

enum class CellClass : std::uint8_t { Inside, Outside, Cut };
const char* cell_class_name(CellClass c);

struct VolumeQuadrature {
  std::vector<double> x, y, w, alpha;
  std::size_t size() const { return w.size(); }
};

struct SurfacePoint {
  double x, y;
  double weight;  // arclength measure
  double nx, ny;  // unit outward normal (phi increases along n)
  int tag;
};

struct SurfaceQuadrature {
  std::vector<SurfacePoint> points;
  bool degenerate = false;  // classified Cut but no interface found
};

struct QuadratureSpec {
  int subdivision_depth = 4;   // cut-cell 2x2 recursion depth
  int gauss_order = 2;         // tensor Gauss points per direction
  int surface_resolution = 8;  // marching-squares subgrid per cut cell
  double alpha_fict = 1e-10;
};

class DomainGeometry {
 public:
  static DomainGeometry immersed(LevelSet ls, Box embedding);
  // Whole embedding box is physical. side_tags = {left, right, bottom, top};
  // a negative tag leaves that side without surface quadrature.
  static DomainGeometry fitted(Box embedding, std::array<int, 4> side_tags);
  // Mixed configuration: tagged box faces carry surface quadrature on their
  // physical part (phi < 0), and the level set's zero set inside the box is
  // an immersed boundary.
  static DomainGeometry hybrid(LevelSet ls, Box embedding,
                               std::array<int, 4> side_tags);

  bool has_levelset() const { return has_levelset_; }
  bool has_boundary_faces() const { return has_faces_; }
  const Box& embedding() const { return embedding_; }
  double classification_tolerance() const { return eps_geo_; }

  // Signed value; without a level set identically -1 (everything physical).
  double levelset(double x, double y) const;

  CellClass classify(const Box& cell, int samples_per_side = 5) const;
  VolumeQuadrature volume_quadrature(const Box& cell, const QuadratureSpec& q) const;
  SurfaceQuadrature surface_quadrature(const Box& cell, const QuadratureSpec& q) const;

 private:
  bool has_levelset_ = false;
  bool has_faces_ = false;
  LevelSet ls_;
  Box embedding_;
  std::array<int, 4> side_tags_{-1, -1, -1, -1};
  double eps_geo_ = 0;
};

// Gauss-Legendre nodes/weights on [-1, 1], order 1..5.
std::vector<std::pair<double, double>> gauss_rule(int order);

}  // namespace fcs::geo

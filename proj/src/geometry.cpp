#include "fcs/geometry.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fcs::geo {

struct LsNode {
  enum class Kind { HalfPlane, Circle, Complement, Union, Intersection };
  Kind kind;
  double a = 0, b = 0, c = 0;     // half-plane
  double cx = 0, cy = 0, r = 0;   // circle
  int tag = -1;
  std::shared_ptr<const LsNode> lhs, rhs;
};

namespace {

double eval_node(const LsNode& n, double x, double y) {
  switch (n.kind) {
    case LsNode::Kind::HalfPlane:
      return n.a * x + n.b * y + n.c;
    case LsNode::Kind::Circle:
      return std::hypot(x - n.cx, y - n.cy) - n.r;
    case LsNode::Kind::Complement:
      return -eval_node(*n.lhs, x, y);
    case LsNode::Kind::Union:
      return std::min(eval_node(*n.lhs, x, y), eval_node(*n.rhs, x, y));
    case LsNode::Kind::Intersection:
      return std::max(eval_node(*n.lhs, x, y), eval_node(*n.rhs, x, y));
  }
  return std::numeric_limits<double>::quiet_NaN();
}

void nearest_tag_node(const LsNode& n, double x, double y, double& best,
                      int& tag) {
  switch (n.kind) {
    case LsNode::Kind::HalfPlane:
    case LsNode::Kind::Circle: {
      if (n.tag >= 0) {
        const double d = std::abs(eval_node(n, x, y));
        if (d < best) {
          best = d;
          tag = n.tag;
        }
      }
      return;
    }
    case LsNode::Kind::Complement:
      nearest_tag_node(*n.lhs, x, y, best, tag);
      return;
    case LsNode::Kind::Union:
    case LsNode::Kind::Intersection:
      nearest_tag_node(*n.lhs, x, y, best, tag);
      nearest_tag_node(*n.rhs, x, y, best, tag);
      return;
  }
}

}  // namespace

double LevelSet::value(double x, double y) const {
  if (!root_) return -1.0;
  return eval_node(*root_, x, y);
}

int LevelSet::nearest_tag(double x, double y) const {
  if (!root_) return -1;
  double best = std::numeric_limits<double>::infinity();
  int tag = -1;
  nearest_tag_node(*root_, x, y, best, tag);
  return tag;
}

LevelSet half_plane(double a, double b, double c, int tag) {
  const double s = std::hypot(a, b);
  if (s == 0.0) throw std::invalid_argument("half_plane: zero normal");
  auto n = std::make_shared<LsNode>();
  n->kind = LsNode::Kind::HalfPlane;
  n->a = a / s;
  n->b = b / s;
  n->c = c / s;
  n->tag = tag;
  LevelSet ls;
  ls.root_ = std::move(n);
  return ls;
}

LevelSet circle(double cx, double cy, double r, int tag) {
  if (r <= 0.0) throw std::invalid_argument("circle: radius must be positive");
  auto n = std::make_shared<LsNode>();
  n->kind = LsNode::Kind::Circle;
  n->cx = cx;
  n->cy = cy;
  n->r = r;
  n->tag = tag;
  LevelSet ls;
  ls.root_ = std::move(n);
  return ls;
}

LevelSet ls_union(const LevelSet& a, const LevelSet& b) {
  if (!a.root_ || !b.root_)
    throw std::invalid_argument("ls_union: empty operand");
  auto n = std::make_shared<LsNode>();
  n->kind = LsNode::Kind::Union;
  n->lhs = a.root_;
  n->rhs = b.root_;
  LevelSet ls;
  ls.root_ = std::move(n);
  return ls;
}

LevelSet ls_intersection(const LevelSet& a, const LevelSet& b) {
  if (!a.root_ || !b.root_)
    throw std::invalid_argument("ls_intersection: empty operand");
  auto n = std::make_shared<LsNode>();
  n->kind = LsNode::Kind::Intersection;
  n->lhs = a.root_;
  n->rhs = b.root_;
  LevelSet ls;
  ls.root_ = std::move(n);
  return ls;
}

LevelSet ls_complement(const LevelSet& a) {
  if (!a.root_) throw std::invalid_argument("ls_complement: empty level set");
  auto n = std::make_shared<LsNode>();
  n->kind = LsNode::Kind::Complement;
  n->lhs = a.root_;
  LevelSet ls;
  ls.root_ = std::move(n);
  return ls;
}

const char* cell_class_name(CellClass c) {
  switch (c) {
    case CellClass::Inside: return "inside";
    case CellClass::Outside: return "outside";
    case CellClass::Cut: return "cut";
  }
  return "?";
}

DomainGeometry DomainGeometry::immersed(LevelSet ls, Box embedding) {
  DomainGeometry g;
  g.has_levelset_ = true;
  g.ls_ = std::move(ls);
  g.embedding_ = embedding;
  g.eps_geo_ = 1e-12 * std::hypot(embedding.width(), embedding.height());
  return g;
}

DomainGeometry DomainGeometry::fitted(Box embedding, std::array<int, 4> side_tags) {
  DomainGeometry g;
  g.has_faces_ = true;
  g.embedding_ = embedding;
  g.side_tags_ = side_tags;
  g.eps_geo_ = 1e-12 * std::hypot(embedding.width(), embedding.height());
  return g;
}

DomainGeometry DomainGeometry::hybrid(LevelSet ls, Box embedding,
                                      std::array<int, 4> side_tags) {
  DomainGeometry g = immersed(std::move(ls), embedding);
  g.has_faces_ = true;
  g.side_tags_ = side_tags;
  return g;
}

double DomainGeometry::levelset(double x, double y) const {
  if (!has_levelset_) return -1.0;
  return ls_.value(x, y);
}

CellClass DomainGeometry::classify(const Box& cell, int samples_per_side) const {
  if (!has_levelset_) return CellClass::Inside;
  const int s = samples_per_side < 3 ? 3 : samples_per_side;
  bool any_neg = false, any_pos = false;
  for (int j = 0; j < s; ++j) {
    const double y = cell.y0 + cell.height() * j / (s - 1);
    for (int i = 0; i < s; ++i) {
      const double x = cell.x0 + cell.width() * i / (s - 1);
      const double phi = ls_.value(x, y);
      if (std::abs(phi) <= eps_geo_) return CellClass::Cut;  // ties resolve to Cut
      (phi < 0 ? any_neg : any_pos) = true;
      if (any_neg && any_pos) return CellClass::Cut;
    }
  }
  return any_neg ? CellClass::Inside : CellClass::Outside;
}

std::vector<std::pair<double, double>> gauss_rule(int order) {
  switch (order) {
    case 1:
      return {{0.0, 2.0}};
    case 2: {
      const double t = 1.0 / std::sqrt(3.0);
      return {{-t, 1.0}, {t, 1.0}};
    }
    case 3: {
      const double t = std::sqrt(3.0 / 5.0);
      return {{-t, 5.0 / 9.0}, {0.0, 8.0 / 9.0}, {t, 5.0 / 9.0}};
    }
    case 4:
      return {{-0.8611363115940526, 0.3478548451374538},
              {-0.3399810435848563, 0.6521451548625461},
              {0.3399810435848563, 0.6521451548625461},
              {0.8611363115940526, 0.3478548451374538}};
    case 5:
      return {{-0.9061798459386640, 0.2369268850561891},
              {-0.5384693101056831, 0.4786286704993665},
              {0.0, 0.5688888888888889},
              {0.5384693101056831, 0.4786286704993665},
              {0.9061798459386640, 0.2369268850561891}};
    default:
      throw std::invalid_argument("gauss_rule: order must be in 1..5");
  }
}

namespace {

void append_tensor_rule(const Box& cell, int order, double alpha_uniform,
                        bool per_point_alpha, const DomainGeometry& geom,
                        double alpha_fict, VolumeQuadrature& out) {
  const auto g1 = gauss_rule(order);
  const double hx = 0.5 * cell.width(), hy = 0.5 * cell.height();
  const double mx = 0.5 * (cell.x0 + cell.x1), my = 0.5 * (cell.y0 + cell.y1);
  const double jac = hx * hy;
  for (const auto& [ty, wy] : g1) {
    for (const auto& [tx, wx] : g1) {
      const double x = mx + hx * tx;
      const double y = my + hy * ty;
      double a = alpha_uniform;
      if (per_point_alpha) a = geom.levelset(x, y) < 0 ? 1.0 : alpha_fict;
      out.x.push_back(x);
      out.y.push_back(y);
      out.w.push_back(wx * wy * jac);
      out.alpha.push_back(a);
    }
  }
}

void subdivide_cut(const DomainGeometry& geom, const Box& cell, int depth,
                   const QuadratureSpec& spec, VolumeQuadrature& out) {
  if (depth > 0) {
    const CellClass cls = geom.classify(cell, 3);
    if (cls == CellClass::Cut) {
      const double mx = 0.5 * (cell.x0 + cell.x1);
      const double my = 0.5 * (cell.y0 + cell.y1);
      const Box q[4] = {{cell.x0, cell.y0, mx, my},
                        {mx, cell.y0, cell.x1, my},
                        {cell.x0, my, mx, cell.y1},
                        {mx, my, cell.x1, cell.y1}};
      for (const Box& sub : q) subdivide_cut(geom, sub, depth - 1, spec, out);
      return;
    }
  }
  append_tensor_rule(cell, spec.gauss_order, 0.0, /*per_point_alpha=*/true,
                     geom, spec.alpha_fict, out);
}

}  // namespace

VolumeQuadrature DomainGeometry::volume_quadrature(const Box& cell,
                                                   const QuadratureSpec& spec) const {
  if (spec.subdivision_depth < 0 || spec.gauss_order < 2)
    throw std::invalid_argument("volume_quadrature: need depth >= 0, order >= 2");
  VolumeQuadrature out;
  const CellClass cls = classify(cell);
  if (cls == CellClass::Inside) {
    append_tensor_rule(cell, spec.gauss_order, 1.0, false, *this,
                       spec.alpha_fict, out);
  } else if (cls == CellClass::Outside) {
    append_tensor_rule(cell, spec.gauss_order, spec.alpha_fict, false, *this,
                       spec.alpha_fict, out);
  } else {
    subdivide_cut(*this, cell, spec.subdivision_depth, spec, out);
  }
  return out;
}

namespace {

struct Crossing {
  double x = 0, y = 0;
  bool valid = false;
};

// Bisection for phi = 0 along the segment a-b whose endpoints change sign.
Crossing edge_root(const DomainGeometry& geom, double ax, double ay, double bx,
                   double by, double tol_abs) {
  double fa = geom.levelset(ax, ay);
  double lo = 0.0, hi = 1.0;
  const bool a_in = fa < 0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double mx = ax + (bx - ax) * mid;
    const double my = ay + (by - ay) * mid;
    const double fm = geom.levelset(mx, my);
    if ((fm < 0) == a_in)
      lo = mid;
    else
      hi = mid;
    if ((hi - lo) * std::hypot(bx - ax, by - ay) <= tol_abs) break;
  }
  const double t = 0.5 * (lo + hi);
  return {ax + (bx - ax) * t, ay + (by - ay) * t, true};
}

}  // namespace

SurfaceQuadrature DomainGeometry::surface_quadrature(const Box& cell,
                                                     const QuadratureSpec& spec) const {
  SurfaceQuadrature out;
  if (has_faces_) {
    // Boundary faces of cells touching the embedding box; only the physical
    // part of a face contributes when a level set is present.
    const double tol = 1e-12 * (cell.width() + cell.height());
    const auto g1 = gauss_rule(spec.gauss_order);
    auto add_face = [&](double px, double py, double qx, double qy, double nx,
                        double ny, int tag) {
      if (tag < 0) return;
      const double len = std::hypot(qx - px, qy - py);
      for (const auto& [t, wg] : g1) {
        const double s = 0.5 * (t + 1.0);
        const double fx = px + (qx - px) * s, fy = py + (qy - py) * s;
        if (has_levelset_ && ls_.value(fx, fy) >= 0) continue;
        out.points.push_back({fx, fy, 0.5 * wg * len, nx, ny, tag});
      }
    };
    if (std::abs(cell.x0 - embedding_.x0) <= tol)
      add_face(cell.x0, cell.y0, cell.x0, cell.y1, -1, 0, side_tags_[0]);
    if (std::abs(cell.x1 - embedding_.x1) <= tol)
      add_face(cell.x1, cell.y0, cell.x1, cell.y1, 1, 0, side_tags_[1]);
    if (std::abs(cell.y0 - embedding_.y0) <= tol)
      add_face(cell.x0, cell.y0, cell.x1, cell.y0, 0, -1, side_tags_[2]);
    if (std::abs(cell.y1 - embedding_.y1) <= tol)
      add_face(cell.x0, cell.y1, cell.x1, cell.y1, 0, 1, side_tags_[3]);
  }
  if (!has_levelset_) return out;
  const std::size_t points_before_interface = out.points.size();

  const int res = spec.surface_resolution < 1 ? 1 : spec.surface_resolution;
  const double cell_size = std::max(cell.width(), cell.height());
  const double root_tol = 1e-12 * cell_size;
  const double hx = cell.width() / res, hy = cell.height() / res;

  // Corner values of the marching-squares subgrid.
  std::vector<double> phi((res + 1) * (res + 1));
  for (int j = 0; j <= res; ++j)
    for (int i = 0; i <= res; ++i)
      phi[j * (res + 1) + i] = ls_.value(cell.x0 + hx * i, cell.y0 + hy * j);

  auto emit_segment = [&](const Crossing& a, const Crossing& b) {
    if (!a.valid || !b.valid) return;
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    if (len <= 0.0) return;
    const double mx = 0.5 * (a.x + b.x), my = 0.5 * (a.y + b.y);
    const double step = 1e-6 * cell_size;
    double gx = (ls_.value(mx + step, my) - ls_.value(mx - step, my)) / (2 * step);
    double gy = (ls_.value(mx, my + step) - ls_.value(mx, my - step)) / (2 * step);
    const double gn = std::hypot(gx, gy);
    if (gn == 0.0) return;  // flat spot, cannot orient
    gx /= gn;
    gy /= gn;
    out.points.push_back({mx, my, len, gx, gy, ls_.nearest_tag(mx, my)});
  };

  for (int j = 0; j < res; ++j) {
    for (int i = 0; i < res; ++i) {
      const double x0 = cell.x0 + hx * i, x1 = x0 + hx;
      const double y0 = cell.y0 + hy * j, y1 = y0 + hy;
      const double f00 = phi[j * (res + 1) + i];
      const double f10 = phi[j * (res + 1) + i + 1];
      const double f11 = phi[(j + 1) * (res + 1) + i + 1];
      const double f01 = phi[(j + 1) * (res + 1) + i];
      const int mask = (f00 < 0 ? 1 : 0) | (f10 < 0 ? 2 : 0) |
                       (f11 < 0 ? 4 : 0) | (f01 < 0 ? 8 : 0);
      if (mask == 0 || mask == 15) continue;
      Crossing bottom, right, top, left;
      if ((f00 < 0) != (f10 < 0))
        bottom = edge_root(*this, x0, y0, x1, y0, root_tol);
      if ((f10 < 0) != (f11 < 0))
        right = edge_root(*this, x1, y0, x1, y1, root_tol);
      if ((f11 < 0) != (f01 < 0))
        top = edge_root(*this, x1, y1, x0, y1, root_tol);
      if ((f01 < 0) != (f00 < 0))
        left = edge_root(*this, x0, y1, x0, y0, root_tol);
      switch (mask) {
        case 1: case 14: emit_segment(left, bottom); break;
        case 2: case 13: emit_segment(bottom, right); break;
        case 4: case 11: emit_segment(right, top); break;
        case 8: case 7: emit_segment(top, left); break;
        case 3: case 12: emit_segment(left, right); break;
        case 6: case 9: emit_segment(bottom, top); break;
        case 5: case 10: {
          const bool center_in =
              ls_.value(0.5 * (x0 + x1), 0.5 * (y0 + y1)) < 0;
          const bool join = (mask == 5) == center_in;
          if (join) {
            emit_segment(bottom, right);
            emit_segment(top, left);
          } else {
            emit_segment(bottom, left);
            emit_segment(top, right);
          }
          break;
        }
        default: break;
      }
    }
  }
  if (out.points.size() == points_before_interface &&
      classify(cell) == CellClass::Cut)
    out.degenerate = true;
  return out;
}

}  // namespace fcs::geo

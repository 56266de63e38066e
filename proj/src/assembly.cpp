#include "fcs/assembly.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "fcs/parallel.hpp"

namespace fcs::fem {

namespace {

struct Shapes {
  double N[4];
  double gx[4];
  double gy[4];
};

// Bilinear basis on the cell, local node order (0,0),(1,0),(0,1),(1,1).
inline Shapes eval_shapes(const geo::Box& cell, double x, double y) {
  const double hx = cell.width(), hy = cell.height();
  const double xi = (x - cell.x0) / hx;
  const double et = (y - cell.y0) / hy;
  Shapes s;
  s.N[0] = (1 - xi) * (1 - et);
  s.N[1] = xi * (1 - et);
  s.N[2] = (1 - xi) * et;
  s.N[3] = xi * et;
  s.gx[0] = -(1 - et) / hx;
  s.gx[1] = (1 - et) / hx;
  s.gx[2] = -et / hx;
  s.gx[3] = et / hx;
  s.gy[0] = -(1 - xi) / hy;
  s.gy[1] = -xi / hy;
  s.gy[2] = (1 - xi) / hy;
  s.gy[3] = xi / hy;
  return s;
}

// Per local node: (free node index, weight) targets after constraint
// distribution.
using Targets = std::vector<std::pair<std::int64_t, double>>;

struct ElementWork {
  double K[12][12];
  double F[12];
  Targets tg[4];
  std::size_t weight_sum = 0;  // sum of target list sizes
};

void build_targets(const mesh::MeshLevel& level, std::int64_t leaf_id,
                   ElementWork& w) {
  w.weight_sum = 0;
  for (int a = 0; a < 4; ++a) {
    const std::int32_t node = level.nodes.leaf_nodes[leaf_id][a];
    w.tg[a].clear();
    const auto& nd = level.nodes.nodes[node];
    if (!nd.hanging) {
      w.tg[a].emplace_back(nd.free_index, 1.0);
    } else {
      for (const auto& [parent, weight] : level.constraints.rows.at(node))
        w.tg[a].emplace_back(level.nodes.nodes[parent].free_index, weight);
    }
    w.weight_sum += w.tg[a].size();
  }
}

void integrate_element(const mesh::MeshLevel& level,
                       const geo::DomainGeometry& geom,
                       const geo::QuadratureSpec& quad,
                       const PhysicalParams& par, std::int64_t leaf_id,
                       ElementWork& w, std::int64_t& degenerate_count) {
  std::memset(w.K, 0, sizeof(w.K));
  std::memset(w.F, 0, sizeof(w.F));
  const geo::Box cell = level.forest.leaf_box(leaf_id);
  const mesh::Leaf& leaf = level.forest.leaf(leaf_id);
  if (!leaf.classified)
    throw std::runtime_error("assemble: forest not classified");
  const double eta = par.viscosity;

  // Volume terms of a, b and f with the alpha-weighted rule.
  const geo::VolumeQuadrature vq = geom.volume_quadrature(cell, quad);
  for (std::size_t q = 0; q < vq.size(); ++q) {
    const Shapes s = eval_shapes(cell, vq.x[q], vq.y[q]);
    const double wq = vq.w[q];
    const double al = vq.alpha[q];
    const double wa = wq * al;
    std::array<double, 2> f{0, 0};
    if (par.body_force) f = par.body_force(vq.x[q], vq.y[q]);
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) {
        const double lap =
            wa * eta * (s.gx[a] * s.gx[b] + s.gy[a] * s.gy[b]);
        w.K[3 * a + 0][3 * b + 0] += lap;
        w.K[3 * a + 1][3 * b + 1] += lap;
        // b(v, p) = -(div v, alpha p); and its transpose
        w.K[3 * a + 0][3 * b + 2] += -wa * s.gx[a] * s.N[b];
        w.K[3 * a + 1][3 * b + 2] += -wa * s.gy[a] * s.N[b];
        w.K[3 * a + 2][3 * b + 0] += -wa * s.N[a] * s.gx[b];
        w.K[3 * a + 2][3 * b + 1] += -wa * s.N[a] * s.gy[b];
      }
      w.F[3 * a + 0] += wa * s.N[a] * f[0];
      w.F[3 * a + 1] += wa * s.N[a] * f[1];
    }
  }

  // Pressure stabilization c(q, p) = -(1/eta)(q - P0 q, p - P0 p) over the
  // full cell (no alpha weighting), P0 the cell-wise mean. Optionally, cut
  // cells project against the alpha-weighted mean and weight the product by
  // alpha, which confines the control to the physical part.
  if (par.cut_stabilization_weighted && leaf.cls == geo::CellClass::Cut) {
    double wsum = 0, intN[4] = {0, 0, 0, 0};
    std::vector<Shapes> sq(vq.size());
    for (std::size_t q = 0; q < vq.size(); ++q) {
      sq[q] = eval_shapes(cell, vq.x[q], vq.y[q]);
      const double wa = vq.w[q] * vq.alpha[q];
      wsum += wa;
      for (int a = 0; a < 4; ++a) intN[a] += wa * sq[q].N[a];
    }
    double mean[4];
    for (int a = 0; a < 4; ++a) mean[a] = intN[a] / wsum;
    for (std::size_t q = 0; q < vq.size(); ++q) {
      const double wa = vq.w[q] * vq.alpha[q];
      for (int a = 0; a < 4; ++a) {
        const double da = sq[q].N[a] - mean[a];
        for (int b = 0; b < 4; ++b)
          w.K[3 * a + 2][3 * b + 2] += -(wa / eta) * da * (sq[q].N[b] - mean[b]);
      }
    }
  } else {
    const auto g1 = geo::gauss_rule(2);
    double pts_x[4], pts_y[4], wts[4];
    int m = 0;
    const double hx2 = 0.5 * cell.width(), hy2 = 0.5 * cell.height();
    const double mx = 0.5 * (cell.x0 + cell.x1), my = 0.5 * (cell.y0 + cell.y1);
    for (const auto& [ty, wy] : g1)
      for (const auto& [tx, wx] : g1) {
        pts_x[m] = mx + hx2 * tx;
        pts_y[m] = my + hy2 * ty;
        wts[m] = wx * wy * hx2 * hy2;
        ++m;
      }
    double area = 0, intN[4] = {0, 0, 0, 0};
    Shapes sq[4];
    for (int q = 0; q < 4; ++q) {
      sq[q] = eval_shapes(cell, pts_x[q], pts_y[q]);
      area += wts[q];
      for (int a = 0; a < 4; ++a) intN[a] += wts[q] * sq[q].N[a];
    }
    double mean[4];
    for (int a = 0; a < 4; ++a) mean[a] = intN[a] / area;
    for (int q = 0; q < 4; ++q) {
      for (int a = 0; a < 4; ++a) {
        const double da = sq[q].N[a] - mean[a];
        for (int b = 0; b < 4; ++b) {
          const double db = sq[q].N[b] - mean[b];
          w.K[3 * a + 2][3 * b + 2] += -(wts[q] / eta) * da * db;
        }
      }
    }
  }

  // Nitsche terms on tagged Dirichlet pieces; Neumann data where tagged.
  const bool want_surface =
      geom.has_boundary_faces() || leaf.cls == geo::CellClass::Cut;
  if (want_surface) {
    const geo::SurfaceQuadrature sq = geom.surface_quadrature(cell, quad);
    if (sq.degenerate && leaf.cls == geo::CellClass::Cut) {
      // Distinguish a grazing cut (|phi| within tolerance, no crossing) from
      // a genuine interface the marching pass failed to find.
      bool strict_neg = false, strict_pos = false;
      const double eps = geom.classification_tolerance();
      for (int j = 0; j < 5; ++j)
        for (int i = 0; i < 5; ++i) {
          const double phi = geom.levelset(cell.x0 + cell.width() * i / 4,
                                           cell.y0 + cell.height() * j / 4);
          strict_neg |= phi < -eps;
          strict_pos |= phi > eps;
        }
      if (strict_neg && strict_pos)
        throw std::runtime_error(
            "assemble: missing surface quadrature on cut cell " +
            std::to_string(leaf_id) + " at level " +
            std::to_string(leaf.level));
      ++degenerate_count;
    }
    const double lambda = par.beta_nitsche * eta / cell.width();
    for (const auto& pt : sq.points) {
      const auto dit = par.dirichlet.find(pt.tag);
      if (dit != par.dirichlet.end()) {
        const Shapes s = eval_shapes(cell, pt.x, pt.y);
        const double wq = pt.weight;
        double dn[4];
        for (int a = 0; a < 4; ++a) dn[a] = pt.nx * s.gx[a] + pt.ny * s.gy[a];
        const std::array<double, 2> wd = dit->second(pt.x, pt.y);
        const double nc[2] = {pt.nx, pt.ny};
        for (int a = 0; a < 4; ++a) {
          for (int b = 0; b < 4; ++b) {
            // -(v, n.eta grad u) - (n.eta grad v, u) + (v, lambda u)
            const double sym =
                -wq * eta * (s.N[a] * dn[b] + dn[a] * s.N[b]) +
                wq * lambda * s.N[a] * s.N[b];
            w.K[3 * a + 0][3 * b + 0] += sym;
            w.K[3 * a + 1][3 * b + 1] += sym;
            // +(v, n p) and +(n q, u)
            const double pn = wq * s.N[a] * s.N[b];
            w.K[3 * a + 0][3 * b + 2] += pn * nc[0];
            w.K[3 * a + 1][3 * b + 2] += pn * nc[1];
            w.K[3 * a + 2][3 * b + 0] += pn * nc[0];
            w.K[3 * a + 2][3 * b + 1] += pn * nc[1];
          }
          // rhs: -(n.eta grad v, w) + (v, lambda w) and (n q, w)
          for (int c = 0; c < 2; ++c)
            w.F[3 * a + c] +=
                -wq * eta * dn[a] * wd[c] + wq * lambda * s.N[a] * wd[c];
          w.F[3 * a + 2] += wq * s.N[a] * (nc[0] * wd[0] + nc[1] * wd[1]);
        }
        continue;
      }
      const auto nit = par.neumann.find(pt.tag);
      if (nit != par.neumann.end() && nit->second) {
        const Shapes s = eval_shapes(cell, pt.x, pt.y);
        const std::array<double, 2> h = nit->second(pt.x, pt.y);
        for (int a = 0; a < 4; ++a)
          for (int c = 0; c < 2; ++c)
            w.F[3 * a + c] += pt.weight * s.N[a] * h[c];
      }
      // untagged pieces: natural boundary, no integral
    }
  }
}

// Seven coupled blocks are emitted per local node pair: (ux,ux), (uy,uy),
// (ux,p), (uy,p), (p,ux), (p,uy), (p,p). The count formula must stay in
// lockstep with emit_element below.
inline std::size_t triplet_count(const ElementWork& w) {
  return 7 * w.weight_sum * w.weight_sum;
}

void emit_element(const ElementWork& w, const DofMap& dofs,
                  std::int64_t element_id, la::Triplet* out,
                  la::Contribution* rhs_out) {
  const int pair_fields[7][2] = {{0, 0}, {1, 1}, {0, 2}, {1, 2},
                                 {2, 0}, {2, 1}, {2, 2}};
  std::size_t k = 0;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      for (const auto& [fa, fb] : pair_fields) {
        const double v = w.K[3 * a + fa][3 * b + fb];
        for (const auto& [na, wa] : w.tg[a]) {
          const std::int64_t row = dofs.at(Field(fa), na);
          for (const auto& [nb, wb] : w.tg[b])
            out[k++] = {row, dofs.at(Field(fb), nb), wa * wb * v};
        }
      }
    }
  }
  std::size_t r = 0;
  for (int a = 0; a < 4; ++a)
    for (int f = 0; f < 3; ++f)
      for (const auto& [na, wa] : w.tg[a])
        rhs_out[r++] = {dofs.at(Field(f), na), element_id, wa * w.F[3 * a + f]};
}

}  // namespace

SaddleOperator assemble(const mesh::MeshLevel& level,
                        const geo::DomainGeometry& geom,
                        const geo::QuadratureSpec& quad,
                        const PhysicalParams& params, int threads) {
  const std::int64_t n_leaves = level.forest.num_leaves();
  SaddleOperator op;
  op.dofs.n_p = level.nodes.free_count;
  op.dofs.n_u = 2 * op.dofs.n_p;
  op.dofs.n = 3 * op.dofs.n_p;

  // Pass 1: per-element triplet counts (targets only, no integration), so
  // every thread writes into a pre-assigned slice and the triplet order is
  // identical for any thread count.
  std::vector<std::int64_t> mat_offset(n_leaves + 1, 0);
  std::vector<std::int64_t> rhs_offset(n_leaves + 1, 0);
  parallel_ranges(n_leaves, threads, [&](std::int64_t lo, std::int64_t hi, int) {
    ElementWork w;
    for (std::int64_t e = lo; e < hi; ++e) {
      build_targets(level, e, w);
      mat_offset[e + 1] = static_cast<std::int64_t>(triplet_count(w));
      rhs_offset[e + 1] = static_cast<std::int64_t>(3 * w.weight_sum);
    }
  });
  for (std::int64_t e = 0; e < n_leaves; ++e) {
    mat_offset[e + 1] += mat_offset[e];
    rhs_offset[e + 1] += rhs_offset[e];
  }

  std::vector<la::Triplet> triplets(mat_offset[n_leaves]);
  std::vector<la::Contribution> rhs_contribs(rhs_offset[n_leaves]);
  std::vector<std::int64_t> degenerate(resolve_threads(threads), 0);

  parallel_ranges(n_leaves, threads, [&](std::int64_t lo, std::int64_t hi, int tid) {
    ElementWork w;
    for (std::int64_t e = lo; e < hi; ++e) {
      build_targets(level, e, w);
      integrate_element(level, geom, quad, params, e, w, degenerate[tid]);
      emit_element(w, op.dofs, e, triplets.data() + mat_offset[e],
                   rhs_contribs.data() + rhs_offset[e]);
    }
  });
  for (std::int64_t d : degenerate) op.degenerate_cut_cells += d;

  op.matrix = la::csr_from_triplets(op.dofs.n, op.dofs.n, std::move(triplets));
  op.rhs.assign(op.dofs.n, 0.0);
  la::fixed_order_accumulate(op.rhs, std::move(rhs_contribs));
  return op;
}

void apply_operator(const SaddleOperator& op, std::span<const double> x,
                    std::span<double> y, int threads) {
  la::spmv(op.matrix, x, y, threads);
}

Residual residual(const SaddleOperator& op, std::span<const double> x,
                  int threads) {
  Residual res;
  res.r.resize(op.dofs.n);
  la::spmv(op.matrix, x, res.r, threads);
  for (std::int64_t i = 0; i < op.dofs.n; ++i)
    res.r[i] = op.rhs[i] - res.r[i];
  const double bn = la::det_norm2(op.rhs, threads);
  const double rn = la::det_norm2(res.r, threads);
  if (bn == 0.0) {
    res.relative = rn;
    res.absolute_fallback = true;
  } else {
    res.relative = rn / bn;
  }
  return res;
}

std::array<double, 4> element_nodal_values(const mesh::MeshLevel& level,
                                           const DofMap& dofs, Field field,
                                           std::span<const double> x,
                                           std::int64_t leaf_id) {
  std::array<double, 4> vals{};
  for (int a = 0; a < 4; ++a) {
    const std::int32_t node = level.nodes.leaf_nodes[leaf_id][a];
    const auto& nd = level.nodes.nodes[node];
    if (!nd.hanging) {
      vals[a] = x[dofs.at(field, nd.free_index)];
    } else {
      double v = 0;
      for (const auto& [parent, weight] : level.constraints.rows.at(node))
        v += weight * x[dofs.at(field, level.nodes.nodes[parent].free_index)];
      vals[a] = v;
    }
  }
  return vals;
}

}  // namespace fcs::fem

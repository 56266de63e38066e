#pragma once

// Assembly of the stabilized Q1-Q1 finite cell Stokes system
//
//   [ A  B ] [u]   [f]
//   [ B^T C ] [p] = [g]
//
// with alpha-weighted volume terms, symmetric Nitsche boundary terms on the
// tagged Dirichlet pieces, pressure stabilization through a cell-wise L2
// projection, and hanging-node constraints eliminated by distribution, so
// the assembled system couples free DoFs only.
//
// DoF layout: velocity block first (u_x, u_y interleaved per free node),
// pressure block after it. Free node k has DoFs (2k, 2k+1, n_u + k).

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "fcs/geometry.hpp"
#include "fcs/linalg.hpp"
#include "fcs/mesh.hpp"

namespace fcs::fem {

using VectorFn = std::function<std::array<double, 2>(double, double)>;

struct PhysicalParams {
  double viscosity = 1e-3;    // eta
  double alpha_fict = 1e-10;  // penalization in the fictitious part
  double beta_nitsche = 100;  // lambda = beta * eta / h_K
  // Pressure stabilization on cut cells: project against the alpha-weighted
  // cell mean instead of the full-cell mean (uncut and fictitious cells
  // always use the plain cell mean).
  bool cut_stabilization_weighted = false;
  VectorFn body_force;        // empty -> zero
  std::map<int, VectorFn> dirichlet;  // boundary tag -> w
  std::map<int, VectorFn> neumann;    // boundary tag -> h; untagged pieces
                                      // are natural (no surface integral)
};

enum class Field : std::uint8_t { ux = 0, uy = 1, p = 2 };

struct DofMap {
  std::int64_t n_p = 0;  // one pressure DoF per free node
  std::int64_t n_u = 0;  // = 2 n_p
  std::int64_t n = 0;    // = 3 n_p

  std::int64_t ux(std::int64_t node) const { return 2 * node; }
  std::int64_t uy(std::int64_t node) const { return 2 * node + 1; }
  std::int64_t p(std::int64_t node) const { return n_u + node; }
  std::int64_t at(Field f, std::int64_t node) const {
    return f == Field::p ? p(node) : 2 * node + (f == Field::uy ? 1 : 0);
  }

  struct Location {
    std::int64_t node;
    Field field;
  };
  Location locate(std::int64_t dof) const {
    if (dof < n_u) return {dof / 2, dof % 2 ? Field::uy : Field::ux};
    return {dof - n_u, Field::p};
  }
};

struct SaddleOperator {
  la::Csr matrix;
  std::vector<double> rhs;
  DofMap dofs;
  std::int64_t degenerate_cut_cells = 0;  // grazing cut cells without interface
};

// Element loop over the leaves of `level`. Requires every leaf classified
// (refine_adaptive / classify_forest) and enumerated DoFs. Deterministic for
// any thread count.
SaddleOperator assemble(const mesh::MeshLevel& level,
                        const geo::DomainGeometry& geom,
                        const geo::QuadratureSpec& quad,
                        const PhysicalParams& params, int threads);

// y = L x
void apply_operator(const SaddleOperator& op, std::span<const double> x,
                    std::span<double> y, int threads);

struct Residual {
  std::vector<double> r;  // b - L x
  double relative = 0;    // ||r|| / ||b||, or ||r|| when b = 0
  bool absolute_fallback = false;
};

Residual residual(const SaddleOperator& op, std::span<const double> x,
                  int threads);

// Values of a discrete field at the four corners of a leaf, hanging nodes
// reconstructed through the constraints.
std::array<double, 4> element_nodal_values(const mesh::MeshLevel& level,
                                           const DofMap& dofs, Field field,
                                           std::span<const double> x,
                                           std::int64_t leaf_id);

}  // namespace fcs::fem

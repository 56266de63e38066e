#pragma once

// Adaptive geometric multigrid: nested Q1 transfers built through the
// hanging-node constraints of both levels, operators re-assembled from the
// weak form on every level, V-cycles with configurable pre/post smoothing,
// a dense-LU coarse solve, and standalone iteration to a relative-residual
// target. Optionally simulates a rank partition of the smoother to
// demonstrate process-count independence.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fcs/assembly.hpp"
#include "fcs/mesh.hpp"
#include "fcs/smoother.hpp"

namespace fcs::mg {

struct Transfer {
  la::Csr prolong;      // coarse free DoFs -> fine free DoFs
  la::Csr restrict_op;  // transpose of prolong
};

Transfer build_transfer(const mesh::MeshLevel& coarse,
                        const fem::DofMap& coarse_dofs,
                        const mesh::MeshLevel& fine,
                        const fem::DofMap& fine_dofs);

struct SolverConfig {
  int pre_smooth = 6;
  int post_smooth = 6;
  double omega = 0.8;
  sm::CachePolicy policy = sm::CachePolicy::inverse;
  double target_reduction = 1e-9;
  int max_iterations = 60;
  int threads = 1;
  int partitions = 1;              // simulated ranks (1 = plain apply)
  std::int64_t coarse_cap = 6000;  // dense-LU size limit
  bool pressure_nullspace = false; // deflate the constant-pressure mode
  bool record_checksums = false;   // per-iteration iterate fingerprints
  // Coarse-level operators: re-assembled from the weak form (default) or
  // variational triple products R L P of the fine assembly.
  bool galerkin_coarse = false;
};

struct LevelData {
  mesh::MeshLevel mesh;
  fem::SaddleOperator op;
  sm::SmootherState smoother;   // unused on the coarsest level
  sm::PartitionMap partition;   // filled when partitions > 1
};

struct Hierarchy {
  std::vector<LevelData> levels;   // [0] coarsest .. [L-1] finest
  std::vector<Transfer> transfers; // [l]: levels[l] <-> levels[l+1]
  la::DenseLu coarse_lu;
  std::vector<std::vector<double>> nullspace;  // per level, empty if disabled
  SolverConfig config;
  double setup_seconds = 0;
  double smoother_setup_seconds = 0;
  double smoother_seconds_accum = 0;  // filled by solve()

  const LevelData& fine() const { return levels.back(); }
  LevelData& fine() { return levels.back(); }
};

// Meshes by repeated coarsening, re-assembled operators, smoother per level,
// coarse dense LU. Throws when the coarsest problem exceeds coarse_cap.
Hierarchy build_hierarchy_solver(mesh::Forest fine_forest,
                                 const geo::DomainGeometry& geom,
                                 const geo::QuadratureSpec& quad,
                                 const fem::PhysicalParams& params, int depth,
                                 const SolverConfig& cfg);

// One V-cycle at the given level: nu1 pre-sweeps of x += S(b - Lx), coarse
// residual restriction, recursion with zero initial guess, prolongated
// correction, nu2 post-sweeps. level 0 solves directly.
void vcycle(Hierarchy& h, int level, std::span<double> x,
            std::span<const double> b, int nu1, int nu2);

struct SolveReport {
  std::int64_t iterations = 0;
  std::vector<double> rel_residuals;  // one entry per iteration
  bool converged = false;
  double setup_seconds = 0;
  double solve_seconds = 0;
  double smoother_seconds = 0;  // share of solve_seconds spent smoothing
  std::vector<std::uint64_t> checksums;  // iterate+residual fingerprints
  std::string config_echo;
};

// Standalone multigrid iteration from x = 0 for the fine-level right-hand
// side (or a caller-provided b). Non-convergence is reported, not thrown.
SolveReport solve(Hierarchy& h, std::vector<double>& x,
                  const std::vector<double>* b_override = nullptr);

std::uint64_t fnv1a64(const void* data, std::size_t bytes);

}  // namespace fcs::mg

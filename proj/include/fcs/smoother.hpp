#pragma once

// Restricted additive smoother
//
//   S = sum_i  Rt_i^T  omega  L_i^{-1}  R_i
//
// with one subdomain per pressure node: R_i extracts the pressure DoF, the
// pressures connected to it, and every velocity DoF connected to any of
// those pressures (connectivity = stored sparsity pattern); Rt_i^T injects
// only the 1+d DoFs living on node i. Local problems are solved exactly by
// dense LU. Three cache policies trade setup memory against per-sweep work;
// all three share the same factorization arithmetic so their corrections
// agree to rounding noise.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fcs/assembly.hpp"
#include "fcs/linalg.hpp"

namespace fcs::sm {

enum class CachePolicy { none, matrix, inverse };
CachePolicy parse_policy(const std::string& name);
const char* policy_name(CachePolicy p);

struct Subdomain {
  std::int64_t pressure_node = 0;
  std::vector<std::int32_t> input_dofs;        // sorted ascending
  std::array<std::int32_t, 3> output_dofs{};   // {u_x, u_y, p} of the node
  std::array<std::int32_t, 3> output_rows{};   // positions within input_dofs
};

std::vector<Subdomain> build_subdomains(const fem::SaddleOperator& op);

struct MemoryLedger {
  std::int64_t cached_matrix_bytes = 0;     // sparse local blocks
  std::int64_t cached_slab_bytes = 0;       // stored inverse rows
  std::int64_t index_bytes = 0;             // subdomain index sets
  std::int64_t dense_equivalent_bytes = 0;  // sum of m_i^2 doubles (reporting)
};

struct SmootherState {
  CachePolicy policy = CachePolicy::inverse;
  double omega = 0.8;
  std::vector<Subdomain> subdomains;
  std::int64_t max_block = 0;  // largest input set

  // cache_matrix: per-subdomain sparse local blocks, local column indices
  struct SparseBlock {
    std::vector<std::int32_t> row_ptr;
    std::vector<std::int32_t> cols;
    std::vector<double> vals;
  };
  std::vector<SparseBlock> blocks;

  // cache_inverse: (1+d) x m_i row slabs of L_i^{-1}, rows in output order
  std::vector<std::int64_t> slab_offset;
  std::vector<double> slab;

  MemoryLedger ledger;
};

// Builds the subdomains and the policy-dependent caches. Throws
// la::SingularBlockError naming the pressure node on a singular block.
SmootherState init_smoother(const fem::SaddleOperator& op, CachePolicy policy,
                            double omega, int threads);

// correction = S r. correction is overwritten; bitwise identical for any
// thread count.
void apply(const SmootherState& state, const fem::SaddleOperator& op,
           std::span<const double> r, std::span<double> correction,
           int threads);

struct PartitionMap {
  int ranks = 1;
  std::vector<std::int64_t> bounds;     // size ranks+1 over pressure ids
  std::vector<std::int32_t> owner;      // rank per pressure id
  std::vector<std::int64_t> offprocess; // subdomains reading non-local DoFs

  int owner_of(std::int64_t pressure_id) const { return owner[pressure_id]; }
};

// Contiguous blocks of the deterministic node order.
PartitionMap make_partition(const SmootherState& state,
                            const fem::DofMap& dofs, int ranks);

// Rank-by-rank application over owned subdomains with rank-local
// accumulation, merged through fixed_order_accumulate; bitwise equal to
// apply() for every rank count.
void apply_partitioned(const SmootherState& state,
                       const fem::SaddleOperator& op, std::span<const double> r,
                       const PartitionMap& partition,
                       std::span<double> correction, int threads);

inline const MemoryLedger& memory_report(const SmootherState& s) {
  return s.ledger;
}

}  // namespace fcs::sm

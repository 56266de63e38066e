#include "fcs/smoother.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

#include "fcs/kernels.hpp"
#include "fcs/parallel.hpp"

namespace fcs::sm {

CachePolicy parse_policy(const std::string& name) {
  if (name == "cache_none") return CachePolicy::none;
  if (name == "cache_matrix") return CachePolicy::matrix;
  if (name == "cache_inverse") return CachePolicy::inverse;
  throw std::runtime_error("unknown cache policy '" + name +
                           "' (expected cache_none|cache_matrix|cache_inverse)");
}

const char* policy_name(CachePolicy p) {
  switch (p) {
    case CachePolicy::none: return "cache_none";
    case CachePolicy::matrix: return "cache_matrix";
    case CachePolicy::inverse: return "cache_inverse";
  }
  return "?";
}

std::vector<Subdomain> build_subdomains(const fem::SaddleOperator& op) {
  const fem::DofMap& dofs = op.dofs;
  const la::Csr& L = op.matrix;
  std::vector<Subdomain> subs(dofs.n_p);
  for (std::int64_t i = 0; i < dofs.n_p; ++i) {
    Subdomain& s = subs[i];
    s.pressure_node = i;
    // pressures connected to p_i: stored entries of the pressure-pressure
    // block row (always includes the diagonal)
    std::vector<std::int32_t> pressures;
    {
      const std::int64_t row = dofs.p(i);
      for (std::int64_t k = L.row_ptr[row]; k < L.row_ptr[row + 1]; ++k)
        if (L.cols[k] >= dofs.n_u) pressures.push_back(L.cols[k]);
    }
    // velocities connected to any of those pressures: stored velocity
    // columns of their B^T rows
    std::vector<std::int32_t> velocities;
    for (std::int32_t prow : pressures) {
      for (std::int64_t k = L.row_ptr[prow]; k < L.row_ptr[prow + 1]; ++k) {
        if (L.cols[k] < dofs.n_u) velocities.push_back(L.cols[k]);
      }
    }
    std::sort(velocities.begin(), velocities.end());
    velocities.erase(std::unique(velocities.begin(), velocities.end()),
                     velocities.end());
    s.input_dofs = std::move(velocities);
    s.input_dofs.insert(s.input_dofs.end(), pressures.begin(), pressures.end());

    s.output_dofs = {std::int32_t(dofs.ux(i)), std::int32_t(dofs.uy(i)),
                     std::int32_t(dofs.p(i))};
    for (int k = 0; k < 3; ++k) {
      const auto it = std::lower_bound(s.input_dofs.begin(), s.input_dofs.end(),
                                       s.output_dofs[k]);
      if (it == s.input_dofs.end() || *it != s.output_dofs[k])
        throw std::logic_error("build_subdomains: output DoF missing from input set");
      s.output_rows[k] =
          static_cast<std::int32_t>(it - s.input_dofs.begin());
    }
  }
  return subs;
}

namespace {

// Scratch buffers reused across subdomains by one worker thread.
struct Workspace {
  std::vector<double> block;   // m*m dense
  std::vector<double> local;   // gathered residual / solution
  std::vector<std::int32_t> piv;

  void ensure(std::int64_t m) {
    if (static_cast<std::int64_t>(local.size()) < m) {
      block.resize(m * m);
      local.resize(m);
      piv.resize(m);
    }
  }
};

void densify_block(const SmootherState::SparseBlock& sb, std::int64_t m,
                   double* out) {
  std::fill(out, out + m * m, 0.0);
  for (std::int64_t r = 0; r < m; ++r)
    for (std::int32_t k = sb.row_ptr[r]; k < sb.row_ptr[r + 1]; ++k)
      out[r * m + sb.cols[k]] = sb.vals[k];
}

// Correction of one subdomain: out[k] = omega * (L_i^{-1} r_loc)[output_rows[k]]
void subdomain_correction(const SmootherState& state,
                          const fem::SaddleOperator& op,
                          std::span<const double> r, std::int64_t i,
                          Workspace& ws, double out[3]) {
  const Subdomain& s = state.subdomains[i];
  const std::int64_t m = static_cast<std::int64_t>(s.input_dofs.size());
  ws.ensure(m);
  const kern::Ops& k = kern::ops();
  k.gather(ws.local.data(), r.data(), s.input_dofs.data(), m);
  switch (state.policy) {
    case CachePolicy::none:
      la::extract_submatrix_into(op.matrix, s.input_dofs, s.input_dofs,
                                 ws.block.data());
      la::lu_factor_raw(ws.block.data(), m, ws.piv.data(), "");
      la::lu_solve_raw(ws.block.data(), ws.piv.data(), m, ws.local.data());
      for (int c = 0; c < 3; ++c)
        out[c] = state.omega * ws.local[s.output_rows[c]];
      break;
    case CachePolicy::matrix:
      densify_block(state.blocks[i], m, ws.block.data());
      la::lu_factor_raw(ws.block.data(), m, ws.piv.data(), "");
      la::lu_solve_raw(ws.block.data(), ws.piv.data(), m, ws.local.data());
      for (int c = 0; c < 3; ++c)
        out[c] = state.omega * ws.local[s.output_rows[c]];
      break;
    case CachePolicy::inverse: {
      const double* rows = state.slab.data() + state.slab_offset[i];
      for (int c = 0; c < 3; ++c)
        out[c] = state.omega * k.dot(rows + c * m, ws.local.data(),
                                     static_cast<std::size_t>(m));
      break;
    }
  }
}

}  // namespace

SmootherState init_smoother(const fem::SaddleOperator& op, CachePolicy policy,
                            double omega, int threads) {
  SmootherState state;
  state.policy = policy;
  state.omega = omega;
  state.subdomains = build_subdomains(op);
  const std::int64_t n_s = static_cast<std::int64_t>(state.subdomains.size());

  for (const Subdomain& s : state.subdomains) {
    state.max_block = std::max<std::int64_t>(
        state.max_block, static_cast<std::int64_t>(s.input_dofs.size()));
    state.ledger.index_bytes +=
        static_cast<std::int64_t>(s.input_dofs.size()) * sizeof(std::int32_t) +
        sizeof(s.output_dofs) + sizeof(s.output_rows);
    const std::int64_t m = static_cast<std::int64_t>(s.input_dofs.size());
    state.ledger.dense_equivalent_bytes += m * m * std::int64_t(sizeof(double));
  }

  if (policy == CachePolicy::matrix) {
    state.blocks.resize(n_s);
    parallel_ranges(n_s, threads, [&](std::int64_t lo, std::int64_t hi, int) {
      for (std::int64_t i = lo; i < hi; ++i) {
        const Subdomain& s = state.subdomains[i];
        const std::int64_t m = static_cast<std::int64_t>(s.input_dofs.size());
        SmootherState::SparseBlock& sb = state.blocks[i];
        sb.row_ptr.assign(m + 1, 0);
        for (std::int64_t r = 0; r < m; ++r) {
          const std::int64_t grow = s.input_dofs[r];
          std::int64_t k = op.matrix.row_ptr[grow];
          const std::int64_t kend = op.matrix.row_ptr[grow + 1];
          std::int64_t j = 0;
          while (k < kend && j < m) {
            const std::int32_t c = op.matrix.cols[k];
            if (c < s.input_dofs[j]) {
              ++k;
            } else if (c > s.input_dofs[j]) {
              ++j;
            } else {
              sb.cols.push_back(static_cast<std::int32_t>(j));
              sb.vals.push_back(op.matrix.vals[k]);
              ++k;
              ++j;
            }
          }
          sb.row_ptr[r + 1] = static_cast<std::int32_t>(sb.cols.size());
        }
      }
    });
    for (const auto& sb : state.blocks)
      state.ledger.cached_matrix_bytes +=
          sb.vals.size() * sizeof(double) + sb.cols.size() * sizeof(std::int32_t) +
          sb.row_ptr.size() * sizeof(std::int32_t);
  }

  if (policy == CachePolicy::inverse) {
    state.slab_offset.assign(n_s + 1, 0);
    for (std::int64_t i = 0; i < n_s; ++i)
      state.slab_offset[i + 1] =
          state.slab_offset[i] +
          3 * static_cast<std::int64_t>(state.subdomains[i].input_dofs.size());
    state.slab.assign(state.slab_offset[n_s], 0.0);
    std::vector<std::string> errors(resolve_threads(threads));
    parallel_ranges(n_s, threads, [&](std::int64_t lo, std::int64_t hi, int tid) {
      Workspace ws;
      std::vector<double> unit;
      try {
        for (std::int64_t i = lo; i < hi; ++i) {
          const Subdomain& s = state.subdomains[i];
          const std::int64_t m = static_cast<std::int64_t>(s.input_dofs.size());
          ws.ensure(m);
          la::extract_submatrix_into(op.matrix, s.input_dofs, s.input_dofs,
                                     ws.block.data());
          const std::string label =
              "for pressure node " + std::to_string(s.pressure_node);
          la::lu_factor_raw(ws.block.data(), m, ws.piv.data(), label.c_str());
          unit.assign(m, 0.0);
          double* rows = state.slab.data() + state.slab_offset[i];
          for (int c = 0; c < 3; ++c) {
            // row (output_rows[c]) of L_i^{-1} via the adjoint system
            unit[s.output_rows[c]] = 1.0;
            std::copy(unit.begin(), unit.end(), rows + c * m);
            la::lu_solve_transposed_raw(ws.block.data(), ws.piv.data(), m,
                                        rows + c * m);
            unit[s.output_rows[c]] = 0.0;
          }
        }
      } catch (const std::exception& e) {
        errors[tid] = e.what();
      }
    });
    for (const auto& e : errors)
      if (!e.empty()) throw la::SingularBlockError(e);
    state.ledger.cached_slab_bytes =
        static_cast<std::int64_t>(state.slab.size()) * sizeof(double);
  }

  return state;
}

void apply(const SmootherState& state, const fem::SaddleOperator& op,
           std::span<const double> r, std::span<double> correction,
           int threads) {
  if (static_cast<std::int64_t>(r.size()) != op.dofs.n ||
      static_cast<std::int64_t>(correction.size()) != op.dofs.n)
    throw std::invalid_argument("smoother apply: dimension mismatch");
  const std::int64_t n_s = static_cast<std::int64_t>(state.subdomains.size());
  std::vector<la::Contribution> contribs(3 * n_s);
  parallel_ranges(n_s, threads, [&](std::int64_t lo, std::int64_t hi, int) {
    Workspace ws;
    double out[3];
    for (std::int64_t i = lo; i < hi; ++i) {
      subdomain_correction(state, op, r, i, ws, out);
      for (int c = 0; c < 3; ++c)
        contribs[3 * i + c] = {state.subdomains[i].output_dofs[c], i, out[c]};
    }
  });
  std::fill(correction.begin(), correction.end(), 0.0);
  la::fixed_order_accumulate(correction, std::move(contribs));
}

PartitionMap make_partition(const SmootherState& state,
                            const fem::DofMap& dofs, int ranks) {
  if (ranks < 1) throw std::invalid_argument("make_partition: ranks < 1");
  PartitionMap pm;
  pm.ranks = ranks;
  const std::int64_t n_p = dofs.n_p;
  pm.bounds.resize(ranks + 1);
  for (int r = 0; r <= ranks; ++r) pm.bounds[r] = n_p * r / ranks;
  pm.owner.resize(n_p);
  for (int r = 0; r < ranks; ++r)
    for (std::int64_t i = pm.bounds[r]; i < pm.bounds[r + 1]; ++i)
      pm.owner[i] = r;
  for (const Subdomain& s : state.subdomains) {
    const int own = pm.owner[s.pressure_node];
    for (std::int32_t dof : s.input_dofs) {
      const auto loc = dofs.locate(dof);
      if (pm.owner[loc.node] != own) {
        pm.offprocess.push_back(s.pressure_node);
        break;
      }
    }
  }
  return pm;
}

void apply_partitioned(const SmootherState& state,
                       const fem::SaddleOperator& op, std::span<const double> r,
                       const PartitionMap& partition,
                       std::span<double> correction, int threads) {
  const std::int64_t n_s = static_cast<std::int64_t>(state.subdomains.size());
  if (static_cast<std::int64_t>(partition.owner.size()) != op.dofs.n_p ||
      partition.bounds.empty() || partition.bounds.front() != 0 ||
      partition.bounds.back() != op.dofs.n_p)
    throw std::invalid_argument(
        "apply_partitioned: partition does not cover the pressure ids");
  (void)n_s;

  std::vector<la::Contribution> merged;
  std::vector<double> rank_local(op.dofs.n);
  for (int rank = 0; rank < partition.ranks; ++rank) {
    const std::int64_t lo = partition.bounds[rank];
    const std::int64_t hi = partition.bounds[rank + 1];
    // Owned subdomains only; input DoFs may read anywhere in r (the
    // simulated ghost exchange).
    std::vector<la::Contribution> local((hi - lo) * 3);
    parallel_ranges(hi - lo, threads, [&](std::int64_t a, std::int64_t b, int) {
      Workspace ws;
      double out[3];
      for (std::int64_t t = a; t < b; ++t) {
        const std::int64_t i = lo + t;
        subdomain_correction(state, op, r, i, ws, out);
        for (int c = 0; c < 3; ++c)
          local[3 * t + c] = {state.subdomains[i].output_dofs[c], i, out[c]};
      }
    });
    // rank-local accumulation, then the touched entries contribute to the
    // global merge
    std::fill(rank_local.begin(), rank_local.end(), 0.0);
    std::vector<std::int64_t> touched;
    touched.reserve(local.size());
    for (const auto& c : local) touched.push_back(c.index);
    la::fixed_order_accumulate(rank_local, std::move(local));
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    for (std::int64_t dof : touched)
      merged.push_back({dof, rank, rank_local[dof]});
  }
  std::fill(correction.begin(), correction.end(), 0.0);
  la::fixed_order_accumulate(correction, std::move(merged));
}

}  // namespace fcs::sm

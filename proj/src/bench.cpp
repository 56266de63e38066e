#include "fcs/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "fcs/kernels.hpp"
#include "fcs/parallel.hpp"

namespace fcs::bench {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Bilinear {
  double N[4];
};

inline Bilinear shapes_at(const geo::Box& cell, double x, double y) {
  const double xi = (x - cell.x0) / cell.width();
  const double et = (y - cell.y0) / cell.height();
  return {{(1 - xi) * (1 - et), xi * (1 - et), (1 - xi) * et, xi * et}};
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

}  // namespace

std::array<double, 2> inflow_eval(const InflowProfile& profile, double y,
                                  bool* clamped) {
  if (y < 0.0 || y > profile.height) {
    if (clamped) *clamped = true;
    return {0.0, 0.0};
  }
  if (clamped) *clamped = false;
  const double h = profile.height;
  return {4.0 * profile.u_bar * y * (h - y) / (h * h), 0.0};
}

Case build_case(const RunConfig& cfg) {
  Case c;
  c.quad.subdivision_depth = cfg.subdivision_depth;
  c.quad.gauss_order = cfg.gauss_order;
  c.quad.surface_resolution = cfg.surface_resolution;
  c.quad.alpha_fict = cfg.alpha_fict;
  c.params.viscosity = cfg.viscosity;
  c.params.alpha_fict = cfg.alpha_fict;
  c.params.beta_nitsche = cfg.beta_nitsche;

  if (cfg.case_name == "channel") {
    const double len = cfg.channel_length, hgt = cfg.channel_height;
    geo::LevelSet omega = geo::half_plane(-1, 0, 0, kTagInflow);
    omega = geo::ls_intersection(omega, geo::half_plane(1, 0, -len, kTagOutflow));
    omega = geo::ls_intersection(omega, geo::half_plane(0, -1, 0, kTagWall));
    omega = geo::ls_intersection(omega, geo::half_plane(0, 1, -hgt, kTagWall));
    omega = geo::ls_intersection(
        omega, geo::ls_complement(geo::circle(cfg.cylinder_x, cfg.cylinder_y,
                                              0.5 * cfg.cylinder_diameter,
                                              kTagCylinder)));
    c.roots = {cfg.root_cells_x, cfg.root_cells_y, cfg.box_x0, cfg.box_y0,
               cfg.root_cell_size};
    c.geometry = geo::DomainGeometry::immersed(std::move(omega),
                                               c.roots.bounds());
    const InflowProfile profile{cfg.inflow_peak, hgt};
    c.params.dirichlet[kTagInflow] = [profile](double, double y) {
      return inflow_eval(profile, y);
    };
    auto zero = [](double, double) { return std::array<double, 2>{0.0, 0.0}; };
    c.params.dirichlet[kTagWall] = zero;
    c.params.dirichlet[kTagCylinder] = zero;
    // outflow: homogeneous natural condition, no surface integral
    return c;
  }

  if (cfg.case_name == "mms") {
    // Boundary-fitted unit square, alpha = 1 everywhere, Nitsche Dirichlet
    // on all four sides; divergence-free manufactured solution.
    c.roots = {1, 1, 0, 0, 1};
    c.geometry = geo::DomainGeometry::fitted(c.roots.bounds(), {0, 1, 2, 3});
    c.pressure_nullspace = true;
    const double s = cfg.mms_scale;
    const double eta = cfg.viscosity;
    c.exact_velocity = [s](double x, double y) {
      return std::array<double, 2>{s * std::sin(kPi * x) * std::sin(kPi * y),
                                   s * std::cos(kPi * x) * std::cos(kPi * y)};
    };
    c.exact_pressure = [s](double x, double y) {
      return s * std::sin(kPi * x) * std::cos(kPi * y);
    };
    c.params.body_force = [s, eta](double x, double y) {
      const double lap = 2 * kPi * kPi * eta * s;
      return std::array<double, 2>{
          lap * std::sin(kPi * x) * std::sin(kPi * y) +
              s * kPi * std::cos(kPi * x) * std::cos(kPi * y),
          lap * std::cos(kPi * x) * std::cos(kPi * y) -
              s * kPi * std::sin(kPi * x) * std::sin(kPi * y)};
    };
    for (int tag = 0; tag < 4; ++tag)
      c.params.dirichlet[tag] = c.exact_velocity;
    return c;
  }

  throw std::runtime_error("unknown case '" + cfg.case_name +
                           "' (expected channel|mms)");
}

mesh::Forest build_fine_forest(const Case& c, const RunConfig& cfg) {
  mesh::Forest f = mesh::Forest::uniform(c.roots, cfg.base_level);
  f = mesh::refine_adaptive(std::move(f), c.geometry,
                            std::max(cfg.base_level, cfg.r_max));
  return f;
}

mg::SolverConfig solver_config(const RunConfig& cfg) {
  mg::SolverConfig sc;
  sc.pre_smooth = cfg.pre_smooth;
  sc.post_smooth = cfg.post_smooth;
  sc.omega = cfg.omega;
  sc.policy = sm::parse_policy(cfg.policy);
  sc.target_reduction = cfg.target_reduction;
  sc.max_iterations = cfg.max_iterations;
  sc.threads = resolve_threads(cfg.threads);
  sc.partitions = cfg.partitions;
  sc.coarse_cap = cfg.coarse_cap;
  return sc;
}

Problem build_problem(const RunConfig& cfg) {
  kern::force_backend(kern::parse_backend(cfg.kernels));
  Problem p{build_case(cfg), {}};
  mg::SolverConfig sc = solver_config(cfg);
  sc.pressure_nullspace = p.c.pressure_nullspace;
  mesh::Forest fine = build_fine_forest(p.c, cfg);
  p.hierarchy = mg::build_hierarchy_solver(std::move(fine), p.c.geometry,
                                           p.c.quad, p.c.params, cfg.levels, sc);
  return p;
}

double velocity_l2_error(const mesh::MeshLevel& level, const fem::DofMap& dofs,
                         std::span<const double> x, const fem::VectorFn& exact) {
  const auto rule = geo::gauss_rule(4);
  double sum = 0;
  for (std::int64_t e = 0; e < level.forest.num_leaves(); ++e) {
    const geo::Box cell = level.forest.leaf_box(e);
    const auto ux = fem::element_nodal_values(level, dofs, fem::Field::ux, x, e);
    const auto uy = fem::element_nodal_values(level, dofs, fem::Field::uy, x, e);
    const double jac = 0.25 * cell.width() * cell.height();
    for (const auto& [ty, wy] : rule) {
      for (const auto& [tx, wx] : rule) {
        const double px = 0.5 * (cell.x0 + cell.x1) + 0.5 * cell.width() * tx;
        const double py = 0.5 * (cell.y0 + cell.y1) + 0.5 * cell.height() * ty;
        const Bilinear s = shapes_at(cell, px, py);
        double uhx = 0, uhy = 0;
        for (int a = 0; a < 4; ++a) {
          uhx += s.N[a] * ux[a];
          uhy += s.N[a] * uy[a];
        }
        const auto ue = exact(px, py);
        const double dx = uhx - ue[0], dy = uhy - ue[1];
        sum += wx * wy * jac * (dx * dx + dy * dy);
      }
    }
  }
  return std::sqrt(sum);
}

double physical_velocity_l2_norm(const Case& c, const mesh::MeshLevel& level,
                                 const fem::DofMap& dofs,
                                 std::span<const double> x) {
  double sum = 0;
  for (std::int64_t e = 0; e < level.forest.num_leaves(); ++e) {
    const geo::Box cell = level.forest.leaf_box(e);
    const geo::VolumeQuadrature vq = c.geometry.volume_quadrature(cell, c.quad);
    const auto ux = fem::element_nodal_values(level, dofs, fem::Field::ux, x, e);
    const auto uy = fem::element_nodal_values(level, dofs, fem::Field::uy, x, e);
    for (std::size_t q = 0; q < vq.size(); ++q) {
      if (vq.alpha[q] != 1.0) continue;
      const Bilinear s = shapes_at(cell, vq.x[q], vq.y[q]);
      double uhx = 0, uhy = 0;
      for (int a = 0; a < 4; ++a) {
        uhx += s.N[a] * ux[a];
        uhy += s.N[a] * uy[a];
      }
      sum += vq.w[q] * (uhx * uhx + uhy * uhy);
    }
  }
  return std::sqrt(sum);
}

MmsResult run_mms(const RunConfig& cfg, std::ostream* log) {
  MmsResult result;
  for (int step = 0; step < 3; ++step) {
    RunConfig rc = cfg;
    rc.case_name = "mms";
    rc.base_level = cfg.base_level + step;
    rc.r_max = rc.base_level;
    rc.levels = std::max(2, rc.base_level - 2);
    Problem p = build_problem(rc);
    std::vector<double> x;
    const mg::SolveReport rep = mg::solve(p.hierarchy, x);
    if (!rep.converged)
      throw std::runtime_error("mms solve did not converge at level " +
                               std::to_string(rc.base_level));
    const auto& fine = p.hierarchy.fine();
    MmsRun run;
    run.h = 1.0 / double(std::int64_t(1) << rc.base_level);
    run.error =
        velocity_l2_error(fine.mesh, fine.op.dofs, x, p.c.exact_velocity);

    // consistency sanity: nodal interpolant of the exact solution as the
    // initial guess must start below the zero guess residual
    std::vector<double> xi(fine.op.dofs.n, 0.0);
    for (const auto& node : fine.mesh.nodes.nodes) {
      if (node.hanging) continue;
      const double px = fine.mesh.forest.grid().px(node.gx);
      const double py = fine.mesh.forest.grid().py(node.gy);
      const auto ue = p.c.exact_velocity(px, py);
      xi[fine.op.dofs.ux(node.free_index)] = ue[0];
      xi[fine.op.dofs.uy(node.free_index)] = ue[1];
      xi[fine.op.dofs.p(node.free_index)] = p.c.exact_pressure(px, py);
    }
    run.initial_residual_with_interpolant =
        fem::residual(fine.op, xi, p.hierarchy.config.threads).relative;

    result.runs.push_back(run);
    if (log)
      *log << "mms level " << rc.base_level << ": h=" << run.h
           << " l2_velocity_error=" << run.error
           << " iterations=" << rep.iterations << "\n";
  }
  for (std::size_t i = 1; i < result.runs.size(); ++i)
    result.rates.push_back(std::log2(result.runs[i - 1].error /
                                     result.runs[i].error));
  return result;
}

void write_report_csv(const mg::SolveReport& rep, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "iteration,relative_residual\n";
  for (std::size_t i = 0; i < rep.rel_residuals.size(); ++i)
    out << (i + 1) << "," << g17(rep.rel_residuals[i]) << "\n";
  const double per_iter =
      rep.iterations > 0 ? rep.smoother_seconds / double(rep.iterations) : 0.0;
  out << "# summary: iterations=" << rep.iterations
      << " converged=" << (rep.converged ? 1 : 0)
      << " setup_s=" << g17(rep.setup_seconds)
      << " solve_s=" << g17(rep.solve_seconds)
      << " smoother_s_per_iteration=" << g17(per_iter) << "\n";
}

namespace {

void write_solution_csv(const Problem& p, std::span<const double> x,
                        const std::string& path) {
  const auto& fine = p.hierarchy.fine();
  const auto& dofs = fine.op.dofs;
  std::ofstream out = open_out(path);
  out << "node,x,y,u_x,u_y,p,alpha_flag\n";
  for (std::size_t i = 0; i < fine.mesh.nodes.nodes.size(); ++i) {
    const auto& node = fine.mesh.nodes.nodes[i];
    const double px = fine.mesh.forest.grid().px(node.gx);
    const double py = fine.mesh.forest.grid().py(node.gy);
    double vals[3];
    if (!node.hanging) {
      vals[0] = x[dofs.ux(node.free_index)];
      vals[1] = x[dofs.uy(node.free_index)];
      vals[2] = x[dofs.p(node.free_index)];
    } else {
      vals[0] = vals[1] = vals[2] = 0;
      for (const auto& [parent, w] : fine.mesh.constraints.rows.at(i)) {
        const auto pf = fine.mesh.nodes.nodes[parent].free_index;
        vals[0] += w * x[dofs.ux(pf)];
        vals[1] += w * x[dofs.uy(pf)];
        vals[2] += w * x[dofs.p(pf)];
      }
    }
    const int alpha_flag = p.c.geometry.levelset(px, py) < 0 ? 1 : 0;
    out << i << "," << g17(px) << "," << g17(py) << "," << g17(vals[0]) << ","
        << g17(vals[1]) << "," << g17(vals[2]) << "," << alpha_flag << "\n";
  }
}

void set_partitions(mg::Hierarchy& h, int ranks) {
  h.config.partitions = ranks;
  for (std::size_t l = 1; l < h.levels.size(); ++l) {
    if (ranks > 1)
      h.levels[l].partition = sm::make_partition(h.levels[l].smoother,
                                                 h.levels[l].op.dofs, ranks);
    else
      h.levels[l].partition = {};
  }
}

bool reports_bitwise_equal(const mg::SolveReport& a, const mg::SolveReport& b,
                           std::int64_t* first_diff) {
  const std::size_t n = std::max(a.rel_residuals.size(), b.rel_residuals.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (i >= a.rel_residuals.size() || i >= b.rel_residuals.size() ||
        std::memcmp(&a.rel_residuals[i], &b.rel_residuals[i], sizeof(double)) != 0 ||
        i >= a.checksums.size() || i >= b.checksums.size() ||
        a.checksums[i] != b.checksums[i]) {
      if (first_diff) *first_diff = static_cast<std::int64_t>(i) + 1;
      return false;
    }
  }
  return true;
}

}  // namespace

int cmd_solve(const RunConfig& cfg, std::ostream& log) {
  Problem p = build_problem(cfg);
  p.hierarchy.config.record_checksums = cfg.partitions > 1;
  std::vector<double> x;
  mg::SolveReport rep = mg::solve(p.hierarchy, x);
  rep.config_echo = cfg.emit();
  write_report_csv(rep, cfg.report_csv);
  write_solution_csv(p, x, cfg.solution_csv);
  const auto& fine = p.hierarchy.fine();
  log << "solve: case=" << cfg.case_name << " dofs=" << fine.op.dofs.n
      << " levels=" << p.hierarchy.levels.size()
      << " policy=" << cfg.policy << " kernels="
      << kern::backend_name(kern::active_backend()) << "\n";
  log << "solve: iterations=" << rep.iterations << " converged="
      << (rep.converged ? "yes" : "no") << " final_ratio="
      << (rep.rel_residuals.empty() ? 1.0 : rep.rel_residuals.back())
      << " setup_s=" << rep.setup_seconds << " solve_s=" << rep.solve_seconds
      << "\n";
  if (cfg.partitions > 1) {
    // exact-replication note: the partitioned run must match P = 1 bitwise
    std::vector<double> x1;
    set_partitions(p.hierarchy, 1);
    const mg::SolveReport base = mg::solve(p.hierarchy, x1);
    std::int64_t diff = 0;
    if (reports_bitwise_equal(rep, base, &diff))
      log << "solve: partitions=" << cfg.partitions
          << " iterate checksums bitwise-identical to P=1\n";
    else {
      log << "solve: partition mismatch at iteration " << diff << "\n";
      return 2;
    }
  }
  if (fine.op.degenerate_cut_cells > 0)
    log << "solve: note: " << fine.op.degenerate_cut_cells
        << " grazing cut cells without interface segments\n";
  return rep.converged ? 0 : 2;
}

int cmd_mms(const RunConfig& cfg, std::ostream& log) {
  const MmsResult res = run_mms(cfg, &log);
  log << "h,l2_velocity_error,rate\n";
  for (std::size_t i = 0; i < res.runs.size(); ++i) {
    log << g17(res.runs[i].h) << "," << g17(res.runs[i].error) << ",";
    if (i == 0)
      log << "-";
    else
      log << g17(res.rates[i - 1]);
    log << "\n";
  }
  const double final_rate = res.rates.back();
  log << "mms: observed rate " << final_rate << " (verification threshold 1.5)\n";
  return final_rate >= 1.5 ? 0 : 2;
}

int cmd_policy_bench(const RunConfig& cfg, int sweeps, const std::string& csv_path,
                     std::ostream& log) {
  kern::force_backend(kern::parse_backend(cfg.kernels));
  const Case c = build_case(cfg);
  mesh::Forest forest = build_fine_forest(c, cfg);
  mesh::classify_forest(forest, c.geometry);
  mesh::MeshLevel level = mesh::build_mesh_level(std::move(forest));
  const int threads = resolve_threads(cfg.threads);
  const fem::SaddleOperator op =
      fem::assemble(level, c.geometry, c.quad, c.params, threads);
  log << "policy-bench: dofs=" << op.dofs.n << " pressure_nodes=" << op.dofs.n_p
      << " sweeps=" << sweeps << " threads=" << threads << "\n";

  std::ofstream csv = open_out(csv_path);
  csv << "policy,setup_seconds,per_sweep_seconds,cached_bytes,sweeps_timed\n";
  using Clock = std::chrono::steady_clock;
  for (sm::CachePolicy policy : {sm::CachePolicy::none, sm::CachePolicy::matrix,
                                 sm::CachePolicy::inverse}) {
    const auto t0 = Clock::now();
    const sm::SmootherState state =
        sm::init_smoother(op, policy, cfg.omega, threads);
    const double setup = std::chrono::duration<double>(Clock::now() - t0).count();
    std::vector<double> corr(op.dofs.n);
    sm::apply(state, op, op.rhs, corr, threads);  // warm up
    std::vector<double> times(sweeps);
    for (int s = 0; s < sweeps; ++s) {
      const auto ts = Clock::now();
      sm::apply(state, op, op.rhs, corr, threads);
      times[s] = std::chrono::duration<double>(Clock::now() - ts).count();
    }
    std::sort(times.begin(), times.end());
    const double median = times[times.size() / 2];
    std::int64_t cached = 0;
    switch (policy) {
      case sm::CachePolicy::none: cached = 0; break;
      case sm::CachePolicy::matrix: cached = state.ledger.cached_matrix_bytes; break;
      case sm::CachePolicy::inverse: cached = state.ledger.cached_slab_bytes; break;
    }
    csv << sm::policy_name(policy) << "," << g17(setup) << "," << g17(median)
        << "," << cached << "," << sweeps << "\n";
    log << "policy-bench: " << sm::policy_name(policy) << " setup_s=" << setup
        << " per_sweep_s=" << median << " cached_bytes=" << cached << "\n";
  }
  log << "policy-bench: wrote " << csv_path << "\n";
  return 0;
}

int cmd_partition_check(const RunConfig& cfg, bool negative_control,
                        std::ostream& log) {
  Problem p = build_problem(cfg);
  p.hierarchy.config.record_checksums = true;

  if (negative_control) {
    la::testing::set_defeat_deterministic_accumulation(true);
    set_partitions(p.hierarchy, 1);
    std::vector<double> x1;
    const mg::SolveReport r1 = mg::solve(p.hierarchy, x1);
    set_partitions(p.hierarchy, 4);
    std::vector<double> x4;
    const mg::SolveReport r4 = mg::solve(p.hierarchy, x4);
    la::testing::set_defeat_deterministic_accumulation(false);
    std::int64_t diff = 0;
    if (!reports_bitwise_equal(r1, r4, &diff)) {
      log << "partition-check: negative control detected the determinism "
             "violation at iteration "
          << diff << " (as intended)\n";
      return 0;
    }
    log << "partition-check: negative control FAILED to detect the violation\n";
    return 2;
  }

  std::vector<double> x1;
  set_partitions(p.hierarchy, 1);
  const mg::SolveReport base = mg::solve(p.hierarchy, x1);
  log << "partition-check: P=1 iterations=" << base.iterations << "\n";
  for (int ranks : {2, 4, 8}) {
    set_partitions(p.hierarchy, ranks);
    std::vector<double> xp;
    const mg::SolveReport rep = mg::solve(p.hierarchy, xp);
    std::int64_t diff = 0;
    if (!reports_bitwise_equal(base, rep, &diff)) {
      log << "partition-check: FAIL for P=" << ranks
          << " at iteration " << diff << "\n";
      return 2;
    }
    log << "partition-check: P=" << ranks << " bitwise-identical ("
        << rep.iterations << " iterations)\n";
  }
  log << "partition-check: PASS\n";
  return 0;
}

int cmd_mesh_dump(const RunConfig& cfg, const std::string& leaves_csv,
                  const std::string& cut_stats_csv, std::ostream& log) {
  const Case c = build_case(cfg);
  mesh::Forest forest = build_fine_forest(c, cfg);
  mesh::classify_forest(forest, c.geometry);
  {
    std::ofstream out = open_out(leaves_csv);
    out << "id,level,x0,y0,x1,y1,class\n";
    for (std::int64_t i = 0; i < forest.num_leaves(); ++i) {
      const geo::Box b = forest.leaf_box(i);
      out << i << "," << forest.leaf(i).level << "," << g17(b.x0) << ","
          << g17(b.y0) << "," << g17(b.x1) << "," << g17(b.y1) << ","
          << geo::cell_class_name(forest.leaf(i).cls) << "\n";
    }
  }
  log << "mesh-dump: " << forest.num_leaves() << " leaves -> " << leaves_csv
      << "\n";
  if (!cut_stats_csv.empty()) {
    std::ofstream out = open_out(cut_stats_csv);
    out << "cell,class,area_fraction,arclength\n";
    for (std::int64_t i = 0; i < forest.num_leaves(); ++i) {
      const geo::Box b = forest.leaf_box(i);
      const auto cls = forest.leaf(i).cls;
      double fraction = cls == geo::CellClass::Inside ? 1.0 : 0.0;
      double arclength = 0.0;
      if (cls == geo::CellClass::Cut) {
        const auto vq = c.geometry.volume_quadrature(b, c.quad);
        double phys = 0;
        for (std::size_t q = 0; q < vq.size(); ++q)
          if (vq.alpha[q] == 1.0) phys += vq.w[q];
        fraction = phys / b.area();
        for (const auto& pt : c.geometry.surface_quadrature(b, c.quad).points)
          arclength += pt.weight;
      }
      out << i << "," << geo::cell_class_name(cls) << "," << g17(fraction)
          << "," << g17(arclength) << "\n";
    }
    log << "mesh-dump: cut statistics -> " << cut_stats_csv << "\n";
  }
  return 0;
}

int cmd_export_operator(const RunConfig& cfg, const std::string& prefix,
                        std::ostream& log) {
  kern::force_backend(kern::parse_backend(cfg.kernels));
  const Case c = build_case(cfg);
  mesh::Forest forest = build_fine_forest(c, cfg);
  mesh::classify_forest(forest, c.geometry);
  mesh::MeshLevel level = mesh::build_mesh_level(std::move(forest));
  const int threads = resolve_threads(cfg.threads);
  const fem::SaddleOperator op =
      fem::assemble(level, c.geometry, c.quad, c.params, threads);

  {
    std::ofstream out = open_out(prefix + ".mtx");
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << op.matrix.nrows << " " << op.matrix.ncols << " " << op.matrix.nnz()
        << "\n";
    for (std::int64_t r = 0; r < op.matrix.nrows; ++r)
      for (std::int64_t k = op.matrix.row_ptr[r]; k < op.matrix.row_ptr[r + 1]; ++k)
        out << (r + 1) << " " << (op.matrix.cols[k] + 1) << " "
            << g17(op.matrix.vals[k]) << "\n";
  }
  {
    std::ofstream out = open_out(prefix + "_rhs.mtx");
    out << "%%MatrixMarket matrix array real general\n";
    out << op.dofs.n << " 1\n";
    for (double v : op.rhs) out << g17(v) << "\n";
  }
  {
    std::ofstream out = open_out(prefix + "_dofs.csv");
    out << "dof,x,y,field\n";
    const char* names[3] = {"u_x", "u_y", "p"};
    // free_index -> node lookup
    std::vector<std::int64_t> node_of_free(op.dofs.n_p);
    for (std::size_t i = 0; i < level.nodes.nodes.size(); ++i)
      if (!level.nodes.nodes[i].hanging)
        node_of_free[level.nodes.nodes[i].free_index] = std::int64_t(i);
    for (std::int64_t dof = 0; dof < op.dofs.n; ++dof) {
      const auto loc = op.dofs.locate(dof);
      const auto& node = level.nodes.nodes[node_of_free[loc.node]];
      out << dof << "," << g17(level.forest.grid().px(node.gx)) << ","
          << g17(level.forest.grid().py(node.gy)) << ","
          << names[int(loc.field)] << "\n";
    }
  }
  log << "export-operator: " << op.dofs.n << " dofs, " << op.matrix.nnz()
      << " nonzeros -> " << prefix << ".mtx\n";
  return 0;
}

}  // namespace fcs::bench

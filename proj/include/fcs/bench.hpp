#pragma once

// Benchmark harness: builds the channel / manufactured-solution cases from a
// RunConfig, drives the solver, and implements the CLI subcommands.

#include <array>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "fcs/config.hpp"
#include "fcs/multigrid.hpp"

namespace fcs::bench {

// Boundary tags of the channel case; the fitted MMS box reuses 0..3 for
// left/right/bottom/top.
enum BoundaryTag : int {
  kTagInflow = 0,
  kTagWall = 1,
  kTagCylinder = 2,
  kTagOutflow = 3,
};

struct InflowProfile {
  double u_bar = 0.3;   // peak velocity at mid-height
  double height = 0.41; // channel width H
};

// Parabolic profile 4 u y (H - y) / H^2; y outside [0, H] clamps to zero
// (fictitious region), reported through `clamped` when given.
std::array<double, 2> inflow_eval(const InflowProfile& profile, double y,
                                  bool* clamped = nullptr);

struct Case {
  geo::DomainGeometry geometry;
  geo::QuadratureSpec quad;
  fem::PhysicalParams params;
  mesh::RootGrid roots;
  bool pressure_nullspace = false;
  fem::VectorFn exact_velocity;                  // mms only
  std::function<double(double, double)> exact_pressure;  // mms only
};

Case build_case(const RunConfig& cfg);
mesh::Forest build_fine_forest(const Case& c, const RunConfig& cfg);
mg::SolverConfig solver_config(const RunConfig& cfg);

struct Problem {
  Case c;
  mg::Hierarchy hierarchy;
};

// Geometry -> mesh -> hierarchy, ready to solve. Applies the configured
// kernel backend.
Problem build_problem(const RunConfig& cfg);

// || u_h - u_exact ||_L2 over the embedding box (boundary-fitted runs).
double velocity_l2_error(const mesh::MeshLevel& level, const fem::DofMap& dofs,
                         std::span<const double> x, const fem::VectorFn& exact);

// || u_h ||_L2 over the physical region only (alpha = 1 quadrature points).
double physical_velocity_l2_norm(const Case& c, const mesh::MeshLevel& level,
                                 const fem::DofMap& dofs,
                                 std::span<const double> x);

struct MmsRun {
  double h = 0;
  double error = 0;
  double initial_residual_with_interpolant = 0;
};

struct MmsResult {
  std::vector<MmsRun> runs;
  std::vector<double> rates;  // between consecutive runs
};

// Three uniform refinements starting at cfg.base_level.
MmsResult run_mms(const RunConfig& cfg, std::ostream* log);

// Subcommand drivers; return process exit codes (0 ok, 2 verification
// failure / non-convergence, exceptions bubble up as 1 in the CLI).
int cmd_solve(const RunConfig& cfg, std::ostream& log);
int cmd_mms(const RunConfig& cfg, std::ostream& log);
int cmd_policy_bench(const RunConfig& cfg, int sweeps, const std::string& csv_path,
                     std::ostream& log);
int cmd_partition_check(const RunConfig& cfg, bool negative_control,
                        std::ostream& log);
int cmd_mesh_dump(const RunConfig& cfg, const std::string& leaves_csv,
                  const std::string& cut_stats_csv, std::ostream& log);
int cmd_export_operator(const RunConfig& cfg, const std::string& prefix,
                        std::ostream& log);

void write_report_csv(const mg::SolveReport& rep, const std::string& path);

}  // namespace fcs::bench

#pragma once

// Run configuration: plain-text "key = value" with [sections]. Every key has
// a CLI override flag of the same name; parse -> emit -> parse is the
// identity. Defaults reproduce the channel benchmark at desk scale.

#include <cstdint>
#include <string>
#include <vector>

namespace fcs::bench {

struct RunConfig {
  // [geometry]
  std::string case_name = "channel";  // channel | mms
  double channel_length = 2.2;
  double channel_height = 0.41;
  double cylinder_x = 0.2;
  double cylinder_y = 0.2;
  double cylinder_diameter = 0.1;
  double box_x0 = -0.025;
  double box_y0 = -0.02;
  int root_cells_x = 5;
  int root_cells_y = 1;
  double root_cell_size = 0.45;

  // [discretization]
  int base_level = 6;   // uniform refinement of the root grid
  int r_max = 8;        // adaptive refinement toward the boundary
  int levels = 5;       // multigrid depth L
  int subdivision_depth = 4;
  int gauss_order = 2;
  int surface_resolution = 8;
  double beta_nitsche = 100.0;
  double alpha_fict = 1e-10;

  // [physics]
  double viscosity = 1e-3;
  double inflow_peak = 0.3;  // parabolic inflow maximum
  double mms_scale = 1.0;    // manufactured-solution amplitude

  // [solver]
  int pre_smooth = 6;
  int post_smooth = 6;
  double omega = 0.8;
  double target_reduction = 1e-9;
  int max_iterations = 60;
  std::string policy = "cache_inverse";
  int threads = 0;  // 0 = hardware concurrency
  int partitions = 1;
  std::int64_t coarse_cap = 6000;
  std::string kernels = "auto";  // auto | scalar | avx2

  // [output]
  std::string report_csv = "report.csv";
  std::string solution_csv = "solution.csv";

  // Throws std::runtime_error on unknown keys or malformed lines.
  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path);
  std::string emit() const;

  // Sets one key (CLI override path). Throws on unknown key.
  void set(const std::string& key, const std::string& value);

  // All known keys in emission order (CLI flags are derived from these).
  static std::vector<std::string> keys();

  // The criterion-1 channel family: member l in {3,4,5} with a fixed
  // coarse grid (uniform level 4) under repeated coarsening.
  void apply_channel_family(int member);
};

}  // namespace fcs::bench

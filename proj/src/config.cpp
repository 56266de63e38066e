#include "fcs/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <variant>
#include <vector>

namespace fcs::bench {

namespace {

using Member = std::variant<int RunConfig::*, double RunConfig::*,
                            std::int64_t RunConfig::*, std::string RunConfig::*>;

struct Entry {
  const char* section;
  const char* key;
  Member member;
};

const std::vector<Entry>& table() {
  static const std::vector<Entry> t = {
      {"geometry", "case", &RunConfig::case_name},
      {"geometry", "channel_length", &RunConfig::channel_length},
      {"geometry", "channel_height", &RunConfig::channel_height},
      {"geometry", "cylinder_x", &RunConfig::cylinder_x},
      {"geometry", "cylinder_y", &RunConfig::cylinder_y},
      {"geometry", "cylinder_diameter", &RunConfig::cylinder_diameter},
      {"geometry", "box_x0", &RunConfig::box_x0},
      {"geometry", "box_y0", &RunConfig::box_y0},
      {"geometry", "root_cells_x", &RunConfig::root_cells_x},
      {"geometry", "root_cells_y", &RunConfig::root_cells_y},
      {"geometry", "root_cell_size", &RunConfig::root_cell_size},
      {"discretization", "base_level", &RunConfig::base_level},
      {"discretization", "r_max", &RunConfig::r_max},
      {"discretization", "levels", &RunConfig::levels},
      {"discretization", "subdivision_depth", &RunConfig::subdivision_depth},
      {"discretization", "gauss_order", &RunConfig::gauss_order},
      {"discretization", "surface_resolution", &RunConfig::surface_resolution},
      {"discretization", "beta_nitsche", &RunConfig::beta_nitsche},
      {"discretization", "alpha_fict", &RunConfig::alpha_fict},
      {"physics", "viscosity", &RunConfig::viscosity},
      {"physics", "inflow_peak", &RunConfig::inflow_peak},
      {"physics", "mms_scale", &RunConfig::mms_scale},
      {"solver", "pre_smooth", &RunConfig::pre_smooth},
      {"solver", "post_smooth", &RunConfig::post_smooth},
      {"solver", "omega", &RunConfig::omega},
      {"solver", "target_reduction", &RunConfig::target_reduction},
      {"solver", "max_iterations", &RunConfig::max_iterations},
      {"solver", "policy", &RunConfig::policy},
      {"solver", "threads", &RunConfig::threads},
      {"solver", "partitions", &RunConfig::partitions},
      {"solver", "coarse_cap", &RunConfig::coarse_cap},
      {"solver", "kernels", &RunConfig::kernels},
      {"output", "report_csv", &RunConfig::report_csv},
      {"output", "solution_csv", &RunConfig::solution_csv},
  };
  return t;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Shortest representation that parses back to the same double.
std::string format_double(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return buf;
}

void assign(RunConfig& cfg, const Entry& e, const std::string& value) {
  std::visit(
      [&](auto member) {
        using T = std::remove_reference_t<decltype(cfg.*member)>;
        if constexpr (std::is_same_v<T, std::string>) {
          cfg.*member = value;
        } else {
          char* end = nullptr;
          if constexpr (std::is_same_v<T, double>) {
            cfg.*member = std::strtod(value.c_str(), &end);
          } else {
            cfg.*member = static_cast<T>(std::strtoll(value.c_str(), &end, 10));
          }
          if (end == value.c_str() || *end != '\0')
            throw std::runtime_error("config: bad value '" + value +
                                     "' for key '" + e.key + "'");
        }
      },
      e.member);
}

std::string render(const RunConfig& cfg, const Entry& e) {
  return std::visit(
      [&](auto member) -> std::string {
        using T = std::remove_cvref_t<decltype(cfg.*member)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return cfg.*member;
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(cfg.*member);
        } else {
          return std::to_string(cfg.*member);
        }
      },
      e.member);
}

}  // namespace

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error("config line " + std::to_string(lineno) +
                                 ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    bool found = false;
    for (const Entry& e : table()) {
      if (key == e.key && (section.empty() || section == e.section)) {
        assign(cfg, e, value);
        found = true;
        break;
      }
    }
    if (!found)
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": unknown key '" + key + "' in section [" +
                               section + "]");
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string RunConfig::emit() const {
  std::ostringstream out;
  const char* section = "";
  for (const Entry& e : table()) {
    if (std::string(section) != e.section) {
      if (*section) out << "\n";
      out << "[" << e.section << "]\n";
      section = e.section;
    }
    out << e.key << " = " << render(*this, e) << "\n";
  }
  return out.str();
}

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const Entry& e : table()) {
    if (key == e.key) {
      assign(*this, e, value);
      return;
    }
  }
  throw std::runtime_error("config: unknown key '" + key + "'");
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const Entry& e : table()) out.push_back(e.key);
  return out;
}

void RunConfig::apply_channel_family(int member) {
  if (member < 3 || member > 5)
    throw std::runtime_error("channel family member must be 3, 4 or 5");
  base_level = member + 2;
  r_max = member + 4;
  levels = member + 1;  // repeated coarsening ends on the uniform level-4 grid
}

}  // namespace fcs::bench

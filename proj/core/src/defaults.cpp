#include "tracelab/defaults.hpp"

#include "tracelab/errors.hpp"

namespace tracelab {

const nlohmann::json& defaults_table() {
  static const nlohmann::json table = {
      {"version", kDefaultsVersion},
      {"surface", {{"min_gradient", 1e-8}, {"projection_tol", 1e-14}}},
      {"orbits",
       {{"reprojection_interval", 16},
        {"lyapunov_threshold", 0.01},
        {"escape_box", 2.0},
        {"chaos_res", 100},
        {"chaos_n", 10000},
        {"poincare_n", 20000}}},
      {"periodic",
       {{"max_iter", 50},
        {"step_tol", 1e-12},
        {"accept_residual", 1e-10},
        {"max_condition", 1e12},
        {"parabolic_tol", 1e-8},
        {"continuation_max_step", 0.01},
        {"continuation_min_step", 1e-6},
        {"doubling_offset", 1e-4},
        {"survey_grid", 24}}},
      {"manifolds",
       {{"delta", 1e-6},
        {"max_segment", 0.02},
        {"refine_tol", 0.02},
        {"angle_tol", 1e-3},
        {"Delta", 0.05},
        {"window", 2e-3},
        {"window_points", 21},
        {"max_residual", 1e-8},
        {"hunt_v_grid", 12},
        {"hunt_arclength", 12.0},
        {"hunt_dV", 1e-7}}},
      {"cantor", {{"brute_resolution", 1e-9}, {"boundary_tol", 1e-9}}},
      {"horseshoe", {{"epsilon", 0.02}, {"depth", 14}, {"half_length", 0.5}, {"shallow_fraction", 0.01}}},
      {"service", {{"orbit_n_cap", 1000000}, {"chaos_res_cap", 256}, {"chaos_n_cap", 5000}, {"transport_points", 50000}}},
  };
  return table;
}

double default_value(const std::string& section, const std::string& key) {
  const auto& t = defaults_table();
  if (!t.contains(section) || !t[section].contains(key))
    fail(ErrorKind::InvalidArgument, "no default for " + section + "." + key);
  return t[section][key].get<double>();
}

std::string library_version() { return TRACELAB_VERSION; }

}  // namespace tracelab

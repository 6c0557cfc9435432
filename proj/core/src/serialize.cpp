#include "tracelab/serialize.hpp"

#include <cmath>

#include <fmt/format.h>

#include "tracelab/defaults.hpp"
#include "tracelab/errors.hpp"

namespace tracelab {

namespace {

// JSON has no infinities or NaN.
json real(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return nullptr;
  return v > 0 ? "inf" : "-inf";
}

json interval(const Interval& i) { return json::array({i.lo, i.hi}); }

}  // namespace

std::string format_real(double v) { return fmt::format("{}", v); }

json to_json(const Point3& p) { return json::array({p.x, p.y, p.z}); }

json to_json(const PeriodicOrbit& po) {
  json pts = json::array();
  for (const auto& p : po.points) pts.push_back(to_json(p));
  json j = {{"V", po.V},
            {"period", po.period},
            {"points", pts},
            {"trace", po.residual_trace},
            {"raw_trace", po.raw_trace},
            {"stability", std::string(to_string(po.stability))},
            {"residual", po.newton_residual},
            {"minimal_period", po.minimal_period}};
  if (!po.warnings.empty()) j["warnings"] = po.warnings;
  return j;
}

json to_json(const BranchEvent& e) {
  json j = {{"V", e.V},
            {"kind", std::string(to_string(e.kind))},
            {"V_before", e.V_before},
            {"V_after", e.V_after},
            {"t_before", e.t_before},
            {"t_after", e.t_after}};
  if (e.orbit) j["orbit"] = to_json(*e.orbit);
  if (e.doubled) j["doubled"] = to_json(*e.doubled);
  return j;
}

json to_json(const TangencyEvent& e) {
  auto fit = [](const QuadFit& f) {
    return json{{"a", f.a}, {"b", f.b}, {"c", f.c}, {"residual", f.residual}, {"range", {f.lo, f.hi}}};
  };
  return json{{"V", e.V},
              {"point", to_json(e.location)},
              {"angle", e.crossing_angle},
              {"c_s", e.c_s},
              {"c_u", e.c_u},
              {"speed", e.unfolding_speed},
              {"separation", e.separation},
              {"fit_noise", e.fit_noise},
              {"window", e.window},
              {"dV", e.dV},
              {"intersections_below", e.intersections_below},
              {"intersections_above", e.intersections_above},
              {"param_s", e.param_s},
              {"param_u", e.param_u},
              {"period", e.period},
              {"Delta", e.delta_threshold},
              {"fit_s", fit(e.fit_s)},
              {"fit_u", fit(e.fit_u)},
              {"diagnostics", e.diagnostics}};
}

json to_json(const HuntDiagnostics& d) {
  json angles = json::array();
  for (const auto& [v, a] : d.min_angle_by_V) angles.push_back({{"V", v}, {"min_angle", a}});
  return json{{"log", d.log},
              {"min_angle_by_V", angles},
              {"brackets", d.brackets},
              {"candidates", d.candidates},
              {"initial_bracket", d.initial_bracket},
              {"final_bracket", d.final_bracket}};
}

json to_json(const CantorPresentation& c) {
  json gaps = json::array();
  for (const auto& g : c.gaps) gaps.push_back(interval(g));
  json j = {{"hull", interval(c.hull)}, {"gaps", gaps}, {"depth", c.depth}};
  if (!c.flags.empty()) j["flags"] = c.flags;
  return j;
}

CantorPresentation presentation_from_json(const json& j) {
  try {
    CantorPresentation c;
    c.hull = {j.at("hull").at(0).get<double>(), j.at("hull").at(1).get<double>()};
    for (const auto& g : j.at("gaps")) c.gaps.push_back({g.at(0).get<double>(), g.at(1).get<double>()});
    c.depth = j.value("depth", 0);
    if (j.contains("flags")) c.flags = j["flags"].get<std::vector<std::string>>();
    c.validate();
    return c;
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidArgument, std::string("malformed presentation: ") + e.what());
  }
}

json to_json(const BoxCountReport& r) {
  return json{{"scales", r.scales}, {"counts", r.counts}, {"slope", r.slope}, {"raw_slope", r.raw_slope}, {"r2", r.r2}};
}

json to_json(const SurvivorSection& s) {
  json centers = json::array();
  for (const auto& c : s.spec.centers) centers.push_back({c.theta, c.phi});
  const ThicknessReport t = thickness_report(s.presentation);
  return json{{"presentation", to_json(s.presentation)},
              {"anchor", {s.anchor.theta, s.anchor.phi}},
              {"direction", std::string(to_string(s.direction))},
              {"half_length", s.half_length},
              {"spec", {{"epsilon", s.spec.epsilon}, {"depth", s.spec.depth}, {"centers", centers}, {"norm", "sup"}}},
              {"survivors", s.survivors.size()},
              {"thickness", real(t.value)},
              {"gap_mass", s.gap_mass},
              {"previous_gap_mass", s.previous_gap_mass},
              {"warnings", s.warnings}};
}

json to_json(const ThicknessTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    json row = {{"epsilon", r.epsilon}, {"tau", real(r.tau)}, {"survivors", r.survivors}};
    if (std::isfinite(r.tau) && r.tau > 0.0) row["dim_lower_bound"] = dim_lower_bound(r.tau);
    if (!r.error.empty()) row["error"] = r.error;
    rows.push_back(row);
  }
  return json{{"rows", rows}, {"nondecreasing", t.nondecreasing}};
}

json chaos_sidecar(const ChaosMap& m) {
  json j = {{"res", m.res},
            {"n", m.n},
            {"threshold", m.threshold},
            {"chaotic_fraction", m.chaotic_fraction()},
            {"on_surface", m.on_surface_count()},
            {"chaotic", m.chaotic_count()}};
  if (m.system == SystemKind::TraceMap) {
    j["system"] = "trace";
    j["V"] = m.parameter;
    j["sheet"] = std::string(to_string(m.sheet));
  } else {
    j["system"] = "standard";
    j["k"] = m.parameter;
  }
  return j;
}

json stamp(const json& config) {
  return json{{"version", library_version()}, {"defaults_version", kDefaultsVersion}, {"config", config}};
}

void write_cloud_csv(std::ostream& os, const PoincareCloud& cloud) {
  os << "seed_id,step,x,y,z\n";
  for (const auto& c : cloud.points)
    os << c.seed_id << ',' << c.step << ',' << format_real(c.p.x) << ',' << format_real(c.p.y) << ','
       << format_real(c.p.z) << '\n';
}

void write_chaos_csv(std::ostream& os, const ChaosMap& m) {
  for (int layer = 0; layer < m.layers(); ++layer)
    for (int row = 0; row < m.res; ++row) {
      for (int col = 0; col < m.res; ++col) {
        const ChaosCell& c = m.at(layer, row, col);
        if (col) os << ',';
        if (c.cls == CellClass::Chaotic || c.cls == CellClass::Regular) os << format_real(c.lyapunov);
      }
      os << '\n';
    }
}

void write_branch_jsonl(std::ostream& os, const ContinuationBranch& b) {
  for (const auto& po : b.orbits) os << to_json(po).dump() << '\n';
  json events = json::array();
  for (const auto& e : b.events) events.push_back(to_json(e));
  os << json{{"events", events}}.dump() << '\n';
}

void write_arc_csv(std::ostream& os, const ManifoldArc& arc) {
  json owner = to_json(arc.owner);
  owner["side"] = std::string(to_string(arc.side));
  owner["arclength"] = arc.arclength;
  owner["truncated"] = arc.truncated;
  if (!arc.diagnostic.empty()) owner["diagnostic"] = arc.diagnostic;
  os << "# " << owner.dump() << '\n' << "sigma,x,y,z\n";
  for (std::size_t i = 0; i < arc.vertices.size(); ++i) {
    const Point3& p = arc.vertices[i];
    os << format_real(arc.params[i]) << ',' << format_real(p.x) << ',' << format_real(p.y) << ',' << format_real(p.z)
       << '\n';
  }
}

void write_points_csv(std::ostream& os, const std::vector<Point3>& pts) {
  os << "x,y,z\n";
  for (const auto& p : pts) os << format_real(p.x) << ',' << format_real(p.y) << ',' << format_real(p.z) << '\n';
}

}  // namespace tracelab

#pragma once

// CSV for point data, JSON for records, JSON-lines for continuation branches.

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tracelab/cantor.hpp"
#include "tracelab/horseshoe.hpp"
#include "tracelab/manifolds.hpp"
#include "tracelab/orbits.hpp"
#include "tracelab/periodic.hpp"

namespace tracelab {

using nlohmann::json;

json to_json(const Point3& p);
json to_json(const PeriodicOrbit& po);
json to_json(const BranchEvent& e);
json to_json(const TangencyEvent& e);
json to_json(const HuntDiagnostics& d);
json to_json(const CantorPresentation& c);
json to_json(const BoxCountReport& r);
json to_json(const SurvivorSection& s);
json to_json(const ThicknessTable& t);
json chaos_sidecar(const ChaosMap& m);

CantorPresentation presentation_from_json(const json& j);

/// Wraps a payload with the artifact version, defaults version and resolved config.
json stamp(const json& config);

/// Rows seed_id,step,x,y,z.
void write_cloud_csv(std::ostream& os, const PoincareCloud& cloud);
/// One row per grid row of Lyapunov exponents (empty for off-surface cells), layer by layer.
void write_chaos_csv(std::ostream& os, const ChaosMap& m);
/// One orbit per line, then a final line {"events": [...]}.
void write_branch_jsonl(std::ostream& os, const ContinuationBranch& b);
/// "# <owner json>" header, then sigma,x,y,z rows.
void write_arc_csv(std::ostream& os, const ManifoldArc& arc);
/// Rows x,y,z.
void write_points_csv(std::ostream& os, const std::vector<Point3>& pts);

/// Shortest round-trip representation of a double.
std::string format_real(double v);

}  // namespace tracelab

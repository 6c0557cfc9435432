#include "tracelab/service.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <fmt/format.h>

#include "tracelab/defaults.hpp"
#include "tracelab/errors.hpp"
#include "tracelab/manifolds.hpp"
#include "tracelab/orbits.hpp"
#include "tracelab/periodic.hpp"
#include "tracelab/serialize.hpp"
#include "tracelab/surface.hpp"

// After Eigen: resolv.h, pulled in here, defines _res.
#include <httplib.h>

namespace tracelab {

using nlohmann::json;

struct Service::Server {
  httplib::Server http;
};

namespace {

HttpResponse reply(int status, json body) { return HttpResponse{status, std::move(body), {}}; }

HttpResponse error_reply(int status, const std::string& error, const std::string& message, json extra = json::object()) {
  json body = {{"error", error}, {"message", message}};
  for (auto& [k, v] : extra.items()) body[k] = v;
  return reply(status, std::move(body));
}

struct BadRequest {
  std::string message;
  json extra = json::object();
};

double number(const json& body, const char* key) {
  if (!body.contains(key) || !body[key].is_number()) throw BadRequest{fmt::format("'{}' must be a number", key)};
  const double v = body[key].get<double>();
  if (!std::isfinite(v)) throw BadRequest{fmt::format("'{}' must be finite", key)};
  return v;
}

double number_or(const json& body, const char* key, double fallback) {
  return body.contains(key) ? number(body, key) : fallback;
}

std::size_t count(const json& body, const char* key, std::size_t cap, std::size_t fallback) {
  if (!body.contains(key)) return fallback;
  if (!body[key].is_number_integer() || body[key].get<long long>() < 1)
    throw BadRequest{fmt::format("'{}' must be a positive integer", key)};
  const auto v = body[key].get<unsigned long long>();
  if (v > cap) throw BadRequest{fmt::format("'{}' = {} exceeds the cap {}", key, v, cap), {{"cap", cap}}};
  return static_cast<std::size_t>(v);
}

std::vector<double> reals(const json& body, const char* key) {
  if (!body.contains(key) || !body[key].is_array()) throw BadRequest{fmt::format("'{}' must be an array", key)};
  std::vector<double> out;
  for (const auto& v : body[key]) {
    if (!v.is_number()) throw BadRequest{fmt::format("'{}' must hold numbers", key)};
    out.push_back(v.get<double>());
  }
  return out;
}

struct System {
  bool trace = true;
  double parameter = 0.0;
};

System parse_system(const json& body) {
  if (!body.contains("system") || !body["system"].is_object()) throw BadRequest{"'system' must be an object"};
  const json& s = body["system"];
  const std::string type = s.value("type", "");
  if (type == "trace") return {true, number(s, "V")};
  if (type == "standard") return {false, number(s, "k")};
  throw BadRequest{"system.type must be 'trace' or 'standard'"};
}

json point_json(const Point3& p) { return json::array({p.x, p.y, p.z}); }

}  // namespace

std::vector<std::size_t> downsample_indices(std::size_t n, std::size_t max_points, DownsampleInfo* info) {
  std::vector<std::size_t> idx;
  std::size_t stride = 1;
  if (n <= max_points || max_points < 3) {
    for (std::size_t i = 0; i < std::min(n, std::max<std::size_t>(max_points, 1)); ++i) idx.push_back(i);
    if (n > max_points && n > 0) idx.back() = n - 1;
  } else {
    stride = (n - 1 + max_points - 3) / (max_points - 2);
    for (std::size_t i = 0; i < n; i += stride) idx.push_back(i);
    if (idx.back() != n - 1) idx.push_back(n - 1);
  }
  if (info) *info = {n, idx.size(), stride};
  return idx;
}

Service::Service(ServiceOptions opts) : opts_(std::move(opts)) {}

Service::~Service() {
  stop();
  for (auto& [id, s] : sessions_)
    for (auto& [jid, job] : s->jobs)
      if (job->worker.joinable()) job->worker.join();
}

Service::Session& Service::session(const std::string& id) {
  std::lock_guard lock(sessions_mu_);
  auto& slot = sessions_[id];
  if (!slot) slot = std::make_unique<Session>();
  return *slot;
}

HttpResponse Service::handle(const std::string& method, const std::string& path, const std::string& body,
                             const std::string& session_id, const std::string& origin) {
  HttpResponse r;
  const bool origin_ok = origin.empty() || origin == opts_.allowed_origin;
  if (!origin_ok) {
    r = error_reply(403, "forbidden-origin", fmt::format("origin '{}' is not allowed", origin));
  } else if (method == "OPTIONS") {
    r = reply(204, nullptr);
    r.headers["Access-Control-Allow-Methods"] = "GET, POST, OPTIONS";
    r.headers["Access-Control-Allow-Headers"] = "Content-Type, X-Session-Id";
  } else {
    json parsed = json::object();
    bool ok = true;
    if (method == "POST") {
      try {
        parsed = json::parse(body);
        if (!parsed.is_object()) {
          r = error_reply(400, "malformed", "request body must be a JSON object");
          ok = false;
        }
      } catch (const json::parse_error& e) {
        r = error_reply(400, "malformed", e.what());
        ok = false;
      }
    }
    if (ok) r = route(method, path, parsed, session(session_id.empty() ? "default" : session_id));
  }
  if (!origin.empty() && origin_ok) {
    r.headers["Access-Control-Allow-Origin"] = opts_.allowed_origin;
    r.headers["Vary"] = "Origin";
  }
  return r;
}

HttpResponse Service::route(const std::string& method, const std::string& path, const json& body, Session& s) {
  const bool compute = path == "/orbit" || path == "/chaos" || path == "/manifold" || path == "/tangency-scan";
  if (path == "/meta") return method == "GET" ? meta() : error_reply(405, "method", "use GET");
  if (path.rfind("/jobs/", 0) == 0)
    return method == "GET" ? job_status(path.substr(6), s) : error_reply(405, "method", "use GET");
  if (!compute) return error_reply(404, "not-found", fmt::format("no endpoint {}", path));
  if (method != "POST") return error_reply(405, "method", "use POST");

  const std::string key = path + '\n' + body.dump();
  {
    std::lock_guard lock(s.mu);
    auto it = s.cache.find(key);
    if (it != s.cache.end()) return reply(200, it->second);
  }
  if (path == "/tangency-scan") return tangency_scan(body, s, key);

  if (inflight_.fetch_add(1) >= opts_.max_inflight) {
    inflight_.fetch_sub(1);
    return error_reply(503, "over-budget", fmt::format("more than {} computations in flight", opts_.max_inflight));
  }
  HttpResponse r;
  try {
    if (path == "/orbit") r = orbit(body);
    else if (path == "/chaos") r = chaos(body);
    else r = manifold(body);
  } catch (const BadRequest& e) {
    r = error_reply(400, "bad-request", e.message, e.extra);
  } catch (const Error& e) {
    r = error_reply(e.is_config_error() ? 400 : 422, std::string(to_string(e.kind())), e.what());
  }
  inflight_.fetch_sub(1);
  if (r.status == 200) {
    std::lock_guard lock(s.mu);
    s.cache.emplace(key, r.body);
  }
  return r;
}

HttpResponse Service::orbit(const json& body) {
  const System sys = parse_system(body);
  const std::size_t n = count(body, "n", opts_.orbit_n_cap, 10000);
  const std::vector<double> seed = reals(body, "seed");
  json out;
  DownsampleInfo info;
  if (!sys.trace) {
    if (seed.size() != 2) throw BadRequest{"standard-map seed must be [theta, phi]"};
    if (sys.parameter < 0.0) throw BadRequest{"k must be nonnegative"};
    std::vector<TorusPoint> pts{TorusPoint(seed[0], seed[1])};
    for (std::size_t i = 0; i < n; ++i) pts.push_back(standard_map(pts.back(), sys.parameter));
    json arr = json::array();
    for (std::size_t i : downsample_indices(pts.size(), opts_.transport_points, &info))
      arr.push_back({pts[i].theta, pts[i].phi});
    out = {{"points", arr}, {"lyapunov", stdmap_lyapunov(pts.front(), sys.parameter, n)}, {"escaped", false}};
  } else {
    const double V = sys.parameter;
    Point3 p;
    if (seed.size() == 2) {
      const std::string sheet = body.value("sheet", "upper");
      if (sheet != "upper" && sheet != "lower") throw BadRequest{"sheet must be 'upper' or 'lower'"};
      const ZRoots roots = solve_z(seed[0], seed[1], V);
      const bool compact = V < 0.0;
      const double z = roots.count ? (sheet == "upper" ? roots.upper() : roots.lower()) : 0.0;
      if (!roots.count || (compact && (std::fabs(seed[0]) > 1.0 || std::fabs(seed[1]) > 1.0 || std::fabs(z) > 1.0))) {
        json extra = json::object();
        // Pull the chart point toward the origin until the sheet exists.
        const auto on_sheet = [&](double t) {
          const ZRoots r = solve_z(t * seed[0], t * seed[1], V);
          if (!r.count) return false;
          const double zz = sheet == "upper" ? r.upper() : r.lower();
          return !compact || (std::fabs(t * seed[0]) <= 1.0 && std::fabs(t * seed[1]) <= 1.0 && std::fabs(zz) <= 1.0);
        };
        if (on_sheet(0.0)) {
          double lo = 0.0, hi = 1.0;
          for (int it = 0; it < 60; ++it) (on_sheet(0.5 * (lo + hi)) ? lo : hi) = 0.5 * (lo + hi);
          const ZRoots r = solve_z(lo * seed[0], lo * seed[1], V);
          const Point3 q(lo * seed[0], lo * seed[1], sheet == "upper" ? r.upper() : r.lower());
          extra["suggestion"] = point_json(q);
          extra["suggestion_chart"] = json::array({q.x, q.y});
        }
        return error_reply(422, "off-surface", fmt::format("({}, {}) has no point on the {} sheet of S_V", seed[0],
                                                           seed[1], sheet),
                           extra);
      }
      p = Point3(seed[0], seed[1], z);
    } else if (seed.size() == 3) {
      p = Point3(seed[0], seed[1], seed[2]);
      if (std::fabs(invariant(p) - V) > 1e-6) {
        json extra = json::object();
        try {
          extra["suggestion"] = point_json(project_to_level(p, V));
        } catch (const Error&) {
        }
        return error_reply(422, "off-surface", fmt::format("seed has I - V = {:.3g}", invariant(p) - V), extra);
      }
    } else {
      throw BadRequest{"trace-map seed must be [x, y] with a sheet or [x, y, z]"};
    }
    const Orbit orb = iterate(p, V, n);
    double drift = 0.0;
    for (const auto& q : orb.points) drift = std::max(drift, std::fabs(invariant(q) - V));
    json arr = json::array();
    for (std::size_t i : downsample_indices(orb.points.size(), opts_.transport_points, &info))
      arr.push_back(point_json(orb.points[i]));
    const bool stationary = distance(trace_map(orb.points.front()), orb.points.front()) < 1e-14;
    const bool critical = norm(invariant_gradient(orb.points.front())) <= kMinGradient;
    out = {{"points", arr}, {"escaped", orb.escaped}, {"max_invariant_error", drift}};
    if (stationary || critical) {
      out["lyapunov"] = nullptr;
      out["lyapunov_status"] = "not-applicable";
    } else {
      out["lyapunov"] = lyapunov_exponent(p, V, n);
      out["lyapunov_status"] = "ok";
    }
  }
  out["downsample"] = {{"original", info.original}, {"kept", info.kept}, {"stride", info.stride}, {"keeps_ends", true}};
  return reply(200, out);
}

HttpResponse Service::chaos(const json& body) {
  const System sys = parse_system(body);
  const int res = static_cast<int>(count(body, "res", opts_.chaos_res_cap, 64));
  const std::size_t n = count(body, "n", opts_.chaos_n_cap, 2000);
  const double threshold = number_or(body, "threshold", default_value("orbits", "lyapunov_threshold"));
  ChaosMap m;
  if (sys.trace) {
    ChaosOptions co;
    co.workers = opts_.workers;
    const std::string sheet = body.value("sheet", "upper");
    if (sheet == "upper") co.sheet = Sheet::Upper;
    else if (sheet == "lower") co.sheet = Sheet::Lower;
    else if (sheet == "both") co.sheet = Sheet::Both;
    else throw BadRequest{"sheet must be 'upper', 'lower' or 'both'"};
    m = chaos_grid(sys.parameter, res, n, threshold, co);
  } else {
    m = stdmap_chaos_grid(sys.parameter, res, n, threshold, opts_.workers);
  }
  json values = json::array(), classes = json::array();
  for (const auto& c : m.cells) {
    values.push_back(std::isfinite(c.lyapunov) ? json(c.lyapunov) : json(nullptr));
    classes.push_back(std::string(to_string(c.cls)));
  }
  json out = chaos_sidecar(m);
  out["layers"] = m.layers();
  out["values"] = values;
  out["classes"] = classes;
  out["layout"] = "row-major, layer then row (y) then column (x), cell centres";
  return reply(200, out);
}

HttpResponse Service::manifold(const json& body) {
  const double V = number(body, "V");
  const int period = static_cast<int>(count(body, "period", 64, 1));
  const std::vector<double> g = reals(body, "guess");
  if (g.size() != 3) throw BadRequest{"guess must be [x, y, z]"};
  const std::string side = body.value("side", "unstable");
  if (side != "stable" && side != "unstable") throw BadRequest{"side must be 'stable' or 'unstable'"};
  const double arclength = number_or(body, "arclength", 2.0);
  if (!(arclength > 0.0 && arclength <= 100.0)) throw BadRequest{"arclength must lie in (0, 100]", {{"cap", 100}}};
  GrowOptions go;
  go.branch = body.value("branch", 1) < 0 ? -1 : 1;
  const PeriodicOrbit po = find_periodic(V, period, Point3(g[0], g[1], g[2]));
  const ManifoldArc arc = grow_manifold(po, side == "stable" ? Side::Stable : Side::Unstable, arclength,
                                        default_value("manifolds", "refine_tol"), go);
  DownsampleInfo info;
  json pts = json::array();
  for (std::size_t i : downsample_indices(arc.vertices.size(), opts_.transport_points, &info))
    pts.push_back(point_json(arc.vertices[i]));
  json out = {{"owner", to_json(po)},
              {"side", side},
              {"points", pts},
              {"arclength", arc.arclength},
              {"truncated", arc.truncated},
              {"downsample", {{"original", info.original}, {"kept", info.kept}, {"stride", info.stride}}}};
  if (!arc.diagnostic.empty()) out["diagnostic"] = arc.diagnostic;
  return reply(200, out);
}

HttpResponse Service::tangency_scan(const json& body, Session& s, const std::string& key) {
  double lo = 0.0, hi = 0.0;
  HuntOptions ho;
  try {
    lo = number(body, "V_min");
    hi = number(body, "V_max");
    ho.max_period = static_cast<int>(count(body, "period_max", 8, 6));
    ho.arclength = number_or(body, "arclength", ho.arclength);
    ho.v_grid = static_cast<int>(count(body, "v_grid", 64, ho.v_grid));
    ho.max_events = count(body, "max_events", 16, 1);
    if (!(lo < hi && lo > -1.0 && hi < 0.0)) throw BadRequest{"need -1 < V_min < V_max < 0"};
    if (!(ho.arclength > 0.0 && ho.arclength <= 50.0)) throw BadRequest{"arclength must lie in (0, 50]", {{"cap", 50}}};
  } catch (const BadRequest& e) {
    return error_reply(400, "bad-request", e.message, e.extra);
  }
  ho.workers = opts_.workers;
  const std::string id = fmt::format("{:016x}", std::hash<std::string>{}(key));
  std::lock_guard lock(s.mu);
  auto it = s.jobs.find(id);
  if (it == s.jobs.end()) {
    auto job = std::make_shared<Job>();
    s.jobs.emplace(id, job);
    job->worker = std::thread([job, &s, lo, hi, ho] {
      {
        std::lock_guard l(s.mu);
        job->status = "running";
      }
      json result;
      std::string status = "done";
      try {
        HuntDiagnostics diag;
        const auto seeds = default_hunt_seeds(0.5 * (lo + hi), ho.max_period);
        const auto events = tangency_hunt(lo, hi, seeds, ho, &diag);
        json ev = json::array();
        for (const auto& e : events) ev.push_back(to_json(e));
        result = {{"events", ev}, {"diagnostics", to_json(diag)}, {"seeds", seeds.size()}};
      } catch (const std::exception& e) {
        status = "failed";
        result = {{"error", e.what()}};
      }
      std::lock_guard l(s.mu);
      job->result = std::move(result);
      job->status = status;
    });
  }
  return reply(202, {{"job_id", id}, {"status", s.jobs[id]->status}});
}

HttpResponse Service::job_status(const std::string& id, Session& s) {
  std::lock_guard lock(s.mu);
  auto it = s.jobs.find(id);
  if (it == s.jobs.end()) return error_reply(404, "not-found", fmt::format("no job {} in this session", id));
  json out = {{"job_id", id}, {"status", it->second->status}};
  if (it->second->status == "done" || it->second->status == "failed") out["result"] = it->second->result;
  return reply(200, out);
}

HttpResponse Service::meta() const {
  return reply(200, {{"version", library_version()}, {"defaults", defaults_table()}, {"precision", "standard"},
                     {"projection", "orthographic-xy"},
                     {"caps",
                      {{"orbit_n", opts_.orbit_n_cap},
                       {"chaos_res", opts_.chaos_res_cap},
                       {"chaos_n", opts_.chaos_n_cap},
                       {"transport_points", opts_.transport_points}}}});
}

bool Service::serve() {
  server_ = std::make_unique<Server>();
  auto adapt = [this](const std::string& method) {
    return [this, method](const httplib::Request& req, httplib::Response& res) {
      const HttpResponse r =
          handle(method, req.path, req.body, req.get_header_value("X-Session-Id"), req.get_header_value("Origin"));
      res.status = r.status;
      for (const auto& [k, v] : r.headers) res.set_header(k, v);
      if (r.status != 204) res.set_content(r.body.dump(), "application/json");
    };
  };
  server_->http.Get(".*", adapt("GET"));
  server_->http.Post(".*", adapt("POST"));
  server_->http.Options(".*", adapt("OPTIONS"));
  return server_->http.listen(opts_.host, opts_.port);
}

void Service::stop() {
  if (server_) server_->http.stop();
}

}  // namespace tracelab

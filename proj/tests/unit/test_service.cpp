#include <chrono>
#include <cmath>
#include <thread>

#include <gtest/gtest.h>

#include "tracelab/maps.hpp"
#include "tracelab/service.hpp"

using namespace tracelab;
using nlohmann::json;

namespace {

HttpResponse post(Service& s, const std::string& path, const json& body, const std::string& session = "t") {
  return s.handle("POST", path, body.dump(), session);
}

}  // namespace

TEST(Service, Downsample) {
  DownsampleInfo info;
  const auto idx = downsample_indices(1001, 100, &info);
  EXPECT_LE(idx.size(), 100u);
  EXPECT_EQ(idx.front(), 0u);
  EXPECT_EQ(idx.back(), 1000u);
  EXPECT_EQ(info.original, 1001u);
  EXPECT_EQ(info.kept, idx.size());
  EXPECT_EQ(downsample_indices(10, 100).size(), 10u);
}

TEST(Service, Meta) {
  Service s;
  const HttpResponse r = s.handle("GET", "/meta", "");
  EXPECT_EQ(r.status, 200);
  EXPECT_TRUE(r.body.contains("version"));
  EXPECT_TRUE(r.body["defaults"].is_object());
  EXPECT_EQ(r.body["caps"]["chaos_res"], 256);
}

TEST(Service, Routing) {
  Service s;
  EXPECT_EQ(s.handle("GET", "/nope", "").status, 404);
  EXPECT_EQ(s.handle("GET", "/orbit", "").status, 405);
  EXPECT_EQ(s.handle("POST", "/meta", "{}").status, 405);
  EXPECT_EQ(s.handle("POST", "/orbit", "{not json").status, 400);
  EXPECT_EQ(s.handle("POST", "/orbit", "[1,2]").status, 400);
  EXPECT_EQ(s.handle("GET", "/jobs/unknown", "").status, 404);
}

TEST(Service, Cors) {
  Service s;
  const HttpResponse bad = s.handle("GET", "/meta", "", "t", "http://evil.example");
  EXPECT_EQ(bad.status, 403);
  const HttpResponse ok = s.handle("GET", "/meta", "", "t", "http://127.0.0.1:5173");
  EXPECT_EQ(ok.status, 200);
  EXPECT_EQ(ok.headers.at("Access-Control-Allow-Origin"), "http://127.0.0.1:5173");
  EXPECT_EQ(s.handle("OPTIONS", "/orbit", "", "t", "http://127.0.0.1:5173").status, 204);
}

TEST(Service, TraceOrbit) {
  Service s;
  const HttpResponse r =
      post(s, "/orbit", {{"system", {{"type", "trace"}, {"V", -0.5}}}, {"seed", {0.2, 0.1}}, {"n", 2000}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body["points"].size(), 2001u);
  EXPECT_LT(r.body["max_invariant_error"].get<double>(), 1e-10);
  EXPECT_EQ(r.body["lyapunov_status"], "ok");
  const auto& p = r.body["points"][0];
  EXPECT_NEAR(invariant(Point3(p[0], p[1], p[2])), -0.5, 1e-12);
}

TEST(Service, OrbitDownsampled) {
  ServiceOptions o;
  o.transport_points = 100;
  Service s(o);
  const HttpResponse r =
      post(s, "/orbit", {{"system", {{"type", "trace"}, {"V", -0.5}}}, {"seed", {0.2, 0.1}}, {"n", 5000}});
  ASSERT_EQ(r.status, 200);
  EXPECT_LE(r.body["points"].size(), 100u);
  EXPECT_EQ(r.body["downsample"]["original"], 5001);
}

TEST(Service, StationarySeedHasNoExponent) {
  Service s;
  const HttpResponse r =
      post(s, "/orbit", {{"system", {{"type", "trace"}, {"V", -1.0}}}, {"seed", {0.0, 0.0, 0.0}}, {"n", 10}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_TRUE(r.body["lyapunov"].is_null());
  EXPECT_EQ(r.body["lyapunov_status"], "not-applicable");
}

TEST(Service, OffSurfaceSeedGetsSuggestion) {
  Service s;
  const HttpResponse r =
      post(s, "/orbit", {{"system", {{"type", "trace"}, {"V", -0.5}}}, {"seed", {0.9, 0.9}}, {"n", 10}});
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(r.body["error"], "off-surface");
  ASSERT_TRUE(r.body.contains("suggestion"));
  const auto& q = r.body["suggestion"];
  EXPECT_NEAR(invariant(Point3(q[0], q[1], q[2])), -0.5, 1e-12);

  const HttpResponse r3 =
      post(s, "/orbit", {{"system", {{"type", "trace"}, {"V", -0.5}}}, {"seed", {0.9, 0.1, 0.1}}, {"n", 10}});
  EXPECT_EQ(r3.status, 422);
  EXPECT_TRUE(r3.body.contains("suggestion"));
}

TEST(Service, StandardMapOrbit) {
  Service s;
  const HttpResponse r =
      post(s, "/orbit", {{"system", {{"type", "standard"}, {"k", 0.0}}}, {"seed", {0.1, 0.2}}, {"n", 100}});
  ASSERT_EQ(r.status, 200);
  EXPECT_LT(std::fabs(r.body["lyapunov"].get<double>()), 0.05);
}

TEST(Service, Caps) {
  Service s;
  const HttpResponse r =
      post(s, "/chaos", {{"system", {{"type", "trace"}, {"V", -0.5}}}, {"res", 100000}, {"n", 10}});
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(r.body["cap"], 256);
  EXPECT_EQ(post(s, "/orbit", {{"system", {{"type", "trace"}, {"V", -0.5}}}, {"seed", {0.2, 0.1}}, {"n", -3}}).status,
            400);
  EXPECT_EQ(post(s, "/orbit", {{"system", {{"type", "cubic"}}}, {"seed", {0.2, 0.1}}}).status, 400);
}

TEST(Service, ChaosGridAndCache) {
  Service s;
  const json body = {{"system", {{"type", "trace"}, {"V", -0.5}}}, {"res", 8}, {"n", 200}, {"sheet", "both"}};
  const HttpResponse a = post(s, "/chaos", body);
  ASSERT_EQ(a.status, 200) << a.body.dump();
  EXPECT_EQ(a.body["layers"], 2);
  EXPECT_EQ(a.body["values"].size(), 2u * 8 * 8);
  const HttpResponse b = post(s, "/chaos", body);
  EXPECT_EQ(a.body, b.body);
}

TEST(Service, InvalidLevelIsConfigError) {
  Service s;
  const HttpResponse r = post(s, "/chaos", {{"system", {{"type", "trace"}, {"V", 0.5}}}, {"res", 8}, {"n", 10}});
  EXPECT_EQ(r.status, 400);
}

TEST(Service, OverBudget) {
  ServiceOptions o;
  o.max_inflight = 0;
  Service s(o);
  const HttpResponse r =
      post(s, "/orbit", {{"system", {{"type", "trace"}, {"V", -0.5}}}, {"seed", {0.2, 0.1}}, {"n", 10}});
  EXPECT_EQ(r.status, 503);
}

TEST(Service, Manifold) {
  Service s;
  const HttpResponse r = post(s, "/manifold", {{"V", -0.08},
                                               {"period", 2},
                                               {"guess", {-0.7709, 0.3033, -0.7709}},
                                               {"side", "unstable"},
                                               {"arclength", 1.0}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_GE(r.body["arclength"].get<double>(), 1.0);
  EXPECT_GT(r.body["points"].size(), 2u);
  EXPECT_EQ(r.body["owner"]["stability"], "ReflectionHyperbolic");
}

TEST(Service, TangencyScanJob) {
  Service s;
  const json body = {{"V_min", -0.15}, {"V_max", -0.01}, {"period_max", 2}};
  const HttpResponse r = post(s, "/tangency-scan", body);
  ASSERT_EQ(r.status, 202) << r.body.dump();
  const std::string id = r.body["job_id"];
  EXPECT_EQ(post(s, "/tangency-scan", body).body["job_id"], id);
  EXPECT_EQ(s.handle("GET", "/jobs/" + id, "", "other").status, 404);
  json status;
  for (int i = 0; i < 600; ++i) {
    status = s.handle("GET", "/jobs/" + id, "", "t").body;
    if (status["status"] == "done" || status["status"] == "failed") break;
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
  }
  ASSERT_EQ(status["status"], "done") << status.dump();
  EXPECT_TRUE(status["result"]["events"].is_array());
  EXPECT_TRUE(status["result"]["diagnostics"]["log"].is_array());
  EXPECT_EQ(post(s, "/tangency-scan", {{"V_min", 0.1}, {"V_max", 0.2}}).status, 400);
}

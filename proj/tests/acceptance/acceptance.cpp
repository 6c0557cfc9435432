// Acceptance checks. With no arguments every criterion runs; otherwise only the
// numbers given. One PASS/FAIL line per criterion; exit status 1 if any failed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include <Eigen/LU>
#include <fmt/format.h>

#include "tracelab/cantor.hpp"
#include "tracelab/errors.hpp"
#include "tracelab/horseshoe.hpp"
#include "tracelab/manifolds.hpp"
#include "tracelab/maps.hpp"
#include "tracelab/orbits.hpp"
#include "tracelab/parallel.hpp"
#include "tracelab/periodic.hpp"
#include "tracelab/surface.hpp"

using namespace tracelab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome invariant_conservation() {
  const double V = -0.5;
  SampleOptions so;
  so.mode = SamplingMode::AreaUniform;
  so.rng_seed = 11;
  auto seeds = sample_compact_component(V, 100, so);
  seeds.resize(100);
  std::vector<double> worst(seeds.size(), 0.0);
  parallel_for(seeds.size(), 0, [&](std::size_t i) {
    const Orbit o = iterate(seeds[i], V, 1000000, 16);
    double w = 0.0;
    for (const auto& p : o.points) w = std::max(w, std::fabs(invariant(p) - V));
    worst[i] = o.escaped ? std::numeric_limits<double>::infinity() : w;
  });
  const double m = *std::max_element(worst.begin(), worst.end());
  return {m < 1e-10, fmt::format("max |I - V| = {:.3g} over 100 seeds x 1e6 steps", m)};
}

Outcome semiconjugacy() {
  const int n = 1000;
  double m = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const TorusPoint t(static_cast<double>(i) / n, static_cast<double>(j) / n);
      m = std::max(m, distance(factor_map(anosov_step(t)), trace_map(factor_map(t))));
    }
  return {m < 1e-12, fmt::format("max |F(A t) - T(F t)| = {:.3g} on {}^2 grid", m, n)};
}

Outcome volume_preservation() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double det_err = 0.0, trip = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Point3 p(u(rng), u(rng), u(rng));
    det_err = std::max(det_err, std::fabs(jacobian(p).determinant() + 1.0));
    trip = std::max(trip, distance(trace_map_inverse(trace_map(p)), p));
    trip = std::max(trip, distance(trace_map(trace_map_inverse(p)), p));
  }
  return {det_err < 1e-14 && trip < 1e-12,
          fmt::format("max |det DT + 1| = {:.3g}, round trip {:.3g} at 1e4 points", det_err, trip)};
}

Outcome lyapunov_anchor() {
  SampleOptions so;
  so.mode = SamplingMode::AreaUniform;
  so.rng_seed = 5;
  const auto seeds = sample_compact_component(0.0, 80, so);
  std::vector<double> lam(seeds.size(), 0.0);
  parallel_for(seeds.size(), 0, [&](std::size_t i) {
    try {
      lam[i] = lyapunov_exponent(seeds[i], 0.0, 100000);
    } catch (const Error&) {
      lam[i] = std::numeric_limits<double>::quiet_NaN();
    }
  });
  double sum = 0.0;
  int used = 0;
  for (double l : lam)
    if (used < 50 && std::isfinite(l) && l > 0.01) {
      sum += l;
      ++used;
    }
  if (used < 50) return {false, fmt::format("only {} chaotic seeds", used)};
  const double mean = sum / used, target = std::log(golden);
  const double rel = std::fabs(mean - target) / target;
  return {rel < 0.02, fmt::format("mean {:.6f} vs log(golden) {:.6f}, rel err {:.3g}", mean, target, rel)};
}

Outcome figure2_trend() {
  const std::vector<double> Vs{-0.95, -0.7, -0.5, -0.2};
  std::vector<double> f;
  for (double V : Vs) f.push_back(chaos_grid(V, 100, 10000, 0.01).chaotic_fraction());
  bool ok = f[0] < 0.2;
  for (std::size_t i = 1; i < f.size(); ++i) ok = ok && f[i] > f[i - 1];
  return {ok, fmt::format("fractions {:.4f}", fmt::join(f, ", "))};
}

Outcome figure3_trend() {
  const std::vector<double> ks{0.0, 0.4, 0.8, 1.5, 5.0};
  std::vector<double> f;
  for (double k : ks) f.push_back(stdmap_chaos_grid(k, 100, 10000, 0.01).chaotic_fraction());
  bool ok = f[0] == 0.0 && f.back() > 0.9;
  for (std::size_t i = 2; i < f.size(); ++i) ok = ok && f[i] > f[i - 1];
  return {ok, fmt::format("k = 0, 0.4, 0.8, 1.5, 5: {:.4f}", fmt::join(f, ", "))};
}

Outcome thickness_oracles() {
  double worst = 0.0;
  for (double a : {1.0 / 3.0, 0.5, 0.2}) {
    const double tau = thickness(middle_alpha_cantor(a, 6));
    worst = std::max(worst, std::fabs(tau - (1.0 - a) / (2.0 * a)));
  }
  const double d = std::fabs(dim_lower_bound(1.0) - std::log(2.0) / std::log(3.0));
  return {worst < 1e-9 && d < 1e-12, fmt::format("max tau error {:.3g}, bound error {:.3g}", worst, d)};
}

Outcome gap_lemma() {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int pairs = 0, bad = 0, tries = 0;
  while (pairs < 1000 && tries < 200000) {
    ++tries;
    const double a1 = 0.2 + 0.25 * u(rng), b1 = 0.2 + 0.25 * u(rng);
    const double a2 = 0.2 + 0.25 * u(rng), b2 = 0.2 + 0.25 * u(rng);
    if (a1 + b1 >= 0.95 || a2 + b2 >= 0.95) continue;
    const double len = 0.3 + 1.4 * u(rng), lo = -len + (1.0 + len) * u(rng);
    const auto c1 = affine_cantor(a1, b1, 8);
    const auto c2 = affine_cantor(a2, b2, 8, lo, lo + len);
    const GapLemma g = gap_lemma_predict(c1, c2);
    if (!g.linked || !(g.tau_product > 1.1)) continue;
    ++pairs;
    if (g.predicted_intersect && !brute_intersect(c1, c2, 1e-12)) ++bad;
  }
  return {pairs >= 1000 && bad == 0, fmt::format("{} linked pairs, {} counterexamples", pairs, bad)};
}

bool nested(const std::vector<Interval>& inner, const std::vector<Interval>& outer) {
  for (const auto& i : inner) {
    bool in = false;
    for (const auto& o : outer)
      if (o.lo <= i.lo && i.hi <= o.hi) in = true;
    if (!in) return false;
  }
  return true;
}

Outcome survivor_trend() {
  const std::vector<double> eps{0.08, 0.04, 0.02, 0.01};
  const TorusPoint anchor(0.0, 0.0);
  const ThicknessTable t = thickness_vs_epsilon(eps, anchor, LineDirection::Stable, 14);
  bool nest = true;
  std::vector<std::vector<Interval>> surv;
  for (double e : eps) {
    AvoidanceSpec spec;
    spec.epsilon = e;
    spec.depth = 14;
    surv.push_back(survivor_section(anchor, LineDirection::Stable, spec).survivors);
  }
  for (std::size_t i = 1; i < surv.size(); ++i) nest = nest && nested(surv[i - 1], surv[i]);
  std::vector<double> taus;
  for (const auto& r : t.rows) taus.push_back(r.tau);
  return {t.nondecreasing && nest,
          fmt::format("tau {:.4g}; nested {}", fmt::join(taus, ", "), nest ? "yes" : "no")};
}

Outcome box_dimension_trend() {
  const std::vector<double> Vs{-0.8, -0.4, -0.1};
  std::vector<double> slopes, r2;
  for (double V : Vs) {
    ChaosOptions co;
    co.sheet = Sheet::Both;
    const ChaosMap m = chaos_grid(V, 100, 10000, 0.01, co);
    const std::size_t per = std::max<std::size_t>(200, 2000000 / std::max<std::size_t>(1, m.chaotic_count()));
    std::vector<Point2> pts;
    for (const auto& p : chaotic_cloud(m, per)) pts.push_back({p.x, p.y});
    const BoxCountReport r = box_dimension(pts, geometric_scales(0.2, 0.01, 8));
    slopes.push_back(r.slope);
    r2.push_back(r.r2);
  }
  bool ok = slopes.back() > 1.8;
  for (std::size_t i = 0; i < slopes.size(); ++i) ok = ok && r2[i] > 0.98;
  for (std::size_t i = 1; i < slopes.size(); ++i) ok = ok && slopes[i] >= slopes[i - 1] - 0.05;
  return {ok, fmt::format("slopes {:.3f}, r2 {:.4f}", fmt::join(slopes, ", "), fmt::join(r2, ", "))};
}

Outcome tangency() {
  HuntOptions ho;
  ho.max_period = 6;
  ho.max_events = 1;
  HuntDiagnostics d;
  const auto seeds = default_hunt_seeds(-0.08, ho.max_period);
  const auto events = tangency_hunt(-0.15, -0.01, seeds, ho, &d);
  for (const auto& e : events) {
    const double gap = std::fabs(e.c_u - e.c_s);
    const double floor = e.fit_noise / e.dV;
    const bool ok = gap > e.delta_threshold && std::fabs(e.unfolding_speed) > 10.0 * floor &&
                    std::abs(e.intersections_above - e.intersections_below) == 2;
    if (ok)
      return {true, fmt::format("V = {:.10f}, period {}, |c_u - c_s| = {:.4g}, speed {:.4g} (floor {:.3g}), counts {} -> {}",
                                e.V, e.period, gap, e.unfolding_speed, floor, e.intersections_below,
                                e.intersections_above)};
  }
  return {false, fmt::format("{} seeds, {} brackets, {} candidates, no qualifying event", seeds.size(), d.brackets,
                             d.candidates)};
}

Outcome monodromy_identities() {
  double left = 0.0, det = 0.0;
  std::size_t orbits = 0;
  for (double V : {-0.5, -0.1, 0.3}) {
    for (const auto& po : survey_periodic(V, 6)) {
      const MonodromySpectrum sp = monodromy_spectrum(po);
      if (sp.critical_point) continue;
      const Eigen::RowVector3d l = sp.neutral_left.transpose();
      left = std::max(left, (l * po.monodromy - sp.neutral.real() * l).norm());
      det = std::max(det, std::fabs(po.monodromy.determinant() - (po.period % 2 ? -1.0 : 1.0)));
      ++orbits;
    }
  }
  double rho = 0.0;
  for (int i = 0; i < 100; ++i) {
    double x = -1.0 + 2.0 * (i + 0.5) / 100.0;
    if (std::fabs(x - 0.5) < 0.05) x += 0.1;
    const Point3 p = period_two_curve(x);
    rho = std::max(rho, distance(trace_map(trace_map(p)), p));
  }
  return {orbits > 0 && left < 1e-8 && det < 1e-8 && rho < 1e-12,
          fmt::format("{} orbits: left residual {:.3g}, det error {:.3g}; rho error {:.3g}", orbits, left, det, rho)};
}

Outcome elliptic_island() {
  const double V = -0.1;
  SurveyOptions so;
  so.grid = 48;
  std::size_t elliptic = 0;
  double best = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1e-3, 1e-3);
  for (const auto& po : survey_periodic(V, 8, so)) {
    if (po.stability != Stability::Elliptic) continue;
    ++elliptic;
    for (const auto& c : po.points)
      for (int k = 0; k < 20; ++k) {
        Point3 p = c + Point3(u(rng), u(rng), u(rng)) * (1.0 / std::sqrt(3.0));
        try {
          p = project_to_level(p, V);
          if (distance(p, c) > 1e-3) continue;
          best = std::min(best, lyapunov_exponent(p, V, 20000));
        } catch (const Error&) {
        }
      }
  }
  return {best < 0.005, fmt::format("{} elliptic orbits of period <= 8, smallest nearby exponent {:.4g}", elliptic,
                                    best)};
}

}  // namespace

int main(int argc, char** argv) {
  std::setvbuf(stdout, nullptr, _IONBF, 0);
  const std::vector<std::pair<const char*, std::function<Outcome()>>> checks{
      {"invariant conservation", invariant_conservation},
      {"semiconjugacy", semiconjugacy},
      {"volume preservation", volume_preservation},
      {"Lyapunov anchor on S_0", lyapunov_anchor},
      {"chaotic fraction trend in V", figure2_trend},
      {"standard map chaotic fraction trend", figure3_trend},
      {"thickness oracles", thickness_oracles},
      {"gap lemma", gap_lemma},
      {"survivor thickness and nesting", survivor_trend},
      {"box dimension trend", box_dimension_trend},
      {"homoclinic tangency", tangency},
      {"monodromy identities", monodromy_identities},
      {"elliptic island at V = -0.1", elliptic_island},
  };
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
  if (which.empty())
    for (int i = 1; i <= static_cast<int>(checks.size()); ++i) which.push_back(i);
  int failed = 0;
  for (int n : which) {
    if (n < 1 || n > static_cast<int>(checks.size())) {
      fmt::print("criterion {}: unknown\n", n);
      ++failed;
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = checks[n - 1].second();
    } catch (const std::exception& e) {
      o = {false, fmt::format("threw: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    fmt::print("criterion {:2} {}: {} ({}; {:.1f} s)\n", n, o.pass ? "PASS" : "FAIL", checks[n - 1].first, o.detail,
               secs);
    if (!o.pass) ++failed;
  }
  return failed ? 1 : 0;
}

#include "tracelab/manifolds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "tracelab/errors.hpp"
#include "tracelab/parallel.hpp"
#include "tracelab/surface.hpp"

namespace tracelab {

std::string_view to_string(Side s) noexcept { return s == Side::Stable ? "stable" : "unstable"; }

std::string_view to_string(Precision p) noexcept { return p == Precision::Standard ? "standard" : "extended"; }

namespace {

template <class T>
Point3 apply_power(const Point3& p, long steps, bool forward) {
  T x = p.x, y = p.y, z = p.z;
  for (long i = 0; i < steps; ++i) {
    if (forward)
      kernel::trace_step(x, y, z);
    else
      kernel::trace_step_inverse(x, y, z);
  }
  return {static_cast<double>(x), static_cast<double>(y), static_cast<double>(z)};
}

Point3 reproject(const Point3& p, double V) {
  if (invariant(p) == V || norm(invariant_gradient(p)) <= kMinGradient) return p;
  try {
    return project_to_level(p, V);
  } catch (const Error&) {
    return p;
  }
}

bool near_zero_level(double V) { return std::fabs(V) < 1e-3; }

}  // namespace

Point3 ManifoldGenerator::seed(double s) const { return reproject(q + e * (delta * std::pow(mu, s)), V); }

Point3 ManifoldGenerator::point(double sigma) const {
  if (!(sigma >= 0.0)) fail(ErrorKind::InvalidArgument, fmt::format("manifold parameter {}", sigma));
  return point_at(sigma, static_cast<long>(std::floor(sigma)));
}

Point3 ManifoldGenerator::point_at(double sigma, long k) const {
  if (!std::isfinite(sigma) || k < 0) fail(ErrorKind::InvalidArgument, fmt::format("manifold parameter {}", sigma));
  const Point3 p0 = seed(sigma - static_cast<double>(k));
  const long steps = k * m;
  const bool forward = side == Side::Unstable;
  const Point3 p = precision == Precision::Extended ? apply_power<long double>(p0, steps, forward)
                                                    : apply_power<double>(p0, steps, forward);
  return reproject(p, V);
}

Point3 ManifoldGenerator::tangent(double sigma, double h) const {
  const long k = static_cast<long>(std::floor(std::max(0.0, sigma)));
  const Point3 d = point_at(sigma + h, k) - point_at(sigma - h, k);
  const double n = norm(d);
  if (n == 0.0) return e;
  return d / n;
}

ManifoldGenerator make_generator(const PeriodicOrbit& po, Side side, int branch, int point_index, double delta) {
  if (po.points.empty()) fail(ErrorKind::InvalidArgument, "empty periodic orbit");
  if (po.stability != Stability::Hyperbolic && po.stability != Stability::ReflectionHyperbolic)
    fail(ErrorKind::NotHyperbolic, fmt::format("orbit is {}", to_string(po.stability)));
  if (point_index < 0 || point_index >= po.period)
    fail(ErrorKind::InvalidArgument, fmt::format("point index {} out of range", point_index));
  std::vector<Point3> rotated(po.points.begin() + point_index, po.points.end());
  rotated.insert(rotated.end(), po.points.begin(), po.points.begin() + point_index);
  const Matrix3 M = monodromy_of(rotated);
  Eigen::EigenSolver<Matrix3> es(M);
  int pick = -1;
  for (int i = 0; i < 3; ++i) {
    const auto ev = es.eigenvalues()(i);
    if (std::fabs(ev.imag()) > 1e-9) continue;
    if (pick < 0) {
      pick = i;
      continue;
    }
    const double a = std::fabs(ev.real()), b = std::fabs(es.eigenvalues()(pick).real());
    if (side == Side::Unstable ? a > b : a < b) pick = i;
  }
  if (pick < 0) fail(ErrorKind::NotHyperbolic, "no real eigenvalues");
  const double lam = es.eigenvalues()(pick).real();
  if (side == Side::Unstable ? !(std::fabs(lam) > 1.0 + 1e-9) : !(std::fabs(lam) < 1.0 - 1e-9))
    fail(ErrorKind::NotHyperbolic, fmt::format("eigenvalue {} does not separate", lam));
  Eigen::Vector3d v = es.eigenvectors().col(pick).real().normalized();
  if (v.dot(Eigen::Vector3d(1.0, 0.5, 0.25)) < 0.0) v = -v;
  ManifoldGenerator g;
  g.V = po.V;
  g.q = rotated.front();
  g.e = Point3::from(v) * (branch < 0 ? -1.0 : 1.0);
  g.side = side;
  g.delta = delta;
  const double mag = side == Side::Unstable ? std::fabs(lam) : 1.0 / std::fabs(lam);
  g.m = lam > 0.0 ? po.period : 2 * po.period;
  g.mu = lam > 0.0 ? mag : mag * mag;
  return g;
}

namespace {

double turning(const Point3& a, const Point3& b, const Point3& c) {
  const Point3 u = b - a, v = c - b;
  const double nu = norm(u), nv = norm(v);
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return std::acos(std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0));
}

struct Grower {
  const ManifoldGenerator& gen;
  double tol;
  const GrowOptions& opts;
  std::vector<double> sig;
  std::vector<Point3> pts;

  // Refines [first, end) of the polyline until turning and chord caps hold.
  void refine_from(std::size_t first) {
    for (int pass = 0; pass < 64; ++pass) {
      std::vector<char> split(pts.size(), 0);  // split[i]: insert midpoint in segment i
      bool any = false;
      const std::size_t start = first == 0 ? 0 : first - 1;
      for (std::size_t i = start; i + 1 < pts.size(); ++i) {
        if (sig[i + 1] - sig[i] <= opts.min_dsigma) continue;
        if (distance(pts[i], pts[i + 1]) > opts.max_segment) {
          split[i] = 1;
          any = true;
        }
      }
      for (std::size_t i = std::max<std::size_t>(start, 1); i + 1 < pts.size(); ++i) {
        if (turning(pts[i - 1], pts[i], pts[i + 1]) > tol) {
          if (sig[i] - sig[i - 1] > opts.min_dsigma) split[i - 1] = 1;
          if (sig[i + 1] - sig[i] > opts.min_dsigma) split[i] = 1;
          any = any || split[i - 1] || split[i];
        }
      }
      if (!any) return;
      std::vector<double> ns;
      std::vector<Point3> np;
      ns.reserve(sig.size() * 2);
      np.reserve(sig.size() * 2);
      for (std::size_t i = 0; i < pts.size(); ++i) {
        ns.push_back(sig[i]);
        np.push_back(pts[i]);
        if (i + 1 < pts.size() && split[i]) {
          const double mid = 0.5 * (sig[i] + sig[i + 1]);
          ns.push_back(mid);
          np.push_back(gen.point(mid));
        }
      }
      sig.swap(ns);
      pts.swap(np);
      if (pts.size() > opts.max_vertices)
        fail(ErrorKind::NoConvergence, fmt::format("manifold refinement exceeded {} vertices", opts.max_vertices));
    }
  }
};

// Index of the first vertex that violates the singularity rules, if any.
// The shell check starts once the arc has entered the shrunken cube, so arcs
// of orbits sitting in a corner (P1 on S_0) can leave it.
std::optional<std::size_t> singular_violation(const std::vector<Point3>& pts, std::size_t from, double V,
                                              const PeriodicOrbit& owner, bool& hard, bool& inside) {
  if (!near_zero_level(V)) return std::nullopt;
  const auto& sing = singular_points();
  for (std::size_t i = from; i < pts.size(); ++i) {
    if (!inside) inside = max_abs(pts[i]) <= 1.0 - 1e-3;
    const Point3& p = pts[i];
    bool near_owner = false;
    for (const auto& o : owner.points) near_owner = near_owner || distance(p, o) < 2e-3;
    if (near_owner) continue;
    for (const auto& s : sing) {
      if (distance(p, s) < 1e-3) {
        hard = V == 0.0;
        return i;
      }
    }
    if (inside && max_abs(p) > 1.0 - 1e-3) {
      hard = false;
      return i;
    }
  }
  return std::nullopt;
}

double polyline_length(const std::vector<Point3>& p) {
  double L = 0.0;
  for (std::size_t i = 1; i < p.size(); ++i) L += distance(p[i - 1], p[i]);
  return L;
}

void finish_arc(ManifoldArc& arc) {
  arc.arclength = polyline_length(arc.vertices);
  arc.max_turning = 0.0;
  for (std::size_t i = 1; i + 1 < arc.vertices.size(); ++i)
    arc.max_turning = std::max(arc.max_turning, turning(arc.vertices[i - 1], arc.vertices[i], arc.vertices[i + 1]));
}

ManifoldArc grow_impl(const PeriodicOrbit& po, Side side, double target_arclength, double sigma_cap, double tol,
                      const GrowOptions& opts) {
  if (!(tol > 0.0)) fail(ErrorKind::InvalidArgument, "refinement tolerance must be positive");
  ManifoldArc arc;
  arc.owner = po;
  arc.side = side;
  arc.refinement_tol = tol;
  arc.gen = make_generator(po, side, opts.branch, opts.point_index, opts.delta);
  arc.gen.precision = opts.precision;
  Grower g{arc.gen, tol, opts, {}, {}};
  constexpr int kInitial = 8;
  for (int j = 0; j <= kInitial; ++j) {
    const double s = static_cast<double>(j) / kInitial;
    g.sig.push_back(s);
    g.pts.push_back(arc.gen.point(s));
  }
  g.refine_from(0);
  double length = polyline_length(g.pts);
  std::size_t checked = 0;
  bool inside = false;
  for (int k = 1;; ++k) {
    bool hard = false;
    if (auto bad = singular_violation(g.pts, checked, po.V, po, hard, inside)) {
      if (hard)
        fail(ErrorKind::SingularityApproach,
             fmt::format("{} arc enters the 1e-3 ball of a conic singularity at sigma = {}", to_string(side),
                         g.sig[*bad]));
      g.sig.resize(*bad);
      g.pts.resize(*bad);
      arc.truncated = true;
      arc.diagnostic = fmt::format("truncated at sigma = {} outside [-1+1e-3, 1-1e-3]^3", g.sig.empty() ? 0.0 : g.sig.back());
      break;
    }
    checked = g.pts.size();
    length = polyline_length(g.pts);
    const bool done_length = target_arclength > 0.0 && length >= target_arclength;
    const bool done_sigma = sigma_cap > 0.0 && g.sig.back() >= sigma_cap;
    if (done_length || done_sigma) break;
    if (k > 4000) fail(ErrorKind::NoConvergence, "manifold growth stalled");
    const std::size_t first = g.pts.size();
    const double top = sigma_cap > 0.0 ? std::min<double>(k + 1, sigma_cap) : k + 1;
    const double base = g.sig.back();
    for (int j = 1; j <= kInitial; ++j) {
      const double s = base + (top - base) * j / kInitial;
      g.sig.push_back(s);
      g.pts.push_back(arc.gen.point(s));
    }
    g.refine_from(first);
  }

  if (target_arclength > 0.0 && !arc.truncated && length > target_arclength) {
    // Trim to the target length, locating the cut by bisection in sigma.
    double acc = 0.0;
    std::size_t i = 1;
    for (; i < g.pts.size(); ++i) {
      const double d = distance(g.pts[i - 1], g.pts[i]);
      if (acc + d >= target_arclength) break;
      acc += d;
    }
    if (i < g.pts.size()) {
      double lo = g.sig[i - 1], hi = g.sig[i];
      const double need = target_arclength - acc;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (distance(g.pts[i - 1], arc.gen.point(mid)) < need)
          lo = mid;
        else
          hi = mid;
      }
      g.sig.resize(i);
      g.pts.resize(i);
      const double cut = 0.5 * (lo + hi);
      if (cut > g.sig.back()) {
        g.sig.push_back(cut);
        g.pts.push_back(arc.gen.point(cut));
      }
    }
  }
  arc.params = std::move(g.sig);
  arc.vertices = std::move(g.pts);
  finish_arc(arc);
  return arc;
}

}  // namespace

ManifoldArc grow_manifold(const PeriodicOrbit& po, Side side, double target_arclength, double tol,
                          const GrowOptions& opts) {
  if (!(target_arclength > 0.0)) fail(ErrorKind::InvalidArgument, "target arclength must be positive");
  return grow_impl(po, side, target_arclength, 0.0, tol, opts);
}

ManifoldArc grow_manifold_to_sigma(const PeriodicOrbit& po, Side side, double sigma_max, double tol,
                                   const GrowOptions& opts) {
  return grow_impl(po, side, 0.0, sigma_max, tol, opts);
}

ManifoldArc arc_piece(const ManifoldGenerator& gen, double s0, double s1, std::size_t n) {
  if (n < 1 || !(s1 > s0)) fail(ErrorKind::InvalidArgument, "arc piece needs s1 > s0 and n >= 1");
  ManifoldArc arc;
  arc.gen = gen;
  arc.side = gen.side;
  if (s1 - s0 <= 1.0) arc.power = static_cast<long>(std::floor(std::max(0.0, 0.5 * (s0 + s1))));
  arc.params.reserve(n + 1);
  arc.vertices.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double s = s0 + (s1 - s0) * static_cast<double>(i) / static_cast<double>(n);
    arc.params.push_back(s);
    arc.vertices.push_back(arc.point(s));
  }
  finish_arc(arc);
  return arc;
}

Point3 ManifoldArc::derivative(double sigma, double h) const {
  const double lo = power < 0 ? std::max(0.0, sigma - h) : sigma - h;
  return (point(sigma + h) - point(lo)) / (sigma + h - lo);
}

namespace {

struct Chart2 {
  Point3 o, u, v;
  std::array<double, 2> operator()(const Point3& p) const {
    const Point3 d = p - o;
    return {dot(d, u), dot(d, v)};
  }
};

// Tangent-plane chart at p with u along dir.
std::optional<Chart2> chart_at(const Point3& p, const Point3& dir) {
  const Point3 g = invariant_gradient(p);
  const double gn = norm(g);
  Point3 n;
  if (gn > kMinGradient) {
    n = g / gn;
  } else {
    return std::nullopt;
  }
  Point3 u = dir - n * dot(dir, n);
  const double un = norm(u);
  if (un < 1e-14) return std::nullopt;
  u = u / un;
  return Chart2{p, u, cross(n, u)};
}

struct SegmentHash {
  double cell;
  std::unordered_map<std::int64_t, std::vector<std::uint32_t>> map;

  static std::int64_t key(std::int64_t i, std::int64_t j, std::int64_t k) {
    return ((i + 1048576) << 42) ^ ((j + 1048576) << 21) ^ (k + 1048576);
  }
  template <class F>
  void cells(const Point3& a, const Point3& b, F&& f) const {
    const auto lo = [&](double x, double y) { return static_cast<std::int64_t>(std::floor(std::min(x, y) / cell)); };
    const auto hi = [&](double x, double y) { return static_cast<std::int64_t>(std::floor(std::max(x, y) / cell)); };
    for (auto i = lo(a.x, b.x); i <= hi(a.x, b.x); ++i)
      for (auto j = lo(a.y, b.y); j <= hi(a.y, b.y); ++j)
        for (auto k = lo(a.z, b.z); k <= hi(a.z, b.z); ++k) f(key(i, j, k));
  }
};

double max_segment(const ManifoldArc& a) {
  double m = 0.0;
  for (std::size_t i = 1; i < a.vertices.size(); ++i) m = std::max(m, distance(a.vertices[i - 1], a.vertices[i]));
  return m;
}


// Newton on chart(pa(sa)) = chart(pb(sb)).
void refine_crossing(const ManifoldArc& a, const ManifoldArc& b, Intersection& x, double span_a, double span_b) {
  double sa = x.param_a, sb = x.param_b;
  const double ha = std::max(span_a * 1e-4, 1e-12), hb = std::max(span_b * 1e-4, 1e-12);
  double err = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 30; ++it) {
    const Point3 pa = a.point(sa), pb = b.point(sb);
    const Point3 da = a.derivative(sa, ha), db = b.derivative(sb, hb);
    const auto ch = chart_at(pa, da);
    if (!ch) break;
    const auto ra = (*ch)(pa), rb = (*ch)(pb);
    const Eigen::Vector2d r(ra[0] - rb[0], ra[1] - rb[1]);
    err = r.norm();
    if (err < 1e-13) break;
    const auto ja = (*ch)(ch->o + da), jb = (*ch)(ch->o + db);
    Eigen::Matrix2d J;
    J << ja[0], -jb[0], ja[1], -jb[1];
    const Eigen::Vector2d d = J.colPivHouseholderQr().solve(-r);
    if (!d.allFinite()) break;
    const double na = sa + d(0), nb = sb + d(1);
    if (std::fabs(na - x.param_a) > 2.0 * span_a + 1e-12 || std::fabs(nb - x.param_b) > 2.0 * span_b + 1e-12 ||
        na < 0.0 || nb < 0.0)
      break;
    sa = na;
    sb = nb;
  }
  if (err < 1e-9) {
    x.param_a = sa;
    x.param_b = sb;
    x.point = a.point(sa);
    x.chart_error = err;
  }
  const Point3 ta = a.derivative(x.param_a, ha), tb = b.derivative(x.param_b, hb);
  x.angle = std::acos(std::clamp(std::fabs(dot(ta, tb)) / (norm(ta) * norm(tb)), 0.0, 1.0));
}

}  // namespace

std::vector<Intersection> find_intersections(const ManifoldArc& a, const ManifoldArc& b) {
  std::vector<Intersection> out;
  if (a.vertices.size() < 2 || b.vertices.size() < 2) return out;
  const bool self = &a == &b;
  SegmentHash hash{std::max({max_segment(a), max_segment(b), 1e-9}), {}};
  for (std::uint32_t j = 0; j + 1 < b.vertices.size(); ++j)
    hash.cells(b.vertices[j], b.vertices[j + 1], [&](std::int64_t k) { hash.map[k].push_back(j); });

  std::vector<std::uint32_t> stamp(b.vertices.size(), std::numeric_limits<std::uint32_t>::max());
  for (std::uint32_t i = 0; i + 1 < a.vertices.size(); ++i) {
    const Point3 &a0 = a.vertices[i], &a1 = a.vertices[i + 1];
    std::vector<std::uint32_t> cand;
    hash.cells(a0, a1, [&](std::int64_t k) {
      auto it = hash.map.find(k);
      if (it == hash.map.end()) return;
      for (auto j : it->second)
        if (stamp[j] != i) {
          stamp[j] = i;
          cand.push_back(j);
        }
    });
    std::sort(cand.begin(), cand.end());
    for (auto j : cand) {
      if (self && j <= i + 1) continue;
      const Point3 &b0 = b.vertices[j], &b1 = b.vertices[j + 1];
      const auto ch = chart_at((a0 + a1) * 0.5, a1 - a0);
      if (!ch) continue;
      const auto p0 = (*ch)(a0), p1 = (*ch)(a1), q0 = (*ch)(b0), q1 = (*ch)(b1);
      const double rx = p1[0] - p0[0], ry = p1[1] - p0[1];
      const double sx = q1[0] - q0[0], sy = q1[1] - q0[1];
      const double den = rx * sy - ry * sx;
      if (den == 0.0) continue;
      const double qpx = q0[0] - p0[0], qpy = q0[1] - p0[1];
      const double t = (qpx * sy - qpy * sx) / den;
      const double u = (qpx * ry - qpy * rx) / den;
      if (!(t >= 0.0 && t < 1.0 && u >= 0.0 && u < 1.0)) continue;
      const Point3 pa = a0 + (a1 - a0) * t, pb = b0 + (b1 - b0) * u;
      const double scale = std::max(distance(a0, a1), distance(b0, b1));
      if (distance(pa, pb) > scale) continue;  // crossing only in projection
      Intersection x;
      x.segment_a = i;
      x.segment_b = j;
      x.param_a = a.params[i] + (a.params[i + 1] - a.params[i]) * t;
      x.param_b = b.params[j] + (b.params[j + 1] - b.params[j]) * u;
      x.point = pa;
      x.chart_error = distance(pa, pb);
      refine_crossing(a, b, x, a.params[i + 1] - a.params[i], b.params[j + 1] - b.params[j]);
      out.push_back(x);
    }
  }
  std::sort(out.begin(), out.end(), [](const Intersection& x, const Intersection& y) { return x.param_a < y.param_a; });
  return out;
}

double extremal_separation(const QuadFit& u, const QuadFit& s) {
  const double A = u.a - s.a, B = u.b - s.b, C = u.c - s.c;
  if (C == 0.0) return std::numeric_limits<double>::infinity();
  return (B * B - 4.0 * A * C) / (4.0 * std::fabs(C));
}

namespace {

// Parameter near sigma0 where the curve crosses s = 0 of the frame.
long power_of(double sigma) { return static_cast<long>(std::floor(std::max(0.0, sigma))); }

double center_param(const ManifoldGenerator& g, double sigma0, const TangencyFrame& f) {
  double s = sigma0;
  const double h = 1e-7;
  const long k = power_of(sigma0);
  for (int it = 0; it < 30; ++it) {
    const double val = f.s(g.point_at(s, k));
    if (std::fabs(val) < 1e-15) break;
    const double ds = (f.s(g.point_at(s + h, k)) - f.s(g.point_at(s - h, k))) / (2.0 * h);
    if (ds == 0.0 || !std::isfinite(ds)) break;
    const double next = s - val / ds;
    if (std::fabs(next - sigma0) > 1.0) break;
    s = next;
  }
  return s;
}

QuadFit fit_curve(const ManifoldGenerator& g, double sigma_c, const TangencyFrame& f, double w, int n) {
  const double h = 1e-7;
  const long k = power_of(sigma_c);
  const double speed = std::fabs(f.s(g.point_at(sigma_c + h, k)) - f.s(g.point_at(sigma_c - h, k))) / (2.0 * h);
  if (!(speed > 0.0)) fail(ErrorKind::PoorFit, "curve is transverse to the frame tangent");
  Eigen::MatrixXd A(n, 3);
  Eigen::VectorXd y(n);
  QuadFit q;
  q.lo = std::numeric_limits<double>::infinity();
  q.hi = -q.lo;
  for (int j = 0; j < n; ++j) {
    const double target = -w + 2.0 * w * j / (n - 1);
    // one Newton correction toward the requested s
    double sig = sigma_c + target / speed;
    Point3 p = g.point_at(sig, k);
    sig += (target - f.s(p)) / speed;
    p = g.point_at(sig, k);
    const double s = f.s(p) / w;  // scaled for conditioning
    A(j, 0) = 1.0;
    A(j, 1) = s;
    A(j, 2) = s * s;
    y(j) = f.eta(p);
    q.lo = std::min(q.lo, s * w);
    q.hi = std::max(q.hi, s * w);
  }
  const Eigen::Vector3d c = A.colPivHouseholderQr().solve(y);
  q.a = c(0);
  q.b = c(1) / w;
  q.c = c(2) / (w * w);
  q.residual = (A * c - y).cwiseAbs().maxCoeff();
  return q;
}

TangencyFrame make_frame(const Point3& origin, const Point3& dir) {
  const Point3 g = invariant_gradient(origin);
  const double gn = norm(g);
  if (gn <= kMinGradient) fail(ErrorKind::SingularGradient, "tangency frame at a critical point");
  const Point3 n = g / gn;
  Point3 t = dir - n * dot(dir, n);
  t = t / norm(t);
  return {origin, t, cross(n, t), n};
}

}  // namespace

PairFit fit_pair(const ManifoldGenerator& gs, double sigma_s, const ManifoldGenerator& gu, double sigma_u,
                 const TangencyOptions& opts, const TangencyFrame* frame) {
  PairFit pf;
  if (frame) {
    pf.frame = *frame;
  } else {
    const Point3 pu = gu.point(sigma_u);
    Point3 tu = gu.tangent(sigma_u), ts = gs.tangent(sigma_s);
    if (dot(tu, ts) < 0.0) ts = ts * -1.0;
    pf.frame = make_frame(pu, tu + ts);
  }
  pf.sigma_u = center_param(gu, sigma_u, pf.frame);
  pf.sigma_s = center_param(gs, sigma_s, pf.frame);
  double w = opts.window;
  for (int attempt = 0; attempt < 4; ++attempt) {
    pf.u = fit_curve(gu, pf.sigma_u, pf.frame, w, opts.window_points);
    pf.s = fit_curve(gs, pf.sigma_s, pf.frame, w, opts.window_points);
    pf.window = w;
    if (std::max(pf.u.residual, pf.s.residual) < opts.max_residual) return pf;
    w *= 0.25;
  }
  fail(ErrorKind::PoorFit, fmt::format("quadratic fit residual {:.3g} exceeds {:.3g} (window {:.3g})",
                                       std::max(pf.u.residual, pf.s.residual), opts.max_residual, w * 4.0));
}

namespace {

double crossing_angle_of(const QuadFit& u, const QuadFit& s) {
  const double A = u.a - s.a, B = u.b - s.b, C = u.c - s.c;
  const double disc = B * B - 4.0 * A * C;
  return disc > 0.0 ? std::atan(std::sqrt(disc)) : 0.0;
}

namespace {

// Moves the frame onto the extremum of the separation until it sits inside
// the fit window.
PairFit recentre(const ManifoldGenerator& gs, const ManifoldGenerator& gu, PairFit pf, const TangencyOptions& opts) {
  for (int it = 0; it < 8; ++it) {
    const double C = pf.u.c - pf.s.c, B = pf.u.b - pf.s.b;
    if (C == 0.0) break;
    double sx = -B / (2.0 * C);
    if (std::fabs(sx) < 0.1 * pf.window) break;
    sx = std::clamp(sx, -0.05, 0.05);
    const Point3 o = pf.frame.origin + pf.frame.tangent * sx + pf.frame.across * pf.u(sx);
    try {
      const TangencyFrame f2 = make_frame(o, pf.frame.tangent + pf.frame.across * (pf.u.b + 2.0 * pf.u.c * sx));
      pf = fit_pair(gs, pf.sigma_s, gu, pf.sigma_u, opts, &f2);
    } catch (const Error&) {
      break;
    }
  }
  return pf;
}

}  // namespace

std::optional<TangencyEvent> make_event(const ManifoldGenerator& gs, double sigma_s, const ManifoldGenerator& gu,
                                        double sigma_u, const TangencyOptions& opts,
                                        std::vector<std::string>* diagnostics) {
  PairFit pf;
  try {
    pf = fit_pair(gs, sigma_s, gu, sigma_u, opts);
  } catch (const Error& e) {
    if (diagnostics) diagnostics->push_back(fmt::format("candidate at sigma_u = {}: {}", sigma_u, e.what()));
    return std::nullopt;
  }
  pf = recentre(gs, gu, std::move(pf), opts);
  TangencyEvent ev;
  ev.V = gu.V;
  ev.frame = pf.frame;
  ev.location = pf.frame.origin;
  ev.param_s = pf.sigma_s;
  ev.param_u = pf.sigma_u;
  ev.fit_s = pf.s;
  ev.fit_u = pf.u;
  ev.c_s = pf.s.c;
  ev.c_u = pf.u.c;
  ev.separation = extremal_separation(pf.u, pf.s);
  ev.crossing_angle = crossing_angle_of(pf.u, pf.s);
  ev.fit_noise = std::max(pf.u.residual, pf.s.residual);
  ev.window = pf.window;
  ev.delta_threshold = opts.Delta;
  ev.angle_tol = opts.angle_tol;
  ev.gen_s = gs;
  ev.gen_u = gu;
  if (!(ev.crossing_angle < opts.angle_tol)) {
    if (diagnostics)
      diagnostics->push_back(fmt::format("candidate at sigma_u = {}: crossing angle {:.3g} >= {:.3g}", sigma_u,
                                         ev.crossing_angle, opts.angle_tol));
    return std::nullopt;
  }
  if (!(std::fabs(ev.c_u - ev.c_s) > opts.Delta)) {
    if (diagnostics)
      diagnostics->push_back(fmt::format("candidate at sigma_u = {}: curvature gap {:.3g} <= Delta", sigma_u,
                                         std::fabs(ev.c_u - ev.c_s)));
    return std::nullopt;
  }
  return ev;
}

}  // namespace

std::vector<TangencyEvent> detect_tangencies(const ManifoldArc& ws, const ManifoldArc& wu, const TangencyOptions& opts,
                                             std::vector<std::string>* diagnostics) {
  struct Cand {
    double su, ss;
    Point3 p;
  };
  std::vector<Cand> cands;
  for (const auto& x : find_intersections(wu, ws))
    if (x.angle < opts.angle_tol) cands.push_back({x.param_a, x.param_b, x.point});

  // Parallel near-misses: local minima of vertex-to-polyline distance.
  if (ws.vertices.size() >= 2 && wu.vertices.size() >= 3) {
    SegmentHash hash{std::max({max_segment(ws), opts.near_miss, 1e-9}), {}};
    for (std::uint32_t j = 0; j + 1 < ws.vertices.size(); ++j)
      hash.cells(ws.vertices[j], ws.vertices[j + 1], [&](std::int64_t k) { hash.map[k].push_back(j); });
    std::vector<double> dist(wu.vertices.size(), std::numeric_limits<double>::infinity());
    std::vector<double> spar(wu.vertices.size(), 0.0);
    for (std::size_t i = 0; i < wu.vertices.size(); ++i) {
      const Point3& p = wu.vertices[i];
      hash.cells(p, p, [&](std::int64_t k) {
        auto it = hash.map.find(k);
        if (it == hash.map.end()) return;
        for (auto j : it->second) {
          const Point3 &a = ws.vertices[j], &b = ws.vertices[j + 1];
          const Point3 d = b - a;
          const double L2 = dot(d, d);
          const double t = L2 > 0.0 ? std::clamp(dot(p - a, d) / L2, 0.0, 1.0) : 0.0;
          const double dd = distance(p, a + d * t);
          if (dd < dist[i]) {
            dist[i] = dd;
            spar[i] = ws.params[j] + (ws.params[j + 1] - ws.params[j]) * t;
          }
        }
      });
    }
    for (std::size_t i = 1; i + 1 < wu.vertices.size(); ++i) {
      if (!(dist[i] < opts.near_miss) || dist[i] > dist[i - 1] || dist[i] > dist[i + 1]) continue;
      const Point3 tu = wu.gen.tangent(wu.params[i]), ts = ws.gen.tangent(spar[i]);
      if (std::acos(std::clamp(std::fabs(dot(tu, ts)), 0.0, 1.0)) > 10.0 * opts.angle_tol) continue;
      cands.push_back({wu.params[i], spar[i], wu.vertices[i]});
    }
  }

  std::vector<TangencyEvent> out;
  for (const auto& c : cands) {
    bool dup = false;
    for (const auto& e : out) dup = dup || distance(e.location, c.p) < 2.0 * opts.window;
    if (dup) continue;
    auto ev = make_event(ws.gen, c.ss, wu.gen, c.su, opts, diagnostics);
    if (!ev) continue;
    for (const auto& e : out) dup = dup || distance(e.location, ev->location) < 2.0 * opts.window;
    if (dup) continue;
    ev->period = wu.owner.period;
    out.push_back(std::move(*ev));
  }
  return out;
}

ManifoldGenerator continue_generator(const ManifoldGenerator& gen, const PeriodicOrbit& owner, double V, Side side,
                                     int branch, int point_index, PeriodicOrbit* moved) {
  const Point3 start = owner.points.at(point_index);
  PeriodicOrbit po = find_periodic(V, owner.period, start);
  if (distance(po.points.front(), start) > 1e-2)
    fail(ErrorKind::BranchLost, fmt::format("periodic point jumped by {} at V = {}", distance(po.points.front(), start), V));
  ManifoldGenerator g = make_generator(po, side, branch, 0, gen.delta);
  if (dot(g.e, gen.e) < 0.0) g.e = g.e * -1.0;
  g.precision = gen.precision;
  if (moved) *moved = std::move(po);
  return g;
}

int count_local_intersections(const ManifoldGenerator& gs, double sigma_s, const ManifoldGenerator& gu,
                              double sigma_u, const TangencyFrame& frame, double window) {
  auto piece = [&](const ManifoldGenerator& g, double sigma) {
    const double h = 1e-7;
    const long k = power_of(sigma);
    const double speed = std::fabs(frame.s(g.point_at(sigma + h, k)) - frame.s(g.point_at(sigma - h, k))) / (2.0 * h);
    const double c = center_param(g, sigma, frame);
    const double span = 1.5 * window / speed;
    ManifoldArc piece = arc_piece(g, std::max(0.0, c - span), c + span, 3000);
    piece.power = k;
    for (std::size_t i = 0; i < piece.params.size(); ++i) piece.vertices[i] = piece.point(piece.params[i]);
    return piece;
  };
  const ManifoldArc a = piece(gu, sigma_u);
  const ManifoldArc b = piece(gs, sigma_s);
  int n = 0;
  for (const auto& x : find_intersections(a, b))
    if (std::fabs(frame.s(x.point)) <= window) ++n;
  return n;
}

double unfolding_speed(TangencyEvent& event, const PeriodicOrbit& owner, double dV, const TangencyOptions& opts,
                       int branch_s, int branch_u, int point_index) {
  if (!(dV > 0.0)) fail(ErrorKind::InvalidArgument, "dV must be positive");
  double M[2] = {0.0, 0.0};
  int count[2] = {0, 0};
  double noise = event.fit_noise;
  TangencyOptions o = opts;
  o.window = event.window > 0.0 ? event.window : opts.window;
  for (int k = 0; k < 2; ++k) {
    const double V = event.V + (k == 0 ? -dV : dV);
    const ManifoldGenerator gs = continue_generator(event.gen_s, owner, V, Side::Stable, branch_s, point_index);
    const ManifoldGenerator gu = continue_generator(event.gen_u, owner, V, Side::Unstable, branch_u, point_index);
    const PairFit pf = fit_pair(gs, event.param_s, gu, event.param_u, o, &event.frame);
    M[k] = extremal_separation(pf.u, pf.s);
    noise = std::max({noise, pf.u.residual, pf.s.residual});
    // The bigon can be wider than the fit window.
    const double C = std::fabs(pf.u.c - pf.s.c);
    double w = pf.window;
    if (C > 0.0) w = std::clamp(4.0 * std::sqrt(std::fabs(M[k]) / C), w, 0.05);
    count[k] = count_local_intersections(gs, pf.sigma_s, gu, pf.sigma_u, event.frame, w);
  }
  event.dV = dV;
  event.fit_noise = noise;
  event.intersections_below = count[0];
  event.intersections_above = count[1];
  event.unfolding_speed = (M[1] - M[0]) / (2.0 * dV);
  return event.unfolding_speed;
}

bool tangent_graph_intersection_check(const QuadFit& g, const QuadFit& u, const QuadFit& v, double alpha,
                                      double beta) {
  (void)g;
  if (beta < alpha) std::swap(alpha, beta);
  if (beta - alpha <= 1e-15) return true;
  const double A = u.a - v.a, B = u.b - v.b, C = u.c - v.c;
  auto f = [&](double s) { return A + (B + C * s) * s; };
  const double fa = f(alpha), fb = f(beta);
  const double tol = 1e-12;
  if (std::fabs(fa) <= tol || std::fabs(fb) <= tol || fa * fb < 0.0) return true;
  if (C != 0.0) {
    const double s = -B / (2.0 * C);
    if (s > alpha && s < beta && f(s) * fa <= 0.0) return true;
  }
  return false;
}

}  // namespace tracelab

namespace tracelab {

namespace {

struct ArcSet {
  double V = 0.0;
  PeriodicOrbit orbit;
  std::vector<ManifoldArc> stable, unstable;  // branch +1, -1
};

constexpr int kBranches[2] = {1, -1};

ArcSet grow_set(const PeriodicOrbit& po, const double caps_s[2], const double caps_u[2], double tol) {
  ArcSet set;
  set.V = po.V;
  set.orbit = po;
  for (int b = 0; b < 2; ++b) {
    GrowOptions go;
    go.branch = kBranches[b];
    set.stable.push_back(grow_manifold_to_sigma(po, Side::Stable, caps_s[b], tol, go));
    set.unstable.push_back(grow_manifold_to_sigma(po, Side::Unstable, caps_u[b], tol, go));
  }
  return set;
}

struct Candidate {
  double sigma_s, sigma_u;
  int bs, bu;
};

bool matched(const Intersection& x, const std::vector<Intersection>& others) {
  for (const auto& y : others)
    if (std::fabs(x.param_a - y.param_a) + std::fabs(x.param_b - y.param_b) < 1e-4) return true;
  return false;
}

struct SepSample {
  double M = 0.0;
  double sigma_s = 0.0, sigma_u = 0.0;
  TangencyFrame frame;
  bool ok = false;
  std::string error;
};

SepSample separation_at(const PeriodicOrbit& owner, double V, const ManifoldGenerator& gs0, const ManifoldGenerator& gu0,
                        int bs, int bu, double sigma_s, double sigma_u, const TangencyOptions& opts) {
  SepSample out;
  try {
    PeriodicOrbit moved;
    const ManifoldGenerator gs = continue_generator(gs0, owner, V, Side::Stable, bs, 0, &moved);
    const ManifoldGenerator gu = continue_generator(gu0, owner, V, Side::Unstable, bu, 0);
    const PairFit pf = recentre(gs, gu, fit_pair(gs, sigma_s, gu, sigma_u, opts), opts);
    out.M = extremal_separation(pf.u, pf.s);
    out.sigma_s = pf.sigma_s;
    out.sigma_u = pf.sigma_u;
    out.frame = pf.frame;
    out.ok = std::isfinite(out.M);
  } catch (const Error& e) {
    out.error = e.what();
  }
  return out;
}

}  // namespace

std::vector<PeriodicOrbit> default_hunt_seeds(double V, int max_period) {
  SurveyOptions so;
  so.grid = 16;
  so.symmetric_resolution = 100000;
  std::vector<PeriodicOrbit> out;
  for (auto& po : survey_periodic(V, max_period, so))
    if (po.stability == Stability::Hyperbolic || po.stability == Stability::ReflectionHyperbolic)
      out.push_back(std::move(po));
  return out;
}

std::vector<TangencyEvent> tangency_hunt(double V_lo, double V_hi, const std::vector<PeriodicOrbit>& seeds,
                                         const HuntOptions& opts, HuntDiagnostics* diag) {
  if (!(V_lo < V_hi) || !(V_lo > -1.0) || !(V_hi < 0.0))
    fail(ErrorKind::InvalidArgument, fmt::format("hunt range ({}, {}) must lie inside (-1, 0)", V_lo, V_hi));
  if (opts.v_grid < 2) fail(ErrorKind::InvalidArgument, "v_grid must be at least 2");
  HuntDiagnostics local;
  HuntDiagnostics& d = diag ? *diag : local;
  std::vector<TangencyEvent> events;
  const double dv = (V_hi - V_lo) / opts.v_grid;
  d.initial_bracket = dv;

  for (const auto& seed : seeds) {
    if (events.size() >= opts.max_events) break;
    if (seed.period > opts.max_period) continue;
    if (seed.stability != Stability::Hyperbolic && seed.stability != Stability::ReflectionHyperbolic) continue;

    // Orbit at each grid node, continued node to node.
    std::vector<double> nodes;
    for (int i = 0; i < opts.v_grid; ++i) nodes.push_back(V_lo + (i + 0.5) * dv);
    std::vector<std::optional<PeriodicOrbit>> orbit(nodes.size());
    try {
      PeriodicOrbit cur = continue_in_V(seed, nodes.front(), 0.005).orbits.back();
      if (cur.V != nodes.front()) {
        d.log.push_back(fmt::format("period {} seed lost before V = {}", seed.period, nodes.front()));
        continue;
      }
      orbit[0] = cur;
      for (std::size_t i = 1; i < nodes.size(); ++i) {
        ContinuationBranch br = continue_in_V(*orbit[i - 1], nodes[i], 0.005);
        if (br.orbits.back().V != nodes[i]) break;
        orbit[i] = br.orbits.back();
      }
    } catch (const Error& e) {
      d.log.push_back(fmt::format("period {} seed: {}", seed.period, e.what()));
      continue;
    }

    double caps_s[2] = {0, 0}, caps_u[2] = {0, 0};
    try {
      for (int b = 0; b < 2; ++b) {
        GrowOptions go;
        go.branch = kBranches[b];
        caps_s[b] = grow_manifold(*orbit[0], Side::Stable, opts.arclength, opts.refine_tol, go).params.back();
        caps_u[b] = grow_manifold(*orbit[0], Side::Unstable, opts.arclength, opts.refine_tol, go).params.back();
      }
    } catch (const Error& e) {
      d.log.push_back(fmt::format("period {} seed: {}", seed.period, e.what()));
      continue;
    }

    // Intersection lists per node and branch pair.
    std::vector<std::array<std::vector<Intersection>, 4>> lists(nodes.size());
    std::vector<char> node_ok(nodes.size(), 0);
    parallel_for(nodes.size(), opts.workers, [&](std::size_t i) {
      if (!orbit[i] || orbit[i]->stability == Stability::Elliptic || orbit[i]->stability == Stability::Parabolic)
        return;
      try {
        const ArcSet set = grow_set(*orbit[i], caps_s, caps_u, opts.refine_tol);
        for (int bs = 0; bs < 2; ++bs)
          for (int bu = 0; bu < 2; ++bu) lists[i][bs * 2 + bu] = find_intersections(set.unstable[bu], set.stable[bs]);
        node_ok[i] = 1;
      } catch (const Error&) {
      }
    });
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!node_ok[i]) continue;
      double amin = M_PI / 2;
      for (const auto& l : lists[i])
        for (const auto& x : l) amin = std::min(amin, x.angle);
      d.min_angle_by_V.emplace_back(nodes[i], amin);
    }

    for (std::size_t i = 0; i + 1 < nodes.size() && events.size() < opts.max_events; ++i) {
      if (!node_ok[i] || !node_ok[i + 1]) continue;
      for (int combo = 0; combo < 4 && events.size() < opts.max_events; ++combo) {
        if (lists[i][combo].size() == lists[i + 1][combo].size()) continue;
        const int bs = kBranches[combo / 2], bu = kBranches[combo % 2];
        ++d.brackets;
        // Bisect on the intersection count of this branch pair.
        double Va = nodes[i], Vb = nodes[i + 1];
        PeriodicOrbit oa = *orbit[i], ob = *orbit[i + 1];
        std::vector<Intersection> xa = lists[i][combo], xb = lists[i + 1][combo];
        auto intersections_at = [&](const PeriodicOrbit& po) {
          GrowOptions gs, gu;
          gs.branch = bs;
          gu.branch = bu;
          const ManifoldArc s = grow_manifold_to_sigma(po, Side::Stable, caps_s[combo / 2], opts.refine_tol, gs);
          const ManifoldArc u = grow_manifold_to_sigma(po, Side::Unstable, caps_u[combo % 2], opts.refine_tol, gu);
          return find_intersections(u, s);
        };
        bool failed = false;
        for (int step = 0; step < opts.bisection_steps && Vb - Va > 1e-9; ++step) {
          const double Vm = 0.5 * (Va + Vb);
          try {
            PeriodicOrbit om = find_periodic(Vm, oa.period, oa.points.front());
            std::vector<Intersection> xm = intersections_at(om);
            if (xm.size() != xa.size()) {
              Vb = Vm;
              ob = std::move(om);
              xb = std::move(xm);
            } else {
              Va = Vm;
              oa = std::move(om);
              xa = std::move(xm);
            }
          } catch (const Error&) {
            failed = true;
            break;
          }
        }
        d.final_bracket = Vb - Va;
        if (failed) continue;

        // The side with more crossings holds the pair that merges at the tangency.
        const bool a_more = xa.size() > xb.size();
        const auto& more = a_more ? xa : xb;
        const auto& fewer = a_more ? xb : xa;
        const PeriodicOrbit& omore = a_more ? oa : ob;
        std::vector<Intersection> extra;
        for (const auto& x : more)
          if (!matched(x, fewer)) extra.push_back(x);
        std::optional<Candidate> cand;
        for (std::size_t p = 0; p < extra.size() && !cand; ++p)
          for (std::size_t q = p + 1; q < extra.size() && !cand; ++q)
            if (distance(extra[p].point, extra[q].point) < 0.1)
              cand = Candidate{0.5 * (extra[p].param_b + extra[q].param_b), 0.5 * (extra[p].param_a + extra[q].param_a),
                               bs, bu};
        if (!cand) {
          d.log.push_back(fmt::format("bracket [{}, {}]: count change without a merging pair", Va, Vb));
          continue;
        }
        ++d.candidates;

        // Root of the extremal separation M(V) by regula falsi (Illinois).
        const ManifoldGenerator gs0 = make_generator(omore, Side::Stable, bs);
        const ManifoldGenerator gu0 = make_generator(omore, Side::Unstable, bu);
        double sig_s = cand->sigma_s, sig_u = cand->sigma_u;
        double V0 = omore.V;
        SepSample m0 = separation_at(omore, V0, gs0, gu0, bs, bu, sig_s, sig_u, opts.tangency);
        if (!m0.ok || !(m0.M > 0.0)) {
          d.log.push_back(m0.ok ? fmt::format("candidate at V = {}: separation {} on the crossing side", V0, m0.M)
                                : fmt::format("candidate at V = {}: {}", V0, m0.error));
          continue;
        }
        // Step toward the other side until M changes sign.
        const double dir = a_more ? 1.0 : -1.0;
        double V1 = V0, h = std::max(Vb - Va, 1e-9);
        SepSample m1;
        for (int k = 0; k < 40; ++k) {
          V1 = V0 + dir * h;
          m1 = separation_at(omore, V1, gs0, gu0, bs, bu, m0.sigma_s, m0.sigma_u, opts.tangency);
          if (m1.ok && m1.M < 0.0) break;
          if (m1.ok) {
            V0 = V1;
            m0 = m1;
          }
          h *= 2.0;
          m1.ok = false;
        }
        if (!m1.ok) {
          d.log.push_back(fmt::format("candidate at V = {}: no sign change in separation", V0));
          continue;
        }
        int side_kept = 0;
        for (int it = 0; it < 100 && std::fabs(V1 - V0) > 1e-15; ++it) {
          double Vm = V1 - m1.M * (V1 - V0) / (m1.M - m0.M);
          if (!(Vm > std::min(V0, V1) && Vm < std::max(V0, V1))) Vm = 0.5 * (V0 + V1);
          SepSample mm = separation_at(omore, Vm, gs0, gu0, bs, bu, m0.sigma_s, m0.sigma_u, opts.tangency);
          if (!mm.ok) break;
          if (mm.M == 0.0) {
            V0 = V1 = Vm;
            m0 = mm;
            break;
          }
          if (mm.M > 0.0) {
            V0 = Vm;
            m0 = mm;
            if (side_kept == 1) m1.M *= 0.5;
            side_kept = 1;
          } else {
            V1 = Vm;
            m1 = mm;
            if (side_kept == -1) m0.M *= 0.5;
            side_kept = -1;
          }
        }
        const double Vstar = V0;
        d.final_bracket = std::fabs(V1 - V0);
        PeriodicOrbit ostar;
        ManifoldGenerator gs, gu;
        try {
          gs = continue_generator(gs0, omore, Vstar, Side::Stable, bs, 0, &ostar);
          gu = continue_generator(gu0, omore, Vstar, Side::Unstable, bu, 0);
        } catch (const Error& e) {
          d.log.push_back(fmt::format("candidate at V = {}: {}", Vstar, e.what()));
          continue;
        }
        std::vector<std::string> notes;
        auto ev = make_event(gs, m0.sigma_s, gu, m0.sigma_u, opts.tangency, &notes);
        for (auto& n : notes) d.log.push_back(n);
        if (!ev) continue;
        ev->period = ostar.period;
        try {
          unfolding_speed(*ev, ostar, opts.dV, opts.tangency, bs, bu, 0);
        } catch (const Error& e) {
          d.log.push_back(fmt::format("unfolding at V = {}: {}", Vstar, e.what()));
          continue;
        }
        const double noise_floor = ev->fit_noise / ev->dV;
        ev->diagnostics.push_back(fmt::format("bracket {:.3g} -> {:.3g}", dv, d.final_bracket));
        ev->diagnostics.push_back(fmt::format("branches stable {} unstable {}", bs, bu));
        ev->diagnostics.push_back(fmt::format("speed noise floor {:.3g}", noise_floor));
        const bool unfolds = std::fabs(ev->unfolding_speed) > 10.0 * noise_floor;
        const bool normal_form = std::abs(ev->intersections_above - ev->intersections_below) == 2;
        d.log.push_back(fmt::format("event V = {:.15g}: angle {:.3g}, |c_u - c_s| = {:.4g}, speed {:.4g}, counts {} -> {}",
                                    ev->V, ev->crossing_angle, std::fabs(ev->c_u - ev->c_s), ev->unfolding_speed,
                                    ev->intersections_below, ev->intersections_above));
        if (unfolds && normal_form) events.push_back(std::move(*ev));
      }
    }
  }
  return events;
}

}  // namespace tracelab

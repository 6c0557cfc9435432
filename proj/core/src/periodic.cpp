#include "tracelab/periodic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <fmt/format.h>

#include "tracelab/errors.hpp"
#include "tracelab/orbits.hpp"
#include "tracelab/parallel.hpp"
#include "tracelab/surface.hpp"

namespace tracelab {

std::string_view to_string(Stability s) noexcept {
  switch (s) {
    case Stability::Elliptic: return "Elliptic";
    case Stability::Hyperbolic: return "Hyperbolic";
    case Stability::ReflectionHyperbolic: return "ReflectionHyperbolic";
    case Stability::Parabolic: return "Parabolic";
  }
  return "Unknown";
}

std::string_view to_string(BranchEventKind k) noexcept {
  switch (k) {
    case BranchEventKind::EllipticTransition: return "EllipticTransition";
    case BranchEventKind::PeriodDoubling: return "PeriodDoubling";
    case BranchEventKind::Fold: return "Fold";
    case BranchEventKind::LostConvergence: return "LostConvergence";
  }
  return "Unknown";
}

namespace {

// Below this gradient norm the tangent chart is unreliable and Newton works in R^3.
constexpr double kChartGradient = 1e-6;

struct PeriodEval {
  Point3 image;
  Matrix3 M;
};

PeriodEval eval_period(const Point3& p, int n) {
  PeriodEval e{p, Matrix3::Identity()};
  for (int i = 0; i < n; ++i) {
    e.M = jacobian(e.image) * e.M;
    e.image = trace_map(e.image);
  }
  return e;
}

Point3 power(Point3 p, int n) {
  for (int i = 0; i < n; ++i) p = trace_map(p);
  return p;
}

int minimal_period_of(const Point3& p, int n, double tol) {
  for (int d = 1; d < n; ++d)
    if (n % d == 0 && distance(power(p, d), p) < tol) return d;
  return n;
}

}  // namespace

Matrix3 monodromy_of(const std::vector<Point3>& points) {
  Matrix3 M = Matrix3::Identity();
  for (const auto& p : points) M = jacobian(p) * M;
  return M;
}

PeriodicOrbit find_periodic(double V, int period, const Point3& guess, const FindOptions& opts) {
  if (period < 1) fail(ErrorKind::InvalidArgument, "period must be at least 1");
  if (!std::isfinite(V)) fail(ErrorKind::NonFinite, "level V");

  Point3 p = guess;
  if (norm(invariant_gradient(p)) > kChartGradient && invariant(p) != V) {
    try {
      p = project_to_level(p, V);
    } catch (const Error&) {
    }
  }

  double prev_res = std::numeric_limits<double>::infinity();
  int increases = 0;
  bool half = false;
  bool converged = false;
  int it = 0;
  for (it = 1; it <= opts.max_iter; ++it) {
    const PeriodEval ev = eval_period(p, period);
    const Point3 r = ev.image - p;
    const double res = norm(r);
    if (res == 0.0) {
      converged = true;
      break;
    }
    if (res > prev_res) {
      if (++increases >= 2) half = true;
    } else {
      increases = 0;
    }
    prev_res = res;
    const double factor = half ? 0.5 : 1.0;

    const Point3 g = invariant_gradient(p);
    std::optional<Point3> next;
    if (norm(g) > kChartGradient) {
      const TangentFrame f = tangent_frame(p);
      Eigen::Matrix<double, 3, 2> U;
      U.col(0) = f.u1.eigen();
      U.col(1) = f.u2.eigen();
      const Eigen::Matrix2d A = U.transpose() * (ev.M - Matrix3::Identity()) * U;
      const Eigen::Vector2d b = -U.transpose() * r.eigen();
      Eigen::JacobiSVD<Eigen::Matrix2d> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
      const auto sv = svd.singularValues();
      if (!(sv(1) > 0.0) || sv(0) / sv(1) > opts.max_condition)
        fail(ErrorKind::SingularJacobian,
             fmt::format("chart Newton matrix condition {:.3g} at iteration {}",
                         sv(1) > 0.0 ? sv(0) / sv(1) : std::numeric_limits<double>::infinity(), it));
      const Point3 trial = p + Point3::from(U * svd.solve(b)) * factor;
      if (max_abs(trial) > 10.0) fail(ErrorKind::NoConvergence, "Newton iterate left [-10,10]^3");
      try {
        next = project_to_level(trial, V);
      } catch (const Error&) {
        // tiny or empty level component: fall through to the unconstrained step
      }
    }
    if (!next) {
      Eigen::Matrix<double, 4, 3> B;
      B.topRows<3>() = ev.M - Matrix3::Identity();
      B.row(3) = g.eigen().transpose();
      Eigen::Vector4d rhs;
      rhs.head<3>() = -r.eigen();
      rhs(3) = V - invariant(p);
      Eigen::JacobiSVD<Eigen::Matrix<double, 4, 3>> svd(B, Eigen::ComputeFullU | Eigen::ComputeFullV);
      svd.setThreshold(1e-12);
      next = p + Point3::from(svd.solve(rhs)) * factor;
      if (max_abs(*next) > 10.0) fail(ErrorKind::NoConvergence, "Newton iterate left [-10,10]^3");
    }
    const double step = distance(*next, p);
    p = *next;
    if (step < opts.step_tol) {
      converged = true;
      break;
    }
  }

  PeriodicOrbit po;
  po.V = V;
  po.period = period;
  po.iterations = std::min(it, opts.max_iter);
  po.points.reserve(period);
  Point3 q = p;
  for (int i = 0; i < period; ++i) {
    po.points.push_back(q);
    q = trace_map(q);
  }
  po.newton_residual = distance(q, p);
  if (!converged || !(po.newton_residual < opts.accept_residual))
    fail(ErrorKind::NoConvergence,
         fmt::format("period {} at V = {}: residual {:.3g} after {} iterations", period, V,
                     po.newton_residual, po.iterations));
  if (std::fabs(invariant(p) - V) > 1e-9)
    fail(ErrorKind::NoConvergence, fmt::format("converged off S_V (I - V = {:.3g})", invariant(p) - V));
  po.minimal_period = minimal_period_of(p, period, 1e-8);
  if (po.lower_period())
    po.warnings.push_back(fmt::format("ConvergedToLowerPeriod: minimal period {}", po.minimal_period));
  analyze(po);
  return po;
}

Point3 period_two_curve(double x) {
  if (std::fabs(x - 0.5) < 1e-12) fail(ErrorKind::PoleAtHalf, fmt::format("x = {}", x));
  return {x, x / (2.0 * x - 1.0), x};
}

MonodromySpectrum monodromy_spectrum(const PeriodicOrbit& po) {
  if (po.points.empty()) fail(ErrorKind::InvalidArgument, "empty periodic orbit");
  const Matrix3 M = po.monodromy;
  Eigen::EigenSolver<Matrix3> es(M.transpose());
  const Eigen::Vector3cd vals = es.eigenvalues();
  const Eigen::Matrix3cd vecs = es.eigenvectors();
  const Point3 gp = invariant_gradient(po.points.front());
  const double gn = norm(gp);

  MonodromySpectrum s;
  int neutral = -1;
  if (gn <= kMinGradient) {
    s.critical_point = true;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
      if (std::fabs(vals(i).imag()) > 1e-9) continue;
      const double d = std::min(std::abs(vals(i) - 1.0), std::abs(vals(i) + 1.0));
      if (d < best) {
        best = d;
        neutral = i;
      }
    }
    if (neutral < 0) fail(ErrorKind::AmbiguousNeutral, "no real eigenvalue at a critical point");
  } else {
    const Eigen::Vector3cd g = gp.eigen().cast<std::complex<double>>() / gn;
    double best = std::numeric_limits<double>::infinity();
    int aligned_near_one = 0;
    for (int i = 0; i < 3; ++i) {
      const double align = std::abs(vecs.col(i).normalized().dot(g));
      const double d = std::abs(vals(i) - 1.0);
      if (align > 0.99) {
        if (d < 1e-6) ++aligned_near_one;
        if (d < best) {
          best = d;
          neutral = i;
          s.neutral_alignment = align;
        }
      }
    }
    if (aligned_near_one > 1)
      fail(ErrorKind::AmbiguousNeutral, "two eigenvalues near 1 align with the gradient");
    if (neutral < 0) {
      // Degenerate alignment (e.g. repeated eigenvalues): take the eigenvalue nearest 1.
      for (int i = 0; i < 3; ++i) {
        const double d = std::abs(vals(i) - 1.0);
        if (d < best) {
          best = d;
          neutral = i;
        }
      }
      s.neutral_alignment = std::abs(vecs.col(neutral).normalized().dot(g));
    }
  }
  s.neutral = vals(neutral);
  s.neutral_left = vecs.col(neutral).real().normalized();
  int k = 0;
  for (int i = 0; i < 3; ++i)
    if (i != neutral) s.pair[k++] = vals(i);
  if (s.pair[0].imag() < s.pair[1].imag() ||
      (s.pair[0].imag() == s.pair[1].imag() && std::abs(s.pair[0]) < std::abs(s.pair[1])))
    std::swap(s.pair[0], s.pair[1]);
  s.pair_product = s.pair[0] * s.pair[1];
  s.trace = (s.pair[0] + s.pair[1]).real();
  if (s.pair_product.real() < 0.0) {
    s.doubled = true;
    s.classification_trace = (s.pair[0] * s.pair[0] + s.pair[1] * s.pair[1]).real();
  } else {
    s.classification_trace = s.trace;
  }
  return s;
}

Stability classify_trace(double t, double parabolic_tol) {
  if (std::fabs(t - 2.0) < parabolic_tol || std::fabs(t + 2.0) < parabolic_tol) return Stability::Parabolic;
  if (std::fabs(t) < 2.0) return Stability::Elliptic;
  return t > 2.0 ? Stability::Hyperbolic : Stability::ReflectionHyperbolic;
}

Stability classify_stability(const PeriodicOrbit& po) {
  return classify_trace(monodromy_spectrum(po).classification_trace);
}

void analyze(PeriodicOrbit& po) {
  po.monodromy = monodromy_of(po.points);
  const MonodromySpectrum s = monodromy_spectrum(po);
  po.raw_trace = s.trace;
  po.residual_trace = s.classification_trace;
  po.stability = classify_trace(s.classification_trace);
}

bool ContinuationBranch::lost() const {
  return std::any_of(events.begin(), events.end(), [](const BranchEvent& e) {
    return e.kind == BranchEventKind::LostConvergence || e.kind == BranchEventKind::Fold;
  });
}

namespace {

Point3 lerp(const Point3& a, const Point3& b, double s) { return a + (b - a) * s; }

// Real eigenvector of the monodromy for the eigenvalue nearest -1.
Point3 flip_direction(const PeriodicOrbit& po) {
  Eigen::EigenSolver<Matrix3> es(po.monodromy);
  int best = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(es.eigenvalues()(i) + 1.0) < std::abs(es.eigenvalues()(best) + 1.0)) best = i;
  Eigen::Vector3d v = es.eigenvectors().col(best).real();
  if (v.norm() == 0.0) v = es.eigenvectors().col(best).imag();
  return Point3::from(v.normalized());
}

std::optional<PeriodicOrbit> find_doubled(const PeriodicOrbit& at_event, double V_event, double toward_rh,
                                          const ContinuationOptions& opts) {
  const int n = at_event.period;
  for (double side : {toward_rh, -toward_rh}) {
    for (double dv : {1e-7, 1e-6, 1e-5, 1e-4}) {
      const double Vs = V_event + side * dv;
      if (Vs > 0.0 || Vs <= -1.0) continue;
      try {
        const PeriodicOrbit base = find_periodic(Vs, n, at_event.points.front(), opts.newton);
        const Point3 e = flip_direction(base);
        // The doubled orbit sits O(sqrt(dv)) away; also try an offset beyond it.
        for (double off : {opts.doubling_offset, 2.0 * std::sqrt(dv)}) {
          for (double sgn : {1.0, -1.0}) {
            try {
              PeriodicOrbit cand =
                  find_periodic(Vs, 2 * n, base.points.front() + e * (sgn * off), opts.newton);
              if (cand.minimal_period == 2 * n &&
                  distance(cand.points.front(), base.points.front()) < 0.05)
                return cand;
            } catch (const Error&) {
            }
          }
        }
      } catch (const Error&) {
      }
    }
  }
  return std::nullopt;
}

}  // namespace

ContinuationBranch continue_in_V(const PeriodicOrbit& po, double V_target, double max_step,
                                 const ContinuationOptions& opts) {
  if (!(max_step > 0.0)) fail(ErrorKind::InvalidArgument, "max_step must be positive");
  if (!(V_target >= -1.0 && V_target <= 0.0) || !(po.V >= -1.0 && po.V <= 0.0))
    fail(ErrorKind::InvalidArgument,
         fmt::format("continuation path [{}, {}] leaves [-1, 0]", po.V, V_target));
  if (po.points.empty()) fail(ErrorKind::InvalidArgument, "empty periodic orbit");

  ContinuationBranch branch;
  branch.orbits.push_back(po);
  if (V_target == po.V) return branch;
  const double dir = V_target > po.V ? 1.0 : -1.0;
  const int n = po.period;
  double h = max_step;

  while (branch.orbits.back().V != V_target) {
    const PeriodicOrbit& last = branch.orbits.back();
    const double remaining = std::fabs(V_target - last.V);
    const double hh = std::min(h, remaining);
    const double Vn = hh == remaining ? V_target : last.V + dir * hh;
    Point3 pred = last.points.front();
    if (branch.orbits.size() >= 2) {
      const PeriodicOrbit& prev = branch.orbits[branch.orbits.size() - 2];
      const double span = std::fabs(last.V - prev.V);
      pred = last.points.front() + (last.points.front() - prev.points.front()) * (hh / span);
    }
    std::optional<PeriodicOrbit> next;
    try {
      PeriodicOrbit cand = find_periodic(Vn, n, pred, opts.newton);
      if (distance(cand.points.front(), pred) < 0.05 + 10.0 * hh &&
          cand.minimal_period == last.minimal_period)
        next = std::move(cand);
    } catch (const Error&) {
    }
    if (!next) {
      h *= 0.5;
      if (h < opts.min_step) {
        BranchEvent ev;
        ev.V = last.V;
        ev.V_before = ev.V_after = last.V;
        ev.t_before = ev.t_after = last.residual_trace;
        ev.kind = std::fabs(last.residual_trace - 2.0) < 1e-3 ? BranchEventKind::Fold
                                                               : BranchEventKind::LostConvergence;
        branch.events.push_back(std::move(ev));
        break;
      }
      continue;
    }

    for (double c : {2.0, -2.0}) {
      const double ta = last.residual_trace - c;
      const double tb = next->residual_trace - c;
      if (!(ta * tb < 0.0)) continue;
      BranchEvent ev;
      ev.kind = BranchEventKind::EllipticTransition;
      ev.V_before = last.V;
      ev.V_after = next->V;
      ev.t_before = last.residual_trace;
      ev.t_after = next->residual_trace;
      double Va = last.V, Vb = next->V, fa = ta;
      Point3 pa = last.points.front(), pb = next->points.front();
      std::optional<PeriodicOrbit> mid;
      for (int k = 0; k < 80 && std::fabs(Vb - Va) > opts.crossing_tol; ++k) {
        const double Vm = 0.5 * (Va + Vb);
        try {
          PeriodicOrbit m = find_periodic(Vm, n, lerp(pa, pb, 0.5), opts.newton);
          const double fm = m.residual_trace - c;
          if (fm * fa > 0.0) {
            Va = Vm;
            fa = fm;
            pa = m.points.front();
          } else {
            Vb = Vm;
            pb = m.points.front();
          }
          mid = std::move(m);
        } catch (const Error&) {
          break;
        }
      }
      ev.V = 0.5 * (Va + Vb);
      ev.orbit = mid;
      if (c < 0.0 && opts.detect_doubling && mid) {
        const double toward_rh = (next->residual_trace < -2.0) == (dir > 0.0) ? 1.0 : -1.0;
        ev.doubled = find_doubled(*mid, ev.V, toward_rh, opts);
      }
      const bool doubled = ev.doubled.has_value();
      branch.events.push_back(ev);
      if (doubled) {
        ev.kind = BranchEventKind::PeriodDoubling;
        branch.events.push_back(std::move(ev));
      }
    }
    branch.orbits.push_back(std::move(*next));
    h = std::min(max_step, h * 1.5);
  }
  return branch;
}

int anosov_period(std::int64_t a, std::int64_t b, std::int64_t q) {
  if (q < 1) fail(ErrorKind::InvalidArgument, "denominator must be positive");
  auto mod = [q](std::int64_t v) { return ((v % q) + q) % q; };
  const std::int64_t a0 = mod(a), b0 = mod(b);
  std::int64_t x = a0, y = b0;
  for (int n = 1; n <= 6 * q + 6; ++n) {
    const std::int64_t nx = mod(x + y);
    y = x;
    x = nx;
    if (x == a0 && y == b0) return n;
  }
  fail(ErrorKind::NoConvergence, "cat-map period not found");
}

PeriodicOrbit seed_from_torus(std::int64_t a, std::int64_t b, std::int64_t q, double V, double max_step) {
  const int n = anosov_period(a, b, q);
  auto mod = [q](std::int64_t v) { return ((v % q) + q) % q; };
  std::int64_t x = mod(a), y = mod(b);
  const auto& sing = singular_points();
  Point3 start;
  for (int i = 0; i < n; ++i) {
    const Point3 p = factor_map(TorusPoint{static_cast<double>(x) / q, static_cast<double>(y) / q});
    if (i == 0) start = p;
    for (std::size_t s = 0; s < sing.size(); ++s) {
      if (distance(p, sing[s]) >= 1e-3) continue;
      if (s == 0 && V == 0.0) continue;  // P1 itself is a legitimate fixed point on S_0
      fail(ErrorKind::NearSingularSeed,
           fmt::format("orbit of ({}/{}, {}/{}) passes within 1e-3 of P{}", a, q, b, q, s + 1));
    }
    const std::int64_t nx = mod(x + y);
    y = x;
    x = nx;
  }
  PeriodicOrbit po = find_periodic(0.0, n, start);
  if (V == 0.0) return po;
  ContinuationBranch br = continue_in_V(po, V, max_step);
  if (br.orbits.back().V != V)
    fail(ErrorKind::BranchLost,
         fmt::format("continuation from S_0 stopped at V = {}", br.orbits.back().V));
  return br.orbits.back();
}

PeriodicOrbit seed_from_torus(const TorusPoint& t, double V, double max_step, std::int64_t max_denominator) {
  for (std::int64_t q = 1; q <= max_denominator; ++q) {
    const double ta = t.theta * q, tb = t.phi * q;
    const double ra = std::round(ta), rb = std::round(tb);
    if (std::fabs(ta - ra) < 1e-9 * q && std::fabs(tb - rb) < 1e-9 * q)
      return seed_from_torus(static_cast<std::int64_t>(ra), static_cast<std::int64_t>(rb), q, V, max_step);
  }
  fail(ErrorKind::InvalidArgument,
       fmt::format("({}, {}) is not rational with denominator <= {}", t.theta, t.phi, max_denominator));
}

namespace {

bool same_orbit(const PeriodicOrbit& a, const PeriodicOrbit& b, double tol) {
  if (a.minimal_period != b.minimal_period) return false;
  for (int i = 0; i < a.minimal_period; ++i)
    if (distance(a.points[i], b.points.front()) < tol) return true;
  return false;
}

PeriodicOrbit trimmed(PeriodicOrbit po) {
  if (po.minimal_period == po.period) return po;
  po.points.resize(po.minimal_period);
  po.period = po.minimal_period;
  po.warnings.clear();
  analyze(po);
  return po;
}

}  // namespace

namespace {

// Signed x - z of T^k applied to the point of {x = z} on S_V above x (branch sgn).
std::optional<double> symmetric_defect(double x, double sgn, double V, int k) {
  const double d = (1.0 - x * x) * (1.0 - x * x) + V;
  if (d < 0.0) return std::nullopt;
  double X = x, Y = x * x + sgn * std::sqrt(d), Z = x;
  for (int i = 0; i < k; ++i) {
    kernel::trace_step(X, Y, Z);
    if (std::fabs(X) > 10.0) return std::nullopt;
  }
  return X - Z;
}

}  // namespace

std::vector<PeriodicOrbit> symmetric_orbits(double V, int max_period, int resolution) {
  if (resolution < 2) fail(ErrorKind::InvalidArgument, "resolution must be at least 2");
  std::vector<PeriodicOrbit> out;
  for (int k = 1; 2 * k <= max_period; ++k) {
    for (double sgn : {1.0, -1.0}) {
      std::optional<double> prev;
      double xp = -1.0;
      for (int i = 0; i <= resolution; ++i) {
        const double x = -1.0 + 2.0 * i / resolution;
        const std::optional<double> g = symmetric_defect(x, sgn, V, k);
        if (g && prev && *g * *prev < 0.0) {
          double a = xp, b = x, ga = *prev;
          for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
            const double m = 0.5 * (a + b);
            const auto gm = symmetric_defect(m, sgn, V, k);
            if (!gm) break;
            if (*gm * ga > 0.0) {
              a = m;
              ga = *gm;
            } else {
              b = m;
            }
          }
          const double m = 0.5 * (a + b);
          const double d = std::max(0.0, (1.0 - m * m) * (1.0 - m * m) + V);
          try {
            PeriodicOrbit po = find_periodic(V, 2 * k, Point3{m, m * m + sgn * std::sqrt(d), m});
            if (po.minimal_period == 2 * k) out.push_back(std::move(po));
          } catch (const Error&) {
          }
        }
        prev = g;
        xp = x;
      }
    }
  }
  return out;
}

std::vector<PeriodicOrbit> survey_periodic(double V, int max_period, const SurveyOptions& opts) {
  if (max_period < 1) fail(ErrorKind::InvalidArgument, "max_period must be at least 1");
  const std::vector<Point3> seeds = grid_seeds(V, opts.grid, Sheet::Both);
  std::vector<std::vector<PeriodicOrbit>> found(seeds.size());
  parallel_for(seeds.size(), opts.workers, [&](std::size_t s) {
    for (int n = 1; n <= max_period; ++n) {
      try {
        PeriodicOrbit po = trimmed(find_periodic(V, n, seeds[s]));
        bool inside = true;
        for (const auto& p : po.points) inside = inside && max_abs(p) <= 1.0 + 1e-9;
        if (!inside) continue;
        bool dup = false;
        for (const auto& o : found[s]) dup = dup || same_orbit(o, po, opts.dedup_tol);
        if (!dup) found[s].push_back(std::move(po));
      } catch (const Error&) {
      }
    }
  });
  if (opts.symmetric_resolution > 0)
    found.push_back(symmetric_orbits(V, max_period, opts.symmetric_resolution));
  std::vector<PeriodicOrbit> out;
  for (auto& list : found)
    for (auto& po : list) {
      bool dup = false;
      for (const auto& o : out) dup = dup || same_orbit(o, po, opts.dedup_tol);
      if (!dup) out.push_back(std::move(po));
    }
  std::stable_sort(out.begin(), out.end(),
                   [](const PeriodicOrbit& a, const PeriodicOrbit& b) { return a.period < b.period; });
  return out;
}

}  // namespace tracelab

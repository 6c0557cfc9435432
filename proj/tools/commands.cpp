#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <fmt/format.h>

#include "tracelab/cantor.hpp"
#include "tracelab/defaults.hpp"
#include "tracelab/errors.hpp"
#include "tracelab/horseshoe.hpp"
#include "tracelab/manifolds.hpp"
#include "tracelab/orbits.hpp"
#include "tracelab/parallel.hpp"
#include "tracelab/periodic.hpp"
#include "tracelab/serialize.hpp"
#include "tracelab/surface.hpp"
#ifdef TRACELAB_HAVE_SERVICE
#include "tracelab/service.hpp"
#endif

namespace tracelab::cli {

namespace fs = std::filesystem;

namespace {

unsigned resolve_workers(const Common& c) { return c.workers ? c.workers : default_workers(); }

json base_config(const std::string& command, const Common& c) {
  return json{{"command", command},
              {"workers", resolve_workers(c)},
              {"rng_seed", c.seed},
              {"precision", c.precision},
              {"output_dir", c.out.string()}};
}

std::ofstream open_out(const Common& c, const std::string& name) {
  fs::create_directories(c.out);
  std::ofstream os(c.out / name);
  if (!os) fail(ErrorKind::InvalidArgument, fmt::format("cannot write {}", (c.out / name).string()));
  return os;
}

void write_json(const Common& c, const std::string& name, const json& j) { open_out(c, name) << j.dump(2) << '\n'; }

int dry_run(const json& cfg, const std::vector<std::string>& outputs) {
  json plan = stamp(cfg);
  plan["outputs"] = outputs;
  std::cout << plan.dump(2) << '\n';
  return 0;
}

Point3 point_from(const std::vector<double>& v, const char* what) {
  if (v.size() != 3) fail(ErrorKind::InvalidArgument, fmt::format("{} needs three values x,y,z", what));
  return Point3(v[0], v[1], v[2]);
}

Sheet parse_sheet(const std::string& s) {
  if (s == "upper") return Sheet::Upper;
  if (s == "lower") return Sheet::Lower;
  return Sheet::Both;
}

Precision parse_precision(const std::string& p) { return p == "extended" ? Precision::Extended : Precision::Standard; }

// Orbit from --guess or --torus a,b,q.
PeriodicOrbit starting_orbit(double V, int period, const std::vector<double>& guess, const std::vector<long long>& torus) {
  if (!torus.empty()) {
    if (torus.size() != 3) fail(ErrorKind::InvalidArgument, "--torus needs a,b,q");
    return seed_from_torus(torus[0], torus[1], torus[2], V);
  }
  return find_periodic(V, period, point_from(guess, "--guess"));
}

std::vector<Point2> read_xy_csv(const fs::path& p) {
  std::ifstream is(p);
  if (!is) fail(ErrorKind::InvalidArgument, fmt::format("cannot read {}", p.string()));
  std::vector<Point2> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double x, y;
    if (ls >> x >> y) out.push_back({x, y});
  }
  return out;
}

}  // namespace

void register_commands(CLI::App& app, Common& common, std::function<int()>& run) {
  // poincare
  {
    struct O {
      double V = -0.5;
      int grid = 10;
      std::size_t n = 20000;
      std::string sheet = "both";
      std::size_t random = 0;
    };
    auto o = std::make_shared<O>();
    auto* cmd = app.add_subcommand("poincare", "Orbit cloud on S_V from a seed grid");
    cmd->add_option("--V", o->V, "level")->required();
    cmd->add_option("--grid", o->grid, "seeds per axis per sheet")->check(CLI::PositiveNumber);
    cmd->add_option("--n", o->n, "iterations per seed")->check(CLI::PositiveNumber);
    cmd->add_option("--sheet", o->sheet)->check(CLI::IsMember({"upper", "lower", "both"}));
    cmd->add_option("--random", o->random, "area-uniform random seeds instead of a grid (uses --seed)");
    cmd->callback([o, &common, &run] {
      run = [o, &common] {
        json cfg = base_config("poincare", common);
        cfg.update({{"V", o->V}, {"grid", o->grid}, {"n", o->n}, {"sheet", o->sheet}, {"random", o->random}});
        if (!(o->V >= -1.0 && o->V < 0.0)) fail(ErrorKind::InvalidArgument, fmt::format("V = {} outside [-1, 0)", o->V));
        if (common.dry_run) return dry_run(cfg, {"poincare.csv", "poincare.json"});
        std::vector<Point3> seeds;
        if (o->V == -1.0) seeds = {Point3(0.0, 0.0, 0.0)};
        else if (o->random) seeds = sample_compact_component(o->V, o->random, {SamplingMode::AreaUniform, common.seed});
        else seeds = grid_seeds(o->V, o->grid, parse_sheet(o->sheet));
        const PoincareCloud cloud = poincare_cloud(o->V, seeds, o->n, resolve_workers(common));
        {
          auto os = open_out(common, "poincare.csv");
          write_cloud_csv(os, cloud);
        }
        json side = stamp(cfg);
        json failures = json::array();
        for (const auto& f : cloud.failures) failures.push_back({{"seed_id", f.seed_id}, {"error", f.error}});
        side.update({{"seeds", seeds.size()}, {"points", cloud.points.size()}, {"failures", failures},
                     {"projection", cloud.projection}});
        write_json(common, "poincare.json", side);
        std::cout << fmt::format("{} points from {} seeds ({} failed)\n", cloud.points.size(), seeds.size(),
                                 cloud.failures.size());
        return 0;
      };
    });
  }
  // chaos
  {
    struct O {
      double V = -0.5, k = 0.0, threshold = 0.01;
      bool stdmap = false;
      int res = 100;
      std::size_t n = 10000;
      std::string sheet = "upper";
      std::vector<double> sweep;
    };
    auto o = std::make_shared<O>();
    auto* cmd = app.add_subcommand("chaos", "Lyapunov chaos grid for the trace map or the standard map");
    auto* vopt = cmd->add_option("--V", o->V, "trace-map level");
    cmd->add_flag("--stdmap", o->stdmap, "use the standard map");
    cmd->add_option("--k", o->k, "standard-map parameter");
    cmd->add_option("--res", o->res)->check(CLI::PositiveNumber);
    cmd->add_option("--n", o->n)->check(CLI::PositiveNumber);
    cmd->add_option("--threshold", o->threshold);
    cmd->add_option("--sheet", o->sheet)->check(CLI::IsMember({"upper", "lower", "both"}));
    cmd->add_option("--sweep", o->sweep, "comma-separated parameters; one row each")->delimiter(',');
    cmd->callback([o, vopt, &common, &run] {
      run = [o, vopt, &common] {
        json cfg = base_config("chaos", common);
        cfg.update({{"system", o->stdmap ? "standard" : "trace"}, {"res", o->res}, {"n", o->n},
                    {"threshold", o->threshold}, {"sheet", o->sheet}});
        if (o->stdmap) cfg["k"] = o->k;
        else cfg["V"] = o->V;
        if (!o->sweep.empty()) cfg["sweep"] = o->sweep;
        if (!o->stdmap && vopt->count() == 0 && o->sweep.empty()) fail(ErrorKind::InvalidArgument, "--V or --stdmap is required");
        auto grid = [&](double p) {
          ChaosOptions co;
          co.sheet = parse_sheet(o->sheet);
          co.workers = resolve_workers(common);
          return o->stdmap ? stdmap_chaos_grid(p, o->res, o->n, o->threshold, co.workers)
                           : chaos_grid(p, o->res, o->n, o->threshold, co);
        };
        if (!o->sweep.empty()) {
          if (common.dry_run) return dry_run(cfg, {"sweep.csv", "sweep.json"});
          auto os = open_out(common, "sweep.csv");
          os << (o->stdmap ? "k" : "V") << ",chaotic_fraction,on_surface,chaotic\n";
          json rows = json::array();
          for (double p : o->sweep) {
            const ChaosMap m = grid(p);
            os << format_real(p) << ',' << format_real(m.chaotic_fraction()) << ',' << m.on_surface_count() << ','
               << m.chaotic_count() << '\n';
            rows.push_back(chaos_sidecar(m));
            std::cout << fmt::format("{} {}\n", p, m.chaotic_fraction());
          }
          json side = stamp(cfg);
          side["rows"] = rows;
          write_json(common, "sweep.json", side);
          return 0;
        }
        if (common.dry_run) return dry_run(cfg, {"chaos.csv", "chaos.json"});
        const ChaosMap m = grid(o->stdmap ? o->k : o->V);
        {
          auto os = open_out(common, "chaos.csv");
          write_chaos_csv(os, m);
        }
        json side = stamp(cfg);
        side.update(chaos_sidecar(m));
        write_json(common, "chaos.json", side);
        std::cout << fmt::format("chaotic fraction {}\n", m.chaotic_fraction());
        return 0;
      };
    });
  }
  // periodic
  {
    struct O {
      double V = 0.0;
      int period = 1;
      std::vector<double> guess;
      std::vector<long long> torus;
      int survey = 0;
      int grid = 24;
    };
    auto o = std::make_shared<O>();
    auto* cmd = app.add_subcommand("periodic", "Find a periodic orbit, or survey all up to a period");
    cmd->add_option("--V", o->V)->required();
    cmd->add_option("--period", o->period)->check(CLI::PositiveNumber);
    cmd->add_option("--guess", o->guess, "x,y,z")->delimiter(',');
    cmd->add_option("--torus", o->torus, "a,b,q seeds from (a/q, b/q) on the torus")->delimiter(',');
    cmd->add_option("--survey", o->survey, "survey every period up to this");
    cmd->add_option("--grid", o->grid, "survey seeds per axis");
    cmd->callback([o, &common, &run] {
      run = [o, &common] {
        json cfg = base_config("periodic", common);
        cfg.update({{"V", o->V}, {"period", o->period}, {"guess", o->guess}, {"torus", o->torus}, {"survey", o->survey}});
        if (common.dry_run) return dry_run(cfg, {"periodic.json"});
        json out = stamp(cfg);
        if (o->survey > 0) {
          SurveyOptions so;
          so.grid = o->grid;
          so.workers = resolve_workers(common);
          json orbits = json::array();
          for (const auto& po : survey_periodic(o->V, o->survey, so)) {
            orbits.push_back(to_json(po));
            std::cout << fmt::format("period {} {} trace {:.6g}\n", po.period, to_string(po.stability), po.residual_trace);
          }
          out["orbits"] = orbits;
        } else {
          if (o->guess.empty() && o->torus.empty()) fail(ErrorKind::InvalidArgument, "--guess or --torus is required");
          const PeriodicOrbit po = starting_orbit(o->V, o->period, o->guess, o->torus);
          out["orbit"] = to_json(po);
          std::cout << to_json(po).dump() << '\n';
        }
        write_json(common, "periodic.json", out);
        return 0;
      };
    });
  }
  // continue
  {
    struct O {
      double from = 0.0, to = -0.5, max_step = 0.01;
      int period = 1;
      std::vector<double> guess;
      std::vector<long long> torus;
    };
    auto o = std::make_shared<O>();
    auto* cmd = app.add_subcommand("continue", "Continue a periodic orbit in V");
    cmd->add_option("--from", o->from, "starting level")->required();
    cmd->add_option("--to", o->to, "target level")->required();
    cmd->add_option("--period", o->period)->check(CLI::PositiveNumber);
    cmd->add_option("--guess", o->guess, "x,y,z")->delimiter(',');
    cmd->add_option("--torus", o->torus, "a,b,q")->delimiter(',');
    cmd->add_option("--max-step", o->max_step)->check(CLI::PositiveNumber);
    cmd->callback([o, &common, &run] {
      run = [o, &common] {
        json cfg = base_config("continue", common);
        cfg.update({{"from", o->from}, {"to", o->to}, {"period", o->period}, {"guess", o->guess}, {"torus", o->torus},
                    {"max_step", o->max_step}});
        if (common.dry_run) return dry_run(cfg, {"branch.jsonl"});
        if (o->guess.empty() && o->torus.empty()) fail(ErrorKind::InvalidArgument, "--guess or --torus is required");
        const PeriodicOrbit start = starting_orbit(o->from, o->period, o->guess, o->torus);
        const ContinuationBranch br = continue_in_V(start, o->to, o->max_step);
        auto os = open_out(common, "branch.jsonl");
        os << stamp(cfg).dump() << '\n';
        write_branch_jsonl(os, br);
        for (const auto& e : br.events) std::cout << to_json(e).dump() << '\n';
        std::cout << fmt::format("{} orbits, reached V = {}\n", br.orbits.size(), br.orbits.back().V);
        return br.lost() ? 3 : 0;
      };
    });
  }
  // manifold
  {
    struct O {
      double V = -0.1, arclength = 2.0, tol = 0.02;
      int period = 1, branch = 1;
      std::vector<double> guess;
      std::string side = "unstable";
    };
    auto o = std::make_shared<O>();
    auto* cmd = app.add_subcommand("manifold", "Grow a stable or unstable manifold branch");
    cmd->add_option("--V", o->V)->required();
    cmd->add_option("--period", o->period)->check(CLI::PositiveNumber);
    cmd->add_option("--guess", o->guess, "x,y,z")->delimiter(',')->required();
    cmd->add_option("--side", o->side)->check(CLI::IsMember({"stable", "unstable"}));
    cmd->add_option("--branch", o->branch)->check(CLI::IsMember({-1, 1}));
    cmd->add_option("--arclength", o->arclength)->check(CLI::PositiveNumber);
    cmd->add_option("--tol", o->tol, "turning-angle refinement tolerance")->check(CLI::PositiveNumber);
    cmd->callback([o, &common, &run] {
      run = [o, &common] {
        json cfg = base_config("manifold", common);
        cfg.update({{"V", o->V}, {"period", o->period}, {"guess", o->guess}, {"side", o->side}, {"branch", o->branch},
                    {"arclength", o->arclength}, {"tol", o->tol}});
        if (common.dry_run) return dry_run(cfg, {"manifold.csv"});
        const PeriodicOrbit po = find_periodic(o->V, o->period, point_from(o->guess, "--guess"));
        GrowOptions go;
        go.branch = o->branch;
        go.precision = parse_precision(common.precision);
        const ManifoldArc arc =
            grow_manifold(po, o->side == "stable" ? Side::Stable : Side::Unstable, o->arclength, o->tol, go);
        auto os = open_out(common, "manifold.csv");
        os << "# " << stamp(cfg).dump() << '\n';
        write_arc_csv(os, arc);
        std::cout << fmt::format("{} vertices, arclength {}{}\n", arc.vertices.size(), arc.arclength,
                                 arc.truncated ? " (truncated)" : "");
        return 0;
      };
    });
  }
  // tangency
  {
    struct O {
      double vmin = -0.15, vmax = -0.01;
      HuntOptions hunt;
    };
    auto o = std::make_shared<O>();
    auto* cmd = app.add_subcommand("tangency", "Hunt homoclinic tangencies over a V range");
    cmd->add_option("--vmin", o->vmin);
    cmd->add_option("--vmax", o->vmax);
    cmd->add_option("--period-max", o->hunt.max_period)->check(CLI::PositiveNumber);
    cmd->add_option("--arclength", o->hunt.arclength)->check(CLI::PositiveNumber);
    cmd->add_option("--v-grid", o->hunt.v_grid)->check(CLI::Range(2, 1000));
    cmd->add_option("--max-events", o->hunt.max_events)->check(CLI::PositiveNumber);
    cmd->add_option("--dV", o->hunt.dV, "unfolding step")->check(CLI::PositiveNumber);
    cmd->callback([o, &common, &run] {
      run = [o, &common] {
        json cfg = base_config("tangency", common);
        cfg.update({{"vmin", o->vmin}, {"vmax", o->vmax}, {"period_max", o->hunt.max_period},
                    {"arclength", o->hunt.arclength}, {"v_grid", o->hunt.v_grid}, {"max_events", o->hunt.max_events},
                    {"dV", o->hunt.dV}});
        if (common.dry_run) return dry_run(cfg, {"tangency.json"});
        HuntOptions ho = o->hunt;
        ho.workers = resolve_workers(common);
        HuntDiagnostics diag;
        const auto seeds = default_hunt_seeds(0.5 * (o->vmin + o->vmax), ho.max_period);
        const auto events = tangency_hunt(o->vmin, o->vmax, seeds, ho, &diag);
        json ev = json::array();
        for (const auto& e : events) ev.push_back(to_json(e));
        json out = stamp(cfg);
        out.update({{"events", ev}, {"diagnostics", to_json(diag)}, {"seeds", seeds.size()}});
        write_json(common, "tangency.json", out);
        std::cout << ev.dump(2) << '\n';
        return 0;
      };
    });
  }
  // thickness
  {
    struct O {
      double alpha = 0.0, min_gap = 0.0;
      std::vector<double> affine;
      int depth = 6;
      std::string input, samples;
    };
    auto o = std::make_shared<O>();
    auto* cmd = app.add_subcommand("thickness", "Newhouse thickness of a Cantor set");
    cmd->add_option("--middle-alpha", o->alpha, "remove the middle alpha fraction");
    cmd->add_option("--affine", o->affine, "left,right ratios")->delimiter(',');
    cmd->add_option("--depth", o->depth)->check(CLI::NonNegativeNumber);
    cmd->add_option("--input", o->input, "presentation JSON");
    cmd->add_option("--samples", o->samples, "file of sorted reals, one per line");
    cmd->add_option("--min-gap", o->min_gap, "with --samples");
    cmd->callback([o, &common, &run] {
      run = [o, &common] {
        json cfg = base_config("thickness", common);
        cfg.update({{"middle_alpha", o->alpha}, {"affine", o->affine}, {"depth", o->depth}, {"input", o->input},
                    {"samples", o->samples}, {"min_gap", o->min_gap}});
        if (common.dry_run) return dry_run(cfg, {"thickness.json"});
        CantorPresentation c;
        if (o->alpha > 0.0) c = middle_alpha_cantor(o->alpha, o->depth);
        else if (o->affine.size() == 2) c = affine_cantor(o->affine[0], o->affine[1], o->depth);
        else if (!o->input.empty()) {
          std::ifstream is(o->input);
          if (!is) fail(ErrorKind::InvalidArgument, "cannot read " + o->input);
          c = presentation_from_json(json::parse(is));
        } else if (!o->samples.empty()) {
          std::ifstream is(o->samples);
          if (!is) fail(ErrorKind::InvalidArgument, "cannot read " + o->samples);
          std::vector<double> pts;
          for (double v; is >> v;) pts.push_back(v);
          c = presentation_from_samples(pts, o->min_gap);
        } else {
          fail(ErrorKind::InvalidArgument, "one of --middle-alpha, --affine, --input, --samples is required");
        }
        const ThicknessReport t = thickness_report(c);
        json out = stamp(cfg);
        out["presentation"] = to_json(c);
        out["thickness"] = t.no_gaps ? json("inf") : json(t.value);
        out["no_gaps"] = t.no_gaps;
        if (!t.no_gaps && t.value > 0.0) out["dim_lower_bound"] = dim_lower_bound(t.value);
        write_json(common, "thickness.json", out);
        std::cout << (t.no_gaps ? std::string("inf") : fmt::format("{:.12g}", t.value)) << '\n';
        return 0;
      };
    });
  }
  // survivor
  {
    struct O {
      std::vector<double> eps{0.08, 0.04, 0.02, 0.01};
      int depth = 14;
      std::vector<double> anchor{0.0, 0.0};
      std::string direction = "stable";
      std::size_t cloud = 0;
    };
    auto o = std::make_shared<O>();
    auto* cmd = app.add_subcommand("survivor", "Thickness of cat-map survivor sections as epsilon shrinks");
    cmd->add_option("--eps", o->eps, "decreasing radii")->delimiter(',');
    cmd->add_option("--depth", o->depth)->check(CLI::PositiveNumber);
    cmd->add_option("--anchor", o->anchor, "theta,phi of a periodic point")->delimiter(',')->expected(2);
    cmd->add_option("--direction", o->direction)->check(CLI::IsMember({"stable", "unstable"}));
    cmd->add_option("--cloud", o->cloud, "samples projected to S_0 for the smallest epsilon");
    cmd->callback([o, &common, &run] {
      run = [o, &common] {
        json cfg = base_config("survivor", common);
        cfg.update({{"eps", o->eps}, {"depth", o->depth}, {"anchor", o->anchor}, {"direction", o->direction},
                    {"cloud", o->cloud}});
        std::vector<std::string> outs{"survivor.json"};
        if (o->cloud) outs.push_back("survivor_cloud.csv");
        if (common.dry_run) return dry_run(cfg, outs);
        const TorusPoint anchor(o->anchor.at(0), o->anchor.at(1));
        const LineDirection dir = o->direction == "stable" ? LineDirection::Stable : LineDirection::Unstable;
        const ThicknessTable table = thickness_vs_epsilon(o->eps, anchor, dir, o->depth);
        json out = stamp(cfg);
        out["table"] = to_json(table);
        out["neighborhoods"] = "sup-norm boxes";
        if (!o->eps.empty()) {
          AvoidanceSpec spec;
          spec.epsilon = o->eps.back();
          spec.depth = o->depth;
          const SurvivorSection sec = survivor_section(anchor, dir, spec);
          out["section"] = to_json(sec);
          if (o->cloud) {
            const ProjectedSurvivors pr = project_survivors(sec, o->cloud);
            auto os = open_out(common, "survivor_cloud.csv");
            write_points_csv(os, pr.points);
            out["pushforward_radius"] = pr.pushforward_radius;
            out["shift"] = pr.shift;
          }
        }
        write_json(common, "survivor.json", out);
        std::cout << "epsilon,tau,survivors\n";
        for (const auto& r : table.rows)
          std::cout << fmt::format("{},{},{}\n", r.epsilon, r.error.empty() ? fmt::format("{:.6g}", r.tau) : "dies",
                                   r.survivors);
        return 0;
      };
    });
  }
  // boxdim
  {
    struct O {
      std::string input;
      double V = 0.0;
      int res = 100;
      std::size_t n = 10000, cloud_points = 2000000;
      std::vector<double> scales;
      std::vector<double> range{0.2, 0.01, 8};
    };
    auto o = std::make_shared<O>();
    auto* cmd = app.add_subcommand("boxdim", "Box-counting dimension of a planar point set");
    cmd->add_option("--input", o->input, "CSV whose first two columns are x,y");
    auto* vopt = cmd->add_option("--V", o->V, "use the chaotic-cell cloud on S_V instead");
    cmd->add_option("--res", o->res, "chaos grid resolution with --V");
    cmd->add_option("--n", o->n, "classification iterations with --V");
    cmd->add_option("--cloud-points", o->cloud_points, "approximate cloud size with --V");
    cmd->add_option("--scales", o->scales)->delimiter(',');
    cmd->add_option("--scale-range", o->range, "hi,lo,count")->delimiter(',')->expected(3);
    cmd->callback([o, vopt, &common, &run] {
      run = [o, vopt, &common] {
        json cfg = base_config("boxdim", common);
        cfg.update({{"input", o->input}, {"res", o->res}, {"n", o->n}, {"cloud_points", o->cloud_points},
                    {"scales", o->scales}, {"scale_range", o->range}});
        if (vopt->count()) cfg["V"] = o->V;
        if (common.dry_run) return dry_run(cfg, {"boxdim.json"});
        std::vector<Point2> pts;
        if (vopt->count()) {
          ChaosOptions co;
          co.sheet = Sheet::Both;
          co.workers = resolve_workers(common);
          const ChaosMap m = chaos_grid(o->V, o->res, o->n, default_value("orbits", "lyapunov_threshold"), co);
          const std::size_t per = std::max<std::size_t>(200, o->cloud_points / std::max<std::size_t>(1, m.chaotic_count()));
          for (const auto& p : chaotic_cloud(m, per, co.workers)) pts.push_back({p.x, p.y});
        } else if (!o->input.empty()) {
          pts = read_xy_csv(o->input);
        } else {
          fail(ErrorKind::InvalidArgument, "--input or --V is required");
        }
        const auto scales =
            o->scales.empty() ? geometric_scales(o->range[0], o->range[1], static_cast<int>(o->range[2])) : o->scales;
        const BoxCountReport r = box_dimension(pts, scales);
        json out = stamp(cfg);
        out["report"] = to_json(r);
        out["points"] = pts.size();
        write_json(common, "boxdim.json", out);
        std::cout << fmt::format("slope {:.4f} (raw {:.4f}), r2 {:.5f}\n", r.slope, r.raw_slope, r.r2);
        return 0;
      };
    });
  }
  // serve
  {
    struct O {
      std::string host = "127.0.0.1", origin = "http://127.0.0.1:5173";
      int port = 8765;
    };
    auto o = std::make_shared<O>();
    auto* cmd = app.add_subcommand("serve", "Run the local HTTP session service");
    cmd->add_option("--host", o->host);
    cmd->add_option("--port", o->port)->check(CLI::Range(1, 65535));
    cmd->add_option("--origin", o->origin, "allowed CORS origin");
    cmd->callback([o, &common, &run] {
      run = [o, &common] {
        json cfg = base_config("serve", common);
        cfg.update({{"host", o->host}, {"port", o->port}, {"origin", o->origin}});
        if (common.dry_run) return dry_run(cfg, {});
#ifdef TRACELAB_HAVE_SERVICE
        ServiceOptions so;
        so.host = o->host;
        so.port = o->port;
        so.allowed_origin = o->origin;
        so.workers = resolve_workers(common);
        Service svc(so);
        std::cerr << fmt::format("listening on http://{}:{}\n", o->host, o->port);
        return svc.serve() ? 0 : 3;
#else
        fail(ErrorKind::InvalidArgument, "built without the service");
#endif
      };
    });
  }
}

}  // namespace tracelab::cli

#pragma once

#include "pclab/checks.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace pclab {

// Command-line front end. Parses a scene file, dispatches one operation and
// emits JSON (stdout) or JSON/CSV (--out). Exit codes: 0 success, 2
// validation failure, 3 numeric divergence where finiteness was required.
class Cli {
 public:
  int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"weighted functionals of pseudo-cones in convex cones"};
    app.require_subcommand(1);

    std::string scene_path, weight_name, body_name, body2_name, out_path, measure_path;
    std::string z_arg, truncation_arg, functional_arg = "covolume", check_name, case_name;
    std::string t_schedule_arg;
    double tol = -1.0, r_arg = 0.0, lambda = 0.5, grad_tol = 1e-6;
    int max_depth = -1, threads = 0, count = 100, max_iters = 400;
    std::uint64_t seed = 0;
    bool emit_csv = false, dry_run = false;
    bool have_seed = false;

    auto add_common = [&](CLI::App* cmd, bool needs_scene = true) {
      if (needs_scene) cmd->add_option("--scene", scene_path, "scene JSON file")->required();
      cmd->add_option("--weight", weight_name, "named weight from the scene");
      cmd->add_option("--tol", tol, "quadrature tolerance override");
      cmd->add_option("--max-depth", max_depth, "boundary grading depth override");
      cmd->add_option("--seed", seed, "seed override")->each([&](const std::string&) {
        have_seed = true;
      });
      cmd->add_option("--threads", threads, "worker cap (env PCLAB_THREADS)");
      cmd->add_option("--out", out_path, "write the result to this file");
      cmd->add_flag("--emit-csv", emit_csv, "CSV output (with --out)");
      cmd->add_flag("--dry-run", dry_run, "validate preconditions only");
    };

    auto* covolume = app.add_subcommand("covolume", "weighted co-volume of a body");
    add_common(covolume);
    covolume->add_option("--body", body_name)->required();

    auto* volume = app.add_subcommand("volume", "weighted volume of a body");
    add_common(volume);
    volume->add_option("--body", body_name)->required();

    auto* asym = app.add_subcommand("asym-covolume", "asymptotic weighted co-volume");
    add_common(asym);
    asym->add_option("--body", body_name)->required();
    asym->add_option("--z", z_arg, "starting point (comma separated); default: detected");

    auto* sam = app.add_subcommand("sam", "weighted surface-area measure of a wulff body");
    add_common(sam);
    sam->add_option("--body", body_name)->required();

    auto* dual = app.add_subcommand("dual-volume", "dual volume of a body");
    add_common(dual);
    dual->add_option("--body", body_name)->required();
    dual->add_option("--r", r_arg, "dual exponent")->required();

    auto* start = app.add_subcommand("starting-point", "asymptotic decomposition of a body");
    add_common(start);
    start->add_option("--body", body_name)->required();

    auto* finite = app.add_subcommand("finiteness", "divergence probe of a functional");
    add_common(finite);
    finite->add_option("--body", body_name)->required();
    finite->add_option("--functional", functional_arg,
                       "sam|volume|covolume|covolume-origin|covolume-tail|asym");
    finite->add_option("--z", z_arg, "starting point for asym probes");
    finite->add_option("--truncation", truncation_arg, "comma separated cutoffs");

    auto* solve = app.add_subcommand("solve", "discrete weighted minkowski problem");
    add_common(solve);
    solve->add_option("--measure", measure_path, "measure JSON file")->required();
    solve->add_option("--grad-tol", grad_tol, "residual target");
    solve->add_option("--max-iters", max_iters, "iteration cap");

    auto* check = app.add_subcommand("check", "identity and inequality checks");
    add_common(check);
    check->add_option("--name", check_name,
                      "bm|radial-containment|convolution|gradient|decay|explore-bm")
        ->required();
    check->add_option("--body", body_name);
    check->add_option("--body2", body2_name);
    check->add_option("--z", z_arg);
    check->add_option("--t-schedule", t_schedule_arg, "comma separated scale factors");
    check->add_option("--count", count, "explore-bm instance count");
    check->add_option("--lambda", lambda, "explore-bm combination weight");

    auto* reproduce = app.add_subcommand("reproduce", "published counterexample traces");
    add_common(reproduce, false);
    reproduce->add_option("case", case_name, "sam_critical|i_infty_small_q|t_small_q")
        ->required();

    try {
      std::vector<const char*> argv;
      argv.push_back("pclab");
      for (const auto& a : args) argv.push_back(a.c_str());
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
      if (e.get_exit_code() == 0) {
        out << app.help();
        return 0;
      }
      err << "parse error: " << e.what() << "\n";
      return 2;
    }

    try {
      if (threads == 0) {
        if (const char* env = std::getenv("PCLAB_THREADS")) threads = std::atoi(env);
      }
      set_thread_count(threads > 0 ? threads : 1);

      json result;
      std::string csv;

      if (reproduce->parsed()) {
        if (dry_run) {
          result = {{"dry_run", true}, {"ok", true}, {"case", case_name}};
        } else {
          auto r = reproduce_counterexample(case_name, quad_opts_default(tol, max_depth));
          result = r.to_json();
          csv = reproduce_csv(r);
        }
        return finish(result, csv, out_path, emit_csv, out);
      }

      Scene scene = load_scene(scene_path);
      if (have_seed) scene.seed = seed;
      QuadratureOptions qopts = scene.quadrature;
      if (tol > 0) qopts.tol = tol;
      if (max_depth > 0) qopts.max_depth = max_depth;
      WeightSpec weight = scene.weight_named(weight_name);
      const double n = scene.cone.dim(), q = weight.q();

      if (dry_run) {
        // precondition checks without building the quadrature
        if (covolume->parsed() && !(q < n)) throw exponent_out_of_range("covolume needs q < n");
        if (volume->parsed() && !(q > n)) throw exponent_out_of_range("volume needs q > n");
        if (dual->parsed() && (!(r_arg < 1.0) || r_arg == 0.0))
          throw exponent_out_of_range("dual volume needs r in (-inf,0) or (0,1)");
        if (solve->parsed()) {
          if (!(q >= 0 && q < n - 1)) throw exponent_out_of_range("solve needs q in [0, n-1)");
          (void)load_measure(measure_path);
        }
        if (!body_name.empty()) (void)scene.body(body_name);
        if (!body2_name.empty()) (void)scene.body(body2_name);
        if (!z_arg.empty()) {
          Vec z = parse_vec(z_arg, scene.cone.dim());
          if (!scene.cone.contains(z, 1e-12)) throw not_in_cone("z must lie in C");
        }
        result = {{"dry_run", true}, {"ok", true}};
        return finish(result, csv, out_path, emit_csv, out);
      }

      FunctionalEngine engine(scene.cone, weight, qopts);

      if (covolume->parsed()) {
        auto r = engine.covolume(scene.body(body_name));
        result = {{"value", r.value}, {"error", r.error}};
        csv = "value,error\n" + num(r.value) + "," + num(r.error) + "\n";
      } else if (volume->parsed()) {
        auto r = engine.volume(scene.body(body_name));
        result = {{"value", r.value}, {"error", r.error}};
        csv = "value,error\n" + num(r.value) + "," + num(r.error) + "\n";
      } else if (asym->parsed()) {
        PseudoCone e = scene.body(body_name);
        Vec z;
        double residual = 0.0;
        bool degenerate = false;
        PseudoCone a = e;
        if (!z_arg.empty()) {
          z = parse_vec(z_arg, scene.cone.dim());
        } else {
          auto d = starting_point(e);
          z = d.z;
          residual = d.residual;
          degenerate = d.degenerate;
          a = d.asymptotic_part;
          if (degenerate)
            throw numeric_divergence("body is degenerate: no starting point decomposition");
        }
        auto r = engine.asymptotic_covolume(a, z);
        result = {{"value", r.value},
                  {"error", r.error},
                  {"z", vec_to_json(z)},
                  {"residual", residual},
                  {"degenerate", degenerate}};
        csv = "value,error\n" + num(r.value) + "," + num(r.error) + "\n";
      } else if (sam->parsed()) {
        auto r = engine.surface_area_measure(scene.body(body_name));
        result = measure_to_json(r.measure);
        result["errors"] = r.errors;
        result["excluded_weight"] = r.excluded_weight;
        csv = "mass,error";
        for (int i = 0; i < scene.cone.dim(); ++i) csv += ",v" + std::to_string(i);
        csv += "\n";
        for (std::size_t i = 0; i < r.measure.masses.size(); ++i) {
          csv += num(r.measure.masses[i]) + "," + num(r.errors[i]);
          for (int d = 0; d < scene.cone.dim(); ++d)
            csv += "," + num(r.measure.directions[i](d));
          csv += "\n";
        }
      } else if (dual->parsed()) {
        auto r = engine.dual_volume(scene.body(body_name), r_arg);
        result = {{"value", r.value}, {"error", r.error}};
        csv = "value,error\n" + num(r.value) + "," + num(r.error) + "\n";
      } else if (start->parsed()) {
        auto d = starting_point(scene.body(body_name));
        result = {{"z", vec_to_json(d.z)},
                  {"residual", d.residual},
                  {"degenerate", d.degenerate}};
        csv = "residual,degenerate\n" + num(d.residual) + "," +
              (d.degenerate ? "1" : "0") + "\n";
      } else if (finite->parsed()) {
        std::vector<double> sched = truncation_arg.empty()
                                        ? std::vector<double>{10, 31.6227766, 100, 316.227766,
                                                              1000, 3162.27766, 10000}
                                        : parse_list(truncation_arg);
        Vec z = z_arg.empty() ? Vec(Vec::Zero(scene.cone.dim()))
                              : parse_vec(z_arg, scene.cone.dim());
        auto v = engine.finiteness_probe(probe_tag_from_string(functional_arg),
                                         scene.body(body_name), z, sched);
        result = verdict_to_json(v);
        csv = "cutoff,value\n";
        for (auto& [a, b] : v.trace) csv += num(a) + "," + num(b) + "\n";
      } else if (solve->parsed()) {
        DiscreteMeasure mu = load_measure(measure_path);
        MinkowskiProblem prob(engine, mu);
        SolverConfig cfg;
        cfg.grad_tol = grad_tol;
        cfg.max_iters = max_iters;
        cfg.seed = scene.seed;
        auto rep = prob.solve(cfg);
        result = solver_report_to_json(rep);
        csv = "iteration,objective\n";
        for (std::size_t i = 0; i < rep.objective_trace.size(); ++i)
          csv += std::to_string(i) + "," + num(rep.objective_trace[i]) + "\n";
        if (!rep.converged) {
          emit(result, csv, out_path, emit_csv, out);
          return 3;
        }
      } else if (check->parsed()) {
        InequalityLab lab(engine);
        std::vector<CheckResult> results;
        if (check_name == "bm") {
          results.push_back(lab.check_bm(scene.body(body_name), scene.body(body2_name)));
        } else if (check_name == "radial-containment") {
          results.push_back(
              lab.check_radial_containment(scene.body(body_name), scene.body(body2_name)));
        } else if (check_name == "convolution") {
          results.push_back(lab.check_convolution_identity(
              scene.body(body_name), parse_vec(z_arg, scene.cone.dim())));
        } else if (check_name == "gradient") {
          results.push_back(lab.check_gradient_identity(parse_vec(z_arg, scene.cone.dim())));
        } else if (check_name == "decay") {
          std::vector<double> ts = t_schedule_arg.empty()
                                       ? std::vector<double>{10, 100, 1000, 10000}
                                       : parse_list(t_schedule_arg);
          results.push_back(
              lab.check_decay(scene.body(body_name), parse_vec(z_arg, scene.cone.dim()), ts));
        } else if (check_name == "explore-bm") {
          InequalityLab::ExploreConfig cfg;
          cfg.count = count;
          cfg.lambda = lambda;
          cfg.seed = scene.seed ? scene.seed : 2024;
          results = lab.explore_asymptotic_bm(cfg);
        } else {
          throw ValidationError("InvalidArgument", "unknown check: " + check_name);
        }
        json arr = json::array();
        csv = "name,lhs,rhs,margin,verdict\n";
        bool violated = false;
        for (const auto& r : results) {
          arr.push_back(r.to_json());
          csv += r.name + "," + num(r.lhs) + "," + num(r.rhs) + "," + num(r.margin) + "," +
                 CheckResult::verdict_name(r.verdict) + "\n";
          violated = violated || r.verdict == CheckResult::Verdict::Violated;
        }
        result = results.size() == 1 ? arr[0] : json{{"results", arr}};
        (void)violated;
      }

      return finish(result, csv, out_path, emit_csv, out);
    } catch (const ValidationError& e) {
      err << "error: " << e.what() << "\n";
      return 2;
    } catch (const NumericError& e) {
      err << "error: " << e.what() << "\n";
      return 3;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return 2;
    }
  }

 private:
  static QuadratureOptions quad_opts_default(double tol, int max_depth) {
    QuadratureOptions o;
    if (tol > 0) o.tol = tol;
    if (max_depth > 0) o.max_depth = max_depth;
    return o;
  }

  static std::string num(double x) {
    json j = x;
    return j.dump();
  }

  static Scene load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("InvalidScene", "cannot open scene file: " + path);
    json j;
    in >> j;
    return scene_from_json(j);
  }

  static DiscreteMeasure load_measure(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("InvalidMeasure", "cannot open measure file: " + path);
    json j;
    in >> j;
    return measure_from_json(j);
  }

  static std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty()) out.push_back(std::stod(tok));
    }
    if (out.empty()) throw ValidationError("InvalidArgument", "empty list: " + s);
    return out;
  }

  static Vec parse_vec(const std::string& s, int dim) {
    auto vals = parse_list(s);
    if (static_cast<int>(vals.size()) != dim)
      throw ValidationError("InvalidArgument", "expected " + std::to_string(dim) + " components");
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v(i) = vals[i];
    return v;
  }

  static std::string reproduce_csv(const CheckResult& r) {
    std::string csv;
    if (r.witness.contains("trace")) {
      csv = "cutoff,value,closed_form\n";
      for (const auto& row : r.witness["trace"]) {
        csv += num(row[0].get<double>()) + "," + num(row[1].get<double>());
        if (row.size() > 2) csv += "," + num(row[2].get<double>());
        csv += "\n";
      }
    }
    return csv;
  }

  static void emit(const json& result, const std::string& csv, const std::string& out_path,
                   bool emit_csv, std::ostream& out) {
    if (!out_path.empty()) {
      std::ofstream f(out_path);
      if (!f) throw ValidationError("InvalidArgument", "cannot open output file: " + out_path);
      if (emit_csv)
        f << csv;
      else
        f << result.dump(2) << "\n";
      out << json{{"written", out_path}}.dump() << "\n";
    } else {
      out << result.dump() << "\n";
    }
  }

  static int finish(const json& result, const std::string& csv, const std::string& out_path,
                    bool emit_csv, std::ostream& out) {
    emit(result, csv, out_path, emit_csv, out);
    return 0;
  }
};

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Cli cli;
  return cli.run(args, out, err);
}

}  // namespace pclab

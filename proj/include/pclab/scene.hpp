#pragma once

#include "pclab/functionals.hpp"
#include "pclab/solver.hpp"

#include <json.hpp>

#include <map>

namespace pclab {

using nlohmann::json;

inline json vec_to_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Vec vec_from_json(const json& a) {
  if (!a.is_array() || a.empty()) throw ValidationError("InvalidScene", "expected a vector");
  Vec v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<int>(i)) = a[i].get<double>();
  return v;
}

// --- cone ------------------------------------------------------------------

inline json cone_to_json(const Cone& c) {
  json j;
  j["dim"] = c.dim();
  if (c.is_circular()) {
    j["kind"] = "circular";
    j["axis"] = vec_to_json(c.axis());
    j["half_angle_deg"] = c.half_angle() * 180.0 / kPi;
  } else {
    j["kind"] = "polyhedral";
    json normals = json::array();
    for (const auto& w : c.facet_normals()) normals.push_back(vec_to_json(w));
    j["normals"] = normals;
  }
  return j;
}

inline Cone cone_from_json(const json& j) {
  std::string kind = j.at("kind").get<std::string>();
  Cone c = [&] {
    if (kind == "circular")
      return Cone::circular(vec_from_json(j.at("axis")),
                            j.at("half_angle_deg").get<double>() * kPi / 180.0);
    if (kind == "polyhedral") {
      std::vector<Vec> normals;
      for (const auto& w : j.at("normals")) normals.push_back(vec_from_json(w));
      return Cone::polyhedral(j.at("dim").get<int>(), normals);
    }
    throw ValidationError("InvalidScene", "unknown cone kind: " + kind);
  }();
  if (j.contains("u_ref")) c = c.with_reference(vec_from_json(j.at("u_ref")));
  return c;
}

// --- weight ------------------------------------------------------------------

inline json weight_to_json(const WeightSpec& w) {
  json j;
  j["q"] = w.q();
  switch (w.kind()) {
    case WeightSpec::Kind::RadialPower:
      j["kind"] = "radial_power";
      break;
    case WeightSpec::Kind::DirectionalPower:
      j["kind"] = "directional_power";
      j["direction"] = vec_to_json(w.direction());
      break;
    case WeightSpec::Kind::Custom:
      throw ValidationError("InvalidScene", "custom weights are not serializable");
  }
  return j;
}

inline WeightSpec weight_from_json(const json& j) {
  std::string kind = j.at("kind").get<std::string>();
  double q = j.at("q").get<double>();
  if (kind == "radial_power") return WeightSpec::radial_power(q);
  if (kind == "directional_power")
    return WeightSpec::directional_power(q, vec_from_json(j.at("direction")));
  throw ValidationError("InvalidScene", "unknown weight kind: " + kind);
}

// --- bodies ------------------------------------------------------------------

inline json body_to_json(const PseudoCone& e) {
  using Form = PseudoCone::Form;
  json j;
  switch (e.form()) {
    case Form::WulffLike: {
      const auto& wd = e.wulff_data();
      j["kind"] = "wulff";
      json dirs = json::array();
      for (const auto& v : wd.dirs) dirs.push_back(vec_to_json(v));
      j["directions"] = dirs;
      j["hbar"] = wd.hbar;
      if (wd.shift.size() && wd.shift.norm() > 0) j["shift"] = vec_to_json(wd.shift);
      return j;
    }
    case Form::PowerProduct: {
      bool plain = true;
      for (int i = 0; i < e.alpha().size(); ++i)
        if (e.alpha()(i) != 1.0) plain = false;
      if (plain) {
        j["kind"] = "hyperbola";
        j["c"] = e.level();
      } else {
        j["kind"] = "power_product";
        j["alpha"] = vec_to_json(e.alpha());
        j["c"] = e.level();
      }
      return j;
    }
    case Form::ShiftedCone:
      j["kind"] = "shifted_cone";
      j["z"] = vec_to_json(e.apex());
      return j;
    case Form::Sweep:
      j["kind"] = "sweep";
      j["a"] = vec_to_json(e.translation());
      j["b"] = vec_to_json(e.right_endpoint());
      return j;
    case Form::SumRadial:
    case Form::SumMinkowski:
      j["kind"] = "sum";
      j["op"] = e.form() == Form::SumMinkowski ? "minkowski" : "radial";
      j["left"] = body_to_json(e.left());
      j["right"] = body_to_json(e.right());
      return j;
    case Form::Translated:
      j["kind"] = "translated";
      j["z"] = vec_to_json(e.translation());
      j["body"] = body_to_json(e.left());
      return j;
    case Form::FullCone:
      j["kind"] = "full_cone";
      return j;
  }
  throw ValidationError("InvalidScene", "unserializable body");
}

inline PseudoCone body_from_json(const json& j, const Cone& c,
                                 const std::map<std::string, json>* named = nullptr,
                                 int depth = 0) {
  if (depth > 32) throw ValidationError("InvalidScene", "body nesting too deep");
  if (j.is_string()) {
    if (!named) throw ValidationError("InvalidScene", "body reference without a scene");
    auto it = named->find(j.get<std::string>());
    if (it == named->end())
      throw ValidationError("InvalidScene", "unknown body: " + j.get<std::string>());
    return body_from_json(it->second, c, named, depth + 1);
  }
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "wulff") {
    std::vector<Vec> dirs;
    for (const auto& d : j.at("directions")) dirs.push_back(vec_from_json(d));
    std::vector<double> hbar = j.at("hbar").get<std::vector<double>>();
    PseudoCone w = PseudoCone::wulff(c, dirs, hbar);
    if (j.contains("shift")) w = translate_any(w, vec_from_json(j.at("shift")));
    return w;
  }
  if (kind == "hyperbola") return PseudoCone::hyperbola(c, j.value("c", 1.0));
  if (kind == "power_product")
    return PseudoCone::power_product(c, vec_from_json(j.at("alpha")), j.value("c", 1.0));
  if (kind == "shifted_cone") return PseudoCone::shifted_cone(c, vec_from_json(j.at("z")));
  if (kind == "sweep")
    return PseudoCone::sweep(c, vec_from_json(j.at("a")), vec_from_json(j.at("b")));
  if (kind == "sum") {
    PseudoCone l = body_from_json(j.at("left"), c, named, depth + 1);
    PseudoCone r = body_from_json(j.at("right"), c, named, depth + 1);
    std::string op = j.at("op").get<std::string>();
    if (op == "minkowski") return minkowski_sum(l, r, j.value("samples", 0));
    if (op == "radial") return radial_sum(l, r);
    throw ValidationError("InvalidScene", "unknown sum op: " + op);
  }
  if (kind == "scaled")
    return scale(body_from_json(j.at("body"), c, named, depth + 1), j.at("t").get<double>());
  if (kind == "translated")
    return translate_any(body_from_json(j.at("body"), c, named, depth + 1),
                         vec_from_json(j.at("z")));
  if (kind == "full_cone") return PseudoCone::full_cone(c);
  throw ValidationError("InvalidScene", "unknown body kind: " + kind);
}

// --- measures / reports ------------------------------------------------------

inline json measure_to_json(const DiscreteMeasure& m) {
  json j;
  json dirs = json::array();
  for (const auto& v : m.directions) dirs.push_back(vec_to_json(v));
  j["directions"] = dirs;
  j["masses"] = m.masses;
  return j;
}

inline DiscreteMeasure measure_from_json(const json& j) {
  DiscreteMeasure m;
  for (const auto& d : j.at("directions")) m.directions.push_back(vec_from_json(d));
  m.masses = j.at("masses").get<std::vector<double>>();
  m.validate();
  return m;
}

inline json verdict_to_json(const FinitenessVerdict& v) {
  json j;
  j["status"] = FinitenessVerdict::name(v.status);
  if (v.status == FinitenessVerdict::Status::Finite) {
    j["value"] = v.value;
    j["error"] = v.error;
  }
  if (v.divergent()) j["growth_exponent"] = v.growth_exponent;
  json tr = json::array();
  for (const auto& [c, f] : v.trace) tr.push_back(json::array({c, f}));
  j["trace"] = tr;
  j["r2_power"] = v.r2_power;
  j["r2_log"] = v.r2_log;
  return j;
}

inline json solver_report_to_json(const SolverReport& r) {
  json j;
  j["h_tilde"] = r.h_tilde;
  j["lambda"] = r.lambda;
  j["residual"] = r.residual;
  j["objective_trace"] = r.objective_trace;
  j["b_trace"] = r.b_trace;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  return j;
}

// --- scene -------------------------------------------------------------------

struct Scene {
  Cone cone = Cone::orthant(2);
  WeightSpec weight = WeightSpec::radial_power(0.0);
  std::map<std::string, WeightSpec> weights;
  std::map<std::string, json> body_specs;
  QuadratureOptions quadrature;
  std::uint64_t seed = 0;

  PseudoCone body(const std::string& name) const {
    auto it = body_specs.find(name);
    if (it == body_specs.end()) throw ValidationError("InvalidScene", "unknown body: " + name);
    return body_from_json(it->second, cone, &body_specs);
  }

  WeightSpec weight_named(const std::string& name) const {
    if (name.empty()) return weight;
    auto it = weights.find(name);
    if (it == weights.end()) throw ValidationError("InvalidScene", "unknown weight: " + name);
    return it->second;
  }
};

inline Scene scene_from_json(const json& j) {
  Scene s;
  s.cone = cone_from_json(j.at("cone"));
  if (j.contains("weight")) s.weight = weight_from_json(j.at("weight"));
  if (j.contains("weights"))
    for (auto it = j.at("weights").begin(); it != j.at("weights").end(); ++it)
      s.weights.emplace(it.key(), weight_from_json(it.value()));
  if (j.contains("bodies"))
    for (auto it = j.at("bodies").begin(); it != j.at("bodies").end(); ++it)
      s.body_specs.emplace(it.key(), it.value());
  if (j.contains("quadrature")) {
    s.quadrature.tol = j.at("quadrature").value("tol", 1e-10);
    s.quadrature.max_depth = j.at("quadrature").value("max_depth", 40);
  }
  s.seed = j.value("seed", 0ULL);
  // resolve every body once so a bad scene fails loudly up front
  for (const auto& [name, spec] : s.body_specs) (void)s.body(name);
  return s;
}

}  // namespace pclab

#include "pclab/cli.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <sstream>

using namespace pclab;

namespace {

std::string scene_path() { return std::string(PCLAB_TEST_DATA) + "/quadrant.json"; }
std::string measure_path() { return std::string(PCLAB_TEST_DATA) + "/mu_wedge.json"; }

struct RunResult {
  int code;
  std::string out;
  std::string err;
  json parsed() const { return json::parse(out); }
};

RunResult run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("scene round-trips through JSON") {
  std::ifstream in(scene_path());
  json j;
  in >> j;
  Scene s = scene_from_json(j);
  REQUIRE(s.cone.dim() == 2);
  REQUIRE(s.weight.q() == 3.0);
  REQUIRE(s.seed == 42);
  auto hyp = s.body("hyp");
  REQUIRE(hyp.form() == PseudoCone::Form::PowerProduct);
  // named reference resolution inside a sum
  auto both = s.body("both");
  REQUIRE(both.form() == PseudoCone::Form::SumRadial);
  // serialize and re-parse a body
  json b = body_to_json(s.body("hyp_shifted"));
  PseudoCone back = body_from_json(b, s.cone);
  Vec u = vec2(std::cos(0.7), std::sin(0.7));
  REQUIRE(radial(back, u) == Catch::Approx(radial(s.body("hyp_shifted"), u)).epsilon(1e-14));
}

TEST_CASE("cone and weight JSON round-trips") {
  Cone c = Cone::circular(vec3(0.1, -0.2, 0.97).normalized(), 0.5);
  Cone c2 = cone_from_json(cone_to_json(c));
  REQUIRE(c2.is_circular());
  REQUIRE((c2.axis() - c.axis()).norm() < 1e-15);
  REQUIRE(c2.half_angle() == Catch::Approx(c.half_angle()).epsilon(1e-15));
  WeightSpec w = WeightSpec::directional_power(1.5, vec2(1, 2));
  WeightSpec w2 = weight_from_json(weight_to_json(w));
  REQUIRE(w2.q() == 1.5);
  REQUIRE((w2.direction() - w.direction()).norm() < 1e-15);
}

TEST_CASE("cli covolume command") {
  auto r = run({"covolume", "--scene", scene_path(), "--body", "wedge", "--weight", "flat"});
  REQUIRE(r.code == 0);
  auto j = r.parsed();
  REQUIRE(j["value"].get<double>() == Catch::Approx(2.0).margin(1e-8));
  REQUIRE(j["error"].get<double>() < 1e-8);
}

TEST_CASE("cli volume and scaling") {
  auto r = run({"volume", "--scene", scene_path(), "--body", "shift"});
  REQUIRE(r.code == 0);
  REQUIRE(r.parsed()["value"].get<double>() ==
          Catch::Approx(2.0 - std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("cli asym-covolume with detection matches explicit z") {
  auto detected = run({"asym-covolume", "--scene", scene_path(), "--body", "hyp_shifted"});
  REQUIRE(detected.code == 0);
  auto jd = detected.parsed();
  REQUIRE(jd["degenerate"].get<bool>() == false);
  REQUIRE(jd["z"][0].get<double>() == Catch::Approx(1.0).margin(1e-8));
  auto explicit_z =
      run({"asym-covolume", "--scene", scene_path(), "--body", "hyp", "--z", "1,1"});
  REQUIRE(explicit_z.code == 0);
  REQUIRE(jd["value"].get<double>() ==
          Catch::Approx(explicit_z.parsed()["value"].get<double>()).epsilon(1e-9));
}

TEST_CASE("cli surface area measure") {
  auto r = run({"sam", "--scene", scene_path(), "--body", "wedge", "--weight", "flat"});
  REQUIRE(r.code == 0);
  REQUIRE(r.parsed()["masses"][0].get<double>() ==
          Catch::Approx(2 * std::sqrt(2.0)).epsilon(1e-7));
}

TEST_CASE("cli dual-volume and validation exit code") {
  auto ok = run({"dual-volume", "--scene", scene_path(), "--body", "hyp", "--r", "-2"});
  REQUIRE(ok.code == 0);
  REQUIRE(ok.parsed()["value"].get<double>() == Catch::Approx(0.25).epsilon(1e-9));
  auto bad = run({"dual-volume", "--scene", scene_path(), "--body", "hyp", "--r", "2"});
  REQUIRE(bad.code == 2);
}

TEST_CASE("cli starting-point") {
  auto r = run({"starting-point", "--scene", scene_path(), "--body", "hyp_shifted"});
  REQUIRE(r.code == 0);
  auto j = r.parsed();
  REQUIRE(j["degenerate"].get<bool>() == false);
  REQUIRE(j["z"][1].get<double>() == Catch::Approx(1.0).margin(1e-8));
}

TEST_CASE("cli finiteness probe and divergence") {
  auto fin = run({"finiteness", "--scene", scene_path(), "--body", "hyp", "--functional",
                  "asym", "--z", "1,1"});
  REQUIRE(fin.code == 0);
  REQUIRE(fin.parsed()["status"].get<std::string>() == "finite");
  auto div = run({"finiteness", "--scene", scene_path(), "--body", "hyp", "--functional",
                  "volume", "--weight", "sub"});
  REQUIRE(div.code == 0);
  REQUIRE(div.parsed()["status"].get<std::string>() == "power_divergent");
}

TEST_CASE("cli solve round trip") {
  auto r = run({"solve", "--scene", scene_path(), "--measure", measure_path(), "--weight",
                "flat", "--grad-tol", "1e-5"});
  REQUIRE(r.code == 0);
  auto j = r.parsed();
  REQUIRE(j["converged"].get<bool>());
  REQUIRE(j["h_tilde"][0].get<double>() == Catch::Approx(std::sqrt(2.0)).epsilon(1e-3));
}

TEST_CASE("cli check commands") {
  auto conv = run({"check", "--scene", scene_path(), "--name", "convolution", "--body", "hyp",
                   "--z", "1,1"});
  REQUIRE(conv.code == 0);
  REQUIRE(conv.parsed()["verdict"].get<std::string>() == "equality_within_tol");
  auto bm = run({"check", "--scene", scene_path(), "--name", "bm", "--body", "wedge",
                 "--body2", "shift", "--weight", "flat"});
  REQUIRE(bm.code == 0);
  REQUIRE(bm.parsed()["verdict"].get<std::string>() != "violated");
}

TEST_CASE("cli reproduce emits the counterexample trace") {
  auto r = run({"reproduce", "sam_critical"});
  REQUIRE(r.code == 0);
  auto j = r.parsed();
  REQUIRE(j["verdict"].get<std::string>() == "holds");
  REQUIRE(j["witness"]["classification"].get<std::string>() == "log_divergent");
}

TEST_CASE("cli dry-run validates without computing") {
  auto ok = run({"covolume", "--scene", scene_path(), "--body", "wedge", "--weight", "flat",
                 "--dry-run"});
  REQUIRE(ok.code == 0);
  REQUIRE(ok.parsed()["dry_run"].get<bool>());
  // volume needs q > n: the default weight q=3 is fine, the flat one is not
  auto bad = run({"volume", "--scene", scene_path(), "--body", "wedge", "--weight", "flat",
                  "--dry-run"});
  REQUIRE(bad.code == 2);
}

TEST_CASE("cli output is byte-identical across runs and thread counts") {
  std::vector<std::string> cmd = {"covolume", "--scene", scene_path(), "--body",
                                  "hyp",      "--weight", "sub"};
  auto a = run(cmd);
  auto b = run(cmd);
  REQUIRE(a.out == b.out);
  auto cmd2 = cmd;
  cmd2.push_back("--threads");
  cmd2.push_back("3");
  auto c = run(cmd2);
  REQUIRE(a.out == c.out);
  auto sweep1 = run({"check", "--scene", scene_path(), "--name", "explore-bm", "--count", "3"});
  auto sweep2 = run({"check", "--scene", scene_path(), "--name", "explore-bm", "--count", "3"});
  REQUIRE(sweep1.out == sweep2.out);
}

TEST_CASE("cli unknown body and missing scene fail with exit 2") {
  auto bad = run({"covolume", "--scene", scene_path(), "--body", "nope"});
  REQUIRE(bad.code == 2);
  auto nofile = run({"covolume", "--scene", "/does/not/exist.json", "--body", "hyp"});
  REQUIRE(nofile.code == 2);
}

TEST_CASE("cli csv output") {
  std::string out_file = "/tmp/pclab_test_out.csv";
  auto r = run({"sam", "--scene", scene_path(), "--body", "wedge", "--weight", "flat", "--out",
                out_file, "--emit-csv"});
  REQUIRE(r.code == 0);
  std::ifstream f(out_file);
  std::string header;
  std::getline(f, header);
  REQUIRE(header == "mass,error,v0,v1");
  std::string row;
  std::getline(f, row);
  REQUIRE(row.substr(0, 6) == "2.8284");
}

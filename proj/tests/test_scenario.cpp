#include <doctest.h>

#include "op_helpers.hpp"
#include "sqm/scenario.hpp"

using namespace sqm;
using namespace sqm::testing;

namespace {

// line and column of the error a bad scenario raises
std::pair<int, int> where(const std::string& text) {
  try {
    parse_scenario(text, "t.yaml");
  } catch (const ScenarioError& e) {
    return {e.line, e.col};
  }
  return {0, 0};
}

std::string message(const std::string& text) {
  try {
    parse_scenario(text, "t.yaml");
  } catch (const ScenarioError& e) {
    return e.what();
  }
  return "";
}

const char* kWitten = R"(name: w
model:
  constructor: witten
  params:
    W: "x^3 - x"
coordinates:
  box: {x: [-2, 2]}
points: 6
)";

}  // namespace

TEST_CASE("a minimal scenario loads with defaults") {
  Scenario sc = parse_scenario(kWitten);
  CHECK(sc.name == "w");
  CHECK(sc.constructor == "witten");
  CHECK(sc.coords == std::vector<std::string>{"x"});
  CHECK(sc.samples.n_points == 6);
  REQUIRE(sc.checks.size() == 1);
  CHECK(sc.checks[0].kind == CheckSpec::Kind::Suite);
  CHECK(sc.checks[0].text == "all");
  RunResult r = run_scenario(sc);
  CHECK(r.ok);
  CHECK(r.checks.size() == verify_model(sc.model, sc.samples).size());
}

TEST_CASE("errors point at the offending node") {
  // unknown constructor, on the constructor value
  auto [l, c] = where("model:\n  constructor: wittn\n");
  CHECK(l == 2);
  CHECK(message("model:\n  constructor: wittn\n").find("unknown constructor 'wittn'") != std::string::npos);
  // expression error lands inside the quoted string
  std::string bad = "model:\n  constructor: witten\n  params:\n    W: \"x^3 - * x\"\n";
  auto [l2, c2] = where(bad);
  CHECK(l2 == 4);
  CHECK(c2 > 8);
  CHECK(message(bad).rfind("t.yaml:4:", 0) == 0);
  // unknown top-level key
  CHECK(where(std::string(kWitten) + "colour: red\n").first == 9);
  // syntax errors come from the YAML reader with a position
  CHECK(where("model: [\n").first >= 1);
}

TEST_CASE("bad values are rejected with a reason") {
  CHECK(message(std::string(kWitten) + "checks:\n  - sideways\n").find("unknown suite 'sideways'") != std::string::npos);
  CHECK(message(std::string(kWitten) + "checks:\n  - relation: nope\n").find("has no relation 'nope'") != std::string::npos);
  CHECK(message(std::string(kWitten) + "checks:\n  - identity: \"Q + Qbarr = 0\"\n").find("unknown operator 'Qbarr'") !=
        std::string::npos);
  CHECK(message(std::string(kWitten) + "checks:\n  - identity: \"Q\"\n").find("lhs = rhs") != std::string::npos);
  CHECK(message(std::string(kWitten) + "tolerance: -1\n").find("tolerance must be positive") != std::string::npos);
  CHECK(!message("model:\n  constructor: witten\n  params: {}\n").empty());
  CHECK(message("model:\n  constructor: wz_modes\n  params:\n    modes: [[0,0,1],[1,0,0],[0,1,0],[1,1,0],[1,1,1]]\n")
            .find("at most 4 modes") != std::string::npos);
  CHECK(message("model:\n  constructor: witten\n  params: {W: x}\ncoordinates:\n  box: {x: [1, -1]}\n")
            .find("low < high") != std::string::npos);
}

TEST_CASE("fields feed constructor parameters") {
  Scenario sc = parse_scenario(R"(model:
  constructor: witten
  params:
    W: "a*x^2/2"
fields:
  a: "2 + 0*x"
coordinates:
  box: {x: [-1, 1]}
)");
  CHECK(sc.fields.count("a"));
  // W' = 2x, so H has x^2 * 2 = 2x^2 in its potential: compare with the literal model
  Model lit = witten(parse("x^2", {"x"}));
  CHECK(zero(sc.model.op("H") - lit.op("H"), box(1)));
}

TEST_CASE("operator expressions") {
  Model m = witten(parse("x^3 - x", {"x"}));
  auto s = box(1);
  CHECK(zero(eval_op_expression("{Q, Qbar} - 2*H", m), s));
  CHECK(zero(eval_op_expression("Q*Q", m), s));
  CHECK(zero(eval_op_expression("[H, Q]", m), s));
  CHECK(zero(eval_op_expression("Q*Qbar + Qbar*Q - 2*H", m), s));
  CHECK(zero(eval_op_expression("H/2 - 0.5*H", m), s));
  CHECK(zero(eval_op_expression("(Q + Qbar)*(Q + Qbar) - 2*H", m), s));
  CHECK(zero(eval_op_expression("adj(Q) - Qbar", m), s));
  CHECK(zero(eval_op_expression("dagger(H) - H", m), s));
  CHECK(zero(eval_op_expression("i*Q - Q*i", m), s));
  CHECK(!zero(eval_op_expression("Q", m), s));
  CHECK_THROWS_AS(eval_op_expression("Q +", m), std::invalid_argument);
  CHECK_THROWS_AS(eval_op_expression("H/Q", m), std::invalid_argument);
  CHECK_THROWS_AS(eval_op_expression("[Q, Qbar", m), std::invalid_argument);
}

TEST_CASE("longest operator name wins") {
  // Qbar is not Q followed by "bar"
  Model m = witten(parse("x^2", {"x"}));
  CHECK(zero(eval_op_expression("Qbar", m) - m.op("Qbar"), box(1)));
}

TEST_CASE("suite expectations and per-check tolerances") {
  std::string t = std::string(kWitten) + R"(checks:
  - suite: n2
    expect: violated
  - identity: "Q*Q + 1e-6*H = 0"
  - identity: "Q*Q + 1e-6*H = 0"
    tol: 1e-4
  - identity: "Q = 0"
    expect: violated
  - suite: replay
)";
  Scenario sc = parse_scenario(t);
  RunResult r = run_scenario(sc);
  REQUIRE(r.checks.size() == 4 + 3 + 1);
  // the n2 relations hold, so expecting them violated fails
  for (int k = 0; k < 4; ++k) CHECK(r.checks[k].verdict == Verdict::Fail);
  CHECK(r.checks[4].verdict == Verdict::Gray);
  CHECK(r.checks[5].verdict == Verdict::Pass);
  CHECK(r.checks[6].verdict == Verdict::ViolatedAsExpected);
  CHECK(r.checks[7].verdict == Verdict::Pass);
  CHECK(!r.ok);

  RunOptions o;
  o.tol = 1e-4;
  RunResult loose = run_scenario(sc, o);
  CHECK(loose.checks[4].verdict == Verdict::Pass);
  // replay stays exact under a global tolerance
  CHECK(loose.checks[7].tol == 0.0);
}

TEST_CASE("gray zone can be relaxed") {
  Scenario sc = parse_scenario(std::string(kWitten) + "checks:\n  - identity: \"Q*Q + 1e-6*H = 0\"\n");
  CHECK(!run_scenario(sc).ok);
  RunOptions o;
  o.fail_on_gray = false;
  CHECK(run_scenario(sc, o).ok);
  CHECK(run_scenario(sc, o).report["fail_on_gray"] == false);
}

TEST_CASE("seed and points overrides reach the report") {
  Scenario sc = parse_scenario(kWitten);
  RunOptions o;
  o.seed = 1234;
  o.points = 3;
  RunResult r = run_scenario(sc, o);
  CHECK(r.report["sampling"]["seed"] == 1234);
  CHECK(r.report["sampling"]["points"] == 3);
  CHECK(run_scenario(sc, o).report.dump() == r.report.dump());
  RunOptions other = o;
  other.seed = 99;
  CHECK(run_scenario(sc, other).report.dump() != r.report.dump());
}

TEST_CASE("kahler expectation flips the structure checks") {
  Scenario sc = parse_scenario(R"(model:
  constructor: kahler
  params:
    D: 4
    geometry: {warped: "0.3*sin(x1) + 0.5*x3*x2"}
    structure: {canonical: 3}
expect: {kahler: violated}
points: 4
checks:
  - geometry
)");
  CHECK(!sc.options.kahler);
  RunResult r = run_scenario(sc);
  CHECK(r.ok);
  bool saw = false;
  for (const auto& c : r.checks) saw |= c.verdict == Verdict::ViolatedAsExpected;
  CHECK(saw);
}

TEST_CASE("every shipped scenario loads") {
  for (const char* f : {"witten", "free_complex", "free_real", "dolbeault", "de_rham", "de_rham_torsion", "quasicomplex",
                        "kahler", "kahler_broken", "hyperkahler_flat", "gibbons_hawking", "hkt_conformal", "hkt_reduced",
                        "okt_flat", "instanton", "gauge_sym3", "gauge_sym3_resolved", "wz_modes", "torsion_rotate"}) {
    INFO(std::string(f));
    Scenario sc = load_scenario(std::string(SQM_SCENARIOS) + "/" + f + ".yaml");
    CHECK(!sc.checks.empty());
    CHECK(sc.samples.box.size() == sc.model.coords.size());
  }
}

#include <doctest.h>

#include <random>

#include "op_helpers.hpp"
#include "sqm/verify.hpp"

using namespace sqm;
using namespace sqm::testing;

namespace {

Residual r(double max_abs, double scale) {
  Residual x;
  x.max_abs = max_abs;
  x.scale = scale;
  return x;
}

}  // namespace

TEST_CASE("verdict thresholds scale with the operands") {
  CHECK(judge(r(0, 0), Expect::Holds) == Verdict::Pass);
  CHECK(judge(r(1e-9, 0), Expect::Holds) == Verdict::Pass);
  CHECK(judge(r(2e-9, 0), Expect::Holds) == Verdict::Gray);
  // the same absolute residual passes next to big operands
  CHECK(judge(r(5e-8, 100), Expect::Holds) == Verdict::Pass);
  CHECK(judge(r(1e-3, 0), Expect::Holds) == Verdict::Fail);
  CHECK(judge(r(1e-3, 10), Expect::Holds) == Verdict::Gray);
  CHECK(judge(r(0.5, 1), Expect::Holds) == Verdict::Fail);

  CHECK(judge(r(0.5, 1), Expect::Violated) == Verdict::ViolatedAsExpected);
  CHECK(judge(r(1e-12, 1), Expect::Violated) == Verdict::Fail);
  CHECK(judge(r(1e-6, 1), Expect::Violated) == Verdict::Gray);
  CHECK(judge(r(7, 1), Expect::Exploratory) == Verdict::Exploratory);
  // tol 0 means exact
  CHECK(judge(r(1e-300, 1), Expect::Holds, 0.0) != Verdict::Pass);
}

TEST_CASE("gray fails unless relaxed") {
  CheckReport c = make_report("x", {}, r(1e-6, 0));
  CHECK(c.verdict == Verdict::Gray);
  CHECK(!c.ok());
  CHECK(c.ok(false));
  CHECK(!make_report("x", {}, r(1, 0)).ok(false));
  CHECK(make_report("x", {}, r(1, 0), Expect::Violated).ok());
  CHECK(!all_ok({make_report("a", {}, r(0, 0)), c}));
  CHECK(all_ok({make_report("a", {}, r(0, 0)), c}, false));
}

TEST_CASE("check_zero reports where it failed") {
  std::vector<std::string> c{"x", "y"};
  DiffOp A = DiffOp::multiplication(c, sfield("x*y", c));
  SampleSpec s = box(2, -1, 1, 30);
  CheckReport rep = check_zero("xy = 0", {"A"}, A, s);
  CHECK(rep.verdict == Verdict::Fail);
  REQUIRE(rep.residual.argmax_point.size() == 2);
  const auto& p = rep.residual.argmax_point;
  CHECK(rep.residual.max_abs == doctest::Approx(std::abs(p[0] * p[1])));
  // the argmax is the worst of the sample points
  for (const auto& q : sample_points(s)) CHECK(std::abs(q[0] * q[1]) <= rep.residual.max_abs);
}

TEST_CASE("replay is exact for every constructor in a quick tour") {
  std::vector<Model> ms{witten(parse("x^3 - x", {"x"})), free_complex(2), free_real(2), okt_flat(), instanton(1.0),
                        gauge_sym3(), hkt_conformal(parse("0.2*x1^2", complex_coords(2)))};
  for (const auto& m : ms) {
    CheckReport c = check_replay(m, box(static_cast<int>(m.coords.size()), -1, 1, 3));
    INFO(m.name);
    CHECK(c.verdict == Verdict::Pass);
    CHECK(c.tol == 0.0);
    CHECK(c.residual.max_abs == 0.0);
    CHECK(c.operands == m.op_names());
  }
}

TEST_CASE("a model without a recipe is exploratory, not a pass") {
  Model m = free_complex(1);
  m.replay = nullptr;
  CheckReport c = check_replay(m, box(2));
  CHECK(c.verdict == Verdict::Exploratory);
  CHECK(!c.note.empty());
}

TEST_CASE("replay notices a tampered operator") {
  Model m = witten(parse("x^2", {"x"}));
  m.hamiltonian = m.hamiltonian + DiffOp::multiplication(m.coords, Field::scalar(1e-14) * Field::identity(m.rep.dim()));
  CheckReport c = check_replay(m, box(1));
  CHECK(c.verdict != Verdict::Pass);
}

TEST_CASE("report json carries the whole run") {
  Model m = witten(parse("x^3 - x", {"x"}));
  SampleSpec s = box(1, -2, 2, 7, 99);
  auto rs = verify_model(m, s);
  rs.push_back(make_report("made up", {"Q"}, r(1e-6, 0)));
  auto j = report_json("w.yaml", m, s, rs);
  CHECK(j["scenario"] == "w.yaml");
  CHECK(j["model"] == m.name);
  CHECK(j["coords"] == nlohmann::ordered_json{"x"});
  CHECK(j["hilbert_dim"] == 2);
  CHECK(j["sampling"]["points"] == 7);
  CHECK(j["sampling"]["seed"] == 99);
  CHECK(j["sampling"]["box"][0][1] == 2.0);
  CHECK(!j["recipe"].empty());
  REQUIRE(j["checks"].size() == rs.size());
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const auto& c = j["checks"][i];
    CHECK(c["name"] == rs[i].name);
    CHECK(c["verdict"] == to_string(rs[i].verdict));
    CHECK(c["residual"] == rs[i].residual.max_abs);
    CHECK(c.contains("scale"));
    CHECK(c.contains("tol"));
    CHECK(c.contains("argmax"));
  }
  CHECK(j["summary"]["gray"] == 1);
  CHECK(j["summary"]["pass"] == static_cast<int>(rs.size()) - 1);
  CHECK(j["summary"]["ok"] == false);
  CHECK(report_json("w.yaml", m, s, rs, false)["summary"]["ok"] == true);
  // same inputs, same bytes
  CHECK(report_json("w.yaml", m, s, verify_model(m, s)).dump() == report_json("w.yaml", m, s, verify_model(m, s)).dump());
}

TEST_CASE("Jacobi identity for random operators") {
  std::mt19937_64 rng(17);
  const std::vector<std::string> c{"x", "y"};
  for (int t = 0; t < 8; ++t) {
    DiffOp a = random_op(rng, c, 2, 1), b = random_op(rng, c, 2, 1), d = random_op(rng, c, 2, 2);
    DiffOp J = jacobi(a, b, d);
    CHECK(zero(J, box(2, -1, 1, 8), 1e-9));
    // and it is not trivially small: the brackets themselves are not zero
    CHECK(res(commutator(a, commutator(b, d)), box(2, -1, 1, 8)) > 1e-3);
  }
}

TEST_CASE("suite selection follows the algebra") {
  auto names = [](const std::vector<CheckReport>& rs) {
    std::vector<std::string> v;
    for (const auto& c : rs) v.push_back(c.name);
    return v;
  };
  auto has = [&](const std::vector<CheckReport>& rs, const std::string& n) {
    auto v = names(rs);
    return std::find(v.begin(), v.end(), n) != v.end();
  };
  auto n2 = verify_model(witten(parse("x^2", {"x"})), box(1));
  CHECK(has(n2, "Q^2 = 0"));
  CHECK(!has(n2, "{Q, Q} = 0"));
  auto n8 = verify_model(okt_flat(), box(8, -1, 1, 2));
  CHECK(has(n8, "{S7, S7} = 2H"));
  VerifyOptions o;
  o.replay = false;
  CHECK(!has(verify_model(free_complex(1), box(2), o), "recipe replay"));
}

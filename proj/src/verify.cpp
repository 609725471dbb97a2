#include "sqm/verify.hpp"

#include <cmath>

namespace sqm {

namespace {

constexpr cplx I1{0.0, 1.0};

CheckReport zero(std::string name, std::vector<std::string> ops, const DiffOp& d, const SampleSpec& s,
                 Expect e = Expect::Holds, double tol = kPassTol) {
  return check_zero(std::move(name), std::move(ops), d, s, e, tol);
}

std::string br(const char* open, const std::string& a, const std::string& b, const char* close) {
  return open + a + ", " + b + close;
}

}  // namespace

DiffOp jacobi(const DiffOp& a, const DiffOp& b, const DiffOp& c) {
  return commutator(a, commutator(b, c)) + commutator(b, commutator(c, a)) + commutator(c, commutator(a, b));
}

std::vector<CheckReport> check_n2(const Model& m, const SampleSpec& s, std::size_t i) {
  const auto& [q, qb] = m.supercharges.at(i);
  const DiffOp& H = m.hamiltonian;
  std::vector<CheckReport> out;
  out.push_back(zero(q.name + "^2 = 0", {q.name}, compose(q.op, q.op), s));
  out.push_back(zero(qb.name + "^2 = 0", {qb.name}, compose(qb.op, qb.op), s));
  out.push_back(zero(br("{", q.name, qb.name, "}") + " = 2H", {q.name, qb.name, "H"},
                     anticommutator(q.op, qb.op) - 2.0 * H, s));
  out.push_back(zero("H symmetric under the measure", {"H"}, adjoint_with_measure(H, m.measure) - H, s));
  return out;
}

std::vector<CheckReport> check_extended(const Model& m, const SampleSpec& s) {
  std::vector<CheckReport> out;
  const DiffOp& H = m.hamiltonian;
  const auto& sc = m.supercharges;
  for (std::size_t i = 0; i < sc.size(); ++i)
    for (std::size_t j = 0; j < sc.size(); ++j) {
      const auto& qi = sc[i].first;
      const auto& qbj = sc[j].second;
      DiffOp d = anticommutator(qi.op, qbj.op);
      if (i == j) d = d - 2.0 * H;
      out.push_back(zero(br("{", qi.name, qbj.name, "}") + (i == j ? " = 2H" : " = 0"), {qi.name, qbj.name}, d, s));
      if (j < i) continue;
      const auto& qj = sc[j].first;
      const auto& qbi = sc[i].second;
      out.push_back(zero(br("{", qi.name, qj.name, "}") + " = 0", {qi.name, qj.name}, anticommutator(qi.op, qj.op), s));
      out.push_back(zero(br("{", qbi.name, qbj.name, "}") + " = 0", {qbi.name, qbj.name},
                         anticommutator(qbi.op, qbj.op), s));
    }
  const auto& hs = m.hermitian;
  for (std::size_t i = 0; i < hs.size(); ++i)
    for (std::size_t j = i; j < hs.size(); ++j) {
      DiffOp d = anticommutator(hs[i].op, hs[j].op);
      if (i == j) d = d - 2.0 * H;
      out.push_back(zero(br("{", hs[i].name, hs[j].name, "}") + (i == j ? " = 2H" : " = 0"), {hs[i].name, hs[j].name},
                         d, s));
    }
  if (!sc.empty()) out.push_back(zero("H symmetric under the measure", {"H"}, adjoint_with_measure(H, m.measure) - H, s));
  return out;
}

std::vector<CheckReport> check_relations(const Model& m, const SampleSpec& s) {
  std::vector<CheckReport> out;
  for (const auto& r : m.relations) out.push_back(zero(r.name, r.operands, r.diff(), s, r.expect, r.tol));
  return out;
}

cplx flat_f_constant(const Model& m) {
  // F's are constant, so any point will do
  const std::vector<double> p(m.coords.size(), 0.0);
  const Mat Fp = value(m.op("F+").coefficient({}), p), Fm = value(m.op("F-").coefficient({}), p);
  const Mat F0 = value(m.op("F0").coefficient({}), p);
  const Mat d = F0 - (Fp * Fm - Fm * Fp);
  return d(0, 0);
}

std::vector<CheckReport> check_theorem1(const Model& m, const SampleSpec& s, bool kahler) {
  const DiffOp &Q = m.op("Q"), &Qb = m.op("Qbar"), &S = m.op("S"), &Sb = m.op("Sbar");
  const DiffOp &Fp = m.op("F+"), &Fm = m.op("F-"), &F0 = m.op("F0");
  const Expect rest = kahler ? Expect::Holds : Expect::Exploratory;
  std::vector<CheckReport> out;
  out.push_back(zero("[Q, F+] = -Sbar", {"Q", "F+", "Sbar"}, commutator(Q, Fp) + Sb, s, rest));
  out.push_back(zero("[Qbar, F-] = -S", {"Qbar", "F-", "S"}, commutator(Qb, Fm) + S, s, rest));
  out.push_back(zero("[S, F+] = Qbar", {"S", "F+", "Qbar"}, commutator(S, Fp) - Qb, s, rest));
  out.push_back(zero("[Sbar, F-] = Q", {"Sbar", "F-", "Q"}, commutator(Sb, Fm) - Q, s, rest));
  out.push_back(zero("[Q, F-] = 0", {"Q", "F-"}, commutator(Q, Fm), s, rest));
  out.push_back(zero("[Qbar, F+] = 0", {"Qbar", "F+"}, commutator(Qb, Fp), s, rest));
  const cplx c = flat_f_constant(m);
  const int dim = m.rep.dim();
  CheckReport f = zero("[F+, F-] = F0 - c", {"F+", "F-", "F0"},
                       commutator(Fp, Fm) - F0 + mult(m.coords, Mat(c * Mat::Identity(dim, dim))), s);
  f.note = "c = " + std::to_string(c.real());
  out.push_back(f);
  out.push_back(zero("{Q, S} = 0", {"Q", "S"}, anticommutator(Q, S), s, rest));
  out.push_back(zero("{Q, Sbar} = 0", {"Q", "Sbar"}, anticommutator(Q, Sb), s, kahler ? Expect::Holds : Expect::Violated));
  out.push_back(zero("S^2 = 0", {"S"}, compose(S, S), s, rest));
  out.push_back(zero("{S, Sbar} = 2H", {"S", "Sbar", "H"}, anticommutator(S, Sb) - 2.0 * m.hamiltonian, s, rest));
  return out;
}

std::vector<CheckReport> check_theorem2(const Model& m, const SampleSpec& s) {
  std::vector<CheckReport> out;
  const DiffOp &Q = m.op("Q"), &Qb = m.op("Qbar");
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      const std::string A = std::to_string(a + 1), B = std::to_string(b + 1);
      const DiffOp &Sa = m.op("S" + A), &Sba = m.op("Sbar" + A);
      const DiffOp &Fp = m.op("F" + B + "+"), &Fm = m.op("F" + B + "-");
      // derived sign: [S^a, F^b_+] = delta Qbar + eps^abc Sbar^c
      DiffOp d = commutator(Sa, Fp);
      if (a == b) d = d - Qb;
      for (int c = 0; c < 3; ++c)
        if (double e = levi_civita(a, b, c); e != 0) d = d - e * m.op("Sbar" + std::to_string(c + 1));
      out.push_back(zero("[S" + A + ", F" + B + "+] = delta Qbar + eps Sbar", {"S" + A, "F" + B + "+"}, d, s));
      out.push_back(zero("[S" + A + ", F" + B + "-] = 0", {"S" + A, "F" + B + "-"}, commutator(Sa, Fm), s));
      out.push_back(zero("[Sbar" + A + ", F" + B + "+] = 0", {"Sbar" + A, "F" + B + "+"}, commutator(Sba, Fp), s));
    }
  for (int a = 0; a < 3; ++a) {
    const std::string A = std::to_string(a + 1);
    out.push_back(zero("{S" + A + ", Sbar" + A + "} = {Q, Qbar}", {"S" + A, "Sbar" + A, "Q", "Qbar"},
                       anticommutator(m.op("S" + A), m.op("Sbar" + A)) - anticommutator(Q, Qb), s));
  }
  return out;
}

CheckReport check_replay(const Model& m, const SampleSpec& s) {
  if (!m.replay) {
    CheckReport r = make_report("recipe replay", {}, Residual{}, Expect::Exploratory);
    r.note = "model has no recipe";
    return r;
  }
  const Model again = m.replay();
  std::vector<DiffOp> diffs;
  std::vector<std::string> names = m.op_names();
  for (const auto& n : names) diffs.push_back(m.op(n) - again.op(n));
  std::vector<const DiffOp*> ptrs;
  for (const auto& d : diffs) ptrs.push_back(&d);
  Residual r = residual(ptrs, sample_points(s));
  return make_report("recipe replay", names, r, Expect::Holds, 0.0);
}

std::vector<CheckReport> verify_model(const Model& m, const SampleSpec& s, const VerifyOptions& o) {
  std::vector<CheckReport> out;
  auto add = [&](std::vector<CheckReport> v) {
    for (auto& r : v) out.push_back(std::move(r));
  };
  if (o.geometry && m.geometry_checks) add(m.geometry_checks(s, o.kahler ? Expect::Holds : Expect::Violated));
  switch (m.algebra) {
    case Algebra::Gauge: {
      // Q^2 vanishes only up to the Gauss constraints; that relation is carried by the model
      auto v = check_n2(m, s);
      out.push_back(std::move(v[2]));
      out.push_back(std::move(v[3]));
      break;
    }
    case Algebra::N2:
    case Algebra::Exploratory:
      if (!m.supercharges.empty()) {
        auto v = check_n2(m, s);
        if (m.algebra == Algebra::Exploratory)
          for (auto& r : v) {
            r.expect = Expect::Exploratory;
            r.verdict = Verdict::Exploratory;
          }
        add(std::move(v));
      }
      break;
    case Algebra::N4:
    case Algebra::N8:
      if (m.has_op("F+") && m.has_op("S")) {
        add(check_theorem1(m, s, o.kahler));
        if (o.kahler) add(check_extended(m, s));
      } else {
        add(check_extended(m, s));
      }
      if (m.has_op("F1+")) add(check_theorem2(m, s));
      break;
    case Algebra::Central: break;
  }
  if (o.relations) add(check_relations(m, s));
  if (o.replay) out.push_back(check_replay(m, s));
  return out;
}

nlohmann::ordered_json to_json(const CheckReport& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["operands"] = r.operands;
  j["expect"] = to_string(r.expect);
  j["verdict"] = to_string(r.verdict);
  j["residual"] = r.residual.max_abs;
  j["scale"] = r.residual.scale;
  j["tol"] = r.tol;
  j["argmax"] = r.residual.argmax_point;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

nlohmann::ordered_json report_json(const std::string& scenario, const Model& m, const SampleSpec& s,
                                   const std::vector<CheckReport>& checks, bool fail_on_gray) {
  nlohmann::ordered_json j;
  j["scenario"] = scenario;
  j["model"] = m.name;
  j["algebra"] = to_string(m.algebra);
  j["coords"] = m.coords;
  j["hilbert_dim"] = m.rep.dim();
  j["recipe"] = m.recipe;
  nlohmann::ordered_json samp;
  samp["points"] = s.n_points;
  samp["seed"] = s.seed;
  nlohmann::ordered_json box = nlohmann::ordered_json::array();
  for (const auto& [lo, hi] : s.box) box.push_back({lo, hi});
  samp["box"] = box;
  nlohmann::ordered_json ex = nlohmann::ordered_json::array();
  for (const auto& e : s.exclusions) ex.push_back(e.text);
  samp["exclusions"] = ex;
  j["sampling"] = samp;
  j["fail_on_gray"] = fail_on_gray;
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  int counts[5] = {0, 0, 0, 0, 0};
  for (const auto& r : checks) {
    arr.push_back(to_json(r));
    counts[static_cast<int>(r.verdict)]++;
  }
  j["checks"] = arr;
  nlohmann::ordered_json sum;
  for (int v = 0; v < 5; ++v) sum[to_string(static_cast<Verdict>(v))] = counts[v];
  sum["ok"] = all_ok(checks, fail_on_gray);
  j["summary"] = sum;
  return j;
}

}  // namespace sqm

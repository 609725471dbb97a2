// One line per acceptance criterion; exit status is the number of failures.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <algorithm>

#include "fd_oracle.hpp"
#include "sqm/scenario.hpp"

using namespace sqm;

namespace {

SampleSpec box(std::size_t n, int points = 20, double lo = -1, double hi = 1) {
  SampleSpec s;
  s.box.assign(n, {lo, hi});
  s.n_points = points;
  return s;
}

const CheckReport* find(const std::vector<CheckReport>& rs, const std::string& name) {
  for (const auto& r : rs)
    if (r.name == name) return &r;
  return nullptr;
}

struct Tally {
  std::string why;
  bool ok = true;
  void need(bool cond, const std::string& what) {
    if (!cond && ok) why = what;
    ok = ok && cond;
  }
  void all(const std::vector<CheckReport>& rs, const std::string& where) {
    need(!rs.empty(), where + ": no checks");
    for (const auto& r : rs)
      if (!r.ok()) {
        char b[160];
        std::snprintf(b, sizeof b, "%s: '%s' %s (residual %.3g)", where.c_str(), r.name.c_str(), to_string(r.verdict),
                      r.residual.max_abs);
        need(false, b);
      }
  }
  // named check present, judged ok, and absolute residual below `below`
  void named(const std::vector<CheckReport>& rs, const std::string& name, double below = 1e300) {
    const CheckReport* r = find(rs, name);
    need(r != nullptr, "missing check '" + name + "'");
    if (!r) return;
    need(r->ok(), "'" + name + "' " + to_string(r->verdict));
    char b[160];
    std::snprintf(b, sizeof b, "'%s' residual %.3g >= %.3g", name.c_str(), r->residual.max_abs, below);
    need(r->residual.max_abs < below, b);
  }
};

Field grid(const std::vector<std::string>& c, std::size_t n, const std::vector<const char*>& e) {
  std::vector<Expr> x;
  for (const char* t : e) x.push_back(parse(t, c));
  return Field::grid(static_cast<int>(n), static_cast<int>(n), x);
}

Mat pair_structure() {
  Mat I = Mat::Zero(4, 4);
  I(0, 1) = I(2, 3) = 1;
  I(1, 0) = I(3, 2) = -1;
  return I;
}

std::vector<std::string> scenario_files() {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(SQM_SCENARIOS))
    if (e.path().extension() == ".yaml") out.push_back(e.path().string());
  std::sort(out.begin(), out.end());
  return out;
}

Tally c1() {
  Tally t;
  Model m = witten(parse("x^3 - x", {"x"}));
  auto rs = verify_model(m, box(1, 20, -2, 2));
  t.all(rs, "witten");
  t.named(rs, "Q^2 = 0");
  t.named(rs, "Qbar^2 = 0");
  t.named(rs, "{Q, Qbar} = 2H");
  t.named(rs, "Q = Q_direct", 1e-10);
  return t;
}

Tally c2() {
  Tally t;
  Model m = free_complex(2);
  auto rs = verify_model(m, box(4));
  t.all(rs, "free_complex");
  t.need(m.has_op("S") && m.has_op("Sbar"), "no S pair");
  t.named(rs, "{S, Sbar} = 2H");
  t.named(rs, "{Q, Sbar} = 0");
  return t;
}

Tally c3() {
  Tally t;
  auto c = complex_coords(2);
  Field om = grid(c, 2, {"0.3*x1*y2", "0.2*x2 + 0.1*i*y1", "0.1*y1*y1", "-0.2*x1 + 0.1*y2"});
  t.all(verify_model(dolbeault(om, 2), box(4)), "dolbeault");
  t.all(check_n2(dolbeault(om, 2, parse("x1^3 - 2*x1*y2 + y1^2*x2", c)), box(4)), "dolbeault twisted");
  return t;
}

Tally c4() {
  Tally t;
  auto c2 = real_coords(2);
  Model d2 = de_rham(grid(c2, 2, {"0.3*x1*x2", "0.2*sin(x2)", "0.2*sin(x2)", "-0.2*x1"}), 2);
  auto r2 = verify_model(d2, box(2));
  t.all(r2, "de_rham D=2");
  t.named(r2, "Q_similarity = Q_spin", 1e-9);
  auto c4 = real_coords(4);
  Field om = grid(c4, 4,
                  {"0.2*x1*x2", "0.1*sin(x3)", "0", "0.05*x2",  //
                   "0.1*sin(x3)", "-0.15*x4", "0.05*x1*x4", "0",  //
                   "0", "0.05*x1*x4", "0.1*x2^2", "0.1*cos(x1)",  //
                   "0.05*x2", "0", "0.1*cos(x1)", "0.2*x3"});
  Model d4 = de_rham(om, 4);
  auto r4 = verify_model(d4, box(4));
  t.all(r4, "de_rham D=4");
  t.named(r4, "Q_similarity = Q_spin", 1e-9);
  t.named(r4, "{Q, Qbar} = 2H");
  return t;
}

Tally c5() {
  Tally t;
  auto c = real_coords(2);
  Model q = quasicomplex(grid(c, 2, {"0.3*x1*x2", "0.2*x2 + 0.1*i*x1", "0.2*x2 - 0.1*i*x1", "-0.2*x1"}), 2);
  auto rs = verify_model(q, box(2));
  t.all(rs, "quasicomplex");
  t.named(rs, "reduce(adjoint_deth(Q_dolbeault)) = adjoint_reduced_deth(Q_reduced)", 1e-9);
  t.named(rs, "Q = Q_reduced", 1e-9);
  return t;
}

Tally c6() {
  Tally t;
  auto c = real_coords(4);
  Expr u = parse("0.3*sin(x1) + 0.2*x1*x2", c);
  std::vector<Expr> om(16, Expr(0.0));
  om[0] = -u;
  om[5] = -u;
  Model k = kahler(warped_kahler(u, c), pair_structure(), "kahler", Field::grid(4, 4, om));
  auto s = box(4);
  t.all(check_theorem1(k, s), "F+, F- relations");
  t.all(check_extended(k, s), "N=4");
  Model nk = kahler(warped_kahler(parse("0.3*sin(x1) + 0.5*x3*x2", c), c), pair_structure());
  auto rs = check_theorem1(nk, s, false);
  const CheckReport* r = find(rs, "{Q, Sbar} = 0");
  t.need(r && r->verdict == Verdict::ViolatedAsExpected && r->residual.max_abs >= 1e-3, "non-Kahler {Q, Sbar} not violated");
  return t;
}

Tally c7() {
  Tally t;
  SampleSpec s = box(4, 20);
  s.box[2] = {0.5, 1.5};
  auto gh = gibbons_hawking({{0.0, 0.0, 0.0}}, {0.5}, 1.0, s);
  t.need(gh.orientation != "none", "no covariantly constant triple");
  const bool bar = gh.orientation == "eta_bar";
  Model m = hyperkahler(gh.geometry, {canonical_structure(0, bar, 4), canonical_structure(1, bar, 4), canonical_structure(2, bar, 4)},
                        "gibbons_hawking");
  auto rs = verify_model(m, s);
  t.all(rs, "gibbons_hawking");
  t.named(rs, "I^a I^b = -delta + eps I^c");
  t.named(rs, "D_P I_MN = 0");
  t.named(rs, "[S1, F2+] = delta Qbar + eps Sbar");
  t.named(rs, "{S3, Sbar3} = 2H");
  auto flat = from_omega(Field::zero(4, 4), OmegaKind::RealSymmetric, real_coords(4));
  Model f = hyperkahler(flat, {canonical_structure(0, false, 4), canonical_structure(1, false, 4), canonical_structure(2, false, 4)});
  t.all(verify_model(f, box(4)), "flat");
  return t;
}

Tally c8() {
  Tally t;
  Model m = hkt_conformal(parse("0.2*x1^2 + 0.1*y1*x2 - 0.15*y2^2 + 0.05*x1*y2", complex_coords(2)));
  auto rs = verify_model(m, box(4));
  t.all(rs, "hkt");
  t.named(rs, "{S, Sbar} = 2H");
  t.named(rs, "Q = Q_direct", 1e-10);
  t.named(rs, "S = S_direct", 1e-10);
  return t;
}

Tally c9() {
  Tally t;
  Model m = okt_flat();
  t.need(m.hermitian.size() == 8, "expected 8 Hermitian supercharges");
  auto s = box(8);
  t.all(check_extended(m, s), "okt");
  auto g = m.geometry_checks(s, Expect::Holds);
  const CheckReport* r = find(g, "no Gamma triple is quaternionic");
  t.need(r && r->verdict == Verdict::ViolatedAsExpected && r->residual.max_abs >= 0.5, "a Gamma triple is quaternionic");
  return t;
}

Tally c10() {
  Tally t;
  auto rs = verify_model(instanton(1.0), box(4));
  t.all(rs, "instanton");
  for (const char* n : {"[L1, Q1] = 0", "[L2, Q2] = 0", "[L3, Q1] = 0", "[L1, L2] = 2i eps L3", "[L2, L3] = 2i eps L1"}) t.named(rs, n);
  return t;
}

Tally c11() {
  Tally t;
  Model m = gauge_sym3();
  auto rs = verify_model(m, box(m.coords.size()));
  t.all(rs, "sym3");
  const CheckReport* r = find(rs, "Q^2 = A^a_- G^a");
  t.need(r && r->residual.max_abs <= 1e-12 * (1 + r->residual.scale), "Q^2 - A G not zero");
  for (const char* n : {"[G1, H] = 0", "[G2, H] = 0", "[G3, H] = 0", "[G1, G2] = i eps G3"}) t.named(rs, n);
  return t;
}

Tally c12() {
  Tally t;
  Model m = wz_modes({{{0, 0, 1}}, {{1, 1, 0}}, {{1, -1, 2}}});
  auto rs = verify_model(m, box(m.coords.size(), 20));
  t.all(rs, "wz");
  t.named(rs, "{Q1, Qbar2} = 2(delta H + sigma_j P_j)");
  t.named(rs, "{Qcal_3, Qcalbar_3} = 2 H_3");
  t.named(rs, "Qcal = e^W Qcal0 e^-W", 1e-10);
  return t;
}

// derivatives of every field a scenario touches: its declared fields and
// the coefficients of its supercharges and Hamiltonian
Tally c13() {
  Tally t;
  int fields = 0;
  for (const auto& path : scenario_files()) {
    Scenario sc = load_scenario(path);
    const auto name = std::filesystem::path(path).stem().string();
    // floor(p): size of the operator the field belongs to, or 0 for a lone field
    auto check = [&](const Field& f, const std::vector<std::vector<double>>& pts, const std::string& what,
                     const std::function<double(const std::vector<double>&)>& floor) {
      ++fields;
      for (const auto& p : pts) {
        auto fn = [&](const std::vector<double>& q, int k) {
          FieldEvaluator ev(q);
          return ev.eval(f, k);
        };
        double w = testing::compare_fd(fn, p, 1e-5, true, std::max(1e-12, floor(p))).worst_rel;
        char b[200];
        std::snprintf(b, sizeof b, "%s %s: relative error %.3g", name.c_str(), what.c_str(), w);
        t.need(w < 1e-6, b);
      }
    };
    std::vector<std::vector<double>> model_pts = sample_points(sc.samples);
    model_pts.resize(std::min<std::size_t>(model_pts.size(), 3));
    SampleSpec fs = sc.samples;
    if (fs.box.size() != sc.coords.size()) fs = box(sc.coords.size(), 3);
    auto field_pts = sample_points(fs);
    field_pts.resize(std::min<std::size_t>(field_pts.size(), 3));
    for (const auto& [n, f] : sc.fields) check(f, field_pts, "field " + n, [](const std::vector<double>&) { return 0.0; });
    std::vector<std::string> ops;
    for (const auto& [q, qb] : sc.model.supercharges) ops.push_back(q.name), ops.push_back(qb.name);
    for (const auto& h : sc.model.hermitian) ops.push_back(h.name);
    ops.push_back("H");
    for (const auto& o : ops) {
      const DiffOp& op = sc.model.op(o);
      auto size = [&](const std::vector<double>& p) {
        double s = 0;
        for (const auto& [alpha, F] : op.terms()) s = std::max(s, value(F, p).cwiseAbs().maxCoeff());
        return s;
      };
      for (const auto& [alpha, F] : op.terms()) {
        if (F.mask() == 0) continue;
        check(F, model_pts, o + " coefficient", size);
      }
    }
  }
  t.need(fields > 0, "no fields checked");
  return t;
}

Tally c14() {
  Tally t;
  for (const auto& path : scenario_files()) {
    Scenario sc = load_scenario(path);
    std::string a = run_scenario(sc).report.dump(2);
    std::string b = run_scenario(load_scenario(path)).report.dump(2);
    t.need(a == b, path + ": reports differ");
  }
  return t;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Tally()>>> criteria{
      {"witten W = x^3 - x: N=2 and similarity Q = direct Q", c1},
      {"free complex d=2: N=2 and N=4 with the S pair", c2},
      {"dolbeault d=2 nondiagonal omega, and twisted by W", c3},
      {"de rham D=2, D=4: similarity Q = spin-connection Q", c4},
      {"rhombus: reduction and similarity commute", c5},
      {"Kahler F+, F- relations; non-Kahler breaks {Q, Sbar}", c6},
      {"hyper-Kahler relations on Gibbons-Hawking and flat space", c7},
      {"HKT conformally flat: N=4, direct = similarity", c8},
      {"OKT flat D=8: N=8, no quaternionic Gamma triple", c9},
      {"instanton rho=1: N=4, su(2) symmetry", c10},
      {"SYM3: Q^2 = A G, gauge invariance, su(2)", c11},
      {"WZ three modes: central charges and per-mode algebra", c12},
      {"autodiff matches central differences in every scenario", c13},
      {"same seed, byte-identical reports", c14},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    auto t0 = std::chrono::steady_clock::now();
    Tally t;
    try {
      t = criteria[i].second();
    } catch (const std::exception& e) {
      t.ok = false;
      t.why = std::string("threw: ") + e.what();
    }
    double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s  %2zu  %-58s %6.2fs%s%s\n", t.ok ? "PASS" : "FAIL", i + 1, criteria[i].first, dt,
                t.ok ? "" : "  ", t.why.c_str());
    std::fflush(stdout);
    failed += !t.ok;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed;
}

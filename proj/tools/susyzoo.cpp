// susyzoo: run scenarios, list the model catalog, print operators.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "sqm/printer.hpp"
#include "sqm/scenario.hpp"

using namespace sqm;

namespace {

std::string point_text(const std::vector<std::string>& coords, const std::vector<double>& p) {
  std::string s = "(";
  for (std::size_t i = 0; i < p.size(); ++i) {
    char b[64];
    std::snprintf(b, sizeof b, "%s%s=%.17g", i ? ", " : "", i < coords.size() ? coords[i].c_str() : "?", p[i]);
    s += b;
  }
  return s + ")";
}

// runs f; input problems exit 2 with a message
template <class F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const ScenarioError& e) {
    std::cerr << "error: " << e.what() << "\n";
  } catch (const PointError& e) {
    std::cerr << "error: " << e.what() << " at point " << point_text({}, e.point) << "\n";
  } catch (const SamplingError& e) {
    std::cerr << "error: sampling: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return 2;
}

int cmd_run(const std::string& path, const RunOptions& o, const std::string& report, bool quiet) {
  Scenario sc = load_scenario(path);
  RunResult r;
  try {
    r = run_scenario(sc, o);
  } catch (const PointError& e) {
    std::cerr << "error: " << path << ": " << e.what() << " at point " << point_text(sc.model.coords, e.point) << "\n";
    return 2;
  }
  if (!quiet) {
    std::printf("%s: model %s (%s), %zu coordinates, dim %d\n", sc.name.c_str(), sc.model.name.c_str(),
                to_string(sc.model.algebra), sc.model.coords.size(), sc.model.rep.dim());
    for (const auto& c : r.checks) {
      std::printf("  %-20s %-55s residual %.3g (scale %.3g)", to_string(c.verdict), c.name.c_str(), c.residual.max_abs,
                  c.residual.scale);
      if (!c.ok(o.fail_on_gray) && !c.residual.argmax_point.empty())
        std::printf(" at %s", point_text(sc.model.coords, c.residual.argmax_point).c_str());
      std::printf("\n");
      if (!c.note.empty()) std::printf("  %-20s   note: %s\n", "", c.note.c_str());
    }
    std::printf("%s", r.ok ? "OK" : "FAILED");
    for (const auto& [k, v] : r.report["summary"].items())
      if (v.is_number_integer() && v.get<int>() > 0) std::printf("  %s %d", k.c_str(), v.get<int>());
    std::printf("\n");
  }
  if (!report.empty()) {
    std::string text = r.report.dump(2) + "\n";
    if (report == "-") {
      std::cout << text;
    } else {
      std::ofstream out(report);
      if (!out) throw std::runtime_error("cannot write report " + report);
      out << text;
    }
  }
  return r.ok ? 0 : 1;
}

int cmd_list() {
  std::printf("%-22s %-12s %-48s %s\n", "constructor", "algebra", "parameters", "description");
  for (const auto& e : catalog())
    std::printf("%-22s %-12s %-48s %s\n", e.name.c_str(), to_string(e.algebra), e.parameters.c_str(), e.anchor.c_str());
  return 0;
}

int cmd_show(const std::string& path, const std::string& op) {
  Scenario sc = load_scenario(path);
  const Model& m = sc.model;
  if (op.empty() || !m.has_op(op)) {
    if (!op.empty()) std::cerr << "model " << m.name << " has no operator '" << op << "'\n";
    std::printf("operators of %s:", m.name.c_str());
    for (const auto& n : m.op_names()) std::printf(" %s", n.c_str());
    std::printf("\n");
    return op.empty() ? 0 : 2;
  }
  std::optional<std::vector<double>> point;
  try {
    point = sample_points(sc.samples).front();
  } catch (const std::exception&) {
  }
  std::printf("%s: %s\n", m.name.c_str(), op.c_str());
  auto names = m.op_names();
  auto f = m.formulas.find(op);
  if (f != m.formulas.end()) std::printf("  formula: %s\n", f->second.c_str());
  for (const auto& [k, v] : m.formulas)
    if (k != op && std::find(names.begin(), names.end(), k) == names.end()) std::printf("  %s: %s\n", k.c_str(), v.c_str());
  std::printf("%s =\n%s", op.c_str(), pretty(m.op(op), m.rep, point).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"susyzoo: supersymmetric quantum mechanics models and their algebras"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run the checks of a scenario; exit 0 iff all pass");
  std::string path, report;
  RunOptions ro;
  std::uint64_t seed = 0;
  int points = 0;
  double tol = 0;
  bool quiet = false;
  run->add_option("scenario", path, "scenario file")->required()->check(CLI::ExistingFile);
  auto* seed_opt = run->add_option("--seed", seed, "sampling seed");
  auto* points_opt = run->add_option("--points", points, "sample points")->check(CLI::PositiveNumber);
  auto* tol_opt = run->add_option("--tol", tol, "pass tolerance")->check(CLI::PositiveNumber);
  run->add_option("--report", report, "write the JSON report here ('-' for stdout)");
  run->add_option("--fail-on-gray", ro.fail_on_gray, "gray-zone residuals fail (true/false)")->default_val(true);
  run->add_flag("-q,--quiet", quiet, "no per-check lines");

  app.add_subcommand("list-models", "list model constructors");

  auto* show = app.add_subcommand("show-op", "print an operator of a scenario's model");
  std::string show_path, op;
  show->add_option("scenario", show_path, "scenario file")->required()->check(CLI::ExistingFile);
  show->add_option("op", op, "operator name (omit to list them)");

  CLI11_PARSE(app, argc, argv);

  if (*run) {
    if (*seed_opt) ro.seed = seed;
    if (*points_opt) ro.points = points;
    if (*tol_opt) ro.tol = tol;
    return guarded([&] { return cmd_run(path, ro, report, quiet); });
  }
  if (app.got_subcommand("list-models")) return cmd_list();
  return guarded([&] { return cmd_show(show_path, op); });
}

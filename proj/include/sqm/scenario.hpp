#pragma once

// YAML scenarios: coordinates, fields, a model constructor call and the
// checks to run. Format in docs/scenario.md.

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sqm/verify.hpp"

namespace sqm {

/// Bad scenario input; the message carries file:line:col.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(const std::string& file, int line, int col, const std::string& msg)
      : std::runtime_error(file + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
        line(line), col(col) {}
  int line, col;
};

struct CheckSpec {
  enum class Kind { Suite, Relation, Identity };
  Kind kind = Kind::Suite;
  std::string text;  // suite name, relation name, or "lhs = rhs"
  std::optional<Expect> expect;
  std::optional<double> tol;
  int line = 0, col = 0;
};

struct Scenario {
  std::string path;
  std::string name;
  std::string description;
  std::string constructor;
  std::vector<std::string> coords;
  std::map<std::string, Field> fields;  // every declared field, parsed over coords
  SampleSpec samples;
  Model model;
  VerifyOptions options;
  std::vector<CheckSpec> checks;
  std::optional<double> tolerance;
};

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<int> points;
  std::optional<double> tol;
  bool fail_on_gray = true;
};

struct RunResult {
  std::vector<CheckReport> checks;
  nlohmann::ordered_json report;
  bool ok = false;
};

Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& text, const std::string& path = "<string>");
RunResult run_scenario(const Scenario& sc, const RunOptions& o = {});

/// Operator expression over a model's operators: names, numbers, i, + - *,
/// [A, B], {A, B}, dagger(A) (flat) and adj(A) (model measure).
DiffOp eval_op_expression(const std::string& text, const Model& m);

/// Coordinate names a constructor call will use.
std::vector<std::string> constructor_coords(const std::string& constructor, int dim);

}  // namespace sqm

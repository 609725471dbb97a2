#pragma once

#include <string>
#include <vector>

#include "sqm/sampling.hpp"

namespace sqm {

enum class Expect { Holds, Violated, Exploratory };
enum class Verdict { Pass, Fail, Gray, ViolatedAsExpected, Exploratory };

const char* to_string(Verdict v);
const char* to_string(Expect e);

struct CheckReport {
  std::string name;
  std::vector<std::string> operands;
  Residual residual;
  double tol = kPassTol;
  Expect expect = Expect::Holds;
  Verdict verdict = Verdict::Pass;
  std::string note;

  /// Gray results count as failures unless the caller relaxes that.
  bool ok(bool fail_on_gray = true) const;
};

/// Thresholds: pass at tol*(1+scale), violated at kViolatedTol*(1+scale);
/// anything in between is gray.
Verdict judge(const Residual& r, Expect e, double tol = kPassTol);

CheckReport make_report(std::string name, std::vector<std::string> operands, const Residual& r,
                        Expect e = Expect::Holds, double tol = kPassTol);

/// Relation "op == 0" at the sample points.
CheckReport check_zero(std::string name, std::vector<std::string> operands, const DiffOp& op, const SampleSpec& s,
                       Expect e = Expect::Holds, double tol = kPassTol);
/// Relation "every field == 0" at the sample points.
CheckReport check_fields_zero(std::string name, std::vector<std::string> operands, const std::vector<Field>& fs,
                              const SampleSpec& s, Expect e = Expect::Holds, double tol = kPassTol);

bool all_ok(const std::vector<CheckReport>& rs, bool fail_on_gray = true);

}  // namespace sqm

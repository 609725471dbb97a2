#include "sqm/report.hpp"

namespace sqm {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Gray: return "gray";
    case Verdict::ViolatedAsExpected: return "violated-as-expected";
    case Verdict::Exploratory: return "exploratory";
  }
  return "?";
}

const char* to_string(Expect e) {
  switch (e) {
    case Expect::Holds: return "holds";
    case Expect::Violated: return "violated";
    case Expect::Exploratory: return "exploratory";
  }
  return "?";
}

bool CheckReport::ok(bool fail_on_gray) const {
  switch (verdict) {
    case Verdict::Pass:
    case Verdict::ViolatedAsExpected:
    case Verdict::Exploratory: return true;
    case Verdict::Gray: return !fail_on_gray;
    case Verdict::Fail: return false;
  }
  return false;
}

Verdict judge(const Residual& r, Expect e, double tol) {
  if (e == Expect::Exploratory) return Verdict::Exploratory;
  const bool small = within(r, tol);
  const bool big = r.max_abs >= kViolatedTol * (1 + r.scale);
  if (e == Expect::Holds) return small ? Verdict::Pass : big ? Verdict::Fail : Verdict::Gray;
  return big ? Verdict::ViolatedAsExpected : small ? Verdict::Fail : Verdict::Gray;
}

CheckReport make_report(std::string name, std::vector<std::string> operands, const Residual& r, Expect e, double tol) {
  CheckReport c;
  c.name = std::move(name);
  c.operands = std::move(operands);
  c.residual = r;
  c.tol = tol;
  c.expect = e;
  c.verdict = judge(r, e, tol);
  return c;
}

CheckReport check_zero(std::string name, std::vector<std::string> operands, const DiffOp& op, const SampleSpec& s,
                       Expect e, double tol) {
  return make_report(std::move(name), std::move(operands), residual(op, sample_points(s)), e, tol);
}

CheckReport check_fields_zero(std::string name, std::vector<std::string> operands, const std::vector<Field>& fs,
                              const SampleSpec& s, Expect e, double tol) {
  return make_report(std::move(name), std::move(operands), field_residual(fs, sample_points(s)), e, tol);
}

bool all_ok(const std::vector<CheckReport>& rs, bool fail_on_gray) {
  for (const auto& r : rs)
    if (!r.ok(fail_on_gray)) return false;
  return true;
}

}  // namespace sqm

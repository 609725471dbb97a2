#pragma once

// Algebra checks on models, and the JSON report.

#include <string>
#include <vector>

#include <json.hpp>

#include "sqm/zoo.hpp"

namespace sqm {

/// Q^2, Qbar^2, {Q,Qbar} - 2H, and H symmetric under the model measure, for pair `i`.
std::vector<CheckReport> check_n2(const Model& m, const SampleSpec& s, std::size_t i = 0);
/// Every pair of supercharges: {Q_i, Qbar_j} = 2 delta_ij H, {Q_i, Q_j} = 0,
/// {Qbar_i, Qbar_j} = 0; Hermitian ones: {Q_i, Q_j} = 2 delta_ij H.
std::vector<CheckReport> check_extended(const Model& m, const SampleSpec& s);
/// The relations the model carries (direct vs similarity forms, central charges, constraints).
std::vector<CheckReport> check_relations(const Model& m, const SampleSpec& s);
/// Commutators with F+, F-: needs Q, Qbar, S, Sbar, F+, F-, F0. With
/// kahler = false the complex structure is not expected to be covariantly
/// constant: {Q, Sbar} is expected to be violated, the rest is exploratory.
std::vector<CheckReport> check_theorem1(const Model& m, const SampleSpec& s, bool kahler = true);
/// Hyper-Kahler relations [S^a, F^b_+] = delta Qbar + eps S^c-bar and friends.
std::vector<CheckReport> check_theorem2(const Model& m, const SampleSpec& s);
/// Rebuilds the model from its recipe and compares every operator exactly.
CheckReport check_replay(const Model& m, const SampleSpec& s);

/// [a,[b,c]] + [b,[c,a]] + [c,[a,b]]
DiffOp jacobi(const DiffOp& a, const DiffOp& b, const DiffOp& c);

/// The constant c in [F+, F-] = F0 - c, read off in flat space.
cplx flat_f_constant(const Model& m);

struct VerifyOptions {
  bool kahler = true;     // complex structures covariantly constant
  bool relations = true;
  bool geometry = true;
  bool replay = true;
};

/// Everything that applies to the model's algebra.
std::vector<CheckReport> verify_model(const Model& m, const SampleSpec& s, const VerifyOptions& o = {});

nlohmann::ordered_json to_json(const CheckReport& r);
nlohmann::ordered_json report_json(const std::string& scenario, const Model& m, const SampleSpec& s,
                                   const std::vector<CheckReport>& checks, bool fail_on_gray = true);

}  // namespace sqm

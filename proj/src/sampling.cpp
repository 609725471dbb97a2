#include "sqm/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sqm {

std::vector<std::vector<double>> sample_points(const SampleSpec& s) {
  if (s.n_points < 1) throw SamplingError("n_points must be >= 1");
  if (s.box.empty()) return std::vector<std::vector<double>>(static_cast<std::size_t>(s.n_points));
  for (const auto& [lo, hi] : s.box)
    if (!(lo <= hi)) throw SamplingError("empty sample interval");
  std::mt19937_64 rng(s.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> pts;
  const long budget = 1000L * s.n_points;
  for (long tries = 0; static_cast<int>(pts.size()) < s.n_points; ++tries) {
    if (tries >= budget) throw SamplingError("all samples excluded: box is empty after exclusions");
    std::vector<double> p;
    for (const auto& [lo, hi] : s.box) p.push_back(lo + (hi - lo) * u(rng));
    bool ok = true;
    for (const auto& ex : s.exclusions) {
      cplx v = evaluate(ex.expr, p);
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) ok = false;
      else if (ex.kind == Exclusion::Kind::Nonzero) ok = std::abs(v) > ex.margin;
      else ok = v.real() > ex.margin;
      if (!ok) break;
    }
    if (ok) pts.push_back(std::move(p));
  }
  return pts;
}

namespace {

struct PointResult {
  double max_abs = 0;
  double scale = 0;
};

double max_entry(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

// One point: every field through a shared evaluator.
PointResult eval_point(const std::vector<Field>& fields, const std::vector<double>& x) {
  FieldEvaluator ev(x);
  std::vector<std::pair<Field, int>> roots;
  for (const Field& f : fields) roots.emplace_back(f, 0);
  ev.plan(roots);
  PointResult r;
  for (const auto& [f, k] : roots) {
    const Mat v = ev.eval(f, 0).value();
    if (!v.allFinite()) throw SingularPoint("non-finite coefficient", x);
    r.max_abs = std::max(r.max_abs, max_entry(v));
    double s = max_entry(v);
    const FieldNode& n = f.node();
    if (n.op == FieldOp::Sum)
      for (std::size_t i = 0; i < n.kids.size(); ++i)
        if (const MatJet* j = ev.cached(n.kids[i].get())) s = std::max(s, std::abs(n.weights[i]) * max_entry(j->value()));
    r.scale = std::max(r.scale, s);
  }
  return r;
}

Residual reduce(const std::vector<PointResult>& per, const std::vector<std::vector<double>>& points) {
  Residual res;
  std::size_t best = 0;
  for (std::size_t i = 0; i < per.size(); ++i) {
    if (per[i].max_abs > per[best].max_abs) best = i;
    res.scale = std::max(res.scale, per[i].scale);
  }
  if (!per.empty()) {
    res.max_abs = per[best].max_abs;
    res.argmax_point = points[best];
  }
  return res;
}

std::vector<Field> coefficients(const std::vector<const DiffOp*>& ops) {
  std::vector<Field> fs;
  for (const DiffOp* op : ops)
    for (const auto& [a, c] : op->terms()) fs.push_back(c);
  return fs;
}

}  // namespace

Residual field_residual_serial(const std::vector<Field>& fields, const std::vector<std::vector<double>>& points) {
  std::vector<PointResult> per(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    try {
      per[i] = eval_point(fields, points[i]);
    } catch (const std::exception& e) {
      throw PointError(e.what(), points[i]);
    }
  }
  return reduce(per, points);
}

Residual field_residual(const std::vector<Field>& fields, const std::vector<std::vector<double>>& points) {
  const long n = static_cast<long>(points.size());
  std::vector<PointResult> per(points.size());
  std::vector<std::string> errors(points.size());
  std::vector<char> failed(points.size(), 0);
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    try {
      per[u] = eval_point(fields, points[u]);
    } catch (const std::exception& e) {
      failed[u] = 1;
      errors[u] = e.what();
    }
  }
  for (std::size_t i = 0; i < points.size(); ++i)
    if (failed[i]) throw PointError(errors[i], points[i]);
  return reduce(per, points);
}

Residual residual(const std::vector<const DiffOp*>& ops, const std::vector<std::vector<double>>& points) {
  return field_residual(coefficients(ops), points);
}

Residual residual_serial(const std::vector<const DiffOp*>& ops, const std::vector<std::vector<double>>& points) {
  return field_residual_serial(coefficients(ops), points);
}

std::pair<bool, Residual> is_zero(const DiffOp& a, const SampleSpec& s, double tol) {
  Residual r = residual(a, sample_points(s));
  return {within(r, tol), r};
}

}  // namespace sqm

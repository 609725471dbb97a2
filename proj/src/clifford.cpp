#include "sqm/clifford.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace sqm {

namespace {

Mat kron(const Mat& a, const Mat& b) {
  Mat r(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return r;
}

Mat single_psi() {
  Mat m = Mat::Zero(2, 2);
  m(1, 0) = 1;
  return m;
}

Mat z_matrix() {
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = 1;
  m(1, 1) = -1;
  return m;
}

// Z (x) ... (x) Z (x) op (x) 1 ... with op at position `slot` of `n`.
Mat string_op(int n, int slot, const Mat& op) {
  Mat r = Mat::Identity(1, 1);
  for (int i = 0; i < n; ++i) {
    if (i < slot) r = kron(r, z_matrix());
    else if (i == slot) r = kron(r, op);
    else r = kron(r, Mat::Identity(2, 2));
  }
  return r;
}

}  // namespace

Mat FermionRep::parity() const {
  Mat z = Mat::Identity(1, 1);
  const int n = kind == Kind::Complex ? modes : modes / 2;
  for (int i = 0; i < n; ++i) z = kron(z, z_matrix());
  return fock(z);
}

Mat FermionRep::color(const Mat& t) const { return kron(Mat::Identity(fock_dim, fock_dim), t); }

Mat FermionRep::fock(const Mat& m) const {
  if (color_dim == 1) return m;
  return kron(m, Mat::Identity(color_dim, color_dim));
}

FermionRep complex_fermions(int d, int color_dim) {
  if (d < 1 || d > 12) throw std::invalid_argument("complex_fermions: 1 <= d <= 12 required");
  if (color_dim < 1) throw std::invalid_argument("complex_fermions: color_dim >= 1 required");
  if ((1 << d) * color_dim > 4096) throw std::invalid_argument("complex_fermions: dimension cap 4096 exceeded");
  FermionRep r;
  r.kind = FermionRep::Kind::Complex;
  r.modes = d;
  r.fock_dim = 1 << d;
  r.color_dim = color_dim;
  for (int a = 0; a < d; ++a) {
    Mat p = r.fock(string_op(d, a, single_psi()));
    r.psibar.push_back(p.adjoint());
    r.psi.push_back(std::move(p));
  }
  return r;
}

FermionRep hermitian_fermions(int D, int color_dim) {
  if (D < 2 || D % 2 != 0) throw std::invalid_argument("hermitian_fermions: even D required");
  if (D > 16) throw std::invalid_argument("hermitian_fermions: D <= 16 required");
  FermionRep r;
  r.kind = FermionRep::Kind::Hermitian;
  r.modes = D;
  r.fock_dim = 1 << (D / 2);
  r.color_dim = color_dim;
  const double s = 1.0 / std::sqrt(2.0);
  for (int k = 0; k < D / 2; ++k) {
    r.psi.push_back(s * r.fock(string_op(D / 2, k, pauli(1))));
    r.psi.push_back(s * r.fock(string_op(D / 2, k, pauli(2))));
  }
  return r;
}

FermionRep realify(const FermionRep& rep) {
  if (rep.kind != FermionRep::Kind::Complex) throw std::invalid_argument("realify: complex representation required");
  FermionRep r;
  r.kind = FermionRep::Kind::Hermitian;
  r.modes = 2 * rep.modes;
  r.fock_dim = rep.fock_dim;
  r.color_dim = rep.color_dim;
  const double s = 1.0 / std::sqrt(2.0);
  const cplx i(0, 1);
  for (int a = 0; a < rep.modes; ++a) {
    r.psi.push_back(s * (rep.psi[static_cast<std::size_t>(a)] + rep.psibar[static_cast<std::size_t>(a)]));
    r.psi.push_back(i * s * (rep.psi[static_cast<std::size_t>(a)] - rep.psibar[static_cast<std::size_t>(a)]));
  }
  return r;
}

std::vector<Mat> bilinear_basis(const FermionRep& rep, Ordering ord) {
  const bool herm = rep.kind == FermionRep::Kind::Hermitian;
  if (herm && ord != Ordering::PsiPsi) throw std::invalid_argument("bilinear: Hermitian fermions only support psi psi");
  const auto& X = (ord == Ordering::PsiPsibar || ord == Ordering::PsiPsi) ? rep.psi : rep.psibar;
  const auto& Y = (ord == Ordering::PsiPsibar || ord == Ordering::PsibarPsibar) ? rep.psibar : rep.psi;
  std::vector<Mat> basis;
  for (const auto& x : X)
    for (const auto& y : Y) basis.push_back(x * y);
  return basis;
}

Field bilinear(const FermionRep& rep, const Field& M, Ordering ord) {
  if (M.rows() != rep.modes || M.cols() != rep.modes) throw ShapeError("bilinear: matrix does not match fermion count");
  return contract(M, bilinear_basis(rep, ord));
}

Mat fermion_number(const FermionRep& rep) {
  if (rep.kind != FermionRep::Kind::Complex) throw std::invalid_argument("fermion number needs complex fermions");
  Mat n = Mat::Zero(rep.dim(), rep.dim());
  for (int a = 0; a < rep.modes; ++a) n += rep.psi[static_cast<std::size_t>(a)] * rep.psibar[static_cast<std::size_t>(a)];
  return n;
}

// ---------------------------------------------------------------------------

double levi_civita(int a, int b, int c) {
  if (a == b || b == c || a == c) return 0;
  // parity of the permutation (a, b, c) of (0, 1, 2)
  int inv = (a > b) + (a > c) + (b > c);
  return inv % 2 == 0 ? 1 : -1;
}

Mat pauli(int j) {
  Mat m = Mat::Zero(2, 2);
  const cplx i(0, 1);
  switch (j) {
    case 0: m(0, 0) = m(1, 1) = 1; break;
    case 1: m(0, 1) = m(1, 0) = 1; break;
    case 2: m(0, 1) = -i; m(1, 0) = i; break;
    case 3: m(0, 0) = 1; m(1, 1) = -1; break;
    default: throw std::invalid_argument("pauli: index 0..3");
  }
  return m;
}

Mat eta_matrix(int a, bool bar) {
  Mat m = Mat::Zero(4, 4);
  for (int b = 0; b < 3; ++b)
    for (int c = 0; c < 3; ++c) m(b, c) = levi_civita(a, b, c);
  const double s = bar ? -1 : 1;
  m(a, 3) = s;
  m(3, a) = -s;
  return m;
}

Mat gamma7_matrix(int a) {
  Mat g = Mat::Zero(8, 8);
  if (a < 3) {
    g.block(0, 0, 4, 4) = -eta_matrix(a, true);
    g.block(4, 4, 4, 4) = eta_matrix(a, true);
  } else if (a < 6) {
    g.block(0, 4, 4, 4) = eta_matrix(a - 3);
    g.block(4, 0, 4, 4) = eta_matrix(a - 3);
  } else if (a == 6) {
    g.block(0, 4, 4, 4) = Mat::Identity(4, 4);
    g.block(4, 0, 4, 4) = -Mat::Identity(4, 4);
  } else {
    throw std::invalid_argument("gamma7: index 0..6");
  }
  return g;
}

Mat sigma_euclid(int mu) {
  if (mu < 0 || mu > 3) throw std::invalid_argument("sigma: index 0..3");
  if (mu == 3) return cplx(0, 1) * pauli(0);
  return pauli(mu + 1);
}

Mat sigma_minkowski(int mu) {
  if (mu < 0 || mu > 3) throw std::invalid_argument("sigma: index 0..3");
  return pauli(mu);
}

cplx ConstTensor::at(std::initializer_list<int> idx) const {
  if (idx.size() != shape.size()) throw std::invalid_argument("tensor rank mismatch");
  std::size_t off = 0;
  std::size_t k = 0;
  for (int i : idx) {
    if (i < 0 || i >= shape[k]) throw std::out_of_range("tensor index");
    off = off * static_cast<std::size_t>(shape[k]) + static_cast<std::size_t>(i);
    ++k;
  }
  return data[off];
}

Mat ConstTensor::slice(int a) const {
  if (shape.size() != 3) throw std::invalid_argument("slice needs a rank-3 tensor");
  Mat m(shape[1], shape[2]);
  for (int i = 0; i < shape[1]; ++i)
    for (int j = 0; j < shape[2]; ++j) m(i, j) = at({a, i, j});
  return m;
}

ConstTensor const_tensor(const std::string& name) {
  ConstTensor t;
  t.name = name;
  auto stack = [&](int count, int n, auto&& mat) {
    t.shape = {count, n, n};
    for (int a = 0; a < count; ++a) {
      Mat m = mat(a);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) t.data.push_back(m(i, j));
    }
  };
  if (name == "epsilon") {
    t.shape = {3, 3, 3};
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c) t.data.emplace_back(levi_civita(a, b, c));
  } else if (name == "eta") {
    stack(3, 4, [](int a) { return eta_matrix(a); });
  } else if (name == "eta_bar") {
    stack(3, 4, [](int a) { return eta_matrix(a, true); });
  } else if (name == "gamma7") {
    stack(7, 8, gamma7_matrix);
  } else if (name == "sigma_euclid") {
    stack(4, 2, sigma_euclid);
  } else if (name == "sigma_minkowski") {
    stack(4, 2, sigma_minkowski);
  } else if (name == "pauli") {
    stack(4, 2, pauli);
  } else {
    throw std::invalid_argument("unknown constant tensor '" + name + "'");
  }
  return t;
}

double quaternion_residual(const Mat& i1, const Mat& i2, const Mat& i3) {
  const Mat* I[3] = {&i1, &i2, &i3};
  const int n = static_cast<int>(i1.rows());
  double worst = 0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      Mat r = (*I[a]) * (*I[b]);
      if (a == b) r += Mat::Identity(n, n);
      for (int c = 0; c < 3; ++c) r -= levi_civita(a, b, c) * (*I[c]);
      worst = std::max(worst, r.cwiseAbs().maxCoeff());
    }
  return worst;
}

double best_quaternion_residual(const Mat& a, const Mat& b, const Mat& c) {
  std::array<const Mat*, 3> m{&a, &b, &c};
  std::array<int, 3> perm{0, 1, 2};
  double best = 1e300;
  do {
    for (int s = 0; s < 8; ++s) {
      Mat x = (s & 1 ? -1.0 : 1.0) * *m[static_cast<std::size_t>(perm[0])];
      Mat y = (s & 2 ? -1.0 : 1.0) * *m[static_cast<std::size_t>(perm[1])];
      Mat z = (s & 4 ? -1.0 : 1.0) * *m[static_cast<std::size_t>(perm[2])];
      best = std::min(best, quaternion_residual(x, y, z));
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace sqm

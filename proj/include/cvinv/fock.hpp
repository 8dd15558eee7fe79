#pragma once

// Truncated Fock-space numerics. Mode 0 is always the slowest tensor index.

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "cvinv/error.hpp"

namespace cvinv {

template <class T>
using CMat = Eigen::Matrix<std::complex<T>, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using CVec = Eigen::Matrix<std::complex<T>, Eigen::Dynamic, 1>;
template <class T>
using RVec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using cplx = std::complex<double>;
using Mat = CMat<double>;
using Vec = CVec<double>;
using RealVec = RVec<double>;

// Data registers use hbar = 1/2 (vacuum ~ exp(-x^2), [X,P] = i/2).
inline constexpr double kHbar = 0.5;
// The two resource registers (step state, photon) use hbar = 1, so that
// |1> ~ y exp(-y^2/2) and the homodyne state has momentum profile exp(-p^2/2D^2).
inline constexpr double kResourceHbar = 1.0;

// psi_0 .. psi_nmax at x, normalized Hermite functions for the given hbar.
// psi^hbar_n(x) = psi^{1/2}_n(x / sqrt(2 hbar)) / (2 hbar)^{1/4}
template <class T>
RVec<T> hermite_all(int nmax, T x, T hbar = T(0.5)) {
  if (nmax < 0) throw Error(ErrorCode::InvalidArgument, "hermite_all: nmax < 0");
  const T s = std::sqrt(2 * hbar);
  const T u = x / s;
  RVec<T> out(nmax + 1);
  out[0] = std::pow(T(2) / std::numbers::pi_v<T>, T(0.25)) * std::exp(-u * u) / std::sqrt(s);
  if (nmax >= 1) out[1] = 2 * u * out[0];
  for (int n = 1; n < nmax; ++n) {
    const T np1 = T(n + 1);
    out[n + 1] = 2 * u / std::sqrt(np1) * out[n] - std::sqrt(T(n) / np1) * out[n - 1];
  }
  return out;
}

template <class T>
T hermite_psi(int n, T x, T hbar = T(0.5)) {
  return hermite_all<T>(n, x, hbar)[n];
}

// Rows n = 0..d-1, columns = grid points.
template <class T>
Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> hermite_table(int d, const RVec<T>& grid,
                                                               T hbar = T(0.5)) {
  Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> tab(d, grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) tab.col(i) = hermite_all<T>(d - 1, grid[i], hbar);
  return tab;
}

template <class T>
CMat<T> annihilation(int d) {
  CMat<T> a = CMat<T>::Zero(d, d);
  for (int n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(T(n));
  return a;
}

template <class T>
CMat<T> number_op(int d) {
  CMat<T> n = CMat<T>::Zero(d, d);
  for (int k = 0; k < d; ++k) n(k, k) = T(k);
  return n;
}

template <class T>
struct Quadratures {
  CMat<T> X, P;
};

// X = sqrt(hbar/2)(a + a^dag), P = -i sqrt(hbar/2)(a - a^dag)
template <class T>
Quadratures<T> quadrature_ops(int d, T hbar = T(0.5)) {
  if (d < 2) throw Error(ErrorCode::InvalidArgument, "quadrature_ops: d < 2");
  const CMat<T> a = annihilation<T>(d);
  const CMat<T> ad = a.adjoint();
  const T c = std::sqrt(hbar / 2);
  return {c * (a + ad), std::complex<T>(0, -c) * (a - ad)};
}

template <class T>
T max_abs(const CMat<T>& M) {
  return M.size() ? M.cwiseAbs().maxCoeff() : T(0);
}

template <class T>
T hermiticity_defect(const CMat<T>& M) {
  return max_abs<T>(CMat<T>(M - M.adjoint()));
}

template <class T>
struct EigenDecomp {
  RVec<T> evals;   // ascending
  CMat<T> evecs;   // columns
};

template <class T>
EigenDecomp<T> eigh(const CMat<T>& M, T tol = T(1e-12)) {
  if (M.rows() != M.cols()) throw Error(ErrorCode::ShapeMismatch, "eigh: matrix not square");
  const T scale = std::max(T(1), max_abs<T>(M));
  const T defect = hermiticity_defect<T>(M);
  if (defect > tol * scale)
    throw Error(ErrorCode::NotHermitian, "eigh: max|M - M^dag| = " + std::to_string(double(defect)));
  // symmetrize so round-off in the input cannot leak into the solver
  const CMat<T> H = (M + M.adjoint()) / T(2);
  Eigen::SelfAdjointEigenSolver<CMat<T>> es(H);
  return {es.eigenvalues(), es.eigenvectors()};
}

// V f(lambda) V^dag
template <class T, class Fn>
CMat<T> spectral_apply(const EigenDecomp<T>& e, Fn&& fn) {
  CVec<T> w(e.evals.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = fn(e.evals[i]);
  return e.evecs * w.asDiagonal() * e.evecs.adjoint();
}

// exp(-i H t)
template <class T>
CMat<T> expm_unitary(const CMat<T>& H, T t) {
  const EigenDecomp<T> e = eigh<T>(H);
  return spectral_apply<T>(e, [t](T l) { return std::exp(std::complex<T>(0, -l * t)); });
}

template <class T>
T unitarity_defect(const CMat<T>& U) {
  return max_abs<T>(CMat<T>(U.adjoint() * U - CMat<T>::Identity(U.cols(), U.cols())));
}

template <class T>
CMat<T> kron(const CMat<T>& A, const CMat<T>& B) {
  return Eigen::kroneckerProduct(A, B).eval();
}

inline long long total_dim(const std::vector<int>& cutoffs) {
  long long n = 1;
  for (int c : cutoffs) n *= c;
  return n;
}

// op on `mode`, identity elsewhere.
template <class T>
CMat<T> embed(const CMat<T>& op, int mode, const std::vector<int>& cutoffs) {
  if (mode < 0 || mode >= int(cutoffs.size()))
    throw Error(ErrorCode::ShapeMismatch, "embed: mode out of range");
  if (op.rows() != cutoffs[mode] || op.cols() != cutoffs[mode])
    throw Error(ErrorCode::ShapeMismatch, "embed: operator dim does not match cutoff");
  long long before = 1, after = 1;
  for (int m = 0; m < mode; ++m) before *= cutoffs[m];
  for (int m = mode + 1; m < int(cutoffs.size()); ++m) after *= cutoffs[m];
  CMat<T> out = kron<T>(CMat<T>::Identity(before, before), op);
  return kron<T>(out, CMat<T>::Identity(after, after));
}

template <class T>
struct MultiModeState {
  std::vector<int> cutoffs;
  CVec<T> amp;

  MultiModeState() = default;
  MultiModeState(std::vector<int> c, CVec<T> a) : cutoffs(std::move(c)), amp(std::move(a)) {
    if (total_dim(cutoffs) != amp.size())
      throw Error(ErrorCode::ShapeMismatch, "MultiModeState: amplitude size does not match cutoffs");
  }

  static MultiModeState fock(std::vector<int> c, const std::vector<int>& n) {
    if (n.size() != c.size()) throw Error(ErrorCode::ShapeMismatch, "fock: index rank");
    CVec<T> a = CVec<T>::Zero(total_dim(c));
    long long idx = 0;
    for (std::size_t m = 0; m < c.size(); ++m) {
      if (n[m] < 0 || n[m] >= c[m]) throw Error(ErrorCode::ShapeMismatch, "fock: index beyond cutoff");
      idx = idx * c[m] + n[m];
    }
    a[idx] = 1;
    return {std::move(c), std::move(a)};
  }

  int modes() const { return int(cutoffs.size()); }
  T norm() const { return amp.norm(); }
  void normalize() {
    const T n = norm();
    if (n == T(0)) throw Error(ErrorCode::ZeroOutput, "normalize: zero state");
    amp /= n;
  }
  std::complex<T> at(const std::vector<int>& n) const {
    long long idx = 0;
    for (std::size_t m = 0; m < cutoffs.size(); ++m) idx = idx * cutoffs[m] + n[m];
    return amp[idx];
  }
};

using State = MultiModeState<double>;

template <class T>
MultiModeState<T> tensor(const std::vector<MultiModeState<T>>& parts) {
  if (parts.empty()) throw Error(ErrorCode::ShapeMismatch, "tensor: no factors");
  std::vector<int> c = parts[0].cutoffs;
  CVec<T> a = parts[0].amp;
  for (std::size_t i = 1; i < parts.size(); ++i) {
    c.insert(c.end(), parts[i].cutoffs.begin(), parts[i].cutoffs.end());
    CVec<T> b(a.size() * parts[i].amp.size());
    for (Eigen::Index j = 0; j < a.size(); ++j)
      b.segment(j * parts[i].amp.size(), parts[i].amp.size()) = a[j] * parts[i].amp;
    a = std::move(b);
  }
  return {std::move(c), std::move(a)};
}

// Apply a single-mode matrix to one mode of a flat amplitude vector.
template <class T>
void apply_mode(CVec<T>& amp, const std::vector<int>& cutoffs, int mode, const CMat<T>& op) {
  const int d = cutoffs[mode];
  if (op.rows() != d || op.cols() != d) throw Error(ErrorCode::ShapeMismatch, "apply_mode: dim");
  long long before = 1, after = 1;
  for (int m = 0; m < mode; ++m) before *= cutoffs[m];
  for (int m = mode + 1; m < int(cutoffs.size()); ++m) after *= cutoffs[m];
  const CMat<T> opT = op.transpose();
  for (long long b = 0; b < before; ++b) {
    Eigen::Map<CMat<T>> blk(amp.data() + b * d * after, after, d);
    blk = (blk * opT).eval();
  }
}

// exp(i theta * prod_m A_m) for Hermitian single-mode factors given by their
// eigendecompositions; modes must be distinct.
template <class T>
void apply_product_phase(CVec<T>& amp, const std::vector<int>& cutoffs, const std::vector<int>& modes,
                         const std::vector<const EigenDecomp<T>*>& parts, T theta) {
  for (std::size_t i = 0; i < modes.size(); ++i)
    apply_mode<T>(amp, cutoffs, modes[i], CMat<T>(parts[i]->evecs.adjoint()));
  const int nm = int(cutoffs.size());
  std::vector<long long> stride(nm, 1);
  for (int m = nm - 2; m >= 0; --m) stride[m] = stride[m + 1] * cutoffs[m + 1];
  for (Eigen::Index idx = 0; idx < amp.size(); ++idx) {
    T lam = 1;
    for (std::size_t i = 0; i < modes.size(); ++i) {
      const long long n = (idx / stride[modes[i]]) % cutoffs[modes[i]];
      lam *= parts[i]->evals[n];
    }
    amp[idx] *= std::exp(std::complex<T>(0, theta * lam));
  }
  for (std::size_t i = 0; i < modes.size(); ++i)
    apply_mode<T>(amp, cutoffs, modes[i], parts[i]->evecs);
}

template <class T>
T state_fidelity(const CVec<T>& a, const CVec<T>& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::ShapeMismatch, "fidelity: size");
  const T na = a.squaredNorm(), nb = b.squaredNorm();
  if (na == T(0) || nb == T(0)) return T(0);
  return std::norm(a.dot(b)) / (na * nb);
}

// Largest-magnitude amplitude made real-positive.
template <class T>
CVec<T> fix_global_phase(const CVec<T>& v) {
  if (v.size() == 0) return v;
  Eigen::Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  if (std::abs(v[k]) == T(0)) return v;
  return (v * (std::abs(v[k]) / v[k])).eval();
}

}  // namespace cvinv

#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

namespace kflow {

/// Constant Hermitian n x n coefficient matrix of a (1,1)-form, n in {1, 2}.
///
/// For n = 1 only `a11` is meaningful. For n = 2 the lower off-diagonal entry
/// is conj(a12), so Hermitian symmetry holds by construction.
struct HermitianMatrix {
  int n = 1;
  double a11 = 0.0;
  double a22 = 0.0;
  std::complex<double> a12{0.0, 0.0};

  static HermitianMatrix scalar(double a) { return {1, a, 0.0, {}}; }
  static HermitianMatrix two(double a11, double a22, std::complex<double> a12 = {}) {
    return {2, a11, a22, a12};
  }
  static HermitianMatrix identity(int n) {
    return n == 1 ? scalar(1.0) : two(1.0, 1.0);
  }

  double det() const {
    return n == 1 ? a11 : a11 * a22 - std::norm(a12);
  }
  double trace() const { return n == 1 ? a11 : a11 + a22; }
  double min_eigenvalue() const {
    if (n == 1) return a11;
    const double mid = 0.5 * (a11 + a22);
    const double half_gap = 0.5 * (a11 - a22);
    return mid - std::sqrt(half_gap * half_gap + std::norm(a12));
  }

  HermitianMatrix operator+(const HermitianMatrix& o) const {
    check_same(o);
    return {n, a11 + o.a11, a22 + o.a22, a12 + o.a12};
  }
  HermitianMatrix operator-(const HermitianMatrix& o) const {
    check_same(o);
    return {n, a11 - o.a11, a22 - o.a22, a12 - o.a12};
  }
  HermitianMatrix operator*(double s) const { return {n, s * a11, s * a22, s * a12}; }

  void check_same(const HermitianMatrix& o) const {
    if (n != o.n) throw std::invalid_argument("HermitianMatrix: dimension mismatch");
  }
};

/// n-fold mixed pairing of two constant classes, n [A][B]^{n-1}.
///
/// n = 1: A. n = 2: the mixed determinant
/// A11 B22 + A22 B11 - A12 B21 - A21 B12 = det(A + B) - det A - det B.
inline double mixed_determinant(const HermitianMatrix& a, const HermitianMatrix& b) {
  a.check_same(b);
  if (a.n == 1) return a.a11;
  return a.a11 * b.a22 + a.a22 * b.a11 - 2.0 * (a.a12 * std::conj(b.a12)).real();
}

}  // namespace kflow

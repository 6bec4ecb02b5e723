// SPDX-License-Identifier: Apache-2.0
// Slow, loop-based reference implementations used as test oracles. They
// share no code with the library beyond the basic types.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "radcom/types.hpp"

namespace oracle {

using radcom::CMatrix;
using radcom::Complex;
using radcom::CVector;
using radcom::Matrix;
using radcom::Vector;

inline Complex steer(double theta, int n, double spacing) {
  const double ph = 2.0 * 3.14159265358979323846 * spacing * std::sin(theta) * n;
  return {std::cos(ph), std::sin(ph)};
}

// a^H (P P^H) a with the covariance formed first.
inline double gain(const CMatrix& p, double theta, double spacing) {
  const int nt = static_cast<int>(p.rows());
  CMatrix rx = CMatrix::Zero(nt, nt);
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < nt; ++j)
      for (int c = 0; c < p.cols(); ++c) rx(i, j) += p(i, c) * std::conj(p(j, c));
  Complex acc = 0.0;
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < nt; ++j)
      acc += std::conj(steer(theta, i, spacing)) * rx(i, j) * steer(theta, j, spacing);
  return acc.real();
}

inline double bse(const CMatrix& p, const Vector& angles, const Vector& desired, double alpha,
                  double spacing) {
  double s = 0.0;
  for (int m = 0; m < angles.size(); ++m) {
    const double d = alpha * desired(m) - gain(p, angles(m), spacing);
    s += d * d;
  }
  return s;
}

// |h^H p|^2 by explicit summation.
inline double received(const CVector& h, const CMatrix& p, int col) {
  Complex acc = 0.0;
  for (int i = 0; i < h.size(); ++i) acc += std::conj(h(i)) * p(i, col);
  return std::norm(acc);
}

struct Rates {
  double rc;
  double rp;
};

// Common and private rates of `user` with unit noise.
inline Rates rates(const CMatrix& p, const CVector& h, int user) {
  const int k_users = static_cast<int>(p.cols()) - 1;
  double interf_common = 1.0;
  for (int j = 1; j <= k_users; ++j) interf_common += received(h, p, j);
  double interf_private = 1.0;
  for (int j = 1; j <= k_users; ++j)
    if (j != user + 1) interf_private += received(h, p, j);
  return {std::log2(1.0 + received(h, p, 0) / interf_common),
          std::log2(1.0 + received(h, p, user + 1) / interf_private)};
}

// Per-user average common/private rates over channel samples.
inline void average(const CMatrix& p, const std::vector<CMatrix>& samples, Vector& rc,
                    Vector& rp) {
  const int k_users = static_cast<int>(p.cols()) - 1;
  rc = Vector::Zero(k_users);
  rp = Vector::Zero(k_users);
  for (const CMatrix& h : samples)
    for (int k = 0; k < k_users; ++k) {
      const Rates r = rates(p, h.col(k), k);
      rc(k) += r.rc;
      rp(k) += r.rp;
    }
  rc /= static_cast<double>(samples.size());
  rp /= static_cast<double>(samples.size());
}

// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.
inline Vector jacobi_eigenvalues(Matrix a) {
  const int n = static_cast<int>(a.rows());
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) off += a(i, j) * a(i, j);
    if (off < 1e-22) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
  }
  Vector ev = a.diagonal();
  std::sort(ev.data(), ev.data() + n);
  return ev;
}

}  // namespace oracle

// SPDX-License-Identifier: Apache-2.0
//
// Dense complex-matrix kernel: SVD, pseudo-inverse, null space, Hermitian
// square root, and Kronecker/vectorization identities. All storage is
// column-major and vec() is column-by-column.

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <limits>
#include <stdexcept>

namespace twr {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline void require_finite(const CMatrix& a, const char* what) {
  if (!a.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": non-finite entries");
  }
}

struct SvdResult {
  CMatrix left_vectors;       // unitary columns
  RVector singular_values;    // descending, nonnegative
  CMatrix right_vectors;      // unitary columns

  /// Count of singular values above tol (numerical rank).
  int rank(double tol) const {
    int r = 0;
    for (Eigen::Index i = 0; i < singular_values.size(); ++i) {
      if (singular_values(i) > tol) ++r;
    }
    return r;
  }
};

/// Default singular-value cutoff: eps * sigma_max * max(rows, cols).
inline double default_sv_tolerance(double sigma_max, Eigen::Index rows,
                                   Eigen::Index cols) {
  return std::numeric_limits<double>::epsilon() * sigma_max *
         static_cast<double>(std::max(rows, cols));
}

inline SvdResult svd(const CMatrix& a) {
  require_finite(a, "svd");
  Eigen::JacobiSVD<CMatrix> solver(a,
                                   Eigen::ComputeThinU | Eigen::ComputeThinV);
  return SvdResult{solver.matrixU(), solver.singularValues(),
                   solver.matrixV()};
}

inline int numerical_rank(const CMatrix& a, double rel_tol = -1.0) {
  if (a.size() == 0) return 0;
  SvdResult s = svd(a);
  double smax = s.singular_values.size() > 0 ? s.singular_values(0) : 0.0;
  double tol = rel_tol > 0.0
                   ? rel_tol * smax * static_cast<double>(
                                          std::max(a.rows(), a.cols()))
                   : default_sv_tolerance(smax, a.rows(), a.cols());
  return s.rank(tol);
}

/// Moore-Penrose pseudo-inverse. Singular values below tol are treated as
/// zero; tol < 0 selects the default eps-scale cutoff.
inline CMatrix pinv(const CMatrix& a, double tol = -1.0) {
  require_finite(a, "pinv");
  if (a.size() == 0) return CMatrix::Zero(a.cols(), a.rows());
  SvdResult s = svd(a);
  double smax = s.singular_values.size() > 0 ? s.singular_values(0) : 0.0;
  double cut = tol >= 0.0 ? tol : default_sv_tolerance(smax, a.rows(), a.cols());
  CMatrix result = CMatrix::Zero(a.cols(), a.rows());
  for (Eigen::Index i = 0; i < s.singular_values.size(); ++i) {
    if (s.singular_values(i) > cut) {
      result += s.right_vectors.col(i) * (1.0 / s.singular_values(i)) *
                s.left_vectors.col(i).adjoint();
    }
  }
  return result;
}

/// Orthonormal basis of the (right) null space of a. Returns a matrix with
/// zero columns when the nullity is zero. rel_tol scales the cutoff
/// rel_tol * sigma_max * max(rows, cols); rel_tol < 0 selects machine eps.
inline CMatrix null_space(const CMatrix& a, double rel_tol = -1.0) {
  require_finite(a, "null_space");
  if (a.cols() == 0) return CMatrix::Zero(0, 0);
  if (a.rows() == 0 || a.size() == 0) {
    // Empty map annihilates everything: the whole domain is the null space.
    return CMatrix::Identity(a.cols(), a.cols());
  }
  Eigen::JacobiSVD<CMatrix> solver(a, Eigen::ComputeFullV);
  const RVector& sv = solver.singularValues();
  double smax = sv.size() > 0 ? sv(0) : 0.0;
  double tol = rel_tol > 0.0
                   ? rel_tol * smax * static_cast<double>(
                                          std::max(a.rows(), a.cols()))
                   : default_sv_tolerance(smax, a.rows(), a.cols());
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol) ++rank;
  }
  return solver.matrixV().rightCols(a.cols() - rank);
}

/// Hermitian positive-semidefinite square root. Eigenvalues in
/// [-1e-9 * scale, 0) are clamped to zero; anything more negative signals a
/// non-PSD input.
inline CMatrix hermitian_sqrt(const CMatrix& p) {
  require_finite(p, "hermitian_sqrt");
  if (p.rows() != p.cols()) {
    throw std::invalid_argument("hermitian_sqrt: matrix not square");
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(p);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("hermitian_sqrt: eigendecomposition failed");
  }
  RVector ev = es.eigenvalues();
  double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  RVector root(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -1e-9 * scale) {
      throw std::invalid_argument("hermitian_sqrt: input not PSD");
    }
    root(i) = std::sqrt(std::max(ev(i), 0.0));
  }
  return es.eigenvectors() * root.asDiagonal() *
         es.eigenvectors().adjoint();
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix result(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      result.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) =
          a(i, j) * b;
    }
  }
  return result;
}

/// Column-by-column vectorization.
inline CVector vec(const CMatrix& a) {
  return Eigen::Map<const CVector>(a.data(), a.size());
}

inline CMatrix unvec(const CVector& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols) {
    throw std::invalid_argument("unvec: size mismatch");
  }
  return Eigen::Map<const CMatrix>(v.data(), rows, cols);
}

}  // namespace twr

// SPDX-License-Identifier: Apache-2.0
//
// Self-contained real second-order-cone feasibility solver. Feasibility is
// decided through the margin-maximization program
//     max_{x,t} t   s.t.   c_i.x + d_i - ||A_i x + b_i|| >= t  for all i,
// solved with a log-barrier interior-point method over the cones. A strictly
// interior start always exists (push t below every slack at x = 0), so no
// phase-one problem is needed. Includes the complex-to-real lifting used by
// the relay precoder assembly.

#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "twr/linalg.hpp"

namespace twr {

struct SocConstraint {
  RMatrix a_map;   // m x n (m may be 0: pure linear constraint)
  RVector b_off;   // m
  RVector c_row;   // n
  double d_off = 0.0;
};

struct SocpProblem {
  int n = 0;
  std::vector<SocConstraint> constraints;
};

enum class SocpStatus { Feasible, Infeasible, Indeterminate };

struct SocpOutcome {
  SocpStatus status = SocpStatus::Indeterminate;
  std::optional<RVector> point;
  double margin = -std::numeric_limits<double>::infinity();
};

namespace detail {

inline double cone_slack(const SocConstraint& c, const RVector& x) {
  double lin = c.c_row.dot(x) + c.d_off;
  double nrm = c.a_map.rows() > 0 ? (c.a_map * x + c.b_off).norm() : 0.0;
  return lin - nrm;
}

inline void check_problem(const SocpProblem& p) {
  if (p.n < 1 || p.constraints.empty()) {
    throw std::invalid_argument("socp: empty problem");
  }
  for (const auto& c : p.constraints) {
    if (c.c_row.size() != p.n ||
        (c.a_map.rows() > 0 &&
         (c.a_map.cols() != p.n || c.b_off.size() != c.a_map.rows()))) {
      throw std::invalid_argument("socp: constraint dimension mismatch");
    }
  }
}

}  // namespace detail

/// Maximize the worst cone slack. Feasible iff the maximized margin clears
/// -tol; Indeterminate only when the iteration budget runs out. A margin
/// diverging past 1e8 is reported Feasible (the slack is unbounded).
inline SocpOutcome solve_margin(const SocpProblem& p, double tol = 1e-6,
                                int max_iter = 500) {
  detail::check_problem(p);
  if (tol <= 0.0) throw std::invalid_argument("socp: tol must be positive");
  const int n = p.n;
  const int dim = n + 1;  // z = (x, t)
  const int m = static_cast<int>(p.constraints.size());

  // Strictly interior start: x = 0, t one below the smallest slack.
  RVector z = RVector::Zero(dim);
  {
    double worst = std::numeric_limits<double>::infinity();
    RVector x0 = RVector::Zero(n);
    for (const auto& c : p.constraints) {
      worst = std::min(worst, detail::cone_slack(c, x0));
    }
    z(n) = worst - 1.0;
  }

  // Per-cone slack written as u >= ||v|| with u = c.x + d - t, v = A x + b.
  auto slack_u = [&](const SocConstraint& c, const RVector& zz) {
    return c.c_row.dot(zz.head(n)) + c.d_off - zz(n);
  };

  // Barrier value of -sum log(u^2 - ||v||^2); +inf outside the domain.
  auto barrier = [&](const RVector& zz) {
    double val = 0.0;
    for (const auto& c : p.constraints) {
      double u = slack_u(c, zz);
      double v2 = c.a_map.rows() > 0
                      ? (c.a_map * zz.head(n) + c.b_off).squaredNorm()
                      : 0.0;
      double w = u * u - v2;
      if (u <= 0.0 || w <= 0.0) {
        return std::numeric_limits<double>::infinity();
      }
      val -= std::log(w);
    }
    return val;
  };

  double mu = 1.0;
  const double mu_factor = 0.2;
  // Each cone barrier has parameter 2, so the duality gap is <= 2 m mu.
  const double mu_target = tol / (4.0 * m);
  int iterations = 0;

  while (mu > mu_target && iterations < max_iter) {
    // Newton iterations on F(z) = -t/mu + barrier(z).
    for (int inner = 0; inner < 50 && iterations < max_iter; ++inner) {
      ++iterations;
      RVector grad = RVector::Zero(dim);
      grad(n) = -1.0 / mu;
      RMatrix hess = RMatrix::Zero(dim, dim);
      for (const auto& c : p.constraints) {
        double u = slack_u(c, z);
        RVector v = c.a_map.rows() > 0
                        ? RVector(c.a_map * z.head(n) + c.b_off)
                        : RVector();
        double w = u * u - (v.size() > 0 ? v.squaredNorm() : 0.0);
        RVector chat = RVector::Zero(dim);
        chat.head(n) = c.c_row;
        chat(n) = -1.0;
        RVector grad_w = 2.0 * u * chat;
        if (v.size() > 0) {
          RVector atv = RVector::Zero(dim);
          atv.head(n) = c.a_map.transpose() * v;
          grad_w -= 2.0 * atv;
        }
        grad -= grad_w / w;
        hess += grad_w * grad_w.transpose() / (w * w);
        hess -= (2.0 / w) * (chat * chat.transpose());
        if (v.size() > 0) {
          RMatrix ata = RMatrix::Zero(dim, dim);
          ata.topLeftCorner(n, n) = c.a_map.transpose() * c.a_map;
          hess += (2.0 / w) * ata;
        }
      }
      Eigen::LDLT<RMatrix> ldlt(
          hess + 1e-12 * RMatrix::Identity(dim, dim));
      RVector step = ldlt.solve(-grad);
      double decrement2 = -grad.dot(step);
      if (!std::isfinite(decrement2) || decrement2 < 0.0) break;
      if (decrement2 < 1e-14) break;  // centered for this mu

      // Backtracking line search keeping z inside the barrier domain.
      double f0 = -z(n) / mu + barrier(z);
      double alpha = 1.0;
      for (int ls = 0; ls < 60; ++ls) {
        RVector cand = z + alpha * step;
        double fc = -cand(n) / mu + barrier(cand);
        if (fc < f0 - 1e-4 * alpha * decrement2) {
          z = cand;
          break;
        }
        alpha *= 0.5;
      }
      if (z(n) > 1e8) {  // slack grows without bound: trivially feasible
        SocpOutcome out;
        out.status = SocpStatus::Feasible;
        out.point = z.head(n);
        out.margin = z(n);
        return out;
      }
    }
    mu = std::max(mu * mu_factor, mu_target * 0.999);
  }
  const bool converged = mu <= mu_target;

  SocpOutcome out;
  out.point = z.head(n);
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& c : p.constraints) {
    margin = std::min(margin, detail::cone_slack(c, z.head(n)));
  }
  out.margin = margin;
  if (!converged && margin < -tol) {
    out.status = SocpStatus::Indeterminate;
  } else {
    out.status =
        margin >= -tol ? SocpStatus::Feasible : SocpStatus::Infeasible;
  }
  return out;
}

/// Lift one complex cone ||A x + b|| <= Re(c x) + d over x in C^n to a real
/// cone over (Re x; Im x) in R^{2n}. Norms are preserved exactly; the
/// linear side keeps only the real part, which the relay precoder assembly
/// guarantees is the full value by construction.
inline SocConstraint lift_complex(const CMatrix& a_cplx, const CVector& b_cplx,
                                  const CMatrix& c_cplx, double d_real) {
  if (c_cplx.rows() != 1) {
    throw std::invalid_argument("lift_complex: c must be a row vector");
  }
  const Eigen::Index n = c_cplx.cols();
  const Eigen::Index m = a_cplx.rows();
  if (m > 0 && (a_cplx.cols() != n || b_cplx.size() != m)) {
    throw std::invalid_argument("lift_complex: dimension mismatch");
  }
  SocConstraint out;
  out.a_map = RMatrix(2 * m, 2 * n);
  out.b_off = RVector(2 * m);
  if (m > 0) {
    out.a_map.topLeftCorner(m, n) = a_cplx.real();
    out.a_map.topRightCorner(m, n) = -a_cplx.imag();
    out.a_map.bottomLeftCorner(m, n) = a_cplx.imag();
    out.a_map.bottomRightCorner(m, n) = a_cplx.real();
    out.b_off.head(m) = b_cplx.real();
    out.b_off.tail(m) = b_cplx.imag();
  }
  out.c_row = RVector(2 * n);
  out.c_row.head(n) = c_cplx.real().transpose();
  out.c_row.tail(n) = -c_cplx.imag().transpose();
  out.d_off = d_real;
  return out;
}

}  // namespace twr

// Copyright 2026 The qvna Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Damped (Levenberg-Marquardt) least squares for small dense problems with a
// central-difference Jacobian.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

namespace qvna {

struct LeastSquaresOptions {
  int max_iterations = 200;
  // Bound on the scaled gradient max_k |(J^T r)_k| scale_k.
  double gradient_tolerance = 1e-8;
  // Bound on the largest cosine between the residual and a Jacobian column;
  // the scale-free test for fits that end with a large residual.
  double cosine_tolerance = 1e-8;
  // Relative cost decrease below which an accepted step counts as stagnant.
  double stagnation_tolerance = 1e-13;
  double relative_fd_step = 1e-6;
};

struct LeastSquaresResult {
  Eigen::VectorXd params;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd jacobian;
  double cost = 0.0;  // 0.5 * |r|^2
  double gradient_cosine = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string status;

  /// sigma^2 (J^T J)^+ with sigma^2 = |r|^2 / (m - n). Directions the data
  /// does not constrain get a very large, finite variance.
  Eigen::MatrixXd covariance() const {
    const auto m = residuals.size();
    const auto n = params.size();
    const double dof = m > n ? static_cast<double>(m - n) : 1.0;
    const double sigma2 = 2.0 * cost / dof;
    const Eigen::MatrixXd jtj = jacobian.transpose() * jacobian;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jtj, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::VectorXd s = svd.singularValues();
    const double floor = std::max(s.size() > 0 ? s(0) : 0.0, 1e-300) * 1e-12;
    Eigen::VectorXd inv(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) inv(i) = 1.0 / std::max(s(i), floor);
    Eigen::MatrixXd c = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
    return sigma2 * 0.5 * (c + c.transpose());
  }

  /// Sandwich estimate (J^T J)^+ [sum_c J_c^T r_c r_c^T J_c] (J^T J)^+ * m / (m - n)
  /// over clusters of `cluster` consecutive residuals. Unlike covariance()
  /// it holds when the noise differs between residuals or is correlated
  /// inside a cluster.
  Eigen::MatrixXd robust_covariance(Eigen::Index cluster = 1) const {
    const auto m = residuals.size();
    const auto n = params.size();
    const double dof = m > n ? static_cast<double>(m - n) : 1.0;
    if (!(cost > 0.0) || cluster < 1 || m % cluster != 0) return covariance();
    const Eigen::MatrixXd bread = covariance() / (2.0 * cost / dof);
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < m; i += cluster) {
      const Eigen::VectorXd g = jacobian.middleRows(i, cluster).transpose() * residuals.segment(i, cluster);
      meat += g * g.transpose();
    }
    const Eigen::MatrixXd c = bread * meat * bread * (static_cast<double>(m) / dof);
    return 0.5 * (c + c.transpose());
  }
};

namespace detail {

template <typename Residual>
Eigen::MatrixXd central_jacobian(Residual& f, const Eigen::VectorXd& p,
                                 const Eigen::VectorXd& scale, Eigen::Index m, double rel) {
  Eigen::MatrixXd j(m, p.size());
  Eigen::VectorXd rp(m), rm(m);
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    const double h = rel * std::max(std::abs(p(k)), scale(k));
    Eigen::VectorXd q = p;
    q(k) = p(k) + h;
    f(q, rp);
    q(k) = p(k) - h;
    f(q, rm);
    j.col(k) = (rp - rm) / (2.0 * h);
  }
  return j;
}

inline double gradient_cosine(const Eigen::MatrixXd& j, const Eigen::VectorXd& r) {
  const double rn = r.norm();
  if (rn == 0.0) return 0.0;
  const Eigen::VectorXd g = j.transpose() * r;
  double worst = 0.0;
  for (Eigen::Index k = 0; k < j.cols(); ++k) {
    const double cn = j.col(k).norm();
    if (cn > 0.0) worst = std::max(worst, std::abs(g(k)) / (cn * rn));
  }
  return worst;
}

inline double scaled_gradient(const Eigen::MatrixXd& j, const Eigen::VectorXd& r,
                              const Eigen::VectorXd& scale) {
  return ((j.transpose() * r).cwiseProduct(scale)).cwiseAbs().maxCoeff();
}

}  // namespace detail

/// Minimizes 0.5 |f(p)|^2. `f(p, r)` fills r (size m); `scale` gives the
/// typical magnitude of each parameter for the finite-difference step. The
/// cost never increases between accepted iterates.
template <typename Residual>
LeastSquaresResult levenberg_marquardt(Residual&& f, Eigen::VectorXd p, Eigen::Index m,
                                       const Eigen::VectorXd& scale,
                                       const LeastSquaresOptions& opt = {}) {
  LeastSquaresResult res;
  Eigen::VectorXd r(m);
  f(p, r);
  double cost = 0.5 * r.squaredNorm();
  Eigen::MatrixXd j = detail::central_jacobian(f, p, scale, m, opt.relative_fd_step);
  double lambda = -1.0;
  Eigen::VectorXd trial_r(m);

  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    const double gcos = detail::gradient_cosine(j, r);
    if (gcos < opt.cosine_tolerance || cost == 0.0 ||
        detail::scaled_gradient(j, r, scale) < opt.gradient_tolerance) {
      res.converged = true;
      res.status = "gradient";
      break;
    }
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::VectorXd g = j.transpose() * r;
    Eigen::VectorXd diag = jtj.diagonal().cwiseMax(1e-12 * std::max(jtj.diagonal().maxCoeff(), 1e-300));
    if (lambda < 0.0) lambda = 1e-3;

    bool accepted = false;
    double new_cost = cost;
    Eigen::VectorXd step;
    for (int tries = 0; tries < 40; ++tries) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * diag;
      step = a.ldlt().solve(-g);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd trial = p + step;
      f(trial, trial_r);
      new_cost = 0.5 * trial_r.squaredNorm();
      if (std::isfinite(new_cost) && new_cost <= cost) {
        accepted = true;
        p = trial;
        break;
      }
      lambda *= 4.0;
    }
    if (!accepted) {
      // No descent direction left at machine precision.
      res.converged = detail::gradient_cosine(j, r) < 1e-5 ||
                      detail::scaled_gradient(j, r, scale) < opt.gradient_tolerance;
      res.status = "no-descent";
      break;
    }
    const double decrease = cost - new_cost;
    r = trial_r;
    cost = new_cost;
    lambda = std::max(lambda / 3.0, 1e-12);
    j = detail::central_jacobian(f, p, scale, m, opt.relative_fd_step);
    const double rel_step = step.norm() / (p.norm() + 1e-300);
    if (decrease <= opt.stagnation_tolerance * cost && rel_step < 1e-8) {
      res.converged = detail::gradient_cosine(j, r) < 1e-5 ||
                      detail::scaled_gradient(j, r, scale) < opt.gradient_tolerance;
      res.status = "stagnation";
      ++it;
      break;
    }
  }
  if (it >= opt.max_iterations && res.status.empty()) res.status = "max-iterations";
  res.params = p;
  res.residuals = r;
  res.jacobian = j;
  res.cost = cost;
  res.gradient_cosine = detail::gradient_cosine(j, r);
  res.iterations = it;
  return res;
}

}  // namespace qvna

#include "iclv/optimizer.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

namespace iclv {

namespace {

double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

BfgsResult maximize_bfgs(const ValueAndGradient& fg, std::vector<double> x0, const BfgsOptions& options) {
  const auto n = static_cast<Eigen::Index>(x0.size());
  BfgsResult result;
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(x0.data(), n);
  Eigen::VectorXd g(n), g_new(n), x_new(n);

  // Internally minimise -f.
  const auto eval = [&](const Eigen::VectorXd& at, Eigen::VectorXd& grad) {
    ++result.evaluations;
    const double f = fg(std::span<const double>(at.data(), static_cast<std::size_t>(n)),
                        std::span<double>(grad.data(), static_cast<std::size_t>(n)));
    grad = -grad;
    return -f;
  };

  double f = eval(x, g);
  if (!std::isfinite(f)) {
    result.message = "objective not finite at the starting values";
    result.x = x0;
    result.value = -f;
    return result;
  }
  result.history.push_back(-f);

  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  bool fresh = true;  // H is the unscaled identity
  if (options.initial_inverse_hessian.size() == static_cast<std::size_t>(n * n)) {
    H = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        options.initial_inverse_hessian.data(), n, n);
    fresh = false;
  }

  for (int iter = 0;; ++iter) {
    result.iterations = iter;
    if (max_abs(g) < options.gradient_tolerance) {
      result.converged = true;
      result.message = "gradient tolerance reached";
      break;
    }
    if (iter >= options.max_iterations) {
      result.message = "iteration limit reached";
      break;
    }

    Eigen::VectorXd d = -H * g;
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      H.setIdentity();
      fresh = true;
      d = -g;
      slope = g.dot(d);
    }
    double alpha = 1.0;
    if (fresh) alpha = std::min(1.0, 0.1 / std::max(max_abs(d), 1e-300));

    constexpr double c1 = 1e-4;
    bool accepted = false;
    double f_new = f;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + alpha * d;
      f_new = eval(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= f + c1 * alpha * slope && f_new < f) {
        accepted = true;
        break;
      }
      double next = 0.1 * alpha;
      if (std::isfinite(f_new)) {
        const double denom = 2.0 * (f_new - f - slope * alpha);
        if (denom > 0.0) next = std::clamp(-slope * alpha * alpha / denom, 0.1 * alpha, 0.5 * alpha);
      }
      alpha = next;
    }

    if (!accepted) {
      if (!fresh) {
        H.setIdentity();
        fresh = true;
        continue;
      }
      result.message = "line search failed to improve the objective";
      break;
    }

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    const double rel_change = std::fabs(f_new - f) / std::max(1.0, std::fabs(f));
    x = x_new;
    g = g_new;
    f = f_new;
    result.history.push_back(-f);

    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh) {
        H *= sy / y.squaredNorm();
        fresh = false;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd Hy = H * y;
      const double yHy = y.dot(Hy);
      H += ((sy + yHy) * rho * rho) * (s * s.transpose()) - rho * (Hy * s.transpose() + s * Hy.transpose());
    }

    if (rel_change < options.relative_tolerance) {
      result.iterations = iter + 1;
      result.converged = true;
      result.message = "relative log-likelihood change below tolerance";
      break;
    }
  }

  result.x.assign(x.data(), x.data() + n);
  result.value = -f;
  result.gradient.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) result.gradient[static_cast<std::size_t>(i)] = -g[i];
  return result;
}

}  // namespace iclv

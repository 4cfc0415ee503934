#pragma once

// Reference computations for tests. Deliberately naive: dense adjacency,
// double loops over ordered pairs, finite-difference Jacobians. Nothing here
// calls into the estimator.

#include <cmath>
#include <functional>
#include <optional>

#include <Eigen/Dense>

#include "netmoment/edge_models.hpp"
#include "netmoment/graph_core.hpp"

namespace oracle {

using netmoment::EdgeFamily;
using netmoment::NetworkData;

inline double index(const NetworkData& data, const Eigen::VectorXd& beta, const Eigen::VectorXd& gamma,
                    std::size_t i, std::size_t j) {
  return beta[i] + beta[j] + data.covariate(i, j).dot(gamma.transpose());
}

inline Eigen::VectorXd residual_f(const NetworkData& data, EdgeFamily f, const Eigen::VectorXd& beta,
                                  const Eigen::VectorXd& gamma) {
  const std::size_t n = data.n();
  const Eigen::MatrixXd a = data.adjacency();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      out[i] += a(i, j) - f.mu(index(data, beta, gamma, i, j));
    }
  }
  return out;
}

inline Eigen::VectorXd residual_q(const NetworkData& data, EdgeFamily f, const Eigen::VectorXd& beta,
                                  const Eigen::VectorXd& gamma) {
  const std::size_t n = data.n();
  const Eigen::MatrixXd a = data.adjacency();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(data.p()));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      out += data.covariate(i, j).transpose() * (a(i, j) - f.mu(index(data, beta, gamma, i, j)));
    }
  }
  return out;
}

using System = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

inline Eigen::MatrixXd fd_jacobian(const System& g, const Eigen::VectorXd& x, double h = 1e-6) {
  const Eigen::VectorXd g0 = g(x);
  Eigen::MatrixXd jac(g0.size(), x.size());
  for (Eigen::Index c = 0; c < x.size(); ++c) {
    Eigen::VectorXd up = x, dn = x;
    up[c] += h;
    dn[c] -= h;
    jac.col(c) = (g(up) - g(dn)) / (2 * h);
  }
  return jac;
}

/// Damped Newton with finite-difference Jacobian and backtracking on ||g||_2.
inline std::optional<Eigen::VectorXd> newton(const System& g, Eigen::VectorXd x, double tol = 1e-11,
                                             int max_iter = 200) {
  Eigen::VectorXd r = g(x);
  for (int it = 0; it < max_iter; ++it) {
    if (r.lpNorm<Eigen::Infinity>() <= tol) return x;
    const Eigen::VectorXd step = fd_jacobian(g, x).fullPivLu().solve(-r);
    double t = 1.0;
    bool moved = false;
    for (int k = 0; k < 50; ++k, t *= 0.5) {
      const Eigen::VectorXd trial = x + t * step;
      const Eigen::VectorXd rt = g(trial);
      if (rt.allFinite() && rt.norm() < r.norm()) {
        x = trial;
        r = rt;
        moved = true;
        break;
      }
    }
    if (!moved) return r.lpNorm<Eigen::Infinity>() <= 1e3 * tol ? std::optional(x) : std::nullopt;
  }
  return r.lpNorm<Eigen::Infinity>() <= tol ? std::optional(x) : std::nullopt;
}

/// beta solving F(beta, gamma) = 0 for fixed gamma.
inline std::optional<Eigen::VectorXd> beta_given_gamma(const NetworkData& data, EdgeFamily f,
                                                       const Eigen::VectorXd& gamma) {
  return newton([&](const Eigen::VectorXd& b) { return residual_f(data, f, b, gamma); },
                Eigen::VectorXd::Zero(static_cast<Eigen::Index>(data.n())));
}

/// Stacked (beta, gamma) solving the full moment system.
inline std::optional<Eigen::VectorXd> joint_solution(const NetworkData& data, EdgeFamily f) {
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto p = static_cast<Eigen::Index>(data.p());
  System g = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd out(n + p);
    out << residual_f(data, f, x.head(n), x.tail(p)), residual_q(data, f, x.head(n), x.tail(p));
    return out;
  };
  return newton(g, Eigen::VectorXd::Zero(n + p));
}

/// Gradient of the binary logistic log-likelihood
/// sum_{j<i} a log s(pi) + (1 - a) log(1 - s(pi)), written per dyad.
inline Eigen::VectorXd logistic_loglik_gradient(const NetworkData& data, const Eigen::VectorXd& beta,
                                                const Eigen::VectorXd& gamma) {
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto p = static_cast<Eigen::Index>(data.p());
  const Eigen::MatrixXd a = data.adjacency();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(n + p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      const double pi = index(data, beta, gamma, static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      const double s = 1.0 / (1.0 + std::exp(-pi));
      // d/dpi [a log s + (1-a) log(1-s)] = a (1 - s) - (1 - a) s
      const double dpi = a(i, j) * (1.0 - s) - (1.0 - a(i, j)) * s;
      grad[i] += dpi;
      grad[j] += dpi;
      grad.tail(p) += dpi * data.covariate(static_cast<std::size_t>(i), static_cast<std::size_t>(j)).transpose();
    }
  }
  return grad;
}

}  // namespace oracle

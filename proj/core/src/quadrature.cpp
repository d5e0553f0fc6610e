#include "dare/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "dare/error.hpp"

namespace dare {

QuadratureRule gauss_hermite_rule(int n_nodes) {
  if (n_nodes < 2 || n_nodes > 256) {
    throw Error(fmt::format("quadrature order must be in [2, 256] (got {})", n_nodes));
  }
  // Jacobi matrix of He_n: zero diagonal, off-diagonal sqrt(k).
  const Eigen::Index n = n_nodes;
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(n - 1);
  for (Eigen::Index k = 0; k < n - 1; ++k) sub(k) = std::sqrt(static_cast<double>(k + 1));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw NumericalError("Gauss-Hermite eigen-decomposition failed");

  const Eigen::VectorXd& x = solver.eigenvalues();
  const Eigen::MatrixXd& v = solver.eigenvectors();

  QuadratureRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  // Symmetrize: the rule is exactly symmetric, the eigensolver is not.
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index mirror = n - 1 - k;
    const double node = 0.5 * (x(k) - x(mirror));
    const double w = 0.5 * (v(0, k) * v(0, k) + v(0, mirror) * v(0, mirror));
    rule.nodes[static_cast<std::size_t>(k)] = node;
    rule.weights[static_cast<std::size_t>(k)] = w;
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;

  const double total = std::accumulate(rule.weights.begin(), rule.weights.end(), 0.0);
  for (double& w : rule.weights) w /= total;
  return rule;
}

}  // namespace dare

#pragma once

#include <vector>

namespace dare {

inline constexpr int kDefaultQuadratureNodes = 50;

// Gauss-Hermite rule for the standard normal measure:
//   integral f(z) phi(z) dz  ~=  sum_k weights[k] * f(nodes[k]).
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  int size() const { return static_cast<int>(nodes.size()); }
};

// Golub-Welsch on the probabilists' Hermite recurrence. 2 <= n_nodes <= 256.
QuadratureRule gauss_hermite_rule(int n_nodes);

}  // namespace dare

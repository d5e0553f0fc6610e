#pragma once

// Quasi-Newton minimization and Laplace machinery shared by the DARE and
// cloglog-GLM fits.

#include <cstdint>
#include <functional>
#include <string>

#include <Eigen/Core>

namespace dare {

// Returns f(x); writes the gradient into `grad` when non-null. Non-finite
// values are treated as "step too long" by the line search.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct BfgsOptions {
  int max_iter = 500;
  // Converged when ||g||_inf < gradient_tol * (1 + |f|).
  double gradient_tol = 1e-7;
  double armijo_c1 = 1e-4;
  double max_step = 5.0;  // cap on the step length in parameter space
};

struct BfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd grad;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string message;
};

BfgsResult minimize_bfgs(const Objective& f, Eigen::VectorXd x0, const BfgsOptions& opts = {});

// Central differences of the analytic gradient, step 1e-4 * (1 + |x_i|),
// symmetrized.
Eigen::MatrixXd fd_hessian(const Objective& f, const Eigen::VectorXd& x, double rel_step = 1e-4);

double smallest_eigenvalue(const Eigen::MatrixXd& symmetric);

struct ModeSearchOptions {
  int max_iter = 500;
  int restarts = 2;
  double jitter_sd = 0.5;
  std::uint64_t seed = 0;
  // Acceptance tolerance on the scaled gradient at the returned mode.
  double gradient_tol = 1e-5;
};

struct LaplaceResult {
  Eigen::VectorXd mode;
  Eigen::MatrixXd precision;  // Hessian of f at the mode
  double value = 0.0;         // f at the mode
  double grad_norm_inf = 0.0;
  int iterations = 0;
  int starts = 0;
  double min_eigenvalue = 0.0;
  bool converged = false;
  std::string message;
};

// Minimizes f (a negative log posterior) from x0 plus `restarts` jittered
// starts, keeps the best, polishes it with Newton steps on the finite
// difference Hessian and returns the Laplace approximation there.
LaplaceResult laplace_mode(const Objective& f, const Eigen::VectorXd& x0, const ModeSearchOptions& opts);

}  // namespace dare

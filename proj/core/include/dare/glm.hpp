#pragma once

// Bernoulli GLM with complementary log-log link and log(tau) offset,
//   p = 1 - exp(-exp(x'beta + log tau)),
// fitted as a Bayesian MAP + Laplace with the same coefficient priors as DARE.

#include <span>

#include <Eigen/Core>

#include "dare/core_data.hpp"
#include "dare/inference.hpp"

namespace dare {

double cloglog_prob(std::span<const double> x, const Eigen::VectorXd& beta, double tau);

// Log posterior with N(0, beta_sd^2) priors; gradient written when non-null.
double glm_log_posterior(const Dataset& data, const Eigen::VectorXd& beta, const Eigen::VectorXd& beta_sd,
                         Eigen::VectorXd* grad);

// Only priors.beta_sd is used.
PosteriorFit fit_glm_map(const Dataset& data, const PriorSpec& priors, const FitOptions& opts = {});

}  // namespace dare

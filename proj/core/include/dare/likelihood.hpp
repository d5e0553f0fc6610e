#pragma once

// Marginal DARE likelihood: each interval's infection probability integrates
// the dose-response kernel over the log-normal expected dose,
//
//   p_it = E_z[ P(tau_it * exp(x_it'beta + sigma z)) ],  z ~ N(0, 1),
//
// evaluated by Gauss-Hermite quadrature, together with priors and the
// analytic gradient on the (beta, log sigma, log theta_1) scale.

#include <span>

#include <Eigen/Core>

#include "dare/core_data.hpp"
#include "dare/quadrature.hpp"

namespace dare {

// Interval probabilities are clamped to [kProbClamp, 1 - kProbClamp] before logs.
inline constexpr double kProbClamp = 1e-12;

double interval_infection_prob(const DoseResponseSpec& spec, const ParamVector& params,
                               std::span<const double> x, double tau, const QuadratureRule& rule);

double log_likelihood(const Dataset& data, const DoseResponseSpec& spec, const ParamVector& params,
                      const QuadratureRule& rule);

// Log prior density of the optimization-scale parameters, including the
// Jacobian terms for log sigma and log theta_1.
double log_prior(const PriorSpec& priors, const ParamVector& params);

// Independent N(0, sd_j^2) log density on coefficients; adds the gradient into
// `grad` when given.
double log_beta_prior(const Eigen::VectorXd& beta, const Eigen::VectorXd& beta_sd,
                      Eigen::Ref<Eigen::VectorXd> grad);
double log_beta_prior(const Eigen::VectorXd& beta, const Eigen::VectorXd& beta_sd);

double log_gamma_density(double x, const GammaPrior& prior);

double log_posterior(const Dataset& data, const DoseResponseSpec& spec, const ParamVector& params,
                     const PriorSpec& priors, const QuadratureRule& rule);

// Gradient aligned with ParamVector::flatten().
Eigen::VectorXd log_posterior_grad(const Dataset& data, const DoseResponseSpec& spec, const ParamVector& params,
                                   const PriorSpec& priors, const QuadratureRule& rule);

// Value and gradient in one pass; `grad` may be null. Does not throw on a
// non-finite result, which lets line searches back off.
double log_posterior_eval(const Dataset& data, const DoseResponseSpec& spec, const ParamVector& params,
                          const PriorSpec& priors, const QuadratureRule& rule, Eigen::VectorXd* grad);

struct DoseMoments {
  double mean = 0.0;
  double variance = 0.0;
};

// Mean and variance of the log-normal expected dose over an interval of length tau.
DoseMoments expected_dose_moments(std::span<const double> x, const Eigen::VectorXd& beta, double sigma, double tau);

}  // namespace dare

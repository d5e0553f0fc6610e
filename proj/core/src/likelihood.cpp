#include "dare/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "dare/dose_response.hpp"
#include "dare/error.hpp"

namespace dare {
namespace {

double linear_predictor(std::span<const double> x, const Eigen::VectorXd& beta) {
  if (x.size() != static_cast<std::size_t>(beta.size())) {
    throw Error(fmt::format("covariate row has {} entries, beta has {}", x.size(), beta.size()));
  }
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) s += x[j] * beta(static_cast<Eigen::Index>(j));
  return s;
}

// Quadrature sums for one interval.
struct IntervalSums {
  double prob = 0.0;
  double survival = 0.0;
  double d_log_dose = 0.0;    // sum w_k dP_k/dlogD
  double d_log_dose_z = 0.0;  // sum w_k z_k dP_k/dlogD
  double d_theta1 = 0.0;      // sum w_k dP_k/dtheta_1
};

template <typename K>
IntervalSums integrate(const K& kernel, double location, double sigma, const QuadratureRule& rule) {
  IntervalSums s;
  const std::size_t n = rule.nodes.size();
  for (std::size_t k = 0; k < n; ++k) {
    const double z = rule.nodes[k];
    const double w = rule.weights[k];
    const KernelPoint pt = kernel.at_log_dose(location + sigma * z);
    s.prob += w * pt.prob;
    s.survival += w * pt.survival;
    s.d_log_dose += w * pt.d_log_dose;
    s.d_log_dose_z += w * pt.d_log_dose * z;
    s.d_theta1 += w * pt.d_theta1;
  }
  return s;
}

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

}  // namespace

double interval_infection_prob(const DoseResponseSpec& spec, const ParamVector& params,
                               std::span<const double> x, double tau, const QuadratureRule& rule) {
  const double eta = linear_predictor(x, params.beta);
  if (!std::isfinite(eta)) throw NumericalError("non-finite linear predictor");
  if (!(tau > 0.0)) throw Error(fmt::format("interval length must be positive (got {})", tau));
  const double sigma = params.sigma();
  const double location = eta + std::log(tau);
  const IntervalSums s = visit_kernel(spec, params.theta1(), [&](const auto& k) {
    return integrate(k, location, sigma, rule);
  });
  return clamp_prob(s.prob);
}

double log_likelihood(const Dataset& data, const DoseResponseSpec& spec, const ParamVector& params,
                      const QuadratureRule& rule) {
  double total = 0.0;
  for (std::size_t r = 0; r < data.n_rows(); ++r) {
    const double p = interval_infection_prob(spec, params, data.covariates(r), data.tau()[r], rule);
    total += data.outcome()[r] == 1 ? std::log(p) : std::log1p(-p);
  }
  return total;
}

double log_gamma_density(double x, const GammaPrior& prior) {
  return prior.shape * std::log(prior.rate) - std::lgamma(prior.shape) + (prior.shape - 1.0) * std::log(x) -
         prior.rate * x;
}

double log_beta_prior(const Eigen::VectorXd& beta, const Eigen::VectorXd& beta_sd, Eigen::Ref<Eigen::VectorXd> grad) {
  constexpr double half_log_2pi = 0.91893853320467274178;
  double lp = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    const double sd = beta_sd(j);
    const double u = beta(j) / sd;
    lp += -0.5 * u * u - std::log(sd) - half_log_2pi;
    grad(j) += -beta(j) / (sd * sd);
  }
  return lp;
}

double log_beta_prior(const Eigen::VectorXd& beta, const Eigen::VectorXd& beta_sd) {
  Eigen::VectorXd scratch = Eigen::VectorXd::Zero(beta.size());
  return log_beta_prior(beta, beta_sd, scratch);
}

double log_prior(const PriorSpec& priors, const ParamVector& params) {
  double lp = log_beta_prior(params.beta, priors.beta_sd);
  const double sigma = params.sigma();
  lp += log_gamma_density(sigma, priors.sigma) + params.log_sigma;
  if (params.log_theta1) {
    const double theta1 = std::exp(*params.log_theta1);
    lp += -std::log(priors.theta1.mean) - theta1 / priors.theta1.mean + *params.log_theta1;
  }
  return lp;
}

double log_posterior_eval(const Dataset& data, const DoseResponseSpec& spec, const ParamVector& params,
                          const PriorSpec& priors, const QuadratureRule& rule, Eigen::VectorXd* grad) {
  const Eigen::Index nb = params.beta.size();
  if (data.n_covariates() != static_cast<std::size_t>(nb)) {
    throw Error(fmt::format("dataset has {} covariates, parameters have {}", data.n_covariates(), nb));
  }
  const bool has_theta = params.log_theta1.has_value();
  if (has_theta != (spec.kernel == Kernel::BetaPoisson)) throw Error("parameter vector does not match kernel");

  const double sigma = params.sigma();
  const double theta1 = has_theta ? std::exp(*params.log_theta1) : 1.0;
  if (grad) grad->setZero(static_cast<Eigen::Index>(params.size()));

  const Eigen::VectorXd eta = data.design() * params.beta;
  double ll = 0.0;
  double g_log_sigma = 0.0;
  double g_theta1 = 0.0;
  visit_kernel(spec, params.theta1(), [&](const auto& kernel) {
    for (std::size_t r = 0; r < data.n_rows(); ++r) {
      const double location = eta(static_cast<Eigen::Index>(r)) + std::log(data.tau()[r]);
      const IntervalSums s = integrate(kernel, location, sigma, rule);
      const bool event = data.outcome()[r] == 1;
      const double raw = event ? s.prob : s.survival;
      const double clamped = clamp_prob(raw);
      ll += std::log(clamped);
      if (!grad || raw != clamped) continue;
      // d log p = dp / p;  d log(1-p) = -dp / (1-p)
      const double c = event ? 1.0 / raw : -1.0 / raw;
      const double cb = c * s.d_log_dose;
      auto x = data.covariates(r);
      for (Eigen::Index j = 0; j < nb; ++j) (*grad)(j) += cb * x[static_cast<std::size_t>(j)];
      g_log_sigma += c * sigma * s.d_log_dose_z;
      g_theta1 += c * s.d_theta1;
    }
  });

  double lp = ll;
  if (grad) {
    lp += log_beta_prior(params.beta, priors.beta_sd, grad->head(nb));
  } else {
    lp += log_beta_prior(params.beta, priors.beta_sd);
  }
  const double a = priors.sigma.shape;
  const double b = priors.sigma.rate;
  lp += log_gamma_density(sigma, priors.sigma) + params.log_sigma;
  if (grad) (*grad)(nb) = g_log_sigma + a - b * sigma;
  if (has_theta) {
    const double m = priors.theta1.mean;
    lp += -std::log(m) - theta1 / m + *params.log_theta1;
    if (grad) (*grad)(nb + 1) = g_theta1 * theta1 - theta1 / m + 1.0;
  }
  return lp;
}

namespace {

void require_finite(const ParamVector& params) {
  if (params.is_finite()) return;
  std::string which;
  for (Eigen::Index j = 0; j < params.beta.size(); ++j) {
    if (!std::isfinite(params.beta(j))) which += fmt::format(" beta[{}]", j);
  }
  if (!std::isfinite(params.log_sigma)) which += " log_sigma";
  if (params.log_theta1 && !std::isfinite(*params.log_theta1)) which += " log_theta1";
  throw NumericalError("non-finite parameter:" + which);
}

}  // namespace

double log_posterior(const Dataset& data, const DoseResponseSpec& spec, const ParamVector& params,
                     const PriorSpec& priors, const QuadratureRule& rule) {
  require_finite(params);
  const double lp = log_posterior_eval(data, spec, params, priors, rule, nullptr);
  if (!std::isfinite(lp)) {
    throw NumericalError(fmt::format("log posterior is not finite at log_sigma={}{}", params.log_sigma,
                                     params.log_theta1 ? fmt::format(", log_theta1={}", *params.log_theta1) : ""));
  }
  return lp;
}

Eigen::VectorXd log_posterior_grad(const Dataset& data, const DoseResponseSpec& spec, const ParamVector& params,
                                   const PriorSpec& priors, const QuadratureRule& rule) {
  require_finite(params);
  Eigen::VectorXd grad;
  log_posterior_eval(data, spec, params, priors, rule, &grad);
  if (!grad.allFinite()) {
    for (Eigen::Index j = 0; j < grad.size(); ++j) {
      if (!std::isfinite(grad(j))) throw NumericalError(fmt::format("non-finite gradient in parameter {}", j));
    }
  }
  return grad;
}

DoseMoments expected_dose_moments(std::span<const double> x, const Eigen::VectorXd& beta, double sigma, double tau) {
  if (!(tau > 0.0)) throw Error(fmt::format("interval length must be positive (got {})", tau));
  if (!(sigma >= 0.0)) throw Error(fmt::format("sigma must be non-negative (got {})", sigma));
  const double s2 = sigma * sigma;
  DoseMoments m;
  m.mean = tau * std::exp(linear_predictor(x, beta) + 0.5 * s2);
  m.variance = m.mean * m.mean * std::expm1(s2);
  return m;
}

}  // namespace dare

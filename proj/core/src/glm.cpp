#include "dare/glm.hpp"

#include <cmath>

#include <fmt/format.h>

#include "dare/error.hpp"
#include "dare/likelihood.hpp"
#include "dare/optimizer.hpp"
#include "dare/serialization.hpp"

namespace dare {

double cloglog_prob(std::span<const double> x, const Eigen::VectorXd& beta, double tau) {
  if (!(tau > 0.0)) throw Error(fmt::format("interval length must be positive (got {})", tau));
  if (x.size() != static_cast<std::size_t>(beta.size())) throw Error("covariate row does not match beta");
  double eta = std::log(tau);
  for (std::size_t j = 0; j < x.size(); ++j) eta += x[j] * beta(static_cast<Eigen::Index>(j));
  return -std::expm1(-std::exp(eta));
}

double glm_log_posterior(const Dataset& data, const Eigen::VectorXd& beta, const Eigen::VectorXd& beta_sd,
                         Eigen::VectorXd* grad) {
  const Eigen::Index nb = beta.size();
  if (grad) grad->setZero(nb);
  const Eigen::VectorXd eta = data.design() * beta;
  double ll = 0.0;
  for (std::size_t r = 0; r < data.n_rows(); ++r) {
    const double a = eta(static_cast<Eigen::Index>(r)) + std::log(data.tau()[r]);
    const double mu = std::exp(a);  // cumulative hazard over the interval
    double d_eta = 0.0;
    if (data.outcome()[r] == 1) {
      const double p = -std::expm1(-mu);
      ll += std::log(p);
      // d log p / d eta = mu e^{-mu} / p
      d_eta = std::exp(a - mu) / p;
    } else {
      ll += -mu;
      d_eta = -mu;
    }
    if (grad) {
      auto x = data.covariates(r);
      for (Eigen::Index j = 0; j < nb; ++j) (*grad)(j) += d_eta * x[static_cast<std::size_t>(j)];
    }
  }
  if (grad) return ll + log_beta_prior(beta, beta_sd, *grad);
  return ll + log_beta_prior(beta, beta_sd);
}

PosteriorFit fit_glm_map(const Dataset& data, const PriorSpec& priors, const FitOptions& opts) {
  const std::size_t nb = data.n_covariates();
  priors.validate(nb);

  Objective neg_log_post = [&](const Eigen::VectorXd& beta, Eigen::VectorXd* grad) {
    const double lp = glm_log_posterior(data, beta, priors.beta_sd, grad);
    if (grad) *grad = -*grad;
    return -lp;
  };
  ModeSearchOptions mo;
  mo.max_iter = opts.max_iter;
  mo.restarts = opts.restarts;
  mo.seed = opts.seed;
  const LaplaceResult lr = laplace_mode(neg_log_post, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nb)), mo);

  PosteriorFit fit;
  fit.model = ModelKind::CloglogGlm;
  fit.covariate_names = data.covariate_names();
  fit.labels = data.covariate_names();
  fit.mode = lr.mode;
  fit.precision = lr.precision;
  fit.log_posterior = -lr.value;
  fit.priors = priors;
  fit.dataset_digest = dataset_digest(data);
  fit.n_subjects = data.n_subjects();
  fit.n_rows = data.n_rows();
  fit.n_events = data.n_events();
  fit.n_quadrature = opts.n_quadrature;
  fit.seed = opts.seed;
  fit.diagnostics = {lr.converged, lr.grad_norm_inf, lr.iterations, lr.starts, lr.min_eigenvalue, lr.message};
  return fit;
}

}  // namespace dare

#include "dare/subset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <fmt/format.h>

#include "dare/error.hpp"

namespace dare {
namespace {

Eigen::LLT<Eigen::MatrixXd> factor_pd(const Eigen::MatrixXd& m, std::string_view what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw NumericalError(fmt::format("{} is not positive definite", what));
  return llt;
}

double log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

void ShrinkagePlan::validate() {
  std::vector<Issue> issues;
  if (n_pathogens == 0) issues.push_back({0, "", "shrinkage plan needs at least one pathogen"});
  if (n_covariates == 0) issues.push_back({0, "", "shrinkage plan needs at least the intercept"});
  if (n_dose_response > 1) issues.push_back({0, "", "at most one free dose-response parameter is supported"});
  if (shrink_sets.empty()) shrink_sets.resize(n_covariates);
  if (shrink_sets.size() != n_covariates) {
    issues.push_back({0, "", fmt::format("expected {} shrink sets, found {}", n_covariates, shrink_sets.size())});
  }
  if (pathogen_labels.empty()) {
    for (std::size_t k = 0; k < n_pathogens; ++k) pathogen_labels.push_back(fmt::format("pathogen{}", k + 1));
  }
  if (pathogen_labels.size() != n_pathogens) issues.push_back({0, "", "pathogen label count does not match K"});
  for (std::size_t j = 0; j < shrink_sets.size(); ++j) {
    auto& s = shrink_sets[j];
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    if (j == 0 && !s.empty()) issues.push_back({0, "", "intercepts cannot be shrunk"});
    if (s.size() == 1) {
      issues.push_back({0, "", fmt::format("shrink set for coefficient {} has a single pathogen", j + 1)});
    }
    for (std::size_t k : s) {
      if (k >= n_pathogens) issues.push_back({0, "", fmt::format("pathogen index {} out of range", k)});
    }
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

JointFit stack_fits(const std::vector<PosteriorFit>& fits, const ShrinkagePlan& plan) {
  if (fits.size() != plan.n_pathogens) {
    throw Error(fmt::format("plan expects {} pathogens, got {} fits", plan.n_pathogens, fits.size()));
  }
  if (fits.empty()) throw Error("no fits to stack");
  const PosteriorFit& first = fits.front();
  for (std::size_t k = 0; k < fits.size(); ++k) {
    const PosteriorFit& f = fits[k];
    if (!f.is_dare()) throw Error("only DARE fits can be combined");
    if (!f.converged()) throw NumericalError(fmt::format("fit for pathogen {} did not converge", plan.pathogen_labels[k]));
    if (f.covariate_names != first.covariate_names) {
      throw Error(fmt::format("covariate labels of pathogen {} differ from pathogen {}", plan.pathogen_labels[k],
                              plan.pathogen_labels[0]));
    }
    if (f.model != first.model) throw Error("all fits must use the same dose-response kernel");
  }
  const std::size_t nb = first.n_beta();
  const std::size_t ndr = first.spec().free_parameter_count();
  if (nb != plan.n_covariates || ndr != plan.n_dose_response) {
    throw Error("shrinkage plan dimensions do not match the fits");
  }
  const std::size_t bs = plan.block_size();
  const auto q = static_cast<Eigen::Index>(plan.dimension());

  JointFit joint;
  joint.n_pathogens = plan.n_pathogens;
  joint.block_size = bs;
  joint.pathogen_labels = plan.pathogen_labels;
  joint.covariate_names = first.covariate_names;
  joint.n_dose_response = ndr;
  joint.eta_mode = Eigen::VectorXd::Zero(q);
  joint.eta_precision = Eigen::MatrixXd::Zero(q, q);
  joint.prior_sd = Eigen::VectorXd::Constant(q, std::numeric_limits<double>::quiet_NaN());

  const auto n = static_cast<Eigen::Index>(bs);
  const auto inb = static_cast<Eigen::Index>(nb);
  for (std::size_t k = 0; k < fits.size(); ++k) {
    const PosteriorFit& f = fits[k];
    const ParamVector p = f.params();
    // Jacobian of eta (beta, theta_1, sigma^2) with respect to (beta, log sigma, log theta_1).
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd eta(n);
    for (Eigen::Index j = 0; j < inb; ++j) {
      jac(j, j) = 1.0;
      eta(j) = p.beta(j);
    }
    const double sigma2 = std::exp(2.0 * p.log_sigma);
    if (ndr == 1) {
      const double theta1 = std::exp(*p.log_theta1);
      eta(inb) = theta1;
      jac(inb, inb + 1) = theta1;
    }
    eta(n - 1) = sigma2;
    jac(n - 1, inb) = 2.0 * sigma2;

    const Eigen::MatrixXd jinv = jac.inverse();
    Eigen::MatrixXd omega = jinv.transpose() * f.precision * jinv;
    omega = 0.5 * (omega + omega.transpose());

    const Eigen::Index off = static_cast<Eigen::Index>(k) * n;
    joint.eta_mode.segment(off, n) = eta;
    joint.eta_precision.block(off, off, n, n) = omega;
    joint.prior_sd.segment(off, inb) = f.priors.beta_sd;
    for (std::size_t j = 0; j < nb; ++j) joint.labels.push_back(plan.pathogen_labels[k] + ":" + f.covariate_names[j]);
    if (ndr == 1) joint.labels.push_back(plan.pathogen_labels[k] + ":theta1");
    joint.labels.push_back(plan.pathogen_labels[k] + ":sigma2");
  }
  return joint;
}

Eigen::MatrixXd build_L(const ShrinkagePlan& plan_in) {
  ShrinkagePlan plan = plan_in;
  plan.validate();
  const std::size_t k_count = plan.n_pathogens;
  const std::size_t bs = plan.block_size();
  const auto q = static_cast<Eigen::Index>(plan.dimension());

  std::vector<Eigen::VectorXd> cols;
  auto unit = [&](std::size_t k, std::size_t j) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(q);
    c(static_cast<Eigen::Index>(k * bs + j)) = 1.0;
    return c;
  };
  for (std::size_t j = 0; j < bs; ++j) {
    const bool is_coefficient = j < plan.n_covariates;
    const auto& s = is_coefficient ? plan.shrink_sets[j] : std::vector<std::size_t>{};
    for (std::size_t k = 0; k < k_count; ++k) {
      if (!std::binary_search(s.begin(), s.end(), k)) cols.push_back(unit(k, j));
    }
    if (!s.empty()) {
      Eigen::VectorXd shared = Eigen::VectorXd::Zero(q);
      for (std::size_t k : s) shared(static_cast<Eigen::Index>(k * bs + j)) = 1.0;
      cols.push_back(std::move(shared));
    }
  }
  Eigen::MatrixXd L(q, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) L.col(static_cast<Eigen::Index>(c)) = cols[c];
  return L;
}

Eigen::MatrixXd projection(const Eigen::MatrixXd& L) {
  const Eigen::MatrixXd gram = L.transpose() * L;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success || (llt.matrixLLT().diagonal().array() <= 1e-12).any()) {
    throw NumericalError("L does not have full column rank");
  }
  Eigen::MatrixXd p = L * llt.solve(L.transpose());
  return 0.5 * (p + p.transpose());
}

JointFit tilt_posterior(const JointFit& joint, const Eigen::MatrixXd& L, double nu) {
  if (!(nu >= 0.0) || !std::isfinite(nu)) throw Error(fmt::format("nu must be non-negative (got {})", nu));
  if (L.rows() != joint.eta_mode.size()) throw Error("L does not match the joint fit dimension");
  JointFit out = joint;
  if (nu == 0.0) return out;
  const auto q = joint.eta_mode.size();
  const Eigen::MatrixXd penalty = Eigen::MatrixXd::Identity(q, q) - projection(L);
  out.eta_precision = joint.eta_precision + nu * penalty;
  out.eta_precision = 0.5 * (out.eta_precision + out.eta_precision.transpose());
  const auto llt = factor_pd(out.eta_precision, "tilted precision");
  out.eta_mode = llt.solve(joint.eta_precision * joint.eta_mode);
  return out;
}

NuSelection select_nu(const JointFit& joint, const Eigen::MatrixXd& L, std::vector<double> grid) {
  if (grid.empty()) throw Error("nu grid must not be empty");
  for (double nu : grid) {
    if (!(nu >= 0.0) || !std::isfinite(nu)) throw Error(fmt::format("nu grid values must be non-negative (got {})", nu));
  }
  grid.push_back(0.0);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  const auto q = joint.eta_mode.size();
  const Eigen::MatrixXd penalty = Eigen::MatrixXd::Identity(q, q) - projection(L);
  const Eigen::MatrixXd& omega = joint.eta_precision;
  const Eigen::VectorXd b = omega * joint.eta_mode;
  const double quad0 = joint.eta_mode.dot(b);
  const double logdet0 = log_det(factor_pd(omega, "joint precision"));

  // The penalty only touches shrunk coefficients; their priors are
  // independent zero-mean Gaussians, so the prior-side expectation is exact.
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < q; ++i) {
    if (penalty.row(i).cwiseAbs().maxCoeff() > 1e-12) support.push_back(i);
  }
  const auto ns = static_cast<Eigen::Index>(support.size());
  Eigen::MatrixXd penalty_s(ns, ns);
  Eigen::VectorXd prior_prec(ns);
  for (Eigen::Index a = 0; a < ns; ++a) {
    const double sd = joint.prior_sd(support[static_cast<std::size_t>(a)]);
    if (!(sd > 0.0)) throw Error("shrunk coordinate lacks a Gaussian prior scale");
    prior_prec(a) = 1.0 / (sd * sd);
    for (Eigen::Index c = 0; c < ns; ++c) {
      penalty_s(a, c) = penalty(support[static_cast<std::size_t>(a)], support[static_cast<std::size_t>(c)]);
    }
  }
  const double prior_logdet0 = prior_prec.array().log().sum();

  NuSelection sel;
  sel.table.reserve(grid.size());
  double best = -std::numeric_limits<double>::infinity();
  for (double nu : grid) {
    NuScore row;
    row.nu = nu;
    if (nu > 0.0) {
      const auto llt = factor_pd(omega + nu * penalty, "tilted precision");
      row.log_posterior_tilt = 0.5 * logdet0 - 0.5 * log_det(llt) - 0.5 * (quad0 - b.dot(llt.solve(b)));
      Eigen::MatrixXd prior_tilted = nu * penalty_s;
      prior_tilted.diagonal() += prior_prec;
      row.log_prior_tilt = 0.5 * prior_logdet0 - 0.5 * log_det(factor_pd(prior_tilted, "tilted prior precision"));
      row.score = row.log_posterior_tilt - row.log_prior_tilt;
    }
    if (row.score > best) {
      best = row.score;
      sel.nu_star = nu;
    }
    sel.table.push_back(row);
  }
  return sel;
}

std::vector<double> default_nu_grid() {
  std::vector<double> grid{0.0};
  constexpr int n = 25;
  for (int i = 0; i < n; ++i) grid.push_back(std::pow(10.0, -2.0 + 8.0 * i / (n - 1)));
  return grid;
}

std::vector<SummaryRow> summarize_joint(const JointFit& joint, std::size_t pathogen, double level) {
  if (pathogen >= joint.n_pathogens) throw Error("pathogen index out of range");
  const auto llt = factor_pd(joint.eta_precision, "joint precision");
  const auto q = joint.eta_mode.size();
  const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(q, q));
  std::vector<SummaryRow> rows;
  const auto off = static_cast<Eigen::Index>(pathogen * joint.block_size);
  for (std::size_t j = 0; j < joint.covariate_names.size(); ++j) {
    const Eigen::Index i = off + static_cast<Eigen::Index>(j);
    rows.push_back(summary_row(joint.covariate_names[j], joint.eta_mode(i), std::sqrt(cov(i, i)), level,
                               joint.covariate_names[j] != kInterceptName));
  }
  return rows;
}

}  // namespace dare

#pragma once

// Multi-pathogen posterior shrinkage toward a linear subspace.
//
// Per-pathogen Laplace fits are stacked into one Gaussian N(m, Omega^-1) over
//   eta = (beta_(1)1..beta_(1)J, theta_(1), sigma^2_(1), ..., sigma^2_(K)),
// the prior is tilted by exp(-(nu/2) eta'(I - P) eta) with P the projector
// onto span(L), and the tilted posterior is
//   Omega~ = Omega + nu (I - P),   m~ = Omega~^-1 Omega m.

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dare/inference.hpp"

namespace dare {

struct ShrinkagePlan {
  std::size_t n_pathogens = 0;      // K
  std::size_t n_covariates = 0;     // J, intercept included
  std::size_t n_dose_response = 0;  // free dose-response parameters (0 or 1)
  // shrink_sets[j] holds 0-based pathogen indices whose j-th coefficients
  // share one column of L. shrink_sets[0] (intercept) must be empty.
  std::vector<std::vector<std::size_t>> shrink_sets;
  std::vector<std::string> pathogen_labels;

  std::size_t block_size() const { return n_covariates + n_dose_response + 1; }  // J'
  std::size_t dimension() const { return n_pathogens * block_size(); }            // Q

  // Sorts and de-duplicates the sets; throws on invariant violations.
  void validate();
};

struct JointFit {
  std::size_t n_pathogens = 0;
  std::size_t block_size = 0;
  std::vector<std::string> labels;  // "<pathogen>:<parameter>"
  std::vector<std::string> pathogen_labels;
  std::vector<std::string> covariate_names;
  std::size_t n_dose_response = 0;
  Eigen::VectorXd eta_mode;
  Eigen::MatrixXd eta_precision;
  // Prior sd of each coefficient in eta (NaN for theta and sigma^2). Only
  // coefficients touched by (I - P) enter the Bayes-factor normalizer, and
  // those always carry Gaussian priors.
  Eigen::VectorXd prior_sd;
};

// Maps each fit's mode to (beta, theta_1, sigma^2) and its precision through
// the delta method, then assembles a block-diagonal joint fit.
JointFit stack_fits(const std::vector<PosteriorFit>& fits, const ShrinkagePlan& plan);

// Q x C selector matrix: intercept selectors, then for each covariate the
// identity selectors of pathogens outside S_j followed by one shared column
// for S_j, then theta and sigma^2 selectors.
Eigen::MatrixXd build_L(const ShrinkagePlan& plan);

// L (L'L)^-1 L'. Throws if L is rank deficient.
Eigen::MatrixXd projection(const Eigen::MatrixXd& L);

JointFit tilt_posterior(const JointFit& joint, const Eigen::MatrixXd& L, double nu);

struct NuScore {
  double nu = 0.0;
  double log_posterior_tilt = 0.0;  // log E_post[tilt]
  double log_prior_tilt = 0.0;      // log E_prior[tilt]
  double score = 0.0;               // log Bayes factor, posterior minus prior term
};

struct NuSelection {
  double nu_star = 0.0;
  std::vector<NuScore> table;
};

// Evaluates the approximate log Bayes factor of the tilted versus untilted
// model at each grid value and returns the maximizer (ties go to the
// smaller nu). nu = 0 is always added to the grid.
NuSelection select_nu(const JointFit& joint, const Eigen::MatrixXd& L, std::vector<double> grid);

// {0} and 25 log-spaced values from 1e-2 to 1e6.
std::vector<double> default_nu_grid();

// Rate-ratio rows for pathogen k from a (possibly tilted) joint fit.
std::vector<SummaryRow> summarize_joint(const JointFit& joint, std::size_t pathogen, double level = 0.95);

}  // namespace dare

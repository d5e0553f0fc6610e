#pragma once

// Generative simulation of longitudinal infection data and the credible
// interval coverage study comparing DARE with the cloglog GLM.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dare/core_data.hpp"
#include "dare/inference.hpp"

namespace dare {

struct SimConfig {
  std::size_t n_subjects = 215;
  std::vector<double> visit_days{1, 3, 5, 7, 14};
  Eigen::VectorXd true_beta = (Eigen::VectorXd(4) << -4.6, 0.0, 0.5, 1.0).finished();
  double sigma = 1.0;
  Kernel dgp_kernel = Kernel::BetaPoisson;
  double theta1 = 1.0;  // ignored for the exponential kernel
  std::uint64_t seed = 1;

  std::size_t n_covariates() const { return static_cast<std::size_t>(true_beta.size()) - 1; }
  // Interval lengths: first visit day, then gaps between visits.
  std::vector<double> interval_lengths() const;
  std::vector<std::string> covariate_names() const;  // x1, x2, ...
  void validate() const;
};

struct SimulatedData {
  Dataset data;
  SimConfig config;
};

SimulatedData simulate_dataset(const SimConfig& config);

enum class CoverageModel { Dare, Glm };
std::string_view to_string(CoverageModel model);

struct CoverageOptions {
  int n_replicates = 200;
  double level = 0.95;
  std::vector<CoverageModel> models{CoverageModel::Dare, CoverageModel::Glm};
  Kernel dare_kernel = Kernel::BetaPoisson;  // DARE is fitted with this kernel whatever the DGP
  FitOptions fit;
  int workers = 1;
  double max_unconverged_fraction = 0.05;
};

struct CoverageRow {
  std::string model;
  std::string dgp;
  double sigma = 0.0;
  std::optional<double> theta1;
  std::string coefficient;
  double truth = 0.0;
  double coverage = 0.0;
  double mean_estimate = 0.0;
  int n_converged = 0;
};

struct ReplicateResult {
  bool converged = false;
  Eigen::VectorXd estimate;  // non-intercept coefficients
  std::vector<bool> covered;
};

struct CoverageReport {
  SimConfig config;
  CoverageOptions options;
  std::vector<CoverageRow> rows;
  // replicates[m][r]: model m (in options.models order), replicate r.
  std::vector<std::vector<ReplicateResult>> replicates;

  const CoverageRow& row(std::string_view model, std::string_view coefficient) const;
};

// Per-replicate seeds are derived from config.seed, so the report does not
// depend on the worker count. Throws NumericalError when more than
// max_unconverged_fraction of a model's replicates fail to converge.
CoverageReport run_coverage(const SimConfig& config, const CoverageOptions& options);

// The twelve data-generating cells: exponential with sigma in {1,2,3} and
// beta-Poisson with sigma, theta_1 in {1,2,3}.
std::vector<SimConfig> coverage_grid(std::uint64_t seed);

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

}  // namespace dare

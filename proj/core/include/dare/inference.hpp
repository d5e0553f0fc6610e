#pragma once

// MAP fitting, Laplace approximation and posterior summaries.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "dare/core_data.hpp"
#include "dare/quadrature.hpp"

namespace dare {

enum class ModelKind { DareExponential, DareBetaPoisson, CloglogGlm };

std::string_view to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view name);
ModelKind model_kind_for(const DoseResponseSpec& spec);

struct FitOptions {
  int n_quadrature = kDefaultQuadratureNodes;
  int max_iter = 500;
  int restarts = 2;
  std::uint64_t seed = 1;
};

struct FitDiagnostics {
  bool converged = false;
  double grad_norm_inf = 0.0;
  int iterations = 0;
  int starts = 0;
  double min_eigenvalue = 0.0;
  std::string message;
};

// Laplace approximation N(mode, precision^-1) of a posterior, on the
// optimization scale (beta, log sigma, log theta_1); GLM fits carry beta only.
struct PosteriorFit {
  ModelKind model = ModelKind::DareBetaPoisson;
  std::vector<std::string> covariate_names;  // includes the intercept
  std::vector<std::string> labels;           // aligned with mode
  Eigen::VectorXd mode;
  Eigen::MatrixXd precision;
  double log_posterior = 0.0;

  PriorSpec priors;
  std::string dataset_digest;
  std::size_t n_subjects = 0;
  std::size_t n_rows = 0;
  std::size_t n_events = 0;
  int n_quadrature = kDefaultQuadratureNodes;
  std::uint64_t seed = 0;
  FitDiagnostics diagnostics;

  bool converged() const { return diagnostics.converged; }
  std::size_t n_beta() const { return covariate_names.size(); }
  bool is_dare() const { return model != ModelKind::CloglogGlm; }
  DoseResponseSpec spec() const;   // throws for GLM fits
  ParamVector params() const;      // throws for GLM fits
  Eigen::VectorXd beta() const { return mode.head(static_cast<Eigen::Index>(n_beta())); }
  Eigen::MatrixXd covariance() const;
};

PosteriorFit fit_map(const Dataset& data, const DoseResponseSpec& spec, const PriorSpec& priors,
                     const FitOptions& opts = {});

struct SummaryRow {
  std::string label;
  double mode = 0.0;  // log rate ratio
  double sd = 0.0;
  double rate_ratio_point = 1.0;
  double ci_low = 1.0;
  double ci_high = 1.0;
  double prob_rr_gt_1 = 0.5;
  bool interpretable = true;  // false for the intercept
};

// Rate-ratio table for the regression coefficients. Throws on unconverged fits.
std::vector<SummaryRow> summarize(const PosteriorFit& fit, double level = 0.95);

// One row from a Gaussian marginal; shared with the multi-pathogen summaries.
SummaryRow summary_row(std::string label, double mode, double sd, double level, bool interpretable);

enum class Horizon { BySchedule, SingleInterval };

std::string_view to_string(Horizon horizon);
Horizon horizon_from_string(std::string_view name);

struct IncidenceOptions {
  Horizon horizon = Horizon::BySchedule;
  int draws = 4000;
  std::uint64_t seed = 1;
  double level = 0.95;
};

struct IncidenceSummary {
  double at_mode = 0.0;
  double median = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

// Probability of at least one infection over the schedule of interval
// lengths for covariate row x (intercept included), propagated through
// `draws` samples from the Laplace posterior.
IncidenceSummary predict_incidence(const PosteriorFit& fit, std::span<const double> x,
                                   std::span<const double> schedule, const IncidenceOptions& opts = {});

// Incidence for one parameter vector (optimization scale).
double incidence_at(const PosteriorFit& fit, const Eigen::VectorXd& params, std::span<const double> x,
                    std::span<const double> schedule, Horizon horizon, const QuadratureRule& rule);

double normal_quantile(double p);
double normal_cdf(double x);

}  // namespace dare

#pragma once

// Domain types shared by every fitting module: the longitudinal dataset,
// dose-response kernel selection, parameter layout and priors.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace dare {

inline constexpr std::string_view kInterceptName = "(Intercept)";

enum class Kernel { Exponential, BetaPoisson };

std::string_view to_string(Kernel kernel);
Kernel kernel_from_string(std::string_view name);

// Which dose-response model is used and the value at which its
// intercept-confounded parameter (theta for the exponential model, theta_2
// for beta-Poisson) is pinned.
struct DoseResponseSpec {
  Kernel kernel = Kernel::BetaPoisson;
  double fixed_value = 1.0;

  static DoseResponseSpec exponential() { return {Kernel::Exponential, 1.0}; }
  static DoseResponseSpec beta_poisson() { return {Kernel::BetaPoisson, 1.0}; }

  std::size_t free_parameter_count() const { return kernel == Kernel::BetaPoisson ? 1 : 0; }
  void validate() const;

  friend bool operator==(const DoseResponseSpec&, const DoseResponseSpec&) = default;
};

// A row as read from input, before validation. Missing numeric values are NaN.
struct RawRow {
  std::string subject_id;
  double interval_index = 0.0;
  double tau = 0.0;
  double outcome = 0.0;
  std::vector<double> covariates;  // without the intercept
};

using DesignMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Validated longitudinal binary data. Rows are grouped by subject (in order of
// first appearance) and sorted by interval index; column 0 of the design is
// the synthesized intercept.
class Dataset {
 public:
  // A dataset with no observations, used for prior-only computations.
  static Dataset empty(std::vector<std::string> covariate_names);

  std::size_t n_rows() const { return tau_.size(); }
  std::size_t n_subjects() const { return subject_ids_.size(); }
  std::size_t n_covariates() const { return covariate_names_.size(); }

  const std::vector<std::string>& covariate_names() const { return covariate_names_; }
  const DesignMatrix& design() const { return design_; }
  std::span<const double> covariates(std::size_t row) const {
    return {design_.row(static_cast<Eigen::Index>(row)).data(), n_covariates()};
  }
  std::span<const double> tau() const { return tau_; }
  std::span<const int> outcome() const { return outcome_; }
  std::span<const int> interval_index() const { return interval_; }
  std::span<const std::size_t> subject_of_row() const { return subject_; }
  const std::vector<std::string>& subject_ids() const { return subject_ids_; }

  // Half-open row range [first, last) belonging to subject i.
  std::pair<std::size_t, std::size_t> subject_rows(std::size_t i) const {
    return {subject_offsets_[i], subject_offsets_[i + 1]};
  }

  std::size_t n_events() const;

  friend Dataset validate_dataset(std::span<const RawRow> rows,
                                  std::vector<std::string> covariate_names);

 private:
  Dataset() = default;

  std::vector<std::string> covariate_names_;
  DesignMatrix design_;
  std::vector<double> tau_;
  std::vector<int> outcome_;
  std::vector<int> interval_;
  std::vector<std::size_t> subject_;
  std::vector<std::string> subject_ids_;
  std::vector<std::size_t> subject_offsets_{0};
};

// Checks every dataset invariant and builds a Dataset. `covariate_names`
// excludes the intercept. Throws ValidationError listing every problem with
// its 1-based row.
Dataset validate_dataset(std::span<const RawRow> rows, std::vector<std::string> covariate_names);

// Inverse of validate_dataset, for round-tripping through CSV.
std::vector<RawRow> to_raw_rows(const Dataset& data);

// Per-pathogen unknowns on the unconstrained optimization scale.
struct ParamVector {
  Eigen::VectorXd beta;
  double log_sigma = 0.0;
  std::optional<double> log_theta1;

  std::size_t size() const { return static_cast<std::size_t>(beta.size()) + 1 + (log_theta1 ? 1 : 0); }
  double sigma() const;
  std::optional<double> theta1() const;

  // Layout: beta..., log_sigma, [log_theta1].
  Eigen::VectorXd flatten() const;
  static ParamVector from_flat(const Eigen::VectorXd& flat, std::size_t n_beta, const DoseResponseSpec& spec);

  bool is_finite() const;
};

struct NaturalParams {
  Eigen::VectorXd beta;
  double sigma = 1.0;
  std::optional<double> theta1;
};

ParamVector param_pack(Eigen::VectorXd beta, double sigma, std::optional<double> theta1 = std::nullopt);
NaturalParams param_unpack(const ParamVector& params);

// Labels aligned with ParamVector::flatten().
std::vector<std::string> param_labels(const std::vector<std::string>& covariate_names,
                                      const DoseResponseSpec& spec);

struct GammaPrior {
  double shape = 2.0;
  double rate = 2.0;
};

struct ExponentialPrior {
  double mean = 1.0;
};

struct PriorSpec {
  Eigen::VectorXd beta_sd;
  GammaPrior sigma;
  ExponentialPrior theta1;

  // N(0, 10^2) on the intercept, N(0, 2.5^2) on the other coefficients,
  // gamma(2, 2) on sigma, exponential(mean 1) on theta_1.
  static PriorSpec defaults(std::size_t n_beta);

  void validate(std::size_t n_beta) const;
};

}  // namespace dare

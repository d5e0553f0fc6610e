#include "dare/core_data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include <fmt/format.h>

#include "dare/error.hpp"

namespace dare {

ValidationError::ValidationError(std::vector<Issue> issues)
    : Error([&] {
        std::string msg = "invalid input";
        for (const auto& issue : issues) {
          msg += "\n ";
          if (issue.row > 0) msg += fmt::format(" row {}", issue.row);
          if (!issue.column.empty()) msg += fmt::format(" [{}]", issue.column);
          msg += (issue.row > 0 || !issue.column.empty() ? ": " : " ") + issue.message;
        }
        return msg;
      }()),
      issues_(std::move(issues)) {}

std::string_view to_string(Kernel kernel) {
  switch (kernel) {
    case Kernel::Exponential: return "exponential";
    case Kernel::BetaPoisson: return "beta-poisson";
  }
  return "unknown";
}

Kernel kernel_from_string(std::string_view name) {
  if (name == "exponential" || name == "exp") return Kernel::Exponential;
  if (name == "beta-poisson" || name == "bp" || name == "beta_poisson") return Kernel::BetaPoisson;
  throw Error(fmt::format("unknown dose-response kernel '{}'", name));
}

void DoseResponseSpec::validate() const {
  // Any other value is absorbed by the intercept, so it is pinned.
  if (fixed_value != 1.0) {
    throw Error(fmt::format("dose-response fixed parameter must be 1 (got {})", fixed_value));
  }
}

Dataset Dataset::empty(std::vector<std::string> covariate_names) {
  Dataset d;
  d.covariate_names_.reserve(covariate_names.size() + 1);
  d.covariate_names_.emplace_back(kInterceptName);
  for (auto& n : covariate_names) d.covariate_names_.push_back(std::move(n));
  d.design_.resize(0, static_cast<Eigen::Index>(d.covariate_names_.size()));
  return d;
}

std::size_t Dataset::n_events() const {
  return static_cast<std::size_t>(std::count(outcome_.begin(), outcome_.end(), 1));
}

Dataset validate_dataset(std::span<const RawRow> rows, std::vector<std::string> covariate_names) {
  std::vector<Issue> issues;
  const std::size_t n_cov = covariate_names.size();

  for (std::size_t i = 0; i < covariate_names.size(); ++i) {
    if (covariate_names[i] == kInterceptName) {
      issues.push_back({0, covariate_names[i], "intercept column is synthesized and must not be supplied"});
    }
  }
  if (rows.empty()) issues.push_back({0, "", "dataset has no observations"});

  // Group row positions by subject in order of first appearance.
  std::unordered_map<std::string, std::size_t> subject_index;
  std::vector<std::string> ids;
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const RawRow& row = rows[r];
    const std::size_t line = r + 1;
    if (row.subject_id.empty()) issues.push_back({line, "subject_id", "missing subject identifier"});
    if (std::isnan(row.interval_index)) {
      issues.push_back({line, "t", "missing value"});
    } else if (row.interval_index < 1 || row.interval_index != std::floor(row.interval_index)) {
      issues.push_back({line, "t", "interval index must be a positive integer"});
    }
    if (std::isnan(row.tau)) {
      issues.push_back({line, "tau", "missing value"});
    } else if (!std::isfinite(row.tau) || row.tau <= 0.0) {
      issues.push_back({line, "tau", "non-positive interval length"});
    }
    if (std::isnan(row.outcome)) {
      issues.push_back({line, "y", "missing value"});
    } else if (row.outcome != 0.0 && row.outcome != 1.0) {
      issues.push_back({line, "y", "outcome must be 0 or 1"});
    }
    if (row.covariates.size() != n_cov) {
      issues.push_back({line, "", fmt::format("ragged covariates: expected {} values, found {}", n_cov,
                                              row.covariates.size())});
    } else {
      for (std::size_t j = 0; j < n_cov; ++j) {
        if (std::isnan(row.covariates[j])) {
          issues.push_back({line, covariate_names[j], "missing value"});
        } else if (!std::isfinite(row.covariates[j])) {
          issues.push_back({line, covariate_names[j], "non-finite covariate"});
        }
      }
    }
    auto [it, inserted] = subject_index.try_emplace(row.subject_id, ids.size());
    if (inserted) {
      ids.push_back(row.subject_id);
      members.emplace_back();
    }
    members[it->second].push_back(r);
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));

  for (auto& m : members) {
    std::stable_sort(m.begin(), m.end(), [&](std::size_t a, std::size_t b) {
      return rows[a].interval_index < rows[b].interval_index;
    });
    for (std::size_t k = 0; k < m.size(); ++k) {
      const RawRow& row = rows[m[k]];
      const std::size_t line = m[k] + 1;
      if (row.interval_index != static_cast<double>(k + 1)) {
        issues.push_back({line, "t",
                          fmt::format("subject '{}': interval indices must run 1..T without gaps "
                                      "(expected {}, found {})",
                                      row.subject_id, k + 1, row.interval_index)});
        break;
      }
      if (row.outcome == 1.0 && k + 1 != m.size()) {
        issues.push_back({m[k + 1] + 1, "y",
                          fmt::format("subject '{}': observation after detected infection", row.subject_id)});
        break;
      }
    }
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));

  Dataset d = Dataset::empty(std::move(covariate_names));
  const auto n_rows = static_cast<Eigen::Index>(rows.size());
  d.design_.resize(n_rows, static_cast<Eigen::Index>(n_cov + 1));
  d.tau_.reserve(rows.size());
  d.outcome_.reserve(rows.size());
  d.interval_.reserve(rows.size());
  d.subject_.reserve(rows.size());
  d.subject_ids_ = std::move(ids);
  Eigen::Index out = 0;
  for (std::size_t s = 0; s < members.size(); ++s) {
    for (std::size_t r : members[s]) {
      const RawRow& row = rows[r];
      d.design_(out, 0) = 1.0;
      for (std::size_t j = 0; j < n_cov; ++j) d.design_(out, static_cast<Eigen::Index>(j + 1)) = row.covariates[j];
      d.tau_.push_back(row.tau);
      d.outcome_.push_back(static_cast<int>(row.outcome));
      d.interval_.push_back(static_cast<int>(row.interval_index));
      d.subject_.push_back(s);
      ++out;
    }
    d.subject_offsets_.push_back(static_cast<std::size_t>(out));
  }
  return d;
}

std::vector<RawRow> to_raw_rows(const Dataset& data) {
  std::vector<RawRow> rows;
  rows.reserve(data.n_rows());
  const std::size_t n_cov = data.n_covariates();
  for (std::size_t r = 0; r < data.n_rows(); ++r) {
    RawRow row;
    row.subject_id = data.subject_ids()[data.subject_of_row()[r]];
    row.interval_index = data.interval_index()[r];
    row.tau = data.tau()[r];
    row.outcome = data.outcome()[r];
    auto x = data.covariates(r);
    row.covariates.assign(x.begin() + 1, x.begin() + static_cast<std::ptrdiff_t>(n_cov));
    rows.push_back(std::move(row));
  }
  return rows;
}

double ParamVector::sigma() const { return std::exp(log_sigma); }

std::optional<double> ParamVector::theta1() const {
  if (!log_theta1) return std::nullopt;
  return std::exp(*log_theta1);
}

Eigen::VectorXd ParamVector::flatten() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(size()));
  flat.head(beta.size()) = beta;
  flat(beta.size()) = log_sigma;
  if (log_theta1) flat(beta.size() + 1) = *log_theta1;
  return flat;
}

ParamVector ParamVector::from_flat(const Eigen::VectorXd& flat, std::size_t n_beta, const DoseResponseSpec& spec) {
  const auto expected = static_cast<Eigen::Index>(n_beta + 1 + spec.free_parameter_count());
  if (flat.size() != expected) {
    throw Error(fmt::format("parameter vector has length {}, expected {}", flat.size(), expected));
  }
  ParamVector p;
  const auto nb = static_cast<Eigen::Index>(n_beta);
  p.beta = flat.head(nb);
  p.log_sigma = flat(nb);
  if (spec.kernel == Kernel::BetaPoisson) p.log_theta1 = flat(nb + 1);
  return p;
}

bool ParamVector::is_finite() const {
  return beta.allFinite() && std::isfinite(log_sigma) && (!log_theta1 || std::isfinite(*log_theta1));
}

ParamVector param_pack(Eigen::VectorXd beta, double sigma, std::optional<double> theta1) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw Error(fmt::format("sigma must be positive (got {})", sigma));
  if (theta1 && (!(*theta1 > 0.0) || !std::isfinite(*theta1))) {
    throw Error(fmt::format("theta1 must be positive (got {})", *theta1));
  }
  ParamVector p;
  p.beta = std::move(beta);
  p.log_sigma = std::log(sigma);
  if (theta1) p.log_theta1 = std::log(*theta1);
  return p;
}

NaturalParams param_unpack(const ParamVector& params) {
  return {params.beta, params.sigma(), params.theta1()};
}

std::vector<std::string> param_labels(const std::vector<std::string>& covariate_names,
                                      const DoseResponseSpec& spec) {
  std::vector<std::string> labels = covariate_names;
  labels.emplace_back("log_sigma");
  if (spec.kernel == Kernel::BetaPoisson) labels.emplace_back("log_theta1");
  return labels;
}

PriorSpec PriorSpec::defaults(std::size_t n_beta) {
  PriorSpec p;
  p.beta_sd = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_beta), 2.5);
  if (n_beta > 0) p.beta_sd(0) = 10.0;
  return p;
}

void PriorSpec::validate(std::size_t n_beta) const {
  if (static_cast<std::size_t>(beta_sd.size()) != n_beta) {
    throw Error(fmt::format("prior has {} coefficient scales, model has {} coefficients", beta_sd.size(), n_beta));
  }
  if (!((beta_sd.array() > 0.0).all() && beta_sd.allFinite())) throw Error("prior coefficient scales must be positive");
  if (!(sigma.shape > 0.0 && sigma.rate > 0.0)) throw Error("sigma gamma prior needs positive shape and rate");
  if (!(theta1.mean > 0.0)) throw Error("theta1 exponential prior needs a positive mean");
}

}  // namespace dare

#pragma once

// File formats: long-format dataset CSV, JSON artifacts for fits, joint fits
// and simulation truth, and CSV tables for summaries and coverage.

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dare/core_data.hpp"
#include "dare/inference.hpp"
#include "dare/simulation.hpp"
#include "dare/subset.hpp"

namespace dare {

std::string sha256_hex(std::string_view bytes);

// Shortest decimal form that round-trips to the same double.
std::string format_number(double value);

// Header: subject_id,t,tau,y,<covariates...>. The intercept is never written.
std::string dataset_to_csv(const Dataset& data);
// Throws ValidationError with 1-based data-row locations.
Dataset dataset_from_csv(std::string_view text);

// SHA-256 of the canonical CSV form.
std::string dataset_digest(const Dataset& data);

nlohmann::json to_json(const PriorSpec& priors);
PriorSpec prior_from_json(const nlohmann::json& j);

nlohmann::json to_json(const PosteriorFit& fit);
PosteriorFit fit_from_json(const nlohmann::json& j);

nlohmann::json to_json(const JointFit& joint);
JointFit joint_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SimConfig& config);
SimConfig sim_config_from_json(const nlohmann::json& j);

std::string summary_to_csv(const std::vector<SummaryRow>& rows, double level);
std::string nu_scores_to_csv(const NuSelection& selection);
// Columns: model,dgp,sigma,theta1,coefficient,truth,coverage,mean_estimate,n_converged
std::string coverage_to_csv(const std::vector<CoverageRow>& rows);

// Fixed-width rate-ratio table for terminals, two decimals.
std::string format_summary_table(const std::vector<SummaryRow>& rows, double level);

struct IncidenceRow {
  std::string profile;
  Horizon horizon = Horizon::BySchedule;
  double days = 0.0;
  IncidenceSummary summary;
  double level = 0.95;
  double ratio_to_first = 1.0;  // at_mode incidence relative to the first profile
};

// Columns: profile,horizon,days,at_mode,median,ci_low,ci_high,level,ratio_to_first
std::string incidence_to_csv(const std::vector<IncidenceRow>& rows);

}  // namespace dare

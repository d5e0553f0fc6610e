#include "dare/serialization.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "dare/csv.hpp"
#include "dare/error.hpp"

namespace dare {

using nlohmann::json;

std::string format_number(double value) {
  if (std::isnan(value)) return "NA";
  if (std::isinf(value)) return value > 0 ? "Inf" : "-Inf";
  return fmt::format("{}", value);
}

std::string dataset_to_csv(const Dataset& data) {
  std::string out;
  std::vector<std::string> header{"subject_id", "t", "tau", "y"};
  for (std::size_t j = 1; j < data.n_covariates(); ++j) header.push_back(data.covariate_names()[j]);
  csv::append_record(out, header);
  for (const RawRow& row : to_raw_rows(data)) {
    std::vector<std::string> fields{row.subject_id, fmt::format("{}", static_cast<long>(row.interval_index)),
                                    format_number(row.tau), fmt::format("{}", static_cast<int>(row.outcome))};
    for (double x : row.covariates) fields.push_back(format_number(x));
    csv::append_record(out, fields);
  }
  return out;
}

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

double parse_number(const std::string& s, std::size_t row, const std::string& column, std::vector<Issue>& issues) {
  if (s.empty() || s == "NA" || s == "NaN" || s == "nan") return kMissing;
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  if (first < last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    issues.push_back({row, column, fmt::format("'{}' is not a number", s)});
    return 0.0;
  }
  return v;
}

}  // namespace

Dataset dataset_from_csv(std::string_view text) {
  std::vector<csv::Record> records = csv::parse(text);
  if (records.empty()) throw ValidationError({{0, "", "empty input: header required"}});
  const csv::Record& header = records.front();
  static const std::vector<std::string> required{"subject_id", "t", "tau", "y"};
  if (header.size() < required.size() || !std::equal(required.begin(), required.end(), header.begin())) {
    throw ValidationError({{0, "", "header must start with subject_id,t,tau,y"}});
  }
  std::vector<std::string> covariates(header.begin() + 4, header.end());

  std::vector<Issue> issues;
  std::vector<RawRow> rows;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const csv::Record& rec = records[i];
    if (rec.size() == 1 && rec[0].empty()) continue;  // blank line
    const std::size_t row = rows.size() + 1;
    if (rec.size() != header.size()) {
      issues.push_back({row, "", fmt::format("expected {} fields, found {}", header.size(), rec.size())});
      rows.emplace_back();
      continue;
    }
    RawRow r;
    r.subject_id = rec[0];
    r.interval_index = parse_number(rec[1], row, "t", issues);
    r.tau = parse_number(rec[2], row, "tau", issues);
    r.outcome = parse_number(rec[3], row, "y", issues);
    for (std::size_t j = 4; j < rec.size(); ++j) r.covariates.push_back(parse_number(rec[j], row, header[j], issues));
    rows.push_back(std::move(r));
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return validate_dataset(rows, std::move(covariates));
}

std::string dataset_digest(const Dataset& data) { return sha256_hex(dataset_to_csv(data)); }

namespace {

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vector_from(const json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].is_null() ? kMissing : a[i].get<double>();
  return v;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) a.push_back(m(r, c));
  return a;
}

Eigen::MatrixXd matrix_from(const json& a, Eigen::Index n) {
  if (static_cast<Eigen::Index>(a.size()) != n * n) throw Error("matrix size does not match its dimension");
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = a[static_cast<std::size_t>(r * n + c)].get<double>();
  return m;
}

}  // namespace

json to_json(const PriorSpec& priors) {
  return {{"beta_sd", vector_json(priors.beta_sd)},
          {"sigma_gamma", {{"shape", priors.sigma.shape}, {"rate", priors.sigma.rate}}},
          {"theta1_exponential", {{"mean", priors.theta1.mean}}}};
}

PriorSpec prior_from_json(const json& j) {
  PriorSpec p;
  p.beta_sd = vector_from(j.at("beta_sd"));
  if (j.contains("sigma_gamma")) {
    p.sigma.shape = j["sigma_gamma"].at("shape").get<double>();
    p.sigma.rate = j["sigma_gamma"].at("rate").get<double>();
  }
  if (j.contains("theta1_exponential")) p.theta1.mean = j["theta1_exponential"].at("mean").get<double>();
  return p;
}

json to_json(const PosteriorFit& fit) {
  const auto& d = fit.diagnostics;
  return {
      {"format", "dare-posterior-fit/1"},
      {"model", to_string(fit.model)},
      {"labels", fit.labels},
      {"covariate_names", fit.covariate_names},
      {"mode", vector_json(fit.mode)},
      {"precision", matrix_json(fit.precision)},
      {"log_posterior", fit.log_posterior},
      {"meta",
       {{"kernel", to_string(fit.model)},
        {"fixed_dose_response_value", 1.0},
        {"priors", to_json(fit.priors)},
        {"dataset_digest", fit.dataset_digest},
        {"n_subjects", fit.n_subjects},
        {"n_rows", fit.n_rows},
        {"n_events", fit.n_events},
        {"n_quadrature", fit.n_quadrature},
        {"seed", fit.seed}}},
      {"diagnostics",
       {{"converged", d.converged},
        {"grad_norm_inf", d.grad_norm_inf},
        {"iterations", d.iterations},
        {"starts", d.starts},
        {"min_eigenvalue", d.min_eigenvalue},
        {"message", d.message}}},
  };
}

PosteriorFit fit_from_json(const json& j) {
  PosteriorFit fit;
  fit.model = model_kind_from_string(j.at("model").get<std::string>());
  fit.labels = j.at("labels").get<std::vector<std::string>>();
  fit.covariate_names = j.at("covariate_names").get<std::vector<std::string>>();
  fit.mode = vector_from(j.at("mode"));
  fit.precision = matrix_from(j.at("precision"), fit.mode.size());
  fit.log_posterior = j.value("log_posterior", 0.0);
  const json& m = j.at("meta");
  fit.priors = prior_from_json(m.at("priors"));
  fit.dataset_digest = m.value("dataset_digest", "");
  fit.n_subjects = m.value("n_subjects", std::size_t{0});
  fit.n_rows = m.value("n_rows", std::size_t{0});
  fit.n_events = m.value("n_events", std::size_t{0});
  fit.n_quadrature = m.value("n_quadrature", kDefaultQuadratureNodes);
  fit.seed = m.value("seed", std::uint64_t{0});
  const json& d = j.at("diagnostics");
  fit.diagnostics.converged = d.at("converged").get<bool>();
  fit.diagnostics.grad_norm_inf = d.value("grad_norm_inf", 0.0);
  fit.diagnostics.iterations = d.value("iterations", 0);
  fit.diagnostics.starts = d.value("starts", 0);
  fit.diagnostics.min_eigenvalue = d.value("min_eigenvalue", 0.0);
  fit.diagnostics.message = d.value("message", "");
  if (fit.labels.size() != static_cast<std::size_t>(fit.mode.size())) throw Error("fit labels do not match mode");
  return fit;
}

json to_json(const JointFit& joint) {
  json prior_sd = json::array();
  for (Eigen::Index i = 0; i < joint.prior_sd.size(); ++i) {
    if (std::isnan(joint.prior_sd(i))) prior_sd.push_back(nullptr);
    else prior_sd.push_back(joint.prior_sd(i));
  }
  return {{"format", "dare-joint-fit/1"},
          {"n_pathogens", joint.n_pathogens},
          {"block_size", joint.block_size},
          {"n_dose_response", joint.n_dose_response},
          {"pathogen_labels", joint.pathogen_labels},
          {"covariate_names", joint.covariate_names},
          {"labels", joint.labels},
          {"eta_mode", vector_json(joint.eta_mode)},
          {"eta_precision", matrix_json(joint.eta_precision)},
          {"prior_sd", prior_sd}};
}

JointFit joint_from_json(const json& j) {
  JointFit joint;
  joint.n_pathogens = j.at("n_pathogens").get<std::size_t>();
  joint.block_size = j.at("block_size").get<std::size_t>();
  joint.n_dose_response = j.at("n_dose_response").get<std::size_t>();
  joint.pathogen_labels = j.at("pathogen_labels").get<std::vector<std::string>>();
  joint.covariate_names = j.at("covariate_names").get<std::vector<std::string>>();
  joint.labels = j.at("labels").get<std::vector<std::string>>();
  joint.eta_mode = vector_from(j.at("eta_mode"));
  joint.eta_precision = matrix_from(j.at("eta_precision"), joint.eta_mode.size());
  joint.prior_sd = vector_from(j.at("prior_sd"));
  return joint;
}

json to_json(const SimConfig& c) {
  json j = {{"n_subjects", c.n_subjects},
            {"visit_days", c.visit_days},
            {"interval_lengths", c.interval_lengths()},
            {"true_beta", vector_json(c.true_beta)},
            {"covariate_names", c.covariate_names()},
            {"sigma", c.sigma},
            {"dgp_kernel", to_string(c.dgp_kernel)},
            {"seed", c.seed}};
  if (c.dgp_kernel == Kernel::BetaPoisson) j["theta1"] = c.theta1;
  return j;
}

SimConfig sim_config_from_json(const json& j) {
  SimConfig c;
  c.n_subjects = j.value("n_subjects", c.n_subjects);
  if (j.contains("visit_days")) c.visit_days = j["visit_days"].get<std::vector<double>>();
  if (j.contains("true_beta")) c.true_beta = vector_from(j["true_beta"]);
  c.sigma = j.value("sigma", c.sigma);
  if (j.contains("dgp_kernel")) c.dgp_kernel = kernel_from_string(j["dgp_kernel"].get<std::string>());
  c.theta1 = j.value("theta1", c.theta1);
  c.seed = j.value("seed", c.seed);
  return c;
}

std::string summary_to_csv(const std::vector<SummaryRow>& rows, double level) {
  std::string out;
  csv::append_record(out, {"label", "log_rate_ratio", "sd", "rate_ratio", "ci_low", "ci_high", "level",
                           "prob_rr_gt_1", "note"});
  for (const auto& r : rows) {
    csv::append_record(out, {r.label, format_number(r.mode), format_number(r.sd), format_number(r.rate_ratio_point),
                             format_number(r.ci_low), format_number(r.ci_high), format_number(level),
                             format_number(r.prob_rr_gt_1), r.interpretable ? "" : "uninterpretable"});
  }
  return out;
}

std::string nu_scores_to_csv(const NuSelection& selection) {
  std::string out;
  csv::append_record(out, {"nu", "log_posterior_tilt", "log_prior_tilt", "score", "selected"});
  for (const auto& r : selection.table) {
    csv::append_record(out, {format_number(r.nu), format_number(r.log_posterior_tilt), format_number(r.log_prior_tilt),
                             format_number(r.score), r.nu == selection.nu_star ? "1" : "0"});
  }
  return out;
}

std::string coverage_to_csv(const std::vector<CoverageRow>& rows) {
  std::string out;
  csv::append_record(out, {"model", "dgp", "sigma", "theta1", "coefficient", "truth", "coverage", "mean_estimate",
                           "n_converged"});
  for (const auto& r : rows) {
    csv::append_record(out, {r.model, r.dgp, format_number(r.sigma), r.theta1 ? format_number(*r.theta1) : "",
                             r.coefficient, format_number(r.truth), format_number(r.coverage),
                             format_number(r.mean_estimate), std::to_string(r.n_converged)});
  }
  return out;
}

std::string format_summary_table(const std::vector<SummaryRow>& rows, double level) {
  std::size_t width = 5;
  for (const auto& r : rows) width = std::max(width, r.label.size());
  const std::string ci = fmt::format("{:g}% interval", 100.0 * level);
  std::string out = fmt::format("{:<{}}  {:>10}  {:>21}  {:>8}\n", "label", width, "rate ratio", ci, "P(RR>1)");
  for (const auto& r : rows) {
    out += fmt::format("{:<{}}  {:>10.2f}  {:>21}  {:>8.3f}", r.label, width, r.rate_ratio_point,
                       fmt::format("({:.2f}, {:.2f})", r.ci_low, r.ci_high), r.prob_rr_gt_1);
    if (!r.interpretable) out += "  uninterpretable";
    out += "\n";
  }
  return out;
}

std::string incidence_to_csv(const std::vector<IncidenceRow>& rows) {
  std::string out;
  csv::append_record(out, {"profile", "horizon", "days", "at_mode", "median", "ci_low", "ci_high", "level",
                           "ratio_to_first"});
  for (const auto& r : rows) {
    csv::append_record(out, {r.profile, std::string(to_string(r.horizon)), format_number(r.days),
                             format_number(r.summary.at_mode), format_number(r.summary.median),
                             format_number(r.summary.ci_low), format_number(r.summary.ci_high), format_number(r.level),
                             format_number(r.ratio_to_first)});
  }
  return out;
}

}  // namespace dare

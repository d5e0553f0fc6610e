#include "dare/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Cholesky>
#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

#include "dare/error.hpp"
#include "dare/glm.hpp"
#include "dare/likelihood.hpp"
#include "dare/optimizer.hpp"
#include "dare/serialization.hpp"

namespace dare {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::DareExponential: return "exponential";
    case ModelKind::DareBetaPoisson: return "beta-poisson";
    case ModelKind::CloglogGlm: return "cloglog-glm";
  }
  return "unknown";
}

ModelKind model_kind_from_string(std::string_view name) {
  if (name == "cloglog-glm" || name == "glm") return ModelKind::CloglogGlm;
  return model_kind_for(DoseResponseSpec{kernel_from_string(name), 1.0});
}

ModelKind model_kind_for(const DoseResponseSpec& spec) {
  return spec.kernel == Kernel::Exponential ? ModelKind::DareExponential : ModelKind::DareBetaPoisson;
}

DoseResponseSpec PosteriorFit::spec() const {
  switch (model) {
    case ModelKind::DareExponential: return DoseResponseSpec::exponential();
    case ModelKind::DareBetaPoisson: return DoseResponseSpec::beta_poisson();
    case ModelKind::CloglogGlm: break;
  }
  throw Error("GLM fits have no dose-response kernel");
}

ParamVector PosteriorFit::params() const { return ParamVector::from_flat(mode, n_beta(), spec()); }

Eigen::MatrixXd PosteriorFit::covariance() const {
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) throw NumericalError("precision matrix is not positive definite");
  return llt.solve(Eigen::MatrixXd::Identity(precision.rows(), precision.cols()));
}

PosteriorFit fit_map(const Dataset& data, const DoseResponseSpec& spec, const PriorSpec& priors,
                     const FitOptions& opts) {
  spec.validate();
  const std::size_t nb = data.n_covariates();
  priors.validate(nb);
  const QuadratureRule rule = gauss_hermite_rule(opts.n_quadrature);

  Objective neg_log_post = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    const ParamVector p = ParamVector::from_flat(x, nb, spec);
    const double lp = log_posterior_eval(data, spec, p, priors, rule, grad);
    if (grad) *grad = -*grad;
    return -lp;
  };

  // beta = 0, log sigma = 0, log theta_1 = 0
  const Eigen::VectorXd start = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nb + 1 + spec.free_parameter_count()));
  ModeSearchOptions mo;
  mo.max_iter = opts.max_iter;
  mo.restarts = opts.restarts;
  mo.seed = opts.seed;
  const LaplaceResult lr = laplace_mode(neg_log_post, start, mo);

  PosteriorFit fit;
  fit.model = model_kind_for(spec);
  fit.covariate_names = data.covariate_names();
  fit.labels = param_labels(data.covariate_names(), spec);
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

double normal_quantile(double p) { return boost::math::quantile(boost::math::normal_distribution<double>(), p); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

SummaryRow summary_row(std::string label, double mode, double sd, double level, bool interpretable) {
  if (!(level > 0.0 && level < 1.0)) throw Error(fmt::format("credible level must be in (0, 1) (got {})", level));
  const double z = normal_quantile(0.5 * (1.0 + level));
  SummaryRow row;
  row.label = std::move(label);
  row.mode = mode;
  row.sd = sd;
  row.rate_ratio_point = std::exp(mode);
  row.ci_low = std::exp(mode - z * sd);
  row.ci_high = std::exp(mode + z * sd);
  // P(e^beta > 1) = P(beta > 0) = 1 - Phi(-mode / sd)
  row.prob_rr_gt_1 = 1.0 - normal_cdf(-mode / sd);
  row.interpretable = interpretable;
  return row;
}

std::vector<SummaryRow> summarize(const PosteriorFit& fit, double level) {
  if (!fit.converged()) {
    throw NumericalError(fmt::format("cannot summarize an unconverged fit: {} (gradient norm {:.3g}, {} iterations)",
                                     fit.diagnostics.message, fit.diagnostics.grad_norm_inf,
                                     fit.diagnostics.iterations));
  }
  const Eigen::MatrixXd cov = fit.covariance();
  std::vector<SummaryRow> rows;
  rows.reserve(fit.n_beta());
  for (std::size_t j = 0; j < fit.n_beta(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    rows.push_back(summary_row(fit.covariate_names[j], fit.mode(i), std::sqrt(cov(i, i)), level,
                               fit.covariate_names[j] != kInterceptName));
  }
  return rows;
}

std::string_view to_string(Horizon horizon) {
  return horizon == Horizon::BySchedule ? "by_schedule" : "single_interval";
}

Horizon horizon_from_string(std::string_view name) {
  if (name == "by_schedule" || name == "schedule") return Horizon::BySchedule;
  if (name == "single_interval" || name == "single") return Horizon::SingleInterval;
  throw Error(fmt::format("unknown horizon mode '{}'", name));
}

double incidence_at(const PosteriorFit& fit, const Eigen::VectorXd& params, std::span<const double> x,
                    std::span<const double> schedule, Horizon horizon, const QuadratureRule& rule) {
  const double total = std::accumulate(schedule.begin(), schedule.end(), 0.0);
  const std::span<const double> intervals = horizon == Horizon::BySchedule ? schedule : std::span<const double>(&total, 1);
  // log of the probability of escaping infection in every interval
  double log_escape = 0.0;
  if (fit.is_dare()) {
    const DoseResponseSpec spec = fit.spec();
    const ParamVector p = ParamVector::from_flat(params, fit.n_beta(), spec);
    for (double tau : intervals) log_escape += std::log1p(-interval_infection_prob(spec, p, x, tau, rule));
  } else {
    const Eigen::VectorXd beta = params.head(static_cast<Eigen::Index>(fit.n_beta()));
    for (double tau : intervals) log_escape += std::log1p(-cloglog_prob(x, beta, tau));
  }
  return -std::expm1(log_escape);
}

namespace {

double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

}  // namespace

IncidenceSummary predict_incidence(const PosteriorFit& fit, std::span<const double> x,
                                   std::span<const double> schedule, const IncidenceOptions& opts) {
  if (!fit.converged()) throw NumericalError("cannot predict from an unconverged fit: " + fit.diagnostics.message);
  if (x.size() != fit.n_beta()) {
    throw Error(fmt::format("covariate profile has {} entries, fit has {} coefficients", x.size(), fit.n_beta()));
  }
  if (schedule.empty()) throw Error("schedule must contain at least one interval");
  for (double tau : schedule) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw Error(fmt::format("schedule interval must be positive (got {})", tau));
  }
  if (opts.draws < 1) throw Error("draws must be positive");
  if (!(opts.level > 0.0 && opts.level < 1.0)) throw Error("credible level must be in (0, 1)");

  Eigen::LLT<Eigen::MatrixXd> llt(fit.precision);
  if (llt.info() != Eigen::Success) throw NumericalError("precision matrix is not positive definite");
  const auto upper = llt.matrixU();  // precision = U'U

  const QuadratureRule rule = gauss_hermite_rule(fit.n_quadrature);
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal;

  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(opts.draws));
  Eigen::VectorXd z(fit.mode.size());
  for (int d = 0; d < opts.draws; ++d) {
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
    // U v = z gives v ~ N(0, precision^-1)
    const Eigen::VectorXd draw = fit.mode + upper.solve(z);
    values.push_back(incidence_at(fit, draw, x, schedule, opts.horizon, rule));
  }
  std::sort(values.begin(), values.end());

  IncidenceSummary out;
  out.at_mode = incidence_at(fit, fit.mode, x, schedule, opts.horizon, rule);
  out.median = quantile_sorted(values, 0.5);
  out.ci_low = quantile_sorted(values, 0.5 * (1.0 - opts.level));
  out.ci_high = quantile_sorted(values, 0.5 * (1.0 + opts.level));
  return out;
}

}  // namespace dare

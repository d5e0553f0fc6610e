#include "dare/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "dare/dose_response.hpp"
#include "dare/error.hpp"
#include "dare/glm.hpp"

namespace dare {

std::vector<double> SimConfig::interval_lengths() const {
  std::vector<double> tau;
  double prev = 0.0;
  for (double day : visit_days) {
    tau.push_back(day - prev);
    prev = day;
  }
  return tau;
}

std::vector<std::string> SimConfig::covariate_names() const {
  std::vector<std::string> names;
  for (std::size_t j = 1; j <= n_covariates(); ++j) names.push_back(fmt::format("x{}", j));
  return names;
}

void SimConfig::validate() const {
  if (n_subjects == 0) throw Error("simulation needs at least one subject");
  if (visit_days.empty()) throw Error("simulation needs at least one visit day");
  double prev = 0.0;
  for (double d : visit_days) {
    if (!(d > prev) || !std::isfinite(d)) throw Error("visit days must be positive and strictly increasing");
    prev = d;
  }
  if (true_beta.size() < 1 || !true_beta.allFinite()) throw Error("true beta needs a finite intercept");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw Error("sigma must be non-negative");
  if (dgp_kernel == Kernel::BetaPoisson && !(theta1 > 0.0)) throw Error("theta1 must be positive");
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

SimulatedData simulate_dataset(const SimConfig& config) {
  config.validate();
  const std::vector<double> tau = config.interval_lengths();
  const std::size_t n_cov = config.n_covariates();
  const DoseResponseSpec spec{config.dgp_kernel, 1.0};
  const std::optional<double> theta1(config.theta1);  // ignored by the exponential kernel

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;

  const int width = static_cast<int>(std::to_string(config.n_subjects).size());
  std::vector<RawRow> rows;
  rows.reserve(config.n_subjects * tau.size());
  for (std::size_t i = 0; i < config.n_subjects; ++i) {
    std::vector<double> x(n_cov);
    double eta = config.true_beta(0);
    for (std::size_t j = 0; j < n_cov; ++j) {
      x[j] = normal(rng);
      eta += x[j] * config.true_beta(static_cast<Eigen::Index>(j + 1));
    }
    const std::string id = fmt::format("s{:0{}}", i + 1, width);
    for (std::size_t t = 0; t < tau.size(); ++t) {
      const double log_dose = eta + std::log(tau[t]) + config.sigma * normal(rng);
      const double p = visit_kernel(spec, theta1, [&](const auto& k) { return k.at_log_dose(log_dose).prob; });
      const bool infected = uniform(rng) < p;
      rows.push_back({id, static_cast<double>(t + 1), tau[t], infected ? 1.0 : 0.0, x});
      if (infected) break;
    }
  }
  return {validate_dataset(rows, config.covariate_names()), config};
}

std::string_view to_string(CoverageModel model) { return model == CoverageModel::Dare ? "dare" : "glm"; }

const CoverageRow& CoverageReport::row(std::string_view model, std::string_view coefficient) const {
  for (const auto& r : rows) {
    if (r.model == model && r.coefficient == coefficient) return r;
  }
  throw Error(fmt::format("no coverage row for {} / {}", model, coefficient));
}

namespace {

ReplicateResult evaluate_replicate(const SimConfig& config, const CoverageOptions& options, CoverageModel model,
                                   const Dataset& data, std::uint64_t fit_seed) {
  const PriorSpec priors = PriorSpec::defaults(data.n_covariates());
  FitOptions fo = options.fit;
  fo.seed = fit_seed;
  const PosteriorFit fit = model == CoverageModel::Dare
                               ? fit_map(data, DoseResponseSpec{options.dare_kernel, 1.0}, priors, fo)
                               : fit_glm_map(data, priors, fo);
  ReplicateResult res;
  res.converged = fit.converged();
  if (!res.converged) return res;
  const auto rows = summarize(fit, options.level);
  const std::size_t n_cov = config.n_covariates();
  res.estimate.resize(static_cast<Eigen::Index>(n_cov));
  for (std::size_t j = 0; j < n_cov; ++j) {
    const SummaryRow& r = rows[j + 1];
    const double truth = config.true_beta(static_cast<Eigen::Index>(j + 1));
    res.estimate(static_cast<Eigen::Index>(j)) = r.mode;
    res.covered.push_back(std::log(r.ci_low) <= truth && truth <= std::log(r.ci_high));
  }
  return res;
}

}  // namespace

CoverageReport run_coverage(const SimConfig& config, const CoverageOptions& options) {
  config.validate();
  if (options.n_replicates < 1) throw Error("coverage needs at least one replicate");
  if (options.models.empty()) throw Error("coverage needs at least one model");

  const auto n_rep = static_cast<std::size_t>(options.n_replicates);
  CoverageReport report;
  report.config = config;
  report.options = options;
  report.replicates.assign(options.models.size(), std::vector<ReplicateResult>(n_rep));

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t r = next++; r < n_rep; r = next++) {
      SimConfig rc = config;
      rc.seed = derive_seed(config.seed, 0, r);
      const Dataset data = simulate_dataset(rc).data;
      for (std::size_t m = 0; m < options.models.size(); ++m) {
        try {
          report.replicates[m][r] =
              evaluate_replicate(config, options, options.models[m], data, derive_seed(config.seed, 1 + m, r));
        } catch (const Error&) {
          report.replicates[m][r] = ReplicateResult{};
        }
      }
    }
  };
  const int workers = std::max(1, std::min<int>(options.workers, options.n_replicates));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  const std::string dgp(to_string(config.dgp_kernel));
  const auto names = config.covariate_names();
  std::string failures;
  for (std::size_t m = 0; m < options.models.size(); ++m) {
    const auto& reps = report.replicates[m];
    const auto n_conv = static_cast<int>(std::count_if(reps.begin(), reps.end(), [](const auto& r) { return r.converged; }));
    for (std::size_t j = 0; j < names.size(); ++j) {
      CoverageRow row;
      row.model = to_string(options.models[m]);
      row.dgp = dgp;
      row.sigma = config.sigma;
      if (config.dgp_kernel == Kernel::BetaPoisson) row.theta1 = config.theta1;
      row.coefficient = names[j];
      row.truth = config.true_beta(static_cast<Eigen::Index>(j + 1));
      row.n_converged = n_conv;
      double hits = 0.0, sum = 0.0;
      for (const auto& r : reps) {
        if (!r.converged) continue;
        hits += r.covered[j] ? 1.0 : 0.0;
        sum += r.estimate(static_cast<Eigen::Index>(j));
      }
      row.coverage = n_conv > 0 ? hits / n_conv : std::nan("");
      row.mean_estimate = n_conv > 0 ? sum / n_conv : std::nan("");
      report.rows.push_back(std::move(row));
    }
    const int n_fail = options.n_replicates - n_conv;
    if (n_fail > options.max_unconverged_fraction * options.n_replicates) {
      failures += fmt::format(" {}: {}/{} replicates unconverged;", to_string(options.models[m]), n_fail,
                              options.n_replicates);
    }
  }
  if (!failures.empty()) throw NumericalError("coverage run failed:" + failures);
  return report;
}

std::vector<SimConfig> coverage_grid(std::uint64_t seed) {
  std::vector<SimConfig> grid;
  for (double sigma : {1.0, 2.0, 3.0}) {
    SimConfig c;
    c.dgp_kernel = Kernel::Exponential;
    c.sigma = sigma;
    c.seed = derive_seed(seed, 100, grid.size());
    grid.push_back(c);
  }
  for (double sigma : {1.0, 2.0, 3.0}) {
    for (double theta1 : {1.0, 2.0, 3.0}) {
      SimConfig c;
      c.dgp_kernel = Kernel::BetaPoisson;
      c.sigma = sigma;
      c.theta1 = theta1;
      c.seed = derive_seed(seed, 100, grid.size());
      grid.push_back(c);
    }
  }
  return grid;
}

}  // namespace dare

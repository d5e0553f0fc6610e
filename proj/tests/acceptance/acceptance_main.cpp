// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "dare/error.hpp"
#include "dare/glm.hpp"
#include "dare/likelihood.hpp"
#include "dare/serialization.hpp"
#include "dare/simulation.hpp"
#include "dare/subset.hpp"
#include "figure_fixture.hpp"
#include "oracles.hpp"

using namespace dare;

namespace {

// Tolerances and study sizes.
constexpr double kLimitTol = 1e-6;
constexpr double kLimitSigma = 1e-8;
constexpr int kMcPoints = 50;
constexpr long kMcDraws = 10'000'000;
constexpr double kMcSe = 3.0;
constexpr double kMaxSigma = 4.0;
constexpr int kGradPoints = 20;
constexpr double kGradRelTol = 1e-4;
constexpr double kGradStep = 1e-5;
constexpr int kReplicates = 200;
constexpr double kCoverageLow = 0.90;
constexpr double kCoverageHigh = 0.99;
constexpr double kIdempotenceTol = 1e-10;
constexpr double kLimitNu = 1e8;
constexpr double kResidualTol = 1e-6;  // relative to the untilted residual
constexpr int kPairedSeeds = 20;
constexpr double kContrastSds = 3.0;
constexpr double kWinRate = 0.80;
constexpr std::uint64_t kMasterSeed = 1;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

const SimConfig& grid_cell(Kernel kernel, double sigma, double theta1) {
  static const std::vector<SimConfig> grid = coverage_grid(kMasterSeed);
  for (const auto& c : grid) {
    if (c.dgp_kernel == kernel && c.sigma == sigma && (kernel == Kernel::Exponential || c.theta1 == theta1)) return c;
  }
  throw Error("no such coverage cell");
}

Outcome analytic_limit() {
  const QuadratureRule rule = gauss_hermite_rule(kDefaultQuadratureNodes);
  const std::vector<double> x{1.0};
  double worst = 0.0;
  int n = 0;
  for (double tau : {1.0, 2.0, 7.0}) {
    for (int i = 0; i <= 160; ++i) {
      const double eta = -6.0 + 0.05 * i;
      const Eigen::VectorXd beta = Eigen::VectorXd::Constant(1, eta);
      const double dare_p =
          interval_infection_prob(DoseResponseSpec::exponential(), param_pack(beta, kLimitSigma), x, tau, rule);
      const double glm_p = 1.0 - std::exp(-tau * std::exp(eta));
      worst = std::max({worst, std::abs(dare_p - glm_p), std::abs(cloglog_prob(x, beta, tau) - glm_p)});
      ++n;
    }
  }
  return {worst <= kLimitTol, fmt::format("{} grid points, max |diff| {:.2e} (tol {:.0e})", n, worst, kLimitTol)};
}

Outcome quadrature_vs_mc() {
  const QuadratureRule rule = gauss_hermite_rule(kDefaultQuadratureNodes);
  std::mt19937_64 rng(kMasterSeed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<double> x{1.0};
  const double taus[] = {1.0, 2.0, 7.0};
  int inside = 0;
  double worst_z = 0.0;
  for (int i = 0; i < kMcPoints; ++i) {
    const bool bp = i % 2 == 1;
    const double eta = -6.0 + 8.0 * u(rng);
    const double sigma = kMaxSigma * (1.0 - u(rng));  // (0, 4]
    const double tau = taus[static_cast<int>(3.0 * u(rng)) % 3];
    const double theta1 = bp ? std::exp(std::log(0.25) + std::log(16.0) * u(rng)) : 0.0;
    const Eigen::VectorXd beta = Eigen::VectorXd::Constant(1, eta);
    const ParamVector p = bp ? param_pack(beta, sigma, theta1) : param_pack(beta, sigma);
    const double q = interval_infection_prob(bp ? DoseResponseSpec::beta_poisson() : DoseResponseSpec::exponential(),
                                             p, x, tau, rule);
    const auto mc = testing::mc_interval_prob(eta, sigma, tau, theta1, kMcDraws, derive_seed(kMasterSeed, 2, i));
    const double z = std::abs(q - mc.mean) / mc.se;
    worst_z = std::max(worst_z, z);
    inside += z <= kMcSe;
  }
  return {inside == kMcPoints,
          fmt::format("{}/{} points within {} MC se ({:.0e} draws), worst {:.2f} se", inside, kMcPoints, kMcSe,
                      static_cast<double>(kMcDraws), worst_z)};
}

Outcome gradient_check() {
  SimConfig c;
  c.seed = derive_seed(kMasterSeed, 3, 0);
  const Dataset d = simulate_dataset(c).data;
  const PriorSpec priors = PriorSpec::defaults(d.n_covariates());
  const QuadratureRule rule = gauss_hermite_rule(kDefaultQuadratureNodes);
  std::mt19937_64 rng(derive_seed(kMasterSeed, 3, 1));
  std::normal_distribution<double> n;
  double worst = 0.0;
  int points = 0;
  for (Kernel k : {Kernel::Exponential, Kernel::BetaPoisson}) {
    const DoseResponseSpec spec{k, 1.0};
    for (int i = 0; i < kGradPoints; ++i) {
      Eigen::VectorXd flat(static_cast<Eigen::Index>(5 + spec.free_parameter_count()));
      flat(0) = -4.6 + 0.5 * n(rng);
      for (int j = 1; j < 4; ++j) flat(j) = 0.5 * n(rng);
      flat(4) = 0.5 * n(rng);
      if (k == Kernel::BetaPoisson) flat(5) = 0.5 * n(rng);
      const auto lp = [&](const Eigen::VectorXd& v) {
        return log_posterior(d, spec, ParamVector::from_flat(v, 4, spec), priors, rule);
      };
      const Eigen::VectorXd g = log_posterior_grad(d, spec, ParamVector::from_flat(flat, 4, spec), priors, rule);
      for (Eigen::Index a = 0; a < flat.size(); ++a) {
        Eigen::VectorXd up = flat, dn = flat;
        up(a) += kGradStep;
        dn(a) -= kGradStep;
        const double fd = (lp(up) - lp(dn)) / (2.0 * kGradStep);
        worst = std::max(worst, std::abs(g(a) - fd) / std::max(1.0, std::abs(fd)));
      }
      ++points;
    }
  }
  return {worst <= kGradRelTol,
          fmt::format("{} points, max relative error {:.2e} (tol {:.0e})", points, worst, kGradRelTol)};
}

CoverageReport coverage_for(const SimConfig& cell, CoverageModel model) {
  CoverageOptions opts;
  opts.n_replicates = kReplicates;
  opts.models = {model};
  opts.workers = workers();
  return run_coverage(cell, opts);
}

Outcome dare_coverage() {
  const CoverageReport r = coverage_for(grid_cell(Kernel::BetaPoisson, 1.0, 1.0), CoverageModel::Dare);
  const double c2 = r.row("dare", "x2").coverage;
  const double c3 = r.row("dare", "x3").coverage;
  const auto ok = [](double c) { return c >= kCoverageLow && c <= kCoverageHigh; };
  return {ok(c2) && ok(c3), fmt::format("beta-Poisson sigma=1 theta1=1: x2 {:.3f}, x3 {:.3f} (need [{:.2f}, {:.2f}])",
                                        c2, c3, kCoverageLow, kCoverageHigh)};
}

Outcome glm_failure() {
  const CoverageReport r = coverage_for(grid_cell(Kernel::BetaPoisson, 3.0, 1.0), CoverageModel::Glm);
  const auto& row = r.row("glm", "x3");
  return {row.coverage < kCoverageLow && row.mean_estimate < row.truth,
          fmt::format("beta-Poisson sigma=3 theta1=1: GLM x3 coverage {:.3f} (need < {:.2f}), mean {:.3f} (need < {})",
                      row.coverage, kCoverageLow, row.mean_estimate, row.truth)};
}

Outcome misspecified_coverage() {
  const CoverageReport r = coverage_for(grid_cell(Kernel::Exponential, 2.0, 0.0), CoverageModel::Dare);
  const double c2 = r.row("dare", "x2").coverage;
  const double c3 = r.row("dare", "x3").coverage;
  return {c2 >= kCoverageLow && c3 >= kCoverageLow,
          fmt::format("exponential sigma=2, beta-Poisson fit: x2 {:.3f}, x3 {:.3f} (need >= {:.2f})", c2, c3,
                      kCoverageLow)};
}

Outcome subset_algebra() {
  const ShrinkagePlan plan = testing::figure_plan();
  const Eigen::MatrixXd L = build_L(plan);
  const bool pattern = L.rows() == 20 && L.cols() == 16 && L == testing::figure_in_library_order();
  const Eigen::MatrixXd P = projection(L);
  const double idem = (P * P - P).cwiseAbs().maxCoeff();

  std::mt19937_64 rng(derive_seed(kMasterSeed, 7, 0));
  std::normal_distribution<double> n;
  const Eigen::Index q = 20;
  Eigen::MatrixXd a(q, q);
  for (Eigen::Index i = 0; i < q; ++i) {
    for (Eigen::Index j = 0; j < q; ++j) a(i, j) = n(rng);
  }
  JointFit joint;
  joint.n_pathogens = plan.n_pathogens;
  joint.block_size = plan.block_size();
  joint.n_dose_response = plan.n_dose_response;
  joint.eta_precision = a * a.transpose() / static_cast<double>(q) + Eigen::MatrixXd::Identity(q, q);
  joint.eta_mode.resize(q);
  for (Eigen::Index i = 0; i < q; ++i) joint.eta_mode(i) = n(rng);
  joint.prior_sd = Eigen::VectorXd::Constant(q, 2.5);

  const JointFit same = tilt_posterior(joint, L, 0.0);
  const bool identity = same.eta_mode == joint.eta_mode && same.eta_precision == joint.eta_precision;
  const Eigen::MatrixXd resid = Eigen::MatrixXd::Identity(q, q) - P;
  const double r0 = (resid * joint.eta_mode).norm();
  const double r_inf = (resid * tilt_posterior(joint, L, kLimitNu).eta_mode).norm();
  const bool pass = pattern && idem < kIdempotenceTol && identity && r_inf <= kResidualTol * r0;
  return {pass, fmt::format("L pattern {}, max|P^2-P| {:.1e}, nu=0 identity {}, residual {:.2e} -> {:.2e} at nu=1e8",
                            pattern ? "exact" : "WRONG", idem, identity ? "yes" : "no", r0, r_inf)};
}

PosteriorFit fit_bp(const SimConfig& c) {
  const Dataset d = simulate_dataset(c).data;
  return fit_map(d, DoseResponseSpec::beta_poisson(), PriorSpec::defaults(d.n_covariates()));
}

double selected_nu(const PosteriorFit& a, const PosteriorFit& b, const ShrinkagePlan& plan) {
  const JointFit joint = stack_fits({a, b}, plan);
  return select_nu(joint, build_L(plan), default_nu_grid()).nu_star;
}

Outcome subset_behavior() {
  ShrinkagePlan plan;
  plan.n_pathogens = 2;
  plan.n_covariates = 4;
  plan.n_dose_response = 1;
  plan.shrink_sets = {{}, {}, {0, 1}, {}};  // x2 shared
  plan.validate();
  const Eigen::Index x2 = 2;
  int wins = 0;
  std::string nus;
  for (int s = 0; s < kPairedSeeds; ++s) {
    SimConfig first, second;
    first.seed = derive_seed(kMasterSeed, 8, 2 * s);
    second.seed = derive_seed(kMasterSeed, 8, 2 * s + 1);
    const PosteriorFit a = fit_bp(first);
    const PosteriorFit b_equal = fit_bp(second);
    const double contrast_sd = std::sqrt(a.covariance()(x2, x2) + b_equal.covariance()(x2, x2));
    second.true_beta(x2) += kContrastSds * contrast_sd;
    const PosteriorFit b_differ = fit_bp(second);
    if (!a.converged() || !b_equal.converged() || !b_differ.converged()) throw NumericalError("fit did not converge");
    const double nu_equal = selected_nu(a, b_equal, plan);
    const double nu_differ = selected_nu(a, b_differ, plan);
    wins += nu_equal > nu_differ;
    nus += fmt::format("{}{:.3g}/{:.3g}", s ? " " : "", nu_equal, nu_differ);
  }
  const double rate = static_cast<double>(wins) / kPairedSeeds;
  return {rate >= kWinRate, fmt::format("nu(equal) > nu(differ) in {}/{} seeds (need {:.0f}%); pairs {}", wins,
                                        kPairedSeeds, 100 * kWinRate, nus)};
}

// Fixture rate and incidence ratios pushed through the report writers.
Outcome report_formatting() {
  const std::vector<std::string> pathogens{"ETEC", "aEPEC", "STEC", "C.jejuni", "Salmonella"};
  const std::vector<double> rate_ratios{5.3, 4.6, 6.0, 5.0, 5.0};
  const std::vector<double> incidence_ratios{3.2, 2.5, 3.3, 2.5, 2.6};
  bool pass = true;
  std::string shown;
  for (std::size_t k = 0; k < pathogens.size(); ++k) {
    const std::vector<SummaryRow> rows{summary_row("(Intercept)", -4.6, 0.8, 0.95, false),
                                       summary_row("animals", std::log(rate_ratios[k]), 0.6, 0.95, true)};
    const std::string table = format_summary_table(rows, 0.95);
    const auto line_at = table.find("animals");
    const std::string line = table.substr(line_at, table.find('\n', line_at) - line_at);
    pass = pass && line.find(fmt::format("{:.2f}", rate_ratios[k])) != std::string::npos;
    pass = pass && rows[1].prob_rr_gt_1 > 0.99;
    pass = pass && table.find("uninterpretable") != std::string::npos;

    const double base = 0.08;
    IncidenceRow none{"no animals", Horizon::BySchedule, 14, {base, base, base * 0.5, base * 1.8}};
    IncidenceRow owned{"animals", Horizon::BySchedule, 14, {base * incidence_ratios[k], 0, 0, 0}};
    owned.ratio_to_first = owned.summary.at_mode / none.summary.at_mode;
    const std::string csv_text = incidence_to_csv({none, owned});
    const std::string last = csv_text.substr(csv_text.rfind(',', csv_text.size() - 3) + 1);
    const double parsed = std::stod(last);
    pass = pass && fmt::format("{:.1f}", parsed) == fmt::format("{:.1f}", incidence_ratios[k]);
    shown += fmt::format("{}{} RR {:.1f} IR {:.1f}", k ? ", " : "", pathogens[k], std::exp(rows[1].mode), parsed);
  }
  return {pass, shown};
}

struct Criterion {
  int id;
  std::string name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "analytic-limit equivalence", analytic_limit},
      {2, "quadrature vs Monte-Carlo", quadrature_vs_mc},
      {3, "gradient correctness", gradient_check},
      {4, "DARE coverage", dare_coverage},
      {5, "GLM failure mode", glm_failure},
      {6, "misspecification robustness", misspecified_coverage},
      {7, "SUBSET algebra", subset_algebra},
      {8, "SUBSET behavior", subset_behavior},
      {9, "report formatting fixture", report_formatting},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, fmt::format("threw: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    fmt::print("{} criterion {}: {}: {} [{:.1f}s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail, secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}

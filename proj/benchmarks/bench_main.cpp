#include <benchmark/benchmark.h>

#include "dare/glm.hpp"
#include "dare/likelihood.hpp"
#include "dare/simulation.hpp"
#include "dare/subset.hpp"

namespace {

const dare::Dataset& study_data() {
  static const dare::Dataset data = [] {
    dare::SimConfig c;
    c.seed = 1;
    return dare::simulate_dataset(c).data;
  }();
  return data;
}

void BM_GaussHermiteRule(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(dare::gauss_hermite_rule(static_cast<int>(state.range(0))));
}
BENCHMARK(BM_GaussHermiteRule)->Arg(20)->Arg(50)->Arg(100);

void BM_LogPosteriorEval(benchmark::State& state) {
  const dare::Dataset& data = study_data();
  const auto spec = dare::DoseResponseSpec::beta_poisson();
  const auto priors = dare::PriorSpec::defaults(data.n_covariates());
  const auto rule = dare::gauss_hermite_rule(static_cast<int>(state.range(0)));
  const dare::ParamVector params =
      dare::param_pack((Eigen::VectorXd(4) << -4.6, 0.0, 0.5, 1.0).finished(), 1.0, 1.0);
  Eigen::VectorXd grad;
  const bool with_grad = state.range(1) != 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        dare::log_posterior_eval(data, spec, params, priors, rule, with_grad ? &grad : nullptr));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.n_rows()));
}
BENCHMARK(BM_LogPosteriorEval)->ArgsProduct({{20, 50}, {0, 1}});

void BM_FitMap(benchmark::State& state) {
  const dare::Dataset& data = study_data();
  const auto priors = dare::PriorSpec::defaults(data.n_covariates());
  dare::FitOptions opts;
  opts.restarts = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(dare::fit_map(data, dare::DoseResponseSpec::beta_poisson(), priors, opts));
  }
}
BENCHMARK(BM_FitMap)->Arg(0)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_FitGlm(benchmark::State& state) {
  const dare::Dataset& data = study_data();
  const auto priors = dare::PriorSpec::defaults(data.n_covariates());
  for (auto _ : state) benchmark::DoNotOptimize(dare::fit_glm_map(data, priors));
}
BENCHMARK(BM_FitGlm)->Unit(benchmark::kMillisecond);

void BM_SelectNu(benchmark::State& state) {
  dare::ShrinkagePlan plan;
  plan.n_pathogens = 4;
  plan.n_covariates = 3;
  plan.n_dose_response = 1;
  plan.shrink_sets = {{}, {0, 1, 2, 3}, {1, 3}};
  plan.validate();
  dare::JointFit joint;
  joint.n_pathogens = 4;
  joint.block_size = plan.block_size();
  joint.n_dose_response = 1;
  const auto q = static_cast<Eigen::Index>(plan.dimension());
  joint.eta_mode = Eigen::VectorXd::LinSpaced(q, -1.0, 1.0);
  joint.eta_precision = Eigen::MatrixXd::Identity(q, q) * 4.0;
  joint.prior_sd = Eigen::VectorXd::Constant(q, 2.5);
  const Eigen::MatrixXd L = dare::build_L(plan);
  for (auto _ : state) benchmark::DoNotOptimize(dare::select_nu(joint, L, dare::default_nu_grid()));
}
BENCHMARK(BM_SelectNu)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();

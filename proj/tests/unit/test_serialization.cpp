#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"

#include "dare/csv.hpp"
#include "dare/error.hpp"
#include "dare/serialization.hpp"

using namespace dare;

namespace {

const Issue* find_issue(const ValidationError& e, std::size_t row) {
  for (const auto& i : e.issues()) {
    if (i.row == row) return &i;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("csv parsing handles quotes and both line endings") {
  const auto recs = csv::parse("a,b,c\r\n\"x,1\",\"say \"\"hi\"\"\",\r\n\"multi\nline\",2,3\n");
  REQUIRE(recs.size() == 3);
  CHECK(recs[0] == csv::Record{"a", "b", "c"});
  CHECK(recs[1] == csv::Record{"x,1", "say \"hi\"", ""});
  CHECK(recs[2] == csv::Record{"multi\nline", "2", "3"});
  CHECK(csv::parse("a,b").size() == 1);
  CHECK_THROWS_AS(csv::parse("a,\"b\n"), Error);
}

TEST_CASE("csv writing escapes and terminates with CRLF") {
  CHECK(csv::escape("plain") == "plain");
  CHECK(csv::escape("a,b") == "\"a,b\"");
  CHECK(csv::escape("q\"q") == "\"q\"\"q\"");
  CHECK(csv::escape("l\nl") == "\"l\nl\"");
  std::string out;
  csv::append_record(out, {"a", "b,c", ""});
  CHECK(out == "a,\"b,c\",\r\n");
  CHECK(csv::parse(out) == std::vector<csv::Record>{{"a", "b,c", ""}});
}

TEST_CASE("numbers print in shortest round-trip form") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(-4.6) == "-4.6");
  CHECK(format_number(7.0) == "7");
  CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "NA");
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = n(rng);
    CHECK(std::stod(format_number(v)) == v);
  }
}

TEST_CASE("sha256 digest") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("").size() == 64);
}

TEST_CASE("dataset csv round trip preserves values and digest") {
  SimConfig c;
  c.seed = 21;
  c.n_subjects = 50;
  const Dataset d = simulate_dataset(c).data;
  const std::string text = dataset_to_csv(d);
  CHECK(text.rfind("subject_id,t,tau,y,x1,x2,x3\r\n", 0) == 0);
  const Dataset back = dataset_from_csv(text);
  CHECK(back.design() == d.design());
  CHECK(std::ranges::equal(back.tau(), d.tau()));
  CHECK(std::ranges::equal(back.outcome(), d.outcome()));
  CHECK(back.subject_ids() == d.subject_ids());
  CHECK(dataset_digest(back) == dataset_digest(d));
  CHECK(dataset_to_csv(back) == text);
}

TEST_CASE("dataset csv accepts LF, blank lines and reordered rows") {
  const Dataset d = dataset_from_csv("subject_id,t,tau,y,age\nb,2,2,1,3\n\na,1,1,0,4\nb,1,1,0,3\n");
  CHECK(d.n_subjects() == 2);
  CHECK(d.n_rows() == 3);
  CHECK(d.covariate_names() == std::vector<std::string>{"(Intercept)", "age"});
  CHECK(d.n_events() == 1);
}

TEST_CASE("dataset csv errors are located") {
  CHECK_THROWS_AS(dataset_from_csv(""), ValidationError);
  CHECK_THROWS_AS(dataset_from_csv("id,t,tau,y\n"), ValidationError);
  try {
    dataset_from_csv("subject_id,t,tau,y,x\na,1,1,0,0.5\na,2,two,0,0.5\na,3,1,0\n");
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    const Issue* bad_number = find_issue(e, 2);
    REQUIRE(bad_number);
    CHECK(bad_number->column == "tau");
    CHECK(find_issue(e, 3));
    CHECK_FALSE(find_issue(e, 1));
  }
  try {
    dataset_from_csv("subject_id,t,tau,y\na,1,1,NA\na,2,-1,0\n");
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(find_issue(e, 1));
    CHECK(find_issue(e, 2));
  }
}

TEST_CASE("posterior fit json round trip is exact") {
  SimConfig c;
  c.seed = 22;
  c.n_subjects = 150;
  const Dataset d = simulate_dataset(c).data;
  const PosteriorFit fit = fit_map(d, DoseResponseSpec::beta_poisson(), PriorSpec::defaults(4));
  const nlohmann::json j = to_json(fit);
  CHECK(j.at("format") == "dare-posterior-fit/1");
  CHECK(j.at("meta").at("kernel") == "beta-poisson");
  CHECK(j.at("precision").size() == 36);
  const PosteriorFit back = fit_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.model == fit.model);
  CHECK(back.mode == fit.mode);
  CHECK(back.precision == fit.precision);
  CHECK(back.labels == fit.labels);
  CHECK(back.dataset_digest == dataset_digest(d));
  CHECK(back.priors.beta_sd == fit.priors.beta_sd);
  CHECK(back.converged() == fit.converged());
  CHECK(back.n_quadrature == 50);
  CHECK(to_json(back).dump() == j.dump());

  nlohmann::json broken = j;
  broken["labels"].erase(0);
  CHECK_THROWS_AS(fit_from_json(broken), Error);
}

TEST_CASE("joint fit json keeps missing prior scales") {
  JointFit joint;
  joint.n_pathogens = 1;
  joint.block_size = 3;
  joint.n_dose_response = 1;
  joint.pathogen_labels = {"p"};
  joint.covariate_names = {"(Intercept)"};
  joint.labels = {"p:(Intercept)", "p:theta1", "p:sigma2"};
  joint.eta_mode = Eigen::Vector3d(-3.0, 1.5, 2.0);
  joint.eta_precision = Eigen::Matrix3d::Identity();
  joint.prior_sd = Eigen::Vector3d(10.0, std::nan(""), std::nan(""));
  const JointFit back = joint_from_json(nlohmann::json::parse(to_json(joint).dump()));
  CHECK(back.eta_mode == joint.eta_mode);
  CHECK(back.eta_precision == joint.eta_precision);
  CHECK(back.prior_sd(0) == 10.0);
  CHECK(std::isnan(back.prior_sd(1)));
  CHECK(back.labels == joint.labels);
}

TEST_CASE("simulation config json round trip") {
  SimConfig c;
  c.sigma = 2.0;
  c.theta1 = 3.0;
  c.seed = 123456789012345ULL;
  const SimConfig back = sim_config_from_json(to_json(c));
  CHECK(back.sigma == 2.0);
  CHECK(back.theta1 == 3.0);
  CHECK(back.seed == c.seed);
  CHECK(back.true_beta == c.true_beta);
  CHECK(to_json(c).at("interval_lengths") == nlohmann::json({1, 2, 2, 2, 7}));
  c.dgp_kernel = Kernel::Exponential;
  CHECK_FALSE(to_json(c).contains("theta1"));
}

TEST_CASE("table csv layouts") {
  const std::vector<SummaryRow> rows{summary_row("(Intercept)", -4.0, 0.5, 0.95, false),
                                     summary_row("animals", std::log(5.3), 0.2, 0.95, true)};
  const auto parsed = csv::parse(summary_to_csv(rows, 0.95));
  REQUIRE(parsed.size() == 3);
  CHECK(parsed[0] == csv::Record{"label", "log_rate_ratio", "sd", "rate_ratio", "ci_low", "ci_high", "level",
                                 "prob_rr_gt_1", "note"});
  CHECK(parsed[1][8] == "uninterpretable");
  CHECK(parsed[2][8].empty());
  CHECK(std::stod(parsed[2][3]) == doctest::Approx(5.3).epsilon(1e-14));

  CoverageRow exp_row{"dare", "exponential", 2.0, std::nullopt, "x2", 0.5, 0.94, 0.52, 200};
  CoverageRow bp_row{"glm", "beta-poisson", 3.0, 1.0, "x3", 1.0, 0.41, 0.8, 199};
  const auto cov = csv::parse(coverage_to_csv({exp_row, bp_row}));
  CHECK(cov[0] == csv::Record{"model", "dgp", "sigma", "theta1", "coefficient", "truth", "coverage", "mean_estimate",
                              "n_converged"});
  CHECK(cov[1] == csv::Record{"dare", "exponential", "2", "", "x2", "0.5", "0.94", "0.52", "200"});
  CHECK(cov[2] == csv::Record{"glm", "beta-poisson", "3", "1", "x3", "1", "0.41", "0.8", "199"});

  NuSelection sel;
  sel.nu_star = 10.0;
  sel.table = {{0.0, 0.0, 0.0, 0.0}, {10.0, -1.0, -2.5, 1.5}};
  const auto nu = csv::parse(nu_scores_to_csv(sel));
  CHECK(nu[2] == csv::Record{"10", "-1", "-2.5", "1.5", "1"});
  CHECK(nu[1][4] == "0");
}

#include "commands.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include <fmt/format.h>

#include "artifacts.hpp"
#include "dare/glm.hpp"
#include "dare/serialization.hpp"
#include "dare/simulation.hpp"
#include "dare/subset.hpp"

namespace dare::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json inputs_json(const std::vector<InputRecord>& inputs) {
  json a = json::array();
  for (const auto& i : inputs) a.push_back(to_json(i));
  return a;
}

void write_json_artifact(const fs::path& path, json artifact, const RunConfig& config,
                         const std::vector<InputRecord>& inputs) {
  artifact["run_config"] = config.resolved();
  artifact["inputs"] = inputs_json(inputs);
  write_atomic(path, dump_json(artifact));
}

// CSV tables cannot carry metadata without breaking their columns, so the
// resolved config sits in a sidecar next to them.
void write_csv_artifact(const fs::path& path, const std::string& content, const RunConfig& config,
                        const std::vector<InputRecord>& inputs) {
  write_atomic(path, content);
  json sidecar = {{"artifact", path.filename().string()}, {"sha256", sha256_hex(content)}};
  write_json_artifact(path.string() + ".provenance.json", std::move(sidecar), config, inputs);
}

[[noreturn]] void invalid(const std::string& message) { throw ValidationError({Issue{0, "", message}}); }

void warn(std::ostream& err, const std::string& message) {
  err << json{{"warning", {{"message", message}}}}.dump() << '\n';
}

FitOptions fit_options(const RunConfig& config) {
  FitOptions fo;
  fo.n_quadrature = config.integer("nq");
  fo.restarts = config.integer("restarts");
  fo.seed = config.seed();
  if (fo.restarts < 0) throw UsageError("restarts must be non-negative");
  gauss_hermite_rule(fo.n_quadrature);  // range check before any work
  return fo;
}

double level_of(const RunConfig& config) {
  const double level = config.number("level");
  if (!(level > 0.0 && level < 1.0)) throw UsageError(fmt::format("level must be in (0, 1) (got {})", level));
  return level;
}

PriorSpec resolve_priors(const RunConfig& config, std::size_t n_beta) {
  PriorSpec p = PriorSpec::defaults(n_beta);
  if (config.has("priors")) {
    const json& j = config.resolved().at("priors");
    if (!j.is_object()) throw UsageError("'priors' must be an object");
    json merged = to_json(p);
    for (const auto& [key, value] : j.items()) {
      if (!merged.contains(key)) throw UsageError(fmt::format("unknown prior key '{}'", key));
      merged[key] = value;
    }
    p = prior_from_json(merged);
  }
  p.validate(n_beta);
  return p;
}

PosteriorFit fit_dataset(const Dataset& data, const std::string& kernel, const PriorSpec& priors, const FitOptions& fo) {
  if (kernel == "cloglog-glm") return fit_glm_map(data, priors, fo);
  return fit_map(data, DoseResponseSpec{kernel_from_string(kernel), 1.0}, priors, fo);
}

void require_converged(const PosteriorFit& fit, const std::string& what) {
  if (!fit.converged()) {
    throw NumericalError(fmt::format("{} did not converge: {} (gradient norm {:.3g}, smallest Hessian eigenvalue {:.3g})",
                                     what, fit.diagnostics.message, fit.diagnostics.grad_norm_inf,
                                     fit.diagnostics.min_eigenvalue));
  }
}

std::string checked_label(const std::string& label) {
  const bool ok = !label.empty() && std::all_of(label.begin(), label.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
  if (!ok) invalid(fmt::format("pathogen label '{}' must use letters, digits, '_', '-' or '.'", label));
  return label;
}

SimConfig sim_config(const RunConfig& config) {
  SimConfig c;
  const int subjects = config.integer("subjects");
  if (subjects < 1) throw UsageError("subjects must be positive");
  c.n_subjects = static_cast<std::size_t>(subjects);
  c.visit_days = config.numbers("visit_days");
  const std::vector<double> beta = config.numbers("true_beta");
  c.true_beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
  c.sigma = config.number("sigma");
  c.dgp_kernel = kernel_from_string(config.text("kernel"));
  c.theta1 = config.number("theta1");
  c.seed = config.seed();
  c.validate();
  return c;
}

}  // namespace

void cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream&) {
  const SimConfig c = sim_config(config);
  const fs::path dir = config.text("output_dir");
  const SimulatedData sim = simulate_dataset(c);
  const std::string csv_text = dataset_to_csv(sim.data);
  write_atomic(dir / "dataset.csv", csv_text);
  json truth = {{"format", "dare-simulation-truth/1"},
                {"dataset", "dataset.csv"},
                {"dataset_sha256", sha256_hex(csv_text)},
                {"dataset_digest", dataset_digest(sim.data)},
                {"config", to_json(c)}};
  write_json_artifact(dir / "truth.json", std::move(truth), config, {});
  out << fmt::format("simulated {} subjects, {} rows, {} infections -> {}\n", sim.data.n_subjects(), sim.data.n_rows(),
                     sim.data.n_events(), (dir / "dataset.csv").string());
}

void cmd_fit(const RunConfig& config, std::ostream& out, std::ostream&) {
  const fs::path input = config.text("input");
  const fs::path dir = config.text("output_dir");
  const std::string kernel = config.text("kernel");
  if (kernel != "cloglog-glm") kernel_from_string(kernel);
  const double level = level_of(config);
  const FitOptions fo = fit_options(config);

  const std::string bytes = read_text(input);
  const Dataset data = dataset_from_csv(bytes);
  const std::vector<InputRecord> inputs{record_input("dataset", input, bytes)};
  const PriorSpec priors = resolve_priors(config, data.n_covariates());
  const PosteriorFit fit = fit_dataset(data, kernel, priors, fo);

  // The partial fit is kept for diagnosis even when it did not converge.
  write_json_artifact(dir / "fit.json", to_json(fit), config, inputs);
  require_converged(fit, "fit");
  const auto rows = summarize(fit, level);
  write_csv_artifact(dir / "summary.csv", summary_to_csv(rows, level), config, inputs);
  out << fmt::format("{} fit: {} subjects, {} rows, {} infections\n", kernel, data.n_subjects(), data.n_rows(),
                     data.n_events());
  out << format_summary_table(rows, level);
}

void cmd_coverage(const RunConfig& config, std::ostream& out, std::ostream&) {
  const fs::path dir = config.text("output_dir");
  CoverageOptions opts;
  opts.n_replicates = config.integer("replicates");
  opts.workers = config.integer("workers");
  opts.level = level_of(config);
  opts.fit = fit_options(config);
  if (opts.n_replicates < 1) throw UsageError("replicates must be positive");
  if (opts.workers < 1) throw UsageError("workers must be positive");
  opts.models.clear();
  for (const auto& m : config.texts("models")) {
    if (m == "dare") opts.models.push_back(CoverageModel::Dare);
    else if (m == "glm") opts.models.push_back(CoverageModel::Glm);
    else throw UsageError(fmt::format("unknown model '{}' (expected dare or glm)", m));
  }
  if (opts.models.empty()) throw UsageError("models must not be empty");

  std::vector<SimConfig> cells;
  if (config.flag("full_grid")) {
    const SimConfig base = sim_config(config);
    for (SimConfig c : coverage_grid(config.seed())) {
      c.n_subjects = base.n_subjects;
      cells.push_back(c);
    }
  } else {
    cells.push_back(sim_config(config));
  }

  std::vector<CoverageRow> rows;
  for (const SimConfig& cell : cells) {
    const CoverageReport report = run_coverage(cell, opts);
    rows.insert(rows.end(), report.rows.begin(), report.rows.end());
  }
  write_csv_artifact(dir / "coverage.csv", coverage_to_csv(rows), config, {});

  out << fmt::format("{:<6} {:<13} {:>5} {:>6} {:<6} {:>6} {:>9} {:>9} {:>10}\n", "model", "dgp", "sigma", "theta1",
                     "coef", "truth", "coverage", "mean_est", "converged");
  for (const auto& r : rows) {
    out << fmt::format("{:<6} {:<13} {:>5g} {:>6} {:<6} {:>6g} {:>9.3f} {:>9.3f} {:>10}\n", r.model, r.dgp, r.sigma,
                       r.theta1 ? fmt::format("{:g}", *r.theta1) : "-", r.coefficient, r.truth, r.coverage,
                       r.mean_estimate, r.n_converged);
  }
}

void cmd_combine(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const fs::path manifest_path = config.text("manifest");
  const fs::path dir = config.text("output_dir");
  const double level = level_of(config);
  const FitOptions fo = fit_options(config);
  const std::vector<double> grid = config.has("nu_grid") ? config.numbers("nu_grid") : default_nu_grid();

  const std::string manifest_bytes = read_text(manifest_path);
  const json manifest = read_json(manifest_path);
  const fs::path base = manifest_path.parent_path();
  std::vector<InputRecord> inputs{record_input("manifest", manifest_path, manifest_bytes)};

  const std::string kernel = manifest.value("kernel", config.text("kernel"));
  if (kernel == "cloglog-glm") throw UsageError("combine needs DARE fits");
  kernel_from_string(kernel);
  if (!manifest.contains("pathogens") || !manifest["pathogens"].is_array() || manifest["pathogens"].size() < 2) {
    invalid("manifest must list at least two pathogens");
  }

  std::vector<std::string> labels;
  std::vector<PosteriorFit> fits;
  for (const json& p : manifest["pathogens"]) {
    const std::string label = checked_label(p.value("label", ""));
    if (std::find(labels.begin(), labels.end(), label) != labels.end()) {
      invalid(fmt::format("duplicate pathogen label '{}'", label));
    }
    labels.push_back(label);
    std::optional<Dataset> data;
    if (p.contains("data")) {
      const fs::path path = base / p["data"].get<std::string>();
      const std::string bytes = read_text(path);
      try {
        data = dataset_from_csv(bytes);
      } catch (const ValidationError& e) {
        std::vector<Issue> issues = e.issues();
        for (auto& i : issues) i.message = fmt::format("{}: {}", path.string(), i.message);
        throw ValidationError(std::move(issues));
      }
      inputs.push_back(record_input("dataset:" + label, path, bytes));
    }
    if (p.contains("fit")) {
      const fs::path path = base / p["fit"].get<std::string>();
      const std::string bytes = read_text(path);
      PosteriorFit fit = fit_from_json(read_json(path));
      inputs.push_back(record_input("fit:" + label, path, bytes));
      if (data && fit.dataset_digest != dataset_digest(*data)) {
        warn(err, fmt::format("fit for {} was made from different data than {} (digest mismatch)", label,
                              p["data"].get<std::string>()));
      }
      if (to_string(fit.model) != kernel) {
        invalid(fmt::format("fit for {} uses kernel {}, manifest asks for {}", label,
                                                   to_string(fit.model), kernel));
      }
      fits.push_back(std::move(fit));
    } else if (data) {
      PosteriorFit fit = fit_dataset(*data, kernel, resolve_priors(config, data->n_covariates()), fo);
      write_json_artifact(dir / fmt::format("fit_{}.json", label), to_json(fit), config, inputs);
      fits.push_back(std::move(fit));
    } else {
      invalid(fmt::format("pathogen {} needs a 'data' or 'fit' entry", label));
    }
    require_converged(fits.back(), "fit for " + label);
  }

  const std::vector<std::string>& names = fits.front().covariate_names;
  if (manifest.contains("covariates")) {
    std::vector<std::string> expected{std::string(kInterceptName)};
    for (const auto& c : manifest["covariates"]) expected.push_back(c.get<std::string>());
    for (std::size_t k = 0; k < fits.size(); ++k) {
      if (fits[k].covariate_names != expected) {
        invalid(fmt::format("covariates of {} do not match the manifest", labels[k]));
      }
    }
  }

  ShrinkagePlan plan;
  plan.n_pathogens = fits.size();
  plan.n_covariates = names.size();
  plan.n_dose_response = fits.front().spec().free_parameter_count();
  plan.pathogen_labels = labels;
  plan.shrink_sets.assign(names.size(), {});
  if (manifest.contains("shrink")) {
    for (const auto& [cov, members] : manifest["shrink"].items()) {
      const auto it = std::find(names.begin(), names.end(), cov);
      if (it == names.end()) invalid(fmt::format("shrink set names unknown covariate '{}'", cov));
      auto& set = plan.shrink_sets[static_cast<std::size_t>(it - names.begin())];
      for (const auto& m : members) {
        const auto li = std::find(labels.begin(), labels.end(), m.get<std::string>());
        if (li == labels.end()) {
          invalid(fmt::format("shrink set for '{}' names unknown pathogen {}", cov, m.dump()));
        }
        set.push_back(static_cast<std::size_t>(li - labels.begin()));
      }
    }
  }
  plan.validate();

  const JointFit joint = stack_fits(fits, plan);
  const Eigen::MatrixXd L = build_L(plan);
  const NuSelection sel = select_nu(joint, L, grid);
  const JointFit tilted = tilt_posterior(joint, L, sel.nu_star);

  json artifact = to_json(tilted);
  artifact["format"] = "dare-combined-fit/1";
  artifact["nu_star"] = sel.nu_star;
  artifact["n_subspace_columns"] = L.cols();
  artifact["untilted_eta_mode"] = to_json(joint)["eta_mode"];
  write_json_artifact(dir / "joint_fit.json", std::move(artifact), config, inputs);
  write_csv_artifact(dir / "nu_scores.csv", nu_scores_to_csv(sel), config, inputs);

  out << fmt::format("K = {} pathogens, Q = {} parameters, C = {} subspace columns\n", plan.n_pathogens,
                     plan.dimension(), L.cols());
  out << fmt::format("selected nu = {}\n", format_number(sel.nu_star));
  for (std::size_t k = 0; k < fits.size(); ++k) {
    const auto rows = summarize_joint(tilted, k, level);
    write_csv_artifact(dir / fmt::format("summary_{}.csv", labels[k]), summary_to_csv(rows, level), config, inputs);
    out << "\n" << labels[k] << "\n" << format_summary_table(rows, level);
  }
}

namespace {

struct Profile {
  std::string label;
  std::map<std::string, double> values;
};

Profile parse_profile(const std::string& text, std::size_t index) {
  Profile p;
  std::string body = text;
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    p.label = text.substr(0, colon);
    body = text.substr(colon + 1);
  } else {
    p.label = fmt::format("profile{}", index + 1);
  }
  std::size_t pos = 0;
  while (pos < body.size()) {
    const std::size_t comma = std::min(body.find(',', pos), body.size());
    const std::string item = body.substr(pos, comma - pos);
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError(fmt::format("profile entry '{}' must look like name=value", item));
    p.values[item.substr(0, eq)] = parse_number_list(item.substr(eq + 1), "profile value").at(0);
    pos = comma + 1;
  }
  return p;
}

}  // namespace

void cmd_report(const RunConfig& config, std::ostream& out, std::ostream&) {
  const fs::path input = config.text("input");
  const fs::path dir = config.text("output_dir");
  const std::vector<double> schedule = config.numbers("schedule");
  const int draws = config.integer("draws");
  const double level = level_of(config);
  const Horizon horizon = horizon_from_string(config.text("horizon"));

  const std::string bytes = read_text(input);
  const PosteriorFit fit = fit_from_json(read_json(input));
  require_converged(fit, "input fit");
  const std::vector<InputRecord> inputs{record_input("fit", input, bytes)};

  std::vector<Profile> profiles;
  const auto specs = config.texts("profile");
  for (std::size_t i = 0; i < specs.size(); ++i) profiles.push_back(parse_profile(specs[i], i));
  if (profiles.empty()) profiles.push_back({"baseline", {}});

  IncidenceOptions io;
  io.horizon = horizon;
  io.draws = draws;
  io.seed = config.seed();
  io.level = level;
  double days = 0.0;
  for (double t : schedule) days += t;

  std::vector<IncidenceRow> rows;
  for (const Profile& p : profiles) {
    std::vector<double> x(fit.n_beta(), 0.0);
    x[0] = 1.0;
    for (const auto& [name, value] : p.values) {
      const auto it = std::find(fit.covariate_names.begin() + 1, fit.covariate_names.end(), name);
      if (it == fit.covariate_names.end()) throw UsageError(fmt::format("profile names unknown covariate '{}'", name));
      x[static_cast<std::size_t>(it - fit.covariate_names.begin())] = value;
    }
    IncidenceRow row{p.label, horizon, days, predict_incidence(fit, x, schedule, io), level, 1.0};
    if (!rows.empty()) row.ratio_to_first = row.summary.at_mode / rows.front().summary.at_mode;
    rows.push_back(row);
  }
  write_csv_artifact(dir / "incidence.csv", incidence_to_csv(rows), config, inputs);

  out << fmt::format("{:g}-day incidence proportion ({})\n", days, to_string(horizon));
  for (const auto& r : rows) {
    out << fmt::format("{:<16} {:.3f}  ({:.3f}, {:.3f})  ratio {:.2f}\n", r.profile, r.summary.median, r.summary.ci_low,
                       r.summary.ci_high, r.ratio_to_first);
  }
}

}  // namespace dare::cli

#include "cli.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "artifacts.hpp"
#include "commands.hpp"
#include "run_config.hpp"

namespace dare::cli {

using nlohmann::json;

namespace {

enum class Kind { Text, Number, Integer, List };

struct FlagSpec {
  std::string flag;
  std::string key;
  Kind kind;
  std::string help;
};

const std::vector<FlagSpec>& flag_specs() {
  static const std::vector<FlagSpec> specs{
      {"--input", "input", Kind::Text, "input file (dataset CSV for fit, fit JSON for report)"},
      {"--output-dir", "output_dir", Kind::Text, "directory for artifacts"},
      {"--kernel", "kernel", Kind::Text, "exponential, beta-poisson (or cloglog-glm for fit)"},
      {"--nq", "nq", Kind::Integer, "Gauss-Hermite nodes"},
      {"--seed", "seed", Kind::Integer, "master seed (default: DARE_SEED or 1)"},
      {"--level", "level", Kind::Number, "credible level"},
      {"--replicates", "replicates", Kind::Integer, "replicates per coverage cell"},
      {"--workers", "workers", Kind::Integer, "worker threads"},
      {"--manifest", "manifest", Kind::Text, "combine manifest JSON"},
      {"--schedule", "schedule", Kind::List, "interval lengths in days, e.g. 1,2,2,2,7"},
      {"--draws", "draws", Kind::Integer, "posterior draws"},
      {"--nu-grid", "nu_grid", Kind::List, "comma-separated shrinkage grid"},
      {"--horizon", "horizon", Kind::Text, "by_schedule or single_interval"},
      {"--restarts", "restarts", Kind::Integer, "jittered optimizer restarts"},
      {"--sigma", "sigma", Kind::Number, "dose spread of the simulated population"},
      {"--theta1", "theta1", Kind::Number, "beta-Poisson shape of the simulation"},
      {"--subjects", "subjects", Kind::Integer, "subjects per simulated dataset"},
  };
  return specs;
}

json convert(const FlagSpec& spec, const std::string& value) {
  switch (spec.kind) {
    case Kind::Text:
      return value;
    case Kind::Number: {
      const auto v = parse_number_list(value, spec.flag);
      if (v.size() != 1) throw UsageError(fmt::format("{} takes a single number", spec.flag));
      return v[0];
    }
    case Kind::Integer: {
      std::int64_t v = 0;
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw UsageError(fmt::format("{}: '{}' is not an integer", spec.flag, value));
      }
      if (spec.key == "seed") {
        if (v < 0) throw UsageError("--seed must be non-negative");
        return static_cast<std::uint64_t>(v);
      }
      return v;
    }
    case Kind::List: {
      json a = json::array();
      for (double v : parse_number_list(value, spec.flag)) a.push_back(v);
      return a;
    }
  }
  return nullptr;
}

// A --profile argument is either "label:name=value,..." or a JSON file with
// [{"label": ..., "values": {name: value}}].
std::vector<std::string> expand_profiles(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  for (const auto& a : args) {
    if (a.size() < 5 || a.substr(a.size() - 5) != ".json") {
      out.push_back(a);
      continue;
    }
    const json j = read_json(a);
    if (!j.is_array()) throw UsageError(fmt::format("profile file '{}' must hold a list", a));
    for (const auto& p : j) {
      std::string s = p.value("label", fmt::format("profile{}", out.size() + 1)) + ":";
      bool first = true;
      for (const auto& [name, value] : p.value("values", json::object()).items()) {
        s += fmt::format("{}{}={}", first ? "" : ",", name, value.dump());
        first = false;
      }
      out.push_back(s);
    }
  }
  return out;
}

struct Subcommand {
  std::string name;
  std::string help;
  std::function<void(const RunConfig&, std::ostream&, std::ostream&)> run;
};

json error_json(const std::string& type, const std::string& message, const std::vector<Issue>& issues = {}) {
  json e = {{"type", type}, {"message", message}};
  if (!issues.empty()) {
    json a = json::array();
    for (const auto& i : issues) a.push_back({{"row", i.row}, {"column", i.column}, {"message", i.message}});
    e["issues"] = std::move(a);
  }
  return {{"error", std::move(e)}};
}

int report(std::ostream& err, int code, const json& body) {
  err << body.dump() << '\n';
  return code;
}

int run_checked(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  const std::vector<Subcommand> commands{
      {"simulate", "simulate a cohort dataset", cmd_simulate},
      {"fit", "fit a dose-accrual or cloglog model to a dataset", cmd_fit},
      {"coverage", "run a frequentist coverage study", cmd_coverage},
      {"combine", "combine per-pathogen fits with subspace shrinkage", cmd_combine},
      {"report", "predict incidence proportions from a fit", cmd_report},
  };

  CLI::App app{"Dose-accrual regression for cohort infection data", "dare"};
  app.require_subcommand(1);
  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, std::vector<std::string>> profiles;
  std::map<std::string, std::string> config_files;
  std::map<std::string, bool> full_grid;

  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    const RunConfig defaults(c.name);
    sub->add_option("--config", config_files[c.name], "JSON config file (flags override it)");
    for (const auto& spec : flag_specs()) {
      if (!defaults.resolved().contains(spec.key)) continue;
      sub->add_option(spec.flag, values[c.name][spec.key], spec.help);
    }
    if (c.name == "report") sub->add_option("--profile", profiles[c.name], "label:name=value,... or a JSON file");
    if (c.name == "coverage") sub->add_flag("--full-grid", full_grid[c.name], "run all twelve design cells");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();  // delegates to the selected subcommand
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    return report(err, kExitUsage, error_json("usage", e.what()));
  }

  try {
    const CLI::App* chosen = app.get_subcommands().front();
    const std::string name = chosen->get_name();
    const auto given = [&](const std::string& flag) {
      const CLI::Option* o = chosen->get_option_no_throw(flag);
      return o != nullptr && o->count() > 0;
    };
    RunConfig config(name);
    if (!config_files[name].empty()) config.merge(read_json(config_files[name]));
    for (const auto& spec : flag_specs()) {
      if (!config.resolved().contains(spec.key) || !given(spec.flag)) continue;
      config.set(spec.key, convert(spec, values[name][spec.key]));
    }
    if (given("--profile")) config.set("profile", expand_profiles(profiles[name]));
    if (given("--full-grid")) config.set("full_grid", full_grid[name]);

    for (const auto& c : commands) {
      if (c.name == name) c.run(config, out, err);
    }
    return kExitOk;
  } catch (const UsageError& e) {
    return report(err, kExitUsage, error_json("usage", e.what()));
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  try {
    return run_checked(argc, argv, out, err);
  } catch (const UsageError& e) {
    return report(err, kExitUsage, error_json("usage", e.what()));
  } catch (const ValidationError& e) {
    return report(err, kExitValidation, error_json("validation", e.what(), e.issues()));
  } catch (const NumericalError& e) {
    return report(err, kExitNumerical, error_json("numerical", e.what()));
  } catch (const IoError& e) {
    return report(err, kExitIo, error_json("io", e.what()));
  } catch (const std::exception& e) {
    return report(err, kExitFailure, error_json("error", e.what()));
  }
}

}  // namespace dare::cli

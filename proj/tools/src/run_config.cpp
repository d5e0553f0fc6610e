#include "run_config.hpp"

#include <charconv>
#include <cstdlib>

#include <fmt/format.h>

namespace dare::cli {

using nlohmann::json;

namespace {

std::uint64_t default_seed() {
  const char* env = std::getenv("DARE_SEED");
  if (env == nullptr || *env == '\0') return 1;
  std::uint64_t v = 0;
  const std::string_view s(env);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw UsageError(fmt::format("DARE_SEED must be a non-negative integer (got '{}')", s));
  }
  return v;
}

json defaults_for(const std::string& command) {
  const json schedule = {1, 2, 2, 2, 7};
  json j = {{"output_dir", "."}, {"seed", default_seed()}};
  if (command == "simulate") {
    j.update({{"kernel", "beta-poisson"},
              {"sigma", 1.0},
              {"theta1", 1.0},
              {"subjects", 215},
              {"visit_days", {1, 3, 5, 7, 14}},
              {"true_beta", {-4.6, 0.0, 0.5, 1.0}}});
  } else if (command == "fit") {
    j.update({{"input", nullptr},
              {"kernel", "beta-poisson"},
              {"nq", 50},
              {"level", 0.95},
              {"restarts", 2},
              {"priors", nullptr}});
  } else if (command == "coverage") {
    j.update({{"kernel", "beta-poisson"},
              {"sigma", 1.0},
              {"theta1", 1.0},
              {"subjects", 215},
              {"visit_days", {1, 3, 5, 7, 14}},
              {"true_beta", {-4.6, 0.0, 0.5, 1.0}},
              {"replicates", 200},
              {"workers", 1},
              {"level", 0.95},
              {"nq", 50},
              {"restarts", 2},
              {"full_grid", false},
              {"models", {"dare", "glm"}}});
  } else if (command == "combine") {
    j.update({{"manifest", nullptr},
              {"kernel", "beta-poisson"},
              {"nq", 50},
              {"level", 0.95},
              {"restarts", 2},
              {"nu_grid", nullptr}});
  } else if (command == "report") {
    j.update({{"input", nullptr},
              {"profile", json::array()},
              {"schedule", schedule},
              {"horizon", "by_schedule"},
              {"draws", 4000},
              {"level", 0.95}});
  } else {
    throw UsageError(fmt::format("unknown command '{}'", command));
  }
  return j;
}

}  // namespace

RunConfig::RunConfig(std::string command) : command_(std::move(command)), values_(defaults_for(command_)) {}

void RunConfig::merge(const json& file) {
  if (!file.is_object()) throw UsageError("config file must hold a JSON object");
  for (const auto& [key, value] : file.items()) {
    if (key == "command") {
      if (value != command_) throw UsageError(fmt::format("config file is for '{}', not '{}'", value.dump(), command_));
      continue;
    }
    if (!values_.contains(key)) throw UsageError(fmt::format("unknown config key '{}' for '{}'", key, command_));
    values_[key] = value;
  }
}

void RunConfig::set(const std::string& key, json value) {
  if (!values_.contains(key)) throw UsageError(fmt::format("option '{}' does not apply to '{}'", key, command_));
  values_[key] = std::move(value);
}

bool RunConfig::has(const std::string& key) const { return values_.contains(key) && !values_[key].is_null(); }

const json& RunConfig::at(const std::string& key) const {
  if (!has(key)) throw UsageError(fmt::format("'{}' requires --{}", command_, key == "output_dir" ? "output-dir" : key));
  return values_[key];
}

std::string RunConfig::text(const std::string& key) const {
  const json& v = at(key);
  if (!v.is_string()) throw UsageError(fmt::format("'{}' must be a string", key));
  return v.get<std::string>();
}

double RunConfig::number(const std::string& key) const {
  const json& v = at(key);
  if (!v.is_number()) throw UsageError(fmt::format("'{}' must be a number", key));
  return v.get<double>();
}

int RunConfig::integer(const std::string& key) const {
  const json& v = at(key);
  if (!v.is_number_integer()) throw UsageError(fmt::format("'{}' must be an integer", key));
  return v.get<int>();
}

std::uint64_t RunConfig::seed() const {
  const json& v = at("seed");
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw UsageError("'seed' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

bool RunConfig::flag(const std::string& key) const {
  const json& v = at(key);
  if (!v.is_boolean()) throw UsageError(fmt::format("'{}' must be true or false", key));
  return v.get<bool>();
}

std::vector<double> RunConfig::numbers(const std::string& key) const {
  const json& v = at(key);
  if (v.is_string()) return parse_number_list(v.get<std::string>(), key);
  std::vector<double> out;
  if (!v.is_array()) throw UsageError(fmt::format("'{}' must be a list of numbers", key));
  for (const auto& e : v) {
    if (!e.is_number()) throw UsageError(fmt::format("'{}' must be a list of numbers", key));
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<std::string> RunConfig::texts(const std::string& key) const {
  const json& v = at(key);
  std::vector<std::string> out;
  if (!v.is_array()) throw UsageError(fmt::format("'{}' must be a list of strings", key));
  for (const auto& e : v) {
    if (!e.is_string()) throw UsageError(fmt::format("'{}' must be a list of strings", key));
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::vector<double> parse_number_list(std::string_view text, std::string_view what) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    std::string_view item = text.substr(pos, comma - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      throw UsageError(fmt::format("{}: '{}' is not a number", what, item));
    }
    out.push_back(v);
    pos = comma + 1;
  }
  return out;
}

}  // namespace dare::cli

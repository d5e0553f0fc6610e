#pragma once

// Resolved command configuration: per-command defaults, overlaid by a JSON
// config file, overlaid by command-line flags. The resolved object is echoed
// into every artifact.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dare/error.hpp"

namespace dare::cli {

struct UsageError : Error {
  using Error::Error;
};

class RunConfig {
 public:
  // Defaults for `command`; the seed default comes from DARE_SEED when set.
  explicit RunConfig(std::string command);

  const std::string& command() const { return command_; }
  const nlohmann::json& resolved() const { return values_; }

  // Overlays a config file object. Unknown keys are usage errors; a "command"
  // key, when present, must name this command.
  void merge(const nlohmann::json& file);
  void set(const std::string& key, nlohmann::json value);

  bool has(const std::string& key) const;  // present and not null
  std::string text(const std::string& key) const;
  double number(const std::string& key) const;
  int integer(const std::string& key) const;
  std::uint64_t seed() const;
  bool flag(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<std::string> texts(const std::string& key) const;

 private:
  const nlohmann::json& at(const std::string& key) const;

  std::string command_;
  nlohmann::json values_;
};

// "1,2,2,2,7" -> {1, 2, 2, 2, 7}
std::vector<double> parse_number_list(std::string_view text, std::string_view what);

}  // namespace dare::cli

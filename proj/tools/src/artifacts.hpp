#pragma once

// File plumbing shared by the subcommands.

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "dare/error.hpp"

namespace dare::cli {

struct IoError : Error {
  using Error::Error;
};

std::string read_text(const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it into place.
void write_atomic(const std::filesystem::path& path, std::string_view content);

// Two-space indented JSON with a trailing newline.
std::string dump_json(const nlohmann::json& j);

struct InputRecord {
  std::string role;
  std::string path;
  std::string sha256;
};

nlohmann::json to_json(const InputRecord& input);
InputRecord record_input(std::string role, const std::filesystem::path& path, std::string_view bytes);

}  // namespace dare::cli

#include "artifacts.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "dare/serialization.hpp"

namespace dare::cli {

namespace fs = std::filesystem;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot read '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError({{0, "", fmt::format("'{}' is not valid JSON: {}", path.string(), e.what())}});
  }
}

void write_atomic(const fs::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError(fmt::format("cannot create directory '{}': {}", path.parent_path().string(), ec.message()));
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write '{}'", tmp.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError(fmt::format("failed writing '{}'", tmp.string()));
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError(fmt::format("cannot move '{}' into place: {}", path.string(), ec.message()));
  }
}

std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

nlohmann::json to_json(const InputRecord& input) {
  return {{"role", input.role}, {"path", input.path}, {"sha256", input.sha256}};
}

InputRecord record_input(std::string role, const fs::path& path, std::string_view bytes) {
  return {std::move(role), path.string(), sha256_hex(bytes)};
}

}  // namespace dare::cli

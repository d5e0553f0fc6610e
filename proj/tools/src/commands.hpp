#pragma once

#include <ostream>

#include "run_config.hpp"

namespace dare::cli {

// Each command writes its artifacts under output_dir and a short human
// summary to `out`; non-fatal warnings go to `err` as JSON lines.
void cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err);
void cmd_fit(const RunConfig& config, std::ostream& out, std::ostream& err);
void cmd_coverage(const RunConfig& config, std::ostream& out, std::ostream& err);
void cmd_combine(const RunConfig& config, std::ostream& out, std::ostream& err);
void cmd_report(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace dare::cli

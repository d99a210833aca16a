#pragma once
#include "hfx/config.hpp"

namespace hfx {

// Subcommand bodies. Each reads its inputs per the RunConfig, writes its
// data products plus a <command>_manifest.json into output_dir, reports
// progress on stderr, and returns 0. Failures surface as hfx::Error; the
// CLI maps the category to the exit code.
int cmd_compute(const RunConfig& cfg);
int cmd_field(const RunConfig& cfg);
int cmd_compare(const RunConfig& cfg);
int cmd_position(const RunConfig& cfg);
int cmd_synth(const RunConfig& cfg);
int cmd_convert(const RunConfig& cfg);

} // namespace hfx

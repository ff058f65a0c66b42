#pragma once

#include <ostream>

#include "ragfuse/pipeline.hpp"

namespace ragfuse {

struct CliInvocation {
    Command command = Command::Run;
    RunConfig config;
};

/// Parses `ragfuse <index|filter|run|report> [flags]`. A `--config` file of
/// `key = value` lines supplies defaults; flags on the command line win.
/// Returns the process exit code; output goes to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ragfuse

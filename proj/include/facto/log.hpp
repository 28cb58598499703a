#pragma once

#include <string_view>

namespace facto {

enum class LogLevel { Quiet = 0, Info = 1, Trace = 2 };

/// Level from the FACTO_LOG environment variable (quiet, info, trace); info when unset.
LogLevel log_level();
void set_log_level(LogLevel level);

/// Writes one line to stderr when `level` is enabled.
void log_line(LogLevel level, std::string_view message);

}  // namespace facto

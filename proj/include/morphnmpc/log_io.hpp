#pragma once

// CSV logs, flat metrics files and two-column plot series.

#include <filesystem>
#include <string>
#include <vector>

#include "morphnmpc/harness.hpp"

namespace morphnmpc {

/// Channel names accepted by emit_series, in log column order.
const std::vector<std::string>& series_channels();

/// Value of `channel` in `row`; throws ConfigError listing the channels if unknown.
double channel_value(const LogRow& row, const std::string& channel);

/// One header row naming every channel, then one row per control step (%.9g).
std::string format_log_csv(const SimLog& log);

/// `key = value` lines; absent values are written as `none`.
std::string format_metrics(const SimLog& log, const Metrics& metrics);

void write_log_csv(const SimLog& log, const std::filesystem::path& path);
void write_metrics(const SimLog& log, const Metrics& metrics, const std::filesystem::path& path);

/**
 * Writes `<dir>/<channel>.dat` with "t value" lines for each channel. All names
 * are checked before anything is written. Returns the files written.
 */
std::vector<std::filesystem::path> emit_series(const SimLog& log, const std::vector<std::string>& channels,
                                               const std::filesystem::path& dir);

}  // namespace morphnmpc

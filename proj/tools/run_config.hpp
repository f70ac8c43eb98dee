#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

// Run configuration files hold option defaults for one subcommand, either as
// a JSON object or as `key = value` lines (`#` starts a comment). Keys are
// long option names without the dashes. List values may be JSON arrays or
// comma-separated strings.

namespace powerset::cli {

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

ConfigEntries load_run_config(const std::filesystem::path& path);
ConfigEntries parse_run_config(const std::string& text, const std::string& origin);

/// Splices the entries of every `--config PATH` in args in front of the
/// explicit options, right after the subcommand, so explicit flags win.
std::vector<std::string> expand_config_arguments(const std::vector<std::string>& args);

}  // namespace powerset::cli

#pragma once

#include <filesystem>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

namespace tracelab::cli {

struct Common {
  std::filesystem::path out = ".";
  unsigned workers = 0;
  unsigned long long seed = 1;
  std::string precision = "standard";
  bool dry_run = false;
};

/// Registers every subcommand on app. Each sets `run` to its action.
void register_commands(CLI::App& app, Common& common, std::function<int()>& run);

}  // namespace tracelab::cli

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "commands.hpp"
#include "tracelab/defaults.hpp"
#include "tracelab/errors.hpp"

int main(int argc, char** argv) {
  using tracelab::cli::Common;
  CLI::App app{"Numerical laboratory for the Fibonacci trace map", "tracelab"};
  app.set_version_flag("--version", std::string("tracelab ") + tracelab::library_version());
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--out", common.out, "output directory");
  app.add_option("--workers", common.workers, "parallel workers (default: TRACELAB_WORKERS or all cores)");
  app.add_option("--seed", common.seed, "random seed");
  app.add_option("--precision", common.precision)->check(CLI::IsMember({"standard", "extended"}));
  app.add_flag("--dry-run", common.dry_run, "validate and print the resolved plan");
  std::function<int()> run;
  tracelab::cli::register_commands(app, common, run);

  auto report = [](const std::string& kind, const std::string& msg) {
    std::cerr << nlohmann::json{{"error", kind}, {"message", msg}}.dump() << '\n';
  };
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report("InvalidArgument", e.what());
    return 2;
  }
  try {
    return run ? run() : 2;
  } catch (const tracelab::Error& e) {
    report(std::string(tracelab::to_string(e.kind())), e.what());
    return e.is_config_error() ? 2 : 3;
  } catch (const nlohmann::json::exception& e) {
    report("InvalidArgument", e.what());
    return 2;
  } catch (const std::exception& e) {
    report("Failure", e.what());
    return 3;
  }
}

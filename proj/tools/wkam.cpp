#include <cstdio>
#include <iostream>
#include <string>

#include <omp.h>

#include "CLI11.hpp"
#include "wkam/error.hpp"
#include "wkam/pipeline.hpp"

int main(int argc, char **argv) {
  CLI::App app{"Numerical weak KAM toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  wkam::RunOptions options;
  bool json = false;
  int threads = 0;
  app.add_option("--threads", threads, "Cap on OpenMP worker threads")
      ->check(CLI::NonNegativeNumber);

  const char *names[] = {"critical", "aubry", "strict", "regularize", "verify"};
  const char *help[] = {
      "Critical value by bisection and from the action kernel",
      "Aubry set masks at three thresholds",
      "Strict critical subsolution",
      "C^{1,1} regularization of the strict subsolution",
      "Property suite across all modules"};
  for (int i = 0; i < 5; ++i) {
    auto *sub = app.add_subcommand(names[i], help[i]);
    sub->add_option("config", config_path, "INI config or run manifest")
        ->required();
    sub->add_option("--out", options.out_dir, "Output directory");
    sub->add_flag("--json", json, "Print the report as JSON");
    if (i > 0 && i < 4)
      sub->add_flag("--compute-c", options.compute_c,
                    "Compute c when no cached value matches");
  }
  CLI11_PARSE(app, argc, argv);
  if (threads > 0)
    omp_set_num_threads(threads);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const wkam::Config config = wkam::load_config(config_path);
    wkam::CommandResult result;
    if (command == "critical")
      result = wkam::cmd_critical(config, options);
    else if (command == "aubry")
      result = wkam::cmd_aubry(config, options);
    else if (command == "strict")
      result = wkam::cmd_strict(config, options);
    else if (command == "regularize")
      result = wkam::cmd_regularize(config, options);
    else
      result = wkam::cmd_verify(config, options);
    if (json)
      std::cout << wkam::report_json(result).dump(2) << '\n';
    else
      std::cout << wkam::format_report(result);
    return result.exit_code();
  } catch (const std::exception &e) {
    std::fprintf(stderr, "wkam %s: %s\n", command.c_str(), e.what());
    return wkam::exit_code_for(e);
  }
}

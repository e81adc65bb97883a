#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "evodyn/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Evolutionary dynamics simulator and certification toolkit"};
  app.require_subcommand(1);

  std::string config;
  evodyn::CommandOptions opts;
  bool verbose = false;

  auto* simulate = app.add_subcommand("simulate", "Integrate every (rule, initial condition) pair of a scenario");
  simulate->add_option("config", config, "Config file or bundled scenario name")->required();
  simulate->add_option("--output-dir", opts.output_dir, "Write CSVs, SVG and report under this directory");
  simulate->add_flag("--allow-pure-imitation", opts.allow_pure_imitation,
                     "Accept rules outside the hybrid cone (alpha_CO + alpha_EP = 0)");

  auto* certify = app.add_subcommand("certify", "Check NI, CCW, positive correlation and Nash stationarity");
  certify->add_option("config", config, "Config file or bundled scenario name")->required();
  certify->add_option("--output-dir", opts.output_dir, "Write the certification report under this directory");
  certify->add_flag("--allow-pure-imitation", opts.allow_pure_imitation,
                    "Accept rules outside the hybrid cone (alpha_CO + alpha_EP = 0)");

  auto* list = app.add_subcommand("list-scenarios", "List bundled scenarios");
  list->add_flag("-v,--verbose", verbose, "Include parameter summaries");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return evodyn::kExitConfigError;
  }

  if (*simulate) return evodyn::cmd_simulate(config, opts, std::cout, std::cerr);
  if (*certify) return evodyn::cmd_certify(config, opts, std::cout, std::cerr);
  return evodyn::cmd_list_scenarios(verbose, std::cout, std::cerr);
}

#include "sonicctl/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"sonicctl: local boundary control to a sonic equilibrium"};
  app.require_subcommand(1);
  app.fallthrough();

  sonicctl::CliArgs args;
  std::string output_dir, epsilon;
  int nx = 0;
  app.add_option("--config", args.config, "INI configuration file");
  auto* out_opt = app.add_option("--output-dir", output_dir, "directory for CSV, summary and manifest");
  auto* nx_opt = app.add_option("--nx", nx, "grid cells on [0, L]");
  auto* eps_opt = app.add_option("--epsilon", epsilon, "control size, or auto");

  struct Command {
    const char* name;
    const char* help;
    const char* files;
  };
  const Command commands[] = {
      {"check", "certify the bracket hypotheses at u*", nullptr},
      {"plan", "build the zigzag plan and return trajectory", nullptr},
      {"wave", "build one simple wave from u*", nullptr},
      {"run", "steer phi to psi and write the boundary controls", "PHI_CSV PSI_CSV"},
      {"simulate", "solve the initial-boundary value problem from data", "DATA_CSV"},
  };
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    if (c.files) sub->add_option("files", args.files, c.files);
    sub->callback([&args, name = std::string(c.name)] { args.command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : sonicctl::kExitValidation;
  }
  if (*out_opt) args.output_dir = output_dir;
  if (*nx_opt) args.nx = nx;
  if (*eps_opt) args.epsilon = epsilon;
  return sonicctl::dispatch(args, std::cout, std::cerr);
}

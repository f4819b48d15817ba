#include <iostream>

#include "CLI11.hpp"
#include "fbvp/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Free boundary values variational problems on planar domains"};
  app.require_subcommand(1);
  fbvp::cli::Options opt;
  std::string chart;
  std::uint64_t seed = 0;
  double tol = 0.0;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"el", "print the Euler-Lagrange expression"},
      {"nbc", "print the natural boundary conditions, optionally in a boundary chart"},
      {"prolong", "print the lifts of the configured point transformation"},
      {"solve", "solve the free boundary problem and write CSV results"},
      {"local-family", "trace the one-endpoint solution family at the configured anchor"},
      {"verify", "run the decomposition, prolongation and invariance suites"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "problem config (INI)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--tol", tol, "solver tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--chart", chart, "boundary chart")->check(CLI::IsMember({"affine", "tubular"}));
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  for (CLI::App* sub : subs) {
    if (!sub->parsed()) continue;
    if (sub->count("--seed")) opt.seed = seed;
    if (sub->count("--tol")) opt.tol = tol;
    if (sub->count("--chart")) opt.chart = fbvp::cli::ProblemConfig::parse_chart(chart);
    return fbvp::cli::run(sub->get_name(), opt, std::cout, std::cerr);
  }
  return 1;
}

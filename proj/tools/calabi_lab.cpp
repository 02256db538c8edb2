#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "calabi/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Calabi-symmetric Kahler-Ricci flow lab"};
  app.require_subcommand(1);

  std::string config;
  auto* run = app.add_subcommand("run", "integrate one configuration and write its diagnostics");
  run->add_option("config", config, "JSON run configuration")->required();

  int m = 0, n = 1;
  double a = 1.0, x_max = 1e3;
  std::string soliton_dir = ".";
  auto* sol = app.add_subcommand("soliton", "solve for c* and tabulate the soliton profile");
  sol->add_option("--m", m, "fibre parameter m")->required();
  sol->add_option("--n", n, "base dimension n")->required();
  sol->add_option("--a", a, "class coefficient a")->required();
  sol->add_option("--x-max", x_max, "right end of the tabulated range");
  sol->add_option("--out", soliton_dir, "output directory");

  std::string sweep_dir, sweep_out;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  auto* sweep = app.add_subcommand("sweep", "run every config in a directory");
  sweep->add_option("dir", sweep_dir, "directory of JSON configs")->required();
  sweep->add_option("--jobs", jobs, "concurrent runs")->check(CLI::PositiveNumber);
  sweep->add_option("--out", sweep_out, "output directory (default <dir>/sweep)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return calabi::cmd_run(config, std::cout, std::cerr);
    if (*sol)
      return calabi::cmd_soliton(m, n, a, x_max, calabi::output_directory(soliton_dir), std::cout,
                                 std::cerr);
    if (sweep_out.empty()) sweep_out = sweep_dir + "/sweep";
    return calabi::cmd_sweep(sweep_dir, jobs, calabi::output_directory(sweep_out), std::cout,
                             std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

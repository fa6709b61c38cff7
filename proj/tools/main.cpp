#include <CLI11.hpp>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "branchwave/errors.hpp"
#include "branchwave/runner.hpp"

namespace bw = branchwave;

int main(int argc, char** argv) {
  CLI::App app{"Wave packets on branched coverings of the plane"};
  app.require_subcommand(1);

  std::string config, out_dir = "out", parameter;
  std::vector<double> values;
  int threads = 1;
  bool quiet = false;

  app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--quiet", quiet, "Suppress progress and summary output");

  auto* run = app.add_subcommand("run", "Run one experiment");
  auto* sweep = app.add_subcommand("sweep", "Repeat an experiment over parameter values");
  auto* validate = app.add_subcommand("validate", "Check a config without running it");
  auto* export_grid = app.add_subcommand("export-grid", "Write grid adjacency and initial state");
  for (auto* sub : {run, sweep, validate, export_grid}) {
    sub->fallthrough();
    sub->add_option("--config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  }
  for (auto* sub : {run, sweep, export_grid}) sub->add_option("--out", out_dir, "Output directory");
  sweep->add_option("--param", parameter, "Dotted config path, e.g. packet.s")->required();
  sweep->add_option("--values", values, "Values for the parameter")->required()->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  bw::RunOptions opts;
  opts.out_dir = out_dir;
  opts.threads = threads;
  opts.quiet = quiet;
  opts.log = &std::cerr;
  try {
    const std::string text = bw::read_text_file(config);
    if (*run) {
      const bw::RunResult r = bw::run_config(text, opts);
      if (!quiet) std::cout << r.summary_json << "\n";
    } else if (*sweep) {
      const bw::SweepResult r = bw::run_sweep(text, parameter, values, opts);
      if (!quiet) std::cout << "wrote " << out_dir << "/sweep.csv and sweep.json\n";
      if (r.failures > 0) {
        std::cerr << r.failures << " sweep run(s) failed; see sweep.csv\n";
        return bw::exit_code_for(r.first_error);
      }
    } else if (*validate) {
      bw::validate_config(text);
      if (!quiet) std::cout << "config ok\n";
    } else if (*export_grid) {
      for (const auto& f : bw::export_grid(text, out_dir))
        if (!quiet) std::cout << out_dir << "/" << f << "\n";
    }
  } catch (const bw::Error& e) {
    std::cerr << e.what() << "\n";
    return bw::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "NumericalFailure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

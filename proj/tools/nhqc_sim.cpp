// nhqc-sim: runs preset or user-defined gate experiments and writes CSV / SVG output.

#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "nhqc/experiments.hpp"

namespace {

unsigned default_threads() {
  if (const char* env = std::getenv("NHQC_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return static_cast<unsigned>(n);
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring invalid NHQC_THREADS='" << env << "'\n";
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace nhqc;
  CLI::App app{"Nonadiabatic holonomic gate simulator"};
  std::string command;
  std::string config_path, out_path, svg_path, dynamics_path, dump_path, beta_arg;
  int grid = 0;
  unsigned threads = 0;
  double dt = 0.0;

  std::string presets;
  for (const auto& n : experiments::preset_names()) presets += (presets.empty() ? "" : ", ") + n;
  app.add_option("command", command, "Preset name (" + presets + ") or 'run'")->required();
  app.add_option("--config", config_path, "Experiment JSON for 'run'");
  app.add_option("--grid", grid, "Points per sweep axis (overrides the preset)")
      ->check(CLI::PositiveNumber);
  app.add_option("--threads", threads, "Worker threads (default: NHQC_THREADS or 1)")
      ->check(CLI::PositiveNumber);
  app.add_option("--dt", dt, "RK4 step in ns")->check(CLI::PositiveNumber);
  app.add_option("--out", out_path, "CSV output path (default: stdout)");
  app.add_option("--svg", svg_path, "Heatmap SVG output path");
  app.add_option("--dynamics", dynamics_path, "Time-series CSV output path");
  app.add_option("--beta-ref", beta_arg, "Reference modulation depth, or 'auto'");
  app.add_option("--dump-config", dump_path, "Write the resolved experiment JSON and exit");
  CLI11_PARSE(app, argc, argv);

  try {
    experiments::ExperimentConfig cfg;
    if (command == "run") {
      if (config_path.empty()) throw std::invalid_argument("'run' needs --config <file.json>");
      cfg = experiments::config_from_json(serialization::read_json_file(config_path));
    } else {
      cfg = experiments::preset(command);
    }
    if (grid > 0)
      for (auto& ax : cfg.sweep)
        if (ax.count > 1) ax.count = grid;
    if (dt > 0.0) cfg.integrator.dt = dt;
    if (!beta_arg.empty()) {
      if (beta_arg == "auto")
        cfg.beta_ref.reset();
      else
        cfg.beta_ref = std::stod(beta_arg);
    }
    if (!dynamics_path.empty()) cfg.metrics.dynamics = true;
    cfg.validate();
    if (!dump_path.empty()) {
      serialization::write_json_file(experiments::config_to_json(cfg), dump_path);
      return 0;
    }

    const unsigned n_threads = threads > 0 ? threads : default_threads();
    const auto result = experiments::run(cfg, n_threads);
    for (std::size_t i = 0; i < cfg.cases.size(); ++i)
      std::cerr << cfg.cases[i].label << ": beta_ref = " << result.calibrated_beta[i] << '\n';
    for (const auto& r : result.rows)
      if (r.failed) std::cerr << "point failed (" << r.case_label << "): " << r.error << '\n';

    const std::string csv = experiments::csv_string(result, cfg);
    if (out_path.empty())
      std::cout << csv;
    else
      experiments::write_text(csv, out_path);
    if (!svg_path.empty()) experiments::emit_heatmap_svg(result, cfg, svg_path);
    if (!dynamics_path.empty()) {
      if (result.traces.empty())
        std::cerr << "warning: no dynamics traces (cases need an initial_state)\n";
      else
        experiments::emit_dynamics_csv(result.traces, dynamics_path);
    }
    return result.any_failed() ? 2 : 0;
  } catch (const std::exception& e) {
    std::cerr << "nhqc-sim: " << e.what() << '\n';
    return 1;
  }
}

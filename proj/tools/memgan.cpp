// memgan: training, sweeps and cost reports for the crossbar GAN accelerator model.

#include "memgan/experiments.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <iomanip>
#include <iostream>

using namespace memgan;

namespace {

struct Common {
  std::string config;
  std::optional<std::string> bits;
  std::optional<int> parallelism;
  std::optional<int> iters;
  std::optional<long long> seed;
  std::optional<std::string> out;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "flat key = value config file");
  app->add_option("--bits", c.bits, "float, 16, 8 or 4 (precision-sweep: comma-separated list)");
  app->add_option("--parallelism", c.parallelism, "forward-flow replicas s");
  app->add_option("--iters", c.iters, "training iterations");
  app->add_option("--seed", c.seed, "random seed");
  app->add_option("--out", c.out, "output directory");
}

ExperimentConfig resolve(const Common& c, bool bits_is_list) {
  ExperimentConfig cfg;
  if (!c.config.empty()) {
    const std::filesystem::path path(c.config);
    cfg = ExperimentConfig::from_config(KeyValueConfig::load(path), path.parent_path().empty() ? "." : path.parent_path());
  }
  KeyValueConfig over = cfg.to_config();
  if (c.bits) over.set(bits_is_list ? "sweep.bits" : "bits", *c.bits);
  if (c.parallelism) over.set("parallelism", std::to_string(*c.parallelism));
  if (c.iters) over.set("iterations", std::to_string(*c.iters));
  if (c.seed) over.set("seed", std::to_string(*c.seed));
  if (c.out) over.set("out_dir", *c.out);
  cfg = ExperimentConfig::from_config(over, ".");
  cfg.validate();
  return cfg;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"memristor crossbar GAN accelerator simulator"};
  app.require_subcommand(1);

  Common train_o, sweep_o, pipe_o, par_o, cost_o;
  auto* train = app.add_subcommand("train", "train one GAN and write its log, summary and checkpoint");
  add_common(train, train_o);
  auto* sweep = app.add_subcommand("precision-sweep", "train per bit width and score a linear probe");
  add_common(sweep, sweep_o);
  auto* pipe = app.add_subcommand("pipeline-compare", "basic vs cross-parallel schedule");
  add_common(pipe, pipe_o);
  auto* par = app.add_subcommand("parallelism-sweep", "iteration time and area against s");
  add_common(par, par_o);
  auto* cost = app.add_subcommand("cost-report", "area, time and energy per workload");
  add_common(cost, cost_o);
  double calibrate_kwh = 0.0;
  std::string calibrate_workload = "imagenet";
  auto* calibrate = cost->add_option("--calibrate", calibrate_kwh,
                                     "print the energy.scale that makes --calibrate-workload cost this many kWh");
  cost->add_option("--calibrate-workload", calibrate_workload, "workload used by --calibrate");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto t0 = std::chrono::steady_clock::now();
    if (train->parsed()) {
      const ExperimentConfig cfg = resolve(train_o, false);
      const Precision p = Precision::parse(cfg.bits);
      const Splits data = load_splits(cfg);
      const TrainingRun run = run_training(cfg, p, data.train);
      for (const auto& e : run.log)
        if (e.iteration % cfg.log_every == 0 || e.iteration + 1 == static_cast<int>(run.log.size()))
          std::cout << "iter " << e.iteration << "  V_D " << e.objective_d << "  V_G " << e.objective_g << '\n';
      write_training_outputs(cfg.out_dir, cfg, p, run);
      std::cout << "wrote " << cfg.out_dir.string() << " (" << seconds_since(t0) << " s)\n";
    } else if (sweep->parsed()) {
      const ExperimentConfig cfg = resolve(sweep_o, true);
      const Splits data = load_splits(cfg);
      const EvalResult r = run_precision_sweep(cfg, data);
      std::cout << "bits    accuracy  normalized\n";
      for (const auto& pt : r.points)
        std::cout << std::left << std::setw(8) << pt.bits << std::fixed << std::setprecision(4) << pt.accuracy
                  << "    " << pt.normalized << '\n';
      write_precision_outputs(cfg.out_dir, cfg, r);
      std::cout << "wrote " << cfg.out_dir.string() << " (" << seconds_since(t0) << " s)\n";
    } else if (pipe->parsed()) {
      const ExperimentConfig cfg = resolve(pipe_o, false);
      const PipelineComparison c = run_pipeline_compare(cfg);
      std::cout << pipeline_compare_json(cfg, c) << '\n';
      write_pipeline_outputs(cfg.out_dir, cfg, c);
    } else if (par->parsed()) {
      const ExperimentConfig cfg = resolve(par_o, false);
      const auto points = run_parallelism_sweep(cfg);
      std::cout << "s     sequential_s  basic_s   cross_s   area_mm2\n";
      for (const auto& pt : points)
        std::cout << std::left << std::setw(6) << pt.parallelism << std::fixed << std::setprecision(4)
                  << std::setw(14) << pt.sequential_s << std::setw(10) << pt.basic_s << std::setw(10) << pt.cross_s
                  << std::setprecision(1) << pt.area_mm2 << '\n';
      write_parallelism_outputs(cfg.out_dir, cfg, points);
    } else if (cost->parsed()) {
      const ExperimentConfig cfg = resolve(cost_o, false);
      if (*calibrate) {
        const KeyValueConfig k = load_cost_config(cfg);
        const auto w = cost::Workload::from_config(k, calibrate_workload);
        const auto p = cost::calibrate_energy(cost::CostParams::from_config(k), w, cfg.parallelism, calibrate_kwh);
        std::cout << "energy.scale = " << std::setprecision(12) << p.energy_scale << '\n';
        return 0;
      }
      const auto reports = run_cost_report(cfg);
      for (const auto& r : reports) {
        cost::write_report_table(std::cout, r);
        std::cout << '\n';
      }
      write_cost_outputs(cfg.out_dir, cfg, reports);
    }
  } catch (const std::exception& e) {
    std::cerr << "memgan: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

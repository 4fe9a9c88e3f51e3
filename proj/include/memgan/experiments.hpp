#pragma once

#include "memgan/config.hpp"
#include "memgan/cost_model.hpp"
#include "memgan/dataset.hpp"
#include "memgan/gan.hpp"
#include "memgan/pipeline.hpp"
#include "memgan/probe.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace memgan {

/// "float" (and "32") select the ideal floating-point datapath; 4, 8 and 16
/// set both the weight and the input width.
struct Precision {
  int bits = 8;
  bool is_float = false;

  static Precision parse(const std::string& text);
  std::string label() const { return is_float ? "float" : std::to_string(bits); }
  DeviceConfig device(int crossbar_size) const;
  /// LUT width of the diff block; 0 means exact.
  int lut_bits() const { return is_float ? 0 : bits; }
};

struct ExperimentConfig {
  std::string dataset = "mnist";  // mnist | cifar10
  std::filesystem::path data_dir = "data/mnist";
  int image_size = 20;
  std::int64_t train_limit = 6000;
  std::int64_t test_limit = 2000;

  std::string bits = "8";
  std::vector<std::string> sweep_bits = {"float", "16", "8", "4"};
  int parallelism = 32;
  std::vector<int> sweep_parallelism = {1, 2, 4, 8, 16, 32, 64};
  int batch = 64;
  int iterations = 300;
  std::uint64_t seed = 1;
  pipeline::PipelineMode pipeline_mode = pipeline::PipelineMode::cross_parallel;
  std::filesystem::path out_dir = "out";

  double alpha = 0.02;
  double init_range = 0.2;
  DerivativeMode derivative_mode = DerivativeMode::indicator;
  int crossbar_size = 32;
  int log_every = 10;

  int probe_epochs = 300;
  double probe_learning_rate = 0.5;
  double probe_l2 = 1e-4;

  std::filesystem::path cost_config = "config/cost.cfg";
  std::filesystem::path step_times = "config/step_times.cfg";
  std::vector<std::string> workloads = {"imagenet", "lsun"};
  std::string sweep_workload = "lsun";
  int pipeline_iterations = 10;

  /// Unknown keys and malformed values are errors naming the key. Relative
  /// paths are resolved against `base_dir`.
  static ExperimentConfig from_config(const KeyValueConfig& cfg, const std::filesystem::path& base_dir = ".");
  /// Every field as `key = value`, the form embedded in reports.
  KeyValueConfig to_config() const;
  /// Throws std::invalid_argument naming the first out-of-range field.
  void validate() const;
  /// Checks that the dataset files exist.
  void validate_inputs() const;

  GanConfig gan_config(const Precision& p, int channels) const;
};

struct Splits {
  Dataset train;
  Dataset test;
};

/// Loads the configured dataset (train and test splits).
Splits load_splits(const ExperimentConfig& cfg);

struct LogEntry {
  int iteration = 0;
  double objective_d = 0.0;
  double objective_g = 0.0;
  double d_real_mean = 0.0;
  double d_fake_mean = 0.0;
};

struct TrainingRun {
  GanModel model;
  std::vector<LogEntry> log;  // one entry per iteration, objectives before the update
};

/// Trains from a seeded initialization; minibatches follow a seeded
/// permutation of `train`. A saturated discriminator (scores of exactly 0 or 1)
/// logs infinite objectives; NaN objectives or non-finite scores throw
/// std::runtime_error.
TrainingRun run_training(const ExperimentConfig& cfg, const Precision& p, const Dataset& train);

/// Penultimate discriminator activations for every image, in chunks.
MatrixXd dataset_features(const GanModel& model, const Dataset& data, Eigen::Index chunk = 500);

struct PrecisionPoint {
  std::string bits;
  double accuracy = 0.0;
  double normalized = 0.0;  // accuracy / float accuracy
  double objective_d_first = 0.0;
  double objective_d_last = 0.0;
  int saturated = 0;  // iterations whose objective was infinite (D output exactly 0 or 1)
};

struct EvalResult {
  double baseline_accuracy = 0.0;
  std::vector<PrecisionPoint> points;  // in sweep order

  const PrecisionPoint& at(const std::string& bits) const;
};

/// Trains one GAN per bit width, fits the probe on its train-split features
/// and scores the test split. The float run is the baseline and is always included.
EvalResult run_precision_sweep(const ExperimentConfig& cfg, const Splits& data);

struct PipelineComparison {
  pipeline::ScheduleTrace basic;
  pipeline::ScheduleTrace cross;
  pipeline::UtilizationReport report;
};

PipelineComparison run_pipeline_compare(const ExperimentConfig& cfg);

struct ParallelismPoint {
  int parallelism = 1;
  double sequential_s = 0.0;  // all steps back to back
  double basic_s = 0.0;
  double cross_s = 0.0;
  double forward_s = 0.0;
  double backward_s = 0.0;
  double area_mm2 = 0.0;
};

std::vector<ParallelismPoint> run_parallelism_sweep(const ExperimentConfig& cfg);

/// Cost reports for each configured workload at cfg.parallelism, under
/// cfg.pipeline_mode and under the sequential reference schedule.
std::vector<cost::CostReport> run_cost_report(const ExperimentConfig& cfg);

/// Cost model parameters and step table named by the config.
cost::CostParams load_cost_params(const ExperimentConfig& cfg);
KeyValueConfig load_cost_config(const ExperimentConfig& cfg);

// Report files. Every file embeds the configuration that produced it: JSON
// under "config", CSV as leading "# key = value" lines.
void write_training_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg, const Precision& p,
                            const TrainingRun& run);
void write_precision_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg, const EvalResult& r);
void write_pipeline_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                            const PipelineComparison& c);
void write_parallelism_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                               const std::vector<ParallelismPoint>& points);
void write_cost_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                        const std::vector<cost::CostReport>& reports);

/// Iteration time and D/G idle per mode, plus the speedup.
std::string pipeline_compare_json(const ExperimentConfig& cfg, const PipelineComparison& c);

}  // namespace memgan

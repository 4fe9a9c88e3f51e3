#include "memgan/experiments.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace memgan {

namespace {

using ojson = nlohmann::ordered_json;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "dataset",      "data_dir",        "image_size",       "train_limit",      "test_limit",
      "bits",         "sweep.bits",      "parallelism",      "sweep.parallelism", "batch",
      "iterations",   "seed",            "pipeline",         "out_dir",          "alpha",
      "init_range",   "derivative_mode", "crossbar_size",    "log_every",        "probe.epochs",
      "probe.learning_rate", "probe.l2", "cost_config",      "step_times",       "workloads",
      "sweep.workload", "pipeline_iterations"};
  return keys;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  const std::filesystem::path p(value);
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

int get_int32(const KeyValueConfig& cfg, const std::string& key, int fallback) {
  const long long v = cfg.get_int(key, fallback);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw std::invalid_argument(cfg.source() + ": field '" + key + "' is out of range");
  return static_cast<int>(v);
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

DerivativeMode derivative_from_string(const std::string& s) {
  if (s == "indicator") return DerivativeMode::indicator;
  if (s == "output_literal") return DerivativeMode::output_literal;
  throw std::invalid_argument("field 'derivative_mode' must be indicator or output_literal, got '" + s + "'");
}

std::string to_string(DerivativeMode m) { return m == DerivativeMode::indicator ? "indicator" : "output_literal"; }

void bad(const std::string& field, const std::string& why) {
  throw std::invalid_argument("config field '" + field + "' " + why);
}

ojson config_json(const ExperimentConfig& cfg) {
  ojson j = ojson::object();
  const KeyValueConfig kv = cfg.to_config();
  for (const auto& [k, v] : kv.values()) j[k] = v;
  return j;
}

void write_csv_header(std::ostream& out, const ExperimentConfig& cfg) {
  const KeyValueConfig kv = cfg.to_config();
  for (const auto& [k, v] : kv.values()) out << "# " << k << " = " << v << '\n';
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(10);
  return out;
}

void write_json_file(const std::filesystem::path& path, const ojson& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

ojson block_json(const pipeline::ScheduleTrace& t) {
  return ojson{{"iteration_s", t.iteration_latency},
               {"d_idle_s", t.block(pipeline::Block::discriminator).idle},
               {"g_idle_s", t.block(pipeline::Block::generator).idle},
               {"d_usage", t.block(pipeline::Block::discriminator).usage},
               {"g_usage", t.block(pipeline::Block::generator).usage}};
}

}  // namespace

Precision Precision::parse(const std::string& text) {
  if (text == "float" || text == "32") return {32, true};
  if (text == "4" || text == "8" || text == "16") return {std::stoi(text), false};
  throw std::invalid_argument("precision '" + text + "' must be one of float, 32, 16, 8, 4");
}

DeviceConfig Precision::device(int crossbar_size) const {
  DeviceConfig dev;
  dev.rows = dev.cols = crossbar_size;
  dev.ideal = is_float;
  if (!is_float) dev.weight_bits = dev.input_bits = bits;
  return dev;
}

ExperimentConfig ExperimentConfig::from_config(const KeyValueConfig& cfg, const std::filesystem::path& base_dir) {
  for (const auto& [k, v] : cfg.values())
    if (!known_keys().count(k)) throw std::invalid_argument(cfg.source() + ": unknown field '" + k + "'");

  ExperimentConfig c;
  c.dataset = cfg.get("dataset", c.dataset);
  if (cfg.has("data_dir")) c.data_dir = resolve(base_dir, cfg.get("data_dir"));
  c.image_size = get_int32(cfg, "image_size", c.image_size);
  c.train_limit = cfg.get_int("train_limit", c.train_limit);
  c.test_limit = cfg.get_int("test_limit", c.test_limit);
  c.bits = cfg.get("bits", c.bits);
  if (cfg.has("sweep.bits")) c.sweep_bits = cfg.get_list("sweep.bits");
  c.parallelism = get_int32(cfg, "parallelism", c.parallelism);
  if (cfg.has("sweep.parallelism")) {
    c.sweep_parallelism.clear();
    for (const auto& item : cfg.get_list("sweep.parallelism")) {
      KeyValueConfig one;
      one.set("sweep.parallelism", item);
      c.sweep_parallelism.push_back(get_int32(one, "sweep.parallelism", 0));
    }
  }
  c.batch = get_int32(cfg, "batch", c.batch);
  c.iterations = get_int32(cfg, "iterations", c.iterations);
  const long long seed = cfg.get_int("seed", static_cast<long long>(c.seed));
  if (seed < 0) bad("seed", "must be >= 0");
  c.seed = static_cast<std::uint64_t>(seed);
  if (cfg.has("pipeline")) {
    try {
      c.pipeline_mode = pipeline::mode_from_string(cfg.get("pipeline"));
    } catch (const std::exception&) {
      bad("pipeline", "must be basic, cross or sequential, got '" + cfg.get("pipeline") + "'");
    }
  }
  if (cfg.has("out_dir")) c.out_dir = resolve(base_dir, cfg.get("out_dir"));
  c.alpha = cfg.get_double("alpha", c.alpha);
  c.init_range = cfg.get_double("init_range", c.init_range);
  if (cfg.has("derivative_mode")) c.derivative_mode = derivative_from_string(cfg.get("derivative_mode"));
  c.crossbar_size = get_int32(cfg, "crossbar_size", c.crossbar_size);
  c.log_every = get_int32(cfg, "log_every", c.log_every);
  c.probe_epochs = get_int32(cfg, "probe.epochs", c.probe_epochs);
  c.probe_learning_rate = cfg.get_double("probe.learning_rate", c.probe_learning_rate);
  c.probe_l2 = cfg.get_double("probe.l2", c.probe_l2);
  if (cfg.has("cost_config")) c.cost_config = resolve(base_dir, cfg.get("cost_config"));
  if (cfg.has("step_times")) c.step_times = resolve(base_dir, cfg.get("step_times"));
  if (cfg.has("workloads")) c.workloads = cfg.get_list("workloads");
  c.sweep_workload = cfg.get("sweep.workload", c.sweep_workload);
  c.pipeline_iterations = get_int32(cfg, "pipeline_iterations", c.pipeline_iterations);
  return c;
}

KeyValueConfig ExperimentConfig::to_config() const {
  KeyValueConfig k;
  k.set("dataset", dataset);
  k.set("data_dir", data_dir.string());
  k.set("image_size", std::to_string(image_size));
  k.set("train_limit", std::to_string(train_limit));
  k.set("test_limit", std::to_string(test_limit));
  k.set("bits", bits);
  k.set("sweep.bits", join(sweep_bits));
  k.set("parallelism", std::to_string(parallelism));
  std::vector<std::string> ps;
  for (int s : sweep_parallelism) ps.push_back(std::to_string(s));
  k.set("sweep.parallelism", join(ps));
  k.set("batch", std::to_string(batch));
  k.set("iterations", std::to_string(iterations));
  k.set("seed", std::to_string(seed));
  k.set("pipeline", std::string(pipeline::to_string(pipeline_mode)));
  k.set("out_dir", out_dir.string());
  k.set("alpha", fmt(alpha));
  k.set("init_range", fmt(init_range));
  k.set("derivative_mode", to_string(derivative_mode));
  k.set("crossbar_size", std::to_string(crossbar_size));
  k.set("log_every", std::to_string(log_every));
  k.set("probe.epochs", std::to_string(probe_epochs));
  k.set("probe.learning_rate", fmt(probe_learning_rate));
  k.set("probe.l2", fmt(probe_l2));
  k.set("cost_config", cost_config.string());
  k.set("step_times", step_times.string());
  k.set("workloads", join(workloads));
  k.set("sweep.workload", sweep_workload);
  k.set("pipeline_iterations", std::to_string(pipeline_iterations));
  return k;
}

void ExperimentConfig::validate() const {
  if (dataset != "mnist" && dataset != "cifar10") bad("dataset", "must be mnist or cifar10, got '" + dataset + "'");
  if (image_size < 8 || image_size > 64 || image_size % 4 != 0)
    bad("image_size", "must be a multiple of 4 in [8, 64], got " + std::to_string(image_size));
  if (train_limit < 0) bad("train_limit", "must be >= 0 (0 keeps every image)");
  if (test_limit < 0) bad("test_limit", "must be >= 0 (0 keeps every image)");
  try {
    Precision::parse(bits);
  } catch (const std::exception& e) {
    bad("bits", e.what());
  }
  if (sweep_bits.empty()) bad("sweep.bits", "must list at least one precision");
  for (const auto& b : sweep_bits) try {
      Precision::parse(b);
    } catch (const std::exception& e) {
      bad("sweep.bits", e.what());
    }
  if (parallelism < 1 || parallelism > 64) bad("parallelism", "must be in [1, 64], got " + std::to_string(parallelism));
  if (sweep_parallelism.empty()) bad("sweep.parallelism", "must list at least one value");
  for (int s : sweep_parallelism)
    if (s < 1 || s > 64) bad("sweep.parallelism", "values must be in [1, 64], got " + std::to_string(s));
  if (batch < 1) bad("batch", "must be >= 1, got " + std::to_string(batch));
  if (iterations < 0) bad("iterations", "must be >= 0, got " + std::to_string(iterations));
  if (!std::isfinite(alpha) || alpha < 0.0) bad("alpha", "must be finite and >= 0");
  if (!std::isfinite(init_range) || init_range <= 0.0) bad("init_range", "must be finite and > 0");
  if (crossbar_size < 2) bad("crossbar_size", "must be >= 2, got " + std::to_string(crossbar_size));
  if (log_every < 1) bad("log_every", "must be >= 1");
  if (probe_epochs < 1) bad("probe.epochs", "must be >= 1");
  if (!std::isfinite(probe_learning_rate) || probe_learning_rate <= 0.0) bad("probe.learning_rate", "must be > 0");
  if (!std::isfinite(probe_l2) || probe_l2 < 0.0) bad("probe.l2", "must be >= 0");
  if (workloads.empty()) bad("workloads", "must list at least one workload");
  if (sweep_workload.empty()) bad("sweep.workload", "must name a workload");
  if (pipeline_iterations < 4) bad("pipeline_iterations", "must be >= 4 for a steady-state window");
}

void ExperimentConfig::validate_inputs() const {
  std::vector<std::filesystem::path> need;
  if (dataset == "mnist") {
    for (const char* f : {"train-images-idx3-ubyte", "train-labels-idx1-ubyte", "t10k-images-idx3-ubyte",
                          "t10k-labels-idx1-ubyte"})
      need.push_back(data_dir / f);
  } else {
    need.push_back(data_dir / "data_batch_1.bin");
    need.push_back(data_dir / "test_batch.bin");
  }
  for (const auto& p : need)
    if (!std::filesystem::is_regular_file(p))
      throw std::runtime_error("missing dataset file " + p.string() + " (config field 'data_dir')");
}

GanConfig ExperimentConfig::gan_config(const Precision& p, int channels) const {
  GanConfig g = GanConfig::desk_scale(image_size, channels, p.device(crossbar_size));
  g.batch = batch;
  g.alpha = alpha;
  g.init_range = init_range;
  g.derivative_mode = derivative_mode;
  g.seed = seed;
  g.validate();
  return g;
}

Splits load_splits(const ExperimentConfig& cfg) {
  cfg.validate_inputs();
  if (cfg.dataset == "mnist")
    return {load_mnist(cfg.data_dir / "train-images-idx3-ubyte", cfg.data_dir / "train-labels-idx1-ubyte",
                       cfg.image_size, cfg.train_limit),
            load_mnist(cfg.data_dir / "t10k-images-idx3-ubyte", cfg.data_dir / "t10k-labels-idx1-ubyte",
                       cfg.image_size, cfg.test_limit)};
  std::vector<std::filesystem::path> train;
  for (int i = 1; i <= 5; ++i) {
    const auto p = cfg.data_dir / ("data_batch_" + std::to_string(i) + ".bin");
    if (std::filesystem::is_regular_file(p)) train.push_back(p);
  }
  return {load_cifar10(train, cfg.image_size, cfg.train_limit),
          load_cifar10({cfg.data_dir / "test_batch.bin"}, cfg.image_size, cfg.test_limit)};
}

TrainingRun run_training(const ExperimentConfig& cfg, const Precision& p, const Dataset& train) {
  const GanConfig g = cfg.gan_config(p, train.channels);
  if (train.sample_size() != g.discriminator.front().shape.input_dims().size())
    throw std::invalid_argument("run_training: dataset images do not match the network input");
  if (train.size() < cfg.batch)
    throw std::invalid_argument("run_training: " + std::to_string(train.size()) + " training images for batch " +
                                std::to_string(cfg.batch));

  TrainingRun run{GanModel(g), {}};
  DiffBlock diff(cfg.batch, p.lut_bits());
  std::mt19937_64 data_rng(cfg.seed * 0x9E3779B97F4A7C15ULL + 1);
  std::mt19937_64 noise_rng(cfg.seed * 0x9E3779B97F4A7C15ULL + 2);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(train.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::shuffle(order.begin(), order.end(), data_rng);
  std::size_t pos = 0;

  BatchXd x(cfg.batch, train.images.cols());
  for (int it = 0; it < cfg.iterations; ++it) {
    if (pos + static_cast<std::size_t>(cfg.batch) > order.size()) {
      std::shuffle(order.begin(), order.end(), data_rng);
      pos = 0;
    }
    for (int r = 0; r < cfg.batch; ++r) x.row(r) = train.images.row(order[pos++]);
    const BatchXd z = sample_noise(cfg.batch, g.noise_dim, noise_rng);
    const StepResult s = train_step(run.model, diff, x, z);
    if (std::isnan(s.objective_d) || std::isnan(s.objective_g) || !s.d_real.allFinite() || !s.d_fake.allFinite()) {
      std::ostringstream msg;
      msg << "training diverged at iteration " << it << " (bits " << p.label() << "): objective_d = " << s.objective_d
          << ", objective_g = " << s.objective_g << "; lower alpha or init_range";
      throw std::runtime_error(msg.str());
    }
    run.log.push_back({it, s.objective_d, s.objective_g, s.d_real.mean(), s.d_fake.mean()});
  }
  return run;
}

MatrixXd dataset_features(const GanModel& model, const Dataset& data, Eigen::Index chunk) {
  if (chunk < 1) throw std::invalid_argument("dataset_features: chunk must be >= 1");
  if (data.size() == 0) throw std::invalid_argument("dataset_features: empty dataset");
  MatrixXd out;
  for (Eigen::Index begin = 0; begin < data.size(); begin += chunk) {
    const Eigen::Index n = std::min(chunk, data.size() - begin);
    const MatrixXd f = extract_features(model, data.images.middleRows(begin, n), begin == 0);
    if (out.size() == 0) out.resize(data.size(), f.cols());
    out.middleRows(begin, n) = f;
  }
  return out;
}

const PrecisionPoint& EvalResult::at(const std::string& bits) const {
  const std::string want = Precision::parse(bits).label();
  for (const auto& p : points)
    if (p.bits == want) return p;
  throw std::out_of_range("no precision point for bits " + bits);
}

EvalResult run_precision_sweep(const ExperimentConfig& cfg, const Splits& data) {
  std::vector<std::string> labels;
  for (const auto& b : cfg.sweep_bits) {
    const std::string l = Precision::parse(b).label();
    if (std::find(labels.begin(), labels.end(), l) == labels.end()) labels.push_back(l);
  }
  if (std::find(labels.begin(), labels.end(), "float") == labels.end()) labels.insert(labels.begin(), "float");

  const ProbeConfig probe_cfg{cfg.probe_epochs, cfg.probe_learning_rate, cfg.probe_l2};
  EvalResult r;
  for (const auto& l : labels) {
    const Precision p = Precision::parse(l);
    const TrainingRun run = run_training(cfg, p, data.train);
    LinearProbe probe;
    probe.fit(dataset_features(run.model, data.train), data.train.labels, data.train.classes, probe_cfg);
    PrecisionPoint pt;
    pt.bits = l;
    pt.accuracy = probe.accuracy(dataset_features(run.model, data.test), data.test.labels);
    if (!run.log.empty()) {
      pt.objective_d_first = run.log.front().objective_d;
      pt.objective_d_last = run.log.back().objective_d;
    }
    for (const auto& e : run.log) pt.saturated += !std::isfinite(e.objective_d) || !std::isfinite(e.objective_g);
    r.points.push_back(pt);
  }
  r.baseline_accuracy = r.at("float").accuracy;
  for (auto& pt : r.points) pt.normalized = r.baseline_accuracy > 0.0 ? pt.accuracy / r.baseline_accuracy : 0.0;
  return r;
}

KeyValueConfig load_cost_config(const ExperimentConfig& cfg) {
  KeyValueConfig k = KeyValueConfig::load(cfg.cost_config);
  k.merge(KeyValueConfig::load(cfg.step_times));
  return k;
}

cost::CostParams load_cost_params(const ExperimentConfig& cfg) { return cost::CostParams::from_config(load_cost_config(cfg)); }

PipelineComparison run_pipeline_compare(const ExperimentConfig& cfg) {
  const auto times = pipeline::step_times_from_config(KeyValueConfig::load(cfg.step_times));
  PipelineComparison c;
  c.basic = pipeline::simulate(pipeline::build_task_graph(pipeline::PipelineMode::basic), times,
                               cfg.pipeline_iterations);
  c.cross = pipeline::simulate(pipeline::build_task_graph(pipeline::PipelineMode::cross_parallel), times,
                               cfg.pipeline_iterations);
  c.report = pipeline::utilization_report(c.basic, c.cross);
  return c;
}

std::vector<ParallelismPoint> run_parallelism_sweep(const ExperimentConfig& cfg) {
  const KeyValueConfig k = load_cost_config(cfg);
  const cost::CostParams params = cost::CostParams::from_config(k);
  const cost::Workload w = cost::Workload::from_config(k, cfg.sweep_workload);
  std::vector<ParallelismPoint> out;
  for (int s : cfg.sweep_parallelism) {
    const cost::IterationTime t = cost::iteration_time(s, w, params);
    ParallelismPoint pt;
    pt.parallelism = s;
    pt.sequential_s = t.sequential;
    pt.forward_s = t.forward;
    pt.backward_s = t.backward;
    pt.basic_s = pipeline::simulate(pipeline::build_task_graph(pipeline::PipelineMode::basic), t.steps,
                                    cfg.pipeline_iterations)
                     .iteration_latency;
    pt.cross_s = pipeline::simulate(pipeline::build_task_graph(pipeline::PipelineMode::cross_parallel), t.steps,
                                    cfg.pipeline_iterations)
                     .iteration_latency;
    pt.area_mm2 = cost::area(s, params);
    out.push_back(pt);
  }
  return out;
}

std::vector<cost::CostReport> run_cost_report(const ExperimentConfig& cfg) {
  const KeyValueConfig k = load_cost_config(cfg);
  const cost::CostParams params = cost::CostParams::from_config(k);
  std::vector<cost::CostReport> out;
  for (const auto& name : cfg.workloads) {
    const cost::Workload w = cost::Workload::from_config(k, name);
    out.push_back(cost::evaluate(w, cfg.parallelism, cfg.pipeline_mode, params));
    if (cfg.pipeline_mode != pipeline::PipelineMode::sequential)
      out.push_back(cost::evaluate(w, cfg.parallelism, pipeline::PipelineMode::sequential, params));
  }
  return out;
}

void write_training_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg, const Precision& p,
                            const TrainingRun& run) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "train_log.csv");
    write_csv_header(out, cfg);
    out << "iteration,objective_d,objective_g,d_real_mean,d_fake_mean\n";
    for (const auto& e : run.log)
      out << e.iteration << ',' << e.objective_d << ',' << e.objective_g << ',' << e.d_real_mean << ','
          << e.d_fake_mean << '\n';
  }
  ojson j;
  j["config"] = config_json(cfg);
  j["bits"] = p.label();
  j["iterations"] = run.model.iteration();
  if (!run.log.empty()) {
    j["objective_d_first"] = run.log.front().objective_d;
    j["objective_d_last"] = run.log.back().objective_d;
    j["objective_g_last"] = run.log.back().objective_g;
  }
  const StateInventory inv = inventory(run.model);
  j["state"] = {{"crossbars", inv.crossbars},
                {"crossbar_cells", inv.crossbar_cells},
                {"trace_values", inv.trace_values},
                {"auxiliary_weight_values", inv.auxiliary_weight_values}};
  j["checkpoint"] = "model.ckpt";
  write_json_file(dir / "train_summary.json", j);
  save_checkpoint(run.model, dir / "model.ckpt");
}

void write_precision_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg, const EvalResult& r) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "precision_sweep.csv");
    write_csv_header(out, cfg);
    out << "bits,accuracy,normalized,objective_d_first,objective_d_last,saturated\n";
    for (const auto& p : r.points)
      out << p.bits << ',' << p.accuracy << ',' << p.normalized << ',' << p.objective_d_first << ','
          << p.objective_d_last << ',' << p.saturated << '\n';
  }
  ojson j;
  j["config"] = config_json(cfg);
  j["baseline_accuracy"] = r.baseline_accuracy;
  j["points"] = ojson::array();
  for (const auto& p : r.points)
    j["points"].push_back({{"bits", p.bits},
                           {"accuracy", p.accuracy},
                           {"normalized", p.normalized},
                           {"objective_d_first", p.objective_d_first},
                           {"objective_d_last", p.objective_d_last},
                           {"saturated", p.saturated}});
  write_json_file(dir / "precision_sweep.json", j);
}

std::string pipeline_compare_json(const ExperimentConfig& cfg, const PipelineComparison& c) {
  ojson j;
  j["config"] = config_json(cfg);
  j["basic"] = block_json(c.basic);
  j["cross_parallel"] = block_json(c.cross);
  j["speedup"] = c.report.speedup;
  j["idle_ratio"] = {{"discriminator", c.report.block(pipeline::Block::discriminator).idle_ratio},
                     {"generator", c.report.block(pipeline::Block::generator).idle_ratio}};
  j["usage_ratio"] = {{"discriminator", c.report.block(pipeline::Block::discriminator).usage_ratio},
                      {"generator", c.report.block(pipeline::Block::generator).usage_ratio}};
  return j.dump(2);
}

void write_pipeline_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                            const PipelineComparison& c) {
  std::filesystem::create_directories(dir);
  for (const auto* t : {&c.basic, &c.cross}) {
    auto out = open_out(dir / ("trace_" + std::string(pipeline::to_string(t->mode)) + ".csv"));
    write_csv_header(out, cfg);
    pipeline::write_trace_csv(out, *t);
  }
  auto out = open_out(dir / "pipeline_compare.json");
  out << pipeline_compare_json(cfg, c) << '\n';
}

void write_parallelism_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                               const std::vector<ParallelismPoint>& points) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "parallelism_sweep.csv");
    write_csv_header(out, cfg);
    out << "parallelism,sequential_s,basic_s,cross_s,forward_s,backward_s,area_mm2\n";
    for (const auto& p : points)
      out << p.parallelism << ',' << p.sequential_s << ',' << p.basic_s << ',' << p.cross_s << ',' << p.forward_s
          << ',' << p.backward_s << ',' << p.area_mm2 << '\n';
  }
  ojson j;
  j["config"] = config_json(cfg);
  j["workload"] = cfg.sweep_workload;
  j["points"] = ojson::array();
  for (const auto& p : points)
    j["points"].push_back({{"parallelism", p.parallelism},
                           {"sequential_s", p.sequential_s},
                           {"basic_s", p.basic_s},
                           {"cross_s", p.cross_s},
                           {"forward_s", p.forward_s},
                           {"backward_s", p.backward_s},
                           {"area_mm2", p.area_mm2}});
  write_json_file(dir / "parallelism_sweep.json", j);
}

void write_cost_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                        const std::vector<cost::CostReport>& reports) {
  std::filesystem::create_directories(dir);
  ojson j;
  j["config"] = config_json(cfg);
  j["reports"] = ojson::array();
  for (const auto& r : reports) {
    std::ostringstream s;
    cost::write_report_json(s, r);
    j["reports"].push_back(ojson::parse(s.str()));
  }
  write_json_file(dir / "cost_report.json", j);
  auto out = open_out(dir / "cost_report.txt");
  write_csv_header(out, cfg);
  for (const auto& r : reports) {
    cost::write_report_table(out, r);
    out << '\n';
  }
}

}  // namespace memgan

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "json.hpp"

#include "memgan/experiments.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace memgan;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = MEMGAN_SOURCE_DIR;

ExperimentConfig shipped() {
  return ExperimentConfig::from_config(KeyValueConfig::load(kRoot / "config/default.cfg"), kRoot / "config");
}

ExperimentConfig small() {
  ExperimentConfig c = shipped();
  c.image_size = 8;
  c.batch = 4;
  c.iterations = 3;
  c.train_limit = 64;
  c.test_limit = 32;
  c.probe_epochs = 20;
  c.sweep_bits = {"8", "4"};
  return c;
}

KeyValueConfig parse(const std::string& text) {
  std::istringstream in(text);
  return KeyValueConfig::parse(in, "test.cfg");
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("memgan_test_experiments_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("key-value parsing handles comments, spacing and lists") {
  const KeyValueConfig k = parse("# header\n\n a = 1 \nb=two words # trailing\nlist = x, y ,z\n");
  CHECK(k.get_int("a") == 1);
  CHECK(k.get("b") == "two words");
  CHECK(k.get_list("list") == std::vector<std::string>{"x", "y", "z"});
  CHECK(k.get("missing", "fallback") == "fallback");
  CHECK(error_of([&] { k.get_int("b"); }).find("'b'") != std::string::npos);
  CHECK(error_of([&] { parse("a = 1\nlist = x,,y").get_list("list"); }).find("empty list item") != std::string::npos);
}

TEST_CASE("shipped config loads, validates and resolves paths against its directory") {
  const ExperimentConfig c = shipped();
  CHECK_NOTHROW(c.validate());
  CHECK_NOTHROW(c.validate_inputs());
  CHECK(c.data_dir == (kRoot / "data/mnist").lexically_normal());
  CHECK(c.cost_config == (kRoot / "config/cost.cfg").lexically_normal());
  CHECK(c.train_limit == 6000);
  CHECK(c.pipeline_mode == pipeline::PipelineMode::cross_parallel);
}

TEST_CASE("to_config round-trips every field") {
  ExperimentConfig c = shipped();
  c.alpha = 0.0123456789;
  c.sweep_parallelism = {3, 5};
  c.derivative_mode = DerivativeMode::output_literal;
  const ExperimentConfig r = ExperimentConfig::from_config(c.to_config(), "/elsewhere");
  const KeyValueConfig a = c.to_config(), b = r.to_config();
  CHECK(a.values() == b.values());
}

TEST_CASE("unknown keys and out-of-range fields are rejected by name") {
  CHECK(error_of([] { ExperimentConfig::from_config(parse("iteratons = 5")); }).find("'iteratons'") !=
        std::string::npos);
  CHECK(error_of([] { ExperimentConfig::from_config(parse("batch = many")); }).find("'batch'") != std::string::npos);
  CHECK(error_of([] { ExperimentConfig::from_config(parse("pipeline = zigzag")); }).find("'pipeline'") !=
        std::string::npos);

  auto fails_on = [](const std::string& text, const std::string& field) {
    const ExperimentConfig c = ExperimentConfig::from_config(parse(text));
    const std::string e = error_of([&] { c.validate(); });
    CHECK_MESSAGE(e.find("'" + field + "'") != std::string::npos, text, " -> ", e);
  };
  fails_on("image_size = 10", "image_size");
  fails_on("bits = 7", "bits");
  fails_on("sweep.bits = 8, 3", "sweep.bits");
  fails_on("parallelism = 0", "parallelism");
  fails_on("parallelism = 65", "parallelism");
  fails_on("sweep.parallelism = 1, 128", "sweep.parallelism");
  fails_on("batch = 0", "batch");
  fails_on("iterations = -1", "iterations");
  fails_on("alpha = -0.1", "alpha");
  fails_on("alpha = nan", "alpha");
  fails_on("init_range = 0", "init_range");
  fails_on("probe.epochs = 0", "probe.epochs");
  fails_on("pipeline_iterations = 3", "pipeline_iterations");
  fails_on("dataset = svhn", "dataset");

  ExperimentConfig c = shipped();
  c.data_dir = "/nonexistent";
  CHECK(error_of([&] { c.validate_inputs(); }).find("data_dir") != std::string::npos);
}

TEST_CASE("precision labels") {
  CHECK(Precision::parse("float").is_float);
  CHECK(Precision::parse("32").label() == "float");
  CHECK(Precision::parse("8").device(16).input_bits == 8);
  CHECK(Precision::parse("8").device(16).rows == 16);
  CHECK(Precision::parse("float").device(32).ideal);
  CHECK(Precision::parse("float").lut_bits() == 0);
  CHECK(Precision::parse("4").lut_bits() == 4);
  CHECK_THROWS_AS(Precision::parse("12"), std::invalid_argument);
}

TEST_CASE("zero iterations return the seeded initialization") {
  ExperimentConfig c = small();
  c.iterations = 0;
  const Splits data = load_splits(c);
  const Precision p = Precision::parse("8");
  const TrainingRun run = run_training(c, p, data.train);
  CHECK(run.log.empty());
  CHECK(run.model.iteration() == 0);
  const GanModel fresh(c.gan_config(p, 1));
  const auto a = run.model.discriminator().read_kernels();
  const auto b = fresh.discriminator().read_kernels();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("same seed gives identical logs and a different seed does not") {
  const ExperimentConfig c = small();
  const Splits data = load_splits(c);
  const Precision p = Precision::parse("8");
  const TrainingRun a = run_training(c, p, data.train);
  const TrainingRun b = run_training(c, p, data.train);
  REQUIRE(a.log.size() == 3);
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].objective_d == b.log[i].objective_d);
    CHECK(a.log[i].objective_g == b.log[i].objective_g);
  }
  ExperimentConfig other = c;
  other.seed = c.seed + 1;
  const TrainingRun d = run_training(other, p, data.train);
  CHECK(d.log[0].objective_d != a.log[0].objective_d);
}

TEST_CASE("training rejects a dataset smaller than one batch") {
  ExperimentConfig c = small();
  const Splits data = load_splits(c);
  c.batch = 100;
  CHECK_THROWS_AS(run_training(c, Precision::parse("8"), data.train), std::invalid_argument);
}

TEST_CASE("training outputs embed the config and the checkpoint reloads") {
  const ExperimentConfig c = small();
  const Splits data = load_splits(c);
  const Precision p = Precision::parse("8");
  const TrainingRun run = run_training(c, p, data.train);
  const fs::path dir = scratch("train");
  write_training_outputs(dir, c, p, run);

  const auto summary = nlohmann::json::parse(slurp(dir / "train_summary.json"));
  CHECK(summary["config"]["batch"] == "4");
  CHECK(summary["iterations"] == 3);
  CHECK(summary["state"]["auxiliary_weight_values"] == 0);

  const std::string log = slurp(dir / "train_log.csv");
  CHECK(log.rfind("# alpha = ", 0) == 0);
  CHECK(log.find("iteration,objective_d,objective_g,d_real_mean,d_fake_mean\n") != std::string::npos);

  const GanModel back = load_checkpoint(dir / "model.ckpt");
  CHECK(back.iteration() == 3);
  const auto a = back.generator().read_kernels();
  const auto b = run.model.generator().read_kernels();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("precision sweep always reports a float baseline") {
  const ExperimentConfig c = small();
  const Splits data = load_splits(c);
  const EvalResult r = run_precision_sweep(c, data);
  REQUIRE(r.points.size() == 3);
  CHECK(r.points[0].bits == "float");
  CHECK(r.at("float").normalized == doctest::Approx(1.0));
  for (const auto& pt : r.points) {
    CHECK(pt.accuracy >= 0.0);
    CHECK(pt.accuracy <= 1.0);
    CHECK(pt.normalized == doctest::Approx(pt.accuracy / r.baseline_accuracy));
  }
  CHECK_THROWS_AS(r.at("16"), std::out_of_range);

  const fs::path dir = scratch("sweep");
  write_precision_outputs(dir, c, r);
  const auto j = nlohmann::json::parse(slurp(dir / "precision_sweep.json"));
  CHECK(j["config"]["sweep.bits"] == "8,4");
  CHECK(j["points"].size() == 3);
}

TEST_CASE("pipeline comparison JSON carries both modes and the speedup ratio") {
  const ExperimentConfig c = shipped();
  const PipelineComparison cmp = run_pipeline_compare(c);
  const auto j = nlohmann::json::parse(pipeline_compare_json(c, cmp));
  for (const char* mode : {"basic", "cross_parallel"})
    for (const char* key : {"iteration_s", "d_idle_s", "g_idle_s"}) CHECK(j[mode].contains(key));
  CHECK(j["config"]["step_times"] == c.step_times.string());
  const double ratio = j["basic"]["iteration_s"].get<double>() / j["cross_parallel"]["iteration_s"].get<double>();
  CHECK(j["speedup"].get<double>() == doctest::Approx(ratio).epsilon(1e-12));

  const fs::path dir = scratch("pipeline");
  write_pipeline_outputs(dir, c, cmp);
  CHECK(fs::exists(dir / "trace_basic.csv"));
  CHECK(fs::exists(dir / "trace_cross_parallel.csv"));
  CHECK(slurp(dir / "trace_basic.csv").find("task,block,iter,start,end") != std::string::npos);
}

TEST_CASE("parallelism sweep: time falls monotonically with diminishing returns") {
  ExperimentConfig c = shipped();
  c.sweep_parallelism = {1, 2, 4, 8, 16, 32, 64};
  const auto pts = run_parallelism_sweep(c);
  REQUIRE(pts.size() == 7);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    CHECK(pts[i].sequential_s <= pts[i - 1].sequential_s);
    CHECK(pts[i].cross_s <= pts[i - 1].cross_s);
    CHECK(pts[i].basic_s <= pts[i - 1].basic_s);
    CHECK(pts[i].area_mm2 > pts[i - 1].area_mm2);
  }
  for (const auto& p : pts) {
    CHECK(p.cross_s <= p.basic_s);
    CHECK(p.basic_s <= p.sequential_s + 1e-12);
    CHECK(p.sequential_s == doctest::Approx(p.forward_s + p.backward_s));
  }
  const double first_gain = pts[0].sequential_s - pts[1].sequential_s;
  const double last_gain = pts[5].sequential_s - pts[6].sequential_s;
  CHECK(last_gain < first_gain);
  CHECK(pts[5].cross_s == doctest::Approx(0.11));
}

TEST_CASE("cost report pairs the configured mode with the sequential reference") {
  const ExperimentConfig c = shipped();
  const auto reports = run_cost_report(c);
  REQUIRE(reports.size() == 4);
  CHECK(reports[0].workload == "imagenet");
  CHECK(reports[0].mode == "cross_parallel");
  CHECK(reports[1].mode == "sequential");
  CHECK(reports[0].energy_kwh == doctest::Approx(0.51).epsilon(1e-6));

  const fs::path dir = scratch("cost");
  write_cost_outputs(dir, c, reports);
  const auto j = nlohmann::json::parse(slurp(dir / "cost_report.json"));
  CHECK(j["reports"].size() == 4);
  CHECK(j["config"].contains("cost_config"));
  CHECK(slurp(dir / "cost_report.txt").find("D_forward") != std::string::npos);
}

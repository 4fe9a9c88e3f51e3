// Acceptance checks: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria. `--skip-sweep` skips the MNIST precision sweep.

#include "gradcheck.hpp"
#include "mapping_checks.hpp"
#include "trace_validator.hpp"

#include "memgan/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

using namespace memgan;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("criterion %d %-22s %s  %s\n", id, name, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  failures += !pass;
}

bool within_rel(double v, double target, double tol) { return std::abs(v - target) <= tol * std::abs(target); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const fs::path kRoot = MEMGAN_SOURCE_DIR;

ExperimentConfig shipped() {
  return ExperimentConfig::from_config(KeyValueConfig::load(kRoot / "config/default.cfg"), kRoot / "config");
}

void area() {
  const cost::CostParams p = load_cost_params(shipped());
  const double a1 = cost::area(1, p);
  const double a32 = cost::area(32, p);
  const auto f = cost::forward_flow_fractions(32, p);
  const bool pass = a1 == 139.0 && within_rel(a32, 1644.0, 0.005) && std::abs(f.discriminator - 0.448) <= 0.005 &&
                    std::abs(f.generator - 0.497) <= 0.005;
  report(1, "area", pass,
         fmt("area(1)=%.1f area(32)=%.1f D=%.2f%% G=%.2f%%", a1, a32, 100 * f.discriminator, 100 * f.generator));
}

void pipeline_table() {
  const PipelineComparison c = run_pipeline_compare(shipped());
  const double idle_d = c.report.block(pipeline::Block::discriminator).idle_ratio;
  const double idle_g = c.report.block(pipeline::Block::generator).idle_ratio;
  const bool pass = within_rel(c.basic.iteration_latency, 0.18, 0.05) &&
                    within_rel(c.cross.iteration_latency, 0.11, 0.05) && c.report.speedup >= 1.5 &&
                    c.report.speedup <= 1.7 && within_rel(idle_d, 3.8, 0.10) && within_rel(idle_g, 2.2, 0.10);
  report(2, "pipeline", pass,
         fmt("basic=%.4fs cross=%.4fs speedup=%.3f idle D=%.2fx G=%.2fx", c.basic.iteration_latency,
             c.cross.iteration_latency, c.report.speedup, idle_d, idle_g));
}

void precision_sweep() {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = shipped();
  const Splits data = load_splits(cfg);
  const EvalResult r = run_precision_sweep(cfg, data);
  const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
  const double n8 = r.at("8").normalized;
  const double a4 = r.at("4").accuracy;
  const double a8 = r.at("8").accuracy;
  const bool pass = data.train.size() == 6000 && n8 > 0.90 && a4 < a8 && minutes < 30.0;
  std::ostringstream d;
  d << "train=" << data.train.size() << " float=" << fmt("%.4f", r.baseline_accuracy);
  for (const auto& pt : r.points) d << ' ' << pt.bits << '=' << fmt("%.4f(%.3f)", pt.accuracy, pt.normalized);
  d << fmt(" %.1f min", minutes);
  report(3, "precision sweep", pass, d.str());
}

void gradient() {
  double worst = 0.0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto r = oracle::toy_gan_gradcheck(seed);
    worst = std::max({worst, r.max_rel_d, r.max_rel_g});
  }
  report(4, "gradient check", worst < 1e-4, fmt("max rel error %.3e over 3 seeds", worst));
}

void mapping() {
  std::mt19937_64 rng(4242);
  int exact = 0, grouped = 0, fewer = 0, strided = 0, total = 0;
  std::string first_failure;
  for (int i = 0; i < 50; ++i)
    for (LayerKind kind : {LayerKind::conv, LayerKind::deconv}) {
      const LayerShape s = oracle::random_shape(rng, kind);
      const auto r = oracle::layer_equivalence(s, 9000 + 2 * i + (kind == LayerKind::deconv));
      ++total;
      exact += r.exact;
      if (!r.exact && first_failure.empty()) first_failure = r.detail;
      if (kind == LayerKind::deconv) {
        grouped += r.grouped_exact;
        if (s.stride >= 2) {
          ++strided;
          fewer += r.grouped_macs < r.dense_macs;
        }
      }
    }
  const bool pass = exact == total && grouped == 50 && fewer == strided && strided > 0;
  report(5, "mapping equivalence", pass,
         fmt("exact %d/%d, grouped==dense %d/50, fewer multiplies %d/%d strided deconvs%s", exact, total, grouped,
             fewer, strided, first_failure.empty() ? "" : (" first failure: " + first_failure).c_str()));
}

void scheduler() {
  using namespace pipeline;
  std::mt19937_64 rng(31337);
  const TaskGraph basic = build_task_graph(PipelineMode::basic);
  const TaskGraph cross = build_task_graph(PipelineMode::cross_parallel);
  int valid = 0, dominated = 0;
  std::string first;
  for (int i = 0; i < 100; ++i) {
    const StepTimeTable t = oracle::random_step_table(rng);
    const ScheduleTrace tb = simulate(basic, t, 10);
    const ScheduleTrace tc = simulate(cross, t, 10);
    const std::string eb = oracle::validate_trace(basic, tb);
    const std::string ec = oracle::validate_trace(cross, tc);
    valid += eb.empty() && ec.empty();
    if (first.empty() && !(eb.empty() && ec.empty())) first = eb.empty() ? ec : eb;
    dominated += tc.iteration_latency <= tb.iteration_latency + 1e-12;
  }
  report(6, "scheduler", valid == 100 && dominated == 100,
         fmt("valid traces %d/100, cross <= basic %d/100%s", valid, dominated, first.empty() ? "" : (" " + first).c_str()));
}

void energy() {
  const ExperimentConfig cfg = shipped();
  const KeyValueConfig k = load_cost_config(cfg);
  const cost::CostParams shipped_params = cost::CostParams::from_config(k);
  const cost::Workload imagenet = cost::Workload::from_config(k, "imagenet");
  const cost::Workload lsun = cost::Workload::from_config(k, "lsun");
  const cost::CostParams p = cost::calibrate_energy(shipped_params, imagenet, 32, 0.51);

  const cost::CostReport cross = cost::evaluate(lsun, 32, pipeline::PipelineMode::cross_parallel, p);
  const cost::CostReport seq = cost::evaluate(lsun, 32, pipeline::PipelineMode::sequential, p);
  double sum = 0.0;
  for (double e : cross.energy_j) sum += e;
  const bool sums = sum == cross.energy_per_iteration_j;
  const bool lsun_ok = within_rel(cross.energy_kwh, 3.8, 0.20);
  const int df = static_cast<int>(cost::Procedure::d_forward);
  const bool share = cross.time_share[df] < seq.time_share[df];
  report(7, "energy substitutes", sums && lsun_ok && share,
         fmt("breakdown sum %s, lsun %.3f kWh (%+.1f%% vs 3.8), D_forward share cross %.1f%% < sequential %.1f%%",
             sums ? "exact" : "MISMATCH", cross.energy_kwh, 100 * (cross.energy_kwh / 3.8 - 1), 100 * cross.time_share[df],
             100 * seq.time_share[df]));
}

}  // namespace

int main(int argc, char** argv) {
  const bool skip_sweep = argc > 1 && std::strcmp(argv[1], "--skip-sweep") == 0;
  const std::pair<const char*, void (*)()> checks[] = {
      {"area", area},         {"pipeline", pipeline_table}, {"sweep", precision_sweep}, {"gradient", gradient},
      {"mapping", mapping},   {"scheduler", scheduler},     {"energy", energy}};
  int id = 0;
  for (const auto& [name, fn] : checks) {
    ++id;
    if (skip_sweep && id == 3) {
      std::printf("criterion 3 %-22s SKIP  (--skip-sweep)\n", "precision sweep");
      continue;
    }
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, name, false, std::string("error: ") + e.what());
    }
  }
  return failures;
}

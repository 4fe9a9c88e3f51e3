#include "memgan/cost_model.hpp"

#include "memgan/config.hpp"
#include "memgan/mapper.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace memgan::cost {

namespace {

constexpr double kJoulesPerKwh = 3.6e6;
constexpr std::array<std::string_view, kProcedureCount> kProcedureNames = {"D_forward", "D_back", "G_forward",
                                                                           "G_back"};

int pixels_of(const LayerShape& s) { return s.out_h() * s.out_w(); }

std::int64_t crossbars(int rows, int cols, const DeviceConfig& dev) { return plan_tiling(rows, cols, dev).crossbar_count; }

// Forward mvms of one sample through a deconv layer when only the structurally
// non-zero rows of each pixel group drive the crossbars.
std::int64_t grouped_mvms_per_sample(const LayerShape& s, const DeviceConfig& dev) {
  const DeconvGrouping g = plan_deconv_grouping(s);
  const std::int64_t col_tiles = plan_mapping(s, dev).col_tiles;
  std::int64_t total = 0;
  for (const auto& group : g.groups) {
    std::set<int> row_tiles;
    for (int c : group.cols) row_tiles.insert(c / dev.rows);
    total += static_cast<std::int64_t>(group.pixels.size()) * static_cast<std::int64_t>(row_tiles.size()) * col_tiles;
  }
  return total;
}

OpCounts forward_counts(const std::vector<LayerSpec>& net, const DeviceConfig& dev, std::int64_t n) {
  OpCounts c;
  for (const auto& l : net) {
    const LayerShape& s = l.shape;
    const std::int64_t p = pixels_of(s);
    if (s.kind == LayerKind::deconv) {
      c.mvm += grouped_mvms_per_sample(s, dev) * n;
      c.macs += plan_deconv_grouping(s).grouped_macs_per_sample * n;
    } else {
      c.mvm += n * p * plan_mapping(s, dev).crossbar_count;
      c.macs += n * p * static_cast<std::int64_t>(s.kernel_rows()) * s.out_channels;
    }
  }
  return c;
}

// Error units programmed with K^T and driven by every output-pixel error.
void add_error_pass(OpCounts& c, const LayerShape& s, const DeviceConfig& dev, std::int64_t n) {
  const std::int64_t p = pixels_of(s), r = s.kernel_rows(), o = s.out_channels;
  c.program_cells += o * r;
  c.mvm += n * p * crossbars(s.out_channels, s.kernel_rows(), dev);
  c.macs += n * p * o * r;
}

OpCounts backward_counts(const std::vector<LayerSpec>& net, const DeviceConfig& dev, std::int64_t n) {
  OpCounts c;
  for (const auto& l : net) {
    const LayerShape& s = l.shape;
    const std::int64_t p = pixels_of(s), r = s.kernel_rows(), o = s.out_channels;
    add_error_pass(c, s, dev, n);
    c.mvm += n * o * crossbars(pixels_of(s), s.kernel_rows(), dev);
    c.macs += n * p * r * o;
    c.program_cells += r * o + n * p * r;
  }
  return c;
}

double dot(const OpCounts& c, const UnitEnergy& e) {
  return static_cast<double>(c.mvm) * e.mvm + static_cast<double>(c.program_cells) * e.program_cell +
         static_cast<double>(c.lut_lookups) * e.lut_lookup + static_cast<double>(c.adder_ops) * e.adder_op +
         static_cast<double>(c.memory_accesses) * e.memory_access;
}

void require_parallelism(int s) {
  if (s < 1) throw std::invalid_argument("parallelism s must be >= 1, got " + std::to_string(s));
}

}  // namespace

std::string_view to_string(Procedure p) { return kProcedureNames[static_cast<int>(p)]; }

Procedure procedure_of(pipeline::TaskId id) {
  using pipeline::TaskId;
  switch (id) {
    case TaskId::a:
    case TaskId::c: return Procedure::d_forward;
    case TaskId::b: return Procedure::g_forward;
    case TaskId::f1:
    case TaskId::f2: return Procedure::g_back;
    default: return Procedure::d_back;
  }
}

void CostParams::validate() const {
  const std::pair<const char*, double> fields[] = {
      {"area.total_at_1", area_total_at_1},   {"area.d_forward", area_d_forward},
      {"area.g_forward", area_g_forward},     {"energy.mvm", energy.mvm},
      {"energy.program_cell", energy.program_cell}, {"energy.lut_lookup", energy.lut_lookup},
      {"energy.adder_op", energy.adder_op},   {"energy.memory_access", energy.memory_access},
      {"energy.input_value", energy.input_value}, {"energy.scale", energy_scale},
      {"power.static", static_power},
  };
  for (const auto& [name, v] : fields)
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument(std::string("CostParams: ") + name + " must be >= 0");
  if (reference_parallelism < 1) throw std::invalid_argument("CostParams: time.reference_parallelism must be >= 1");
  base_steps.validate();
  if (area_base() < 0.0) throw std::invalid_argument("CostParams: area.total_at_1 is smaller than one replica pair");
}

CostParams CostParams::from_config(const KeyValueConfig& cfg) {
  CostParams p;
  p.area_total_at_1 = cfg.get_double("area.total_at_1", p.area_total_at_1);
  p.area_d_forward = cfg.get_double("area.d_forward", p.area_d_forward);
  p.area_g_forward = cfg.get_double("area.g_forward", p.area_g_forward);
  p.energy.mvm = cfg.get_double("energy.mvm");
  p.energy.program_cell = cfg.get_double("energy.program_cell");
  p.energy.lut_lookup = cfg.get_double("energy.lut_lookup");
  p.energy.adder_op = cfg.get_double("energy.adder_op");
  p.energy.memory_access = cfg.get_double("energy.memory_access");
  p.energy.input_value = cfg.get_double("energy.input_value");
  p.energy_scale = cfg.get_double("energy.scale", 1.0);
  p.static_power = cfg.get_double("power.static", 0.0);
  p.base_steps = pipeline::step_times_from_config(cfg);
  p.reference_parallelism = static_cast<int>(cfg.get_int("time.reference_parallelism", 32));
  p.validate();
  return p;
}

double area(int s, const CostParams& p) {
  require_parallelism(s);
  return p.area_base() + s * (p.area_d_forward + p.area_g_forward);
}

ForwardFractions forward_flow_fractions(int s, const CostParams& p) {
  const double total = area(s, p);
  return {s * p.area_d_forward / total, s * p.area_g_forward / total};
}

std::int64_t Workload::iterations_per_epoch() const { return (images + model.batch - 1) / model.batch; }

void Workload::validate() const {
  const std::string n = "workload." + name + ".";
  if (images < 1) throw std::invalid_argument(n + "images must be >= 1");
  if (image_h < 1 || image_w < 1) throw std::invalid_argument(n + "image_h and image_w must be >= 1");
  if (channels < 1) throw std::invalid_argument(n + "channels must be >= 1");
  if (epochs < 1) throw std::invalid_argument(n + "epochs must be >= 1");
  model.validate();
}

Workload Workload::from_config(const KeyValueConfig& cfg, const std::string& name) {
  const std::string k = "workload." + name + ".";
  Workload w;
  w.name = name;
  w.images = cfg.get_int(k + "images");
  w.image_h = static_cast<int>(cfg.get_int(k + "image_h"));
  w.image_w = static_cast<int>(cfg.get_int(k + "image_w"));
  w.channels = static_cast<int>(cfg.get_int(k + "channels", 3));
  w.epochs = static_cast<int>(cfg.get_int(k + "epochs", 1));
  const int size = static_cast<int>(cfg.get_int(k + "model_size", 64));
  DeviceConfig dev;
  dev.weight_bits = static_cast<int>(cfg.get_int("device.weight_bits", 8));
  dev.input_bits = static_cast<int>(cfg.get_int("device.input_bits", 8));
  dev.rows = dev.cols = static_cast<int>(cfg.get_int("device.crossbar_size", 32));
  w.model = GanConfig::desk_scale(size, w.channels, dev);
  w.model.batch = static_cast<int>(cfg.get_int(k + "batch", 64));
  w.validate();
  return w;
}

ProcedureCounts iteration_op_counts(const GanConfig& model) {
  const DeviceConfig& dev = model.device;
  const std::int64_t m = model.batch;
  ProcedureCounts c;
  c.g_forward = forward_counts(model.generator, dev, m);
  c.d_forward = forward_counts(model.discriminator, dev, 2 * m);
  c.d_back = backward_counts(model.discriminator, dev, 2 * m);
  c.g_back = backward_counts(model.generator, dev, m);
  // The generator's output error is propagated back through the discriminator.
  for (const auto& l : model.discriminator) add_error_pass(c.g_back, l.shape, dev, m);
  c.d_back.lut_lookups += m;
  c.d_back.memory_accesses += 2 * m;
  c.d_back.adder_ops += 2 * m;
  c.g_back.lut_lookups += m;
  c.g_back.adder_ops += m;
  return c;
}

IterationTime iteration_time(int s, const Workload& w, const CostParams& p) {
  require_parallelism(s);
  using pipeline::TaskId;
  const std::int64_t m = w.model.batch;
  const auto rounds = [m](int par) { return static_cast<double>((m + par - 1) / par); };
  const double scale = rounds(s) / rounds(p.reference_parallelism);

  IterationTime r;
  r.parallelism = s;
  r.steps = p.base_steps;
  for (TaskId id : {TaskId::a, TaskId::b, TaskId::c}) r.steps[id] *= scale;
  for (TaskId id : pipeline::kAllTasks) r.procedure[static_cast<int>(procedure_of(id))] += r.steps[id];
  r.forward = r.procedure[static_cast<int>(Procedure::d_forward)] + r.procedure[static_cast<int>(Procedure::g_forward)];
  r.backward = r.procedure[static_cast<int>(Procedure::d_back)] + r.procedure[static_cast<int>(Procedure::g_back)];
  r.sequential = r.steps.total();
  return r;
}

std::array<double, kProcedureCount> attributed_time(const pipeline::ScheduleTrace& trace) {
  std::array<double, kProcedureCount> out{};
  if (trace.records.empty()) return out;
  double lo = 0.0, hi = trace.makespan;
  if (trace.iterations >= 4) {
    std::vector<double> finish(trace.iterations, 0.0);
    for (const auto& r : trace.records) finish[r.iteration] = std::max(finish[r.iteration], r.end);
    lo = finish[1];
    hi = finish[trace.iterations - 1];
  }
  std::vector<double> cuts = {lo, hi};
  for (const auto& r : trace.records) {
    if (r.start > lo && r.start < hi) cuts.push_back(r.start);
    if (r.end > lo && r.end < hi) cuts.push_back(r.end);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    std::array<int, kProcedureCount> running{};
    int k = 0;
    for (const auto& r : trace.records)
      if (r.start <= a && r.end >= b) {
        ++running[static_cast<int>(procedure_of(r.id))];
        ++k;
      }
    if (k == 0) continue;
    for (int pr = 0; pr < kProcedureCount; ++pr) out[pr] += (b - a) * running[pr] / k;
  }
  return out;
}

CostReport energy_report(const pipeline::ScheduleTrace& trace, const ProcedureCounts& counts, const CostParams& p,
                         const Workload& w, int s) {
  p.validate();
  CostReport r;
  r.workload = w.name;
  r.mode = std::string(pipeline::to_string(trace.mode));
  r.parallelism = s;
  r.area_mm2 = area(s, p);
  r.iteration_latency_s = trace.iteration_latency;
  r.iterations_per_epoch = w.iterations_per_epoch();
  r.epochs = w.epochs;
  const double iterations = static_cast<double>(r.iterations_per_epoch) * w.epochs;
  r.training_hours = iterations * trace.iteration_latency / 3600.0;

  const auto attributed = attributed_time(trace);
  double attributed_sum = 0.0;
  for (double v : attributed) attributed_sum += v;
  for (int i = 0; i < kProcedureCount; ++i) r.time_share[i] = attributed_sum > 0.0 ? attributed[i] / attributed_sum : 0.0;

  const std::array<const OpCounts*, kProcedureCount> per = {&counts.d_forward, &counts.d_back, &counts.g_forward,
                                                            &counts.g_back};
  // Images arrive resized to the network input.
  const double input_values =
      static_cast<double>(w.model.batch) * static_cast<double>(w.model.discriminator.front().shape.input_dims().size());
  const double static_energy = p.static_power * trace.iteration_latency;
  for (int i = 0; i < kProcedureCount; ++i) {
    double e = dot(*per[i], p.energy);
    if (i == static_cast<int>(Procedure::d_forward)) e += input_values * p.energy.input_value;
    r.energy_j[i] = e * p.energy_scale + static_energy * r.time_share[i];
  }
  r.energy_per_iteration_j = r.energy_j[0] + r.energy_j[1] + r.energy_j[2] + r.energy_j[3];
  for (int i = 0; i < kProcedureCount; ++i)
    r.energy_share[i] = r.energy_per_iteration_j > 0.0 ? r.energy_j[i] / r.energy_per_iteration_j : 0.0;
  r.energy_kwh = r.energy_per_iteration_j * iterations / kJoulesPerKwh;
  return r;
}

CostReport evaluate(const Workload& w, int s, pipeline::PipelineMode mode, const CostParams& p) {
  const IterationTime t = iteration_time(s, w, p);
  const pipeline::ScheduleTrace trace = pipeline::simulate(pipeline::build_task_graph(mode), t.steps, 8);
  return energy_report(trace, iteration_op_counts(w.model), p, w, s);
}

CostParams calibrate_energy(const CostParams& p, const Workload& w, int s, double target_kwh) {
  if (!(target_kwh > 0.0)) throw std::invalid_argument("calibrate_energy: target must be > 0");
  if (p.static_power > 0.0)
    throw std::invalid_argument("calibrate_energy: static power must be zero so energy scales linearly");
  CostParams unit = p;
  unit.energy_scale = 1.0;
  const double base = evaluate(w, s, pipeline::PipelineMode::cross_parallel, unit).energy_kwh;
  if (!(base > 0.0)) throw std::invalid_argument("calibrate_energy: unit energies are all zero");
  unit.energy_scale = target_kwh / base;
  return unit;
}

void write_report_json(std::ostream& out, const CostReport& r) {
  nlohmann::ordered_json j;
  j["workload"] = r.workload;
  j["mode"] = r.mode;
  j["parallelism"] = r.parallelism;
  j["area_mm2"] = r.area_mm2;
  j["iteration_latency_s"] = r.iteration_latency_s;
  j["iterations_per_epoch"] = r.iterations_per_epoch;
  j["epochs"] = r.epochs;
  j["training_hours"] = r.training_hours;
  j["energy_per_iteration_j"] = r.energy_per_iteration_j;
  j["energy_kwh"] = r.energy_kwh;
  for (int i = 0; i < kProcedureCount; ++i) {
    const std::string name(kProcedureNames[i]);
    j["breakdown"][name] = {{"energy_j", r.energy_j[i]}, {"energy_share", r.energy_share[i]},
                            {"time_share", r.time_share[i]}};
  }
  out << j.dump(2) << '\n';
}

void write_report_table(std::ostream& out, const CostReport& r) {
  out << "workload " << r.workload << ", " << r.mode << ", parallelism " << r.parallelism << '\n';
  out << std::fixed << std::setprecision(4);
  out << "  area (mm^2)            " << std::setw(14) << r.area_mm2 << '\n';
  out << "  iteration latency (s)  " << std::setw(14) << r.iteration_latency_s << '\n';
  out << "  training time (h)      " << std::setw(14) << r.training_hours << '\n';
  out << "  energy (kWh)           " << std::setw(14) << r.energy_kwh << '\n';
  out << "  procedure    time %    energy %\n";
  for (int i = 0; i < kProcedureCount; ++i)
    out << "  " << std::left << std::setw(10) << kProcedureNames[i] << std::right << std::setw(9) << std::setprecision(2)
        << 100.0 * r.time_share[i] << std::setw(12) << 100.0 * r.energy_share[i] << '\n';
  out << std::defaultfloat;
}

}  // namespace memgan::cost

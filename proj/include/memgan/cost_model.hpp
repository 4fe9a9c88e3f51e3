#pragma once

#include "memgan/gan.hpp"
#include "memgan/op_counts.hpp"
#include "memgan/pipeline.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

namespace memgan {
class KeyValueConfig;
}

namespace memgan::cost {

enum class Procedure : int { d_forward, d_back, g_forward, g_back };
inline constexpr int kProcedureCount = 4;
std::string_view to_string(Procedure p);

/// Procedure a pipeline step belongs to. The diff-block steps d1..d3 and the
/// discriminator update path are D_back; the generator update path is G_back.
Procedure procedure_of(pipeline::TaskId id);

/// Joules per hardware operation.
struct UnitEnergy {
  double mvm = 0.0;
  double program_cell = 0.0;
  double lut_lookup = 0.0;
  double adder_op = 0.0;
  double memory_access = 0.0;
  double input_value = 0.0;  // one network-input value loaded into the accelerator
};

struct CostParams {
  double area_total_at_1 = 139.0;  // mm², whole design at parallelism 1
  double area_d_forward = 23.0;    // mm² per discriminator forward-flow replica
  double area_g_forward = 25.5;    // mm² per generator forward-flow replica
  UnitEnergy energy;
  double energy_scale = 1.0;  // multiplies every unit energy
  double static_power = 0.0;  // W
  /// Step durations of one iteration at `reference_parallelism`.
  pipeline::StepTimeTable base_steps;
  int reference_parallelism = 32;

  /// Fixed area outside the replicated forward flows.
  double area_base() const { return area_total_at_1 - (area_d_forward + area_g_forward); }

  /// Throws std::invalid_argument naming the first negative field.
  void validate() const;
  static CostParams from_config(const KeyValueConfig& cfg);
};

double area(int s, const CostParams& p);

struct ForwardFractions {
  double discriminator = 0.0;
  double generator = 0.0;
};
ForwardFractions forward_flow_fractions(int s, const CostParams& p);

/// A training job: dataset size and raw image shape, and the network that
/// trains on it (images are resized to the network input).
struct Workload {
  std::string name;
  std::int64_t images = 0;
  int image_h = 0;
  int image_w = 0;
  int channels = 3;
  int epochs = 1;
  GanConfig model;

  std::int64_t iterations_per_epoch() const;
  void validate() const;
  /// Reads workload.<name>.{images,image_h,image_w,channels,model_size,batch,epochs}.
  static Workload from_config(const KeyValueConfig& cfg, const std::string& name);
};

/// Per-iteration operation counts of one training step of `model`, derived
/// from the layer shapes and the crossbar tiling alone.
ProcedureCounts iteration_op_counts(const GanConfig& model);

struct IterationTime {
  int parallelism = 1;
  std::array<double, kProcedureCount> procedure{};  // seconds
  double forward = 0.0;     // D_forward + G_forward
  double backward = 0.0;    // D_back + G_back
  double sequential = 0.0;  // every step back to back
  pipeline::StepTimeTable steps;
};

/// Forward steps (a, b, c) scale with ceil(m / s) relative to the reference
/// parallelism; transmission, propagation and weight updating do not depend on s.
IterationTime iteration_time(int s, const Workload& w, const CostParams& p);

/// Steady-state wall-clock time attributed to each procedure. Concurrent tasks
/// split an instant equally; fully idle instants are not attributed.
std::array<double, kProcedureCount> attributed_time(const pipeline::ScheduleTrace& trace);

struct CostReport {
  std::string workload;
  std::string mode;
  int parallelism = 1;
  double area_mm2 = 0.0;
  double iteration_latency_s = 0.0;
  std::int64_t iterations_per_epoch = 0;
  int epochs = 1;
  double training_hours = 0.0;
  std::array<double, kProcedureCount> energy_j{};  // per iteration
  double energy_per_iteration_j = 0.0;             // sum of energy_j
  double energy_kwh = 0.0;                         // whole training run
  std::array<double, kProcedureCount> time_share{};
  std::array<double, kProcedureCount> energy_share{};
};

/// Energy = sum of op_count x unit energy per procedure, plus input loading
/// (D_forward) and static power spread by attributed time.
CostReport energy_report(const pipeline::ScheduleTrace& trace, const ProcedureCounts& counts, const CostParams& p,
                         const Workload& w, int s);

/// Simulates `w` at parallelism `s` under `mode` and reports its cost.
CostReport evaluate(const Workload& w, int s, pipeline::PipelineMode mode, const CostParams& p);

/// Returns `p` with energy_scale chosen so that `w` costs `target_kwh`.
CostParams calibrate_energy(const CostParams& p, const Workload& w, int s, double target_kwh);

void write_report_json(std::ostream& out, const CostReport& r);
void write_report_table(std::ostream& out, const CostReport& r);

}  // namespace memgan::cost

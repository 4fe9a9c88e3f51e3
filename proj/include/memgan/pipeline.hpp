#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace memgan {
class KeyValueConfig;
}

namespace memgan::pipeline {

/// Steps of one training iteration. d is split into d1 (D(x) to the diff
/// block), d2 (D(G(z)) to the diff block) and d3 (error computation and
/// transmission); e and f into transmission (e1/f1) and weight update (e2/f2).
enum class TaskId : int { a, b, c, d1, d2, d3, e1, e2, f1, f2 };
inline constexpr int kTaskCount = 10;
inline constexpr std::array<TaskId, kTaskCount> kAllTasks = {TaskId::a,  TaskId::b,  TaskId::c,  TaskId::d1, TaskId::d2,
                                                             TaskId::d3, TaskId::e1, TaskId::e2, TaskId::f1, TaskId::f2};

enum class Block : int { discriminator, generator, diff };
inline constexpr int kBlockCount = 3;

/// sequential is the single-processor reference: all ten steps back to back.
enum class PipelineMode { basic, cross_parallel, sequential };

std::string_view to_string(TaskId id);
std::string_view to_string(Block block);
std::string_view to_string(PipelineMode mode);
TaskId task_from_string(std::string_view name);
PipelineMode mode_from_string(std::string_view name);

/// Block that executes a task. Transmissions occupy the block on the D/G side
/// of the link; only d3 runs on the diff block.
Block block_of(TaskId id);

struct Dependency {
  TaskId task;
  int iteration_offset = 0;  // 0: same iteration, 1: previous iteration
};

struct Task {
  TaskId id;
  Block block;
  std::vector<Dependency> deps;
};

/// Per-iteration task set. Order doubles as dispatch priority within an iteration.
struct TaskGraph {
  PipelineMode mode = PipelineMode::basic;
  std::vector<Task> tasks;

  const Task& task(TaskId id) const;
};

TaskGraph build_task_graph(PipelineMode mode);

struct StepTimeTable {
  std::array<double, kTaskCount> seconds{};

  double& operator[](TaskId id) { return seconds[static_cast<int>(id)]; }
  double operator[](TaskId id) const { return seconds[static_cast<int>(id)]; }
  double total() const;

  /// Throws std::invalid_argument for non-positive or non-finite durations.
  void validate() const;
  friend bool operator==(const StepTimeTable&, const StepTimeTable&) = default;
};

/// Reads `step.<task>` (seconds) for every task; throws naming a missing or bad field.
StepTimeTable step_times_from_config(const KeyValueConfig& cfg);

struct TaskRecord {
  TaskId id;
  Block block;
  int iteration;
  double start;
  double end;
};

struct BlockStats {
  double busy = 0.0;   // per iteration
  double idle = 0.0;   // stall time inside the block's per-iteration span, steady state
  double usage = 0.0;  // busy / iteration latency
};

struct ScheduleTrace {
  PipelineMode mode = PipelineMode::basic;
  StepTimeTable times;
  int iterations = 0;
  std::vector<TaskRecord> records;  // in dispatch order
  double makespan = 0.0;
  double iteration_latency = 0.0;  // steady state
  std::array<BlockStats, kBlockCount> blocks{};

  const BlockStats& block(Block b) const { return blocks[static_cast<int>(b)]; }
};

/// Event-driven, earliest-start list scheduling: whenever a block is free it
/// starts its highest-priority ready task (lowest iteration, then graph order).
/// Steady-state figures are averaged over iterations 3..N (1-based) when N >= 4.
ScheduleTrace simulate(const TaskGraph& graph, const StepTimeTable& times, int iterations);

struct BlockComparison {
  double usage_basic = 0.0;
  double usage_cross = 0.0;
  double idle_basic = 0.0;
  double idle_cross = 0.0;
  double usage_ratio = 0.0;  // cross / basic
  double idle_ratio = 0.0;   // basic / cross (idle-time improvement)
};

struct UtilizationReport {
  double latency_basic = 0.0;
  double latency_cross = 0.0;
  double speedup = 0.0;
  std::array<BlockComparison, kBlockCount> blocks{};

  const BlockComparison& block(Block b) const { return blocks[static_cast<int>(b)]; }
};

/// Throws std::invalid_argument when the traces were produced from different tables.
UtilizationReport utilization_report(const ScheduleTrace& basic, const ScheduleTrace& cross);

void write_trace_csv(std::ostream& out, const ScheduleTrace& trace);

}  // namespace memgan::pipeline

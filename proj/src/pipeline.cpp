#include "memgan/pipeline.hpp"

#include "memgan/config.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <queue>
#include <stdexcept>

namespace memgan::pipeline {

namespace {

constexpr std::array<std::string_view, kTaskCount> kTaskNames = {"a", "b", "c", "d1", "d2", "d3", "e1", "e2", "f1", "f2"};

int idx(TaskId id) { return static_cast<int>(id); }

}  // namespace

std::string_view to_string(TaskId id) { return kTaskNames[idx(id)]; }

std::string_view to_string(Block block) {
  switch (block) {
    case Block::discriminator: return "discriminator";
    case Block::generator: return "generator";
    case Block::diff: return "diff";
  }
  return "?";
}

std::string_view to_string(PipelineMode mode) {
  switch (mode) {
    case PipelineMode::basic: return "basic";
    case PipelineMode::cross_parallel: return "cross_parallel";
    case PipelineMode::sequential: return "sequential";
  }
  return "?";
}

TaskId task_from_string(std::string_view name) {
  for (int i = 0; i < kTaskCount; ++i)
    if (kTaskNames[i] == name) return static_cast<TaskId>(i);
  throw std::invalid_argument("unknown task id '" + std::string(name) + "'");
}

PipelineMode mode_from_string(std::string_view name) {
  if (name == "basic") return PipelineMode::basic;
  if (name == "cross_parallel" || name == "cross-parallel" || name == "cross") return PipelineMode::cross_parallel;
  if (name == "sequential") return PipelineMode::sequential;
  throw std::invalid_argument("unknown pipeline mode '" + std::string(name) + "'");
}

Block block_of(TaskId id) {
  switch (id) {
    case TaskId::b:
    case TaskId::f1:
    case TaskId::f2: return Block::generator;
    case TaskId::d3: return Block::diff;
    default: return Block::discriminator;
  }
}

const Task& TaskGraph::task(TaskId id) const {
  for (const auto& t : tasks)
    if (t.id == id) return t;
  throw std::out_of_range("task not in graph");
}

TaskGraph build_task_graph(PipelineMode mode) {
  using enum TaskId;
  TaskGraph g;
  g.mode = mode;
  auto add = [&](TaskId id, std::vector<Dependency> deps) { g.tasks.push_back(Task{id, block_of(id), std::move(deps)}); };

  if (mode == PipelineMode::basic) {
    // One chain per iteration; the two update paths fork after d3.
    add(a, {{e2, 1}, {f2, 1}});
    add(b, {{a, 0}});
    add(c, {{b, 0}});
    add(d1, {{c, 0}});
    add(d2, {{d1, 0}});
    add(d3, {{d2, 0}});
    add(e1, {{d3, 0}});
    add(e2, {{e1, 0}});
    add(f1, {{d3, 0}});
    add(f2, {{f1, 0}});
  } else if (mode == PipelineMode::sequential) {
    add(a, {{f2, 1}});
    add(b, {{a, 0}});
    add(c, {{b, 0}});
    add(d1, {{c, 0}});
    add(d2, {{d1, 0}});
    add(d3, {{d2, 0}});
    add(e1, {{d3, 0}});
    add(e2, {{e1, 0}});
    add(f1, {{e2, 0}});
    add(f2, {{f1, 0}});
  } else {
    // a and b start together; D of iteration t+1 restarts as soon as its own
    // update is done and re-synchronizes with G at c.
    add(a, {{e2, 1}});
    add(b, {{f2, 1}});
    add(d1, {{a, 0}});
    add(c, {{a, 0}, {b, 0}, {d1, 0}});
    add(d2, {{c, 0}, {d1, 0}});
    add(d3, {{d2, 0}});
    add(e1, {{d3, 0}});
    add(e2, {{e1, 0}});
    add(f1, {{d3, 0}});
    add(f2, {{f1, 0}});
  }
  return g;
}

double StepTimeTable::total() const {
  double s = 0.0;
  for (double v : seconds) s += v;
  return s;
}

void StepTimeTable::validate() const {
  for (int i = 0; i < kTaskCount; ++i)
    if (!std::isfinite(seconds[i]) || !(seconds[i] > 0.0))
      throw std::invalid_argument("StepTimeTable: duration of task '" + std::string(kTaskNames[i]) +
                                  "' must be positive");
}

StepTimeTable step_times_from_config(const KeyValueConfig& cfg) {
  StepTimeTable t;
  for (int i = 0; i < kTaskCount; ++i) {
    const std::string key = "step." + std::string(kTaskNames[i]);
    t.seconds[i] = cfg.get_double(key);
    if (!(t.seconds[i] > 0.0)) throw std::invalid_argument(cfg.source() + ": field '" + key + "' must be > 0");
  }
  return t;
}

ScheduleTrace simulate(const TaskGraph& graph, const StepTimeTable& times, int iterations) {
  if (iterations < 1) throw std::invalid_argument("simulate: iterations must be >= 1");
  times.validate();

  const int n_tasks = static_cast<int>(graph.tasks.size());
  std::array<int, kTaskCount> slot{};
  slot.fill(-1);
  for (int i = 0; i < n_tasks; ++i) slot[idx(graph.tasks[i].id)] = i;

  // Instance (task slot i, iteration t) lives at t * n_tasks + i.
  const int n_inst = n_tasks * iterations;
  std::vector<double> end_time(n_inst, -1.0);
  std::vector<char> started(n_inst, 0);
  auto inst = [&](int slot_index, int iter) { return iter * n_tasks + slot_index; };

  auto ready = [&](int i, int t, double now) {
    const Task& task = graph.tasks[i];
    if (t > 0) {
      const double prev = end_time[inst(i, t - 1)];
      if (prev < 0.0 || prev > now) return false;
    }
    for (const auto& dep : task.deps) {
      const int it = t - dep.iteration_offset;
      if (it < 0) continue;
      const int s = slot[idx(dep.task)];
      if (s < 0) continue;
      const double e = end_time[inst(s, it)];
      if (e < 0.0 || e > now) return false;
    }
    return true;
  };

  ScheduleTrace trace;
  trace.mode = graph.mode;
  trace.times = times;
  trace.iterations = iterations;
  trace.records.reserve(n_inst);

  using Event = std::pair<double, int>;  // (end time, instance)
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
  std::array<bool, kBlockCount> block_busy{};
  std::vector<int> first_pending(kBlockCount, 0);
  double now = 0.0;
  int completed = 0;

  while (completed < n_inst) {
    // Dispatch: each free block takes its best ready instance.
    for (int b = 0; b < kBlockCount; ++b) {
      if (block_busy[b]) continue;
      for (int t = 0; t < iterations; ++t) {
        bool dispatched = false;
        for (int i = 0; i < n_tasks; ++i) {
          const int k = inst(i, t);
          if (started[k] || static_cast<int>(graph.tasks[i].block) != b) continue;
          if (!ready(i, t, now)) continue;
          const double dur = times[graph.tasks[i].id];
          started[k] = 1;
          end_time[k] = -1.0;
          events.emplace(now + dur, k);
          trace.records.push_back(TaskRecord{graph.tasks[i].id, graph.tasks[i].block, t, now, now + dur});
          block_busy[b] = true;
          dispatched = true;
          break;
        }
        if (dispatched) break;
      }
    }
    if (events.empty()) throw std::logic_error("simulate: dependency deadlock in task graph");
    // Advance to the next completion and retire everything finishing then.
    now = events.top().first;
    while (!events.empty() && events.top().first == now) {
      const int k = events.top().second;
      events.pop();
      end_time[k] = now;
      block_busy[static_cast<int>(graph.tasks[k % n_tasks].block)] = false;
      ++completed;
    }
  }

  trace.makespan = now;

  std::vector<double> finish(iterations, 0.0);
  for (const auto& r : trace.records) finish[r.iteration] = std::max(finish[r.iteration], r.end);

  const int first_steady = iterations >= 4 ? 2 : 0;  // 0-based index of iteration 3
  if (iterations >= 4)
    trace.iteration_latency = (finish[iterations - 1] - finish[first_steady - 1]) / (iterations - first_steady);
  else
    trace.iteration_latency = trace.makespan / iterations;

  for (int b = 0; b < kBlockCount; ++b) {
    BlockStats& st = trace.blocks[b];
    for (const auto& task : graph.tasks)
      if (static_cast<int>(task.block) == b) st.busy += times[task.id];
    if (st.busy == 0.0) continue;
    double idle_sum = 0.0;
    for (int t = first_steady; t < iterations; ++t) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (const auto& r : trace.records) {
        if (r.iteration != t || static_cast<int>(r.block) != b) continue;
        lo = std::min(lo, r.start);
        hi = std::max(hi, r.end);
      }
      idle_sum += (hi - lo) - st.busy;
    }
    st.idle = std::max(0.0, idle_sum / (iterations - first_steady));
    st.usage = st.busy / trace.iteration_latency;
  }
  return trace;
}

UtilizationReport utilization_report(const ScheduleTrace& basic, const ScheduleTrace& cross) {
  if (!(basic.times == cross.times))
    throw std::invalid_argument("utilization_report: traces were simulated with different step time tables");
  UtilizationReport rep;
  rep.latency_basic = basic.iteration_latency;
  rep.latency_cross = cross.iteration_latency;
  rep.speedup = basic.iteration_latency / cross.iteration_latency;
  for (int b = 0; b < kBlockCount; ++b) {
    BlockComparison& c = rep.blocks[b];
    c.usage_basic = basic.blocks[b].usage;
    c.usage_cross = cross.blocks[b].usage;
    c.idle_basic = basic.blocks[b].idle;
    c.idle_cross = cross.blocks[b].idle;
    c.usage_ratio = c.usage_basic > 0.0 ? c.usage_cross / c.usage_basic : 0.0;
    c.idle_ratio = c.idle_cross > 0.0 ? c.idle_basic / c.idle_cross : 0.0;
  }
  return rep;
}

void write_trace_csv(std::ostream& out, const ScheduleTrace& trace) {
  out << "task,block,iter,start,end\n";
  out.precision(9);
  for (const auto& r : trace.records)
    out << to_string(r.id) << ',' << to_string(r.block) << ',' << r.iteration << ',' << r.start << ',' << r.end << '\n';
}

}  // namespace memgan::pipeline

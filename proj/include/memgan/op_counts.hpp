#pragma once

#include <cstdint>

namespace memgan {

/// Hardware operations issued by one training procedure.
struct OpCounts {
  std::int64_t mvm = 0;             // input vectors applied to one crossbar
  std::int64_t program_cells = 0;   // crossbar cells written
  std::int64_t lut_lookups = 0;
  std::int64_t adder_ops = 0;
  std::int64_t memory_accesses = 0;  // diff-block batch memory reads and writes
  std::int64_t macs = 0;            // multiply-accumulates actually evaluated

  OpCounts& operator+=(const OpCounts& o) {
    mvm += o.mvm;
    program_cells += o.program_cells;
    lut_lookups += o.lut_lookups;
    adder_ops += o.adder_ops;
    memory_accesses += o.memory_accesses;
    macs += o.macs;
    return *this;
  }
  friend bool operator==(const OpCounts&, const OpCounts&) = default;
};

/// Counts split over the four training procedures.
struct ProcedureCounts {
  OpCounts d_forward;
  OpCounts d_back;
  OpCounts g_forward;
  OpCounts g_back;

  OpCounts total() const {
    OpCounts t = d_forward;
    t += d_back;
    t += g_forward;
    t += g_back;
    return t;
  }
};

}  // namespace memgan

#pragma once

#include "memgan/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace memgan {

/// Table of d/dD log D (LUT1) or d/dD log(1 - D) (LUT2), addressed by D
/// quantized to `bits`. Bin k is centred on k / 2^bits. A table built with
/// bits == 0 evaluates the function exactly (floating-point datapath).
class Lut {
 public:
  enum class Kind { log_d, log_one_minus_d };

  static Lut build(Kind kind, int bits);

  /// Exact derivative, with D clamped into the open interval.
  static double evaluate(Kind kind, double d);

  Kind kind() const { return kind_; }
  int bits() const { return bits_; }
  bool analytic() const { return bits_ == 0; }
  const std::vector<double>& entries() const { return entries_; }

  /// Clamps D to [2^-bits, 1 - 2^-bits] and returns the bin index.
  std::size_t address(double d) const;
  double bin_center(std::size_t k) const;
  double lookup(double d) const;

 private:
  Kind kind_ = Kind::log_d;
  int bits_ = 0;
  std::vector<double> entries_;
};

struct DiffLuts {
  Lut real;  // LUT1
  Lut fake;  // LUT2
};

/// `input_bits` in {4, 8, 16}, or 0 for exact evaluation.
DiffLuts build_luts(int input_bits);

/// Holds the staged LUT1 values of one batch of real samples.
class BatchMemory {
 public:
  explicit BatchMemory(int capacity = 64);

  int capacity() const { return capacity_; }
  const std::vector<double>& slots() const { return slots_; }
  std::optional<std::int64_t> tag() const { return tag_; }
  bool staged() const { return tag_.has_value(); }

  void write(std::vector<double> values, std::int64_t iteration);
  /// Returns the slots and empties the memory. Throws unless staged for `iteration`.
  std::vector<double> take(std::int64_t iteration);

 private:
  int capacity_;
  std::vector<double> slots_;
  std::optional<std::int64_t> tag_;
};

/// Per-sample error seeds, already scaled by 1/m. Signs follow the objectives:
/// error_d_* are derivatives of the discriminator objective with respect to
/// D(x) and D(G(z)); error_g is the derivative of the generator objective with
/// respect to D(G(z)).
struct DiffResult {
  std::int64_t iteration = 0;
  VectorXd error_d_real;
  VectorXd error_d_fake;
  VectorXd error_g;
};

struct DiffOpCounts {
  std::int64_t lut_lookups = 0;
  std::int64_t adder_ops = 0;
  std::int64_t memory_writes = 0;
  std::int64_t memory_reads = 0;
};

/// Looks up D(x) in LUT1 and stores the result for this iteration.
void stage_real_scores(BatchMemory& mem, const DiffLuts& luts, const Eigen::Ref<const VectorXd>& d_x,
                       std::int64_t iteration, DiffOpCounts* counts = nullptr);

/// Looks up D(G(z)) in LUT2 and combines it with the staged memory.
DiffResult compute_errors(BatchMemory& mem, const DiffLuts& luts, const Eigen::Ref<const VectorXd>& d_gz,
                          std::int64_t iteration, DiffOpCounts* counts = nullptr);

/// LUTs, batch memory and adders of the diff block.
class DiffBlock {
 public:
  DiffBlock(int batch, int input_bits) : luts_(build_luts(input_bits)), memory_(batch) {}

  void stage_real_scores(const Eigen::Ref<const VectorXd>& d_x, std::int64_t iteration) {
    memgan::stage_real_scores(memory_, luts_, d_x, iteration, &counts_);
  }
  DiffResult compute_errors(const Eigen::Ref<const VectorXd>& d_gz, std::int64_t iteration) {
    return memgan::compute_errors(memory_, luts_, d_gz, iteration, &counts_);
  }

  const DiffLuts& luts() const { return luts_; }
  const BatchMemory& memory() const { return memory_; }
  const DiffOpCounts& counts() const { return counts_; }

 private:
  DiffLuts luts_;
  BatchMemory memory_;
  DiffOpCounts counts_;
};

}  // namespace memgan

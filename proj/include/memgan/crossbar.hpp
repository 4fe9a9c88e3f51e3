#pragma once

#include "memgan/types.hpp"

#include <optional>
#include <random>

namespace memgan {

/// Physical parameters of one memristor crossbar.
struct DeviceConfig {
  int rows = 32;
  int cols = 32;
  double r_min = 50e3;  // ohms, high-conductance end
  double r_max = 1e6;   // ohms, low-conductance end
  int weight_bits = 8;
  int input_bits = 8;
  /// Ideal device: conductances hold exact real weights and inputs are not
  /// quantized. Used for the floating-point baseline and oracle comparisons.
  bool ideal = false;
  /// Std-dev of additive programming noise, in code units. Zero disables it.
  double program_noise_lsb = 0.0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  /// Conductance (siemens) that a code maps to, linear between 1/r_max and 1/r_min.
  double conductance(std::int64_t code) const;
};

/// Uniform fixed-point format. Symmetric formats use a signed code range
/// [-(2^(bits-1) - 1), 2^(bits-1) - 1] stored with an offset of 2^(bits-1).
struct QuantSpec {
  int bits = 8;
  double min_val = -1.0;
  double max_val = 1.0;
  bool symmetric = true;

  void validate() const;

  double scale() const;
  std::int64_t zero_code() const;
  std::int64_t max_code() const { return (std::int64_t{1} << bits) - 1; }

  /// Symmetric range [-max_abs, max_abs]. A zero max_abs falls back to [-1, 1].
  static QuantSpec symmetric_range(int bits, double max_abs);
};

struct QuantizedGrid {
  CodeGrid codes;
  double scale = 1.0;
  std::int64_t zero_code = 0;
  int bits = 8;
};

/// Round-to-nearest (ties away from zero) with clipping to the QuantSpec range.
std::int64_t quantize_value(double x, const QuantSpec& spec);

inline double dequantize_value(std::int64_t code, double scale, std::int64_t zero_code) {
  return static_cast<double>(code - zero_code) * scale;
}

QuantizedGrid quantize(const Eigen::Ref<const MatrixXd>& matrix, const QuantSpec& spec);
MatrixXd dequantize(const QuantizedGrid& grid);

/// A fixed-size grid of conductance codes. Holds weights only between
/// programming events; reads go through dequantization.
class Crossbar {
 public:
  explicit Crossbar(DeviceConfig config = {});

  const DeviceConfig& config() const { return config_; }
  const CodeGrid& levels() const { return levels_; }
  double scale() const { return scale_; }
  std::int64_t zero_code() const { return zero_code_; }
  int active_rows() const { return active_rows_; }
  int active_cols() const { return active_cols_; }

  /// Exact analog grid of an ideal device (zero-sized otherwise).
  const MatrixXd& analog() const { return analog_; }

  /// Quantizes `weights` with a symmetric scale taken from their max-abs value
  /// and writes them into the top-left corner; the rest is set to zero_code.
  void program(const Eigen::Ref<const MatrixXd>& weights, std::mt19937_64* noise_rng = nullptr);

  /// Overwrites the raw code grid (for fault injection and tests).
  void set_levels(CodeGrid levels, double scale, int active_rows, int active_cols);
  /// Ideal devices only: overwrites the analog grid.
  void set_analog(MatrixXd analog, int active_rows, int active_cols);

  /// Number of programming events since construction.
  std::int64_t program_count() const { return program_count_; }

 private:
  DeviceConfig config_;
  CodeGrid levels_;
  MatrixXd analog_;
  double scale_ = 1.0;
  std::int64_t zero_code_ = 0;
  int active_rows_ = 0;
  int active_cols_ = 0;
  std::int64_t program_count_ = 0;
};

/// Value-semantics programming: returns a copy of `xbar` holding `weights`.
Crossbar program(Crossbar xbar, const Eigen::Ref<const MatrixXd>& weights);

/// Dequantized weights of the active region.
MatrixXd read_weights(const Crossbar& xbar);

/// out_j = sum_i in_i * w_ij over the active region, where in_i is the input
/// after quantization with `input_spec` (no quantization when absent) and w_ij
/// the dequantized stored weight. Accumulation runs in row order.
VectorXd mvm(const Crossbar& xbar, const Eigen::Ref<const VectorXd>& input,
             const std::optional<QuantSpec>& input_spec);

/// Worst-case |mvm - W v| per output, maximized over outputs, for symmetric
/// max-abs scaling of both operands at the given bit-widths.
double mvm_error_bound(const Eigen::Ref<const MatrixXd>& weights, const Eigen::Ref<const VectorXd>& input,
                       int weight_bits, int input_bits);

}  // namespace memgan

#include "memgan/crossbar.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace memgan {

namespace {

bool supported_weight_bits(int bits) { return bits == 4 || bits == 8 || bits == 16 || bits == 32; }

std::int64_t symmetric_levels(int bits) { return (std::int64_t{1} << (bits - 1)) - 1; }

}  // namespace

void DeviceConfig::validate() const {
  if (rows < 1) throw std::invalid_argument("DeviceConfig.rows must be >= 1");
  if (cols < 1) throw std::invalid_argument("DeviceConfig.cols must be >= 1");
  if (!(r_min > 0.0) || !(r_min < r_max)) throw std::invalid_argument("DeviceConfig.r_min must satisfy 0 < r_min < r_max");
  if (!supported_weight_bits(weight_bits))
    throw std::invalid_argument("DeviceConfig.weight_bits must be one of 4, 8, 16, 32");
  if (input_bits < 2 || input_bits > 32) throw std::invalid_argument("DeviceConfig.input_bits must be in [2, 32]");
  if (program_noise_lsb < 0.0) throw std::invalid_argument("DeviceConfig.program_noise_lsb must be >= 0");
}

double DeviceConfig::conductance(std::int64_t code) const {
  const double g_min = 1.0 / r_max;
  const double g_max = 1.0 / r_min;
  const double top = static_cast<double>((std::int64_t{1} << weight_bits) - 1);
  return g_min + (static_cast<double>(code) / top) * (g_max - g_min);
}

void QuantSpec::validate() const {
  if (bits < 2 || bits > 32) throw std::invalid_argument("QuantSpec.bits must be in [2, 32]");
  if (!std::isfinite(min_val) || !std::isfinite(max_val) || !(min_val < max_val))
    throw std::invalid_argument("QuantSpec requires finite min_val < max_val");
  if (symmetric && min_val != -max_val) throw std::invalid_argument("QuantSpec.symmetric requires min_val == -max_val");
}

double QuantSpec::scale() const {
  if (symmetric) return max_val / static_cast<double>(symmetric_levels(bits));
  return (max_val - min_val) / static_cast<double>(max_code());
}

std::int64_t QuantSpec::zero_code() const {
  if (symmetric) return std::int64_t{1} << (bits - 1);
  const auto z = static_cast<std::int64_t>(std::round(-min_val / scale()));
  return std::clamp<std::int64_t>(z, 0, max_code());
}

QuantSpec QuantSpec::symmetric_range(int bits, double max_abs) {
  const double r = (max_abs > 0.0 && std::isfinite(max_abs)) ? max_abs : 1.0;
  return QuantSpec{bits, -r, r, true};
}

std::int64_t quantize_value(double x, const QuantSpec& spec) {
  const double s = spec.scale();
  const std::int64_t z = spec.zero_code();
  const double clipped = std::clamp(x, spec.min_val, spec.max_val);
  auto q = static_cast<std::int64_t>(std::round(clipped / s));
  if (spec.symmetric) {
    const std::int64_t l = symmetric_levels(spec.bits);
    q = std::clamp(q, -l, l);
    return z + q;
  }
  return std::clamp<std::int64_t>(z + q, 0, spec.max_code());
}

QuantizedGrid quantize(const Eigen::Ref<const MatrixXd>& matrix, const QuantSpec& spec) {
  spec.validate();
  if (!matrix.allFinite()) throw std::invalid_argument("quantize: input contains non-finite values");
  QuantizedGrid out;
  out.bits = spec.bits;
  out.scale = spec.scale();
  out.zero_code = spec.zero_code();
  out.codes.resize(matrix.rows(), matrix.cols());
  for (Eigen::Index j = 0; j < matrix.cols(); ++j)
    for (Eigen::Index i = 0; i < matrix.rows(); ++i) out.codes(i, j) = quantize_value(matrix(i, j), spec);
  return out;
}

MatrixXd dequantize(const QuantizedGrid& grid) {
  return ((grid.codes.array() - grid.zero_code).cast<double>() * grid.scale).matrix();
}

Crossbar::Crossbar(DeviceConfig config) : config_(config) {
  config_.validate();
  zero_code_ = std::int64_t{1} << (config_.weight_bits - 1);
  levels_ = CodeGrid::Constant(config_.rows, config_.cols, zero_code_);
  active_rows_ = config_.rows;
  active_cols_ = config_.cols;
  if (config_.ideal) analog_ = MatrixXd::Zero(config_.rows, config_.cols);
}

void Crossbar::program(const Eigen::Ref<const MatrixXd>& weights, std::mt19937_64* noise_rng) {
  if (weights.rows() > config_.rows || weights.cols() > config_.cols) {
    std::ostringstream msg;
    msg << "program: weights " << weights.rows() << "x" << weights.cols() << " exceed crossbar " << config_.rows << "x"
        << config_.cols;
    throw std::invalid_argument(msg.str());
  }
  if (!weights.allFinite()) throw std::invalid_argument("program: weights contain non-finite values");

  active_rows_ = static_cast<int>(weights.rows());
  active_cols_ = static_cast<int>(weights.cols());
  ++program_count_;

  if (config_.ideal) {
    analog_.setZero();
    analog_.topLeftCorner(weights.rows(), weights.cols()) = weights;
    return;
  }

  const double max_abs = weights.size() > 0 ? weights.cwiseAbs().maxCoeff() : 0.0;
  const QuantSpec spec = QuantSpec::symmetric_range(config_.weight_bits, max_abs);
  scale_ = spec.scale();
  levels_.setConstant(zero_code_);
  for (Eigen::Index j = 0; j < weights.cols(); ++j)
    for (Eigen::Index i = 0; i < weights.rows(); ++i) levels_(i, j) = quantize_value(weights(i, j), spec);

  if (noise_rng != nullptr && config_.program_noise_lsb > 0.0) {
    std::normal_distribution<double> noise(0.0, config_.program_noise_lsb);
    const std::int64_t top = (std::int64_t{1} << config_.weight_bits) - 1;
    for (Eigen::Index j = 0; j < weights.cols(); ++j)
      for (Eigen::Index i = 0; i < weights.rows(); ++i)
        levels_(i, j) =
            std::clamp<std::int64_t>(levels_(i, j) + static_cast<std::int64_t>(std::round(noise(*noise_rng))), 0, top);
  }
}

void Crossbar::set_levels(CodeGrid levels, double scale, int active_rows, int active_cols) {
  if (levels.rows() != config_.rows || levels.cols() != config_.cols)
    throw std::invalid_argument("set_levels: grid dimensions must equal the crossbar dimensions");
  const std::int64_t top = (std::int64_t{1} << config_.weight_bits) - 1;
  if (levels.size() > 0 && (levels.minCoeff() < 0 || levels.maxCoeff() > top))
    throw std::invalid_argument("set_levels: code outside [0, 2^weight_bits - 1]");
  if (!(scale > 0.0)) throw std::invalid_argument("set_levels: scale must be positive");
  levels_ = std::move(levels);
  scale_ = scale;
  active_rows_ = active_rows;
  active_cols_ = active_cols;
}

void Crossbar::set_analog(MatrixXd analog, int active_rows, int active_cols) {
  if (!config_.ideal) throw std::logic_error("set_analog: crossbar is not ideal");
  if (analog.rows() != config_.rows || analog.cols() != config_.cols)
    throw std::invalid_argument("set_analog: grid dimensions must equal the crossbar dimensions");
  analog_ = std::move(analog);
  active_rows_ = active_rows;
  active_cols_ = active_cols;
}

Crossbar program(Crossbar xbar, const Eigen::Ref<const MatrixXd>& weights) {
  xbar.program(weights);
  return xbar;
}

MatrixXd read_weights(const Crossbar& xbar) {
  const int r = xbar.active_rows();
  const int c = xbar.active_cols();
  if (xbar.config().ideal) return xbar.analog().topLeftCorner(r, c);
  return ((xbar.levels().topLeftCorner(r, c).array() - xbar.zero_code()).cast<double>() * xbar.scale()).matrix();
}

VectorXd mvm(const Crossbar& xbar, const Eigen::Ref<const VectorXd>& input, const std::optional<QuantSpec>& input_spec) {
  if (input.size() != xbar.active_rows()) {
    std::ostringstream msg;
    msg << "mvm: input length " << input.size() << " != active rows " << xbar.active_rows();
    throw std::invalid_argument(msg.str());
  }
  VectorXd in = input;
  if (input_spec) {
    input_spec->validate();
    const double s = input_spec->scale();
    const std::int64_t z = input_spec->zero_code();
    for (Eigen::Index i = 0; i < in.size(); ++i) in[i] = dequantize_value(quantize_value(input[i], *input_spec), s, z);
  }
  const MatrixXd w = read_weights(xbar);
  VectorXd out = VectorXd::Zero(xbar.active_cols());
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < w.rows(); ++i) acc += in[i] * w(i, j);
    out[j] = acc;
  }
  return out;
}

double mvm_error_bound(const Eigen::Ref<const MatrixXd>& weights, const Eigen::Ref<const VectorXd>& input,
                       int weight_bits, int input_bits) {
  const double dw = QuantSpec::symmetric_range(weight_bits, weights.cwiseAbs().maxCoeff()).scale();
  const double dv = QuantSpec::symmetric_range(input_bits, input.cwiseAbs().maxCoeff()).scale();
  double worst = 0.0;
  for (Eigen::Index j = 0; j < weights.cols(); ++j) {
    double b = 0.0;
    for (Eigen::Index i = 0; i < weights.rows(); ++i)
      b += (std::abs(weights(i, j)) + 0.5 * dw) * 0.5 * dv + std::abs(input[i]) * 0.5 * dw;
    worst = std::max(worst, b);
  }
  return worst;
}

}  // namespace memgan

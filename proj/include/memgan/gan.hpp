#pragma once

#include "memgan/crossbar.hpp"
#include "memgan/diff_block.hpp"
#include "memgan/mapper.hpp"
#include "memgan/op_counts.hpp"
#include "memgan/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace memgan {

enum class Activation { relu, sigmoid_output, tanh_output, identity };

/// How the ReLU derivative is formed during backprop: the 0/1 indicator of a
/// positive pre-activation, or the layer output itself.
enum class DerivativeMode { indicator, output_literal };

struct ActivationFn {
  Activation kind = Activation::relu;
  DerivativeMode derivative_mode = DerivativeMode::indicator;

  BatchXd apply(const BatchXd& pre) const;
  /// Elementwise d output / d pre-activation.
  BatchXd derivative(const BatchXd& pre, const BatchXd& out) const;
};

struct LayerSpec {
  LayerShape shape;
  Activation activation = Activation::relu;
};

/// Activations retained between the forward pass and the weight update of
/// one iteration. Entries are consumed by backprop_layer.
struct LayerTrace {
  struct Entry {
    BatchXd input;           // the layer input as fed to the crossbars
    BatchXd pre_activation;  // channel-major, one sample per row
    BatchXd output;
    bool consumed = false;
  };
  std::vector<Entry> layers;

  std::int64_t value_count() const;
};

struct NetworkLayer {
  LayerShape shape;
  ActivationFn activation;
  CrossbarArray units;  // forward (de)convolution units
  std::optional<DeconvGrouping> grouping;
};

/// A stack of (de)conv layers whose weights live only in crossbars.
class Network {
 public:
  Network() = default;
  Network(const std::vector<LayerSpec>& specs, const DeviceConfig& dev, DerivativeMode mode);

  std::vector<NetworkLayer>& layers() { return layers_; }
  const std::vector<NetworkLayer>& layers() const { return layers_; }
  MapDims input_dims() const { return layers_.front().shape.input_dims(); }
  MapDims output_dims() const { return layers_.back().shape.output_dims(); }

  std::optional<LayerTrace>& trace() { return trace_; }
  const std::optional<LayerTrace>& trace() const { return trace_; }

  /// Dequantized kernel matrices (for inspection and tests).
  std::vector<MatrixXd> read_kernels() const;
  void program_kernels(const std::vector<MatrixXd>& kernels);

 private:
  std::vector<NetworkLayer> layers_;
  std::optional<LayerTrace> trace_;
};

struct GanConfig {
  std::vector<LayerSpec> generator;
  std::vector<LayerSpec> discriminator;
  int noise_dim = 16;
  int batch = 64;
  double alpha = 0.02;
  DeviceConfig device;
  DerivativeMode derivative_mode = DerivativeMode::indicator;
  double init_range = 0.05;
  std::uint64_t seed = 1;

  void validate() const;

  /// Five deconv layers (noise -> image) and five conv layers (image -> D).
  /// `image_size` must be a multiple of 4; generator output activation is tanh
  /// unless `tanh_output` is false (then identity).
  static GanConfig desk_scale(int image_size, int channels, const DeviceConfig& dev, bool tanh_output = true);
  /// Two layers per network on 6x6 single-channel images; used for gradient checks.
  static GanConfig toy(const DeviceConfig& dev);
};

enum class Target { discriminator, generator };

/// Errors at the output of the target network, sign-folded so that
/// backprop_layer always ascends.
struct GradientPacket {
  std::int64_t iteration = 0;
  Target target = Target::discriminator;
  BatchXd output_errors;
};

class GanModel {
 public:
  explicit GanModel(GanConfig config);

  const GanConfig& config() const { return config_; }
  Network& generator() { return generator_; }
  const Network& generator() const { return generator_; }
  Network& discriminator() { return discriminator_; }
  const Network& discriminator() const { return discriminator_; }

  std::int64_t iteration() const { return iteration_; }
  bool trained() const { return iteration_ > 0; }
  /// Drops any unconsumed traces and advances the iteration counter.
  void end_iteration();

  ProcedureCounts& counts() { return counts_; }
  const ProcedureCounts& counts() const { return counts_; }

  /// Restores the iteration counter (checkpoint loading).
  void set_iteration(std::int64_t it) { iteration_ = it; }

 private:
  GanConfig config_;
  Network generator_;
  Network discriminator_;
  std::int64_t iteration_ = 0;
  ProcedureCounts counts_;
};

/// Runs a network on a batch. Quantized devices get per-sample symmetric input
/// quantization at device.input_bits before each layer.
BatchXd network_forward(const Network& net, const BatchXd& input, LayerTrace* trace = nullptr,
                        OpCounts* counts = nullptr);

/// G(z) for a (m x noise_dim) batch; keeps the generator trace.
BatchXd generator_forward(GanModel& model, const BatchXd& z);

/// D(x) for a batch of images; keeps the discriminator trace.
VectorXd discriminator_forward(GanModel& model, const BatchXd& x);

/// One layer of the memory-free backward flow. Propagates `e_next` (error at
/// the layer output) through the transposed weights, forms the weight change
/// from the retained input and reprograms the forward units with
/// w + alpha * delta. Returns the error at the layer input.
BatchXd backprop_layer(const BatchXd& e_next, NetworkLayer& layer, LayerTrace::Entry& entry, double alpha,
                       OpCounts* counts = nullptr);

/// Error-only propagation through a network (no weight change), using the
/// retained trace rows [row_begin, row_begin + e_out.rows()).
BatchXd propagate_errors(const Network& net, const BatchXd& e_out, Eigen::Index row_begin, OpCounts* counts = nullptr);

/// D-side packet: derivatives of the discriminator objective with respect to
/// each D output, real samples first.
GradientPacket discriminator_packet(const DiffResult& diff);

/// G-side packet: the generator objective's seed pushed back through the
/// discriminator's error units to the generated images, negated for descent.
GradientPacket generator_packet(GanModel& model, const DiffResult& diff);

/// Applies a packet to its target network through backprop_layer, last layer
/// first, and clears that network's trace.
void apply_update(GanModel& model, const GradientPacket& packet);

struct StepResult {
  VectorXd d_real;  // D(x) before the update
  VectorXd d_fake;  // D(G(z)) before the update
  double objective_d = 0.0;
  double objective_g = 0.0;
};

/// One training iteration: G forward, D forward on [x; G(z)], diff-block
/// seeds, discriminator ascent, generator descent. LUT1, the batch memory and
/// the Error_D adders are charged to D_back; LUT2 and the Error_G adder to G_back.
StepResult train_step(GanModel& model, DiffBlock& diff, const BatchXd& real, const BatchXd& z);

/// Flattened penultimate discriminator activations, one row per sample.
/// Warns on stderr for an untrained model unless `warn_untrained` is false.
MatrixXd extract_features(const GanModel& model, const BatchXd& x, bool warn_untrained = true);

/// Batch objectives evaluated with exact logarithms.
double discriminator_objective(const VectorXd& d_real, const VectorXd& d_fake);
double generator_objective(const VectorXd& d_fake);

/// Uniform noise in [-1, 1].
BatchXd sample_noise(int rows, int noise_dim, std::mt19937_64& rng);

/// Memory-free bookkeeping: everything the model keeps between iterations.
struct StateInventory {
  std::int64_t crossbars = 0;
  std::int64_t crossbar_cells = 0;
  std::int64_t trace_values = 0;
  std::int64_t auxiliary_weight_values = 0;
  std::int64_t scalar_config_values = 0;
};

StateInventory inventory(const GanModel& model);

/// Checkpoint: "MGANCKPT" magic, u32 header length, JSON header (config,
/// iteration, per-layer crossbar layout), then per crossbar either
/// rows*cols little-endian int64 codes followed by the f64 scale, or
/// rows*cols f64 conductances for ideal devices.
void save_checkpoint(const GanModel& model, const std::filesystem::path& path);
GanModel load_checkpoint(const std::filesystem::path& path);

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

}  // namespace memgan

#include "memgan/gan.hpp"

#include "json.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace memgan {

namespace {

using json = nlohmann::json;

/// Per-sample symmetric quantize-dequantize of a batch at `bits`.
void quantize_rows(BatchXd& batch, int bits) {
  for (Eigen::Index n = 0; n < batch.rows(); ++n) {
    const double max_abs = batch.row(n).cwiseAbs().maxCoeff();
    if (max_abs == 0.0) continue;
    const QuantSpec spec = QuantSpec::symmetric_range(bits, max_abs);
    const double s = spec.scale();
    const std::int64_t z = spec.zero_code();
    for (Eigen::Index j = 0; j < batch.cols(); ++j) batch(n, j) = dequantize_value(quantize_value(batch(n, j), spec), s, z);
  }
}

/// (N*P x O) product rows -> (N x O*P) channel-major maps, and back.
BatchXd rows_to_maps(const MatrixXd& rows, Eigen::Index samples, int pixels) {
  const Eigen::Index o_count = rows.cols();
  BatchXd out(samples, o_count * pixels);
  for (Eigen::Index n = 0; n < samples; ++n)
    for (Eigen::Index o = 0; o < o_count; ++o)
      for (int p = 0; p < pixels; ++p) out(n, o * pixels + p) = rows(n * pixels + p, o);
  return out;
}

MatrixXd maps_to_rows(const BatchXd& maps, int channels, int pixels) {
  const Eigen::Index samples = maps.rows();
  MatrixXd out(samples * pixels, channels);
  for (Eigen::Index n = 0; n < samples; ++n)
    for (int o = 0; o < channels; ++o)
      for (int p = 0; p < pixels; ++p) out(n * pixels + p, o) = maps(n, o * pixels + p);
  return out;
}

int pixels_of(const LayerShape& s) { return s.out_h() * s.out_w(); }

/// Crossbar activations for one batched product: one per (input vector, tile).
std::int64_t tile_mvms(const LayerMapping& m, std::int64_t vectors) {
  return vectors * m.crossbar_count;
}

std::int64_t grouped_tile_mvms(const NetworkLayer& layer, const DeviceConfig& dev, std::int64_t samples) {
  const auto& m = layer.units.mapping();
  std::int64_t total = 0;
  for (const auto& g : layer.grouping->groups) {
    int first = -1;
    int touched = 0;
    for (int c : g.cols) {
      const int tile = c / dev.rows;
      if (tile != first) {
        ++touched;
        first = tile;
      }
    }
    total += static_cast<std::int64_t>(g.pixels.size()) * touched * m.col_tiles;
  }
  return total * samples;
}

BatchXd conv_input_of(const LayerShape& shape, const BatchXd& input) {
  return shape.kind == LayerKind::deconv ? zero_pad_deconv_batch(input, shape) : input;
}

/// Error at the layer input from the error units (programmed with K^T).
BatchXd error_through_transpose(const NetworkLayer& layer, const MatrixXd& delta_rows, Eigen::Index samples,
                                const DeviceConfig& dev, OpCounts* counts) {
  const LayerShape& shape = layer.shape;
  CrossbarArray error_units(shape.out_channels, shape.kernel_rows(), dev);
  error_units.program(layer.units.read().transpose());
  const MatrixXd d_patches = error_units.multiply(delta_rows);
  if (counts) {
    counts->program_cells += static_cast<std::int64_t>(shape.out_channels) * shape.kernel_rows();
    counts->mvm += tile_mvms(error_units.mapping(), delta_rows.rows());
    counts->macs += delta_rows.rows() * static_cast<std::int64_t>(shape.out_channels) * shape.kernel_rows();
  }
  const BatchXd folded = fold_batch(d_patches, shape, samples);
  return shape.kind == LayerKind::deconv ? strip_deconv_padding(folded, shape) : folded;
}

BatchXd take_rows(const BatchXd& m, Eigen::Index begin, Eigen::Index count) { return m.middleRows(begin, count); }

}  // namespace

// ---------------------------------------------------------------------------

BatchXd ActivationFn::apply(const BatchXd& pre) const {
  switch (kind) {
    case Activation::relu: return pre.cwiseMax(0.0);
    case Activation::sigmoid_output: return (1.0 / (1.0 + (-pre.array()).exp())).matrix();
    case Activation::tanh_output: return pre.array().tanh().matrix();
    case Activation::identity: return pre;
  }
  return pre;
}

BatchXd ActivationFn::derivative(const BatchXd& pre, const BatchXd& out) const {
  switch (kind) {
    case Activation::relu:
      if (derivative_mode == DerivativeMode::output_literal) return out;
      return (pre.array() > 0.0).cast<double>().matrix();
    case Activation::sigmoid_output: return (out.array() * (1.0 - out.array())).matrix();
    case Activation::tanh_output: return (1.0 - out.array().square()).matrix();
    case Activation::identity: return BatchXd::Ones(pre.rows(), pre.cols());
  }
  return out;
}

std::int64_t LayerTrace::value_count() const {
  std::int64_t n = 0;
  for (const auto& e : layers) n += e.input.size() + e.pre_activation.size() + e.output.size();
  return n;
}

Network::Network(const std::vector<LayerSpec>& specs, const DeviceConfig& dev, DerivativeMode mode) {
  if (specs.empty()) throw std::invalid_argument("Network: at least one layer required");
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    s.shape.validate();
    if (i > 0 && !(specs[i - 1].shape.output_dims() == s.shape.input_dims()))
      throw std::invalid_argument("Network: layer " + std::to_string(i) + " input does not match previous output");
    NetworkLayer layer;
    layer.shape = s.shape;
    layer.activation = ActivationFn{s.activation, mode};
    layer.units = CrossbarArray(s.shape.kernel_rows(), s.shape.out_channels, dev);
    if (s.shape.kind == LayerKind::deconv) layer.grouping = plan_deconv_grouping(s.shape);
    layers_.push_back(std::move(layer));
  }
}

std::vector<MatrixXd> Network::read_kernels() const {
  std::vector<MatrixXd> out;
  for (const auto& l : layers_) out.push_back(l.units.read());
  return out;
}

void Network::program_kernels(const std::vector<MatrixXd>& kernels) {
  if (kernels.size() != layers_.size()) throw std::invalid_argument("program_kernels: layer count mismatch");
  for (std::size_t i = 0; i < kernels.size(); ++i) layers_[i].units.program(kernels[i]);
}

// ---------------------------------------------------------------------------

void GanConfig::validate() const {
  device.validate();
  if (generator.empty() || discriminator.empty()) throw std::invalid_argument("GanConfig: networks must be non-empty");
  if (batch < 1) throw std::invalid_argument("GanConfig.batch must be >= 1");
  if (noise_dim < 1) throw std::invalid_argument("GanConfig.noise_dim must be >= 1");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("GanConfig.alpha must be finite and >= 0");
  if (!(init_range > 0.0)) throw std::invalid_argument("GanConfig.init_range must be > 0");
  const MapDims z{noise_dim, 1, 1};
  if (!(generator.front().shape.input_dims() == z))
    throw std::invalid_argument("GanConfig: generator input must be noise_dim x 1 x 1");
  if (!(generator.back().shape.output_dims() == discriminator.front().shape.input_dims()))
    throw std::invalid_argument("GanConfig: generator output dims must equal discriminator input dims");
  const MapDims scalar{1, 1, 1};
  if (!(discriminator.back().shape.output_dims() == scalar) ||
      discriminator.back().activation != Activation::sigmoid_output)
    throw std::invalid_argument("GanConfig: discriminator must end in a single sigmoid output");
}

GanConfig GanConfig::desk_scale(int image_size, int channels, const DeviceConfig& dev, bool tanh_output) {
  if (image_size < 8 || image_size % 4 != 0) throw std::invalid_argument("desk_scale: image_size must be a multiple of 4, >= 8");
  const int b = image_size / 4;
  GanConfig c;
  c.device = dev;
  c.noise_dim = 16;
  using K = LayerKind;
  const Activation g_out = tanh_output ? Activation::tanh_output : Activation::identity;
  c.generator = {
      {{K::deconv, c.noise_dim, 16, b, b, 1, 0, 1, 1}, Activation::relu},
      {{K::deconv, 16, 16, 3, 3, 1, 1, b, b}, Activation::relu},
      {{K::deconv, 16, 8, 4, 4, 2, 1, b, b}, Activation::relu},
      {{K::deconv, 8, 8, 3, 3, 1, 1, 2 * b, 2 * b}, Activation::relu},
      {{K::deconv, 8, channels, 4, 4, 2, 1, 2 * b, 2 * b}, g_out},
  };
  c.discriminator = {
      {{K::conv, channels, 8, 4, 4, 2, 1, 4 * b, 4 * b}, Activation::relu},
      {{K::conv, 8, 16, 4, 4, 2, 1, 2 * b, 2 * b}, Activation::relu},
      {{K::conv, 16, 16, 3, 3, 1, 1, b, b}, Activation::relu},
      {{K::conv, 16, 32, 3, 3, 1, 1, b, b}, Activation::relu},
      {{K::conv, 32, 1, b, b, 1, 0, b, b}, Activation::sigmoid_output},
  };
  return c;
}

GanConfig GanConfig::toy(const DeviceConfig& dev) {
  GanConfig c;
  c.device = dev;
  c.noise_dim = 4;
  c.batch = 4;
  c.alpha = 1e-3;
  c.init_range = 0.5;
  using K = LayerKind;
  c.generator = {
      {{K::deconv, 4, 2, 3, 3, 1, 0, 1, 1}, Activation::relu},
      {{K::deconv, 2, 1, 2, 2, 2, 0, 3, 3}, Activation::tanh_output},
  };
  c.discriminator = {
      {{K::conv, 1, 3, 3, 3, 1, 0, 6, 6}, Activation::relu},
      {{K::conv, 3, 1, 4, 4, 1, 0, 4, 4}, Activation::sigmoid_output},
  };
  return c;
}

GanModel::GanModel(GanConfig config) : config_(std::move(config)) {
  config_.validate();
  generator_ = Network(config_.generator, config_.device, config_.derivative_mode);
  discriminator_ = Network(config_.discriminator, config_.device, config_.derivative_mode);
  std::mt19937_64 rng(config_.seed);
  std::uniform_real_distribution<double> init(-config_.init_range, config_.init_range);
  for (Network* net : {&generator_, &discriminator_}) {
    for (auto& layer : net->layers()) {
      MatrixXd k(layer.units.rows(), layer.units.cols());
      for (Eigen::Index j = 0; j < k.cols(); ++j)
        for (Eigen::Index i = 0; i < k.rows(); ++i) k(i, j) = init(rng);
      layer.units.program(k);
    }
  }
}

void GanModel::end_iteration() {
  generator_.trace().reset();
  discriminator_.trace().reset();
  ++iteration_;
}

// ---------------------------------------------------------------------------

BatchXd network_forward(const Network& net, const BatchXd& input, LayerTrace* trace, OpCounts* counts) {
  if (input.cols() != net.input_dims().size())
    throw std::invalid_argument("network_forward: sample size " + std::to_string(input.cols()) +
                                " does not match network input " + std::to_string(net.input_dims().size()));
  const DeviceConfig& dev = net.layers().front().units.device();
  BatchXd x = input;
  const Eigen::Index n = input.rows();
  for (const auto& layer : net.layers()) {
    const LayerShape& shape = layer.shape;
    if (!dev.ideal) quantize_rows(x, dev.input_bits);
    const int p = pixels_of(shape);
    const MatrixXd patches = unroll_batch(conv_input_of(shape, x), shape);
    const MatrixXd kernel = layer.units.read();
    const MatrixXd rows =
        layer.grouping ? grouped_batch_product(patches, *layer.grouping, kernel, p) : MatrixXd(patches * kernel);
    BatchXd pre = rows_to_maps(rows, n, p);
    BatchXd out = layer.activation.apply(pre);
    if (!out.allFinite()) throw std::runtime_error("network_forward: non-finite activations");
    if (counts) {
      if (layer.grouping) {
        counts->mvm += grouped_tile_mvms(layer, dev, n);
        counts->macs += layer.grouping->grouped_macs_per_sample * n;
      } else {
        counts->mvm += tile_mvms(layer.units.mapping(), n * p);
        counts->macs += n * p * static_cast<std::int64_t>(shape.kernel_rows()) * shape.out_channels;
      }
    }
    if (trace) trace->layers.push_back({x, pre, out, false});
    x = std::move(out);
  }
  return x;
}

BatchXd generator_forward(GanModel& model, const BatchXd& z) {
  const int m = model.config().batch;
  if (z.rows() != m || z.cols() != model.config().noise_dim)
    throw std::invalid_argument("generator_forward: noise batch must be " + std::to_string(m) + " x " +
                                std::to_string(model.config().noise_dim));
  LayerTrace trace;
  BatchXd out = network_forward(model.generator(), z, &trace, &model.counts().g_forward);
  model.generator().trace() = std::move(trace);
  return out;
}

VectorXd discriminator_forward(GanModel& model, const BatchXd& x) {
  LayerTrace trace;
  BatchXd out = network_forward(model.discriminator(), x, &trace, &model.counts().d_forward);
  model.discriminator().trace() = std::move(trace);
  return out.col(0);
}

BatchXd backprop_layer(const BatchXd& e_next, NetworkLayer& layer, LayerTrace::Entry& entry, double alpha,
                       OpCounts* counts) {
  if (entry.consumed) throw std::logic_error("backprop_layer: trace entry already consumed this iteration");
  if (e_next.rows() != entry.output.rows() || e_next.cols() != entry.output.cols())
    throw std::invalid_argument("backprop_layer: error dims do not match the retained layer output");
  const LayerShape& shape = layer.shape;
  const DeviceConfig& dev = layer.units.device();
  const Eigen::Index n = e_next.rows();
  const int p = pixels_of(shape);
  const int r = shape.kernel_rows();
  const int o = shape.out_channels;

  BatchXd delta = e_next.cwiseProduct(layer.activation.derivative(entry.pre_activation, entry.output));
  if (!dev.ideal) quantize_rows(delta, dev.input_bits);
  const MatrixXd delta_rows = maps_to_rows(delta, o, p);

  BatchXd e_this = error_through_transpose(layer, delta_rows, n, dev, counts);

  // Weight-update units hold the retained layer input, one sample at a time.
  const MatrixXd patches = unroll_batch(conv_input_of(shape, entry.input), shape);
  MatrixXd grad = MatrixXd::Zero(r, o);
  if (dev.ideal) {
    grad.noalias() = patches.transpose() * delta_rows;
  } else {
    CrossbarArray update_units(p, r, dev);
    for (Eigen::Index s = 0; s < n; ++s) {
      update_units.program(patches.middleRows(s * p, p));
      grad.noalias() += update_units.read().transpose() * delta_rows.middleRows(s * p, p);
    }
    if (counts) counts->mvm += n * o * static_cast<std::int64_t>(update_units.mapping().crossbar_count);
  }
  if (counts) {
    counts->macs += n * p * static_cast<std::int64_t>(r) * o;
    // forward reprogramming plus the per-sample weight-update units
    counts->program_cells += static_cast<std::int64_t>(r) * o + n * p * static_cast<std::int64_t>(r);
    if (dev.ideal) counts->mvm += n * o * static_cast<std::int64_t>(plan_tiling(p, r, dev).crossbar_count);
  }

  layer.units.program(layer.units.read() + alpha * grad);

  entry.consumed = true;
  entry.input = BatchXd();
  entry.pre_activation = BatchXd();
  entry.output = BatchXd();
  return e_this;
}

BatchXd propagate_errors(const Network& net, const BatchXd& e_out, Eigen::Index row_begin, OpCounts* counts) {
  if (!net.trace()) throw std::logic_error("propagate_errors: no retained trace");
  const auto& trace = *net.trace();
  const DeviceConfig& dev = net.layers().front().units.device();
  BatchXd e = e_out;
  const Eigen::Index n = e_out.rows();
  for (std::size_t li = net.layers().size(); li-- > 0;) {
    const NetworkLayer& layer = net.layers()[li];
    const auto& entry = trace.layers.at(li);
    if (entry.consumed) throw std::logic_error("propagate_errors: trace already consumed");
    const BatchXd pre = take_rows(entry.pre_activation, row_begin, n);
    const BatchXd out = take_rows(entry.output, row_begin, n);
    if (e.cols() != out.cols()) throw std::invalid_argument("propagate_errors: error dims mismatch");
    BatchXd delta = e.cwiseProduct(layer.activation.derivative(pre, out));
    if (!dev.ideal) quantize_rows(delta, dev.input_bits);
    e = error_through_transpose(layer, maps_to_rows(delta, layer.shape.out_channels, pixels_of(layer.shape)), n, dev,
                                counts);
  }
  return e;
}

GradientPacket discriminator_packet(const DiffResult& diff) {
  GradientPacket p;
  p.iteration = diff.iteration;
  p.target = Target::discriminator;
  const Eigen::Index m = diff.error_d_real.size();
  p.output_errors.resize(2 * m, 1);
  p.output_errors.col(0).head(m) = diff.error_d_real;
  p.output_errors.col(0).tail(m) = diff.error_d_fake;
  return p;
}

GradientPacket generator_packet(GanModel& model, const DiffResult& diff) {
  const Eigen::Index m = diff.error_g.size();
  const auto& trace = model.discriminator().trace();
  if (!trace || trace->layers.empty() || trace->layers.back().output.rows() != 2 * m)
    throw std::logic_error("generator_packet: discriminator trace must hold the real and generated batch");
  BatchXd seed(m, 1);
  seed.col(0) = diff.error_g;
  GradientPacket p;
  p.iteration = diff.iteration;
  p.target = Target::generator;
  p.output_errors = -propagate_errors(model.discriminator(), seed, m, &model.counts().g_back);
  return p;
}

void apply_update(GanModel& model, const GradientPacket& packet) {
  if (packet.iteration != model.iteration())
    throw std::logic_error("apply_update: stale gradients from iteration " + std::to_string(packet.iteration) +
                           " applied in iteration " + std::to_string(model.iteration()));
  const bool is_d = packet.target == Target::discriminator;
  Network& net = is_d ? model.discriminator() : model.generator();
  OpCounts* counts = is_d ? &model.counts().d_back : &model.counts().g_back;
  if (!net.trace() || net.trace()->layers.size() != net.layers().size())
    throw std::logic_error("apply_update: missing forward trace for the target network");
  BatchXd e = packet.output_errors;
  for (std::size_t li = net.layers().size(); li-- > 0;)
    e = backprop_layer(e, net.layers()[li], net.trace()->layers[li], model.config().alpha, counts);
  net.trace().reset();
}

StepResult train_step(GanModel& model, DiffBlock& diff, const BatchXd& real, const BatchXd& z) {
  const int m = model.config().batch;
  if (real.rows() != m) throw std::invalid_argument("train_step: real batch must have " + std::to_string(m) + " rows");
  if (diff.memory().capacity() != m) throw std::invalid_argument("train_step: diff block batch does not match the model");
  const BatchXd gz = generator_forward(model, z);
  BatchXd both(2 * m, gz.cols());
  both << real, gz;
  const VectorXd scores = discriminator_forward(model, both);

  StepResult r;
  r.d_real = scores.head(m);
  r.d_fake = scores.tail(m);
  r.objective_d = discriminator_objective(r.d_real, r.d_fake);
  r.objective_g = generator_objective(r.d_fake);

  const std::int64_t it = model.iteration();
  diff.stage_real_scores(r.d_real, it);
  const DiffResult seeds = diff.compute_errors(r.d_fake, it);
  OpCounts& db = model.counts().d_back;
  OpCounts& gb = model.counts().g_back;
  db.lut_lookups += m;
  db.memory_accesses += 2 * m;
  db.adder_ops += 2 * m;
  gb.lut_lookups += m;
  gb.adder_ops += m;

  const GradientPacket gp = generator_packet(model, seeds);
  apply_update(model, discriminator_packet(seeds));
  apply_update(model, gp);
  model.end_iteration();
  return r;
}

MatrixXd extract_features(const GanModel& model, const BatchXd& x, bool warn_untrained) {
  if (warn_untrained && !model.trained()) std::clog << "warning: extracting features from an untrained discriminator\n";
  const auto& layers = model.discriminator().layers();
  if (layers.size() < 2) throw std::logic_error("extract_features: discriminator needs at least two layers");
  LayerTrace trace;
  network_forward(model.discriminator(), x, &trace);
  return trace.layers[layers.size() - 2].output;
}

double discriminator_objective(const VectorXd& d_real, const VectorXd& d_fake) {
  return d_real.array().log().mean() + (1.0 - d_fake.array()).log().mean();
}

double generator_objective(const VectorXd& d_fake) { return (1.0 - d_fake.array()).log().mean(); }

BatchXd sample_noise(int rows, int noise_dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  BatchXd z(rows, noise_dim);
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = u(rng);
  return z;
}

StateInventory inventory(const GanModel& model) {
  StateInventory inv;
  for (const Network* net : {&model.generator(), &model.discriminator()}) {
    for (const auto& layer : net->layers()) {
      inv.crossbars += static_cast<std::int64_t>(layer.units.crossbars().size());
      inv.crossbar_cells += layer.units.cell_count();
    }
    if (net->trace()) inv.trace_values += net->trace()->value_count();
  }
  // alpha, batch, noise_dim, iteration
  inv.scalar_config_values = 4;
  return inv;
}

// ---------------------------------------------------------------------------
// Checkpoints

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid_output: return "sigmoid";
    case Activation::tanh_output: return "tanh";
    case Activation::identity: return "identity";
  }
  return "?";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid_output;
  if (s == "tanh") return Activation::tanh_output;
  if (s == "identity") return Activation::identity;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

namespace {

constexpr char kMagic[8] = {'M', 'G', 'A', 'N', 'C', 'K', 'P', 'T'};

json shape_to_json(const LayerSpec& s) {
  return {{"kind", s.shape.kind == LayerKind::conv ? "conv" : "deconv"},
          {"in_channels", s.shape.in_channels},
          {"out_channels", s.shape.out_channels},
          {"kernel", {s.shape.kernel_h, s.shape.kernel_w}},
          {"stride", s.shape.stride},
          {"padding", s.shape.padding},
          {"input", {s.shape.in_h, s.shape.in_w}},
          {"activation", to_string(s.activation)}};
}

LayerSpec shape_from_json(const json& j) {
  LayerSpec s;
  s.shape.kind = j.at("kind").get<std::string>() == "conv" ? LayerKind::conv : LayerKind::deconv;
  s.shape.in_channels = j.at("in_channels");
  s.shape.out_channels = j.at("out_channels");
  s.shape.kernel_h = j.at("kernel")[0];
  s.shape.kernel_w = j.at("kernel")[1];
  s.shape.stride = j.at("stride");
  s.shape.padding = j.at("padding");
  s.shape.in_h = j.at("input")[0];
  s.shape.in_w = j.at("input")[1];
  s.activation = activation_from_string(j.at("activation"));
  return s;
}

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated payload");
  return v;
}

}  // namespace

void save_checkpoint(const GanModel& model, const std::filesystem::path& path) {
  const GanConfig& c = model.config();
  json header;
  header["format"] = 1;
  header["iteration"] = model.iteration();
  header["seed"] = c.seed;
  header["noise_dim"] = c.noise_dim;
  header["batch"] = c.batch;
  header["alpha"] = c.alpha;
  header["init_range"] = c.init_range;
  header["derivative_mode"] = c.derivative_mode == DerivativeMode::indicator ? "indicator" : "output_literal";
  header["device"] = {{"rows", c.device.rows},
                      {"cols", c.device.cols},
                      {"r_min", c.device.r_min},
                      {"r_max", c.device.r_max},
                      {"weight_bits", c.device.weight_bits},
                      {"input_bits", c.device.input_bits},
                      {"ideal", c.device.ideal}};
  for (const auto& s : c.generator) header["generator"].push_back(shape_to_json(s));
  for (const auto& s : c.discriminator) header["discriminator"].push_back(shape_to_json(s));
  for (const Network* net : {&model.generator(), &model.discriminator()}) {
    json counts = json::array();
    for (const auto& l : net->layers()) counts.push_back(l.units.crossbars().size());
    header[net == &model.generator() ? "generator_crossbars" : "discriminator_crossbars"] = counts;
  }
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const Network* net : {&model.generator(), &model.discriminator()}) {
    for (const auto& l : net->layers()) {
      for (const auto& xb : l.units.crossbars()) {
        if (c.device.ideal) {
          const MatrixXd& a = xb.analog();
          for (Eigen::Index i = 0; i < a.size(); ++i) write_pod<double>(out, a.data()[i]);
        } else {
          const CodeGrid& g = xb.levels();
          for (Eigen::Index i = 0; i < g.size(); ++i) write_pod<std::int64_t>(out, g.data()[i]);
          write_pod<double>(out, xb.scale());
        }
      }
    }
  }
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

GanModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  const auto len = read_pod<std::uint32_t>(in);
  std::string text(len, '\0');
  in.read(text.data(), len);
  if (!in) throw std::runtime_error("checkpoint: truncated header");
  const json h = json::parse(text);

  GanConfig c;
  c.seed = h.at("seed");
  c.noise_dim = h.at("noise_dim");
  c.batch = h.at("batch");
  c.alpha = h.at("alpha");
  c.init_range = h.at("init_range");
  c.derivative_mode =
      h.at("derivative_mode").get<std::string>() == "indicator" ? DerivativeMode::indicator : DerivativeMode::output_literal;
  const json& d = h.at("device");
  c.device.rows = d.at("rows");
  c.device.cols = d.at("cols");
  c.device.r_min = d.at("r_min");
  c.device.r_max = d.at("r_max");
  c.device.weight_bits = d.at("weight_bits");
  c.device.input_bits = d.at("input_bits");
  c.device.ideal = d.at("ideal");
  for (const auto& j : h.at("generator")) c.generator.push_back(shape_from_json(j));
  for (const auto& j : h.at("discriminator")) c.discriminator.push_back(shape_from_json(j));

  GanModel model(c);
  for (Network* net : {&model.generator(), &model.discriminator()}) {
    for (auto& l : net->layers()) {
      for (const auto& t : l.units.mapping().tiles) {
        Crossbar& xb = l.units.crossbars()[t.crossbar];
        if (c.device.ideal) {
          MatrixXd a(c.device.rows, c.device.cols);
          for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = read_pod<double>(in);
          xb.set_analog(std::move(a), t.row_count, t.col_count);
        } else {
          CodeGrid g(c.device.rows, c.device.cols);
          for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = read_pod<std::int64_t>(in);
          const double scale = read_pod<double>(in);
          xb.set_levels(std::move(g), scale, t.row_count, t.col_count);
        }
      }
    }
  }
  model.set_iteration(h.at("iteration"));
  return model;
}

}  // namespace memgan

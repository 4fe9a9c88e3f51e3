#include "memgan/mapper.hpp"

#include <map>
#include <sstream>

namespace memgan {

namespace {

int ceil_div(int a, int b) { return (a + b - 1) / b; }

// Top-left r x c cells, programmed or not; unwritten cells read as zero.
MatrixXd read_region(const Crossbar& xb, int r, int c) {
  if (xb.config().ideal) return xb.analog().topLeftCorner(r, c);
  return ((xb.levels().topLeftCorner(r, c).array() - xb.zero_code()).cast<double>() * xb.scale()).matrix();
}

}  // namespace

void LayerShape::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("LayerShape: ") + what);
  };
  need(in_channels >= 1, "in_channels must be >= 1");
  need(out_channels >= 1, "out_channels must be >= 1");
  need(kernel_h >= 1 && kernel_w >= 1, "kernel dims must be >= 1");
  need(stride >= 1, "stride must be >= 1");
  need(padding >= 0, "padding must be >= 0");
  need(in_h >= 1 && in_w >= 1, "input dims must be >= 1");
  if (kind == LayerKind::conv) {
    need(in_h + 2 * padding >= kernel_h && in_w + 2 * padding >= kernel_w, "kernel larger than padded input");
  } else {
    need(padding <= kernel_h - 1 && padding <= kernel_w - 1, "deconv padding must be <= kernel - 1");
  }
  need(out_h() >= 1 && out_w() >= 1, "output dims must be >= 1");
}

int LayerShape::out_h() const {
  if (kind == LayerKind::conv) return (in_h + 2 * padding - kernel_h) / stride + 1;
  return (in_h - 1) * stride - 2 * padding + kernel_h;
}

int LayerShape::out_w() const {
  if (kind == LayerKind::conv) return (in_w + 2 * padding - kernel_w) / stride + 1;
  return (in_w - 1) * stride - 2 * padding + kernel_w;
}

MapDims LayerShape::conv_input_dims() const {
  if (kind == LayerKind::conv) return input_dims();
  return {in_channels, (in_h - 1) * stride + 1 + 2 * deconv_edge_h(), (in_w - 1) * stride + 1 + 2 * deconv_edge_w()};
}

LayerMapping plan_tiling(int rows_needed, int cols_needed, const DeviceConfig& dev) {
  dev.validate();
  if (rows_needed < 1 || cols_needed < 1) throw std::invalid_argument("plan_tiling: matrix dims must be >= 1");
  LayerMapping m;
  m.rows_needed = rows_needed;
  m.cols_needed = cols_needed;
  m.row_tiles = ceil_div(rows_needed, dev.rows);
  m.col_tiles = ceil_div(cols_needed, dev.cols);
  m.crossbar_count = m.row_tiles * m.col_tiles;
  for (int rt = 0; rt < m.row_tiles; ++rt) {
    for (int ct = 0; ct < m.col_tiles; ++ct) {
      TileAssignment t;
      t.crossbar = rt * m.col_tiles + ct;
      t.row_begin = rt * dev.rows;
      t.row_count = std::min(dev.rows, rows_needed - t.row_begin);
      t.col_begin = ct * dev.cols;
      t.col_count = std::min(dev.cols, cols_needed - t.col_begin);
      m.tiles.push_back(t);
    }
  }
  return m;
}

LayerMapping plan_mapping(const LayerShape& shape, const DeviceConfig& dev) {
  shape.validate();
  return plan_tiling(shape.kernel_rows(), shape.out_channels, dev);
}

CrossbarArray::CrossbarArray(int rows, int cols, DeviceConfig dev)
    : mapping_(plan_tiling(rows, cols, dev)), dev_(dev), crossbars_(mapping_.crossbar_count, Crossbar(dev)) {}

void CrossbarArray::program(const Eigen::Ref<const MatrixXd>& matrix, std::mt19937_64* noise_rng) {
  if (matrix.rows() != rows() || matrix.cols() != cols()) {
    std::ostringstream msg;
    msg << "CrossbarArray::program: matrix " << matrix.rows() << "x" << matrix.cols() << " does not match mapping "
        << rows() << "x" << cols();
    throw std::invalid_argument(msg.str());
  }
  for (const auto& t : mapping_.tiles)
    crossbars_[t.crossbar].program(matrix.block(t.row_begin, t.col_begin, t.row_count, t.col_count), noise_rng);
}

MatrixXd CrossbarArray::read() const {
  MatrixXd out(rows(), cols());
  for (const auto& t : mapping_.tiles)
    out.block(t.row_begin, t.col_begin, t.row_count, t.col_count) = read_region(crossbars_[t.crossbar], t.row_count, t.col_count);
  return out;
}

VectorXd CrossbarArray::mvm(const Eigen::Ref<const VectorXd>& input, const std::optional<QuantSpec>& input_spec) const {
  if (input.size() != rows()) throw std::invalid_argument("CrossbarArray::mvm: input length != mapped rows");
  VectorXd out = VectorXd::Zero(cols());
  for (const auto& t : mapping_.tiles)
    out.segment(t.col_begin, t.col_count) +=
        memgan::mvm(crossbars_[t.crossbar], input.segment(t.row_begin, t.row_count), input_spec);
  return out;
}

MatrixXd CrossbarArray::multiply(const Eigen::Ref<const MatrixXd>& inputs) const {
  if (inputs.cols() != rows()) throw std::invalid_argument("CrossbarArray::multiply: input width != mapped rows");
  return inputs * read();
}

std::int64_t CrossbarArray::cell_count() const {
  return static_cast<std::int64_t>(crossbars_.size()) * dev_.rows * dev_.cols;
}

DeconvGrouping plan_deconv_grouping(const LayerShape& shape) {
  if (shape.kind != LayerKind::deconv) throw std::invalid_argument("plan_deconv_grouping: layer is not a deconv");
  shape.validate();
  FeatureMapXd ones(shape.input_dims(), VectorXd::Ones(shape.input_dims().size()));
  const MatrixXd pattern = unroll_conv_input(zero_pad_deconv_input(ones, shape), shape);

  DeconvGrouping g;
  std::map<std::vector<int>, std::size_t> index;
  for (Eigen::Index r = 0; r < pattern.rows(); ++r) {
    std::vector<int> cols;
    for (Eigen::Index c = 0; c < pattern.cols(); ++c)
      if (pattern(r, c) != 0.0) cols.push_back(static_cast<int>(c));
    g.dense_macs_per_sample += pattern.cols() * shape.out_channels;
    if (cols.empty()) continue;
    g.grouped_macs_per_sample += static_cast<std::int64_t>(cols.size()) * shape.out_channels;
    auto [it, inserted] = index.try_emplace(cols, g.groups.size());
    if (inserted) g.groups.push_back({{}, std::move(cols)});
    g.groups[it->second].pixels.push_back(static_cast<int>(r));
  }
  return g;
}

MatrixXd grouped_batch_product(const MatrixXd& unrolled, const DeconvGrouping& grouping, const MatrixXd& kernel,
                               int pixels_per_sample) {
  const Eigen::Index samples = unrolled.rows() / pixels_per_sample;
  MatrixXd out = MatrixXd::Zero(unrolled.rows(), kernel.cols());
  for (const auto& grp : grouping.groups) {
    const auto np = static_cast<Eigen::Index>(grp.pixels.size());
    const auto nc = static_cast<Eigen::Index>(grp.cols.size());
    MatrixXd dense(samples * np, nc);
    MatrixXd sub_kernel(nc, kernel.cols());
    for (Eigen::Index j = 0; j < nc; ++j) sub_kernel.row(j) = kernel.row(grp.cols[j]);
    for (Eigen::Index n = 0; n < samples; ++n)
      for (Eigen::Index i = 0; i < np; ++i)
        for (Eigen::Index j = 0; j < nc; ++j)
          dense(n * np + i, j) = unrolled(n * pixels_per_sample + grp.pixels[i], grp.cols[j]);
    const MatrixXd part = dense * sub_kernel;
    for (Eigen::Index n = 0; n < samples; ++n)
      for (Eigen::Index i = 0; i < np; ++i) out.row(n * pixels_per_sample + grp.pixels[i]) = part.row(n * np + i);
  }
  return out;
}

FeatureMapXd crossbar_layer_forward(const CrossbarArray& units, const FeatureMapXd& input, const LayerShape& shape,
                                    const std::optional<QuantSpec>& input_spec) {
  shape.validate();
  const FeatureMapXd conv_in = shape.kind == LayerKind::deconv ? zero_pad_deconv_input(input, shape) : input;
  const MatrixXd patches = unroll_conv_input(conv_in, shape);
  FeatureMapXd out(shape.output_dims());
  const int p = shape.out_h() * shape.out_w();
  for (int px = 0; px < p; ++px) {
    const VectorXd y = units.mvm(patches.row(px).transpose(), input_spec);
    for (int o = 0; o < shape.out_channels; ++o) out.data[o * p + px] = y[o];
  }
  return out;
}

}  // namespace memgan

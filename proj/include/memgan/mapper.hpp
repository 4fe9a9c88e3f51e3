#pragma once

#include "memgan/crossbar.hpp"
#include "memgan/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace memgan {

enum class LayerKind { conv, deconv };

/// Geometry of a convolution or transposed convolution layer.
///
/// Kernels are stored as a (in_channels * kernel_h * kernel_w) x out_channels
/// matrix with row index (c * kernel_h + dy) * kernel_w + dx. For a deconv
/// layer that matrix is the kernel of the equivalent stride-1 convolution over
/// the dilated, edge-padded input (i.e. the spatially flipped transposed-conv
/// kernel).
struct LayerShape {
  LayerKind kind = LayerKind::conv;
  int in_channels = 1;
  int out_channels = 1;
  int kernel_h = 1;
  int kernel_w = 1;
  int stride = 1;
  int padding = 0;
  int in_h = 1;
  int in_w = 1;

  void validate() const;

  int out_h() const;
  int out_w() const;
  MapDims input_dims() const { return {in_channels, in_h, in_w}; }
  MapDims output_dims() const { return {out_channels, out_h(), out_w()}; }

  int kernel_rows() const { return in_channels * kernel_h * kernel_w; }

  /// Edge padding per side of the dilated deconv input.
  int deconv_edge_h() const { return kernel_h - 1 - padding; }
  int deconv_edge_w() const { return kernel_w - 1 - padding; }

  /// Dims of the map the crossbars actually convolve: the input for conv, the
  /// dilated and edge-padded input for deconv.
  MapDims conv_input_dims() const;
  /// The stride/padding of that convolution (deconv becomes stride 1, pad 0).
  int conv_stride() const { return kind == LayerKind::conv ? stride : 1; }
  int conv_padding() const { return kind == LayerKind::conv ? padding : 0; }

  friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

/// One crossbar's slice of the layer matrix.
struct TileAssignment {
  int crossbar = 0;
  int row_begin = 0;
  int row_count = 0;
  int col_begin = 0;
  int col_count = 0;
};

struct LayerMapping {
  int rows_needed = 0;
  int cols_needed = 0;
  int row_tiles = 0;
  int col_tiles = 0;
  int crossbar_count = 0;
  std::vector<TileAssignment> tiles;
};

/// Tiles an arbitrary rows x cols matrix over crossbars of the device size.
LayerMapping plan_tiling(int rows_needed, int cols_needed, const DeviceConfig& dev);

/// Kernel matrix of `shape` tiled over crossbars.
LayerMapping plan_mapping(const LayerShape& shape, const DeviceConfig& dev);

/// A matrix spread over several crossbars. Row tiles driven by the same input
/// slices are summed at the outputs.
class CrossbarArray {
 public:
  CrossbarArray() = default;
  CrossbarArray(int rows, int cols, DeviceConfig dev);

  const LayerMapping& mapping() const { return mapping_; }
  const DeviceConfig& device() const { return dev_; }
  const std::vector<Crossbar>& crossbars() const { return crossbars_; }
  std::vector<Crossbar>& crossbars() { return crossbars_; }
  int rows() const { return mapping_.rows_needed; }
  int cols() const { return mapping_.cols_needed; }

  void program(const Eigen::Ref<const MatrixXd>& matrix, std::mt19937_64* noise_rng = nullptr);

  /// Dequantized matrix assembled from all tiles.
  MatrixXd read() const;

  /// Per-crossbar mvm of one input vector, partial sums added across row tiles.
  VectorXd mvm(const Eigen::Ref<const VectorXd>& input, const std::optional<QuantSpec>& input_spec) const;

  /// Batched product inputs (n x rows) * read(); equals n calls of mvm with
  /// already-quantized inputs up to floating-point summation order.
  MatrixXd multiply(const Eigen::Ref<const MatrixXd>& inputs) const;

  std::int64_t cell_count() const;

 private:
  LayerMapping mapping_;
  DeviceConfig dev_;
  std::vector<Crossbar> crossbars_;
};

// ---------------------------------------------------------------------------
// Input unrolling

/// im2col of one sample laid out as a flat channel-major vector. Each row of
/// `out` (starting at `row0`) is the receptive field of one output pixel.
template <typename Scalar, typename Derived>
void unroll_into(const Eigen::MatrixBase<Derived>& flat, MapDims in, int kh, int kw, int stride, int pad,
                 Matrix<Scalar>& out, Eigen::Index row0) {
  const int oh = (in.height + 2 * pad - kh) / stride + 1;
  const int ow = (in.width + 2 * pad - kw) / stride + 1;
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      const Eigen::Index row = row0 + oy * ow + ox;
      int col = 0;
      for (int c = 0; c < in.channels; ++c) {
        for (int dy = 0; dy < kh; ++dy) {
          const int y = oy * stride - pad + dy;
          for (int dx = 0; dx < kw; ++dx, ++col) {
            const int x = ox * stride - pad + dx;
            out(row, col) = (y >= 0 && y < in.height && x >= 0 && x < in.width) ? Scalar(flat(in.index(c, y, x)))
                                                                                  : Scalar(0);
          }
        }
      }
    }
  }
}

/// Patch matrix of a conv-form map: one row per output pixel.
template <typename Scalar>
Matrix<Scalar> unroll_conv_input(const FeatureMap<Scalar>& input, const LayerShape& shape) {
  if (!(input.dims == shape.conv_input_dims())) {
    std::ostringstream msg;
    msg << "unroll_conv_input: input dims " << input.dims.channels << "x" << input.dims.height << "x"
        << input.dims.width << " do not match layer input " << shape.conv_input_dims().channels << "x"
        << shape.conv_input_dims().height << "x" << shape.conv_input_dims().width;
    throw std::invalid_argument(msg.str());
  }
  const int p = shape.out_h() * shape.out_w();
  Matrix<Scalar> out(p, shape.kernel_rows());
  unroll_into<Scalar>(input.data, input.dims, shape.kernel_h, shape.kernel_w, shape.conv_stride(),
                      shape.conv_padding(), out, 0);
  return out;
}

/// Batched im2col: rows n * P .. (n+1) * P - 1 belong to sample n.
template <typename Scalar>
Matrix<Scalar> unroll_batch(const SampleBatch<Scalar>& batch, const LayerShape& shape) {
  const MapDims in = shape.conv_input_dims();
  if (batch.cols() != in.size()) throw std::invalid_argument("unroll_batch: sample size does not match layer input");
  const int p = shape.out_h() * shape.out_w();
  Matrix<Scalar> out(batch.rows() * p, shape.kernel_rows());
  for (Eigen::Index n = 0; n < batch.rows(); ++n)
    unroll_into<Scalar>(batch.row(n).transpose(), in, shape.kernel_h, shape.kernel_w, shape.conv_stride(),
                        shape.conv_padding(), out, n * p);
  return out;
}

/// Adjoint of unroll_batch: scatters patch gradients back onto input maps.
template <typename Scalar>
SampleBatch<Scalar> fold_batch(const Matrix<Scalar>& patches, const LayerShape& shape, Eigen::Index samples) {
  const MapDims in = shape.conv_input_dims();
  const int kh = shape.kernel_h, kw = shape.kernel_w, stride = shape.conv_stride(), pad = shape.conv_padding();
  const int oh = shape.out_h(), ow = shape.out_w();
  const int p = oh * ow;
  SampleBatch<Scalar> out = SampleBatch<Scalar>::Zero(samples, in.size());
  for (Eigen::Index n = 0; n < samples; ++n) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const Eigen::Index row = n * p + oy * ow + ox;
        int col = 0;
        for (int c = 0; c < in.channels; ++c) {
          for (int dy = 0; dy < kh; ++dy) {
            const int y = oy * stride - pad + dy;
            for (int dx = 0; dx < kw; ++dx, ++col) {
              const int x = ox * stride - pad + dx;
              if (y >= 0 && y < in.height && x >= 0 && x < in.width) out(n, in.index(c, y, x)) += patches(row, col);
            }
          }
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Deconvolution as convolution over a zero-dilated, edge-padded input

/// Inserts stride-1 zeros between pixels and pads each edge with
/// kernel - 1 - padding zeros.
template <typename Scalar>
FeatureMap<Scalar> zero_pad_deconv_input(const FeatureMap<Scalar>& input, const LayerShape& shape) {
  if (shape.kind != LayerKind::deconv) throw std::invalid_argument("zero_pad_deconv_input: layer is not a deconv");
  if (!(input.dims == shape.input_dims())) throw std::invalid_argument("zero_pad_deconv_input: input dims mismatch");
  const MapDims pd = shape.conv_input_dims();
  FeatureMap<Scalar> out(pd);
  const int eh = shape.deconv_edge_h(), ew = shape.deconv_edge_w(), s = shape.stride;
  for (int c = 0; c < input.dims.channels; ++c)
    for (int y = 0; y < input.dims.height; ++y)
      for (int x = 0; x < input.dims.width; ++x) out(c, eh + y * s, ew + x * s) = input(c, y, x);
  return out;
}

template <typename Scalar>
SampleBatch<Scalar> zero_pad_deconv_batch(const SampleBatch<Scalar>& batch, const LayerShape& shape) {
  const MapDims in = shape.input_dims();
  const MapDims pd = shape.conv_input_dims();
  SampleBatch<Scalar> out = SampleBatch<Scalar>::Zero(batch.rows(), pd.size());
  const int eh = shape.deconv_edge_h(), ew = shape.deconv_edge_w(), s = shape.stride;
  for (Eigen::Index n = 0; n < batch.rows(); ++n)
    for (int c = 0; c < in.channels; ++c)
      for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x) out(n, pd.index(c, eh + y * s, ew + x * s)) = batch(n, in.index(c, y, x));
  return out;
}

/// Adjoint of zero_pad_deconv_batch: picks the dilated pixel positions.
template <typename Scalar>
SampleBatch<Scalar> strip_deconv_padding(const SampleBatch<Scalar>& padded, const LayerShape& shape) {
  const MapDims in = shape.input_dims();
  const MapDims pd = shape.conv_input_dims();
  SampleBatch<Scalar> out(padded.rows(), in.size());
  const int eh = shape.deconv_edge_h(), ew = shape.deconv_edge_w(), s = shape.stride;
  for (Eigen::Index n = 0; n < padded.rows(); ++n)
    for (int c = 0; c < in.channels; ++c)
      for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x) out(n, in.index(c, y, x)) = padded(n, pd.index(c, eh + y * s, ew + x * s));
  return out;
}

// ---------------------------------------------------------------------------
// Zero-row grouping

/// Rows of an unrolled matrix partitioned by zero pattern. Each group keeps only
/// its non-zero columns densely.
template <typename Scalar>
struct GroupedInput {
  struct Group {
    std::vector<int> rows;
    std::vector<int> cols;  // columns that are non-zero for this pattern
    Matrix<Scalar> dense;   // rows.size() x cols.size()
  };
  Eigen::Index total_rows = 0;
  Eigen::Index total_cols = 0;
  std::vector<Group> groups;
};

/// Groups rows of `unrolled` by the zero pattern of the matching rows of
/// `pattern` (same shape). Rows whose pattern is all-zero carry no work and are
/// left out of every group.
template <typename Scalar, typename PatternScalar>
GroupedInput<Scalar> group_rows_by_pattern(const Matrix<Scalar>& unrolled, const Matrix<PatternScalar>& pattern) {
  if (unrolled.rows() != pattern.rows() || unrolled.cols() != pattern.cols())
    throw std::invalid_argument("group_rows_by_pattern: pattern shape mismatch");
  GroupedInput<Scalar> out;
  out.total_rows = unrolled.rows();
  out.total_cols = unrolled.cols();
  std::map<std::vector<int>, std::size_t> index;
  for (Eigen::Index r = 0; r < unrolled.rows(); ++r) {
    std::vector<int> cols;
    for (Eigen::Index c = 0; c < unrolled.cols(); ++c)
      if (pattern(r, c) != PatternScalar(0)) cols.push_back(static_cast<int>(c));
    if (cols.empty()) continue;
    auto [it, inserted] = index.try_emplace(cols, out.groups.size());
    if (inserted) out.groups.push_back({{}, std::move(cols), {}});
    out.groups[it->second].rows.push_back(static_cast<int>(r));
  }
  for (auto& g : out.groups) {
    g.dense.resize(static_cast<Eigen::Index>(g.rows.size()), static_cast<Eigen::Index>(g.cols.size()));
    for (std::size_t i = 0; i < g.rows.size(); ++i)
      for (std::size_t j = 0; j < g.cols.size(); ++j) g.dense(i, j) = unrolled(g.rows[i], g.cols[j]);
  }
  return out;
}

template <typename Scalar>
GroupedInput<Scalar> group_nonzero_rows(const Matrix<Scalar>& unrolled) {
  return group_rows_by_pattern(unrolled, unrolled);
}

/// Multiplications a plain product with `out_cols` outputs would perform.
inline std::int64_t ungrouped_multiplies(Eigen::Index rows, Eigen::Index cols, Eigen::Index out_cols) {
  return static_cast<std::int64_t>(rows) * cols * out_cols;
}

template <typename Scalar>
std::int64_t grouped_multiplies(const GroupedInput<Scalar>& g, Eigen::Index out_cols) {
  std::int64_t n = 0;
  for (const auto& grp : g.groups) n += static_cast<std::int64_t>(grp.rows.size()) * grp.cols.size() * out_cols;
  return n;
}

/// unrolled * kernel evaluated group by group with only the non-zero columns.
/// Accumulation runs in ascending column order, so the result matches a
/// sequential full product that also adds the zero terms.
template <typename Scalar>
Matrix<Scalar> grouped_product(const GroupedInput<Scalar>& g, const Matrix<Scalar>& kernel) {
  if (kernel.rows() != g.total_cols) throw std::invalid_argument("grouped_product: kernel rows != unrolled cols");
  Matrix<Scalar> out = Matrix<Scalar>::Zero(g.total_rows, kernel.cols());
  for (const auto& grp : g.groups) {
    for (std::size_t i = 0; i < grp.rows.size(); ++i) {
      for (Eigen::Index o = 0; o < kernel.cols(); ++o) {
        Scalar acc(0);
        for (std::size_t j = 0; j < grp.cols.size(); ++j) acc += grp.dense(i, j) * kernel(grp.cols[j], o);
        out(grp.rows[i], o) = acc;
      }
    }
  }
  return out;
}

/// Reference full product with the same sequential accumulation order.
template <typename Scalar>
Matrix<Scalar> sequential_product(const Matrix<Scalar>& a, const Matrix<Scalar>& b) {
  Matrix<Scalar> out(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index o = 0; o < b.cols(); ++o) {
      Scalar acc(0);
      for (Eigen::Index k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, o);
      out(i, o) = acc;
    }
  return out;
}

/// Structural grouping of a deconv layer: which patch columns can be non-zero
/// for each output pixel, independent of the data.
struct DeconvGrouping {
  struct Group {
    std::vector<int> pixels;
    std::vector<int> cols;
  };
  std::vector<Group> groups;
  std::int64_t grouped_macs_per_sample = 0;
  std::int64_t dense_macs_per_sample = 0;
};

DeconvGrouping plan_deconv_grouping(const LayerShape& shape);

/// Batched product of a deconv layer's unrolled input with its kernel using the
/// structural grouping. Rows are n * P + pixel as produced by unroll_batch.
MatrixXd grouped_batch_product(const MatrixXd& unrolled, const DeconvGrouping& grouping, const MatrixXd& kernel,
                               int pixels_per_sample);

/// Convolution executed on the layer's crossbars, one mvm per output pixel.
/// Deconv inputs are zero-padded first. Returns the pre-activation map.
FeatureMapXd crossbar_layer_forward(const CrossbarArray& units, const FeatureMapXd& input, const LayerShape& shape,
                                    const std::optional<QuantSpec>& input_spec);

}  // namespace memgan

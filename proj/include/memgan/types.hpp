#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace memgan {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// One sample per row. Row-major so a sample's pixels are contiguous.
template <typename Scalar>
using SampleBatch = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;
using BatchXd = SampleBatch<double>;

/// Conductance codes. 64-bit so a 32-bit device still fits without wraparound.
using CodeGrid = Matrix<std::int64_t>;

/// Channel-major feature map dimensions. Flat index is (c * height + y) * width + x.
struct MapDims {
  int channels = 1;
  int height = 1;
  int width = 1;

  int size() const { return channels * height * width; }
  int pixels() const { return height * width; }
  int index(int c, int y, int x) const { return (c * height + y) * width + x; }

  friend bool operator==(const MapDims&, const MapDims&) = default;
};

template <typename Scalar>
struct FeatureMap {
  MapDims dims;
  Vector<Scalar> data;

  FeatureMap() = default;
  explicit FeatureMap(MapDims d) : dims(d), data(Vector<Scalar>::Zero(d.size())) {}
  FeatureMap(MapDims d, Vector<Scalar> values) : dims(d), data(std::move(values)) {}

  Scalar& operator()(int c, int y, int x) { return data[dims.index(c, y, x)]; }
  Scalar operator()(int c, int y, int x) const { return data[dims.index(c, y, x)]; }
};

using FeatureMapXd = FeatureMap<double>;

}  // namespace memgan

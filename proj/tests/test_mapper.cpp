#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "mapping_checks.hpp"
#include "oracles.hpp"

#include "memgan/mapper.hpp"

#include <random>

using namespace memgan;

TEST_CASE("a 3x3 single-channel layer with 32 kernels fits one crossbar") {
  const LayerShape s{LayerKind::conv, 1, 32, 3, 3, 1, 0, 28, 28};
  const LayerMapping m = plan_mapping(s, DeviceConfig{});
  CHECK(m.rows_needed == 9);
  CHECK(m.cols_needed == 32);
  CHECK(m.crossbar_count == 1);
}

TEST_CASE("a 1x1 single kernel uses one cell of one crossbar") {
  const LayerMapping m = plan_mapping({LayerKind::conv, 1, 1, 1, 1, 1, 0, 4, 4}, DeviceConfig{});
  CHECK(m.crossbar_count == 1);
  REQUIRE(m.tiles.size() == 1);
  CHECK(m.tiles[0].row_count * m.tiles[0].col_count == 1);
}

TEST_CASE("5x5x64 kernels with 128 outputs need 200 crossbars") {
  const LayerMapping m = plan_mapping({LayerKind::conv, 64, 128, 5, 5, 1, 2, 16, 16}, DeviceConfig{});
  CHECK(m.rows_needed == 1600);
  CHECK(m.cols_needed == 128);
  const int expected = ((1600 + 31) / 32) * ((128 + 31) / 32);
  CHECK(expected == 200);
  CHECK(m.crossbar_count == expected);
}

TEST_CASE("crossbar counts match brute-force tiling on 100 random shapes") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 100; ++i) {
    const LayerShape s = oracle::random_shape(rng, i % 2 ? LayerKind::deconv : LayerKind::conv);
    DeviceConfig dev;
    dev.rows = std::uniform_int_distribution<int>(1, 40)(rng);
    dev.cols = std::uniform_int_distribution<int>(1, 40)(rng);
    const LayerMapping m = plan_mapping(s, dev);
    CAPTURE(i);
    CHECK(m.crossbar_count == oracle::brute_force_crossbars(s.kernel_rows(), s.out_channels, dev.rows, dev.cols));
    CHECK(static_cast<int>(m.tiles.size()) == m.crossbar_count);

    // every kernel cell lands in exactly one tile, and no tile overflows the device
    std::vector<int> hits(static_cast<std::size_t>(s.kernel_rows()) * s.out_channels, 0);
    for (const auto& t : m.tiles) {
      CHECK(t.row_count <= dev.rows);
      CHECK(t.col_count <= dev.cols);
      for (int r = t.row_begin; r < t.row_begin + t.row_count; ++r)
        for (int c = t.col_begin; c < t.col_begin + t.col_count; ++c) ++hits[r * s.out_channels + c];
    }
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  }
}

TEST_CASE("layer shape validation") {
  CHECK_THROWS_AS((LayerShape{LayerKind::conv, 0, 1, 1, 1, 1, 0, 3, 3}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((LayerShape{LayerKind::conv, 1, 1, 5, 5, 1, 0, 3, 3}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((LayerShape{LayerKind::deconv, 1, 1, 2, 2, 1, 2, 3, 3}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((LayerShape{LayerKind::conv, 1, 1, 1, 1, 0, 0, 3, 3}).validate(), std::invalid_argument);
  const LayerShape d{LayerKind::deconv, 1, 1, 4, 4, 2, 1, 5, 5};
  CHECK(d.out_h() == 10);
  CHECK(d.out_w() == 10);
}

TEST_CASE("a 1x1 stride-1 unroll is the flattened input") {
  FeatureMapXd in({3, 4, 5}, VectorXd::LinSpaced(60, 1, 60));
  const LayerShape s{LayerKind::conv, 3, 2, 1, 1, 1, 0, 4, 5};
  const MatrixXd u = unroll_conv_input(in, s);
  REQUIRE(u.rows() == 20);
  REQUIRE(u.cols() == 3);
  for (int p = 0; p < 20; ++p)
    for (int c = 0; c < 3; ++c) CHECK(u(p, c) == in.data[c * 20 + p]);
}

TEST_CASE("a 2x2 kernel over a 2x2 input gives one row equal to the input") {
  FeatureMapXd in({1, 2, 2}, (VectorXd(4) << 1, 2, 3, 4).finished());
  const MatrixXd u = unroll_conv_input(in, {LayerKind::conv, 1, 1, 2, 2, 1, 0, 2, 2});
  REQUIRE(u.rows() == 1);
  CHECK(u.row(0).transpose() == in.data);
}

TEST_CASE("unroll rejects a dims mismatch") {
  FeatureMapXd in({1, 3, 3});
  CHECK_THROWS_AS(unroll_conv_input(in, {LayerKind::conv, 1, 1, 2, 2, 1, 0, 4, 4}), std::invalid_argument);
}

TEST_CASE("random 6x6 conv with stride 2 matches the nested-loop oracle exactly") {
  std::mt19937_64 rng(6);
  const LayerShape s{LayerKind::conv, 1, 4, 3, 3, 2, 0, 6, 6};
  FeatureMapXd in(s.input_dims());
  const auto x = oracle::dyadic_vector(36, rng);
  for (int i = 0; i < 36; ++i) in.data[i] = x[i];
  const MatrixXd k = oracle::dyadic_matrix(9, 4, rng);
  const MatrixXd y = unroll_conv_input(in, s) * k;
  const auto ref = oracle::conv(x, k, s);
  const int p = s.out_h() * s.out_w();
  for (int o = 0; o < 4; ++o)
    for (int px = 0; px < p; ++px) CHECK(y(px, o) == ref[o * p + px]);
}

TEST_CASE("deconv dilation interleaves zeros") {
  const LayerShape s{LayerKind::deconv, 1, 1, 1, 1, 2, 0, 2, 2};  // edge padding 0
  FeatureMapXd in({1, 2, 2}, (VectorXd(4) << 1, 2, 3, 4).finished());
  const FeatureMapXd d = zero_pad_deconv_input(in, s);
  CHECK(d.dims == MapDims{1, 3, 3});
  VectorXd expect(9);
  expect << 1, 0, 2, 0, 0, 0, 3, 0, 4;
  CHECK(d.data == expect);
}

TEST_CASE("stride-1 deconv dilation is the identity before edge padding") {
  const LayerShape s{LayerKind::deconv, 2, 1, 3, 3, 1, 2, 3, 4};  // edge 0
  FeatureMapXd in({2, 3, 4}, VectorXd::LinSpaced(24, 1, 24));
  CHECK(zero_pad_deconv_input(in, s).data == in.data);
}

TEST_CASE("zero padding a conv layer is rejected") {
  FeatureMapXd in({1, 3, 3});
  CHECK_THROWS_AS(zero_pad_deconv_input(in, {LayerKind::conv, 1, 1, 2, 2, 1, 0, 3, 3}), std::invalid_argument);
}

TEST_CASE("random 4x4 deconv with stride 2 matches the transposed-conv oracle exactly") {
  std::mt19937_64 rng(44);
  const LayerShape s{LayerKind::deconv, 2, 3, 3, 3, 2, 0, 4, 4};
  FeatureMapXd in(s.input_dims());
  const auto x = oracle::dyadic_vector(32, rng);
  for (int i = 0; i < 32; ++i) in.data[i] = x[i];
  const MatrixXd k = oracle::dyadic_matrix(18, 3, rng);
  const MatrixXd y = unroll_conv_input(zero_pad_deconv_input(in, s), s) * k;
  const auto ref = oracle::transposed_conv(x, k, s);
  const int p = s.out_h() * s.out_w();
  CHECK(p == 81);
  for (int o = 0; o < 3; ++o)
    for (int px = 0; px < p; ++px) CHECK(y(px, o) == ref[o * p + px]);
}

TEST_CASE("grouping dense rows gives one group with nothing dropped") {
  const MatrixXd u = MatrixXd::Constant(5, 4, 0.5);
  const auto g = group_nonzero_rows(u);
  REQUIRE(g.groups.size() == 1);
  CHECK(g.groups[0].rows.size() == 5);
  CHECK(g.groups[0].cols.size() == 4);
  CHECK(grouped_multiplies(g, 3) == ungrouped_multiplies(5, 4, 3));
}

TEST_CASE("grouping all-zero rows leaves no work and a zero product") {
  const auto g = group_nonzero_rows(MatrixXd(MatrixXd::Zero(6, 4)));
  CHECK(g.groups.empty());
  CHECK(grouped_multiplies(g, 2) == 0);
  CHECK(grouped_product(g, MatrixXd(MatrixXd::Ones(4, 2))).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("groups rebuild the unrolled input exactly") {
  std::mt19937_64 rng(3);
  const LayerShape s{LayerKind::deconv, 2, 1, 3, 3, 2, 1, 4, 4};
  FeatureMapXd in(s.input_dims());
  for (Eigen::Index i = 0; i < in.data.size(); ++i) in.data[i] = 1.0 + oracle::dyadic(rng) * 0.5;  // never zero
  const MatrixXd u = unroll_conv_input(zero_pad_deconv_input(in, s), s);
  const auto g = group_nonzero_rows(u);
  MatrixXd rebuilt = MatrixXd::Zero(u.rows(), u.cols());
  for (const auto& grp : g.groups)
    for (std::size_t i = 0; i < grp.rows.size(); ++i)
      for (std::size_t j = 0; j < grp.cols.size(); ++j) rebuilt(grp.rows[i], grp.cols[j]) = grp.dense(i, j);
  CHECK(rebuilt == u);
  CHECK(g.groups.size() > 1);
}

TEST_CASE("stride-2 deconv grouping is exact and does strictly less work") {
  std::mt19937_64 rng(12);
  const LayerShape s{LayerKind::deconv, 3, 4, 4, 4, 2, 1, 5, 5};
  FeatureMapXd in(s.input_dims());
  for (Eigen::Index i = 0; i < in.data.size(); ++i) in.data[i] = std::uniform_real_distribution<double>(-1, 1)(rng);
  const MatrixXd u = unroll_conv_input(zero_pad_deconv_input(in, s), s);
  std::uniform_real_distribution<double> w(-1, 1);
  MatrixXd k(s.kernel_rows(), 4);
  for (Eigen::Index i = 0; i < k.size(); ++i) k.data()[i] = w(rng);
  const auto g = group_nonzero_rows(u);
  CHECK(grouped_product(g, k) == sequential_product(u, k));
  CHECK(grouped_multiplies(g, 4) < ungrouped_multiplies(u.rows(), u.cols(), 4));
}

TEST_CASE("crossbar conv and deconv match the oracles on random shapes") {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 60; ++i) {
    const LayerKind kind = i % 2 ? LayerKind::deconv : LayerKind::conv;
    const LayerShape s = oracle::random_shape(rng, kind);
    const auto r = oracle::layer_equivalence(s, 1000 + i);
    CAPTURE(i);
    CAPTURE(r.detail);
    CHECK(r.exact);
    if (kind == LayerKind::deconv) {
      CHECK(r.grouped_exact);
      if (s.stride >= 2) CHECK(r.grouped_macs < r.dense_macs);
    }
  }
}

TEST_CASE("quantized crossbar conv stays within the crossbar error bound") {
  std::mt19937_64 rng(5);
  const LayerShape s{LayerKind::conv, 2, 5, 3, 3, 1, 1, 6, 6};
  std::uniform_real_distribution<double> u(-1, 1);
  MatrixXd k(s.kernel_rows(), s.out_channels);
  for (Eigen::Index i = 0; i < k.size(); ++i) k.data()[i] = u(rng);
  FeatureMapXd in(s.input_dims());
  for (Eigen::Index i = 0; i < in.data.size(); ++i) in.data[i] = u(rng);
  const std::vector<double> x(in.data.data(), in.data.data() + in.data.size());
  const auto ref = oracle::conv(x, k, s);

  CrossbarArray units(s.kernel_rows(), s.out_channels, DeviceConfig{});
  units.program(k);
  const QuantSpec spec = QuantSpec::symmetric_range(8, in.data.cwiseAbs().maxCoeff());
  const FeatureMapXd out = crossbar_layer_forward(units, in, s, spec);
  const MatrixXd patches = unroll_conv_input(in, s);
  const int p = s.out_h() * s.out_w();
  for (int px = 0; px < p; ++px) {
    // the layer fits one crossbar here, so its bound applies directly
    const double bound = mvm_error_bound(k, patches.row(px).transpose(), 8, 8);
    for (int o = 0; o < s.out_channels; ++o) CHECK(std::abs(out.data[o * p + px] - ref[o * p + px]) <= bound);
  }
}

TEST_CASE("crossbar arrays sum partial products across row tiles") {
  DeviceConfig dev;
  dev.ideal = true;
  dev.rows = 4;
  dev.cols = 3;
  std::mt19937_64 rng(9);
  const MatrixXd w = oracle::dyadic_matrix(10, 7, rng);
  CrossbarArray a(10, 7, dev);
  CHECK(a.mapping().crossbar_count == 3 * 3);
  a.program(w);
  CHECK(a.read() == w);
  const auto v = oracle::dyadic_vector(10, rng);
  const VectorXd vin = Eigen::Map<const VectorXd>(v.data(), 10);
  const VectorXd y = a.mvm(vin, std::nullopt);
  CHECK(y == (w.transpose() * vin).eval());
  CHECK(a.multiply(vin.transpose()) == (vin.transpose() * w).eval());
  CHECK(a.cell_count() == 9 * 12);
  CHECK_THROWS_AS(a.program(MatrixXd::Zero(9, 7)), std::invalid_argument);
}

TEST_CASE("fold is the adjoint of unroll") {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 10; ++i) {
    const LayerShape s = oracle::random_shape(rng, LayerKind::conv);
    const MapDims in = s.conv_input_dims();
    BatchXd x(2, in.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) x.data()[j] = oracle::dyadic(rng);
    const MatrixXd u = unroll_batch(x, s);
    const MatrixXd y = oracle::dyadic_matrix(static_cast<int>(u.rows()), static_cast<int>(u.cols()), rng);
    const BatchXd f = fold_batch(y, s, 2);
    // <unroll(x), y> == <x, fold(y)>
    CHECK(u.cwiseProduct(y).sum() == x.cwiseProduct(f).sum());
  }
}

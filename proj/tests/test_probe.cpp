#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "memgan/probe.hpp"

#include <random>

using namespace memgan;

namespace {

// Gaussian blobs around well separated centers.
void blobs(int per_class, int classes, int dims, std::uint64_t seed, MatrixXd& x, std::vector<int>& y) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.3);
  x.resize(per_class * classes, dims);
  y.clear();
  for (int c = 0; c < classes; ++c)
    for (int i = 0; i < per_class; ++i) {
      const int row = c * per_class + i;
      for (int d = 0; d < dims; ++d) x(row, d) = (d % classes == c ? 3.0 : 0.0) + noise(rng);
      y.push_back(c);
    }
}

}  // namespace

TEST_CASE("separable blobs are classified almost perfectly") {
  MatrixXd x, xt;
  std::vector<int> y, yt;
  blobs(60, 4, 8, 1, x, y);
  blobs(30, 4, 8, 2, xt, yt);
  LinearProbe p;
  p.fit(x, y, 4);
  CHECK(p.accuracy(xt, yt) > 0.97);
  CHECK(p.final_loss() < 0.2);
}

TEST_CASE("loss falls with more epochs") {
  MatrixXd x;
  std::vector<int> y;
  blobs(40, 3, 6, 3, x, y);
  LinearProbe a, b;
  a.fit(x, y, 3, {5, 0.5, 0.0});
  b.fit(x, y, 3, {100, 0.5, 0.0});
  CHECK(b.final_loss() < a.final_loss());
}

TEST_CASE("fitting is deterministic") {
  MatrixXd x;
  std::vector<int> y;
  blobs(20, 3, 5, 4, x, y);
  LinearProbe a, b;
  a.fit(x, y, 3);
  b.fit(x, y, 3);
  CHECK(a.final_loss() == b.final_loss());
  CHECK(a.predict(x) == b.predict(x));
}

TEST_CASE("constant feature columns do not break standardization") {
  MatrixXd x;
  std::vector<int> y;
  blobs(20, 2, 4, 5, x, y);
  x.col(1).setConstant(7.0);
  LinearProbe p;
  p.fit(x, y, 2);
  CHECK(std::isfinite(p.final_loss()));
  CHECK(p.accuracy(x, y) > 0.95);
}

TEST_CASE("bad inputs are rejected") {
  MatrixXd x = MatrixXd::Ones(4, 2);
  LinearProbe p;
  CHECK_THROWS_AS(p.predict(x), std::logic_error);
  CHECK_THROWS_AS(p.fit(MatrixXd(0, 2), {}, 2), std::invalid_argument);
  CHECK_THROWS_AS(p.fit(x, {0, 1, 0}, 2), std::invalid_argument);
  CHECK_THROWS_AS(p.fit(x, {0, 1, 0, 2}, 2), std::invalid_argument);
  CHECK_THROWS_AS(p.fit(x, {0, 1, 0, 1}, 1), std::invalid_argument);
  CHECK_THROWS_AS(p.fit(x, {0, 1, 0, 1}, 2, {0, 0.5, 0.0}), std::invalid_argument);
  x(0, 0) = std::nan("");
  CHECK_THROWS_AS(p.fit(x, {0, 1, 0, 1}, 2), std::invalid_argument);

  MatrixXd ok = MatrixXd::Random(4, 2);
  p.fit(ok, {0, 1, 0, 1}, 2);
  CHECK_THROWS_AS(p.predict(MatrixXd::Ones(2, 3)), std::invalid_argument);
}

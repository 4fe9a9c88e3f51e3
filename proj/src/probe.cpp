#include "memgan/probe.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace memgan {

MatrixXd LinearProbe::standardize(const MatrixXd& features) const {
  MatrixXd x(features.rows(), features.cols() + 1);
  x.leftCols(features.cols()) = ((features.rowwise() - mean_).array().rowwise() * inv_std_.array()).matrix();
  x.col(features.cols()).setOnes();
  return x;
}

void LinearProbe::fit(const MatrixXd& features, const std::vector<int>& labels, int classes, const ProbeConfig& cfg) {
  const Eigen::Index n = features.rows();
  if (n == 0 || features.cols() == 0) throw std::invalid_argument("LinearProbe: no features to fit");
  if (static_cast<std::size_t>(n) != labels.size())
    throw std::invalid_argument("LinearProbe: " + std::to_string(labels.size()) + " labels for " + std::to_string(n) +
                                " samples");
  if (classes < 2) throw std::invalid_argument("LinearProbe: need at least two classes");
  if (cfg.epochs < 1 || !(cfg.learning_rate > 0.0) || cfg.l2 < 0.0)
    throw std::invalid_argument("LinearProbe: epochs >= 1, learning_rate > 0 and l2 >= 0 required");
  for (int y : labels)
    if (y < 0 || y >= classes) throw std::invalid_argument("LinearProbe: label " + std::to_string(y) + " out of range");
  if (!features.allFinite()) throw std::invalid_argument("LinearProbe: non-finite features");

  mean_ = features.colwise().mean();
  const Eigen::RowVectorXd var = (features.rowwise() - mean_).array().square().colwise().mean();
  inv_std_ = var.unaryExpr([](double v) { return v > 1e-12 ? 1.0 / std::sqrt(v) : 0.0; });
  const MatrixXd x = standardize(features);

  MatrixXd onehot = MatrixXd::Zero(n, classes);
  for (Eigen::Index i = 0; i < n; ++i) onehot(i, labels[static_cast<std::size_t>(i)]) = 1.0;

  weights_ = MatrixXd::Zero(x.cols(), classes);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    MatrixXd logits = x * weights_;
    const Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
    logits.colwise() -= row_max;
    MatrixXd prob = logits.array().exp().matrix();
    const Eigen::VectorXd z = prob.rowwise().sum();
    prob.array().colwise() /= z.array();
    loss_ = -(onehot.array() * (logits.colwise() - z.array().log().matrix()).array()).sum() / static_cast<double>(n);
    if (!std::isfinite(loss_)) throw std::runtime_error("LinearProbe: loss diverged at epoch " + std::to_string(epoch));
    MatrixXd grad = x.transpose() * (prob - onehot) / static_cast<double>(n);
    grad.topRows(grad.rows() - 1) += cfg.l2 * weights_.topRows(weights_.rows() - 1);
    weights_ -= cfg.learning_rate * grad;
  }
}

std::vector<int> LinearProbe::predict(const MatrixXd& features) const {
  if (weights_.size() == 0) throw std::logic_error("LinearProbe: predict before fit");
  if (features.cols() + 1 != weights_.rows()) throw std::invalid_argument("LinearProbe: feature width changed");
  const MatrixXd scores = standardize(features) * weights_;
  std::vector<int> out(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    scores.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

double LinearProbe::accuracy(const MatrixXd& features, const std::vector<int>& labels) const {
  const auto pred = predict(features);
  if (pred.size() != labels.size()) throw std::invalid_argument("LinearProbe: label count mismatch");
  if (pred.empty()) throw std::invalid_argument("LinearProbe: empty evaluation set");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

}  // namespace memgan

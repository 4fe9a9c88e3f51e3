#pragma once

#include "memgan/types.hpp"

#include <vector>

namespace memgan {

struct ProbeConfig {
  int epochs = 300;
  double learning_rate = 0.5;
  double l2 = 1e-4;
};

/// Multinomial logistic regression on standardized features, trained by
/// deterministic full-batch gradient descent.
class LinearProbe {
 public:
  /// Throws std::invalid_argument on empty or mismatched input and
  /// std::runtime_error if the loss stops being finite.
  void fit(const MatrixXd& features, const std::vector<int>& labels, int classes, const ProbeConfig& cfg = {});

  std::vector<int> predict(const MatrixXd& features) const;
  double accuracy(const MatrixXd& features, const std::vector<int>& labels) const;
  /// Mean cross-entropy after the last epoch.
  double final_loss() const { return loss_; }

 private:
  MatrixXd standardize(const MatrixXd& features) const;

  Eigen::RowVectorXd mean_;
  Eigen::RowVectorXd inv_std_;
  MatrixXd weights_;  // (features + 1) x classes, bias last
  double loss_ = 0.0;
};

}  // namespace memgan

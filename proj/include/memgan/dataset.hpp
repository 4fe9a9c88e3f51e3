#pragma once

#include "memgan/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace memgan {

/// Labelled images, one per row in channel-major order, scaled to [-1, 1].
struct Dataset {
  std::string name;
  int channels = 1;
  int height = 0;
  int width = 0;
  int classes = 10;
  BatchXd images;
  std::vector<int> labels;

  Eigen::Index size() const { return images.rows(); }
  int sample_size() const { return channels * height * width; }
  /// Rows `indices` in the given order.
  Dataset subset(const std::vector<Eigen::Index>& indices) const;
};

/// Square center crop (or pad with the background value -1) to `size` x `size`.
BatchXd center_fit(const BatchXd& images, int channels, int height, int width, int size);

/// Standard IDX files (magic 0x803 images, 0x801 labels). `limit` keeps the
/// first `limit` records in file order; 0 keeps all.
Dataset load_mnist(const std::filesystem::path& images, const std::filesystem::path& labels, int size,
                   std::int64_t limit = 0);

/// CIFAR-10 binary batches (1 label byte + 3072 pixel bytes per record),
/// concatenated in the order given.
Dataset load_cifar10(const std::vector<std::filesystem::path>& batches, int size, std::int64_t limit = 0);

}  // namespace memgan

#include "memgan/dataset.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace memgan {

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.empty()) throw std::runtime_error(path.string() + ": empty file");
  return bytes;
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
         std::uint32_t{b[at + 3]};
}

std::string hex(std::uint32_t v) {
  std::ostringstream s;
  s << "0x" << std::hex << v;
  return s.str();
}

void require_size(const std::vector<unsigned char>& b, std::size_t need, const std::filesystem::path& path,
                  const char* what) {
  if (b.size() < need)
    throw std::runtime_error(path.string() + ": truncated " + what + " (" + std::to_string(b.size()) + " bytes, need " +
                             std::to_string(need) + ")");
}

double scale_pixel(unsigned char v) { return v / 127.5 - 1.0; }

}  // namespace

Dataset Dataset::subset(const std::vector<Eigen::Index>& indices) const {
  Dataset d = *this;
  d.images.resize(static_cast<Eigen::Index>(indices.size()), images.cols());
  d.labels.resize(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    d.images.row(static_cast<Eigen::Index>(i)) = images.row(indices[i]);
    d.labels[i] = labels[static_cast<std::size_t>(indices[i])];
  }
  return d;
}

BatchXd center_fit(const BatchXd& images, int channels, int height, int width, int size) {
  if (size < 1) throw std::invalid_argument("center_fit: size must be >= 1");
  BatchXd out = BatchXd::Constant(images.rows(), static_cast<Eigen::Index>(channels) * size * size, -1.0);
  const int dy = (height - size) / 2;
  const int dx = (width - size) / 2;
  for (Eigen::Index n = 0; n < images.rows(); ++n)
    for (int c = 0; c < channels; ++c)
      for (int y = 0; y < size; ++y) {
        const int sy = y + dy;
        if (sy < 0 || sy >= height) continue;
        for (int x = 0; x < size; ++x) {
          const int sx = x + dx;
          if (sx < 0 || sx >= width) continue;
          out(n, (c * size + y) * size + x) = images(n, (c * height + sy) * width + sx);
        }
      }
  return out;
}

Dataset load_mnist(const std::filesystem::path& images, const std::filesystem::path& labels, int size,
                   std::int64_t limit) {
  const auto ib = read_file(images);
  const auto lb = read_file(labels);
  require_size(ib, 16, images, "header");
  require_size(lb, 8, labels, "header");
  if (be32(ib, 0) != 0x803)
    throw std::runtime_error(images.string() + ": bad magic " + hex(be32(ib, 0)) + ", expected 0x803 (IDX images)");
  if (be32(lb, 0) != 0x801)
    throw std::runtime_error(labels.string() + ": bad magic " + hex(be32(lb, 0)) + ", expected 0x801 (IDX labels)");
  const std::int64_t count = be32(ib, 4);
  const int rows = static_cast<int>(be32(ib, 8));
  const int cols = static_cast<int>(be32(ib, 12));
  if (be32(lb, 4) != count)
    throw std::runtime_error(labels.string() + ": " + std::to_string(be32(lb, 4)) + " labels for " +
                             std::to_string(count) + " images");
  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  require_size(ib, 16 + static_cast<std::size_t>(count) * pixels, images, "image data");
  require_size(lb, 8 + static_cast<std::size_t>(count), labels, "label data");

  const std::int64_t n = limit > 0 ? std::min(limit, count) : count;
  BatchXd raw(n, static_cast<Eigen::Index>(pixels));
  Dataset d;
  d.name = "mnist";
  d.labels.resize(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < pixels; ++p) raw(i, static_cast<Eigen::Index>(p)) = scale_pixel(ib[16 + i * pixels + p]);
    const int label = lb[8 + i];
    if (label > 9) throw std::runtime_error(labels.string() + ": label " + std::to_string(label) + " out of range");
    d.labels[static_cast<std::size_t>(i)] = label;
  }
  d.channels = 1;
  d.height = d.width = size;
  d.images = center_fit(raw, 1, rows, cols, size);
  return d;
}

Dataset load_cifar10(const std::vector<std::filesystem::path>& batches, int size, std::int64_t limit) {
  if (batches.empty()) throw std::invalid_argument("load_cifar10: no batch files given");
  constexpr std::size_t kRecord = 1 + 3072;
  std::vector<std::vector<unsigned char>> files;
  std::int64_t total = 0;
  for (const auto& path : batches) {
    files.push_back(read_file(path));
    if (files.back().size() % kRecord != 0)
      throw std::runtime_error(path.string() + ": truncated (size " + std::to_string(files.back().size()) +
                               " is not a multiple of 3073)");
    total += static_cast<std::int64_t>(files.back().size() / kRecord);
  }
  const std::int64_t n = limit > 0 ? std::min(limit, total) : total;
  BatchXd raw(n, 3072);
  Dataset d;
  d.name = "cifar10";
  d.labels.resize(static_cast<std::size_t>(n));
  std::int64_t row = 0;
  for (std::size_t f = 0; f < files.size() && row < n; ++f) {
    const auto& b = files[f];
    for (std::size_t at = 0; at < b.size() && row < n; at += kRecord, ++row) {
      if (b[at] > 9) throw std::runtime_error(batches[f].string() + ": label " + std::to_string(b[at]) + " out of range");
      d.labels[static_cast<std::size_t>(row)] = b[at];
      for (int p = 0; p < 3072; ++p) raw(row, p) = scale_pixel(b[at + 1 + p]);
    }
  }
  d.channels = 3;
  d.height = d.width = size;
  d.images = center_fit(raw, 3, 32, 32, size);
  return d;
}

}  // namespace memgan

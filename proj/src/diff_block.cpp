#include "memgan/diff_block.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace memgan {

namespace {

// Keeps the exact datapath finite as D saturates in double precision.
constexpr double kExactClamp = 1e-12;

}  // namespace

double Lut::evaluate(Kind kind, double d) {
  const double x = std::clamp(d, kExactClamp, 1.0 - kExactClamp);
  return kind == Kind::log_d ? 1.0 / x : -1.0 / (1.0 - x);
}

Lut Lut::build(Kind kind, int bits) {
  if (bits != 0 && bits != 4 && bits != 8 && bits != 16)
    throw std::invalid_argument("Lut: input_bits must be 4, 8 or 16 (or 0 for exact)");
  Lut lut;
  lut.kind_ = kind;
  lut.bits_ = bits;
  if (bits == 0) return lut;
  const std::size_t n = std::size_t{1} << bits;
  lut.entries_.resize(n);
  // Bin 0 is never addressed after clamping; it holds the value half a bin
  // below the clamp so the table stays strictly monotone.
  lut.entries_[0] = evaluate(kind, 0.5 / static_cast<double>(n));
  for (std::size_t k = 1; k < n; ++k) lut.entries_[k] = evaluate(kind, lut.bin_center(k));
  return lut;
}

double Lut::bin_center(std::size_t k) const {
  return static_cast<double>(k) / static_cast<double>(std::size_t{1} << bits_);
}

std::size_t Lut::address(double d) const {
  if (bits_ == 0) throw std::logic_error("Lut::address: exact table has no bins");
  if (!std::isfinite(d)) throw std::invalid_argument("Lut::address: non-finite D");
  const auto n = static_cast<double>(std::size_t{1} << bits_);
  const double clamped = std::clamp(d, 1.0 / n, 1.0 - 1.0 / n);
  const auto k = static_cast<std::size_t>(std::llround(clamped * n));
  return std::clamp<std::size_t>(k, 1, entries_.size() - 1);
}

double Lut::lookup(double d) const {
  if (bits_ == 0) {
    if (!std::isfinite(d)) throw std::invalid_argument("Lut::lookup: non-finite D");
    return evaluate(kind_, d);
  }
  return entries_[address(d)];
}

DiffLuts build_luts(int input_bits) {
  return {Lut::build(Lut::Kind::log_d, input_bits), Lut::build(Lut::Kind::log_one_minus_d, input_bits)};
}

BatchMemory::BatchMemory(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw std::invalid_argument("BatchMemory: capacity must be >= 1");
}

void BatchMemory::write(std::vector<double> values, std::int64_t iteration) {
  if (static_cast<int>(values.size()) != capacity_)
    throw std::invalid_argument("BatchMemory: expected " + std::to_string(capacity_) + " values, got " +
                                std::to_string(values.size()));
  if (tag_) throw std::logic_error("BatchMemory: already staged for iteration " + std::to_string(*tag_));
  slots_ = std::move(values);
  tag_ = iteration;
}

std::vector<double> BatchMemory::take(std::int64_t iteration) {
  if (!tag_) throw std::logic_error("BatchMemory: nothing staged for iteration " + std::to_string(iteration));
  if (*tag_ != iteration)
    throw std::logic_error("BatchMemory: staged for iteration " + std::to_string(*tag_) + ", read in " +
                           std::to_string(iteration));
  tag_.reset();
  return std::move(slots_);
}

void stage_real_scores(BatchMemory& mem, const DiffLuts& luts, const Eigen::Ref<const VectorXd>& d_x,
                       std::int64_t iteration, DiffOpCounts* counts) {
  if (d_x.size() != mem.capacity())
    throw std::invalid_argument("stage_real_scores: |D(x)| = " + std::to_string(d_x.size()) +
                                " but batch size is " + std::to_string(mem.capacity()));
  std::vector<double> values(static_cast<std::size_t>(d_x.size()));
  for (Eigen::Index i = 0; i < d_x.size(); ++i) values[i] = luts.real.lookup(d_x[i]);
  mem.write(std::move(values), iteration);
  if (counts) {
    counts->lut_lookups += d_x.size();
    counts->memory_writes += d_x.size();
  }
}

DiffResult compute_errors(BatchMemory& mem, const DiffLuts& luts, const Eigen::Ref<const VectorXd>& d_gz,
                          std::int64_t iteration, DiffOpCounts* counts) {
  if (d_gz.size() != mem.capacity())
    throw std::invalid_argument("compute_errors: |D(G(z))| = " + std::to_string(d_gz.size()) +
                                " but batch size is " + std::to_string(mem.capacity()));
  const std::vector<double> staged = mem.take(iteration);
  const double inv_m = 1.0 / static_cast<double>(mem.capacity());
  const Eigen::Index m = d_gz.size();

  DiffResult r;
  r.iteration = iteration;
  r.error_d_real.resize(m);
  r.error_d_fake.resize(m);
  r.error_g.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double fake = luts.fake.lookup(d_gz[i]);
    r.error_g[i] = inv_m * fake;
    r.error_d_fake[i] = inv_m * fake;
    r.error_d_real[i] = inv_m * staged[static_cast<std::size_t>(i)];
  }
  if (counts) {
    counts->lut_lookups += m;
    counts->memory_reads += m;
    counts->adder_ops += 3 * m;
  }
  return r;
}

}  // namespace memgan

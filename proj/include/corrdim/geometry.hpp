#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "corrdim/lpstream.hpp"

namespace corrdim {

// Ascending, strictly increasing, finite positive distance thresholds.
class ThresholdGrid {
 public:
  explicit ThresholdGrid(std::vector<double> eps);

  std::span<const double> eps() const { return eps_; }
  std::size_t size() const { return eps_.size(); }
  double operator[](std::size_t k) const { return eps_[k]; }

  ThresholdGrid scaled(double factor) const;

 private:
  std::vector<double> eps_;
};

// counts[k] = #{(i, j) : i < j, |x_i - x_j| < eps_k}
struct PairCounts {
  std::vector<std::uint64_t> counts;
  std::uint64_t n_pairs = 0;

  bool operator==(const PairCounts&) const = default;
};

struct CountOptions {
  std::size_t tile = 512;
  // 0 picks CORRDIM_THREADS, then the hardware concurrency.
  unsigned threads = 0;
};

unsigned resolve_threads(unsigned requested);

// Squared Euclidean distance accumulated in FP32 over eight fixed lanes. The
// summation order depends only on `a.size()`, so every caller gets the same
// bits for the same pair regardless of argument order.
inline float squared_distance(const float* a, const float* b, std::size_t dim) {
  float acc[8] = {0.f, 0.f, 0.f, 0.f, 0.f, 0.f, 0.f, 0.f};
  std::size_t k = 0;
  for (; k + 8 <= dim; k += 8) {
    for (std::size_t l = 0; l < 8; ++l) {
      const float d = a[k + l] - b[k + l];
      acc[l] += d * d;
    }
  }
  for (std::size_t l = 0; k < dim; ++k, ++l) {
    const float d = a[k] - b[k];
    acc[l] += d * d;
  }
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

inline float squared_distance(std::span<const float> a, std::span<const float> b) {
  return squared_distance(a.data(), b.data(), a.size());
}

// Squared thresholds used by every counting path; d < eps  <=>  d^2 < eps^2.
std::vector<double> squared_thresholds(const ThresholdGrid& grid);

// Throws infinite_entry (or invalid_entry for NaN) if any payload value is not
// finite.
void require_finite(const LogProbStream& stream);

// Reference double loop over all i < j, every threshold tested per pair.
PairCounts count_pairs_naive(const LogProbStream& stream, const ThresholdGrid& grid);

// Tiled distance-and-count: lower-triangular index tiles are processed as
// independent jobs, each pair's squared distance is binned against the
// thresholds as soon as it is computed and never stored. Per-worker
// histograms are merged at the end, so totals are exact for any tile size and
// thread count.
PairCounts count_pairs_fused(const LogProbStream& stream, const ThresholdGrid& grid,
                             const CountOptions& options = {});

// x_t -> [x_t; ...; x_{t+tau-1}], N - tau + 1 rows of dimension tau * D.
LogProbStream delay_embed(const LogProbStream& stream, std::size_t tau);

class RecurrenceMatrix {
 public:
  explicit RecurrenceMatrix(std::size_t n);

  std::size_t n() const { return n_; }
  bool at(std::size_t i, std::size_t j) const {
    const std::size_t idx = i * n_ + j;
    return (bits_[idx / 64] >> (idx % 64)) & 1u;
  }
  void set(std::size_t i, std::size_t j);
  std::uint64_t count_true() const;

  // Binary PGM (P5): recurrent pairs black (0), the rest white (255). A
  // non-empty comment is written as a header comment line.
  void write_pgm(std::ostream& out, const std::string& comment = {}) const;
  // "i,j" rows for every recurrent pair with i < j; the diagonal is implied.
  void write_csv(std::ostream& out, const std::string& comment = {}) const;

 private:
  std::size_t n_;
  std::vector<std::uint64_t> bits_;
};

RecurrenceMatrix recurrence_matrix(const LogProbStream& stream, double eps);

}  // namespace corrdim

#include "corrdim/geometry.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <string>
#include <thread>

#include "corrdim/error.hpp"
#include "corrdim/half.hpp"

namespace corrdim {

ThresholdGrid::ThresholdGrid(std::vector<double> eps) : eps_(std::move(eps)) {
  if (eps_.empty()) throw Error(ErrorCode::invalid_argument, "threshold grid is empty");
  for (std::size_t k = 0; k < eps_.size(); ++k) {
    if (!std::isfinite(eps_[k]) || eps_[k] <= 0.0)
      throw Error(ErrorCode::invalid_argument, "thresholds must be finite and positive");
    if (k > 0 && !(eps_[k] > eps_[k - 1]))
      throw Error(ErrorCode::invalid_argument, "thresholds must be strictly increasing");
  }
}

ThresholdGrid ThresholdGrid::scaled(double factor) const {
  std::vector<double> eps(eps_);
  for (auto& e : eps) e *= factor;
  return ThresholdGrid(std::move(eps));
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CORRDIM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<double> squared_thresholds(const ThresholdGrid& grid) {
  std::vector<double> out(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) out[k] = grid[k] * grid[k];
  return out;
}

void require_finite(const LogProbStream& stream) {
  auto check = [](float v, std::size_t idx, std::size_t dim) {
    if (std::isfinite(v)) return;
    const std::string where = " at row " + std::to_string(idx / dim) + ", column " + std::to_string(idx % dim);
    if (std::isnan(v)) throw Error(ErrorCode::invalid_entry, "invalid entry: NaN" + where);
    throw Error(ErrorCode::infinite_entry, "infinite entry" + where + "; clamp the stream first");
  };
  if (stream.precision() == Precision::fp32) {
    const auto data = stream.fp32_data();
    for (std::size_t i = 0; i < data.size(); ++i) check(data[i], i, stream.dim());
  } else {
    const auto data = stream.fp16_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      // exponent all ones marks inf/NaN in binary16
      if ((data[i] & 0x7c00u) == 0x7c00u) check(half_to_float(data[i]), i, stream.dim());
    }
  }
}

namespace {

std::uint64_t pair_total(std::size_t n) {
  return static_cast<std::uint64_t>(n) * (n - 1) / 2;
}

void check_count_inputs(const LogProbStream& stream) {
  if (stream.n_steps() < 2) throw Error(ErrorCode::invalid_argument, "pair counting needs n_steps >= 2");
  require_finite(stream);
}

// Rows [begin, end) of the stream as contiguous FP32. FP32 streams are viewed
// in place; FP16 tiles are upcast into the worker's buffer.
class TileLoader {
 public:
  explicit TileLoader(const LogProbStream& stream) : stream_(stream) {}

  const float* load(std::size_t begin, std::size_t end) {
    const std::size_t dim = stream_.dim();
    if (stream_.precision() == Precision::fp32) return stream_.fp32_data().data() + begin * dim;
    const auto bits = stream_.fp16_data();
    buffer_.resize((end - begin) * dim);
    for (std::size_t i = 0; i < buffer_.size(); ++i) buffer_[i] = half_to_float(bits[begin * dim + i]);
    return buffer_.data();
  }

 private:
  const LogProbStream& stream_;
  std::vector<float> buffer_;
};

}  // namespace

PairCounts count_pairs_naive(const LogProbStream& stream, const ThresholdGrid& grid) {
  check_count_inputs(stream);
  const std::size_t n = stream.n_steps();
  const std::size_t dim = stream.dim();
  const std::vector<float> x = stream.to_fp32_values();
  const std::vector<double> eps2 = squared_thresholds(grid);

  PairCounts out;
  out.counts.assign(grid.size(), 0);
  out.n_pairs = pair_total(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d2 = squared_distance(&x[i * dim], &x[j * dim], dim);
      for (std::size_t k = 0; k < eps2.size(); ++k)
        if (d2 < eps2[k]) ++out.counts[k];
    }
  }
  return out;
}

PairCounts count_pairs_fused(const LogProbStream& stream, const ThresholdGrid& grid,
                             const CountOptions& options) {
  check_count_inputs(stream);
  if (options.tile < 1) throw Error(ErrorCode::invalid_argument, "tile side must be >= 1");

  const std::size_t n = stream.n_steps();
  const std::size_t dim = stream.dim();
  const std::size_t tile = std::min(options.tile, n);
  const std::size_t n_tiles = (n + tile - 1) / tile;
  const std::uint64_t n_jobs = static_cast<std::uint64_t>(n_tiles) * (n_tiles + 1) / 2;
  const std::vector<double> eps2 = squared_thresholds(grid);
  const std::size_t n_eps = eps2.size();
  const double eps2_min = eps2.front();
  const double eps2_max = eps2.back();

  // Bucket b holds pairs whose first satisfied threshold is b; bucket n_eps
  // holds pairs beyond the largest threshold.
  auto bucket_of = [&](double d2) -> std::size_t {
    if (d2 < eps2_min) return 0;
    if (!(d2 < eps2_max)) return n_eps;
    return static_cast<std::size_t>(std::upper_bound(eps2.begin(), eps2.end(), d2) - eps2.begin());
  };

  const unsigned workers =
      static_cast<unsigned>(std::min<std::uint64_t>(resolve_threads(options.threads), n_jobs));
  std::vector<std::vector<std::uint64_t>> histograms(workers, std::vector<std::uint64_t>(n_eps + 1, 0));
  std::atomic<std::uint64_t> next_job{0};

  auto work = [&](unsigned w) {
    auto& hist = histograms[w];
    TileLoader row_tile(stream), col_tile(stream);
    for (;;) {
      const std::uint64_t job = next_job.fetch_add(1, std::memory_order_relaxed);
      if (job >= n_jobs) break;
      // job -> (ti, tj) with tj <= ti, row-major over the lower triangle
      std::uint64_t ti = static_cast<std::uint64_t>((std::sqrt(8.0 * static_cast<double>(job) + 1.0) - 1.0) / 2.0);
      while (ti * (ti + 1) / 2 > job) --ti;
      while ((ti + 1) * (ti + 2) / 2 <= job) ++ti;
      const std::uint64_t tj = job - ti * (ti + 1) / 2;

      const std::size_t i0 = ti * tile, i1 = std::min(n, i0 + tile);
      const std::size_t j0 = tj * tile, j1 = std::min(n, j0 + tile);
      const float* xi = row_tile.load(i0, i1);
      const float* xj = ti == tj ? xi : col_tile.load(j0, j1);
      for (std::size_t i = i0; i < i1; ++i) {
        const float* a = xi + (i - i0) * dim;
        // on the diagonal tile only j < i, so each unordered pair is seen once
        const std::size_t j_end = ti == tj ? i : j1;
        for (std::size_t j = j0; j < j_end; ++j) {
          const double d2 = squared_distance(a, xj + (j - j0) * dim, dim);
          ++hist[bucket_of(d2)];
        }
      }
    }
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }

  PairCounts out;
  out.n_pairs = pair_total(n);
  out.counts.assign(n_eps, 0);
  std::uint64_t running = 0;
  for (std::size_t k = 0; k < n_eps; ++k) {
    for (const auto& h : histograms) running += h[k];
    out.counts[k] = running;
  }
  return out;
}

LogProbStream delay_embed(const LogProbStream& stream, std::size_t tau) {
  if (tau < 1) throw Error(ErrorCode::invalid_argument, "delay tau must be >= 1");
  if (tau > stream.n_steps())
    throw Error(ErrorCode::invalid_argument, "delay tau " + std::to_string(tau) + " exceeds n_steps " +
                                                 std::to_string(stream.n_steps()));
  const std::size_t n_out = stream.n_steps() - tau + 1;
  const std::size_t dim = stream.dim();
  const std::size_t row_len = tau * dim;

  StreamMeta meta = stream.meta();
  meta.extra["delay_tau"] = tau;

  auto embed = [&](auto src) {
    using T = typename decltype(src)::value_type;
    std::vector<T> out(n_out * row_len);
    // rows t..t+tau-1 are contiguous in the row-major source
    for (std::size_t t = 0; t < n_out; ++t)
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(t * dim), row_len,
                  out.begin() + static_cast<std::ptrdiff_t>(t * row_len));
    return out;
  };
  if (stream.precision() == Precision::fp32)
    return LogProbStream::from_fp32(n_out, row_len, embed(stream.fp32_data()), {}, meta);
  return LogProbStream::from_fp16_bits(n_out, row_len, embed(stream.fp16_data()), {}, meta);
}

RecurrenceMatrix::RecurrenceMatrix(std::size_t n) : n_(n), bits_((n * n + 63) / 64, 0) {}

void RecurrenceMatrix::set(std::size_t i, std::size_t j) {
  const std::size_t idx = i * n_ + j;
  bits_[idx / 64] |= std::uint64_t{1} << (idx % 64);
}

std::uint64_t RecurrenceMatrix::count_true() const {
  std::uint64_t total = 0;
  for (auto w : bits_) total += static_cast<std::uint64_t>(std::popcount(w));
  return total;
}

void RecurrenceMatrix::write_pgm(std::ostream& out, const std::string& comment) const {
  out << "P5\n";
  if (!comment.empty()) out << "# " << comment << "\n";
  out << n_ << ' ' << n_ << "\n255\n";
  std::string line(n_, '\0');
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) line[j] = at(i, j) ? '\0' : '\xff';
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
  }
}

void RecurrenceMatrix::write_csv(std::ostream& out, const std::string& comment) const {
  if (!comment.empty()) out << "# " << comment << "\n";
  out << "i,j\n";
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i + 1; j < n_; ++j)
      if (at(i, j)) out << i << ',' << j << '\n';
}

RecurrenceMatrix recurrence_matrix(const LogProbStream& stream, double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps))
    throw Error(ErrorCode::invalid_argument, "recurrence threshold must be finite and positive");
  require_finite(stream);
  const std::size_t n = stream.n_steps();
  const std::size_t dim = stream.dim();
  const std::vector<float> x = stream.to_fp32_values();
  const double eps2 = eps * eps;

  RecurrenceMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) {
    m.set(i, i);
    for (std::size_t j = i + 1; j < n; ++j) {
      if (static_cast<double>(squared_distance(&x[i * dim], &x[j * dim], dim)) < eps2) {
        m.set(i, j);
        m.set(j, i);
      }
    }
  }
  return m;
}

}  // namespace corrdim

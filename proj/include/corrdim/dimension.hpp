#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "corrdim/geometry.hpp"
#include "corrdim/lpstream.hpp"
#include "corrdim/reduce.hpp"

namespace corrdim {

struct GridOptions {
  std::size_t per_decade = 48;
  // Number of random pairs used to estimate the distance range; all pairs are
  // enumerated when there are fewer than this.
  std::size_t sample_pairs = std::size_t{1} << 20;
  std::uint64_t seed = 0x5eedc0deULL;
};

// Log-spaced grid lo * 10^(i / per_decade), i = 0 .. ceil(log10(hi/lo) * per_decade).
ThresholdGrid log_grid(double lo, double hi, std::size_t per_decade);

// Spans [0.5 * min nonzero distance, 2 * max distance] as estimated from the
// sampled pairs. Throws degenerate_point_set if every sampled distance is 0.
ThresholdGrid build_grid(const LogProbStream& stream, const GridOptions& options = {});

struct CorrelationIntegral {
  ThresholdGrid grid{std::vector<double>{1.0}};
  std::vector<double> s_values;  // S(eps_k) = 2 counts[k] / (N (N - 1))
  std::uint64_t n_steps = 0;
};

CorrelationIntegral correlation_integral(const LogProbStream& stream, const ThresholdGrid& grid,
                                         const CountOptions& options = {});
CorrelationIntegral correlation_integral_from_counts(const PairCounts& counts, const ThresholdGrid& grid,
                                                     std::uint64_t n_steps);

struct FitConfig {
  double eta = 1.0;
  // Lower clip S >= min_count / (N (N - 1)); 20 corresponds to ten unordered pairs.
  double min_count = 20.0;
  std::optional<double> eps_floor;
  std::size_t min_points = 8;

  void validate() const;
};

enum class FitStatus { ok, unfittable };

struct DimensionFit {
  FitStatus status = FitStatus::unfittable;
  double d = 0.0;
  double eps_lo = 0.0;
  double eps_hi = 0.0;
  std::size_t n_points = 0;
  double r2 = 0.0;
  double eta_used = 0.0;
  // Clip bounds actually applied, S in [s_lo, s_hi].
  double s_lo = 0.0;
  double s_hi = 0.0;
  std::string diagnostic;

  bool ok() const { return status == FitStatus::ok; }
};

// Slope of log S against log eps over the clipped window. An empty or too
// narrow window yields status unfittable rather than an exception.
DimensionFit fit_dimension(const CorrelationIntegral& ci, const FitConfig& config = {});

struct AnalyzeOptions {
  FitConfig fit;
  std::size_t tau = 1;
  std::optional<std::size_t> reduce_v;
  ReduceSpace reduce_space = ReduceSpace::probability;
  GridOptions grid;
  CountOptions count;
  // Entries below this value (including -inf) are clamped before geometry.
  std::optional<float> clamp_floor;
  // Use this grid instead of building one from the data.
  std::optional<ThresholdGrid> fixed_grid;
};

struct AnalysisReport {
  std::uint64_t n_steps = 0;  // rows analysed, after delay embedding
  std::uint64_t dim = 0;      // dimension analysed, after reduction and embedding
  CorrelationIntegral ci;
  PairCounts counts;
  DimensionFit fit;
  AnalyzeOptions options;
  StreamMeta meta;
};

AnalysisReport analyze(const LogProbStream& stream, const AnalyzeOptions& options = {});

}  // namespace corrdim

#include "corrdim/dimension.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "corrdim/error.hpp"
#include "corrdim/ols.hpp"
#include "corrdim/rng.hpp"

namespace corrdim {

ThresholdGrid log_grid(double lo, double hi, std::size_t per_decade) {
  if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi))
    throw Error(ErrorCode::invalid_argument, "log grid needs 0 < lo <= hi");
  if (per_decade < 1) throw Error(ErrorCode::invalid_argument, "grid points per decade must be >= 1");
  const auto steps = static_cast<std::size_t>(std::ceil(std::log10(hi / lo) * static_cast<double>(per_decade)));
  std::vector<double> eps(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i)
    eps[i] = lo * std::pow(10.0, static_cast<double>(i) / static_cast<double>(per_decade));
  return ThresholdGrid(std::move(eps));
}

ThresholdGrid build_grid(const LogProbStream& stream, const GridOptions& options) {
  const std::size_t n = stream.n_steps();
  if (n < 2) throw Error(ErrorCode::invalid_argument, "grid construction needs n_steps >= 2");
  require_finite(stream);

  const std::size_t dim = stream.dim();
  std::vector<float> a(dim), b(dim);
  float min_nonzero = std::numeric_limits<float>::infinity();
  float max_d2 = 0.0f;
  auto visit = [&](std::size_t i, std::size_t j) {
    stream.row(i, a);
    stream.row(j, b);
    const float d2 = squared_distance(a, b);
    if (d2 > 0.0f) min_nonzero = std::min(min_nonzero, d2);
    max_d2 = std::max(max_d2, d2);
  };

  const std::uint64_t total = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  if (total <= options.sample_pairs) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) visit(i, j);
  } else {
    Rng rng(options.seed);
    for (std::size_t s = 0; s < options.sample_pairs; ++s) {
      const auto i = static_cast<std::size_t>(rng.below(n));
      auto j = static_cast<std::size_t>(rng.below(n - 1));
      if (j >= i) ++j;
      visit(i, j);
    }
  }
  if (max_d2 == 0.0f || std::isinf(min_nonzero))
    throw Error(ErrorCode::degenerate_point_set, "degenerate point set: all sampled distances are zero");

  const double lo = 0.5 * std::sqrt(static_cast<double>(min_nonzero));
  const double hi = 2.0 * std::sqrt(static_cast<double>(max_d2));
  return log_grid(lo, hi, options.per_decade);
}

CorrelationIntegral correlation_integral_from_counts(const PairCounts& counts, const ThresholdGrid& grid,
                                                     std::uint64_t n_steps) {
  if (counts.counts.size() != grid.size())
    throw Error(ErrorCode::dimension_mismatch, "pair counts do not match the grid");
  CorrelationIntegral ci{grid, {}, n_steps};
  ci.s_values.resize(grid.size());
  const double denom = static_cast<double>(n_steps) * static_cast<double>(n_steps - 1);
  for (std::size_t k = 0; k < grid.size(); ++k)
    ci.s_values[k] = 2.0 * static_cast<double>(counts.counts[k]) / denom;
  return ci;
}

CorrelationIntegral correlation_integral(const LogProbStream& stream, const ThresholdGrid& grid,
                                         const CountOptions& options) {
  return correlation_integral_from_counts(count_pairs_fused(stream, grid, options), grid, stream.n_steps());
}

void FitConfig::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw Error(ErrorCode::invalid_argument, "eta must be > 0");
  if (!(min_count >= 2.0)) throw Error(ErrorCode::invalid_argument, "min_count must be >= 2");
  if (min_points < 2) throw Error(ErrorCode::invalid_argument, "min_points must be >= 2");
  if (eps_floor && !(*eps_floor > 0.0))
    throw Error(ErrorCode::invalid_argument, "eps_floor must be > 0");
}

namespace {

// Grid points eligible for the fit under the given upper coefficient.
std::vector<std::size_t> select_window(const CorrelationIntegral& ci, const FitConfig& config, double eta,
                                       double& s_lo, double& s_hi) {
  const double n = static_cast<double>(ci.n_steps);
  s_lo = config.min_count / (n * (n - 1.0));
  s_hi = eta / n;
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < ci.grid.size(); ++k) {
    const double s = ci.s_values[k];
    if (s < s_lo || s > s_hi || !(s > 0.0)) continue;
    if (config.eps_floor && ci.grid[k] < *config.eps_floor) continue;
    idx.push_back(k);
  }
  return idx;
}

}  // namespace

DimensionFit fit_dimension(const CorrelationIntegral& ci, const FitConfig& config) {
  config.validate();
  if (ci.grid.size() < 2) throw Error(ErrorCode::invalid_argument, "fit needs at least two grid points");
  if (ci.s_values.size() != ci.grid.size())
    throw Error(ErrorCode::dimension_mismatch, "S values do not match the grid");
  if (ci.n_steps < 2) throw Error(ErrorCode::invalid_argument, "fit needs n_steps >= 2");

  DimensionFit fit;
  double eta = config.eta;
  auto window = select_window(ci, config, eta, fit.s_lo, fit.s_hi);
  // Short sequences: widen the upper clip until the window is usable, never
  // past S = 0.5.
  const double eta_cap = 0.5 * static_cast<double>(ci.n_steps);
  while (window.size() < config.min_points && ci.n_steps < 500 && eta < eta_cap) {
    eta = std::min(2.0 * eta, eta_cap);
    window = select_window(ci, config, eta, fit.s_lo, fit.s_hi);
  }
  fit.eta_used = eta;
  fit.n_points = window.size();
  if (!window.empty()) {
    fit.eps_lo = ci.grid[window.front()];
    fit.eps_hi = ci.grid[window.back()];
  }

  if (window.size() < config.min_points) {
    std::ostringstream msg;
    msg << "unfittable: " << window.size() << " grid points in window S in [" << fit.s_lo << ", "
        << fit.s_hi << "]";
    if (config.eps_floor) msg << " with eps >= " << *config.eps_floor;
    msg << ", need " << config.min_points;
    fit.status = FitStatus::unfittable;
    fit.d = std::numeric_limits<double>::quiet_NaN();
    fit.r2 = std::numeric_limits<double>::quiet_NaN();
    fit.diagnostic = msg.str();
    return fit;
  }

  std::vector<double> x, y;
  x.reserve(window.size());
  y.reserve(window.size());
  for (std::size_t k : window) {
    x.push_back(std::log(ci.grid[k]));
    y.push_back(std::log(ci.s_values[k]));
  }
  const LineFit line = ols_fit(x, y);
  fit.status = FitStatus::ok;
  fit.d = line.slope;
  fit.r2 = line.r2;
  return fit;
}

AnalysisReport analyze(const LogProbStream& stream, const AnalyzeOptions& options) {
  const LogProbStream* current = &stream;
  LogProbStream clamped, reduced, embedded;
  if (options.reduce_v) {
    reduced = project_stream(ModuloProjection(current->dim(), *options.reduce_v), *current,
                             options.reduce_space);
    current = &reduced;
  }
  if (options.clamp_floor) {
    clamped = clamp_below(*current, *options.clamp_floor);
    current = &clamped;
  }
  if (options.tau < 1) throw Error(ErrorCode::invalid_argument, "tau must be >= 1");
  if (options.tau != 1) {
    embedded = delay_embed(*current, options.tau);
    current = &embedded;
  }

  const ThresholdGrid grid = options.fixed_grid ? *options.fixed_grid : build_grid(*current, options.grid);
  AnalysisReport report;
  report.n_steps = current->n_steps();
  report.dim = current->dim();
  report.counts = count_pairs_fused(*current, grid, options.count);
  report.ci = correlation_integral_from_counts(report.counts, grid, current->n_steps());
  report.fit = fit_dimension(report.ci, options.fit);
  report.options = options;
  report.meta = stream.meta();
  return report;
}

}  // namespace corrdim

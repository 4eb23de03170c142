// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "corrdim/dimension.hpp"
#include "corrdim/geometry.hpp"
#include "corrdim/reduce.hpp"
#include "corrdim/rng.hpp"
#include "corrdim/synth.hpp"
#include "corrdim/textstats.hpp"
#include "oracles.hpp"

using namespace corrdim;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct RecordedFit {
  std::string label;
  CorrelationIntegral ci;
  FitConfig config;
  DimensionFit fit;
};

std::vector<RecordedFit> g_fits;

DimensionFit record(const std::string& label, const CorrelationIntegral& ci, const FitConfig& cfg) {
  auto fit = fit_dimension(ci, cfg);
  g_fits.push_back({label, ci, cfg, fit});
  return fit;
}

struct Analysis {
  CorrelationIntegral ci;
  DimensionFit fit;
};

Analysis analyze_recorded(const std::string& label, const LogProbStream& s, const FitConfig& cfg = {},
                          std::size_t tau = 1) {
  AnalyzeOptions opt;
  opt.fit = cfg;
  opt.tau = tau;
  const auto r = analyze(s, opt);
  g_fits.push_back({label, r.ci, cfg, r.fit});
  return {r.ci, r.fit};
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream o;
  o.precision(prec);
  o << v;
  return o.str();
}

std::string fit_str(const DimensionFit& f) {
  if (!f.ok()) return "unfittable";
  return "d=" + fmt(f.d) + " (" + std::to_string(f.n_points) + " pts)";
}

LogProbStream uniform_cube(std::size_t n, std::size_t m, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(n * m);
  for (auto& x : v) x = static_cast<float>(rng.uniform());
  return LogProbStream::from_fp32(n, m, std::move(v));
}

oracle::Points to_points(const LogProbStream& s) {
  oracle::Points p{s.n_steps(), s.dim(), {}};
  p.x.reserve(s.n_steps() * s.dim());
  for (float v : s.to_fp32_values()) p.x.push_back(v);
  return p;
}

struct Outcome {
  bool pass;
  std::string detail;
};

// ------------------------------------------------------------------ criteria

Outcome fused_naive() {
  const auto t0 = Clock::now();
  Rng rng(20240601);
  std::size_t streams = 0, comparisons = 0;
  std::string first_bad;
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 2 + rng.below(1999);
    const std::size_t d = 1 + rng.below(128);
    const float scale = static_cast<float>(std::ldexp(1.0, static_cast<int>(rng.below(20)) - 10));
    std::vector<float> v(n * d);
    const bool lattice = rep % 5 == 0;  // integer coordinates force exact ties
    for (auto& x : v) x = lattice ? static_cast<float>(rng.below(4)) : scale * static_cast<float>(rng.normal());
    const auto s = LogProbStream::from_fp32(n, d, std::move(v));

    // thresholds placed exactly on realized pair distances plus a log sweep
    std::vector<double> eps;
    std::vector<float> a(d), b(d);
    for (int k = 0; k < 12; ++k) {
      const auto i = rng.below(n);
      auto j = rng.below(n - 1);
      if (j >= i) ++j;
      s.row(i, a);
      s.row(j, b);
      const double dist = std::sqrt(double(squared_distance(a, b)));
      if (dist > 0.0) eps.push_back(dist);
    }
    const double base = scale * std::sqrt(double(d)) * (lattice ? 1.0 / scale : 1.0);
    for (int k = 0; k < 12; ++k) eps.push_back(base * std::pow(10.0, -1.5 + k * 0.2));
    std::sort(eps.begin(), eps.end());
    eps.erase(std::unique(eps.begin(), eps.end()), eps.end());
    const ThresholdGrid grid(eps);

    const auto naive = count_pairs_naive(s, grid);
    for (std::size_t tile : {std::size_t{1}, std::size_t{7}, std::size_t{64}, std::size_t{512}, n + 3}) {
      ++comparisons;
      if (!(count_pairs_fused(s, grid, {tile, 0}) == naive) && first_bad.empty())
        first_bad = "N=" + std::to_string(n) + " D=" + std::to_string(d) + " tile=" + std::to_string(tile);
    }
    ++streams;
  }
  const double secs = seconds_since(t0);
  const bool ok = first_bad.empty() && secs < 60.0;
  return {ok, std::to_string(streams) + " streams, " + std::to_string(comparisons) + " tile runs, " +
                  fmt(secs, 3) + " s" + (first_bad.empty() ? "" : ", mismatch at " + first_bad)};
}

Outcome geometric_suite() {
  const auto t0 = Clock::now();
  const std::size_t dims[] = {1, 2, 3, 5};
  const double tol[] = {0.15, 0.2, 0.3, -1.0};
  std::vector<double> d;
  bool ok = true;
  std::string detail;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto r = analyze_recorded("uniform m=" + std::to_string(dims[i]), uniform_cube(10000, dims[i], 100 + i));
    if (!r.fit.ok()) {
      ok = false;
      d.push_back(std::nan(""));
    } else {
      d.push_back(r.fit.d);
    }
    if (tol[i] > 0 && !(std::abs(d.back() - double(dims[i])) <= tol[i])) ok = false;
    detail += "m=" + std::to_string(dims[i]) + ": " + fmt(d.back()) + "  ";
  }
  const bool monotone = d[0] < d[1] && d[1] < d[2] && d[2] < d[3];
  const double secs = seconds_since(t0);
  ok = ok && monotone && secs < 120.0;
  return {ok, detail + (monotone ? "monotone" : "NOT monotone") + ", " + fmt(secs, 3) + " s"};
}

Outcome cantor() {
  // 32 ternary digits in {0, 2} as four FP32 coordinates of eight digits,
  // each digit at its global place value 3^-i
  const std::size_t n = 10000;
  Rng rng(31337);
  std::vector<float> v(n * 4);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t b = 0; b < 4; ++b) {
      double c = 0.0;
      for (int i = 1; i <= 8; ++i) c += 2.0 * double(rng.below(2)) * std::pow(3.0, -double(8 * b + i));
      v[t * 4 + b] = static_cast<float>(c);
    }
  const auto r = analyze_recorded("cantor", LogProbStream::from_fp32(n, 4, std::move(v)));
  const double target = std::log(2.0) / std::log(3.0);
  const bool ok = r.fit.ok() && std::abs(r.fit.d - target) <= 0.05;
  return {ok, fit_str(r.fit) + ", target " + fmt(target)};
}

// Brownian trail window: eps above two step lengths, S up to 0.01.
FitConfig brownian_config(std::size_t n, std::size_t dim, double sigma, std::size_t tau) {
  FitConfig cfg;
  cfg.eps_floor = 2.0 * sigma * std::sqrt(double(dim) * double(tau));
  cfg.eta = double(n) / 100.0;
  return cfg;
}

struct BrownianResult {
  Analysis plain;
  Analysis delayed;
  bool built = false;
};

BrownianResult g_brownian;

const BrownianResult& brownian_fixture() {
  if (g_brownian.built) return g_brownian;
  const std::size_t n = 20000, dim = 16;
  const auto s = gen_random_walk_stream(dim, n, 1.0, 77);
  g_brownian.plain = analyze_recorded("brownian", s, brownian_config(n, dim, 1.0, 1));
  g_brownian.delayed = analyze_recorded("brownian tau=3", s, brownian_config(n, dim, 1.0, 3), 3);
  g_brownian.built = true;
  return g_brownian;
}

Outcome brownian() {
  const auto& b = brownian_fixture();
  const auto& f = b.plain.fit;
  bool ok = f.ok() && std::abs(f.d - 2.0) <= 0.3;

  // independent double-precision check of the same curve and window
  const auto s = gen_random_walk_stream(16, 20000, 1.0, 77);
  const std::vector<double> eps(b.plain.ci.grid.eps().begin(), b.plain.ci.grid.eps().end());
  const auto ref_s = oracle::correlation_sum(to_points(s), eps);
  double max_rel = 0.0;
  for (std::size_t k = 0; k < eps.size(); ++k)
    if (ref_s[k] > 0) max_rel = std::max(max_rel, std::abs(b.plain.ci.s_values[k] - ref_s[k]) / ref_s[k]);
  const double ref_d = oracle::clipped_slope(eps, ref_s, f.s_lo, f.s_hi, *brownian_config(20000, 16, 1.0, 1).eps_floor);
  ok = ok && std::abs(ref_d - f.d) < 0.02;

  // default window, for information only
  const auto dflt = fit_dimension(b.plain.ci, FitConfig{});
  return {ok, fit_str(f) + " window eps in [" + fmt(f.eps_lo) + ", " + fmt(f.eps_hi) + "], oracle d=" +
                  fmt(ref_d) + ", max rel S diff " + fmt(max_rel, 2) + "; default window gives " + fit_str(dflt)};
}

Outcome finite_state() {
  const auto markov = gen_markov_stream(MarkovSpec::random(3, 1, 5, 6), 20000);
  AnalyzeOptions opt;
  const auto mr = analyze(markov, opt);
  g_fits.push_back({"markov", mr.ci, opt.fit, mr.fit});
  const bool markov_ok = !mr.fit.ok() || mr.fit.d <= 0.3;

  const auto polya = gen_polya_stream({.initial_counts = {1.0, 1.0}, .seed = 12}, 20000);
  const auto pr = analyze_recorded("polya", polya);
  const bool polya_ok = pr.fit.ok() && pr.fit.d < 2.0;
  return {markov_ok && polya_ok, "3-state markov " + fit_str(mr.fit) + (mr.fit.ok() ? "" : " (" + mr.fit.diagnostic + ")") +
                                     "; polya " + fit_str(pr.fit)};
}

Outcome power_law_recovery() {
  // exact S = eps^2 on a dense grid; the window is set by the clips alone
  const std::uint64_t n = 100000;
  const auto grid = log_grid(1e-6, 1.0, 48);
  CorrelationIntegral ci{grid, {}, n};
  for (double e : grid.eps()) ci.s_values.push_back(e * e);
  const auto f = record("power law", ci, FitConfig{});
  const bool ok = f.ok() && std::abs(f.d - 2.0) <= 1e-6;
  return {ok, "|d - 2| = " + fmt(std::abs(f.d - 2.0), 3)};
}

Outcome clip_law() {
  std::size_t checked = 0;
  std::string bad;
  for (const auto& r : g_fits) {
    const auto& f = r.fit;
    const double n = double(r.ci.n_steps);
    bool ok = f.s_lo == 20.0 / (n * (n - 1.0)) && f.s_hi == f.eta_used / n;
    if (r.ci.n_steps >= 500) ok = ok && f.eta_used == r.config.eta;
    if (f.ok()) {
      std::size_t inside = 0;
      for (std::size_t k = 0; k < r.ci.grid.size(); ++k) {
        if (r.ci.grid[k] < f.eps_lo || r.ci.grid[k] > f.eps_hi) continue;
        ++inside;
        const double s = r.ci.s_values[k];
        ok = ok && s >= 20.0 / (n * (n - 1.0)) && s <= f.eta_used / n;
      }
      ok = ok && inside == f.n_points;
    }
    ++checked;
    if (!ok && bad.empty()) bad = r.label;
  }
  return {bad.empty() && checked > 0,
          std::to_string(checked) + " fits checked" + (bad.empty() ? "" : ", violated by " + bad)};
}

Outcome modulo_projection() {
  Rng rng(99);
  const std::size_t omega = 1000;
  std::string detail;

  // identity at v = omega in log mode, bit for bit
  std::vector<float> v(50 * omega);
  for (auto& x : v) x = static_cast<float>(rng.normal() * 5.0 - 10.0);
  const auto s = LogProbStream::from_fp32(50, omega, v);
  const auto ident = project_stream(ModuloProjection(omega, omega), s, ReduceSpace::log_probability);
  const bool identity = ident.to_fp32_values() == v;

  // linearity, relative to the scale of the terms
  ModuloProjection p(omega, 64);
  double worst_lin = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<float> x(omega), y(omega), z(omega);
    for (auto& e : x) e = static_cast<float>(rng.normal());
    for (auto& e : y) e = static_cast<float>(rng.normal());
    const float a = static_cast<float>(rng.normal()), b = static_cast<float>(rng.normal());
    for (std::size_t k = 0; k < omega; ++k) z[k] = a * x[k] + b * y[k];
    const auto px = p.project(x), py = p.project(y), pz = p.project(z);
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < 64; ++j) {
      const double r = double(pz[j]) - (double(a) * px[j] + double(b) * py[j]);
      num += r * r;
      den += std::pow(std::abs(double(a) * px[j]) + std::abs(double(b) * py[j]), 2);
    }
    worst_lin = std::max(worst_lin, std::sqrt(num / den));
  }

  // probability mass conservation
  std::vector<float> lp(100 * omega);
  for (std::size_t t = 0; t < 100; ++t) {
    double z = 0.0;
    for (std::size_t k = 0; k < omega; ++k) {
      lp[t * omega + k] = static_cast<float>(3.0 * rng.normal());
      z += std::exp(double(lp[t * omega + k]));
    }
    for (std::size_t k = 0; k < omega; ++k) lp[t * omega + k] -= static_cast<float>(std::log(z));
  }
  const auto ls = LogProbStream::from_fp32(100, omega, lp, {}, {}, true);
  double worst_mass = 0.0;
  for (std::size_t width : {1, 7, 64, 999}) {
    const auto r = project_stream(ModuloProjection(omega, width), ls, ReduceSpace::probability);
    for (std::size_t t = 0; t < 100; ++t) {
      double before = 0.0, after = 0.0;
      for (std::size_t k = 0; k < omega; ++k) before += std::exp(double(ls.value(t, k)));
      for (std::size_t j = 0; j < width; ++j) after += std::exp(double(r.value(t, j)));
      worst_mass = std::max(worst_mass, std::abs(after - before));
    }
  }

  // norm bound
  std::size_t bound_fail = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t width = 1 + rng.below(omega);
    std::vector<float> x(omega);
    for (auto& e : x) e = static_cast<float>(rng.normal());
    const auto y = ModuloProjection(omega, width).project(x);
    double nx = 0.0, ny = 0.0;
    for (float e : x) nx += double(e) * e;
    for (float e : y) ny += double(e) * e;
    const double bound = std::sqrt(std::ceil(double(omega) / double(width)) * nx);
    if (std::sqrt(ny) > bound * (1.0 + 1e-6)) ++bound_fail;
  }

  const bool ok = identity && worst_lin <= 1e-6 && worst_mass <= 1e-5 && bound_fail == 0;
  return {ok, std::string("identity ") + (identity ? "exact" : "BROKEN") + ", linearity " + fmt(worst_lin, 3) +
                  ", mass " + fmt(worst_mass, 3) + ", norm bound failures " + std::to_string(bound_fail) + "/1000"};
}

Outcome delay_embedding() {
  Rng rng(5);
  const auto s = gen_gaussian_stream(24, 300, 9);
  const std::size_t tau = 4;
  const auto e = delay_embed(s, tau);
  std::vector<float> a(s.dim()), b(s.dim()), ea(e.dim()), eb(e.dim());
  double worst = 0.0;
  for (int rep = 0; rep < 2000; ++rep) {
    const auto i = rng.below(e.n_steps()), j = rng.below(e.n_steps());
    double sum = 0.0;
    for (std::size_t l = 0; l < tau; ++l) {
      s.row(i + l, a);
      s.row(j + l, b);
      for (std::size_t k = 0; k < s.dim(); ++k) sum += (double(a[k]) - b[k]) * (double(a[k]) - b[k]);
    }
    e.row(i, ea);
    e.row(j, eb);
    const double got = squared_distance(ea, eb);
    if (sum > 0) worst = std::max(worst, std::abs(got - sum) / sum);
  }
  const bool tau1 = delay_embed(s, 1).to_fp32_values() == s.to_fp32_values();

  const auto& bf = brownian_fixture();
  // every delayed distance dominates the undelayed one, so counts can only drop
  const auto grid = bf.plain.ci.grid;
  const auto walk = gen_random_walk_stream(16, 20000, 1.0, 77);
  const auto c1 = count_pairs_fused(walk, grid);
  const auto c3 = count_pairs_fused(delay_embed(walk, 3), grid);
  bool right = true;
  for (std::size_t k = 0; k < grid.size(); ++k) right = right && c3.counts[k] <= c1.counts[k];
  const double shift = bf.delayed.fit.ok() && bf.plain.fit.ok() ? std::abs(bf.delayed.fit.d - bf.plain.fit.d)
                                                                 : std::numeric_limits<double>::infinity();
  const bool ok = worst <= 1e-5 && tau1 && right && shift <= 0.4;
  return {ok, "distance identity rel err " + fmt(worst, 3) + ", tau=1 " + (tau1 ? "exact" : "BROKEN") +
                  ", curve " + (right ? "shifted right" : "NOT shifted right") + ", d tau=1 " + fit_str(bf.plain.fit) +
                  " vs tau=3 " + fit_str(bf.delayed.fit)};
}

Outcome repetition_metrics() {
  const auto toks = tokenize(gen_repetition_text("01", 1000), Tokenization::character);
  const double rep2 = rep_n(toks, 2);
  Rng rng(4);
  std::size_t exact = 0;
  for (int rep = 0; rep < 100; ++rep) {
    TokenSequence t(5 + rng.below(2000));
    const auto vocab = 1 + rng.below(50);
    for (auto& x : t) x = static_cast<std::int64_t>(rng.below(vocab));
    const std::size_t n = 1 + rng.below(4);
    exact += rep_n(t, n) + distinct_n(t, n) == 1.0;
  }
  return {toks.size() == 1000 && rep2 >= 0.98 && exact == 100,
          "rep_2=" + fmt(rep2) + ", sum exactly 1 on " + std::to_string(exact) + "/100"};
}

Outcome uniform_rows() {
  double worst_ppl = 0.0, worst_h = 0.0;
  for (std::size_t d : {2, 3, 10, 100, 1000, 50000}) {
    const std::size_t n = 64;
    std::vector<float> v(n * d, static_cast<float>(-std::log(double(d))));
    std::vector<std::uint32_t> ids(n);
    for (std::size_t t = 0; t < n; ++t) ids[t] = static_cast<std::uint32_t>((t * 7919) % d);
    const auto s = LogProbStream::from_fp32(n, d, std::move(v), ids, {}, true);
    // relative for the perplexity, whose scale is D
    worst_ppl = std::max(worst_ppl, std::abs(perplexity(s) - double(d)) / double(d));
    worst_h = std::max(worst_h, std::abs(conditional_entropy(s) - std::log(double(d))));
  }
  return {worst_ppl <= 1e-4 && worst_h <= 1e-6,
          "perplexity rel err " + fmt(worst_ppl, 3) + ", entropy abs err " + fmt(worst_h, 3)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {"fused/naive equivalence", fused_naive},
      {"geometric oracle suite", geometric_suite},
      {"cantor measure", cantor},
      {"brownian trail", brownian},
      {"finite-state oracles", finite_state},
      {"power law recovery", power_law_recovery},
      {"modulo projection", modulo_projection},
      {"delay embedding", delay_embedding},
      {"rep-2 and rep+distinct", repetition_metrics},
      {"uniform-row perplexity and entropy", uniform_rows},
      // last, so it sees every fit made above
      {"fit window clip law", clip_law},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s  %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria failed\n", failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}

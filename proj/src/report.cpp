#include "corrdim/report.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "corrdim/error.hpp"

namespace corrdim {

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["command_line"] = command_line;
  j["config"] = config;
  j["input_digests"] = input_digests;
  j["library_version"] = library_version;
  j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
  j["timestamp"] = timestamp;
  return j;
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  std::uint64_t h = 14695981039346656037ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return std::string("fnv1a64:") + out;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

namespace {

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json fit_to_json(const DimensionFit& fit) {
  nlohmann::json j;
  j["status"] = fit.ok() ? "ok" : "unfittable";
  j["d"] = fit.ok() ? number_or_null(fit.d) : nlohmann::json(nullptr);
  j["window"] = fit.n_points > 0 ? nlohmann::json::array({fit.eps_lo, fit.eps_hi}) : nlohmann::json(nullptr);
  j["n_points"] = fit.n_points;
  j["r2"] = number_or_null(fit.r2);
  j["eta_used"] = fit.eta_used;
  j["s_bounds"] = {fit.s_lo, fit.s_hi};
  j["estimator"] = "ols log S vs log eps, unweighted";
  if (!fit.diagnostic.empty()) j["diagnostic"] = fit.diagnostic;
  return j;
}

nlohmann::json config_to_json(const AnalyzeOptions& o) {
  nlohmann::json j;
  j["eta"] = o.fit.eta;
  j["min_count"] = o.fit.min_count;
  j["eps_floor"] = o.fit.eps_floor ? nlohmann::json(*o.fit.eps_floor) : nlohmann::json(nullptr);
  j["min_points"] = o.fit.min_points;
  j["tau"] = o.tau;
  j["reduce_v"] = o.reduce_v ? nlohmann::json(*o.reduce_v) : nlohmann::json(nullptr);
  j["reduce_space"] = std::string(to_string(o.reduce_space));
  j["grid_per_decade"] = o.grid.per_decade;
  j["grid_sample_pairs"] = o.grid.sample_pairs;
  j["grid_seed"] = o.grid.seed;
  j["tile"] = o.count.tile;
  j["clamp_floor"] = o.clamp_floor ? nlohmann::json(*o.clamp_floor) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json report_to_json(const AnalysisReport& r) {
  nlohmann::json j;
  j["n_steps"] = r.n_steps;
  j["dim"] = r.dim;
  j["grid"] = std::vector<double>(r.ci.grid.eps().begin(), r.ci.grid.eps().end());
  j["s_values"] = r.ci.s_values;
  j["pair_counts"] = r.counts.counts;
  j["n_pairs"] = r.counts.n_pairs;
  const auto fit = fit_to_json(r.fit);
  for (const auto& key : {"status", "d", "window", "n_points", "r2", "eta_used", "s_bounds", "estimator"})
    j[key] = fit[key];
  if (fit.contains("diagnostic")) j["diagnostic"] = fit["diagnostic"];
  j["tau"] = r.options.tau;
  j["reduce_v"] = r.options.reduce_v ? nlohmann::json(*r.options.reduce_v) : nlohmann::json(nullptr);
  j["reduce_space"] = std::string(to_string(r.options.reduce_space));
  j["config"] = config_to_json(r.options);
  j["meta"] = r.meta.to_json();
  return j;
}

void write_ci_csv(const CorrelationIntegral& ci, std::ostream& out) {
  out << "# n_steps=" << ci.n_steps << "\n";
  out << "eps,S\n";
  out << std::setprecision(17);
  for (std::size_t k = 0; k < ci.grid.size(); ++k) out << ci.grid[k] << ',' << ci.s_values[k] << '\n';
}

CorrelationIntegral read_ci_csv(std::istream& in, std::optional<std::uint64_t> n_steps) {
  std::optional<std::uint64_t> header_n;
  std::vector<double> eps, s;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      constexpr std::string_view key = "# n_steps=";
      if (line.compare(0, key.size(), key) == 0) header_n = std::stoull(line.substr(key.size()));
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw Error(ErrorCode::invalid_argument, "CSV line " + std::to_string(line_no) + " has no comma");
    try {
      std::size_t used = 0;
      const double e = std::stod(line.substr(0, comma), &used);
      const double v = std::stod(line.substr(comma + 1));
      eps.push_back(e);
      s.push_back(v);
    } catch (const std::logic_error&) {
      if (eps.empty() && s.empty()) continue;  // header row
      throw Error(ErrorCode::invalid_argument, "CSV line " + std::to_string(line_no) + " is not numeric");
    }
  }
  const auto n = n_steps ? n_steps : header_n;
  if (!n) throw Error(ErrorCode::invalid_argument, "CSV lacks '# n_steps=' and no n_steps was given");
  if (eps.size() < 2) throw Error(ErrorCode::invalid_argument, "CSV needs at least two (eps, S) rows");
  CorrelationIntegral ci{ThresholdGrid(std::move(eps)), std::move(s), *n};
  return ci;
}

}  // namespace corrdim

#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "corrdim/dimension.hpp"
#include "json.hpp"

namespace corrdim {

inline constexpr const char* kLibraryVersion = "0.1.0";

// Provenance embedded in every CLI artifact. `command_line` is the canonical
// invocation rebuilt from the resolved configuration, so equivalent flag
// spellings produce the same manifest.
struct RunManifest {
  std::string command_line;
  nlohmann::json config = nlohmann::json::object();
  std::map<std::string, std::string> input_digests;
  std::string library_version = kLibraryVersion;
  std::optional<std::uint64_t> seed;
  std::string timestamp;

  nlohmann::json to_json() const;
};

// FNV-1a 64-bit over the file bytes, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);
std::string utc_timestamp();

nlohmann::json fit_to_json(const DimensionFit& fit);
nlohmann::json config_to_json(const AnalyzeOptions& options);

// {n_steps, dim, grid[], s_values[], d, window, r2, eta_used, tau, reduce_v, meta, ...}
nlohmann::json report_to_json(const AnalysisReport& report);

// "# n_steps=N" followed by "eps,S" rows at full double precision.
void write_ci_csv(const CorrelationIntegral& ci, std::ostream& out);
// Accepts the format above; `n_steps` overrides (or supplies) the header value.
CorrelationIntegral read_ci_csv(std::istream& in, std::optional<std::uint64_t> n_steps = {});

}  // namespace corrdim

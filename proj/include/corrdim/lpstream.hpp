#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace corrdim {

enum class Precision : std::uint8_t { fp32, fp16 };

// How much context each next-token distribution was conditioned on.
class ContextMode {
 public:
  static ContextMode window(std::uint64_t tokens);
  static ContextMode unbounded() { return ContextMode{}; }

  // Accepts "window:<c>" or "unbounded".
  static ContextMode parse(std::string_view text);

  bool is_window() const { return window_.has_value(); }
  std::uint64_t window_length() const;
  std::string to_string() const;

  bool operator==(const ContextMode&) const = default;

 private:
  std::optional<std::uint64_t> window_;
};

// Provenance carried in the LPRS JSON blob. Keys other than the four known
// ones are preserved verbatim in `extra`.
struct StreamMeta {
  std::string model;
  std::optional<ContextMode> context;
  std::optional<std::uint64_t> reduction;  // nullopt means the full vocabulary
  std::string tokenizer;
  nlohmann::json extra = nlohmann::json::object();

  nlohmann::json to_json() const;
  static StreamMeta from_json(const nlohmann::json& j);

  bool operator==(const StreamMeta&) const = default;
};

// N x D matrix of natural-log probabilities, one row per time step. Rows are
// stored either as FP32 or as raw binary16 bit patterns; every arithmetic
// consumer reads them back as FP32. Immutable once built.
class LogProbStream {
 public:
  LogProbStream() = default;

  static LogProbStream from_fp32(std::size_t n_steps, std::size_t dim,
                                 std::vector<float> values,
                                 std::optional<std::vector<std::uint32_t>> token_ids = {},
                                 StreamMeta meta = {}, bool normalized = false);

  static LogProbStream from_fp16_bits(std::size_t n_steps, std::size_t dim,
                                      std::vector<std::uint16_t> bits,
                                      std::optional<std::vector<std::uint32_t>> token_ids = {},
                                      StreamMeta meta = {}, bool normalized = false);

  std::size_t n_steps() const { return n_steps_; }
  std::size_t dim() const { return dim_; }
  Precision precision() const { return precision_; }
  bool normalized() const { return normalized_; }
  bool has_token_ids() const { return token_ids_.has_value(); }
  std::span<const std::uint32_t> token_ids() const;
  const StreamMeta& meta() const { return meta_; }

  float value(std::size_t t, std::size_t k) const;
  // Upcasts row t into `out` (size dim).
  void row(std::size_t t, std::span<float> out) const;
  // Direct view of the payload; throws if the precision does not match.
  std::span<const float> fp32_data() const;
  std::span<const std::uint16_t> fp16_data() const;

  // Whole payload as FP32 (copy for FP16 streams).
  std::vector<float> to_fp32_values() const;
  LogProbStream to_precision(Precision p) const;

  LogProbStream with_meta(StreamMeta meta) const;
  LogProbStream with_normalized(bool normalized) const;
  LogProbStream without_token_ids() const;

  // Bit-exact comparison of every field.
  bool operator==(const LogProbStream& other) const;

 private:
  std::size_t n_steps_ = 0;
  std::size_t dim_ = 0;
  Precision precision_ = Precision::fp32;
  bool normalized_ = false;
  std::vector<float> f32_;
  std::vector<std::uint16_t> f16_;
  std::optional<std::vector<std::uint32_t>> token_ids_;
  StreamMeta meta_;
};

struct NormalizationReport {
  double max_abs_logsumexp = 0.0;
  std::size_t worst_row = 0;
};

// max_t |logsumexp(x_t)| in FP32 with the max-shift trick.
NormalizationReport validate_normalization(const LogProbStream& stream);

inline constexpr double kNormalizationTolerance = 1e-3;

// Checks every stream invariant: no NaN, token ids in range, and the
// normalization bound when the stream is flagged normalized. Throws Error.
void validate_stream(const LogProbStream& stream);

// Replaces every entry below `floor` (including -inf) with `floor`.
LogProbStream clamp_below(const LogProbStream& stream, float floor);

// LPRS binary format.
inline constexpr std::uint32_t kLprsVersion = 1;

std::uint64_t write_stream(const LogProbStream& stream, std::ostream& out);
LogProbStream read_stream(std::istream& in);

std::uint64_t write_stream_file(const LogProbStream& stream, const std::filesystem::path& path);
LogProbStream read_stream_file(const std::filesystem::path& path);

}  // namespace corrdim

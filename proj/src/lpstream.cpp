#include "corrdim/lpstream.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "corrdim/error.hpp"
#include "corrdim/half.hpp"

namespace corrdim {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::io: return "io";
    case ErrorCode::bad_magic: return "bad_magic";
    case ErrorCode::unsupported_version: return "unsupported_version";
    case ErrorCode::truncated_payload: return "truncated_payload";
    case ErrorCode::invalid_entry: return "invalid_entry";
    case ErrorCode::invariant_violation: return "invariant_violation";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::infinite_entry: return "infinite_entry";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::degenerate_point_set: return "degenerate_point_set";
    case ErrorCode::missing_token_ids: return "missing_token_ids";
  }
  return "unknown";
}

// ---------------------------------------------------------------- ContextMode

ContextMode ContextMode::window(std::uint64_t tokens) {
  if (tokens < 1) throw Error(ErrorCode::invalid_argument, "context window must be >= 1");
  ContextMode m;
  m.window_ = tokens;
  return m;
}

ContextMode ContextMode::parse(std::string_view text) {
  if (text == "unbounded") return unbounded();
  constexpr std::string_view prefix = "window:";
  if (text.substr(0, prefix.size()) == prefix) {
    const std::string digits(text.substr(prefix.size()));
    if (!digits.empty() && std::all_of(digits.begin(), digits.end(), [](char c) {
          return c >= '0' && c <= '9';
        })) {
      return window(std::stoull(digits));
    }
  }
  throw Error(ErrorCode::invalid_argument,
              "context mode must be 'window:<c>' or 'unbounded', got '" + std::string(text) + "'");
}

std::uint64_t ContextMode::window_length() const {
  if (!window_) throw Error(ErrorCode::invalid_argument, "context mode is unbounded");
  return *window_;
}

std::string ContextMode::to_string() const {
  return window_ ? "window:" + std::to_string(*window_) : "unbounded";
}

// ----------------------------------------------------------------- StreamMeta

nlohmann::json StreamMeta::to_json() const {
  nlohmann::json j = extra.is_object() ? extra : nlohmann::json::object();
  j["model"] = model;
  j["tokenizer"] = tokenizer;
  if (context) j["context"] = context->to_string();
  if (reduction) {
    j["reduction"] = *reduction;
  } else {
    j["reduction"] = "full";
  }
  return j;
}

StreamMeta StreamMeta::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::invariant_violation, "stream meta must be a JSON object");
  StreamMeta m;
  m.extra = nlohmann::json::object();
  for (const auto& [key, value] : j.items()) {
    if (key == "model") {
      m.model = value.get<std::string>();
    } else if (key == "tokenizer") {
      m.tokenizer = value.get<std::string>();
    } else if (key == "context") {
      m.context = ContextMode::parse(value.get<std::string>());
    } else if (key == "reduction") {
      if (value.is_string()) {
        if (value.get<std::string>() != "full")
          throw Error(ErrorCode::invariant_violation, "meta.reduction must be an integer or \"full\"");
      } else {
        m.reduction = value.get<std::uint64_t>();
      }
    } else {
      m.extra[key] = value;
    }
  }
  return m;
}

// -------------------------------------------------------------- LogProbStream

namespace {

void check_shape(std::size_t n_steps, std::size_t dim, std::size_t payload,
                 const std::optional<std::vector<std::uint32_t>>& ids) {
  if (n_steps == 0 || dim == 0)
    throw Error(ErrorCode::invariant_violation, "stream must have n_steps >= 1 and dim >= 1");
  if (dim > std::numeric_limits<std::size_t>::max() / n_steps || payload != n_steps * dim)
    throw Error(ErrorCode::dimension_mismatch, "payload size does not equal n_steps * dim");
  if (ids && ids->size() != n_steps)
    throw Error(ErrorCode::dimension_mismatch, "token_ids length does not equal n_steps");
}

}  // namespace

LogProbStream LogProbStream::from_fp32(std::size_t n_steps, std::size_t dim,
                                       std::vector<float> values,
                                       std::optional<std::vector<std::uint32_t>> token_ids,
                                       StreamMeta meta, bool normalized) {
  check_shape(n_steps, dim, values.size(), token_ids);
  LogProbStream s;
  s.n_steps_ = n_steps;
  s.dim_ = dim;
  s.precision_ = Precision::fp32;
  s.normalized_ = normalized;
  s.f32_ = std::move(values);
  s.token_ids_ = std::move(token_ids);
  s.meta_ = std::move(meta);
  validate_stream(s);
  return s;
}

LogProbStream LogProbStream::from_fp16_bits(std::size_t n_steps, std::size_t dim,
                                            std::vector<std::uint16_t> bits,
                                            std::optional<std::vector<std::uint32_t>> token_ids,
                                            StreamMeta meta, bool normalized) {
  check_shape(n_steps, dim, bits.size(), token_ids);
  LogProbStream s;
  s.n_steps_ = n_steps;
  s.dim_ = dim;
  s.precision_ = Precision::fp16;
  s.normalized_ = normalized;
  s.f16_ = std::move(bits);
  s.token_ids_ = std::move(token_ids);
  s.meta_ = std::move(meta);
  validate_stream(s);
  return s;
}

std::span<const std::uint32_t> LogProbStream::token_ids() const {
  if (!token_ids_) throw Error(ErrorCode::missing_token_ids, "stream has no token_ids");
  return *token_ids_;
}

float LogProbStream::value(std::size_t t, std::size_t k) const {
  const std::size_t idx = t * dim_ + k;
  return precision_ == Precision::fp32 ? f32_[idx] : half_to_float(f16_[idx]);
}

void LogProbStream::row(std::size_t t, std::span<float> out) const {
  if (out.size() != dim_) throw Error(ErrorCode::dimension_mismatch, "row buffer size != dim");
  const std::size_t base = t * dim_;
  if (precision_ == Precision::fp32) {
    std::copy_n(f32_.begin() + static_cast<std::ptrdiff_t>(base), dim_, out.begin());
  } else {
    for (std::size_t k = 0; k < dim_; ++k) out[k] = half_to_float(f16_[base + k]);
  }
}

std::span<const float> LogProbStream::fp32_data() const {
  if (precision_ != Precision::fp32) throw Error(ErrorCode::invalid_argument, "stream payload is not FP32");
  return f32_;
}

std::span<const std::uint16_t> LogProbStream::fp16_data() const {
  if (precision_ != Precision::fp16) throw Error(ErrorCode::invalid_argument, "stream payload is not FP16");
  return f16_;
}

std::vector<float> LogProbStream::to_fp32_values() const {
  if (precision_ == Precision::fp32) return f32_;
  std::vector<float> out(f16_.size());
  std::transform(f16_.begin(), f16_.end(), out.begin(), half_to_float);
  return out;
}

LogProbStream LogProbStream::to_precision(Precision p) const {
  if (p == precision_) return *this;
  if (p == Precision::fp32)
    return from_fp32(n_steps_, dim_, to_fp32_values(), token_ids_, meta_, normalized_);
  std::vector<std::uint16_t> bits(f32_.size());
  std::transform(f32_.begin(), f32_.end(), bits.begin(), float_to_half);
  return from_fp16_bits(n_steps_, dim_, std::move(bits), token_ids_, meta_, normalized_);
}

LogProbStream LogProbStream::with_meta(StreamMeta meta) const {
  LogProbStream s = *this;
  s.meta_ = std::move(meta);
  return s;
}

LogProbStream LogProbStream::with_normalized(bool normalized) const {
  LogProbStream s = *this;
  s.normalized_ = normalized;
  if (normalized) validate_stream(s);
  return s;
}

LogProbStream LogProbStream::without_token_ids() const {
  LogProbStream s = *this;
  s.token_ids_.reset();
  return s;
}

bool LogProbStream::operator==(const LogProbStream& other) const {
  if (n_steps_ != other.n_steps_ || dim_ != other.dim_ || precision_ != other.precision_ ||
      normalized_ != other.normalized_ || token_ids_ != other.token_ids_ || !(meta_ == other.meta_))
    return false;
  if (precision_ == Precision::fp16) return f16_ == other.f16_;
  return f32_.size() == other.f32_.size() &&
         std::memcmp(f32_.data(), other.f32_.data(), f32_.size() * sizeof(float)) == 0;
}

// ---------------------------------------------------------------- validation

namespace {

float row_logsumexp(std::span<const float> row) {
  float m = -std::numeric_limits<float>::infinity();
  for (float v : row) m = std::max(m, v);
  if (std::isinf(m)) return m;
  float sum = 0.0f;
  for (float v : row) sum += std::exp(v - m);
  return m + std::log(sum);
}

}  // namespace

NormalizationReport validate_normalization(const LogProbStream& stream) {
  NormalizationReport report;
  std::vector<float> row(stream.dim());
  for (std::size_t t = 0; t < stream.n_steps(); ++t) {
    stream.row(t, row);
    const double err = std::fabs(static_cast<double>(row_logsumexp(row)));
    if (!(err <= report.max_abs_logsumexp)) {
      report.max_abs_logsumexp = err;
      report.worst_row = t;
    }
  }
  return report;
}

void validate_stream(const LogProbStream& stream) {
  std::vector<float> row(stream.dim());
  for (std::size_t t = 0; t < stream.n_steps(); ++t) {
    stream.row(t, row);
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (std::isnan(row[k]))
        throw Error(ErrorCode::invalid_entry, "invalid entry: NaN at row " + std::to_string(t) +
                                                  ", column " + std::to_string(k));
      if (row[k] == std::numeric_limits<float>::infinity())
        throw Error(ErrorCode::invalid_entry, "invalid entry: +inf at row " + std::to_string(t) +
                                                  ", column " + std::to_string(k));
    }
  }
  if (stream.has_token_ids()) {
    const auto ids = stream.token_ids();
    for (std::size_t t = 0; t < ids.size(); ++t) {
      if (ids[t] >= stream.dim())
        throw Error(ErrorCode::invariant_violation,
                    "token id " + std::to_string(ids[t]) + " at step " + std::to_string(t) +
                        " is outside [0, dim)");
    }
  }
  if (stream.normalized()) {
    const auto report = validate_normalization(stream);
    if (report.max_abs_logsumexp > kNormalizationTolerance) {
      std::ostringstream msg;
      msg << "stream flagged normalized but row " << report.worst_row
          << " has |logsumexp| = " << report.max_abs_logsumexp;
      throw Error(ErrorCode::invariant_violation, msg.str());
    }
  }
}

LogProbStream clamp_below(const LogProbStream& stream, float floor) {
  if (!std::isfinite(floor)) throw Error(ErrorCode::invalid_argument, "clamp floor must be finite");
  auto clamp = [floor](float v) { return v < floor ? floor : v; };
  StreamMeta meta = stream.meta();
  meta.extra["clamp_floor"] = floor;
  std::optional<std::vector<std::uint32_t>> ids;
  if (stream.has_token_ids()) ids.emplace(stream.token_ids().begin(), stream.token_ids().end());
  LogProbStream out;
  if (stream.precision() == Precision::fp32) {
    std::vector<float> values(stream.fp32_data().begin(), stream.fp32_data().end());
    std::transform(values.begin(), values.end(), values.begin(), clamp);
    out = LogProbStream::from_fp32(stream.n_steps(), stream.dim(), std::move(values), std::move(ids), meta);
  } else {
    const std::uint16_t floor_bits = float_to_half(floor);
    std::vector<std::uint16_t> bits(stream.fp16_data().begin(), stream.fp16_data().end());
    for (auto& b : bits)
      if (half_to_float(b) < floor) b = floor_bits;
    out = LogProbStream::from_fp16_bits(stream.n_steps(), stream.dim(), std::move(bits), std::move(ids),
                                        meta);
  }
  // Clamping adds mass; the flag survives only if the rows are still valid.
  if (stream.normalized() &&
      validate_normalization(out).max_abs_logsumexp <= kNormalizationTolerance)
    out = out.with_normalized(true);
  return out;
}

// ---------------------------------------------------------------- LPRS codec

namespace {

constexpr std::array<char, 4> kMagic = {'L', 'P', 'R', 'S'};
constexpr std::uint32_t kFlagTokenIds = 1u << 0;
constexpr std::uint32_t kFlagNormalized = 1u << 1;
constexpr std::uint32_t kFlagFp16 = 1u << 2;
constexpr std::uint32_t kKnownFlags = kFlagTokenIds | kFlagNormalized | kFlagFp16;
constexpr std::size_t kChunkElements = std::size_t{1} << 20;

template <typename T>
void put_le(std::string& buf, T value) {
  static_assert(std::is_unsigned_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf.push_back(static_cast<char>((value >> (8 * i)) & 0xffu));
}

template <typename T>
T get_le(const unsigned char* p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(p[i]) << (8 * i);
  return v;
}

void read_exact(std::istream& in, unsigned char* dst, std::size_t n, const char* what) {
  in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n)
    throw Error(ErrorCode::truncated_payload, std::string("truncated payload while reading ") + what);
}

template <typename T>
std::vector<T> read_array(std::istream& in, std::size_t count, const char* what) {
  std::vector<T> out;
  std::vector<unsigned char> raw;
  std::size_t done = 0;
  while (done < count) {
    const std::size_t chunk = std::min(kChunkElements, count - done);
    raw.resize(chunk * sizeof(T));
    read_exact(in, raw.data(), raw.size(), what);
    out.reserve(done + chunk);
    for (std::size_t i = 0; i < chunk; ++i) out.push_back(get_le<T>(raw.data() + i * sizeof(T)));
    done += chunk;
  }
  return out;
}

}  // namespace

std::uint64_t write_stream(const LogProbStream& stream, std::ostream& out) {
  validate_stream(stream);

  std::uint32_t flags = 0;
  if (stream.has_token_ids()) flags |= kFlagTokenIds;
  if (stream.normalized()) flags |= kFlagNormalized;
  if (stream.precision() == Precision::fp16) flags |= kFlagFp16;

  const std::string meta = stream.meta().to_json().dump();
  std::string header(kMagic.begin(), kMagic.end());
  put_le<std::uint32_t>(header, kLprsVersion);
  put_le<std::uint32_t>(header, flags);
  put_le<std::uint64_t>(header, stream.n_steps());
  put_le<std::uint64_t>(header, stream.dim());
  put_le<std::uint32_t>(header, static_cast<std::uint32_t>(meta.size()));
  header += meta;
  std::uint64_t written = header.size();
  out.write(header.data(), static_cast<std::streamsize>(header.size()));

  std::string buf;
  auto flush = [&] {
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    written += buf.size();
    buf.clear();
  };
  if (stream.has_token_ids()) {
    for (std::uint32_t id : stream.token_ids()) {
      put_le<std::uint32_t>(buf, id);
      if (buf.size() >= 4 * kChunkElements) flush();
    }
    flush();
  }
  if (stream.precision() == Precision::fp16) {
    for (std::uint16_t h : stream.fp16_data()) {
      put_le<std::uint16_t>(buf, h);
      if (buf.size() >= 2 * kChunkElements) flush();
    }
  } else {
    for (float f : stream.fp32_data()) {
      put_le<std::uint32_t>(buf, std::bit_cast<std::uint32_t>(f));
      if (buf.size() >= 4 * kChunkElements) flush();
    }
  }
  flush();
  if (!out) throw Error(ErrorCode::io, "write failed");
  return written;
}

LogProbStream read_stream(std::istream& in) {
  std::array<unsigned char, 4> magic{};
  in.read(reinterpret_cast<char*>(magic.data()), 4);
  const auto got = static_cast<std::size_t>(in.gcount());
  if (std::memcmp(magic.data(), kMagic.data(), got) != 0)
    throw Error(ErrorCode::bad_magic, "bad magic: not an LPRS stream");
  if (got != 4) throw Error(ErrorCode::truncated_payload, "truncated header");

  std::array<unsigned char, 28> fixed{};
  read_exact(in, fixed.data(), fixed.size(), "header");
  const auto version = get_le<std::uint32_t>(fixed.data());
  if (version != kLprsVersion)
    throw Error(ErrorCode::unsupported_version, "unsupported version " + std::to_string(version));
  const auto flags = get_le<std::uint32_t>(fixed.data() + 4);
  if ((flags & ~kKnownFlags) != 0)
    throw Error(ErrorCode::unsupported_version, "unsupported flags " + std::to_string(flags));
  const auto n_steps = get_le<std::uint64_t>(fixed.data() + 8);
  const auto dim = get_le<std::uint64_t>(fixed.data() + 16);
  const auto meta_len = get_le<std::uint32_t>(fixed.data() + 24);
  if (n_steps == 0 || dim == 0 || dim > std::numeric_limits<std::uint64_t>::max() / n_steps)
    throw Error(ErrorCode::invariant_violation, "invalid stream shape");

  std::string meta_text(meta_len, '\0');
  read_exact(in, reinterpret_cast<unsigned char*>(meta_text.data()), meta_len, "meta");
  StreamMeta meta;
  try {
    meta = StreamMeta::from_json(nlohmann::json::parse(meta_text));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invariant_violation, std::string("malformed meta JSON: ") + e.what());
  }

  std::optional<std::vector<std::uint32_t>> ids;
  if (flags & kFlagTokenIds) ids = read_array<std::uint32_t>(in, n_steps, "token ids");

  const bool normalized = (flags & kFlagNormalized) != 0;
  const std::size_t count = n_steps * dim;
  LogProbStream stream;
  if (flags & kFlagFp16) {
    stream = LogProbStream::from_fp16_bits(n_steps, dim, read_array<std::uint16_t>(in, count, "payload"),
                                           std::move(ids), std::move(meta), normalized);
  } else {
    auto raw = read_array<std::uint32_t>(in, count, "payload");
    std::vector<float> values(raw.size());
    std::transform(raw.begin(), raw.end(), values.begin(),
                   [](std::uint32_t b) { return std::bit_cast<float>(b); });
    stream = LogProbStream::from_fp32(n_steps, dim, std::move(values), std::move(ids),
                                      std::move(meta), normalized);
  }
  return stream;
}

std::uint64_t write_stream_file(const LogProbStream& stream, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot open " + path.string() + " for writing");
  const auto n = write_stream(stream, out);
  out.close();
  if (!out) throw Error(ErrorCode::io, "failed writing " + path.string());
  return n;
}

LogProbStream read_stream_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  return read_stream(in);
}

}  // namespace corrdim

#include "corrdim/reduce.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "corrdim/error.hpp"
#include "corrdim/half.hpp"

namespace corrdim {

std::string_view to_string(ReduceSpace space) {
  return space == ReduceSpace::probability ? "prob" : "log";
}

ReduceSpace parse_reduce_space(std::string_view text) {
  if (text == "prob" || text == "probability") return ReduceSpace::probability;
  if (text == "log" || text == "log-probability") return ReduceSpace::log_probability;
  throw Error(ErrorCode::invalid_argument, "reduce space must be 'prob' or 'log'");
}

ModuloProjection::ModuloProjection(std::size_t source_dim, std::size_t target_dim)
    : source_dim_(source_dim), target_dim_(target_dim) {
  if (target_dim < 1 || target_dim > source_dim)
    throw Error(ErrorCode::invalid_argument, "reduction width must satisfy 1 <= v <= source dim (v=" +
                                                 std::to_string(target_dim) + ", dim=" +
                                                 std::to_string(source_dim) + ")");
}

std::vector<float> ModuloProjection::project(std::span<const float> x) const {
  std::vector<float> out(target_dim_);
  project_into(x, out);
  return out;
}

void ModuloProjection::project_into(std::span<const float> x, std::span<float> out) const {
  if (x.size() != source_dim_ || out.size() != target_dim_)
    throw Error(ErrorCode::dimension_mismatch, "projection input has dim " + std::to_string(x.size()) +
                                                   ", expected " + std::to_string(source_dim_));
  std::fill(out.begin(), out.end(), 0.0f);
  for (std::size_t j = 0; j < source_dim_; ++j) out[j % target_dim_] += x[j];
}

namespace {

// out_i = m_i + log sum exp(x_j - m_i) over the group of i, m_i the group max.
// A single-member group reproduces its value exactly; an all -inf group stays -inf.
void project_row_probability(std::span<const float> x, std::span<float> out, std::vector<float>& max_buf) {
  const std::size_t v = out.size();
  std::fill(max_buf.begin(), max_buf.end(), -std::numeric_limits<float>::infinity());
  for (std::size_t j = 0; j < x.size(); ++j) max_buf[j % v] = std::max(max_buf[j % v], x[j]);
  std::fill(out.begin(), out.end(), 0.0f);
  for (std::size_t j = 0; j < x.size(); ++j) {
    const float m = max_buf[j % v];
    if (std::isinf(m)) continue;
    out[j % v] += std::exp(x[j] - m);
  }
  for (std::size_t i = 0; i < v; ++i)
    out[i] = std::isinf(max_buf[i]) ? max_buf[i] : max_buf[i] + std::log(out[i]);
}

}  // namespace

LogProbStream project_stream(const ModuloProjection& projection, const LogProbStream& stream,
                             ReduceSpace space) {
  if (stream.dim() != projection.source_dim())
    throw Error(ErrorCode::dimension_mismatch, "stream dim " + std::to_string(stream.dim()) +
                                                   " != projection source dim " +
                                                   std::to_string(projection.source_dim()));
  const std::size_t n = stream.n_steps();
  const std::size_t v = projection.target_dim();
  std::vector<float> row(stream.dim());
  std::vector<float> max_buf(v);
  std::vector<float> out(n * v);
  for (std::size_t t = 0; t < n; ++t) {
    stream.row(t, row);
    std::span<float> dst(out.data() + t * v, v);
    if (space == ReduceSpace::probability) {
      project_row_probability(row, dst, max_buf);
    } else {
      projection.project_into(row, dst);
    }
  }

  StreamMeta meta = stream.meta();
  meta.reduction = v;
  meta.extra["reduce_space"] = std::string(to_string(space));

  // a realized token now lands in its group
  std::optional<std::vector<std::uint32_t>> ids;
  if (stream.has_token_ids()) {
    ids.emplace(stream.token_ids().begin(), stream.token_ids().end());
    for (auto& id : *ids) id = static_cast<std::uint32_t>(id % v);
  }
  const bool normalized = space == ReduceSpace::probability && stream.normalized();
  auto reduced = LogProbStream::from_fp32(n, v, std::move(out), std::move(ids), std::move(meta), normalized);
  return reduced.to_precision(stream.precision());
}

}  // namespace corrdim

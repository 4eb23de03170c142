#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "corrdim/lpstream.hpp"

namespace corrdim {

// Which space the modulo group sums are taken in.
//   probability:     out_i = log sum_{j = i mod v} exp(x_j)   (rows stay normalized)
//   log_probability: out_i = sum_{j = i mod v} x_j            (literal linear map)
enum class ReduceSpace { probability, log_probability };

std::string_view to_string(ReduceSpace space);
ReduceSpace parse_reduce_space(std::string_view text);  // "prob" | "log"

// Deterministic linear map R^source -> R^target summing the coordinates that
// share an index modulo target.
class ModuloProjection {
 public:
  ModuloProjection(std::size_t source_dim, std::size_t target_dim);

  std::size_t source_dim() const { return source_dim_; }
  std::size_t target_dim() const { return target_dim_; }

  std::vector<float> project(std::span<const float> x) const;
  void project_into(std::span<const float> x, std::span<float> out) const;

 private:
  std::size_t source_dim_;
  std::size_t target_dim_;
};

LogProbStream project_stream(const ModuloProjection& projection, const LogProbStream& stream,
                             ReduceSpace space = ReduceSpace::probability);

}  // namespace corrdim

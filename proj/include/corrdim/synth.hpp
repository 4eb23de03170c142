#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "corrdim/lpstream.hpp"
#include "corrdim/rng.hpp"

namespace corrdim {

// Binary hierarchical grammar: every node spawns `branching` children, each
// child equal to its parent with probability q and flipped otherwise.
struct LinTegmarkSpec {
  double q = 0.5;
  std::size_t depth = 10;
  std::size_t branching = 2;
  std::uint8_t root = 0;
  std::uint64_t seed = 1;

  void validate() const;
};

// Leaves of the expanded tree, left to right (branching^depth symbols).
std::vector<std::uint8_t> gen_lin_tegmark(const LinTegmarkSpec& spec);

// Order-n Markov chain over `alphabet` symbols. Row r of `transition` is the
// next-symbol distribution for the context whose base-alphabet digits
// (oldest first) spell r; there are alphabet^order rows.
struct MarkovSpec {
  std::size_t order = 1;
  std::size_t alphabet = 2;
  std::vector<std::vector<double>> transition;
  std::uint64_t seed = 1;

  void validate() const;

  static MarkovSpec cycle(std::size_t alphabet, std::uint64_t seed = 1);
  static MarkovSpec uniform(std::size_t alphabet, std::size_t order = 1, std::uint64_t seed = 1);
  // Rows drawn uniformly from the simplex, every entry strictly positive.
  static MarkovSpec random(std::size_t alphabet, std::size_t order, std::uint64_t table_seed,
                           std::uint64_t seed = 1);
};

// Samples the chain and emits, for each step, the exact conditional
// log-distribution of the token drawn at that step. The initial context is
// drawn uniformly and is not part of the stream.
LogProbStream gen_markov_stream(const MarkovSpec& spec, std::size_t n_steps);

struct PolyaSpec {
  std::vector<double> initial_counts{1.0, 1.0};
  double reinforcement = 1.0;
  std::uint64_t seed = 1;

  void validate() const;
};

class PolyaUrn {
 public:
  explicit PolyaUrn(const PolyaSpec& spec);

  std::span<const double> counts() const { return counts_; }
  double total() const { return total_; }
  // Draws a color proportionally to the current counts and reinforces it.
  std::size_t draw(Rng& rng);

 private:
  std::vector<double> counts_;
  double total_ = 0.0;
  double reinforcement_;
};

// Row t is log(counts / total) immediately before draw t.
LogProbStream gen_polya_stream(const PolyaSpec& spec, std::size_t n_steps);

// i.i.d. standard normal vectors (not normalized).
LogProbStream gen_gaussian_stream(std::size_t dim, std::size_t n_steps, std::uint64_t seed);

// Cumulative sum of i.i.d. N(0, step_sigma^2) steps, drawn in the same order as
// gen_gaussian_stream with the same seed.
LogProbStream gen_random_walk_stream(std::size_t dim, std::size_t n_steps, double step_sigma,
                                     std::uint64_t seed);

std::string gen_repetition_text(const std::string& pattern, std::size_t total_len);

const std::vector<std::string>& default_name_list();

// Names drawn uniformly and joined by ", " until at least `target_words`
// whitespace-delimited words have been emitted.
std::string gen_random_names(std::size_t target_words, std::span<const std::string> names,
                             std::uint64_t seed);

}  // namespace corrdim

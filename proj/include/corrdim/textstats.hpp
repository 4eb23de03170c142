#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "corrdim/lpstream.hpp"

namespace corrdim {

// Interned token ids; metrics only ever compare ids for equality, so any
// bijective relabeling leaves them unchanged.
using TokenSequence = std::vector<std::int64_t>;

enum class Tokenization { whitespace, character };

std::string_view to_string(Tokenization t);
Tokenization parse_tokenization(std::string_view text);  // "whitespace" | "char"

TokenSequence tokenize(std::string_view text, Tokenization mode);

// 1 - unique n-grams / total n-grams.
double rep_n(std::span<const std::int64_t> tokens, std::size_t n);
// unique n-grams / total n-grams; rep_n + distinct_n == 1 exactly.
double distinct_n(std::span<const std::int64_t> tokens, std::size_t n);

// Positive exponent s of f(r) ~ r^-s, OLS over the top_k ranks.
double zipf_coefficient(std::span<const std::int64_t> tokens, std::size_t top_k = 1000);

// Exponent beta of V(n) ~ n^beta, V(n) the vocabulary of the first n tokens,
// sampled at log-spaced n.
double heaps_coefficient(std::span<const std::int64_t> tokens);

// exp(-mean_t x_t[token_t]); needs token ids and a normalized stream.
double perplexity(const LogProbStream& stream);

// mean_t -sum_w p_t(w) log p_t(w) in nats, with each row renormalized in
// double first; -inf entries contribute 0.
double conditional_entropy(const LogProbStream& stream);

}  // namespace corrdim

#include "corrdim/textstats.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "corrdim/error.hpp"
#include "corrdim/ols.hpp"

namespace corrdim {

std::string_view to_string(Tokenization t) {
  return t == Tokenization::whitespace ? "whitespace" : "char";
}

Tokenization parse_tokenization(std::string_view text) {
  if (text == "whitespace" || text == "ws") return Tokenization::whitespace;
  if (text == "char" || text == "character") return Tokenization::character;
  throw Error(ErrorCode::invalid_argument, "tokenization must be 'whitespace' or 'char'");
}

TokenSequence tokenize(std::string_view text, Tokenization mode) {
  std::unordered_map<std::string, std::int64_t> vocab;
  TokenSequence out;
  auto intern = [&](std::string tok) {
    const auto [it, inserted] = vocab.try_emplace(std::move(tok), static_cast<std::int64_t>(vocab.size()));
    out.push_back(it->second);
  };
  if (mode == Tokenization::character) {
    // one token per UTF-8 code point; stray continuation bytes stand alone
    std::size_t i = 0;
    while (i < text.size()) {
      const auto lead = static_cast<unsigned char>(text[i]);
      std::size_t len = lead < 0x80 ? 1 : (lead >> 5) == 0x6 ? 2 : (lead >> 4) == 0xe ? 3 : (lead >> 3) == 0x1e ? 4 : 1;
      std::size_t j = 1;
      while (j < len && i + j < text.size() && (static_cast<unsigned char>(text[i + j]) & 0xc0) == 0x80) ++j;
      intern(std::string(text.substr(i, j)));
      i += j;
    }
    return out;
  }
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) intern(std::string(text.substr(start, i - start)));
  }
  return out;
}

namespace {

struct NgramHash {
  std::size_t operator()(std::span<const std::int64_t> g) const noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    for (auto v : g) {
      h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

struct NgramEq {
  bool operator()(std::span<const std::int64_t> a, std::span<const std::int64_t> b) const noexcept {
    return std::equal(a.begin(), a.end(), b.begin(), b.end());
  }
};

double distinct_fraction(std::span<const std::int64_t> tokens, std::size_t n) {
  if (n < 1) throw Error(ErrorCode::invalid_argument, "n-gram order must be >= 1");
  if (tokens.size() < n)
    throw Error(ErrorCode::invalid_argument, "sequence shorter than n (" + std::to_string(tokens.size()) +
                                                 " < " + std::to_string(n) + ")");
  const std::size_t total = tokens.size() - n + 1;
  std::unordered_set<std::span<const std::int64_t>, NgramHash, NgramEq> seen;
  seen.reserve(total);
  for (std::size_t i = 0; i < total; ++i) seen.insert(tokens.subspan(i, n));
  return static_cast<double>(seen.size()) / static_cast<double>(total);
}

}  // namespace

double distinct_n(std::span<const std::int64_t> tokens, std::size_t n) {
  return distinct_fraction(tokens, n);
}

double rep_n(std::span<const std::int64_t> tokens, std::size_t n) {
  return 1.0 - distinct_fraction(tokens, n);
}

double zipf_coefficient(std::span<const std::int64_t> tokens, std::size_t top_k) {
  std::unordered_map<std::int64_t, std::size_t> freq;
  for (auto t : tokens) ++freq[t];
  if (freq.size() < 2) throw Error(ErrorCode::invalid_argument, "Zipf fit needs at least two distinct tokens");
  if (top_k < 2) throw Error(ErrorCode::invalid_argument, "Zipf top_k must be >= 2");
  std::vector<std::size_t> counts;
  counts.reserve(freq.size());
  for (const auto& [tok, c] : freq) counts.push_back(c);
  std::sort(counts.begin(), counts.end(), std::greater<>());
  const std::size_t k = std::min(top_k, counts.size());
  std::vector<double> x(k), y(k);
  for (std::size_t r = 0; r < k; ++r) {
    x[r] = std::log(static_cast<double>(r + 1));
    y[r] = std::log(static_cast<double>(counts[r]));
  }
  return -ols_fit(x, y).slope;
}

double heaps_coefficient(std::span<const std::int64_t> tokens) {
  if (tokens.size() < 10) throw Error(ErrorCode::invalid_argument, "Heaps fit needs at least 10 tokens");
  // ~20 samples per decade, deduplicated after rounding
  const double len = static_cast<double>(tokens.size());
  const auto n_samples = static_cast<std::size_t>(std::ceil(std::log10(len) * 20.0)) + 1;
  std::vector<std::size_t> sample_at;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double frac = static_cast<double>(i) / static_cast<double>(n_samples - 1);
    const auto n = static_cast<std::size_t>(std::llround(std::pow(len, frac)));
    if (sample_at.empty() || n > sample_at.back()) sample_at.push_back(std::min(n, tokens.size()));
  }

  std::unordered_set<std::int64_t> vocab;
  std::vector<double> x, y;
  std::size_t next = 0;
  for (std::size_t i = 0; i < tokens.size() && next < sample_at.size(); ++i) {
    vocab.insert(tokens[i]);
    if (i + 1 == sample_at[next]) {
      x.push_back(std::log(static_cast<double>(i + 1)));
      y.push_back(std::log(static_cast<double>(vocab.size())));
      ++next;
    }
  }
  return ols_fit(x, y).slope;
}

double perplexity(const LogProbStream& stream) {
  if (!stream.has_token_ids())
    throw Error(ErrorCode::missing_token_ids, "perplexity needs a stream with token_ids");
  if (!stream.normalized())
    throw Error(ErrorCode::invariant_violation, "perplexity needs a normalized stream");
  const auto ids = stream.token_ids();
  double sum = 0.0;
  for (std::size_t t = 0; t < ids.size(); ++t) sum += static_cast<double>(stream.value(t, ids[t]));
  return std::exp(-sum / static_cast<double>(ids.size()));
}

double conditional_entropy(const LogProbStream& stream) {
  if (!stream.normalized())
    throw Error(ErrorCode::invariant_violation, "conditional entropy needs a normalized stream");
  std::vector<float> row(stream.dim());
  double total = 0.0;
  for (std::size_t t = 0; t < stream.n_steps(); ++t) {
    stream.row(t, row);
    // renormalize the row in double first
    double mx = -std::numeric_limits<double>::infinity();
    for (float v : row) mx = std::max(mx, static_cast<double>(v));
    double z = 0.0;
    for (float v : row) z += std::exp(static_cast<double>(v) - mx);
    const double lse = mx + std::log(z);
    double h = 0.0;
    for (float v : row) {
      if (std::isinf(v)) continue;
      const double lp = static_cast<double>(v) - lse;
      h -= std::exp(lp) * lp;
    }
    total += h;
  }
  return total / static_cast<double>(stream.n_steps());
}

}  // namespace corrdim

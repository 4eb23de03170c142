#include "corrdim/synth.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "corrdim/error.hpp"

namespace corrdim {

namespace {

std::size_t sample_categorical(std::span<const double> weights, double total, Rng& rng) {
  const double u = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;  // u landed in the rounding slack at the top
}

nlohmann::json generator_meta(const char* kind, std::uint64_t seed) {
  return {{"generator", kind}, {"seed", seed}, {"prng", std::string(Rng::kAlgorithm)}};
}

std::size_t checked_power(std::size_t base, std::size_t exp, std::size_t limit, const char* what) {
  std::size_t out = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (out > limit / base) throw Error(ErrorCode::invalid_argument, std::string(what) + " is too large");
    out *= base;
  }
  return out;
}

}  // namespace

// ------------------------------------------------------------- Lin-Tegmark

void LinTegmarkSpec::validate() const {
  if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorCode::invalid_argument, "q must lie in [0, 1]");
  if (depth < 1) throw Error(ErrorCode::invalid_argument, "depth must be >= 1");
  if (branching < 1) throw Error(ErrorCode::invalid_argument, "branching must be >= 1");
  if (root > 1) throw Error(ErrorCode::invalid_argument, "root must be 0 or 1");
}

std::vector<std::uint8_t> gen_lin_tegmark(const LinTegmarkSpec& spec) {
  spec.validate();
  checked_power(spec.branching, spec.depth, std::size_t{1} << 32, "branching^depth");
  Rng rng(spec.seed);
  std::vector<std::uint8_t> level{spec.root};
  for (std::size_t g = 0; g < spec.depth; ++g) {
    std::vector<std::uint8_t> next;
    next.reserve(level.size() * spec.branching);
    for (std::uint8_t parent : level) {
      for (std::size_t c = 0; c < spec.branching; ++c) {
        // G = [[q, 1-q], [1-q, q]]: keep the parent's symbol with probability q
        const bool keep = rng.uniform() < spec.q;
        next.push_back(keep ? parent : static_cast<std::uint8_t>(1 - parent));
      }
    }
    level = std::move(next);
  }
  return level;
}

// ------------------------------------------------------------------ Markov

void MarkovSpec::validate() const {
  if (alphabet < 1) throw Error(ErrorCode::invalid_argument, "alphabet must be >= 1");
  if (alphabet > std::numeric_limits<std::uint32_t>::max())
    throw Error(ErrorCode::invalid_argument, "alphabet too large");
  const std::size_t rows = checked_power(alphabet, order, std::size_t{1} << 26, "alphabet^order");
  if (transition.size() != rows)
    throw Error(ErrorCode::invalid_argument, "transition table needs alphabet^order rows");
  for (const auto& row : transition) {
    if (row.size() != alphabet)
      throw Error(ErrorCode::invalid_argument, "transition row length must equal alphabet");
    double sum = 0.0;
    for (double p : row) {
      if (!(p >= 0.0)) throw Error(ErrorCode::invalid_argument, "transition probabilities must be >= 0");
      sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-9) throw Error(ErrorCode::invalid_argument, "transition rows must sum to 1");
  }
}

MarkovSpec MarkovSpec::cycle(std::size_t alphabet, std::uint64_t seed) {
  MarkovSpec spec{1, alphabet, {}, seed};
  spec.transition.assign(alphabet, std::vector<double>(alphabet, 0.0));
  for (std::size_t i = 0; i < alphabet; ++i) spec.transition[i][(i + 1) % alphabet] = 1.0;
  return spec;
}

MarkovSpec MarkovSpec::uniform(std::size_t alphabet, std::size_t order, std::uint64_t seed) {
  MarkovSpec spec{order, alphabet, {}, seed};
  const std::size_t rows = checked_power(alphabet, order, std::size_t{1} << 26, "alphabet^order");
  spec.transition.assign(rows, std::vector<double>(alphabet, 1.0 / static_cast<double>(alphabet)));
  return spec;
}

MarkovSpec MarkovSpec::random(std::size_t alphabet, std::size_t order, std::uint64_t table_seed,
                              std::uint64_t seed) {
  MarkovSpec spec{order, alphabet, {}, seed};
  const std::size_t rows = checked_power(alphabet, order, std::size_t{1} << 26, "alphabet^order");
  Rng rng(table_seed);
  spec.transition.resize(rows);
  for (auto& row : spec.transition) {
    row.resize(alphabet);
    double sum = 0.0;
    for (auto& p : row) {
      p = -std::log(1.0 - rng.uniform());  // Exp(1); normalized -> Dirichlet(1, ..., 1)
      if (p == 0.0) p = std::numeric_limits<double>::min();
      sum += p;
    }
    for (auto& p : row) p /= sum;
  }
  return spec;
}

LogProbStream gen_markov_stream(const MarkovSpec& spec, std::size_t n_steps) {
  spec.validate();
  if (n_steps <= spec.order) throw Error(ErrorCode::invalid_argument, "n_steps must exceed the chain order");
  Rng rng(spec.seed);
  const std::size_t a = spec.alphabet;
  const std::size_t rows = spec.transition.size();

  std::size_t context = 0;
  for (std::size_t i = 0; i < spec.order; ++i) context = (context * a + rng.below(a)) % rows;

  // log of every row once, in FP32
  std::vector<std::vector<float>> log_rows(rows, std::vector<float>(a));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t k = 0; k < a; ++k) log_rows[r][k] = static_cast<float>(std::log(spec.transition[r][k]));

  std::vector<float> values;
  values.reserve(n_steps * a);
  std::vector<std::uint32_t> ids(n_steps);
  for (std::size_t t = 0; t < n_steps; ++t) {
    values.insert(values.end(), log_rows[context].begin(), log_rows[context].end());
    const std::size_t tok = sample_categorical(spec.transition[context], 1.0, rng);
    ids[t] = static_cast<std::uint32_t>(tok);
    // order 0 has a single row and context stays 0
    context = rows == 1 ? 0 : (context * a + tok) % rows;
  }

  StreamMeta meta;
  meta.model = "synth:markov";
  meta.tokenizer = "symbols";
  meta.extra = generator_meta("markov", spec.seed);
  meta.extra["order"] = spec.order;
  meta.extra["alphabet"] = spec.alphabet;
  return LogProbStream::from_fp32(n_steps, a, std::move(values), std::move(ids), std::move(meta), true);
}

// ------------------------------------------------------------------- Polya

void PolyaSpec::validate() const {
  if (initial_counts.empty()) throw Error(ErrorCode::invalid_argument, "urn needs at least one color");
  for (double c : initial_counts)
    if (!(c > 0.0) || !std::isfinite(c)) throw Error(ErrorCode::invalid_argument, "initial counts must be > 0");
  if (!(reinforcement > 0.0) || !std::isfinite(reinforcement))
    throw Error(ErrorCode::invalid_argument, "reinforcement must be > 0");
}

PolyaUrn::PolyaUrn(const PolyaSpec& spec)
    : counts_(spec.initial_counts), reinforcement_(spec.reinforcement) {
  spec.validate();
  for (double c : counts_) total_ += c;
}

std::size_t PolyaUrn::draw(Rng& rng) {
  const std::size_t color = sample_categorical(counts_, total_, rng);
  counts_[color] += reinforcement_;
  total_ += reinforcement_;
  return color;
}

LogProbStream gen_polya_stream(const PolyaSpec& spec, std::size_t n_steps) {
  if (n_steps < 1) throw Error(ErrorCode::invalid_argument, "n_steps must be >= 1");
  PolyaUrn urn(spec);
  Rng rng(spec.seed);
  const std::size_t a = spec.initial_counts.size();
  std::vector<float> values;
  values.reserve(n_steps * a);
  std::vector<std::uint32_t> ids(n_steps);
  for (std::size_t t = 0; t < n_steps; ++t) {
    const double log_total = std::log(urn.total());
    for (double c : urn.counts()) values.push_back(static_cast<float>(std::log(c) - log_total));
    ids[t] = static_cast<std::uint32_t>(urn.draw(rng));
  }
  StreamMeta meta;
  meta.model = "synth:polya";
  meta.tokenizer = "symbols";
  meta.extra = generator_meta("polya", spec.seed);
  meta.extra["initial_counts"] = spec.initial_counts;
  meta.extra["reinforcement"] = spec.reinforcement;
  return LogProbStream::from_fp32(n_steps, a, std::move(values), std::move(ids), std::move(meta), true);
}

// ------------------------------------------------------ Gaussian and walks

LogProbStream gen_gaussian_stream(std::size_t dim, std::size_t n_steps, std::uint64_t seed) {
  if (dim < 1 || n_steps < 1) throw Error(ErrorCode::invalid_argument, "dim and n_steps must be >= 1");
  Rng rng(seed);
  std::vector<float> values(dim * n_steps);
  for (auto& v : values) v = static_cast<float>(rng.normal());
  StreamMeta meta;
  meta.model = "synth:gaussian";
  meta.extra = generator_meta("gaussian", seed);
  return LogProbStream::from_fp32(n_steps, dim, std::move(values), {}, std::move(meta), false);
}

LogProbStream gen_random_walk_stream(std::size_t dim, std::size_t n_steps, double step_sigma,
                                     std::uint64_t seed) {
  if (dim < 1 || n_steps < 1) throw Error(ErrorCode::invalid_argument, "dim and n_steps must be >= 1");
  if (!(step_sigma >= 0.0) || !std::isfinite(step_sigma))
    throw Error(ErrorCode::invalid_argument, "step_sigma must be finite and >= 0");
  Rng rng(seed);
  std::vector<double> pos(dim, 0.0);
  std::vector<float> values(dim * n_steps);
  for (std::size_t t = 0; t < n_steps; ++t) {
    for (std::size_t k = 0; k < dim; ++k) {
      pos[k] += step_sigma * static_cast<double>(static_cast<float>(rng.normal()));
      values[t * dim + k] = static_cast<float>(pos[k]);
    }
  }
  StreamMeta meta;
  meta.model = "synth:random-walk";
  meta.extra = generator_meta("random-walk", seed);
  meta.extra["step_sigma"] = step_sigma;
  return LogProbStream::from_fp32(n_steps, dim, std::move(values), {}, std::move(meta), false);
}

// -------------------------------------------------------------------- text

std::string gen_repetition_text(const std::string& pattern, std::size_t total_len) {
  if (pattern.empty()) throw Error(ErrorCode::invalid_argument, "repetition pattern must be non-empty");
  std::string out;
  out.reserve(total_len);
  for (std::size_t i = 0; i < total_len; ++i) out.push_back(pattern[i % pattern.size()]);
  return out;
}

const std::vector<std::string>& default_name_list() {
  static const std::vector<std::string> names = {
      "James",   "Mary",    "Robert",  "Patricia", "John",     "Jennifer", "Michael", "Linda",
      "David",   "Elizabeth", "William", "Barbara", "Richard", "Susan",    "Joseph",  "Jessica",
      "Thomas",  "Sarah",   "Charles", "Karen",    "Christopher", "Lisa", "Daniel",  "Nancy",
      "Matthew", "Betty",   "Anthony", "Margaret", "Mark",     "Sandra",   "Donald",  "Ashley",
      "Steven",  "Kimberly", "Paul",   "Emily",    "Andrew",   "Donna",    "Joshua",  "Michelle",
      "Kenneth", "Carol",   "Kevin",   "Amanda",   "Brian",    "Dorothy",  "George",  "Melissa",
      "Timothy", "Deborah", "Ronald",  "Stephanie", "Edward",  "Rebecca",  "Jason",   "Sharon",
      "Jeffrey", "Laura",   "Ryan",    "Cynthia",  "Jacob",    "Kathleen", "Gary",    "Amy",
      "Nicholas", "Angela", "Eric",    "Shirley",  "Jonathan", "Anna",     "Stephen", "Brenda",
      "Larry",   "Pamela",  "Justin",  "Emma",     "Scott",    "Nicole",   "Brandon", "Helen",
      "Benjamin", "Samantha", "Samuel", "Katherine", "Gregory", "Christine", "Alexander", "Debra",
      "Frank",   "Rachel",  "Patrick", "Carolyn",  "Raymond",  "Janet",    "Jack",    "Catherine",
      "Dennis",  "Maria",   "Jerry",   "Heather",
  };
  return names;
}

std::string gen_random_names(std::size_t target_words, std::span<const std::string> names,
                             std::uint64_t seed) {
  if (names.empty()) throw Error(ErrorCode::invalid_argument, "name list must be non-empty");
  std::vector<std::size_t> words(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    std::istringstream in(names[i]);
    std::string w;
    while (in >> w) ++words[i];
    if (words[i] == 0) throw Error(ErrorCode::invalid_argument, "names must contain a non-space character");
  }
  Rng rng(seed);
  std::string out;
  std::size_t emitted = 0;
  while (emitted < target_words) {
    const auto pick = static_cast<std::size_t>(rng.below(names.size()));
    if (!out.empty()) out += ", ";
    out += names[pick];
    emitted += words[pick];
  }
  return out;
}

}  // namespace corrdim

#include <cmath>
#include <map>
#include <set>

#include "corrdim/dimension.hpp"
#include "corrdim/error.hpp"
#include "corrdim/synth.hpp"
#include "corrdim/textstats.hpp"
#include "doctest.h"

using namespace corrdim;

TEST_CASE("rng is reproducible and the distributions look right") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng r(7);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
  std::vector<int> hist(5);
  for (int i = 0; i < 50000; ++i) ++hist[r.below(5)];
  for (int h : hist) CHECK(std::abs(h - 10000) < 400);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("lin-tegmark tree") {
  const auto leaves = gen_lin_tegmark({.q = 1.0, .depth = 6, .root = 1});
  CHECK(leaves.size() == 64);
  for (auto s : leaves) CHECK(s == 1);
  const auto flip = gen_lin_tegmark({.q = 0.0, .depth = 5, .root = 0});
  for (auto s : flip) CHECK(s == 1);  // odd depth, flipped every generation
  const auto mixed = gen_lin_tegmark({.q = 0.8, .depth = 14, .seed = 3});
  CHECK(mixed.size() == 16384);
  CHECK(gen_lin_tegmark({.q = 0.8, .depth = 14, .seed = 3}) == mixed);
  CHECK(gen_lin_tegmark({.q = 0.3, .depth = 3, .branching = 3}).size() == 27);
  CHECK_THROWS_AS(gen_lin_tegmark({.q = 1.5}), Error);
}

TEST_CASE("markov stream rows are the exact transition rows") {
  const auto spec = MarkovSpec::random(4, 2, 9, 5);
  const auto s = gen_markov_stream(spec, 3000);
  CHECK(s.normalized());
  CHECK(s.has_token_ids());
  CHECK(s.dim() == 4);
  // the row emitted at step t is the distribution the token at t was drawn from,
  // and its context is the previous two tokens
  const auto ids = s.token_ids();
  for (std::size_t t = 2; t < 3000; ++t) {
    const std::size_t ctx = ids[t - 2] * 4 + ids[t - 1];
    for (std::size_t k = 0; k < 4; ++k)
      CHECK(s.value(t, k) == static_cast<float>(std::log(spec.transition[ctx][k])));
  }
  // empirical frequencies follow the table
  std::map<std::size_t, std::vector<double>> freq;
  for (std::size_t t = 2; t < 3000; ++t) {
    auto& f = freq[ids[t - 2] * 4 + ids[t - 1]];
    f.resize(4);
    f[ids[t]] += 1;
  }
  for (auto& [ctx, f] : freq) {
    double tot = 0;
    for (double x : f) tot += x;
    if (tot < 300) continue;
    for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(f[k] / tot - spec.transition[ctx][k]) < 0.1);
  }
}

TEST_CASE("cycle chain has at most alphabet distinct rows") {
  const auto s = gen_markov_stream(MarkovSpec::cycle(3), 100);
  std::set<std::vector<float>> rows;
  std::vector<float> r(3);
  for (std::size_t t = 0; t < 100; ++t) {
    s.row(t, r);
    rows.insert(r);
  }
  CHECK(rows.size() <= 3);
}

TEST_CASE("polya urn rows track the counts") {
  const auto s = gen_polya_stream({.initial_counts = {1, 1}, .seed = 2}, 500);
  CHECK(s.value(0, 0) == static_cast<float>(std::log(0.5)));
  const auto ids = s.token_ids();
  double c0 = 1, c1 = 1;
  for (std::size_t t = 0; t < 500; ++t) {
    CHECK(std::abs(s.value(t, 0) - std::log(c0 / (c0 + c1))) < 1e-6);
    (ids[t] == 0 ? c0 : c1) += 1;
  }
}

TEST_CASE("random walk is the cumulative sum of the gaussian steps") {
  const auto g = gen_gaussian_stream(5, 200, 8);
  const auto w = gen_random_walk_stream(5, 200, 1.0, 8);
  std::vector<double> acc(5, 0.0);
  for (std::size_t t = 0; t < 200; ++t)
    for (std::size_t k = 0; k < 5; ++k) {
      acc[k] += g.value(t, k);
      CHECK(std::abs(w.value(t, k) - acc[k]) < 1e-4);
    }
}

TEST_CASE("text generators") {
  CHECK(gen_repetition_text("ab", 5) == "ababa");
  const auto names = gen_random_names(200, default_name_list(), 1);
  const auto toks = tokenize(names, Tokenization::whitespace);
  CHECK(toks.size() >= 200);
  CHECK(toks.size() < 210);
  CHECK(gen_random_names(200, default_name_list(), 1) == names);
  CHECK(default_name_list().size() == 100);
}

TEST_CASE("lin-tegmark q=0.5 leaves are fair bits") {
  const auto leaves = gen_lin_tegmark({.q = 0.5, .depth = 16, .seed = 8});
  double mean = 0.0;
  for (auto s : leaves) mean += s;
  mean /= double(leaves.size());
  CHECK(std::abs(mean - 0.5) <= 3.0 * 0.5 / std::sqrt(double(leaves.size())));
}

TEST_CASE("uniform i.i.d. markov rows are all identical") {
  const auto s = gen_markov_stream(MarkovSpec::uniform(6), 200);
  const auto v = s.to_fp32_values();
  for (std::size_t i = 6; i < v.size(); ++i) CHECK(v[i] == v[i % 6]);
  const auto ci = correlation_integral(s.without_token_ids(), ThresholdGrid({1e-12, 1.0}));
  CHECK(ci.s_values[0] == 1.0);
}

TEST_CASE("emitted normalized streams meet the tight bound") {
  CHECK(validate_normalization(gen_markov_stream(MarkovSpec::random(50, 1, 3, 4), 500)).max_abs_logsumexp <= 1e-6);
  CHECK(validate_normalization(gen_polya_stream({.initial_counts = {1, 2, 3}, .seed = 4}, 500)).max_abs_logsumexp <=
        1e-6);
}

TEST_CASE("markov transition frequencies pass a chi-square check") {
  const auto spec = MarkovSpec::random(3, 1, 21, 22);
  const auto s = gen_markov_stream(spec, 50000);
  const auto ids = s.token_ids();
  std::vector<std::vector<double>> obs(3, std::vector<double>(3, 0.0));
  for (std::size_t t = 1; t < ids.size(); ++t) obs[ids[t - 1]][ids[t]] += 1;
  double chi2 = 0.0;
  for (std::size_t a = 0; a < 3; ++a) {
    double row = 0.0;
    for (double o : obs[a]) row += o;
    for (std::size_t b = 0; b < 3; ++b) {
      const double e = row * spec.transition[a][b];
      chi2 += (obs[a][b] - e) * (obs[a][b] - e) / e;
    }
  }
  // 6 degrees of freedom; 22.46 is the 0.999 quantile
  CHECK(chi2 < 22.46);
}

TEST_CASE("polya bookkeeping and the one-color urn") {
  PolyaUrn urn({.initial_counts = {1.0, 2.0}, .reinforcement = 0.5});
  Rng rng(3);
  for (int t = 0; t < 100; ++t) urn.draw(rng);
  CHECK(urn.total() == 3.0 + 100 * 0.5);
  CHECK(urn.counts()[0] + urn.counts()[1] == urn.total());

  const auto one = gen_polya_stream({.initial_counts = {4.0}, .seed = 1}, 600);
  for (float v : one.to_fp32_values()) CHECK(v == 0.f);
  CHECK_THROWS_AS(build_grid(one), Error);
}

TEST_CASE("gaussian stream statistics") {
  const auto g = gen_gaussian_stream(4, 5000, 2);
  double mean = 0.0;
  for (float v : g.to_fp32_values()) mean += v;
  mean /= 20000.0;
  CHECK(std::abs(mean) <= 3.0 / std::sqrt(20000.0));
  CHECK_FALSE(g.normalized());

  const auto line = analyze(gen_gaussian_stream(1, 10000, 3));
  REQUIRE(line.fit.ok());
  CHECK(std::abs(line.fit.d - 1.0) <= 0.2);
}

TEST_CASE("random walk edge cases") {
  const auto flat = gen_random_walk_stream(3, 50, 0.0, 1);
  for (float v : flat.to_fp32_values()) CHECK(v == 0.f);
  const auto w = gen_random_walk_stream(3, 50, 2.0, 5);
  const auto g = gen_gaussian_stream(3, 50, 5);
  for (std::size_t t = 1; t < 50; ++t)
    for (std::size_t k = 0; k < 3; ++k)
      CHECK(std::abs((double(w.value(t, k)) - w.value(t - 1, k)) - 2.0 * g.value(t, k)) < 1e-5);
}

TEST_CASE("repetition and names") {
  CHECK(gen_repetition_text("01", 6) == "010101");
  CHECK(gen_repetition_text("x", 4) == "xxxx");
  CHECK_THROWS_AS(gen_repetition_text("", 4), Error);

  const auto& list = default_name_list();
  const std::set<std::string> known(list.begin(), list.end());
  const auto text = gen_random_names(100000, list, 6);
  std::map<std::string, double> freq;
  std::size_t start = 0, total = 0;
  while (start < text.size()) {
    auto end = text.find(", ", start);
    if (end == std::string::npos) end = text.size();
    const auto name = text.substr(start, end - start);
    CHECK(known.count(name) == 1);
    freq[name] += 1;
    ++total;
    start = end + 2;
  }
  const double p = 1.0 / double(list.size());
  const double sigma = std::sqrt(double(total) * p * (1 - p));
  // Bonferroni over 100 names at 3 sigma is loose; use 4.5 sigma
  for (const auto& [name, f] : freq) CHECK(std::abs(f - double(total) * p) <= 4.5 * sigma);
}

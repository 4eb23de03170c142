// corrdim: correlation dimension of log-probability streams, plus the
// generators and text metrics used alongside it.
//
// Exit codes: 0 success, 1 error, 2 analysis finished but the fit window was
// unfittable. Diagnostics go to stderr; data goes to stdout or --out files.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "corrdim/dimension.hpp"
#include "corrdim/error.hpp"
#include "corrdim/geometry.hpp"
#include "corrdim/lpstream.hpp"
#include "corrdim/report.hpp"
#include "corrdim/synth.hpp"
#include "corrdim/textstats.hpp"

namespace {

using corrdim::Error;
using corrdim::ErrorCode;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitUnfittable = 2;

std::string render_value(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string out;
    for (const auto& e : v) out += (out.empty() ? "" : ",") + render_value(e);
    return out;
  }
  return v.dump();
}

// "corrdim <cmd> <positionals> --key value ..." from a resolved config; null
// entries are left out.
std::string canonical_command(const std::string& cmd, const std::vector<std::string>& positionals,
                              const json& config) {
  std::string out = "corrdim " + cmd;
  for (const auto& p : positionals) out += " " + p;
  for (const auto& [key, value] : config.items()) {
    if (value.is_null() || (value.is_boolean() && !value.get<bool>())) continue;
    std::string flag = key;
    for (auto& c : flag)
      if (c == '_') c = '-';
    out += " --" + flag;
    if (!value.is_boolean()) out += " " + render_value(value);
  }
  return out;
}

corrdim::RunManifest make_manifest(const std::string& cmd, const std::vector<std::string>& inputs,
                                   const json& config, std::optional<std::uint64_t> seed) {
  corrdim::RunManifest m;
  m.command_line = canonical_command(cmd, inputs, config);
  m.config = config;
  for (const auto& path : inputs) m.input_digests[path] = corrdim::file_digest(path);
  m.seed = seed;
  m.timestamp = corrdim::utc_timestamp();
  return m;
}

void emit_json(const json& doc, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << doc.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot open " + path + " for writing");
  out << doc.dump(2) << '\n';
}

std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw Error(ErrorCode::io, "cannot open " + path + " for writing");
  return out;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ------------------------------------------------------------------ fit flags

struct FitFlags {
  double eta = 1.0;
  double min_count = 20.0;
  std::optional<double> eps_floor;
  std::size_t min_points = 8;

  void attach(CLI::App* cmd) {
    cmd->add_option("--eta", eta, "Upper clip coefficient: S <= eta / N")->capture_default_str();
    cmd->add_option("--min-count", min_count, "Lower clip: S >= min_count / (N (N-1))")->capture_default_str();
    cmd->add_option("--eps-floor", eps_floor, "Only fit thresholds eps >= this value");
    cmd->add_option("--min-points", min_points, "Minimum grid points in the fit window")->capture_default_str();
  }

  corrdim::FitConfig config() const { return {eta, min_count, eps_floor, min_points}; }
};

// -------------------------------------------------------------------- analyze

struct AnalyzeArgs {
  std::string stream;
  FitFlags fit;
  std::size_t tau = 1;
  std::optional<std::size_t> reduce;
  std::string reduce_space = "prob";
  std::size_t tile = 512;
  std::size_t per_decade = 48;
  std::size_t sample_pairs = std::size_t{1} << 20;
  std::uint64_t grid_seed = corrdim::GridOptions{}.seed;
  std::optional<float> clamp;
  std::string json_out;
  std::string csv_out;
};

int run_analyze(const AnalyzeArgs& a, unsigned threads) {
  const auto stream = corrdim::read_stream_file(a.stream);
  corrdim::AnalyzeOptions opt;
  opt.fit = a.fit.config();
  opt.tau = a.tau;
  opt.reduce_v = a.reduce;
  opt.reduce_space = corrdim::parse_reduce_space(a.reduce_space);
  opt.grid.per_decade = a.per_decade;
  opt.grid.sample_pairs = a.sample_pairs;
  opt.grid.seed = a.grid_seed;
  opt.count.tile = a.tile;
  opt.count.threads = threads;
  opt.clamp_floor = a.clamp;

  const auto report = corrdim::analyze(stream, opt);
  const json config = corrdim::config_to_json(opt);
  const auto manifest = make_manifest("analyze", {a.stream}, config, opt.grid.seed);

  json doc = corrdim::report_to_json(report);
  doc["manifest"] = manifest.to_json();
  emit_json(doc, a.json_out);
  if (!a.csv_out.empty()) {
    auto out = open_out(a.csv_out);
    corrdim::write_ci_csv(report.ci, out);
    out << "# manifest=" << manifest.to_json().dump() << '\n';
  }
  if (!report.fit.ok()) {
    std::cerr << "corrdim analyze: " << report.fit.diagnostic << '\n';
    return kExitUnfittable;
  }
  return kExitOk;
}

// ------------------------------------------------------------------------ fit

struct FitArgs {
  std::string csv;
  FitFlags fit;
  std::optional<std::uint64_t> n_steps;
  std::string json_out;
};

int run_fit(const FitArgs& a) {
  std::ifstream in(a.csv);
  if (!in) throw Error(ErrorCode::io, "cannot open " + a.csv);
  const auto ci = corrdim::read_ci_csv(in, a.n_steps);
  const auto cfg = a.fit.config();
  const auto fit = corrdim::fit_dimension(ci, cfg);

  json config = {{"eta", cfg.eta},
                 {"min_count", cfg.min_count},
                 {"eps_floor", cfg.eps_floor ? json(*cfg.eps_floor) : json(nullptr)},
                 {"min_points", cfg.min_points},
                 {"n_steps", ci.n_steps}};
  json doc = corrdim::fit_to_json(fit);
  doc["n_steps"] = ci.n_steps;
  doc["manifest"] = make_manifest("fit", {a.csv}, config, std::nullopt).to_json();
  emit_json(doc, a.json_out);
  if (!fit.ok()) {
    std::cerr << "corrdim fit: " << fit.diagnostic << '\n';
    return kExitUnfittable;
  }
  return kExitOk;
}

// -------------------------------------------------------------------- recplot

struct RecplotArgs {
  std::string stream;
  double eps = 0.0;
  std::string out;
  std::optional<float> clamp;
};

int run_recplot(const RecplotArgs& a) {
  auto stream = corrdim::read_stream_file(a.stream);
  if (a.clamp) stream = corrdim::clamp_below(stream, *a.clamp);
  const auto m = corrdim::recurrence_matrix(stream, a.eps);
  json config = {{"eps", a.eps}, {"clamp_floor", a.clamp ? json(*a.clamp) : json(nullptr)}, {"out", a.out}};
  const std::string comment = "manifest=" + make_manifest("recplot", {a.stream}, config, std::nullopt).to_json().dump();
  if (ends_with(a.out, ".csv")) {
    auto out = open_out(a.out);
    m.write_csv(out, comment);
  } else if (ends_with(a.out, ".pgm")) {
    auto out = open_out(a.out, true);
    m.write_pgm(out, comment);
  } else {
    throw Error(ErrorCode::invalid_argument, "--out must end in .pgm or .csv");
  }
  std::cerr << "recurrent pairs (i<j): " << (m.count_true() - m.n()) / 2 << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------- synth

struct SynthArgs {
  std::string out;
  std::uint64_t seed = 1;
  std::size_t steps = 1000;
  bool fp16 = false;
  // lin-tegmark
  double q = 0.5;
  std::size_t depth = 10;
  std::size_t branching = 2;
  int root = 0;
  // markov
  std::size_t alphabet = 3;
  std::size_t order = 1;
  std::string table = "random";
  std::uint64_t table_seed = 7;
  // polya
  std::vector<double> counts{1.0, 1.0};
  double reinforcement = 1.0;
  // gaussian / random walk
  std::size_t dim = 16;
  double sigma = 1.0;
  // repetition
  std::string pattern = "01";
  std::size_t length = 1000;
  // names
  std::size_t words = 1000;
  std::string names_file;
};

void write_text_artifact(const std::string& path, const std::string& text, const corrdim::RunManifest& manifest) {
  {
    auto out = open_out(path, true);
    out << text;
  }
  auto side = open_out(path + ".manifest.json");
  side << manifest.to_json().dump(2) << '\n';
}

void write_stream_artifact(const std::string& path, corrdim::LogProbStream stream, bool fp16,
                           const corrdim::RunManifest& manifest) {
  auto meta = stream.meta();
  meta.extra["manifest"] = manifest.to_json();
  stream = stream.with_meta(std::move(meta));
  if (fp16) stream = stream.to_precision(corrdim::Precision::fp16);
  corrdim::write_stream_file(stream, path);
}

int run_synth(const std::string& kind, const SynthArgs& a) {
  if (a.out.empty()) throw Error(ErrorCode::invalid_argument, "--out is required");
  json config = {{"out", a.out}, {"seed", a.seed}};
  if (kind == "lin-tegmark") {
    corrdim::LinTegmarkSpec spec{a.q, a.depth, a.branching, static_cast<std::uint8_t>(a.root), a.seed};
    if (a.root != 0 && a.root != 1) throw Error(ErrorCode::invalid_argument, "--root must be 0 or 1");
    const auto leaves = corrdim::gen_lin_tegmark(spec);
    std::string text;
    text.reserve(leaves.size());
    for (auto s : leaves) text.push_back(static_cast<char>('0' + s));
    config.update({{"q", a.q}, {"depth", a.depth}, {"branching", a.branching}, {"root", a.root}});
    write_text_artifact(a.out, text, make_manifest("synth lin-tegmark", {}, config, a.seed));
  } else if (kind == "markov") {
    corrdim::MarkovSpec spec;
    if (a.table == "cycle") {
      spec = corrdim::MarkovSpec::cycle(a.alphabet, a.seed);
    } else if (a.table == "uniform") {
      spec = corrdim::MarkovSpec::uniform(a.alphabet, a.order, a.seed);
    } else if (a.table == "random") {
      spec = corrdim::MarkovSpec::random(a.alphabet, a.order, a.table_seed, a.seed);
    } else {
      throw Error(ErrorCode::invalid_argument, "--table must be cycle, uniform or random");
    }
    config.update({{"alphabet", a.alphabet}, {"order", spec.order}, {"table", a.table},
                   {"table_seed", a.table_seed}, {"steps", a.steps}, {"fp16", a.fp16}});
    write_stream_artifact(a.out, corrdim::gen_markov_stream(spec, a.steps), a.fp16,
                          make_manifest("synth markov", {}, config, a.seed));
  } else if (kind == "polya") {
    corrdim::PolyaSpec spec{a.counts, a.reinforcement, a.seed};
    config.update({{"counts", a.counts}, {"reinforcement", a.reinforcement}, {"steps", a.steps}, {"fp16", a.fp16}});
    write_stream_artifact(a.out, corrdim::gen_polya_stream(spec, a.steps), a.fp16,
                          make_manifest("synth polya", {}, config, a.seed));
  } else if (kind == "gaussian") {
    config.update({{"dim", a.dim}, {"steps", a.steps}, {"fp16", a.fp16}});
    write_stream_artifact(a.out, corrdim::gen_gaussian_stream(a.dim, a.steps, a.seed), a.fp16,
                          make_manifest("synth gaussian", {}, config, a.seed));
  } else if (kind == "random-walk") {
    config.update({{"dim", a.dim}, {"steps", a.steps}, {"sigma", a.sigma}, {"fp16", a.fp16}});
    write_stream_artifact(a.out, corrdim::gen_random_walk_stream(a.dim, a.steps, a.sigma, a.seed), a.fp16,
                          make_manifest("synth random-walk", {}, config, a.seed));
  } else if (kind == "repetition") {
    config.update({{"pattern", a.pattern}, {"length", a.length}});
    config.erase("seed");
    write_text_artifact(a.out, corrdim::gen_repetition_text(a.pattern, a.length),
                        make_manifest("synth repetition", {}, config, std::nullopt));
  } else if (kind == "names") {
    std::vector<std::string> names;
    std::vector<std::string> inputs;
    if (a.names_file.empty()) {
      names = corrdim::default_name_list();
    } else {
      std::istringstream in(read_text_file(a.names_file));
      for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") != std::string::npos) names.push_back(line);
      }
      inputs.push_back(a.names_file);
    }
    config.update({{"words", a.words}});
    write_text_artifact(a.out, corrdim::gen_random_names(a.words, names, a.seed),
                        make_manifest("synth names", inputs, config, a.seed));
  } else {
    throw Error(ErrorCode::invalid_argument, "unknown synth kind '" + kind + "'");
  }
  return kExitOk;
}

// ------------------------------------------------------------------ textstats

struct TextstatsArgs {
  std::string file;
  std::vector<std::string> metrics{"rep", "distinct", "zipf", "heaps"};
  std::size_t n = 2;
  std::string tokenize = "whitespace";
  std::size_t top_k = 1000;
  std::string json_out;
};

int run_textstats(const TextstatsArgs& a) {
  const auto mode = corrdim::parse_tokenization(a.tokenize);
  const auto tokens = corrdim::tokenize(read_text_file(a.file), mode);
  if (tokens.empty()) throw Error(ErrorCode::invalid_argument, "text has no tokens");

  json values = json::object();
  for (const auto& metric : a.metrics) {
    if (metric == "rep") {
      values["rep_" + std::to_string(a.n)] = corrdim::rep_n(tokens, a.n);
    } else if (metric == "distinct") {
      values["distinct_" + std::to_string(a.n)] = corrdim::distinct_n(tokens, a.n);
    } else if (metric == "zipf") {
      values["zipf"] = corrdim::zipf_coefficient(tokens, a.top_k);
    } else if (metric == "heaps") {
      values["heaps"] = corrdim::heaps_coefficient(tokens);
    } else {
      throw Error(ErrorCode::invalid_argument, "unknown metric '" + metric + "'");
    }
  }
  json config = {{"metric", a.metrics}, {"n", a.n}, {"tokenize", a.tokenize}, {"top_k", a.top_k}};
  json doc = {{"tokenization", std::string(corrdim::to_string(mode))},
              {"n_tokens", tokens.size()},
              {"metrics", values}};
  doc["manifest"] = make_manifest("textstats", {a.file}, config, std::nullopt).to_json();
  emit_json(doc, a.json_out);
  return kExitOk;
}

// ---------------------------------------------------------------- streamstats

int run_streamstats(const std::string& path, const std::string& json_out) {
  const auto stream = corrdim::read_stream_file(path);
  const auto norm = corrdim::validate_normalization(stream);
  json doc = {{"n_steps", stream.n_steps()},
              {"dim", stream.dim()},
              {"precision", stream.precision() == corrdim::Precision::fp16 ? "fp16" : "fp32"},
              {"normalized", stream.normalized()},
              {"max_abs_logsumexp", norm.max_abs_logsumexp},
              {"perplexity", nullptr},
              {"conditional_entropy", nullptr}};
  if (stream.normalized()) {
    doc["conditional_entropy"] = corrdim::conditional_entropy(stream);
    if (stream.has_token_ids()) doc["perplexity"] = corrdim::perplexity(stream);
  }
  doc["meta"] = stream.meta().to_json();
  doc["manifest"] = make_manifest("streamstats", {path}, json::object(), std::nullopt).to_json();
  emit_json(doc, json_out);
  return kExitOk;
}

// ------------------------------------------------------------------- validate

int run_validate(const std::string& path) {
  // read_stream checks every invariant on load
  const auto stream = corrdim::read_stream_file(path);
  const auto norm = corrdim::validate_normalization(stream);
  json doc = {{"valid", true},
              {"n_steps", stream.n_steps()},
              {"dim", stream.dim()},
              {"normalized", stream.normalized()},
              {"has_token_ids", stream.has_token_ids()},
              {"max_abs_logsumexp", norm.max_abs_logsumexp}};
  std::cout << doc.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Correlation dimension of next-token log-probability streams"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: CORRDIM_THREADS or all cores)");

  AnalyzeArgs analyze;
  auto* cmd_analyze = app.add_subcommand("analyze", "Correlation integral and dimension fit of a stream");
  cmd_analyze->add_option("stream", analyze.stream, "LPRS stream")->required();
  analyze.fit.attach(cmd_analyze);
  cmd_analyze->add_option("--tau", analyze.tau, "Delay embedding length")->capture_default_str();
  cmd_analyze->add_option("--reduce,--reduce-v", analyze.reduce, "Modulo vocabulary reduction width v");
  cmd_analyze->add_option("--reduce-space", analyze.reduce_space, "prob | log")->capture_default_str();
  cmd_analyze->add_option("--tile", analyze.tile, "Tile side for the fused counter")->capture_default_str();
  cmd_analyze->add_option("--grid-per-decade", analyze.per_decade, "Thresholds per decade")->capture_default_str();
  cmd_analyze->add_option("--grid-sample,--grid-sample-pairs", analyze.sample_pairs, "Pairs sampled to size the grid")->capture_default_str();
  cmd_analyze->add_option("--grid-seed", analyze.grid_seed, "Seed for grid pair sampling")->capture_default_str();
  cmd_analyze->add_option("--clamp-neginf,--clamp-floor", analyze.clamp, "Clamp entries below this value (incl. -inf)");
  cmd_analyze->add_option("--json", analyze.json_out, "Write the JSON report here (default stdout)");
  cmd_analyze->add_option("--csv", analyze.csv_out, "Also write (eps, S) CSV here");

  FitArgs fit;
  auto* cmd_fit = app.add_subcommand("fit", "Fit the dimension of an (eps, S) CSV");
  cmd_fit->add_option("csv", fit.csv, "CSV with eps,S rows")->required();
  fit.fit.attach(cmd_fit);
  cmd_fit->add_option("--n-steps", fit.n_steps, "Sequence length N (overrides the CSV header)");
  cmd_fit->add_option("--json", fit.json_out, "Write the JSON result here (default stdout)");

  RecplotArgs recplot;
  auto* cmd_recplot = app.add_subcommand("recplot", "Recurrence matrix as PGM or CSV");
  cmd_recplot->add_option("stream", recplot.stream, "LPRS stream")->required();
  cmd_recplot->add_option("--eps", recplot.eps, "Distance threshold")->required();
  cmd_recplot->add_option("--out", recplot.out, "Output .pgm or .csv")->required();
  cmd_recplot->add_option("--clamp-neginf,--clamp-floor", recplot.clamp, "Clamp entries below this value (incl. -inf)");

  SynthArgs synth;
  std::string synth_kind;
  auto* cmd_synth = app.add_subcommand("synth", "Synthetic streams and texts");
  cmd_synth->add_option("kind", synth_kind,
                        "lin-tegmark | markov | polya | gaussian | random-walk | repetition | names")
      ->required();
  cmd_synth->add_option("--out", synth.out, "Output file")->required();
  cmd_synth->add_option("--seed", synth.seed)->capture_default_str();
  cmd_synth->add_option("--steps", synth.steps, "Stream length")->capture_default_str();
  cmd_synth->add_flag("--fp16", synth.fp16, "Store the payload as FP16");
  cmd_synth->add_option("--q", synth.q, "lin-tegmark: keep probability")->capture_default_str();
  cmd_synth->add_option("--depth", synth.depth, "lin-tegmark: generations")->capture_default_str();
  cmd_synth->add_option("--branching", synth.branching, "lin-tegmark: children per node")->capture_default_str();
  cmd_synth->add_option("--root", synth.root, "lin-tegmark: root symbol")->capture_default_str();
  cmd_synth->add_option("--alphabet", synth.alphabet, "markov: symbols")->capture_default_str();
  cmd_synth->add_option("--order", synth.order, "markov: context length")->capture_default_str();
  cmd_synth->add_option("--table", synth.table, "markov: cycle | uniform | random")->capture_default_str();
  cmd_synth->add_option("--table-seed", synth.table_seed, "markov: seed of the random table")->capture_default_str();
  cmd_synth->add_option("--counts", synth.counts, "polya: initial counts")->delimiter(',');
  cmd_synth->add_option("--reinforcement", synth.reinforcement, "polya: added per draw")->capture_default_str();
  cmd_synth->add_option("--dim", synth.dim, "gaussian/random-walk: dimension")->capture_default_str();
  cmd_synth->add_option("--sigma", synth.sigma, "random-walk: step standard deviation")->capture_default_str();
  cmd_synth->add_option("--pattern", synth.pattern, "repetition: pattern")->capture_default_str();
  cmd_synth->add_option("--length", synth.length, "repetition: characters")->capture_default_str();
  cmd_synth->add_option("--words", synth.words, "names: word budget")->capture_default_str();
  cmd_synth->add_option("--names-file", synth.names_file, "names: one name per line");

  TextstatsArgs textstats;
  auto* cmd_textstats = app.add_subcommand("textstats", "Rep-N, Distinct-N, Zipf and Heaps of a text");
  cmd_textstats->add_option("file", textstats.file, "UTF-8 text")->required();
  cmd_textstats->add_option("--metric", textstats.metrics, "rep, distinct, zipf, heaps")->delimiter(',');
  cmd_textstats->add_option("--n", textstats.n, "n-gram order")->capture_default_str();
  cmd_textstats->add_option("--tokenize", textstats.tokenize, "whitespace | char")->capture_default_str();
  cmd_textstats->add_option("--top-k", textstats.top_k, "Zipf ranks")->capture_default_str();
  cmd_textstats->add_option("--json", textstats.json_out, "Write JSON here (default stdout)");

  std::string stats_path, stats_json;
  auto* cmd_streamstats = app.add_subcommand("streamstats", "Perplexity and conditional entropy of a stream");
  cmd_streamstats->add_option("stream", stats_path, "LPRS stream")->required();
  cmd_streamstats->add_option("--json", stats_json, "Write JSON here (default stdout)");

  std::string validate_path;
  auto* cmd_validate = app.add_subcommand("validate", "Check stream invariants");
  cmd_validate->add_option("stream", validate_path, "LPRS stream")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    if (*cmd_analyze) return run_analyze(analyze, threads);
    if (*cmd_fit) return run_fit(fit);
    if (*cmd_recplot) return run_recplot(recplot);
    if (*cmd_synth) return run_synth(synth_kind, synth);
    if (*cmd_textstats) return run_textstats(textstats);
    if (*cmd_streamstats) return run_streamstats(stats_path, stats_json);
    if (*cmd_validate) return run_validate(validate_path);
  } catch (const Error& e) {
    std::cerr << "corrdim: " << corrdim::to_string(e.code()) << ": " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "corrdim: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

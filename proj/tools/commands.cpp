#include "commands.hpp"

#include <omp.h>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pti/baselines.hpp"
#include "pti/corpus.hpp"
#include "pti/count_table.hpp"
#include "pti/eval.hpp"
#include "pti/index.hpp"
#include "pti/index_io.hpp"
#include "pti/scorer.hpp"
#include "pti/text.hpp"

namespace pti::cli {
namespace {

// Raised for flag combinations CLI11 cannot express.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TokenizerFlags {
  int n_min = 2;
  int n_max = 5;
  bool wildcard = false;

  TokenizerConfig config() const {
    TokenizerConfig c{n_min, n_max, wildcard};
    c.validate();
    return c;
  }
};

void add_tokenizer_flags(CLI::App* cmd, TokenizerFlags& flags) {
  cmd->add_option("--ngram-min", flags.n_min, "Smallest n-gram length")->check(CLI::PositiveNumber);
  cmd->add_option("--ngram-max", flags.n_max, "Largest n-gram length")->check(CLI::PositiveNumber);
  cmd->add_flag("--wildcard", flags.wildcard, "Add single-character wildcard n-grams");
}

const std::string kPivotLanguage = "pl";
const std::string kTargetLanguage = "tl";

void write_output(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    if (!std::cout) throw std::system_error(EIO, std::generic_category(), "cannot write standard output");
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::system_error(errno, std::generic_category(), "cannot write " + path);
  out << text;
  out.close();
  if (!out) throw std::system_error(errno, std::generic_category(), "write failed for " + path);
}

std::string read_input(const std::string& path) {
  if (path.empty() || path == "-") {
    return std::string(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::system_error(errno, std::generic_category(), "cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Corpus optional_corpus(const std::string& path, const std::string& language) {
  return path.empty() ? Corpus() : load_corpus(path, language);
}

std::string format_score(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value, std::chars_format::general, 12);
  return std::string(buffer, result.ptr);
}

// One normalized mention per non-blank line; only the first TAB field is used.
std::vector<std::string> read_mentions(const std::string& path) {
  const std::string text = read_input(path);
  const std::string source = path.empty() ? "-" : path;
  std::vector<std::string> mentions;
  std::size_t line = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    ++line;
    std::string_view record(text.data() + start, end - start);
    start = end + 1;
    if (!record.empty() && record.back() == '\r') record.remove_suffix(1);
    record = record.substr(0, record.find('\t'));
    std::string mention;
    try {
      mention = normalize_mention(record);
    } catch (const std::invalid_argument& e) {
      throw ParseError(source, line, e.what());
    }
    if (!mention.empty()) mentions.push_back(std::move(mention));
  }
  return mentions;
}

std::vector<Query> reclassified(std::vector<Query> queries, const Corpus& train) {
  for (Query& q : queries) q.type = classify_query(q.mention, q.entity, train);
  return queries;
}

std::vector<std::pair<std::string, double>> ceilings(const Corpus& pivot, const Corpus& train, bool zero_shot,
                                                     std::span<const Query> test) {
  std::vector<std::pair<std::string, double>> out;
  const auto pl = pivot.entity_set();
  out.emplace_back("PL", ceiling_recall(pl, test));
  if (zero_shot || train.empty()) return out;
  const auto tl = train.entity_set();
  out.emplace_back("TL", ceiling_recall(tl, test));
  std::vector<std::string> both;
  std::set_union(pl.begin(), pl.end(), tl.begin(), tl.end(), std::back_inserter(both));
  out.emplace_back("PL+TL", ceiling_recall(both, test));
  return out;
}

void apply_threads(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

// --threads, or PTI_THREADS when the flag is absent; 0 keeps the runtime default.
int resolve_threads(const CLI::Option* flag, int value) {
  if (flag->count() > 0) return value;
  const char* env = std::getenv("PTI_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  int parsed = 0;
  const std::string_view text(env);
  const auto result = std::from_chars(text.data(), text.data() + text.size(), parsed);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size() || parsed < 1) {
    throw UsageError("PTI_THREADS must be a positive integer, got '" + std::string(text) + "'");
  }
  return parsed;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::size_t entities = 1000;
  std::size_t pairs = 10000;
  std::size_t pivot_pairs = 0;
  std::string alphabet = "abcdefghijklmnopqrstuvwxyz";
  std::uint64_t seed = 0;
  std::string language = "xx";
  std::string output;
  std::string pivot_output;
};

void run_synth(const SynthArgs& args) {
  if (args.pivot_pairs > 0) {
    if (args.pivot_output.empty()) throw UsageError("--pivot-pairs needs --pivot-out");
    if (args.output.empty()) throw UsageError("--pivot-pairs needs -o for the target corpus");
    const SyntheticPair data =
        generate_synthetic_pair(args.entities, args.pairs, args.pivot_pairs, args.alphabet, args.seed);
    write_output(format_corpus(data.target), args.output);
    write_output(format_corpus(data.pivot), args.pivot_output);
    return;
  }
  if (!args.pivot_output.empty()) throw UsageError("--pivot-out needs --pivot-pairs");
  write_output(format_corpus(generate_synthetic(args.entities, args.pairs, args.alphabet, args.seed, args.language)),
               args.output);
}

// ---------------------------------------------------------------- split

struct SplitArgs {
  std::string corpus;
  std::size_t max_per_type = 1000;
  std::uint64_t seed = 0;
  std::string output_dir;
};

void run_split(const SplitArgs& args) {
  const Corpus corpus = load_corpus(args.corpus, kTargetLanguage);
  write_split(build_eval_split(corpus, args.max_per_type, args.seed), args.output_dir);
}

// ---------------------------------------------------------------- classify

struct ClassifyArgs {
  std::string queries;
  std::string train;
  std::string output;
};

void run_classify(const ClassifyArgs& args) {
  const Corpus train = optional_corpus(args.train, kTargetLanguage);
  write_output(format_queries(reclassified(load_queries(args.queries), train)), args.output);
}

// ---------------------------------------------------------------- build

struct BuildArgs {
  std::string target;
  std::string pivot;
  double alpha = 1.0;
  double tau = 0.0;
  std::optional<double> beta;
  std::optional<double> gamma;
  TokenizerFlags tokenizer;
  std::string output;
};

PtiIndex build_from_args(const BuildArgs& args, int threads) {
  if (args.target.empty() && args.pivot.empty()) throw UsageError("build needs --target, --pivot or both");
  const TokenizerConfig config = args.tokenizer.config();
  const Corpus target = optional_corpus(args.target, kTargetLanguage);
  const Corpus pivot = optional_corpus(args.pivot, kPivotLanguage);
  const CountTable target_counts = count_cooccurrences(target, config, threads);
  const CountTable pivot_counts = count_cooccurrences(pivot, config, threads);

  PtiIndex index;
  if (args.gamma || args.beta) {
    if (pivot.empty()) throw UsageError("--beta and --gamma need a non-empty --pivot");
    if (!args.gamma && !target.empty()) throw UsageError("--beta with --target needs --gamma");
    PtiIndex pivot_index;
    if (args.beta) {
      const auto te = target.entity_set();
      const auto pe = pivot.entity_set();
      std::vector<std::string> universe;
      std::set_union(te.begin(), te.end(), pe.begin(), pe.end(), std::back_inserter(universe));
      pivot_index = smooth_pivot_probabilities(pivot_counts, *args.beta, universe);
    } else {
      pivot_index = build_index(CountTable(config), pivot_counts, 1.0);
    }
    if (args.gamma) {
      if (target.empty()) throw UsageError("--gamma needs a non-empty --target");
      index = fuse_indexes(build_index(target_counts, CountTable(config), 1.0), pivot_index, *args.gamma);
    } else {
      index = std::move(pivot_index);
    }
  } else {
    index = build_index(target_counts, pivot_counts, args.alpha);
  }
  return apply_threshold(index, args.tau);
}

void run_build(const BuildArgs& args, int threads) { save_index(build_from_args(args, threads), args.output); }

// ---------------------------------------------------------------- query

struct QueryArgs {
  std::string method = "pti";
  std::string index;
  std::string target;
  std::string pivot;
  std::string mentions;
  std::size_t k = kDefaultK;
  double lambda = 1.0;
  bool normalize = false;
  bool zero_shot = false;
  std::string format = "tsv";
  std::string output;
};

void run_query(const QueryArgs& args) {
  std::function<CandidateList(const std::string&)> generate;
  if (args.method == "pti") {
    if (args.index.empty()) throw UsageError("query --method pti needs --index");
    if (!args.target.empty() || !args.pivot.empty()) throw UsageError("--target/--pivot are for --method wikipriors");
    auto index = std::make_shared<const PtiIndex>(load_index(args.index));
    PtiGenerator pti(index, args.lambda, args.normalize);
    generate = [pti, k = args.k](const std::string& m) { return pti(m, k); };
  } else {
    if (args.pivot.empty()) throw UsageError("query --method wikipriors needs --pivot");
    if (!args.index.empty()) throw UsageError("--index is for --method pti");
    auto index = std::make_shared<const WikiPriorsIndex>(
        build_wikipriors(optional_corpus(args.target, kTargetLanguage), load_corpus(args.pivot, kPivotLanguage)));
    generate = [index, k = args.k, zero_shot = args.zero_shot](const std::string& m) {
      return index->generate(m, k, zero_shot);
    };
  }

  std::string out;
  for (const std::string& mention : read_mentions(args.mentions)) {
    const CandidateList list = generate(mention);
    if (args.format == "jsonl") {
      nlohmann::ordered_json line;
      line["mention"] = mention;
      line["candidates"] = nlohmann::ordered_json::array();
      for (std::size_t r = 0; r < list.size(); ++r) {
        line["candidates"].push_back(
            {{"rank", r + 1}, {"entity", list.candidates[r].entity}, {"score", list.candidates[r].score}});
      }
      out += line.dump();
      out += '\n';
    } else {
      for (std::size_t r = 0; r < list.size(); ++r) {
        out += mention + '\t' + std::to_string(r + 1) + '\t' + list.candidates[r].entity + '\t' +
               format_score(list.candidates[r].score) + '\n';
      }
    }
  }
  write_output(out, args.output);
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string method = "pti";
  std::string train;
  std::string pivot;
  std::string valid;
  std::string test;
  std::optional<double> alpha;
  std::optional<double> lambda;
  double tau = 0.0;
  std::size_t k = kDefaultK;
  bool zero_shot = false;
  bool force_sweep = false;
  TokenizerFlags tokenizer;
  std::string output;
};

EvalReport run_pti_eval(const EvalArgs& args, const Corpus& train, const Corpus& pivot,
                        std::span<const Query> valid, std::span<const Query> test, int threads) {
  const TokenizerConfig config = args.tokenizer.config();
  const CountTable train_counts = count_cooccurrences(train, config, threads);
  const CountTable pivot_counts = count_cooccurrences(pivot, config, threads);

  const bool sweeping = args.force_sweep || !args.alpha || !args.lambda;
  if (sweeping && valid.empty()) {
    throw UsageError("--alpha and --lambda must be set unless --valid is given for the sweep");
  }
  std::vector<double> alphas;
  if (args.alpha) {
    alphas = {*args.alpha};
  } else if (args.zero_shot) {
    alphas = {1.0};  // no target counts to weigh
  } else {
    alphas.assign(kAlphaGrid.begin(), kAlphaGrid.end());
  }
  std::vector<double> lambdas;
  if (args.lambda) {
    lambdas = {*args.lambda};
  } else {
    lambdas.assign(kLambdaGrid.begin(), kLambdaGrid.end());
  }

  std::vector<SweepPoint> grid;
  for (double alpha : alphas) {
    if (alpha < 0.0) throw UsageError("--alpha must be >= 0");
    // Shared by every lambda at this alpha and built on first use.
    auto cache = std::make_shared<std::shared_ptr<const PtiIndex>>();
    for (double lambda : lambdas) {
      EvalConfig cfg;
      cfg.method = "pti";
      cfg.alpha = alpha;
      cfg.lambda = lambda;
      cfg.tau = args.tau;
      cfg.zero_shot = args.zero_shot;
      cfg.tokenizer = config;
      grid.push_back({cfg, [&, cache, alpha, lambda]() -> CandidateGenerator {
                        if (!*cache) {
                          *cache = std::make_shared<const PtiIndex>(
                              apply_threshold(build_index(train_counts, pivot_counts, alpha), args.tau));
                        }
                        PtiGenerator pti(*cache, lambda);
                        return [pti](const std::string& m, std::size_t k) { return pti(m, k); };
                      }});
    }
  }
  if (!sweeping) {
    return make_report(grid.front().config, recall_breakdown(grid.front().make_generator(), test, args.k));
  }
  return sweep(grid, valid, test, args.k).report;
}

void run_eval(const EvalArgs& args, int threads) {
  const Corpus pivot = load_corpus(args.pivot, kPivotLanguage);
  const Corpus train = args.zero_shot ? Corpus() : optional_corpus(args.train, kTargetLanguage);
  if (!args.zero_shot && args.train.empty()) throw UsageError("eval needs --train unless --zero-shot");
  const std::vector<Query> test = reclassified(load_queries(args.test), train);
  const std::vector<Query> valid =
      args.valid.empty() ? std::vector<Query>{} : reclassified(load_queries(args.valid), train);
  if (test.empty()) throw UsageError("test set is empty");

  EvalReport report;
  if (args.method == "pti") {
    report = run_pti_eval(args, train, pivot, valid, test, threads);
  } else {
    const WikiPriorsIndex index = build_wikipriors(train, pivot);
    const CandidateGenerator generator = [&index, zero_shot = args.zero_shot](const std::string& m, std::size_t k) {
      return index.generate(m, k, zero_shot);
    };
    EvalConfig cfg;
    cfg.method = "wikipriors";
    cfg.zero_shot = args.zero_shot;
    cfg.tokenizer = args.tokenizer.config();
    report = make_report(cfg, recall_breakdown(generator, test, args.k));
  }
  report.ceiling = ceilings(pivot, train, args.zero_shot, test);
  write_output(report.to_json().dump(2) + '\n', args.output);
}

// ---------------------------------------------------------------- ceiling

struct CeilingArgs {
  std::string test;
  std::string train;
  std::string pivot;
  bool zero_shot = false;
  std::string output;
};

void run_ceiling(const CeilingArgs& args) {
  const Corpus pivot = load_corpus(args.pivot, kPivotLanguage);
  const Corpus train = args.zero_shot ? Corpus() : optional_corpus(args.train, kTargetLanguage);
  const std::vector<Query> test = load_queries(args.test);
  if (test.empty()) throw UsageError("test set is empty");
  nlohmann::ordered_json json = nlohmann::ordered_json::object();
  for (const auto& [label, value] : ceilings(pivot, train, args.zero_shot, test)) json[label] = value;
  write_output(json.dump(2) + '\n', args.output);
}

int report_error(const std::string& message, int code) {
  std::cerr << "pti: " << message << '\n';
  return code;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Pivot token index candidate generation for cross-lingual entity linking", "pti"};
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  CLI::Option* threads_flag =
      app.add_option("--threads", threads, "Worker threads (default: PTI_THREADS or all cores)")
          ->check(CLI::PositiveNumber);

  const auto alpha_range = CLI::Range(0.0, std::numeric_limits<double>::max());
  const CLI::Validator tau_range(
      [](std::string& text) {
        double value = 0.0;
        const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
        const bool ok = result.ec == std::errc() && result.ptr == text.data() + text.size();
        return ok && value >= 0.0 && value < 1.0 ? std::string() : "must be in [0, 1): " + text;
      },
      "[0,1)");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic mention-entity corpus");
  synth_cmd->add_option("--entities", synth.entities, "Number of entities")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--pairs", synth.pairs, "Number of sampled occurrences")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--pivot-pairs", synth.pivot_pairs, "Also write a related pivot corpus of this size");
  synth_cmd->add_option("--alphabet", synth.alphabet, "Symbols used to spell names");
  synth_cmd->add_option("--seed", synth.seed, "Random seed");
  synth_cmd->add_option("--language", synth.language, "Language tag of a single corpus");
  synth_cmd->add_option("-o,--output", synth.output, "Output corpus (default: stdout)");
  synth_cmd->add_option("--pivot-out", synth.pivot_output, "Output pivot corpus");

  SplitArgs split;
  auto* split_cmd = app.add_subcommand("split", "Split a target corpus into train, validation and test");
  split_cmd->add_option("--corpus", split.corpus, "Target corpus TSV")->required();
  split_cmd->add_option("--max-per-type", split.max_per_type, "Queries per type and set")
      ->check(CLI::PositiveNumber);
  split_cmd->add_option("--seed", split.seed, "Random seed");
  split_cmd->add_option("-o,--output", split.output_dir, "Output directory")->required();

  ClassifyArgs classify;
  auto* classify_cmd = app.add_subcommand("classify", "Label queries easy, medium or hard");
  classify_cmd->add_option("--queries", classify.queries, "Query TSV")->required();
  classify_cmd->add_option("--train", classify.train, "Target training corpus (absent: all hard)")
      ;
  classify_cmd->add_option("-o,--output", classify.output, "Output query TSV (default: stdout)");

  BuildArgs build;
  auto* build_cmd = app.add_subcommand("build", "Build a PTI index file");
  build_cmd->add_option("--target", build.target, "Target-language corpus TSV");
  build_cmd->add_option("--pivot", build.pivot, "Pivot-language corpus TSV");
  build_cmd->add_option("--alpha", build.alpha, "Pivot count weight")->check(alpha_range);
  build_cmd->add_option("--tau", build.tau, "Drop entries with probability below tau")->check(tau_range);
  build_cmd->add_option("--beta", build.beta, "Additive smoothing of the pivot probabilities")
      ->check(CLI::PositiveNumber);
  build_cmd->add_option("--gamma", build.gamma, "Fuse target and pivot probabilities with this weight")
      ->check(alpha_range);
  add_tokenizer_flags(build_cmd, build.tokenizer);
  build_cmd->add_option("-o,--output", build.output, "Index file")->required();

  QueryArgs query;
  auto* query_cmd = app.add_subcommand("query", "Generate candidates for mentions");
  query_cmd->add_option("--method", query.method, "Generator")->check(CLI::IsMember({"pti", "wikipriors"}));
  query_cmd->add_option("--index", query.index, "PTI index file");
  query_cmd->add_option("--target", query.target, "Target corpus for wikipriors");
  query_cmd->add_option("--pivot", query.pivot, "Pivot corpus for wikipriors");
  query_cmd->add_option("--mentions", query.mentions, "One mention per line (default: stdin)");
  query_cmd->add_option("--k", query.k, "Candidates per mention")->check(CLI::PositiveNumber);
  query_cmd->add_option("--lambda", query.lambda, "Posterior weight")->check(alpha_range);
  query_cmd->add_flag("--normalize", query.normalize, "Divide scores by their sum");
  query_cmd->add_flag("--zero-shot", query.zero_shot, "Ignore target tables (wikipriors)");
  query_cmd->add_option("--format", query.format, "Output format")->check(CLI::IsMember({"tsv", "jsonl"}));
  query_cmd->add_option("-o,--output", query.output, "Output file (default: stdout)");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate recall@k and write a JSON report");
  eval_cmd->add_option("--method", eval.method, "Generator")->check(CLI::IsMember({"pti", "wikipriors"}));
  eval_cmd->add_option("--train", eval.train, "Target training corpus");
  eval_cmd->add_option("--pivot", eval.pivot, "Pivot corpus")->required();
  eval_cmd->add_option("--valid", eval.valid, "Validation queries for the sweep");
  eval_cmd->add_option("--test", eval.test, "Test queries")->required();
  eval_cmd->add_option("--alpha", eval.alpha, "Pivot count weight (default: swept)")->check(alpha_range);
  eval_cmd->add_option("--lambda", eval.lambda, "Posterior weight (default: swept)")->check(alpha_range);
  eval_cmd->add_option("--tau", eval.tau, "Drop entries with probability below tau")->check(tau_range);
  eval_cmd->add_option("--k", eval.k, "Candidates per mention")->check(CLI::PositiveNumber);
  eval_cmd->add_flag("--zero-shot", eval.zero_shot, "Use no target training data");
  eval_cmd->add_flag("--sweep", eval.force_sweep, "Select alpha and lambda on --valid");
  add_tokenizer_flags(eval_cmd, eval.tokenizer);
  eval_cmd->add_option("-o,--output", eval.output, "Report file (default: stdout)");

  CeilingArgs ceiling;
  auto* ceiling_cmd = app.add_subcommand("ceiling", "Candidate-space coverage of a test set");
  ceiling_cmd->add_option("--test", ceiling.test, "Test queries")->required();
  ceiling_cmd->add_option("--train", ceiling.train, "Target training corpus");
  ceiling_cmd->add_option("--pivot", ceiling.pivot, "Pivot corpus")->required();
  ceiling_cmd->add_flag("--zero-shot", ceiling.zero_shot, "Ignore the target corpus");
  ceiling_cmd->add_option("-o,--output", ceiling.output, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsageError;
  }

  try {
    const int resolved = resolve_threads(threads_flag, threads);
    apply_threads(resolved);
    if (*synth_cmd) run_synth(synth);
    if (*split_cmd) run_split(split);
    if (*classify_cmd) run_classify(classify);
    if (*build_cmd) run_build(build, resolved);
    if (*query_cmd) run_query(query);
    if (*eval_cmd) run_eval(eval, resolved);
    if (*ceiling_cmd) run_ceiling(ceiling);
  } catch (const UsageError& e) {
    return report_error(e.what(), kUsageError);
  } catch (const ParseError& e) {
    return report_error(e.what(), kFormatError);
  } catch (const IndexFormatError& e) {
    return report_error(e.what(), kFormatError);
  } catch (const std::system_error& e) {
    return report_error(e.what(), kIoError);
  } catch (const std::invalid_argument& e) {
    return report_error(e.what(), kUsageError);
  } catch (const std::exception& e) {
    return report_error(std::string("internal error: ") + e.what(), kInternalError);
  }
  return kOk;
}

}  // namespace pti::cli

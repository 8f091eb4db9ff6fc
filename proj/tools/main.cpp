// subalign: subword-sampling word alignment for small parallel corpora.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "subalign/aligner.hpp"
#include "subalign/bpe.hpp"
#include "subalign/corpus.hpp"
#include "subalign/errors.hpp"
#include "subalign/external.hpp"
#include "subalign/linkops.hpp"
#include "subalign/metrics.hpp"
#include "subalign/optimizer.hpp"

namespace fs = std::filesystem;
using namespace subalign;

namespace {

// Domain validation failure that should exit with the usage code.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

MergeTable load_merges(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open merge table " + path);
  return read_merge_table(in);
}

AlignmentSet load_pharaoh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open alignment " + path);
  return read_pharaoh(in);
}

GoldAlignment load_gold(const std::string& path, bool one_based) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open gold standard " + path);
  return read_gold_naacl(in, one_based);
}

// Reads "source ||| target" bitext into a corpus.
ParallelCorpus load_pipe_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open bitext " + path);
  std::string line;
  std::ostringstream src, tgt;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto sep = line.find("|||");
    if (sep == std::string::npos) {
      throw ParseError("bitext line " + std::to_string(lineno) + ": missing '|||'");
    }
    src << line.substr(0, sep) << '\n';
    tgt << line.substr(sep + 3) << '\n';
  }
  std::istringstream s(src.str()), t(tgt.str());
  return load_parallel(s, t);
}

struct AlignerFlags {
  AlignerConfig config;

  void attach(CLI::App* cmd) {
    cmd->add_option("--m1-iterations", config.model1_iterations, "Model-1 EM iterations");
    cmd->add_option("--m2-iterations", config.model2_iterations,
                    "Diagonal model-2 EM iterations (0 for model-1 only)");
    cmd->add_option("--p0", config.null_probability, "NULL alignment mass");
    cmd->add_option("--tension", config.diagonal_tension, "Initial diagonal tension");
    cmd->add_option("--tension-updates", config.tension_updates_per_iter,
                    "Tension gradient steps per iteration");
    cmd->add_option("--alpha", config.smoothing_alpha, "Add-alpha smoothing");
    cmd->add_option("--seed", config.seed, "Random seed recorded in outputs");
    cmd->add_option("--workers", config.workers, "E-step worker count");
  }

  void validate() const {
    if (config.null_probability < 0.0 || config.null_probability >= 1.0) {
      throw UsageError("--p0 must lie in [0, 1)");
    }
    if (config.model1_iterations < 0 || config.model2_iterations < 0 ||
        config.workers < 1) {
      throw UsageError("iteration and worker counts must be non-negative (workers >= 1)");
    }
  }
};

// --- learn-bpe ---------------------------------------------------------------

struct LearnBpeArgs {
  std::string source, target, output_dir;
  std::size_t max_merges = 50000;
};

void run_learn_bpe(const LearnBpeArgs& args) {
  const auto corpus = load_parallel_files(args.source, args.target);
  const Bitext words = Bitext::from_corpus(corpus);

  const auto write_side = [&](const std::vector<std::vector<std::string>>& side,
                              const std::string& name) {
    const MergeTable table = learn_bpe(side, args.max_merges);
    auto merges = open_output(fs::path(args.output_dir) / (name + ".merges"));
    write_merge_table(table, merges);
    auto curve = open_output(fs::path(args.output_dir) / (name + "_affected.csv"));
    write_affected_csv(table, curve);
    std::cerr << name << ": " << table.max_merges() << " merges\n";
  };
  write_side(words.source, "source");
  write_side(words.target, "target");
}

// --- segment -----------------------------------------------------------------

struct SegmentArgs {
  std::string source, target, source_merges, target_merges, output_dir;
  std::string source_size = "WORD", target_size = "WORD";
};

void write_segmented_side(const std::vector<SegmentedSentence>& side, const fs::path& tokens,
                          const fs::path& wordmap) {
  auto tok = open_output(tokens);
  auto map = open_output(wordmap);
  for (const auto& sent : side) {
    for (std::size_t i = 0; i < sent.tokens.size(); ++i) {
      if (i) {
        tok << ' ';
        map << ' ';
      }
      tok << sent.tokens[i];
      map << sent.word_of_token[i];
    }
    tok << '\n';
    map << '\n';
  }
}

void run_segment(const SegmentArgs& args) {
  const auto corpus = load_parallel_files(args.source, args.target);
  const SegmentationScheme scheme{granularity_from_string(args.source_size),
                                  granularity_from_string(args.target_size)};
  MergeTable src_table, tgt_table;
  if (!scheme.source.is_word_level()) {
    if (args.source_merges.empty()) throw UsageError("--source-merges required for subword sizes");
    src_table = load_merges(args.source_merges);
  }
  if (!scheme.target.is_word_level()) {
    if (args.target_merges.empty()) throw UsageError("--target-merges required for subword sizes");
    tgt_table = load_merges(args.target_merges);
  }
  const auto segmented = segment_corpus(corpus, scheme, src_table, tgt_table);
  write_segmented_side(segmented.source, fs::path(args.output_dir) / "source.seg",
                       fs::path(args.output_dir) / "source.wordmap");
  write_segmented_side(segmented.target, fs::path(args.output_dir) / "target.seg",
                       fs::path(args.output_dir) / "target.wordmap");
}

// --- align -------------------------------------------------------------------

struct AlignArgs {
  std::string source, target, bitext;
  std::string source_merges, target_merges;
  std::string source_size = "WORD", target_size = "WORD";
  std::string method = "intersection";
  std::string direction = "both";
  std::string external;
  std::string output;
  AlignerFlags aligner;
};

void run_align(const AlignArgs& args) {
  if (args.bitext.empty() == (args.source.empty() || args.target.empty())) {
    throw UsageError("give either --bitext or both --source and --target");
  }
  args.aligner.validate();
  const ParallelCorpus corpus = args.bitext.empty()
                                    ? load_parallel_files(args.source, args.target)
                                    : load_pipe_corpus(args.bitext);

  const SegmentationScheme scheme{granularity_from_string(args.source_size),
                                  granularity_from_string(args.target_size)};
  MergeTable src_table, tgt_table;
  if (!scheme.source.is_word_level()) src_table = load_merges(args.source_merges);
  if (!scheme.target.is_word_level()) tgt_table = load_merges(args.target_merges);
  const auto segmented = segment_corpus(corpus, scheme, src_table, tgt_table);
  const Bitext tokens = segmented.tokens();

  AlignmentSet subword_links;
  if (args.direction == "both") {
    const BidirectionalAlignment bi =
        args.external.empty() ? align_bidirectional(tokens, args.aligner.config)
                              : external_align(tokens, args.external);
    subword_links = symmetrize(bi.forward, bi.reverse, symmetrization_from_string(args.method));
  } else if (args.direction == "forward" || args.direction == "reverse") {
    const bool reverse = args.direction == "reverse";
    if (!args.external.empty()) {
      subword_links = external_align_direction(tokens, args.external, reverse);
    } else if (!reverse) {
      TrainedModel model = train_model1(tokens, args.aligner.config);
      if (args.aligner.config.model2_iterations > 0) {
        model = train_diag_model2(tokens, args.aligner.config, std::move(model));
      }
      subword_links = viterbi_align(tokens, model).to_links(false);
    } else {
      Bitext swapped;
      swapped.source = tokens.target;
      swapped.target = tokens.source;
      TrainedModel model = train_model1(swapped, args.aligner.config);
      if (args.aligner.config.model2_iterations > 0) {
        model = train_diag_model2(swapped, args.aligner.config, std::move(model));
      }
      subword_links = viterbi_align(swapped, model).to_links(true);
    }
  } else {
    throw UsageError("--direction must be both, forward or reverse");
  }

  const AlignmentSet word_links = project_to_words(subword_links, segmented);
  auto out = open_output(args.output);
  write_pharaoh(word_links, corpus.size(), out);
}

// --- aggregate ---------------------------------------------------------------

struct AggregateArgs {
  std::vector<std::string> inputs;
  double lambda = 0.5;
  std::size_t sentences = 0;
  std::string output;
  std::string tally_csv;
};

void run_aggregate(const AggregateArgs& args) {
  if (args.inputs.empty()) throw UsageError("--inputs needs at least one alignment file");
  if (args.lambda < 0.0 || args.lambda > 1.0) throw UsageError("--lambda must be in [0, 1]");
  if (args.sentences == 0) throw UsageError("--sentences must be >= 1");

  std::vector<SchemeAlignment> schemes;
  for (std::size_t k = 0; k < args.inputs.size(); ++k) {
    SchemeAlignment sa;
    sa.scheme = {Granularity::merges(static_cast<std::uint32_t>(k)), Granularity::word()};
    sa.word_links = load_pharaoh_file(args.inputs[k]);
    schemes.push_back(std::move(sa));
  }
  const VoteTally tally = tally_votes(schemes);
  const AlignmentSet kept = aggregate(tally, args.lambda);
  auto out = open_output(args.output);
  write_pharaoh(kept, args.sentences, out);
  if (!args.tally_csv.empty()) {
    auto tcsv = open_output(args.tally_csv);
    write_tally_csv(tally, tcsv);
  }
}

// --- evaluate ----------------------------------------------------------------

struct EvaluateArgs {
  std::string pred, gold;
  bool one_based = false;
  std::string output_json, output_csv;
  std::string source, target;  // optional, for index sanity warnings
  std::uint64_t seed = 0;
};

void run_evaluate(const EvaluateArgs& args) {
  const auto predicted = load_pharaoh_file(args.pred);
  const auto gold = load_gold(args.gold, args.one_based);

  if (!args.source.empty() && !args.target.empty()) {
    const auto corpus = load_parallel_files(args.source, args.target);
    std::size_t out_of_range = 0;
    for (const auto& l : gold.possible.links()) {
      if (l.sentence >= corpus.size() ||
          l.source >= corpus.pair(l.sentence).source.size() ||
          l.target >= corpus.pair(l.sentence).target.size()) {
        ++out_of_range;
      }
    }
    if (out_of_range > 0) {
      std::cerr << "warning: " << out_of_range
                << " gold links fall outside the corpus; check the --one-based flag\n";
    }
  }

  const Metrics m = score(predicted, gold);
  if (!args.output_json.empty()) {
    auto out = open_output(args.output_json);
    out << metrics_to_json(m, args.seed);
  }
  if (!args.output_csv.empty()) {
    auto out = open_output(args.output_csv);
    write_metrics_csv(m, args.seed, out);
  }
  std::cout << "precision " << m.precision << " recall " << m.recall << " f1 " << m.f1
            << '\n';
}

// --- optimize ----------------------------------------------------------------

struct OptimizeArgs {
  std::string train_source, train_target;
  std::string eval_source, eval_target;
  std::string gold;
  bool one_based = false;
  std::size_t subsample_n = 0;
  std::uint64_t subsample_seed = 1;
  std::string source_merges, target_merges;
  std::size_t max_merges = 50000;
  std::string method = "intersection";
  OptimizeConfig config;
  double lambda_min = 0.0, lambda_max = 1.0;
  std::int64_t source_min = 0, source_max = -1, target_min = 0, target_max = -1;
  std::string output_dir;
  std::string resume;
  std::string external;
  AlignerFlags aligner;
};

void run_optimize(const OptimizeArgs& args) {
  if (args.config.early_stop == 0) throw UsageError("--early-stop must be >= 1");
  if (args.config.budget < args.config.random_init || args.config.random_init == 0) {
    throw UsageError("need --budget >= --random-init >= 1");
  }
  if (args.lambda_min < 0.0 || args.lambda_max > 1.0 || args.lambda_min > args.lambda_max) {
    throw UsageError("lambda range must sit inside [0, 1]");
  }
  args.aligner.validate();

  ParallelCorpus train = load_parallel_files(args.train_source, args.train_target);
  if (args.subsample_n > 0) train = subsample(train, args.subsample_n, args.subsample_seed);

  ParallelCorpus corpus;
  GoldAlignment gold;
  if (!args.eval_source.empty()) {
    if (args.eval_target.empty()) throw UsageError("--eval-target required with --eval-source");
    const auto eval_corpus = load_parallel_files(args.eval_source, args.eval_target);
    std::tie(corpus, gold) =
        attach_evaluation_set(train, eval_corpus, load_gold(args.gold, args.one_based));
  } else {
    corpus = std::move(train);
    gold = load_gold(args.gold, args.one_based);
  }

  const Bitext words = Bitext::from_corpus(corpus);
  const MergeTable src_table = args.source_merges.empty()
                                   ? learn_bpe(words.source, args.max_merges)
                                   : load_merges(args.source_merges);
  const MergeTable tgt_table = args.target_merges.empty()
                                   ? learn_bpe(words.target, args.max_merges)
                                   : load_merges(args.target_merges);

  SearchSpace space;
  auto resolve = [](std::int64_t lo, std::int64_t hi, std::size_t table_max,
                    std::uint32_t* out_lo, std::uint32_t* out_hi) {
    const auto max_val = static_cast<std::int64_t>(table_max);
    if (hi < 0) hi = max_val;
    if (lo < 0 || lo > hi || hi > max_val) {
      throw UsageError("granularity range [" + std::to_string(lo) + ", " + std::to_string(hi) +
                       "] does not fit the merge table (max " + std::to_string(max_val) + ")");
    }
    *out_lo = static_cast<std::uint32_t>(lo);
    *out_hi = static_cast<std::uint32_t>(hi);
  };
  resolve(args.source_min, args.source_max, src_table.max_merges(), &space.source_min,
          &space.source_max);
  resolve(args.target_min, args.target_max, tgt_table.max_merges(), &space.target_min,
          &space.target_max);
  space.lambda_min = args.lambda_min;
  space.lambda_max = args.lambda_max;

  SchemePipeline pipeline(corpus, src_table, tgt_table, args.aligner.config,
                          symmetrization_from_string(args.method), args.external);

  std::pair<OptimizerState, AlignmentSet> result;
  if (args.resume.empty()) {
    result = run_iterative_sampling(pipeline, gold, space, args.config);
  } else {
    std::ifstream in(args.resume);
    if (!in) throw std::runtime_error("cannot open state " + args.resume);
    std::ostringstream text;
    text << in.rdbuf();
    result = resume_iterative_sampling(pipeline, gold, space, args.config,
                                       optimizer_state_from_json(text.str()));
  }
  auto& [state, alignment] = result;

  auto state_out = open_output(fs::path(args.output_dir) / "state.json");
  state_out << optimizer_state_to_json(state);
  auto trace_out = open_output(fs::path(args.output_dir) / "trace.csv");
  write_trace_csv(state, trace_out);
  auto trials_out = open_output(fs::path(args.output_dir) / "trials.csv");
  write_trials_csv(state, trials_out);
  auto align_out = open_output(fs::path(args.output_dir) / "alignment.pharaoh");
  write_pharaoh(alignment, corpus.size(), align_out);

  const double final_f1 = state.best_prefix_len == 0
                              ? state.baseline_f1
                              : state.f1_trace[state.best_prefix_len - 1];
  std::cout << "baseline_f1 " << state.baseline_f1 << " best_f1 " << final_f1
            << " iterations " << state.xi_history.size() << " best_prefix "
            << state.best_prefix_len << '\n';
}

// --- apply -------------------------------------------------------------------

struct ApplyArgs {
  std::string state;
  std::string source, target;
  std::string source_merges, target_merges;
  std::size_t max_merges = 50000;
  std::string method = "intersection";
  std::string output;
  std::string external;
  AlignerFlags aligner;
};

void run_apply(const ApplyArgs& args) {
  args.aligner.validate();
  std::ifstream in(args.state);
  if (!in) throw std::runtime_error("cannot open state " + args.state);
  std::ostringstream text;
  text << in.rdbuf();
  const OptimizerState state = optimizer_state_from_json(text.str());

  const auto corpus = load_parallel_files(args.source, args.target);
  const Bitext words = Bitext::from_corpus(corpus);
  const MergeTable src_table = args.source_merges.empty()
                                   ? learn_bpe(words.source, args.max_merges)
                                   : load_merges(args.source_merges);
  const MergeTable tgt_table = args.target_merges.empty()
                                   ? learn_bpe(words.target, args.max_merges)
                                   : load_merges(args.target_merges);

  std::vector<SegmentationScheme> xi_star;
  double lambda_star = 1.0;
  if (state.best_prefix_len == 0) {
    xi_star = {{Granularity::word(), Granularity::word()}};
  } else {
    xi_star.assign(state.xi_history.begin(),
                   state.xi_history.begin() + state.best_prefix_len);
    lambda_star = state.lambda_history[state.best_prefix_len - 1];
  }

  // clamping is logged so transferred settings remain auditable
  const auto src_max = static_cast<std::uint32_t>(src_table.max_merges());
  const auto tgt_max = static_cast<std::uint32_t>(tgt_table.max_merges());
  for (const auto& scheme : xi_star) {
    if (!scheme.source.is_word_level() && scheme.source.value > src_max) {
      std::cerr << "clamping source granularity " << scheme.source.value << " to " << src_max
                << '\n';
    }
    if (!scheme.target.is_word_level() && scheme.target.value > tgt_max) {
      std::cerr << "clamping target granularity " << scheme.target.value << " to " << tgt_max
                << '\n';
    }
  }

  SchemePipeline pipeline(corpus, src_table, tgt_table, args.aligner.config,
                          symmetrization_from_string(args.method), args.external);
  const AlignmentSet alignment = apply_transfer(pipeline, xi_star, lambda_star);
  auto out = open_output(args.output);
  write_pharaoh(alignment, corpus.size(), out);
}

// --- report ------------------------------------------------------------------

struct ReportArgs {
  std::string state;
  std::string source_merges, target_merges;
  std::string source, target;
  std::string method = "intersection";
  std::string output_dir;
  AlignerFlags aligner;
};

void run_report(const ReportArgs& args) {
  std::ifstream in(args.state);
  if (!in) throw std::runtime_error("cannot open state " + args.state);
  std::ostringstream text;
  text << in.rdbuf();
  const OptimizerState state = optimizer_state_from_json(text.str());

  auto exploration = open_output(fs::path(args.output_dir) / "exploration.csv");
  write_trials_csv(state, exploration);
  auto selected = open_output(fs::path(args.output_dir) / "selected_cells.csv");
  write_trace_csv(state, selected);

  std::optional<MergeTable> src_table, tgt_table;
  if (!args.source_merges.empty()) {
    src_table = load_merges(args.source_merges);
    auto csv = open_output(fs::path(args.output_dir) / "source_affected.csv");
    write_affected_csv(*src_table, csv);
  }
  if (!args.target_merges.empty()) {
    tgt_table = load_merges(args.target_merges);
    auto csv = open_output(fs::path(args.output_dir) / "target_affected.csv");
    write_affected_csv(*tgt_table, csv);
  }

  // per-link tally over the best prefix, for qualitative digging
  if (!args.source.empty() && !args.target.empty() && src_table && tgt_table &&
      state.best_prefix_len > 0) {
    const auto corpus = load_parallel_files(args.source, args.target);
    SchemePipeline pipeline(corpus, *src_table, *tgt_table, args.aligner.config,
                            symmetrization_from_string(args.method));
    std::vector<SchemeAlignment> schemes;
    for (std::size_t k = 0; k < state.best_prefix_len; ++k) {
      schemes.push_back(SchemeAlignment{state.xi_history[k],
                                        pipeline.word_links(state.xi_history[k])});
    }
    auto tally = open_output(fs::path(args.output_dir) / "tally.csv");
    write_tally_csv(tally_votes(schemes), tally);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"subword-sampling word alignment for small parallel corpora"};
  app.set_config("--config", "", "Key-value config file; command-line flags win");
  app.fallthrough();  // lets --config appear after the subcommand name
  app.require_subcommand(1);

  LearnBpeArgs learn_args;
  auto* learn = app.add_subcommand("learn-bpe", "Learn BPE merge tables for both sides");
  learn->add_option("--source", learn_args.source, "Source corpus")
      ->required()
      ->check(CLI::ExistingFile);
  learn->add_option("--target", learn_args.target, "Target corpus")
      ->required()
      ->check(CLI::ExistingFile);
  learn->add_option("--output-dir", learn_args.output_dir, "Output directory")->required();
  learn->add_option("--max-merges", learn_args.max_merges, "Merge-step cap");

  SegmentArgs segment_args;
  auto* seg = app.add_subcommand("segment", "Segment a corpus under one scheme");
  seg->add_option("--source", segment_args.source)->required()->check(CLI::ExistingFile);
  seg->add_option("--target", segment_args.target)->required()->check(CLI::ExistingFile);
  seg->add_option("--source-merges", segment_args.source_merges)->check(CLI::ExistingFile);
  seg->add_option("--target-merges", segment_args.target_merges)->check(CLI::ExistingFile);
  seg->add_option("--source-size", segment_args.source_size, "Merge count or WORD");
  seg->add_option("--target-size", segment_args.target_size, "Merge count or WORD");
  seg->add_option("--output-dir", segment_args.output_dir)->required();

  AlignArgs align_args;
  auto* align = app.add_subcommand("align", "Align one corpus under one scheme");
  align->add_option("--source", align_args.source)->check(CLI::ExistingFile);
  align->add_option("--target", align_args.target)->check(CLI::ExistingFile);
  align->add_option("--bitext", align_args.bitext, "'source ||| target' file")
      ->check(CLI::ExistingFile);
  align->add_option("--source-merges", align_args.source_merges)->check(CLI::ExistingFile);
  align->add_option("--target-merges", align_args.target_merges)->check(CLI::ExistingFile);
  align->add_option("--source-size", align_args.source_size, "Merge count or WORD");
  align->add_option("--target-size", align_args.target_size, "Merge count or WORD");
  align->add_option("--method", align_args.method, "intersection|union|gdfa");
  align->add_option("--direction", align_args.direction, "both|forward|reverse");
  align->add_option("--external", align_args.external,
                    "External aligner command with {input} and {output}");
  align->add_option("--output", align_args.output, "Pharaoh output path")->required();
  align_args.aligner.attach(align);

  AggregateArgs agg_args;
  auto* agg = app.add_subcommand("aggregate", "Lambda-vote over pharaoh files");
  agg->add_option("--inputs", agg_args.inputs, "Pharaoh inputs")->required()->expected(-1);
  agg->add_option("--lambda", agg_args.lambda, "Vote threshold in [0,1]")->required();
  agg->add_option("--sentences", agg_args.sentences, "Sentence count")->required();
  agg->add_option("--output", agg_args.output)->required();
  agg->add_option("--tally", agg_args.tally_csv, "Optional per-link tally CSV");

  EvaluateArgs eval_args;
  auto* eval = app.add_subcommand("evaluate", "Score an alignment against a gold standard");
  eval->add_option("--pred", eval_args.pred)->required()->check(CLI::ExistingFile);
  eval->add_option("--gold", eval_args.gold)->required()->check(CLI::ExistingFile);
  eval->add_flag("--one-based", eval_args.one_based, "Gold file uses 1-based indices");
  eval->add_option("--output", eval_args.output_json, "Metrics JSON path");
  eval->add_option("--csv", eval_args.output_csv, "Metrics CSV path");
  eval->add_option("--source", eval_args.source, "Corpus for index sanity warnings")
      ->check(CLI::ExistingFile);
  eval->add_option("--target", eval_args.target)->check(CLI::ExistingFile);
  eval->add_option("--seed", eval_args.seed, "Seed recorded in outputs");

  OptimizeArgs opt_args;
  auto* opt = app.add_subcommand("optimize", "Iterative subword sampling against a gold standard");
  opt->add_option("--train-source", opt_args.train_source)->required()->check(CLI::ExistingFile);
  opt->add_option("--train-target", opt_args.train_target)->required()->check(CLI::ExistingFile);
  opt->add_option("--eval-source", opt_args.eval_source)->check(CLI::ExistingFile);
  opt->add_option("--eval-target", opt_args.eval_target)->check(CLI::ExistingFile);
  opt->add_option("--gold", opt_args.gold)->required()->check(CLI::ExistingFile);
  opt->add_flag("--one-based", opt_args.one_based);
  opt->add_option("--subsample", opt_args.subsample_n, "Subsample train to N pairs (0: off)");
  opt->add_option("--subsample-seed", opt_args.subsample_seed);
  opt->add_option("--source-merges", opt_args.source_merges)->check(CLI::ExistingFile);
  opt->add_option("--target-merges", opt_args.target_merges)->check(CLI::ExistingFile);
  opt->add_option("--max-merges", opt_args.max_merges, "Cap when learning tables here");
  opt->add_option("--method", opt_args.method, "Symmetrization method");
  opt->add_option("--budget", opt_args.config.budget, "Trials per iteration (B)");
  opt->add_option("--random-init", opt_args.config.random_init, "Prior samples per iteration (R)");
  opt->add_option("--early-stop", opt_args.config.early_stop, "Non-improving iterations before stop (E)");
  opt->add_option("--max-iterations", opt_args.config.max_iterations, "Hard cap (0: none)");
  opt->add_option("--opt-seed", opt_args.config.seed, "Optimizer seed");
  opt->add_option("--lambda-min", opt_args.lambda_min);
  opt->add_option("--lambda-max", opt_args.lambda_max);
  opt->add_option("--source-min", opt_args.source_min);
  opt->add_option("--source-max", opt_args.source_max, "-1: table maximum");
  opt->add_option("--target-min", opt_args.target_min);
  opt->add_option("--target-max", opt_args.target_max, "-1: table maximum");
  opt->add_option("--output-dir", opt_args.output_dir)->required();
  opt->add_option("--resume", opt_args.resume, "Continue from a state.json")
      ->check(CLI::ExistingFile);
  opt->add_option("--external", opt_args.external,
                  "External aligner command with {input} and {output}");
  opt_args.aligner.attach(opt);

  ApplyArgs apply_args;
  auto* apply = app.add_subcommand("apply", "Apply optimized settings to a new pair");
  apply->add_option("--state", apply_args.state)->required()->check(CLI::ExistingFile);
  apply->add_option("--source", apply_args.source)->required()->check(CLI::ExistingFile);
  apply->add_option("--target", apply_args.target)->required()->check(CLI::ExistingFile);
  apply->add_option("--source-merges", apply_args.source_merges)->check(CLI::ExistingFile);
  apply->add_option("--target-merges", apply_args.target_merges)->check(CLI::ExistingFile);
  apply->add_option("--max-merges", apply_args.max_merges);
  apply->add_option("--method", apply_args.method);
  apply->add_option("--output", apply_args.output)->required();
  apply->add_option("--external", apply_args.external,
                    "External aligner command with {input} and {output}");
  apply_args.aligner.attach(apply);

  ReportArgs report_args;
  auto* report = app.add_subcommand("report", "Emit diagnostic CSVs from a state file");
  report->add_option("--state", report_args.state)->required()->check(CLI::ExistingFile);
  report->add_option("--source-merges", report_args.source_merges)->check(CLI::ExistingFile);
  report->add_option("--target-merges", report_args.target_merges)->check(CLI::ExistingFile);
  report->add_option("--source", report_args.source)->check(CLI::ExistingFile);
  report->add_option("--target", report_args.target)->check(CLI::ExistingFile);
  report->add_option("--method", report_args.method);
  report->add_option("--output-dir", report_args.output_dir)->required();
  report_args.aligner.attach(report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (learn->parsed()) run_learn_bpe(learn_args);
    else if (seg->parsed()) run_segment(segment_args);
    else if (align->parsed()) run_align(align_args);
    else if (agg->parsed()) run_aggregate(agg_args);
    else if (eval->parsed()) run_evaluate(eval_args);
    else if (opt->parsed()) run_optimize(opt_args);
    else if (apply->parsed()) run_apply(apply_args);
    else if (report->parsed()) run_report(report_args);
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

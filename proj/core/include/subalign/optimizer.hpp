#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "subalign/aligner.hpp"
#include "subalign/bpe.hpp"
#include "subalign/corpus.hpp"
#include "subalign/linkops.hpp"
#include "subalign/metrics.hpp"

namespace subalign {

// Granularity ranges searched per side; the word-level sentinel is always
// an extra cell on each side. Lambda is searched within [lambda_min, lambda_max].
struct SearchSpace {
  std::uint32_t source_min = 0;
  std::uint32_t source_max = 0;
  std::uint32_t target_min = 0;
  std::uint32_t target_max = 0;
  double lambda_min = 0.0;
  double lambda_max = 1.0;
};

struct Trial {
  SegmentationScheme scheme;
  double lambda = 0.0;
  double f1 = 0.0;
  std::size_t iteration = 0;
};

struct TrialCandidate {
  SegmentationScheme scheme;
  double lambda = 0.0;
};

// Bookkeeping of the greedy optimization loop. best_prefix_len 0 means the
// word-level baseline was never beaten.
struct OptimizerState {
  std::uint64_t seed = 0;
  double baseline_f1 = 0.0;
  std::vector<SegmentationScheme> xi_history;
  std::vector<double> lambda_history;
  std::vector<double> f1_trace;  // accepted F1 per iteration
  std::size_t best_prefix_len = 0;
  std::vector<Trial> all_trials;
};

struct OptimizeConfig {
  std::size_t budget = 30;       // trials per iteration (B)
  std::size_t random_init = 10;  // prior-sampled trials per iteration (R)
  std::size_t early_stop = 3;    // E: stop after this many non-improving iterations
  std::size_t max_iterations = 0;  // 0: run until early stop or space exhaustion
  std::uint64_t seed = 1;
};

// Runs segment -> bidirectional align -> symmetrize -> project per scheme
// and caches the word-level result, so re-evaluating a configuration that
// differs only in lambda costs one aggregation. A non-empty external
// command delegates the directional alignments to that tool instead of
// the internal models.
class SchemePipeline {
 public:
  SchemePipeline(const ParallelCorpus& corpus, const MergeTable& source_table,
                 const MergeTable& target_table, AlignerConfig aligner,
                 SymmetrizationMethod method = SymmetrizationMethod::kIntersection,
                 std::string external_command = {});

  const AlignmentSet& word_links(const SegmentationScheme& scheme);

  const ParallelCorpus& corpus() const { return corpus_; }
  const MergeTable& source_table() const { return source_table_; }
  const MergeTable& target_table() const { return target_table_; }
  const AlignerConfig& aligner_config() const { return aligner_; }
  std::size_t cached_schemes() const { return cache_.size(); }

 private:
  const ParallelCorpus& corpus_;
  const MergeTable& source_table_;
  const MergeTable& target_table_;
  AlignerConfig aligner_;
  SymmetrizationMethod method_;
  std::string external_command_;
  std::map<SegmentationScheme, AlignmentSet> cache_;
};

// F1 of the lambda-vote over the given schemes against the gold standard.
Metrics evaluate_configuration(SchemePipeline& pipeline,
                               std::span<const SegmentationScheme> schemes, double lambda,
                               const GoldAlignment& gold);

// Proposes budget candidates: random_init log-uniform prior samples, the
// rest picked by a TPE-style density-ratio surrogate fitted on past trials.
// Cells already in state.xi_history are excluded. An empty result signals
// that every cell of the space has been selected.
std::vector<TrialCandidate> propose_trials(const OptimizerState& state,
                                           const SearchSpace& space, std::size_t budget,
                                           std::size_t random_init, std::uint64_t seed);

// The iterative greedy loop: each iteration proposes candidates, accepts
// the (scheme, lambda) whose addition maximizes F1, and stops once the
// last early_stop iterations all failed to improve. Returns the state and
// the alignment of the best-scoring prefix.
std::pair<OptimizerState, AlignmentSet> run_iterative_sampling(SchemePipeline& pipeline,
                                                               const GoldAlignment& gold,
                                                               const SearchSpace& space,
                                                               const OptimizeConfig& config);

// Continues a previous run; equivalent to having run the extra iterations
// in the original call.
std::pair<OptimizerState, AlignmentSet> resume_iterative_sampling(
    SchemePipeline& pipeline, const GoldAlignment& gold, const SearchSpace& space,
    const OptimizeConfig& config, OptimizerState state);

// Applies settings learned elsewhere to a new pair: granularities are
// clamped to the new merge tables, clamp-duplicates dropped, and the
// aggregated alignment returned. No gold standard is needed.
AlignmentSet apply_transfer(SchemePipeline& pipeline,
                            std::span<const SegmentationScheme> xi_star, double lambda_star);

// Alignment of the best prefix recorded in the state.
AlignmentSet best_prefix_alignment(SchemePipeline& pipeline, const OptimizerState& state);

// --- serialization -----------------------------------------------------------

std::string optimizer_state_to_json(const OptimizerState& state);
OptimizerState optimizer_state_from_json(const std::string& text);

// Accepted cell per iteration: iteration, source, target, lambda, f1.
void write_trace_csv(const OptimizerState& state, std::ostream& out);
// Every explored trial, for redrawing the search-space diagnostics.
void write_trials_csv(const OptimizerState& state, std::ostream& out);

}  // namespace subalign

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "subalign/corpus.hpp"

namespace subalign {

struct AlignerConfig {
  int model1_iterations = 5;
  int model2_iterations = 5;
  double null_probability = 0.08;     // p0: fixed mass on the NULL source
  double diagonal_tension = 4.0;      // initial tension for model 2
  int tension_updates_per_iter = 8;   // gradient steps per model-2 iteration
  double smoothing_alpha = 0.01;      // add-alpha on M-step counts
  std::uint64_t seed = 1;             // recorded in outputs; EM itself is deterministic
  int workers = 1;                    // E-step chunks; result is fixed per worker count
};

// String-to-id mapping for one side. Id 0 on a source side is the NULL token.
class Vocabulary {
 public:
  static constexpr std::uint32_t kNullId = 0;
  static constexpr std::uint32_t kUnseen = 0xffffffffu;

  std::uint32_t intern(std::string_view token);
  std::uint32_t lookup(std::string_view token) const;  // kUnseen when absent
  std::size_t size() const { return ids_.size(); }

 private:
  std::unordered_map<std::string, std::uint32_t> ids_;
};

// Conditional probabilities t(target | source) over co-occurring pairs.
// Rows are normalized after every M-step; pairs outside a row's support
// score a fixed floor probability.
class TranslationTable {
 public:
  static constexpr double kFloorProb = 1e-9;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  double prob(std::uint32_t source_id, std::uint32_t target_id) const;
  std::size_t slot(std::uint32_t source_id, std::uint32_t target_id) const;
  double prob_at(std::uint32_t source_id, std::size_t slot) const {
    return probs_[source_id][slot];
  }

  std::size_t row_count() const { return keys_.size(); }
  const std::vector<std::uint32_t>& row_keys(std::uint32_t source_id) const {
    return keys_[source_id];
  }
  const std::vector<double>& row_probs(std::uint32_t source_id) const {
    return probs_[source_id];
  }

 private:
  friend class EmTrainer;
  std::vector<std::vector<std::uint32_t>> keys_;   // sorted target ids per row
  std::vector<std::vector<double>> probs_;
};

struct TrainedModel {
  Vocabulary source_vocab;
  Vocabulary target_vocab;
  TranslationTable table;
  double null_probability = 0.08;
  bool diagonal = false;      // false: model-1 uniform positional prior
  double tension = 0.0;
  std::vector<double> likelihood_trace;  // corpus log-likelihood at each E-step
};

// Viterbi decisions on the corpus that was decoded: chosen[s][j] is the
// source position linked to target position j, or -1 for NULL.
struct DirectionalAlignment {
  std::vector<std::vector<std::int32_t>> chosen;

  // transposed=true swaps link roles, for decisions made on a side-swapped corpus.
  AlignmentSet to_links(bool transposed = false) const;
};

struct BidirectionalAlignment {
  AlignmentSet forward;
  AlignmentSet reverse;
};

// --- training and decoding ---------------------------------------------------

TrainedModel train_model1(const Bitext& bitext, const AlignerConfig& config);

// EM with the diagonal positional prior exp(-tension * |i/n - j/m|),
// re-estimating the tension by gradient steps each iteration.
TrainedModel train_diag_model2(const Bitext& bitext, const AlignerConfig& config,
                               TrainedModel init);

DirectionalAlignment viterbi_align(const Bitext& bitext, const TrainedModel& model);

// Model1 -> model2 pipeline in both directions; links are expressed in the
// source/target convention of the given corpus for both directions.
BidirectionalAlignment align_bidirectional(const Bitext& bitext, const AlignerConfig& config);

// --- introspection hooks ------------------------------------------------------

// Length-normalized distance from the alignment diagonal (positions 0-based).
inline double diagonal_distance(std::size_t i, std::size_t j, std::size_t n, std::size_t m) {
  const double a = static_cast<double>(i + 1) / static_cast<double>(n);
  const double b = static_cast<double>(j + 1) / static_cast<double>(m);
  return a > b ? a - b : b - a;
}

// Full posterior grid for one sentence pair under a trained model.
struct PosteriorGrid {
  std::size_t n = 0;  // source length
  std::size_t m = 0;  // target length
  std::vector<double> real;       // j*n + i
  std::vector<double> null_mass;  // per target position
};

std::vector<PosteriorGrid> posterior_grids(const Bitext& bitext, const TrainedModel& model);

// Sufficient statistics of the posteriors for tension re-estimation.
struct DiagonalStats {
  double posterior_distance = 0.0;  // sum of posterior * diagonal_distance
  double total_tokens = 0.0;
  // (n, m) -> per-target-position sum of non-NULL posterior mass
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<double>> real_mass;
};

DiagonalStats diagonal_stats(const std::vector<PosteriorGrid>& grids);

// d/dT of the expected log-likelihood at the given tension under fixed
// posteriors. This is the exact quantity the trainer steps along.
double diagonal_gradient(const DiagonalStats& stats, double tension);

}  // namespace subalign

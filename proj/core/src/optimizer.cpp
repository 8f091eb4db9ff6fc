#include "subalign/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "subalign/errors.hpp"
#include "subalign/external.hpp"
#include "subalign/random.hpp"

namespace subalign {

namespace {

constexpr std::size_t kAcquisitionPool = 1000;
constexpr std::size_t kMinTrialsForSurrogate = 6;
constexpr std::size_t kSmallGridLimit = 4096;

std::uint32_t clamp_granularity_range(std::uint32_t value, std::uint32_t lo, std::uint32_t hi) {
  return std::min(std::max(value, lo), hi);
}

// Log-uniform draw over [lo, hi] with the word-level sentinel taking
// probability 1 / (range size + 1).
Granularity sample_granularity(std::mt19937_64& rng, std::uint32_t lo, std::uint32_t hi) {
  const std::uint64_t range = static_cast<std::uint64_t>(hi) - lo + 1;
  if (uniform_below(rng, range + 1) == 0) return Granularity::word();
  const double u = uniform_in(rng, std::log(static_cast<double>(lo) + 1.0),
                              std::log(static_cast<double>(hi) + 2.0));
  const auto v = static_cast<std::uint32_t>(std::exp(u) - 1.0);
  return Granularity::merges(clamp_granularity_range(v, lo, hi));
}

// Numeric embedding used by the surrogate: log(v + 1), with the word-level
// cell placed one step beyond the largest merge count.
double embed(Granularity g, std::uint32_t hi) {
  const double v = g.is_word_level() ? static_cast<double>(hi) + 1.0
                                     : static_cast<double>(g.value);
  return std::log(v + 1.0);
}

struct Embedded {
  double x[3];
};

Embedded embed_candidate(const SegmentationScheme& scheme, double lambda,
                         const SearchSpace& space) {
  return Embedded{{embed(scheme.source, space.source_max), embed(scheme.target, space.target_max),
                   lambda}};
}

// Diagonal-bandwidth Gaussian KDE over embedded points.
class Kde {
 public:
  Kde(std::vector<Embedded> points, const double floors[3]) : points_(std::move(points)) {
    for (int d = 0; d < 3; ++d) {
      double mean = 0.0;
      for (const auto& p : points_) mean += p.x[d];
      mean /= static_cast<double>(points_.size());
      double var = 0.0;
      for (const auto& p : points_) var += (p.x[d] - mean) * (p.x[d] - mean);
      var /= static_cast<double>(points_.size());
      const double silverman = 1.06 * std::sqrt(var) *
                               std::pow(static_cast<double>(points_.size()), -0.2);
      bandwidth_[d] = std::max(floors[d], silverman);
    }
  }

  double log_density(const Embedded& q) const {
    // log-sum-exp over the mixture components
    double best = -1e300;
    std::vector<double> terms;
    terms.reserve(points_.size());
    for (const auto& p : points_) {
      double t = 0.0;
      for (int d = 0; d < 3; ++d) {
        const double z = (q.x[d] - p.x[d]) / bandwidth_[d];
        t += -0.5 * z * z - std::log(bandwidth_[d]);
      }
      terms.push_back(t);
      best = std::max(best, t);
    }
    double sum = 0.0;
    for (const double t : terms) sum += std::exp(t - best);
    return best + std::log(sum) - std::log(static_cast<double>(points_.size()));
  }

 private:
  std::vector<Embedded> points_;
  double bandwidth_[3];
};

// Density-ratio acquisition fitted on past trials, TPE style: the top
// quarter of trials by F1 forms the "good" set.
class TpeSurrogate {
 public:
  TpeSurrogate(std::span<const Trial> trials, const SearchSpace& space) {
    if (trials.size() < kMinTrialsForSurrogate) return;
    std::vector<const Trial*> ranked;
    ranked.reserve(trials.size());
    for (const auto& t : trials) ranked.push_back(&t);
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const Trial* a, const Trial* b) { return a->f1 > b->f1; });
    const std::size_t n_good =
        std::max<std::size_t>(2, (ranked.size() + 3) / 4);
    if (ranked.size() - n_good < 2) return;

    const double floors[3] = {0.1, 0.1, 0.05};
    std::vector<Embedded> good, bad;
    for (std::size_t k = 0; k < ranked.size(); ++k) {
      auto e = embed_candidate(ranked[k]->scheme, ranked[k]->lambda, space);
      (k < n_good ? good : bad).push_back(e);
    }
    good_.emplace(std::move(good), floors);
    bad_.emplace(std::move(bad), floors);
  }

  bool fitted() const { return good_.has_value(); }

  double acquisition(const Embedded& q) const {
    return good_->log_density(q) - bad_->log_density(q);
  }

 private:
  std::optional<Kde> good_;
  std::optional<Kde> bad_;
};

std::uint64_t grid_cells(const SearchSpace& space) {
  const std::uint64_t src = static_cast<std::uint64_t>(space.source_max) - space.source_min + 2;
  const std::uint64_t tgt = static_cast<std::uint64_t>(space.target_max) - space.target_min + 2;
  return src * tgt;
}

std::vector<Granularity> side_options(std::uint32_t lo, std::uint32_t hi) {
  std::vector<Granularity> out;
  out.reserve(hi - lo + 2);
  for (std::uint32_t v = lo; v <= hi; ++v) out.push_back(Granularity::merges(v));
  out.push_back(Granularity::word());
  return out;
}

void validate_space(const SearchSpace& space) {
  if (space.source_min > space.source_max || space.target_min > space.target_max) {
    throw std::invalid_argument("search space: empty granularity range");
  }
  if (space.lambda_min < 0.0 || space.lambda_max > 1.0 ||
      space.lambda_min > space.lambda_max) {
    throw std::invalid_argument("search space: lambda range must sit inside [0, 1]");
  }
  if (space.source_max >= Granularity::kWordLevel ||
      space.target_max >= Granularity::kWordLevel) {
    throw std::invalid_argument("search space: granularity range too large");
  }
}

nlohmann::json granularity_to_json(Granularity g) {
  if (g.is_word_level()) return "WORD";
  return g.value;
}

Granularity granularity_from_json(const nlohmann::json& j) {
  if (j.is_string()) return granularity_from_string(j.get<std::string>());
  return Granularity::merges(j.get<std::uint32_t>());
}

}  // namespace

SchemePipeline::SchemePipeline(const ParallelCorpus& corpus, const MergeTable& source_table,
                               const MergeTable& target_table, AlignerConfig aligner,
                               SymmetrizationMethod method, std::string external_command)
    : corpus_(corpus),
      source_table_(source_table),
      target_table_(target_table),
      aligner_(aligner),
      method_(method),
      external_command_(std::move(external_command)) {}

const AlignmentSet& SchemePipeline::word_links(const SegmentationScheme& scheme) {
  auto it = cache_.find(scheme);
  if (it != cache_.end()) return it->second;

  SegmentedCorpus segmented = segment_corpus(corpus_, scheme, source_table_, target_table_);
  const Bitext tokens = segmented.tokens();
  const BidirectionalAlignment directional =
      external_command_.empty() ? align_bidirectional(tokens, aligner_)
                                : external_align(tokens, external_command_);
  const AlignmentSet symmetrized =
      symmetrize(directional.forward, directional.reverse, method_);
  AlignmentSet projected = project_to_words(symmetrized, segmented);
  return cache_.emplace(scheme, std::move(projected)).first->second;
}

Metrics evaluate_configuration(SchemePipeline& pipeline,
                               std::span<const SegmentationScheme> schemes, double lambda,
                               const GoldAlignment& gold) {
  if (schemes.empty()) {
    throw std::invalid_argument("evaluate_configuration: no schemes given");
  }
  std::vector<SchemeAlignment> per_scheme;
  per_scheme.reserve(schemes.size());
  for (const auto& scheme : schemes) {
    per_scheme.push_back(SchemeAlignment{scheme, pipeline.word_links(scheme)});
  }
  return score(aggregate(per_scheme, lambda), gold);
}

std::vector<TrialCandidate> propose_trials(const OptimizerState& state,
                                           const SearchSpace& space, std::size_t budget,
                                           std::size_t random_init, std::uint64_t seed) {
  validate_space(space);
  if (budget < random_init || random_init < 1) {
    throw std::invalid_argument("propose_trials: need budget >= random_init >= 1");
  }

  const std::set<SegmentationScheme> used(state.xi_history.begin(), state.xi_history.end());
  std::mt19937_64 rng(seed);

  // Small grids are enumerated so forced cells cannot be missed by
  // rejection sampling.
  std::vector<SegmentationScheme> unused_cells;
  if (grid_cells(space) <= kSmallGridLimit) {
    for (const auto src : side_options(space.source_min, space.source_max)) {
      for (const auto tgt : side_options(space.target_min, space.target_max)) {
        const SegmentationScheme cell{src, tgt};
        if (!used.contains(cell)) unused_cells.push_back(cell);
      }
    }
    if (unused_cells.empty()) return {};  // optimization complete
  }

  auto sample_scheme = [&]() -> std::optional<SegmentationScheme> {
    if (!unused_cells.empty()) {
      return unused_cells[uniform_below(rng, unused_cells.size())];
    }
    for (int attempt = 0; attempt < 256; ++attempt) {
      const SegmentationScheme scheme{
          sample_granularity(rng, space.source_min, space.source_max),
          sample_granularity(rng, space.target_min, space.target_max)};
      if (!used.contains(scheme)) return scheme;
    }
    return std::nullopt;  // space effectively exhausted
  };
  auto sample_lambda = [&]() { return uniform_in(rng, space.lambda_min, space.lambda_max); };

  std::vector<TrialCandidate> out;
  std::set<std::pair<SegmentationScheme, double>> chosen;
  auto push_unique = [&](const TrialCandidate& c) {
    if (chosen.emplace(c.scheme, c.lambda).second) out.push_back(c);
  };

  for (std::size_t k = 0; k < random_init; ++k) {
    const auto scheme = sample_scheme();
    if (!scheme) break;
    push_unique(TrialCandidate{*scheme, sample_lambda()});
  }
  if (out.empty()) return {};

  const TpeSurrogate surrogate(state.all_trials, space);
  while (out.size() < budget) {
    if (!surrogate.fitted()) {
      const auto scheme = sample_scheme();
      if (!scheme) break;
      push_unique(TrialCandidate{*scheme, sample_lambda()});
      continue;
    }
    // Acquisition maximizer over a pool of prior-sampled candidates.
    double best_score = -1e300;
    std::optional<TrialCandidate> best;
    for (std::size_t p = 0; p < kAcquisitionPool; ++p) {
      const auto scheme = sample_scheme();
      if (!scheme) break;
      const TrialCandidate cand{*scheme, sample_lambda()};
      if (chosen.contains({cand.scheme, cand.lambda})) continue;
      const double a = surrogate.acquisition(embed_candidate(cand.scheme, cand.lambda, space));
      if (a > best_score) {
        best_score = a;
        best = cand;
      }
    }
    if (!best) break;
    push_unique(*best);
  }
  return out;
}

namespace {

AlignmentSet prefix_alignment(SchemePipeline& pipeline, const OptimizerState& state,
                              std::size_t prefix_len) {
  if (prefix_len == 0) {
    // Word-level baseline: the single identity scheme.
    const SegmentationScheme word{Granularity::word(), Granularity::word()};
    std::vector<SchemeAlignment> one{{word, pipeline.word_links(word)}};
    return aggregate(std::span<const SchemeAlignment>(one), 1.0);
  }
  std::vector<SchemeAlignment> per_scheme;
  per_scheme.reserve(prefix_len);
  for (std::size_t k = 0; k < prefix_len; ++k) {
    per_scheme.push_back(
        SchemeAlignment{state.xi_history[k], pipeline.word_links(state.xi_history[k])});
  }
  return aggregate(per_scheme, state.lambda_history[prefix_len - 1]);
}

std::pair<OptimizerState, AlignmentSet> optimize_loop(SchemePipeline& pipeline,
                                                      const GoldAlignment& gold,
                                                      const SearchSpace& space,
                                                      const OptimizeConfig& config,
                                                      OptimizerState state) {
  validate_space(space);
  if (config.early_stop == 0) {
    throw std::invalid_argument("optimize: early_stop must be >= 1");
  }
  if (gold.sure.empty()) {
    throw std::invalid_argument("optimize: gold standard has no sure edges");
  }

  const SegmentationScheme word_scheme{Granularity::word(), Granularity::word()};
  if (state.xi_history.empty() && state.all_trials.empty()) {
    const std::vector<SegmentationScheme> baseline{word_scheme};
    state.baseline_f1 = evaluate_configuration(pipeline, baseline, 1.0, gold).f1;
  }

  auto delta_at = [&state](std::size_t i) {
    const double prev = i == 0 ? state.baseline_f1 : state.f1_trace[i - 1];
    return state.f1_trace[i] - prev;
  };
  auto should_stop = [&]() {
    const std::size_t done = state.f1_trace.size();
    if (done < config.early_stop) return false;
    for (std::size_t i = done - config.early_stop; i < done; ++i) {
      if (delta_at(i) > 0.0) return false;
    }
    return true;
  };

  double best_f1 = state.baseline_f1;
  for (std::size_t k = 0; k < state.f1_trace.size(); ++k) {
    if (state.f1_trace[k] > best_f1) {
      best_f1 = state.f1_trace[k];
    }
  }

  std::size_t executed = 0;
  while (!should_stop()) {
    if (config.max_iterations > 0 && executed >= config.max_iterations) break;
    const std::size_t iteration = state.xi_history.size();
    const auto candidates = propose_trials(state, space, config.budget, config.random_init,
                                           mix_seed(config.seed, iteration));
    if (candidates.empty()) break;  // every cell selected

    std::optional<TrialCandidate> accepted;
    double accepted_f1 = -1.0;
    std::vector<SegmentationScheme> schemes(state.xi_history);
    schemes.push_back(word_scheme);  // placeholder, overwritten per candidate
    for (const auto& cand : candidates) {
      schemes.back() = cand.scheme;
      const Metrics m = evaluate_configuration(pipeline, schemes, cand.lambda, gold);
      state.all_trials.push_back(Trial{cand.scheme, cand.lambda, m.f1, iteration});
      const bool better =
          m.f1 > accepted_f1 ||
          (m.f1 == accepted_f1 && accepted &&
           (cand.scheme < accepted->scheme ||
            (cand.scheme == accepted->scheme && cand.lambda < accepted->lambda)));
      if (better) {
        accepted_f1 = m.f1;
        accepted = cand;
      }
    }

    state.xi_history.push_back(accepted->scheme);
    state.lambda_history.push_back(accepted->lambda);
    state.f1_trace.push_back(accepted_f1);
    if (accepted_f1 > best_f1) {
      best_f1 = accepted_f1;
      state.best_prefix_len = state.xi_history.size();
    }
    ++executed;
  }

  AlignmentSet final_alignment = prefix_alignment(pipeline, state, state.best_prefix_len);
  return {std::move(state), std::move(final_alignment)};
}

}  // namespace

std::pair<OptimizerState, AlignmentSet> run_iterative_sampling(SchemePipeline& pipeline,
                                                               const GoldAlignment& gold,
                                                               const SearchSpace& space,
                                                               const OptimizeConfig& config) {
  OptimizerState state;
  state.seed = config.seed;
  return optimize_loop(pipeline, gold, space, config, std::move(state));
}

std::pair<OptimizerState, AlignmentSet> resume_iterative_sampling(
    SchemePipeline& pipeline, const GoldAlignment& gold, const SearchSpace& space,
    const OptimizeConfig& config, OptimizerState state) {
  return optimize_loop(pipeline, gold, space, config, std::move(state));
}

AlignmentSet apply_transfer(SchemePipeline& pipeline,
                            std::span<const SegmentationScheme> xi_star, double lambda_star) {
  if (xi_star.empty()) {
    throw std::invalid_argument("apply_transfer: no schemes to transfer");
  }
  const auto src_max = static_cast<std::uint32_t>(pipeline.source_table().max_merges());
  const auto tgt_max = static_cast<std::uint32_t>(pipeline.target_table().max_merges());

  auto clamp_side = [](Granularity g, std::uint32_t max_merges) {
    if (g.is_word_level() || g.value <= max_merges) return g;
    return Granularity::merges(max_merges);
  };

  std::vector<SegmentationScheme> clamped;
  for (const auto& scheme : xi_star) {
    const SegmentationScheme c{clamp_side(scheme.source, src_max),
                               clamp_side(scheme.target, tgt_max)};
    if (std::find(clamped.begin(), clamped.end(), c) == clamped.end()) clamped.push_back(c);
  }

  std::vector<SchemeAlignment> per_scheme;
  per_scheme.reserve(clamped.size());
  for (const auto& scheme : clamped) {
    per_scheme.push_back(SchemeAlignment{scheme, pipeline.word_links(scheme)});
  }
  return aggregate(per_scheme, lambda_star);
}

AlignmentSet best_prefix_alignment(SchemePipeline& pipeline, const OptimizerState& state) {
  return prefix_alignment(pipeline, state, state.best_prefix_len);
}

std::string optimizer_state_to_json(const OptimizerState& state) {
  nlohmann::json j;
  j["seed"] = state.seed;
  j["baseline_f1"] = state.baseline_f1;
  j["best_prefix_len"] = state.best_prefix_len;
  nlohmann::json xi = nlohmann::json::array();
  for (const auto& scheme : state.xi_history) {
    xi.push_back({{"source", granularity_to_json(scheme.source)},
                  {"target", granularity_to_json(scheme.target)}});
  }
  j["xi_history"] = std::move(xi);
  j["lambda_history"] = state.lambda_history;
  j["f1_trace"] = state.f1_trace;
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : state.all_trials) {
    trials.push_back({{"source", granularity_to_json(t.scheme.source)},
                      {"target", granularity_to_json(t.scheme.target)},
                      {"lambda", t.lambda},
                      {"f1", t.f1},
                      {"iteration", t.iteration}});
  }
  j["trials"] = std::move(trials);
  return j.dump(2) + "\n";
}

OptimizerState optimizer_state_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("optimizer state: ") + e.what());
  }
  try {
    OptimizerState state;
    state.seed = j.at("seed").get<std::uint64_t>();
    state.baseline_f1 = j.at("baseline_f1").get<double>();
    state.best_prefix_len = j.at("best_prefix_len").get<std::size_t>();
    for (const auto& s : j.at("xi_history")) {
      state.xi_history.push_back(SegmentationScheme{granularity_from_json(s.at("source")),
                                                    granularity_from_json(s.at("target"))});
    }
    state.lambda_history = j.at("lambda_history").get<std::vector<double>>();
    state.f1_trace = j.at("f1_trace").get<std::vector<double>>();
    for (const auto& t : j.at("trials")) {
      state.all_trials.push_back(Trial{
          SegmentationScheme{granularity_from_json(t.at("source")),
                             granularity_from_json(t.at("target"))},
          t.at("lambda").get<double>(), t.at("f1").get<double>(),
          t.at("iteration").get<std::size_t>()});
    }
    if (state.lambda_history.size() != state.xi_history.size() ||
        state.f1_trace.size() != state.xi_history.size() ||
        state.best_prefix_len > state.xi_history.size()) {
      throw ParseError("optimizer state: inconsistent history lengths");
    }
    return state;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("optimizer state: ") + e.what());
  }
}

void write_trace_csv(const OptimizerState& state, std::ostream& out) {
  out << "# seed=" << state.seed << " baseline_f1=" << state.baseline_f1 << '\n';
  out << "iteration,source,target,lambda,f1\n";
  for (std::size_t i = 0; i < state.xi_history.size(); ++i) {
    out << i << ',' << to_string(state.xi_history[i].source) << ','
        << to_string(state.xi_history[i].target) << ',' << state.lambda_history[i] << ','
        << state.f1_trace[i] << '\n';
  }
}

void write_trials_csv(const OptimizerState& state, std::ostream& out) {
  out << "# seed=" << state.seed << '\n';
  out << "iteration,source,target,lambda,f1\n";
  for (const auto& t : state.all_trials) {
    out << t.iteration << ',' << to_string(t.scheme.source) << ','
        << to_string(t.scheme.target) << ',' << t.lambda << ',' << t.f1 << '\n';
  }
}

}  // namespace subalign

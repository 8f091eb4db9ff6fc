#include "subalign/aligner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace subalign {

namespace {

constexpr double kTensionMin = 0.5;
constexpr double kTensionMax = 20.0;
constexpr double kTensionStep = 20.0;  // learning rate on the per-token gradient

struct KahanSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) {
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

struct EncodedBitext {
  std::vector<std::vector<std::uint32_t>> source;  // ids >= 1; 0 is NULL
  std::vector<std::vector<std::uint32_t>> target;
};

EncodedBitext encode_training(const Bitext& bitext, Vocabulary& src_vocab,
                              Vocabulary& tgt_vocab) {
  src_vocab.intern("<null>");  // claims id 0
  EncodedBitext enc;
  enc.source.reserve(bitext.size());
  enc.target.reserve(bitext.size());
  for (std::size_t s = 0; s < bitext.size(); ++s) {
    if (bitext.source[s].empty() || bitext.target[s].empty()) {
      throw std::invalid_argument("aligner: empty sentence at index " + std::to_string(s));
    }
    std::vector<std::uint32_t> src, tgt;
    src.reserve(bitext.source[s].size());
    tgt.reserve(bitext.target[s].size());
    for (const auto& tok : bitext.source[s]) src.push_back(src_vocab.intern(tok));
    for (const auto& tok : bitext.target[s]) tgt.push_back(tgt_vocab.intern(tok));
    enc.source.push_back(std::move(src));
    enc.target.push_back(std::move(tgt));
  }
  return enc;
}

std::uint64_t shape_key(std::size_t n, std::size_t m) {
  return (static_cast<std::uint64_t>(n) << 32) | m;
}

// Per-shape diagonal prior weights (1-p0) * exp(-T d) / Z_j, rebuilt
// whenever the tension changes.
class DiagonalPriorCache {
 public:
  DiagonalPriorCache(double tension, double p0) : tension_(tension), p0_(p0) {}

  const std::vector<double>& weights(std::size_t n, std::size_t m) {
    auto [it, inserted] = cache_.try_emplace(shape_key(n, m));
    if (inserted) {
      auto& w = it->second;
      w.resize(n * m);
      for (std::size_t j = 0; j < m; ++j) {
        double z = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double v = std::exp(-tension_ * diagonal_distance(i, j, n, m));
          w[j * n + i] = v;
          z += v;
        }
        const double scale = (1.0 - p0_) / z;
        for (std::size_t i = 0; i < n; ++i) w[j * n + i] *= scale;
      }
    }
    return it->second;
  }

 private:
  double tension_;
  double p0_;
  std::unordered_map<std::uint64_t, std::vector<double>> cache_;
};

}  // namespace

std::uint32_t Vocabulary::intern(std::string_view token) {
  auto it = ids_.find(std::string(token));
  if (it != ids_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(ids_.size());
  ids_.emplace(std::string(token), id);
  return id;
}

std::uint32_t Vocabulary::lookup(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnseen : it->second;
}

std::size_t TranslationTable::slot(std::uint32_t source_id, std::uint32_t target_id) const {
  if (source_id >= keys_.size()) return npos;
  const auto& row = keys_[source_id];
  if (source_id == Vocabulary::kNullId && target_id < row.size()) {
    return target_id;  // NULL row is dense over all target ids
  }
  auto it = std::lower_bound(row.begin(), row.end(), target_id);
  if (it == row.end() || *it != target_id) return npos;
  return static_cast<std::size_t>(it - row.begin());
}

double TranslationTable::prob(std::uint32_t source_id, std::uint32_t target_id) const {
  const auto s = slot(source_id, target_id);
  return s == npos ? kFloorProb : probs_[source_id][s];
}

AlignmentSet DirectionalAlignment::to_links(bool transposed) const {
  std::vector<Link> links;
  for (std::uint32_t s = 0; s < chosen.size(); ++s) {
    for (std::uint32_t j = 0; j < chosen[s].size(); ++j) {
      const auto i = chosen[s][j];
      if (i < 0) continue;
      if (transposed) {
        links.push_back(Link{s, j, static_cast<std::uint32_t>(i)});
      } else {
        links.push_back(Link{s, static_cast<std::uint32_t>(i), j});
      }
    }
  }
  return AlignmentSet(std::move(links));
}

// EM driver shared by model 1 and diagonal model 2.
class EmTrainer {
 public:
  EmTrainer(const Bitext& bitext, const AlignerConfig& config, TrainedModel model)
      : config_(config), model_(std::move(model)) {
    encoded_ = encode_training(bitext, model_.source_vocab, model_.target_vocab);
    if (model_.table.keys_.empty()) init_table();
    build_slot_cache();
  }

  TrainedModel run(bool diagonal, int iterations) {
    model_.diagonal = diagonal;
    if (diagonal && model_.tension <= 0.0) model_.tension = config_.diagonal_tension;
    for (int iter = 0; iter < iterations; ++iter) {
      IterationStats stats = e_step(diagonal);
      model_.likelihood_trace.push_back(stats.log_likelihood);
      if (diagonal) update_tension(stats);
      m_step(stats);
    }
    return std::move(model_);
  }

 private:
  struct IterationStats {
    std::vector<std::vector<double>> counts;  // mirrors table rows
    double log_likelihood = 0.0;
    DiagonalStats diag;
  };

  void init_table() {
    auto& keys = model_.table.keys_;
    auto& probs = model_.table.probs_;
    const std::size_t n_src = model_.source_vocab.size();
    keys.resize(n_src);
    probs.resize(n_src);

    // NULL co-occurs with everything: dense row over all target ids.
    const std::size_t n_tgt = model_.target_vocab.size();
    keys[Vocabulary::kNullId].resize(n_tgt);
    for (std::uint32_t t = 0; t < n_tgt; ++t) keys[Vocabulary::kNullId][t] = t;

    for (std::size_t s = 0; s < encoded_.source.size(); ++s) {
      for (const auto e : encoded_.source[s]) {
        auto& row = keys[e];
        for (const auto f : encoded_.target[s]) row.push_back(f);
      }
    }
    for (std::uint32_t e = 1; e < n_src; ++e) {
      auto& row = keys[e];
      std::sort(row.begin(), row.end());
      row.erase(std::unique(row.begin(), row.end()), row.end());
    }
    for (std::uint32_t e = 0; e < n_src; ++e) {
      probs[e].assign(keys[e].size(), keys[e].empty() ? 0.0 : 1.0 / keys[e].size());
    }
  }

  void build_slot_cache() {
    slot_cache_.resize(encoded_.source.size());
    for (std::size_t s = 0; s < encoded_.source.size(); ++s) {
      const auto& src = encoded_.source[s];
      const auto& tgt = encoded_.target[s];
      auto& slots = slot_cache_[s];
      slots.resize(src.size() * tgt.size());
      for (std::size_t j = 0; j < tgt.size(); ++j) {
        for (std::size_t i = 0; i < src.size(); ++i) {
          slots[j * src.size() + i] = model_.table.slot(src[i], tgt[j]);
        }
      }
    }
  }

  IterationStats e_step(bool diagonal) {
    const int workers = std::max(1, config_.workers);
    const std::size_t n_sentences = encoded_.source.size();
    std::vector<IterationStats> chunks(workers);
    for (auto& c : chunks) {
      c.counts.resize(model_.table.keys_.size());
      for (std::size_t e = 0; e < c.counts.size(); ++e) {
        c.counts[e].assign(model_.table.keys_[e].size(), 0.0);
      }
    }

    auto process = [&](int chunk) {
      const std::size_t lo = n_sentences * chunk / workers;
      const std::size_t hi = n_sentences * (chunk + 1) / workers;
      DiagonalPriorCache priors(model_.tension, config_.null_probability);
      KahanSum loglik;
      KahanSum post_dist;
      auto& stats = chunks[chunk];
      std::vector<double> scores;
      for (std::size_t s = lo; s < hi; ++s) {
        const auto& src = encoded_.source[s];
        const auto& tgt = encoded_.target[s];
        const std::size_t n = src.size();
        const std::size_t m = tgt.size();
        const auto& slots = slot_cache_[s];
        const double uniform_prior = (1.0 - config_.null_probability) / static_cast<double>(n);
        const std::vector<double>* diag_w = diagonal ? &priors.weights(n, m) : nullptr;
        std::vector<double>* mass = nullptr;
        if (diagonal) {
          auto& bucket = stats.diag.real_mass[{static_cast<std::uint32_t>(n),
                                               static_cast<std::uint32_t>(m)}];
          if (bucket.size() < m) bucket.resize(m, 0.0);
          mass = &bucket;
        }
        scores.resize(n);
        for (std::size_t j = 0; j < m; ++j) {
          const std::uint32_t f = tgt[j];
          const double null_score =
              config_.null_probability * model_.table.probs_[Vocabulary::kNullId][f];
          double sum = null_score;
          for (std::size_t i = 0; i < n; ++i) {
            const double prior = diagonal ? (*diag_w)[j * n + i] : uniform_prior;
            const double sc = prior * model_.table.probs_[src[i]][slots[j * n + i]];
            scores[i] = sc;
            sum += sc;
          }
          const double inv = 1.0 / sum;
          stats.counts[Vocabulary::kNullId][f] += null_score * inv;
          double real_total = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            const double post = scores[i] * inv;
            stats.counts[src[i]][slots[j * n + i]] += post;
            if (diagonal) {
              real_total += post;
              post_dist.add(post * diagonal_distance(i, j, n, m));
            }
          }
          if (diagonal) (*mass)[j] += real_total;
          loglik.add(std::log(sum));
        }
        stats.diag.total_tokens += static_cast<double>(m);
      }
      stats.log_likelihood = loglik.sum;
      stats.diag.posterior_distance = post_dist.sum;
    };

    if (workers == 1) {
      process(0);
    } else {
      std::vector<std::thread> threads;
      threads.reserve(workers);
      for (int c = 0; c < workers; ++c) threads.emplace_back(process, c);
      for (auto& t : threads) t.join();
    }

    // Ordered merge keeps results identical for a fixed worker count.
    IterationStats merged = std::move(chunks[0]);
    for (int c = 1; c < workers; ++c) {
      auto& other = chunks[c];
      for (std::size_t e = 0; e < merged.counts.size(); ++e) {
        for (std::size_t k = 0; k < merged.counts[e].size(); ++k) {
          merged.counts[e][k] += other.counts[e][k];
        }
      }
      merged.log_likelihood += other.log_likelihood;
      merged.diag.posterior_distance += other.diag.posterior_distance;
      merged.diag.total_tokens += other.diag.total_tokens;
      for (auto& [shape, bucket] : other.diag.real_mass) {
        auto& dst = merged.diag.real_mass[shape];
        if (dst.size() < bucket.size()) dst.resize(bucket.size(), 0.0);
        for (std::size_t j = 0; j < bucket.size(); ++j) dst[j] += bucket[j];
      }
    }
    return merged;
  }

  void update_tension(const IterationStats& stats) {
    for (int step = 0; step < config_.tension_updates_per_iter; ++step) {
      const double grad = diagonal_gradient(stats.diag, model_.tension);
      model_.tension += kTensionStep * grad / std::max(1.0, stats.diag.total_tokens);
      model_.tension = std::clamp(model_.tension, kTensionMin, kTensionMax);
    }
  }

  void m_step(const IterationStats& stats) {
    const double alpha = config_.smoothing_alpha;
    for (std::size_t e = 0; e < stats.counts.size(); ++e) {
      const auto& counts = stats.counts[e];
      auto& probs = model_.table.probs_[e];
      double total = 0.0;
      for (const double c : counts) total += c;
      const double denom = total + alpha * static_cast<double>(counts.size());
      if (denom <= 0.0) continue;  // row saw no mass and there is no smoothing
      for (std::size_t k = 0; k < counts.size(); ++k) {
        probs[k] = (counts[k] + alpha) / denom;
      }
    }
  }

  AlignerConfig config_;
  TrainedModel model_;
  EncodedBitext encoded_;
  std::vector<std::vector<std::size_t>> slot_cache_;
};

TrainedModel train_model1(const Bitext& bitext, const AlignerConfig& config) {
  if (bitext.size() == 0) throw std::invalid_argument("train_model1: empty corpus");
  if (bitext.source.size() != bitext.target.size()) {
    throw std::invalid_argument("train_model1: side lengths differ");
  }
  TrainedModel model;
  model.null_probability = config.null_probability;
  EmTrainer trainer(bitext, config, std::move(model));
  return trainer.run(/*diagonal=*/false, config.model1_iterations);
}

TrainedModel train_diag_model2(const Bitext& bitext, const AlignerConfig& config,
                               TrainedModel init) {
  if (bitext.size() == 0) throw std::invalid_argument("train_diag_model2: empty corpus");
  EmTrainer trainer(bitext, config, std::move(init));
  return trainer.run(/*diagonal=*/true, config.model2_iterations);
}

DirectionalAlignment viterbi_align(const Bitext& bitext, const TrainedModel& model) {
  DirectionalAlignment out;
  out.chosen.resize(bitext.size());
  DiagonalPriorCache priors(model.tension, model.null_probability);
  for (std::size_t s = 0; s < bitext.size(); ++s) {
    const auto& src_tokens = bitext.source[s];
    const auto& tgt_tokens = bitext.target[s];
    const std::size_t n = src_tokens.size();
    const std::size_t m = tgt_tokens.size();
    std::vector<std::uint32_t> src(n);
    for (std::size_t i = 0; i < n; ++i) src[i] = model.source_vocab.lookup(src_tokens[i]);
    const std::vector<double>* diag_w = model.diagonal ? &priors.weights(n, m) : nullptr;
    const double uniform_prior = (1.0 - model.null_probability) / static_cast<double>(n);

    auto& chosen = out.chosen[s];
    chosen.assign(m, -1);
    for (std::size_t j = 0; j < m; ++j) {
      const std::uint32_t f = model.target_vocab.lookup(tgt_tokens[j]);
      double best = -1.0;
      std::int32_t best_i = -1;
      for (std::size_t i = 0; i < n; ++i) {
        const double prior = model.diagonal ? (*diag_w)[j * n + i] : uniform_prior;
        const double t = src[i] == Vocabulary::kUnseen || f == Vocabulary::kUnseen
                             ? TranslationTable::kFloorProb
                             : model.table.prob(src[i], f);
        const double score = prior * t;
        if (score > best) {  // strict: ties keep the smallest source index
          best = score;
          best_i = static_cast<std::int32_t>(i);
        }
      }
      const double null_t = f == Vocabulary::kUnseen
                                ? TranslationTable::kFloorProb
                                : model.table.prob(Vocabulary::kNullId, f);
      const double null_score = model.null_probability * null_t;
      if (null_score > best) chosen[j] = -1;
      else chosen[j] = best_i;
    }
  }
  return out;
}

BidirectionalAlignment align_bidirectional(const Bitext& bitext, const AlignerConfig& config) {
  auto pipeline = [&config](const Bitext& b) {
    TrainedModel model = train_model1(b, config);
    if (config.model2_iterations > 0) {
      model = train_diag_model2(b, config, std::move(model));
    }
    return model;
  };

  BidirectionalAlignment out;
  {
    const TrainedModel fwd = pipeline(bitext);
    out.forward = viterbi_align(bitext, fwd).to_links(false);
  }
  {
    Bitext swapped;
    swapped.source = bitext.target;
    swapped.target = bitext.source;
    const TrainedModel rev = pipeline(swapped);
    out.reverse = viterbi_align(swapped, rev).to_links(true);
  }
  return out;
}

std::vector<PosteriorGrid> posterior_grids(const Bitext& bitext, const TrainedModel& model) {
  std::vector<PosteriorGrid> grids;
  grids.reserve(bitext.size());
  DiagonalPriorCache priors(model.tension, model.null_probability);
  for (std::size_t s = 0; s < bitext.size(); ++s) {
    const auto& src_tokens = bitext.source[s];
    const auto& tgt_tokens = bitext.target[s];
    PosteriorGrid g;
    g.n = src_tokens.size();
    g.m = tgt_tokens.size();
    g.real.assign(g.n * g.m, 0.0);
    g.null_mass.assign(g.m, 0.0);
    const std::vector<double>* diag_w = model.diagonal ? &priors.weights(g.n, g.m) : nullptr;
    const double uniform_prior = (1.0 - model.null_probability) / static_cast<double>(g.n);
    for (std::size_t j = 0; j < g.m; ++j) {
      const std::uint32_t f = model.target_vocab.lookup(tgt_tokens[j]);
      const double null_t = f == Vocabulary::kUnseen
                                ? TranslationTable::kFloorProb
                                : model.table.prob(Vocabulary::kNullId, f);
      double sum = model.null_probability * null_t;
      g.null_mass[j] = sum;
      for (std::size_t i = 0; i < g.n; ++i) {
        const std::uint32_t e = model.source_vocab.lookup(src_tokens[i]);
        const double t = e == Vocabulary::kUnseen || f == Vocabulary::kUnseen
                             ? TranslationTable::kFloorProb
                             : model.table.prob(e, f);
        const double prior = model.diagonal ? (*diag_w)[j * g.n + i] : uniform_prior;
        g.real[j * g.n + i] = prior * t;
        sum += g.real[j * g.n + i];
      }
      const double inv = 1.0 / sum;
      g.null_mass[j] *= inv;
      for (std::size_t i = 0; i < g.n; ++i) g.real[j * g.n + i] *= inv;
    }
    grids.push_back(std::move(g));
  }
  return grids;
}

DiagonalStats diagonal_stats(const std::vector<PosteriorGrid>& grids) {
  DiagonalStats stats;
  for (const auto& g : grids) {
    auto& bucket = stats.real_mass[{static_cast<std::uint32_t>(g.n),
                                    static_cast<std::uint32_t>(g.m)}];
    if (bucket.size() < g.m) bucket.resize(g.m, 0.0);
    for (std::size_t j = 0; j < g.m; ++j) {
      double real_total = 0.0;
      for (std::size_t i = 0; i < g.n; ++i) {
        const double post = g.real[j * g.n + i];
        real_total += post;
        stats.posterior_distance += post * diagonal_distance(i, j, g.n, g.m);
      }
      bucket[j] += real_total;
    }
    stats.total_tokens += static_cast<double>(g.m);
  }
  return stats;
}

double diagonal_gradient(const DiagonalStats& stats, double tension) {
  // dQ/dT = sum_j realmass_j * E_prior[d | j] - sum posteriors * d
  double model_term = 0.0;
  for (const auto& [shape, bucket] : stats.real_mass) {
    const std::size_t n = shape.first;
    const std::size_t m = shape.second;
    for (std::size_t j = 0; j < bucket.size(); ++j) {
      if (bucket[j] == 0.0) continue;
      double z = 0.0;
      double zd = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = diagonal_distance(i, j, n, m);
        const double w = std::exp(-tension * d);
        z += w;
        zd += w * d;
      }
      model_term += bucket[j] * (zd / z);
    }
  }
  return model_term - stats.posterior_distance;
}

}  // namespace subalign

#include "subalign/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "subalign/random.hpp"

namespace subalign {

namespace {

const char kConsonants[] = "bdfgklmnprstvz";
const char kVowels[] = "aeiou";

std::string random_stem(std::mt19937_64& rng, std::size_t syllables) {
  std::string s;
  for (std::size_t k = 0; k < syllables; ++k) {
    s += kConsonants[uniform_below(rng, sizeof(kConsonants) - 1)];
    s += kVowels[uniform_below(rng, sizeof(kVowels) - 1)];
  }
  return s;
}

std::vector<std::string> distinct_stems(std::mt19937_64& rng, std::size_t count,
                                        std::size_t min_syllables, std::size_t max_syllables) {
  std::set<std::string> seen;
  std::vector<std::string> out;
  while (out.size() < count) {
    const std::size_t syl =
        min_syllables + uniform_below(rng, max_syllables - min_syllables + 1);
    auto stem = random_stem(rng, syl);
    if (seen.insert(stem).second) out.push_back(std::move(stem));
  }
  return out;
}

// Zipf-distributed rank sampler over [0, n).
class ZipfSampler {
 public:
  ZipfSampler(std::size_t n, double exponent) : cumulative_(n) {
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      total += 1.0 / std::pow(static_cast<double>(r + 1), exponent);
      cumulative_[r] = total;
    }
    for (auto& c : cumulative_) c /= total;
  }

  std::size_t draw(std::mt19937_64& rng) const {
    const double u = uniform_unit(rng);
    const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
    return static_cast<std::size_t>(it - cumulative_.begin());
  }

 private:
  std::vector<double> cumulative_;
};

}  // namespace

SyntheticBitext generate_synthetic(const SyntheticConfig& config) {
  if (config.stems < 2 || config.sentences == 0 || config.min_words == 0 ||
      config.max_words < config.min_words) {
    throw std::invalid_argument("generate_synthetic: bad configuration");
  }

  std::mt19937_64 rng(config.seed);
  const auto source_words = distinct_stems(rng, config.stems, 2, 3);
  const auto target_stems = distinct_stems(rng, config.stems, 2, 3);
  const auto suffix_forms = distinct_stems(rng, config.suffixes, 1, 1);
  const ZipfSampler zipf(config.stems, config.zipf_exponent);

  std::vector<SentencePair> pairs;
  std::vector<Link> gold_links;
  pairs.reserve(config.sentences);

  for (std::uint32_t s = 0; s < config.sentences; ++s) {
    const std::size_t n_words =
        config.min_words + uniform_below(rng, config.max_words - config.min_words + 1);
    SentencePair pair;
    pair.source.reserve(n_words);
    std::vector<std::string> forms(n_words);
    for (std::size_t w = 0; w < n_words; ++w) {
      const std::size_t stem = zipf.draw(rng);
      pair.source.push_back(source_words[stem]);
      forms[w] = target_stems[stem];
      if (config.suffixes > 0 && uniform_unit(rng) < config.suffix_probability) {
        forms[w] += suffix_forms[uniform_below(rng, config.suffixes)];
      }
    }

    // Fuse adjacent forms into compounds; both members keep their gold link.
    std::size_t w = 0;
    while (w < n_words) {
      const auto tgt_pos = static_cast<std::uint32_t>(pair.target.size());
      if (w + 1 < n_words && uniform_unit(rng) < config.compound_probability) {
        pair.target.push_back(forms[w] + forms[w + 1]);
        gold_links.push_back(Link{s, static_cast<std::uint32_t>(w), tgt_pos});
        gold_links.push_back(Link{s, static_cast<std::uint32_t>(w + 1), tgt_pos});
        w += 2;
      } else {
        pair.target.push_back(forms[w]);
        gold_links.push_back(Link{s, static_cast<std::uint32_t>(w), tgt_pos});
        w += 1;
      }
    }
    pairs.push_back(std::move(pair));
  }

  SyntheticBitext out;
  out.corpus = ParallelCorpus(std::move(pairs));
  out.gold.sure = AlignmentSet(gold_links);
  out.gold.possible = AlignmentSet(std::move(gold_links));
  for (std::uint32_t s = 0; s < config.sentences; ++s) out.gold.covered_sentences.insert(s);
  return out;
}

}  // namespace subalign

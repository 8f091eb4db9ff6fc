#pragma once

#include <cstdint>

#include "subalign/corpus.hpp"

namespace subalign {

// Generator for bitexts with a morphologically fusing target side: every
// source token translates to a stem, stems optionally take a suffix, and
// adjacent target tokens fuse into compounds. Gold links are exact by
// construction (all sure), so alignment quality can be measured without
// annotated data.
struct SyntheticConfig {
  std::size_t sentences = 5000;
  std::size_t stems = 400;
  std::size_t min_words = 4;
  std::size_t max_words = 9;
  double compound_probability = 0.35;  // fuses a target token with its right neighbor
  double suffix_probability = 0.45;
  std::size_t suffixes = 6;
  double zipf_exponent = 1.05;
  std::uint64_t seed = 7;
};

struct SyntheticBitext {
  ParallelCorpus corpus;
  GoldAlignment gold;  // covers every sentence
};

SyntheticBitext generate_synthetic(const SyntheticConfig& config);

}  // namespace subalign

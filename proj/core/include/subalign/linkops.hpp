#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "subalign/bpe.hpp"
#include "subalign/corpus.hpp"

namespace subalign {

enum class SymmetrizationMethod {
  kIntersection,
  kUnion,
  kGrowDiagFinalAnd,
};

SymmetrizationMethod symmetrization_from_string(const std::string& name);
std::string to_string(SymmetrizationMethod method);

// Combines forward and reverse directional links. GDFA follows the Moses
// convention: seed with the intersection, grow with 8-neighborhood union
// links while either endpoint is unaligned, then final-and over both
// directions.
AlignmentSet symmetrize(const AlignmentSet& forward, const AlignmentSet& reverse,
                        SymmetrizationMethod method);

// Maps every subword link to the word link of its parents and collapses
// duplicates. Throws IntegrityError when an index does not fit the maps,
// which signals a scheme/alignment mismatch.
AlignmentSet project_to_words(const AlignmentSet& subword_alignment,
                              const SegmentedCorpus& segmented);

// Word-level alignment produced by one segmentation scheme.
struct SchemeAlignment {
  SegmentationScheme scheme;
  AlignmentSet word_links;
};

// Per-link scheme vote counts; every tallied link appears in >= 1 scheme.
struct VoteTally {
  std::vector<std::pair<Link, std::uint32_t>> counts;  // sorted by link
  std::uint32_t total_schemes = 0;
};

VoteTally tally_votes(std::span<const SchemeAlignment> scheme_alignments);

// Keeps a word link iff it appears in at least lambda * T of the T schemes.
// lambda 0 is the union of schemes, lambda 1 their intersection.
AlignmentSet aggregate(std::span<const SchemeAlignment> scheme_alignments, double lambda);
AlignmentSet aggregate(const VoteTally& tally, double lambda);

// CSV: sentence, source, target, count, total_schemes.
void write_tally_csv(const VoteTally& tally, std::ostream& out);

}  // namespace subalign

#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "subalign/corpus.hpp"

namespace subalign {

// Marker appended to every word during merge learning.
inline constexpr std::string_view kWordEndMarker = "</w>";
// Marker carried by every non-final subword of a word in segmented output.
inline constexpr std::string_view kContinuationMarker = "@@";

// Ordered BPE merge rules for one language side. affected[k] is the number
// of training sentences containing the k-th merged pair at merge time;
// tables loaded from disk carry no affected counts.
class MergeTable {
 public:
  MergeTable() = default;
  MergeTable(std::vector<std::pair<std::string, std::string>> merges,
             std::vector<std::size_t> affected)
      : merges_(std::move(merges)), affected_(std::move(affected)) {}

  std::size_t max_merges() const { return merges_.size(); }
  const std::vector<std::pair<std::string, std::string>>& merges() const { return merges_; }
  const std::vector<std::size_t>& affected() const { return affected_; }

 private:
  std::vector<std::pair<std::string, std::string>> merges_;
  std::vector<std::size_t> affected_;
};

// One sentence split into subwords, with each subword mapped back to the
// 0-based index of the word it came from.
struct SegmentedSentence {
  std::vector<std::string> tokens;
  std::vector<std::uint32_t> word_of_token;
};

// Merge-step count for one side, or the word-level sentinel.
struct Granularity {
  static constexpr std::uint32_t kWordLevel = 0xffffffffu;

  std::uint32_t value = kWordLevel;

  static Granularity word() { return Granularity{kWordLevel}; }
  static Granularity merges(std::uint32_t k) { return Granularity{k}; }
  bool is_word_level() const { return value == kWordLevel; }

  auto operator<=>(const Granularity&) const = default;
};

// One cell of the segmentation grid: paired source/target granularities.
struct SegmentationScheme {
  Granularity source;
  Granularity target;

  auto operator<=>(const SegmentationScheme&) const = default;
};

std::string to_string(Granularity g);
std::string to_string(const SegmentationScheme& s);
// Parses "WORD" or a non-negative merge count. Throws ParseError otherwise.
Granularity granularity_from_string(const std::string& text);

// A parallel corpus segmented under one scheme.
struct SegmentedCorpus {
  std::vector<SegmentedSentence> source;
  std::vector<SegmentedSentence> target;

  std::size_t size() const { return source.size(); }
  Bitext tokens() const;
};

// Learns BPE merges on one corpus side. Merging stops after max_merges
// steps or when the best pair occurs fewer than 2 times. Ties between
// equally frequent pairs break to the lexicographically smaller pair.
MergeTable learn_bpe(const std::vector<std::vector<std::string>>& sentences,
                     std::size_t max_merges);

// Applies the first k merges (or none of this for word level) to one
// sentence. Throws std::invalid_argument when k exceeds the table.
SegmentedSentence segment(const std::vector<std::string>& words, const MergeTable& table,
                          Granularity granularity);

SegmentedCorpus segment_corpus(const ParallelCorpus& corpus, const SegmentationScheme& scheme,
                               const MergeTable& source_table, const MergeTable& target_table);

// Per-merge affected-sentence counts in merge order: (k, count), k from 1.
std::vector<std::pair<std::size_t, std::size_t>> affected_curve(const MergeTable& table);

// Inverse of segmentation: strips continuation markers and joins subwords
// back into words. Used by round-trip checks and diagnostics.
std::vector<std::string> reconstruct_words(const SegmentedSentence& sentence);

// Text format: a header line with the merge count, then one "left right"
// pair per line in merge order.
void write_merge_table(const MergeTable& table, std::ostream& out);
MergeTable read_merge_table(std::istream& in);

void write_affected_csv(const MergeTable& table, std::ostream& out);

}  // namespace subalign

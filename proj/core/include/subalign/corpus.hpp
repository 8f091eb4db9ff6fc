#pragma once

#include <cstddef>
#include <cstdint>
#include <compare>
#include <iosfwd>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace subalign {

// One tokenized sentence pair. Tokens never contain whitespace.
struct SentencePair {
  std::vector<std::string> source;
  std::vector<std::string> target;
  std::size_t id = 0;  // 0-based position in the owning corpus
};

// Immutable sequence of sentence pairs with contiguous ids 0..N-1.
class ParallelCorpus {
 public:
  ParallelCorpus() = default;
  explicit ParallelCorpus(std::vector<SentencePair> pairs);

  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  const SentencePair& pair(std::size_t i) const { return pairs_[i]; }
  const std::vector<SentencePair>& pairs() const { return pairs_; }

  auto begin() const { return pairs_.begin(); }
  auto end() const { return pairs_.end(); }

 private:
  std::vector<SentencePair> pairs_;
};

// One alignment edge: word positions are 0-based within their sentence.
struct Link {
  std::uint32_t sentence = 0;
  std::uint32_t source = 0;
  std::uint32_t target = 0;

  auto operator<=>(const Link&) const = default;
};

// Set of alignment edges, stored sorted and duplicate-free.
class AlignmentSet {
 public:
  AlignmentSet() = default;
  explicit AlignmentSet(std::vector<Link> links);  // sorts and dedups

  const std::vector<Link>& links() const { return links_; }
  std::size_t size() const { return links_.size(); }
  bool empty() const { return links_.empty(); }
  bool contains(const Link& l) const;

  bool operator==(const AlignmentSet&) const = default;

  // First link index with the given sentence id, and one past the last.
  std::pair<std::size_t, std::size_t> sentence_range(std::uint32_t sentence) const;

  AlignmentSet intersect(const AlignmentSet& other) const;
  AlignmentSet unite(const AlignmentSet& other) const;

 private:
  std::vector<Link> links_;
};

// Gold standard with sure (S) and possible (P) edges, S subset of P.
struct GoldAlignment {
  AlignmentSet sure;
  AlignmentSet possible;
  std::set<std::uint32_t> covered_sentences;
};

// Plain per-sentence token view used by the aligner. Decouples training
// from whether the tokens are words or subwords.
struct Bitext {
  std::vector<std::vector<std::string>> source;
  std::vector<std::vector<std::string>> target;

  std::size_t size() const { return source.size(); }
  static Bitext from_corpus(const ParallelCorpus& corpus);
};

// --- corpus construction ---------------------------------------------------

// Reads two line streams of pre-tokenized text, one sentence per line.
// Throws ParseError on a line-count mismatch or an empty line.
ParallelCorpus load_parallel(std::istream& source_text, std::istream& target_text);

// Convenience overload over file paths.
ParallelCorpus load_parallel_files(const std::string& source_path,
                                   const std::string& target_path);

// Uniform sample of n pairs without replacement, original order kept and
// ids renumbered. Identity when n >= corpus size. n = 0 is rejected.
ParallelCorpus subsample(const ParallelCorpus& corpus, std::size_t n, std::uint64_t seed);

// Concatenates an annotated evaluation corpus behind a training corpus and
// shifts all gold sentence ids by train.size().
std::pair<ParallelCorpus, GoldAlignment> attach_evaluation_set(
    const ParallelCorpus& train, const ParallelCorpus& eval_corpus,
    const GoldAlignment& gold);

// --- alignment interchange --------------------------------------------------

// NAACL / WPT shared task format: "sentID srcPos tgtPos [S|P]"; a missing
// label means S. With one_based set, all three indices are shifted down.
GoldAlignment read_gold_naacl(std::istream& in, bool one_based);

// Pharaoh "i-j" format, 0-based, one line per sentence.
AlignmentSet read_pharaoh(std::istream& in);
void write_pharaoh(const AlignmentSet& alignment, std::size_t n_sentences,
                   std::ostream& out);

}  // namespace subalign

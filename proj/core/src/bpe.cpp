#include "subalign/bpe.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <queue>
#include <sstream>
#include <unordered_map>

#include "subalign/errors.hpp"

namespace subalign {

namespace {

// Splits a word into UTF-8 code points. Invalid bytes pass through as
// single-byte symbols.
std::vector<std::string> utf8_chars(const std::string& word) {
  std::vector<std::string> chars;
  std::size_t i = 0;
  while (i < word.size()) {
    const auto lead = static_cast<unsigned char>(word[i]);
    std::size_t len = 1;
    if ((lead & 0xe0) == 0xc0) len = 2;
    else if ((lead & 0xf0) == 0xe0) len = 3;
    else if ((lead & 0xf8) == 0xf0) len = 4;
    if (i + len > word.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(word[i + k]) & 0xc0) != 0x80) {
        len = k;
        break;
      }
    }
    chars.push_back(word.substr(i, len));
    i += len;
  }
  return chars;
}

using SymbolId = std::uint32_t;

std::uint64_t pair_key(SymbolId l, SymbolId r) {
  return (static_cast<std::uint64_t>(l) << 32) | r;
}

struct WordType {
  std::vector<SymbolId> symbols;
  std::int64_t freq = 0;
  std::vector<std::uint32_t> sentences;  // distinct ids containing this word
};

// Candidate heap entry; stale entries are skipped when their recorded
// count no longer matches the live count.
struct HeapEntry {
  std::int64_t count;
  std::string left;
  std::string right;
  std::uint64_t key;
};

struct HeapLess {
  bool operator()(const HeapEntry& a, const HeapEntry& b) const {
    if (a.count != b.count) return a.count < b.count;
    if (a.left != b.left) return a.left > b.left;
    return a.right > b.right;
  }
};

class BpeLearner {
 public:
  explicit BpeLearner(const std::vector<std::vector<std::string>>& sentences) {
    std::unordered_map<std::string, std::size_t> word_index;
    for (std::uint32_t s = 0; s < sentences.size(); ++s) {
      for (const auto& token : sentences[s]) {
        auto [it, inserted] = word_index.emplace(token, words_.size());
        if (inserted) {
          WordType w;
          w.symbols = intern_chars(token);
          w.symbols.push_back(end_marker_);
          words_.push_back(std::move(w));
        }
        WordType& w = words_[it->second];
        w.freq += 1;
        if (w.sentences.empty() || w.sentences.back() != s) w.sentences.push_back(s);
      }
    }
    for (std::size_t w = 0; w < words_.size(); ++w) add_word_pairs(w);
    seen_sentence_.assign(sentences.size(), 0);
  }

  MergeTable learn(std::size_t max_merges) {
    std::vector<std::pair<std::string, std::string>> merges;
    std::vector<std::size_t> affected;
    while (merges.size() < max_merges) {
      HeapEntry best;
      if (!pop_best(&best)) break;
      merges.emplace_back(best.left, best.right);
      affected.push_back(apply_merge(best));
    }
    return MergeTable(std::move(merges), std::move(affected));
  }

 private:
  SymbolId intern(const std::string& text) {
    auto [it, inserted] = symbol_ids_.emplace(text, symbols_.size());
    if (inserted) symbols_.push_back(text);
    return static_cast<SymbolId>(it->second);
  }

  std::vector<SymbolId> intern_chars(const std::string& word) {
    std::vector<SymbolId> ids;
    for (const auto& c : utf8_chars(word)) ids.push_back(intern(c));
    return ids;
  }

  void bump_pair(SymbolId l, SymbolId r, std::int64_t delta, std::size_t word) {
    const auto key = pair_key(l, r);
    auto& count = pair_counts_[key];
    count += delta;
    if (delta > 0) pair_words_[key].push_back(static_cast<std::uint32_t>(word));
    heap_.push(HeapEntry{count, symbols_[l], symbols_[r], key});
  }

  void add_word_pairs(std::size_t w) {
    const auto& syms = words_[w].symbols;
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      bump_pair(syms[i], syms[i + 1], words_[w].freq, w);
    }
  }

  void remove_word_pairs(std::size_t w) {
    const auto& syms = words_[w].symbols;
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      const auto key = pair_key(syms[i], syms[i + 1]);
      auto& count = pair_counts_[key];
      count -= words_[w].freq;
      heap_.push(HeapEntry{count, symbols_[syms[i]], symbols_[syms[i + 1]], key});
    }
  }

  bool pop_best(HeapEntry* out) {
    while (!heap_.empty()) {
      HeapEntry top = heap_.top();
      heap_.pop();
      auto it = pair_counts_.find(top.key);
      if (it == pair_counts_.end() || it->second != top.count) continue;  // stale
      if (top.count < 2) return false;  // pairs below the frequency floor stay unmerged
      *out = std::move(top);
      return true;
    }
    return false;
  }

  // Rewrites every word containing the pair and returns the number of
  // distinct training sentences touched.
  std::size_t apply_merge(const HeapEntry& best) {
    const SymbolId left = symbol_ids_.at(best.left);
    const SymbolId right = symbol_ids_.at(best.right);
    const SymbolId merged = intern(best.left + best.right);

    auto members = std::move(pair_words_[best.key]);
    pair_words_.erase(best.key);
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());

    ++generation_;
    std::size_t affected = 0;
    for (const auto w : members) {
      auto& word = words_[w];
      bool has_pair = false;
      for (std::size_t i = 0; i + 1 < word.symbols.size(); ++i) {
        if (word.symbols[i] == left && word.symbols[i + 1] == right) {
          has_pair = true;
          break;
        }
      }
      if (!has_pair) continue;  // membership list is append-only, entries can lapse

      for (const auto s : word.sentences) {
        if (seen_sentence_[s] != generation_) {
          seen_sentence_[s] = generation_;
          ++affected;
        }
      }

      remove_word_pairs(w);
      std::vector<SymbolId> rewritten;
      rewritten.reserve(word.symbols.size());
      for (std::size_t i = 0; i < word.symbols.size();) {
        if (i + 1 < word.symbols.size() && word.symbols[i] == left &&
            word.symbols[i + 1] == right) {
          rewritten.push_back(merged);
          i += 2;
        } else {
          rewritten.push_back(word.symbols[i]);
          ++i;
        }
      }
      word.symbols = std::move(rewritten);
      add_word_pairs(w);
    }
    pair_counts_.erase(best.key);
    return affected;
  }

  std::vector<std::string> symbols_;
  std::unordered_map<std::string, std::size_t> symbol_ids_;
  std::vector<WordType> words_;
  std::unordered_map<std::uint64_t, std::int64_t> pair_counts_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> pair_words_;
  std::priority_queue<HeapEntry, std::vector<HeapEntry>, HeapLess> heap_;
  std::vector<std::uint32_t> seen_sentence_;
  std::uint32_t generation_ = 0;
  SymbolId end_marker_ = intern(std::string(kWordEndMarker));
};

// Rank lookup for applying merges: "left\x01right" -> merge index.
class MergeRanks {
 public:
  explicit MergeRanks(const MergeTable& table) {
    const auto& merges = table.merges();
    ranks_.reserve(merges.size());
    for (std::size_t i = 0; i < merges.size(); ++i) {
      ranks_.emplace(merges[i].first + '\x01' + merges[i].second, i);
    }
  }

  // Lowest-rank adjacent pair below limit, or npos.
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t best_rank(const std::vector<std::string>& syms, std::size_t limit,
                        std::size_t* position) const {
    std::size_t best = npos;
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      auto it = ranks_.find(syms[i] + '\x01' + syms[i + 1]);
      if (it != ranks_.end() && it->second < limit && it->second < best) {
        best = it->second;
        *position = i;
      }
    }
    return best;
  }

 private:
  std::unordered_map<std::string, std::size_t> ranks_;
};

// Applies merges below `limit` to one word by repeatedly merging the
// lowest-ranked pair; equivalent to replaying merges in learned order.
std::vector<std::string> apply_merges(const std::string& word, const MergeRanks& ranks,
                                      std::size_t limit) {
  std::vector<std::string> syms = utf8_chars(word);
  syms.push_back(std::string(kWordEndMarker));
  while (syms.size() > 1) {
    std::size_t pos = 0;
    const std::size_t rank = ranks.best_rank(syms, limit, &pos);
    if (rank == MergeRanks::npos) break;
    const std::string left = syms[pos];
    const std::string right = syms[pos + 1];
    std::vector<std::string> rewritten;
    rewritten.reserve(syms.size());
    for (std::size_t i = 0; i < syms.size();) {
      if (i + 1 < syms.size() && syms[i] == left && syms[i + 1] == right) {
        rewritten.push_back(left + right);
        i += 2;
      } else {
        rewritten.push_back(std::move(syms[i]));
        ++i;
      }
    }
    syms = std::move(rewritten);
  }
  return syms;
}

// Drops the word-end marker and attaches continuation markers.
std::vector<std::string> finish_subwords(std::vector<std::string> syms) {
  if (!syms.empty() && syms.back() == kWordEndMarker) {
    syms.pop_back();
  } else if (!syms.empty() && syms.back().size() >= kWordEndMarker.size() &&
             syms.back().ends_with(kWordEndMarker)) {
    syms.back().resize(syms.back().size() - kWordEndMarker.size());
  }
  for (std::size_t i = 0; i + 1 < syms.size(); ++i) syms[i] += kContinuationMarker;
  return syms;
}

}  // namespace

std::string to_string(Granularity g) {
  return g.is_word_level() ? "WORD" : std::to_string(g.value);
}

std::string to_string(const SegmentationScheme& s) {
  return "(" + to_string(s.source) + "," + to_string(s.target) + ")";
}

Granularity granularity_from_string(const std::string& text) {
  if (text == "WORD") return Granularity::word();
  std::size_t pos = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != text.size() || text.empty() || v >= Granularity::kWordLevel) {
    throw ParseError("bad granularity '" + text + "': expected WORD or a merge count");
  }
  return Granularity::merges(static_cast<std::uint32_t>(v));
}

Bitext SegmentedCorpus::tokens() const {
  Bitext b;
  b.source.reserve(source.size());
  b.target.reserve(target.size());
  for (const auto& s : source) b.source.push_back(s.tokens);
  for (const auto& t : target) b.target.push_back(t.tokens);
  return b;
}

MergeTable learn_bpe(const std::vector<std::vector<std::string>>& sentences,
                     std::size_t max_merges) {
  if (sentences.empty()) throw std::invalid_argument("learn_bpe: empty corpus side");
  BpeLearner learner(sentences);
  return learner.learn(max_merges);
}

SegmentedSentence segment(const std::vector<std::string>& words, const MergeTable& table,
                          Granularity granularity) {
  SegmentedSentence out;
  if (granularity.is_word_level()) {
    out.tokens = words;
    out.word_of_token.resize(words.size());
    for (std::uint32_t w = 0; w < words.size(); ++w) out.word_of_token[w] = w;
    return out;
  }
  if (granularity.value > table.max_merges()) {
    throw std::invalid_argument("segment: merge count " + std::to_string(granularity.value) +
                                " exceeds table size " + std::to_string(table.max_merges()));
  }
  const MergeRanks ranks(table);
  for (std::uint32_t w = 0; w < words.size(); ++w) {
    auto subwords = finish_subwords(apply_merges(words[w], ranks, granularity.value));
    for (auto& sub : subwords) {
      out.tokens.push_back(std::move(sub));
      out.word_of_token.push_back(w);
    }
  }
  return out;
}

SegmentedCorpus segment_corpus(const ParallelCorpus& corpus, const SegmentationScheme& scheme,
                               const MergeTable& source_table, const MergeTable& target_table) {
  struct SideSegmenter {
    const MergeTable& table;
    Granularity granularity;
    MergeRanks ranks;
    std::unordered_map<std::string, std::vector<std::string>> cache;

    SideSegmenter(const MergeTable& t, Granularity g) : table(t), granularity(g), ranks(t) {
      if (!g.is_word_level() && g.value > t.max_merges()) {
        throw std::invalid_argument("segment_corpus: merge count " + std::to_string(g.value) +
                                    " exceeds table size " + std::to_string(t.max_merges()));
      }
    }

    SegmentedSentence run(const std::vector<std::string>& words) {
      if (granularity.is_word_level()) return segment(words, table, granularity);
      SegmentedSentence out;
      for (std::uint32_t w = 0; w < words.size(); ++w) {
        auto it = cache.find(words[w]);
        if (it == cache.end()) {
          it = cache.emplace(words[w],
                             finish_subwords(apply_merges(words[w], ranks, granularity.value)))
                   .first;
        }
        for (const auto& sub : it->second) {
          out.tokens.push_back(sub);
          out.word_of_token.push_back(w);
        }
      }
      return out;
    }
  };

  SideSegmenter src(source_table, scheme.source);
  SideSegmenter tgt(target_table, scheme.target);
  SegmentedCorpus out;
  out.source.reserve(corpus.size());
  out.target.reserve(corpus.size());
  for (const auto& pair : corpus) {
    out.source.push_back(src.run(pair.source));
    out.target.push_back(tgt.run(pair.target));
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> affected_curve(const MergeTable& table) {
  std::vector<std::pair<std::size_t, std::size_t>> curve;
  curve.reserve(table.affected().size());
  for (std::size_t k = 0; k < table.affected().size(); ++k) {
    curve.emplace_back(k + 1, table.affected()[k]);
  }
  return curve;
}

std::vector<std::string> reconstruct_words(const SegmentedSentence& sentence) {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
    const std::uint32_t w = sentence.word_of_token[i];
    if (w >= words.size()) words.resize(w + 1);
    std::string piece = sentence.tokens[i];
    const bool last_of_word =
        i + 1 == sentence.tokens.size() || sentence.word_of_token[i + 1] != w;
    if (!last_of_word && piece.ends_with(kContinuationMarker)) {
      piece.resize(piece.size() - kContinuationMarker.size());
    }
    words[w] += piece;
  }
  return words;
}

void write_merge_table(const MergeTable& table, std::ostream& out) {
  out << table.max_merges() << '\n';
  for (const auto& [left, right] : table.merges()) {
    out << left << ' ' << right << '\n';
  }
}

MergeTable read_merge_table(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw ParseError("merge table: missing header line");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  std::size_t count = 0;
  std::size_t pos = 0;
  try {
    count = std::stoul(header, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != header.size() || header.empty()) {
    throw ParseError("merge table: bad header '" + header + "'");
  }
  std::vector<std::pair<std::string, std::string>> merges;
  merges.reserve(count);
  std::string line;
  std::size_t lineno = 1;
  while (merges.size() < count && std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto space = line.find(' ');
    if (space == std::string::npos || space == 0 || space + 1 >= line.size() ||
        line.find(' ', space + 1) != std::string::npos) {
      throw ParseError("merge table line " + std::to_string(lineno) + ": bad pair '" +
                       line + "'");
    }
    merges.emplace_back(line.substr(0, space), line.substr(space + 1));
  }
  if (merges.size() != count) {
    throw ParseError("merge table: header promises " + std::to_string(count) +
                     " merges but file has " + std::to_string(merges.size()));
  }
  return MergeTable(std::move(merges), {});
}

void write_affected_csv(const MergeTable& table, std::ostream& out) {
  out << "merge_step,affected_sentences\n";
  for (const auto& [k, n] : affected_curve(table)) {
    out << k << ',' << n << '\n';
  }
}

}  // namespace subalign

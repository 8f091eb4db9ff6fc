#include "subalign/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "subalign/errors.hpp"
#include "subalign/random.hpp"

namespace subalign {

namespace {

std::vector<std::string> split_tokens(const std::string& line) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) tokens.emplace_back(line.substr(start, i - start));
  }
  return tokens;
}

std::vector<std::string> read_lines(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

ParallelCorpus::ParallelCorpus(std::vector<SentencePair> pairs) : pairs_(std::move(pairs)) {
  for (std::size_t i = 0; i < pairs_.size(); ++i) pairs_[i].id = i;
}

AlignmentSet::AlignmentSet(std::vector<Link> links) : links_(std::move(links)) {
  std::sort(links_.begin(), links_.end());
  links_.erase(std::unique(links_.begin(), links_.end()), links_.end());
}

bool AlignmentSet::contains(const Link& l) const {
  return std::binary_search(links_.begin(), links_.end(), l);
}

std::pair<std::size_t, std::size_t> AlignmentSet::sentence_range(std::uint32_t sentence) const {
  const Link lo{sentence, 0, 0};
  const Link hi{sentence + 1, 0, 0};
  auto first = std::lower_bound(links_.begin(), links_.end(), lo);
  auto last = std::lower_bound(first, links_.end(), hi);
  return {static_cast<std::size_t>(first - links_.begin()),
          static_cast<std::size_t>(last - links_.begin())};
}

AlignmentSet AlignmentSet::intersect(const AlignmentSet& other) const {
  std::vector<Link> out;
  std::set_intersection(links_.begin(), links_.end(), other.links_.begin(),
                        other.links_.end(), std::back_inserter(out));
  return AlignmentSet(std::move(out));
}

AlignmentSet AlignmentSet::unite(const AlignmentSet& other) const {
  std::vector<Link> out;
  std::set_union(links_.begin(), links_.end(), other.links_.begin(),
                 other.links_.end(), std::back_inserter(out));
  return AlignmentSet(std::move(out));
}

Bitext Bitext::from_corpus(const ParallelCorpus& corpus) {
  Bitext b;
  b.source.reserve(corpus.size());
  b.target.reserve(corpus.size());
  for (const auto& p : corpus) {
    b.source.push_back(p.source);
    b.target.push_back(p.target);
  }
  return b;
}

ParallelCorpus load_parallel(std::istream& source_text, std::istream& target_text) {
  const auto src_lines = read_lines(source_text);
  const auto tgt_lines = read_lines(target_text);
  if (src_lines.size() != tgt_lines.size()) {
    throw ParseError("parallel corpus line-count mismatch: source has " +
                     std::to_string(src_lines.size()) + " lines, target has " +
                     std::to_string(tgt_lines.size()));
  }
  std::vector<SentencePair> pairs;
  pairs.reserve(src_lines.size());
  for (std::size_t i = 0; i < src_lines.size(); ++i) {
    SentencePair p;
    p.source = split_tokens(src_lines[i]);
    p.target = split_tokens(tgt_lines[i]);
    if (p.source.empty()) {
      throw ParseError("empty source line " + std::to_string(i + 1));
    }
    if (p.target.empty()) {
      throw ParseError("empty target line " + std::to_string(i + 1));
    }
    pairs.push_back(std::move(p));
  }
  return ParallelCorpus(std::move(pairs));
}

ParallelCorpus load_parallel_files(const std::string& source_path,
                                   const std::string& target_path) {
  std::ifstream src(source_path);
  if (!src) throw ParseError("cannot open " + source_path);
  std::ifstream tgt(target_path);
  if (!tgt) throw ParseError("cannot open " + target_path);
  return load_parallel(src, tgt);
}

ParallelCorpus subsample(const ParallelCorpus& corpus, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("subsample: n must be >= 1");
  const std::size_t total = corpus.size();
  if (n >= total) return corpus;

  // Selection sampling (Knuth's Algorithm S): order-preserving and exact.
  std::mt19937_64 rng(seed);
  std::vector<SentencePair> picked;
  picked.reserve(n);
  std::size_t need = n;
  for (std::size_t i = 0; i < total && need > 0; ++i) {
    if (uniform_below(rng, total - i) < need) {
      picked.push_back(corpus.pair(i));
      --need;
    }
  }
  return ParallelCorpus(std::move(picked));
}

namespace {

AlignmentSet shift_links(const AlignmentSet& links, std::uint32_t offset,
                         std::size_t eval_size) {
  std::vector<Link> shifted;
  shifted.reserve(links.size());
  for (const Link& l : links.links()) {
    if (l.sentence >= eval_size) {
      throw std::invalid_argument("gold references sentence " + std::to_string(l.sentence) +
                                  " outside evaluation corpus of size " +
                                  std::to_string(eval_size));
    }
    shifted.push_back(Link{l.sentence + offset, l.source, l.target});
  }
  return AlignmentSet(std::move(shifted));
}

}  // namespace

std::pair<ParallelCorpus, GoldAlignment> attach_evaluation_set(
    const ParallelCorpus& train, const ParallelCorpus& eval_corpus,
    const GoldAlignment& gold) {
  const auto offset = static_cast<std::uint32_t>(train.size());
  std::vector<SentencePair> pairs;
  pairs.reserve(train.size() + eval_corpus.size());
  for (const auto& p : train) pairs.push_back(p);
  for (const auto& p : eval_corpus) pairs.push_back(p);

  GoldAlignment shifted;
  shifted.possible = shift_links(gold.possible, offset, eval_corpus.size());
  shifted.sure = shift_links(gold.sure, offset, eval_corpus.size());
  for (std::uint32_t s : gold.covered_sentences) {
    if (s >= eval_corpus.size()) {
      throw std::invalid_argument("gold covers sentence " + std::to_string(s) +
                                  " outside evaluation corpus of size " +
                                  std::to_string(eval_corpus.size()));
    }
    shifted.covered_sentences.insert(s + offset);
  }
  return {ParallelCorpus(std::move(pairs)), std::move(shifted)};
}

GoldAlignment read_gold_naacl(std::istream& in, bool one_based) {
  std::vector<Link> sure;
  std::vector<Link> possible;
  std::set<std::uint32_t> covered;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = split_tokens(line);
    if (fields.empty()) continue;  // blank lines are tolerated
    if (fields.size() < 3 || fields.size() > 4) {
      throw ParseError("gold line " + std::to_string(lineno) +
                       ": expected 'sent src tgt [S|P]', got '" + line + "'");
    }
    long vals[3];
    for (int k = 0; k < 3; ++k) {
      std::size_t pos = 0;
      try {
        vals[k] = std::stol(fields[k], &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != fields[k].size() || vals[k] < 0) {
        throw ParseError("gold line " + std::to_string(lineno) + ": bad index '" +
                         fields[k] + "'");
      }
      if (one_based) {
        if (vals[k] == 0) {
          throw ParseError("gold line " + std::to_string(lineno) +
                           ": index 0 in a 1-based file");
        }
        --vals[k];
      }
    }
    bool is_sure = true;
    if (fields.size() == 4) {
      if (fields[3] == "S") {
        is_sure = true;
      } else if (fields[3] == "P") {
        is_sure = false;
      } else {
        throw ParseError("gold line " + std::to_string(lineno) + ": unknown label '" +
                         fields[3] + "'");
      }
    }
    const Link l{static_cast<std::uint32_t>(vals[0]), static_cast<std::uint32_t>(vals[1]),
                 static_cast<std::uint32_t>(vals[2])};
    if (is_sure) sure.push_back(l);
    possible.push_back(l);  // every sure edge is also possible
    covered.insert(l.sentence);
  }

  GoldAlignment gold;
  gold.sure = AlignmentSet(std::move(sure));
  gold.possible = AlignmentSet(std::move(possible));
  gold.covered_sentences = std::move(covered);
  return gold;
}

AlignmentSet read_pharaoh(std::istream& in) {
  std::vector<Link> links;
  std::string line;
  std::uint32_t sentence = 0;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    for (const auto& tok : split_tokens(line)) {
      const auto dash = tok.find('-');
      bool ok = dash != std::string::npos && dash > 0 && dash + 1 < tok.size();
      if (ok) {
        ok = std::all_of(tok.begin(), tok.begin() + dash,
                         [](unsigned char c) { return std::isdigit(c); }) &&
             std::all_of(tok.begin() + dash + 1, tok.end(),
                         [](unsigned char c) { return std::isdigit(c); });
      }
      if (!ok) {
        throw ParseError("pharaoh line " + std::to_string(lineno) + ": bad token '" +
                         tok + "'");
      }
      links.push_back(Link{sentence,
                           static_cast<std::uint32_t>(std::stoul(tok.substr(0, dash))),
                           static_cast<std::uint32_t>(std::stoul(tok.substr(dash + 1)))});
    }
    ++sentence;
  }
  return AlignmentSet(std::move(links));
}

void write_pharaoh(const AlignmentSet& alignment, std::size_t n_sentences,
                   std::ostream& out) {
  const auto& links = alignment.links();
  if (!links.empty() && links.back().sentence >= n_sentences) {
    throw std::invalid_argument("alignment references sentence " +
                                std::to_string(links.back().sentence) +
                                " but only " + std::to_string(n_sentences) +
                                " sentences were declared");
  }
  std::size_t idx = 0;
  for (std::size_t s = 0; s < n_sentences; ++s) {
    bool first = true;
    while (idx < links.size() && links[idx].sentence == s) {
      if (!first) out << ' ';
      out << links[idx].source << '-' << links[idx].target;
      first = false;
      ++idx;
    }
    out << '\n';
  }
}

}  // namespace subalign

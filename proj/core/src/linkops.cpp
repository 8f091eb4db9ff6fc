#include "subalign/linkops.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>

#include "subalign/errors.hpp"

namespace subalign {

SymmetrizationMethod symmetrization_from_string(const std::string& name) {
  if (name == "intersection") return SymmetrizationMethod::kIntersection;
  if (name == "union") return SymmetrizationMethod::kUnion;
  if (name == "gdfa" || name == "grow-diag-final-and") {
    return SymmetrizationMethod::kGrowDiagFinalAnd;
  }
  throw std::invalid_argument("unknown symmetrization method '" + name + "'");
}

std::string to_string(SymmetrizationMethod method) {
  switch (method) {
    case SymmetrizationMethod::kIntersection: return "intersection";
    case SymmetrizationMethod::kUnion: return "union";
    case SymmetrizationMethod::kGrowDiagFinalAnd: return "gdfa";
  }
  return "?";
}

namespace {

struct Point {
  std::uint32_t i;
  std::uint32_t j;
  auto operator<=>(const Point&) const = default;
};

// Moses-convention grow-diag-final-and for one sentence.
void gdfa_sentence(std::uint32_t sentence, std::span<const Link> fwd,
                   std::span<const Link> rev, std::vector<Link>* out) {
  std::set<Point> forward, reverse, both, either;
  for (const auto& l : fwd) forward.insert({l.source, l.target});
  for (const auto& l : rev) reverse.insert({l.source, l.target});
  for (const auto& p : forward) {
    if (reverse.contains(p)) both.insert(p);
    either.insert(p);
  }
  for (const auto& p : reverse) either.insert(p);

  std::set<Point> aligned = both;
  std::set<std::uint32_t> src_aligned, tgt_aligned;
  for (const auto& p : aligned) {
    src_aligned.insert(p.i);
    tgt_aligned.insert(p.j);
  }

  auto neighbors_aligned = [&aligned](const Point& p) {
    for (int di = -1; di <= 1; ++di) {
      for (int dj = -1; dj <= 1; ++dj) {
        if (di == 0 && dj == 0) continue;
        const std::int64_t ni = static_cast<std::int64_t>(p.i) + di;
        const std::int64_t nj = static_cast<std::int64_t>(p.j) + dj;
        if (ni < 0 || nj < 0) continue;
        if (aligned.contains({static_cast<std::uint32_t>(ni), static_cast<std::uint32_t>(nj)})) {
          return true;
        }
      }
    }
    return false;
  };

  // grow-diag: sweep the union candidates until a fixpoint.
  bool added = true;
  while (added) {
    added = false;
    for (const auto& p : either) {
      if (aligned.contains(p)) continue;
      if (!src_aligned.contains(p.i) || !tgt_aligned.contains(p.j)) {
        if (neighbors_aligned(p)) {
          aligned.insert(p);
          src_aligned.insert(p.i);
          tgt_aligned.insert(p.j);
          added = true;
        }
      }
    }
  }

  // final-and over each direction: both endpoints must be unaligned.
  for (const auto* dir : {&forward, &reverse}) {
    for (const auto& p : *dir) {
      if (!src_aligned.contains(p.i) && !tgt_aligned.contains(p.j)) {
        aligned.insert(p);
        src_aligned.insert(p.i);
        tgt_aligned.insert(p.j);
      }
    }
  }

  for (const auto& p : aligned) out->push_back(Link{sentence, p.i, p.j});
}

}  // namespace

AlignmentSet symmetrize(const AlignmentSet& forward, const AlignmentSet& reverse,
                        SymmetrizationMethod method) {
  switch (method) {
    case SymmetrizationMethod::kIntersection:
      return forward.intersect(reverse);
    case SymmetrizationMethod::kUnion:
      return forward.unite(reverse);
    case SymmetrizationMethod::kGrowDiagFinalAnd:
      break;
  }

  std::set<std::uint32_t> sentences;
  for (const auto& l : forward.links()) sentences.insert(l.sentence);
  for (const auto& l : reverse.links()) sentences.insert(l.sentence);

  std::vector<Link> out;
  for (const auto s : sentences) {
    const auto [flo, fhi] = forward.sentence_range(s);
    const auto [rlo, rhi] = reverse.sentence_range(s);
    gdfa_sentence(s, std::span(forward.links()).subspan(flo, fhi - flo),
                  std::span(reverse.links()).subspan(rlo, rhi - rlo), &out);
  }
  return AlignmentSet(std::move(out));
}

AlignmentSet project_to_words(const AlignmentSet& subword_alignment,
                              const SegmentedCorpus& segmented) {
  std::vector<Link> out;
  out.reserve(subword_alignment.size());
  for (const auto& l : subword_alignment.links()) {
    if (l.sentence >= segmented.size()) {
      throw IntegrityError("projection: link sentence " + std::to_string(l.sentence) +
                           " outside corpus of " + std::to_string(segmented.size()) +
                           " sentences");
    }
    const auto& src_map = segmented.source[l.sentence].word_of_token;
    const auto& tgt_map = segmented.target[l.sentence].word_of_token;
    if (l.source >= src_map.size() || l.target >= tgt_map.size()) {
      throw IntegrityError("projection: subword link (" + std::to_string(l.sentence) + "," +
                           std::to_string(l.source) + "," + std::to_string(l.target) +
                           ") does not fit the word maps; alignment and scheme disagree");
    }
    out.push_back(Link{l.sentence, src_map[l.source], tgt_map[l.target]});
  }
  return AlignmentSet(std::move(out));
}

VoteTally tally_votes(std::span<const SchemeAlignment> scheme_alignments) {
  std::map<Link, std::uint32_t> counts;
  for (const auto& sa : scheme_alignments) {
    for (const auto& l : sa.word_links.links()) ++counts[l];  // one vote per scheme
  }
  VoteTally tally;
  tally.total_schemes = static_cast<std::uint32_t>(scheme_alignments.size());
  tally.counts.assign(counts.begin(), counts.end());
  return tally;
}

AlignmentSet aggregate(const VoteTally& tally, double lambda) {
  if (tally.total_schemes == 0) {
    throw std::invalid_argument("aggregate: no segmentation schemes");
  }
  std::vector<Link> kept;
  const double threshold = lambda * static_cast<double>(tally.total_schemes);
  for (const auto& [link, count] : tally.counts) {
    if (static_cast<double>(count) >= threshold) kept.push_back(link);
  }
  return AlignmentSet(std::move(kept));
}

AlignmentSet aggregate(std::span<const SchemeAlignment> scheme_alignments, double lambda) {
  if (scheme_alignments.empty()) {
    throw std::invalid_argument("aggregate: no segmentation schemes");
  }
  return aggregate(tally_votes(scheme_alignments), lambda);
}

void write_tally_csv(const VoteTally& tally, std::ostream& out) {
  out << "sentence,source,target,count,total_schemes\n";
  for (const auto& [link, count] : tally.counts) {
    out << link.sentence << ',' << link.source << ',' << link.target << ',' << count << ','
        << tally.total_schemes << '\n';
  }
}

}  // namespace subalign

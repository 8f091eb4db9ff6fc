#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>

#include "subalign/corpus.hpp"

namespace subalign {

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t predicted = 0;           // |A| after restriction to gold coverage
  std::size_t predicted_in_possible = 0;  // |A ∩ P|
  std::size_t predicted_in_sure = 0;      // |A ∩ S|
  std::size_t sure = 0;                   // |S|
};

// Scores predictions against gold: precision over possible edges, recall
// over sure edges. Links on sentences outside gold coverage are ignored.
// Empty predictions score precision 0; an empty sure set is rejected.
Metrics score(const AlignmentSet& predicted, const GoldAlignment& gold);

std::string metrics_to_json(const Metrics& m, std::uint64_t seed);
void write_metrics_csv(const Metrics& m, std::uint64_t seed, std::ostream& out);

}  // namespace subalign

#include "subalign/metrics.hpp"

#include <ostream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace subalign {

Metrics score(const AlignmentSet& predicted, const GoldAlignment& gold) {
  if (gold.sure.empty()) {
    throw std::invalid_argument("score: gold standard has no sure edges");
  }

  std::vector<Link> covered;
  covered.reserve(predicted.size());
  for (const auto& l : predicted.links()) {
    if (gold.covered_sentences.contains(l.sentence)) covered.push_back(l);
  }

  Metrics m;
  m.predicted = covered.size();
  m.sure = gold.sure.size();
  for (const auto& l : covered) {
    if (gold.possible.contains(l)) ++m.predicted_in_possible;
    if (gold.sure.contains(l)) ++m.predicted_in_sure;
  }
  m.precision = m.predicted == 0
                    ? 0.0
                    : static_cast<double>(m.predicted_in_possible) /
                          static_cast<double>(m.predicted);
  m.recall = static_cast<double>(m.predicted_in_sure) / static_cast<double>(m.sure);
  m.f1 = m.precision + m.recall > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

std::string metrics_to_json(const Metrics& m, std::uint64_t seed) {
  nlohmann::json j;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f1"] = m.f1;
  j["predicted"] = m.predicted;
  j["predicted_in_possible"] = m.predicted_in_possible;
  j["predicted_in_sure"] = m.predicted_in_sure;
  j["sure"] = m.sure;
  j["seed"] = seed;
  return j.dump(2) + "\n";
}

void write_metrics_csv(const Metrics& m, std::uint64_t seed, std::ostream& out) {
  out << "# seed=" << seed << '\n'
      << "precision,recall,f1,predicted,predicted_in_possible,predicted_in_sure,sure\n"
      << m.precision << ',' << m.recall << ',' << m.f1 << ',' << m.predicted << ','
      << m.predicted_in_possible << ',' << m.predicted_in_sure << ',' << m.sure << '\n';
}

}  // namespace subalign

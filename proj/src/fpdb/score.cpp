#include <algorithm>

#include "stacksense/fpdb.hpp"

namespace stacksense::fpdb {

ScoreResult classic_score(const ProbeResponse& response, const FingerprintRule& rule) {
  ScoreResult r;
  for (const auto& [id, spec] : rule.tests) {
    if (!response.has_test(id)) continue;
    for (const auto& field : spec.fields) {
      const auto& name = field.first;
      const ValueSpec expected = rule.field(id, name);
      if (expected.absent()) continue;
      const auto got = response.value(id, name);
      if (!got) continue;
      ++r.considered;
      if (expected.matches(*got)) ++r.matched;
    }
  }
  if (r.considered) r.score = static_cast<double>(r.matched) / static_cast<double>(r.considered);
  return r;
}

std::vector<RankedRule> classic_match(const ProbeResponse& response, const std::vector<FingerprintRule>& db) {
  std::vector<RankedRule> out;
  out.reserve(db.size());
  for (std::size_t i = 0; i < db.size(); ++i) out.push_back({i, classic_score(response, db[i])});
  std::stable_sort(out.begin(), out.end(),
                   [](const RankedRule& a, const RankedRule& b) { return a.score.score > b.score.score; });
  return out;
}

}  // namespace stacksense::fpdb

#include <algorithm>
#include <future>
#include <thread>

#include "stacksense/datagen.hpp"
#include "stacksense/error.hpp"
#include "stacksense/rng.hpp"
#include "text.hpp"

namespace stacksense::datagen {

namespace {

std::string sample_value(const fpdb::ValueSpec& spec, Rng& rng) {
  const auto& alts = spec.alternatives();
  const auto& pick = alts.size() == 1 ? alts.front() : alts[rng.uniform_int(0, alts.size() - 1)];
  if (const auto* lit = std::get_if<std::string>(&pick)) return *lit;
  const auto& r = std::get<fpdb::HexRange>(pick);
  return text::to_hex(rng.uniform_int(r.lo, r.hi));
}

std::size_t draw_rule(const std::vector<double>& cumulative, double u) {
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  std::size_t i = it == cumulative.end() ? cumulative.size() - 1 : static_cast<std::size_t>(it - cumulative.begin());
  // Guard against rounding in the last bucket landing on a zero-weight rule.
  while (i > 0 && cumulative[i] == cumulative[i - 1]) --i;
  return i;
}

}  // namespace

fpdb::ProbeResponse sample_response(const fpdb::FingerprintRule& rule, std::uint64_t seed) {
  Rng rng(seed);
  fpdb::ProbeResponse out;
  for (const auto& [test, spec] : rule.tests) {
    auto& values = out.tests[test];
    for (const auto& field : spec.fields) {
      const auto& name = field.first;
      const fpdb::ValueSpec effective = rule.field(test, name);
      if (effective.absent()) continue;
      values.fields.emplace_back(name, sample_value(effective, rng));
    }
  }
  return out;
}

LabeledDataset generate_dataset(const std::vector<fpdb::FingerprintRule>& db, const EmpiricalDistribution& dist,
                                const hierarchy::LabelConfig& labels, const encoder::EncodingSchema& schema,
                                const GenerateOptions& options) {
  if (options.n == 0) throw InvalidArgument("dataset size must be at least 1");
  if (db.empty()) throw InvalidArgument("cannot generate from an empty database");
  const auto weights = rule_weights(dist, db);
  std::vector<double> cumulative(weights.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) cumulative[i] = acc += weights[i];

  std::vector<hierarchy::PatternLabels> rule_labels;
  for (const auto& r : db) rule_labels.push_back(label_rule(labels, r));

  LabeledDataset out;
  out.schema_id = schema.id();
  out.seed = options.seed;
  out.inputs = Matrix(options.n, schema.dim());
  out.patterns.resize(options.n);
  out.responses.resize(options.n);
  out.rule_index.resize(options.n);

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng pick(derive_seed(options.seed, i, 0));
      const std::size_t r = draw_rule(cumulative, pick.uniform());
      out.rule_index[i] = r;
      out.responses[i] = sample_response(db[r], derive_seed(options.seed, i, 1));
      const Vector x = encoder::encode(out.responses[i], schema);
      std::copy(x.begin(), x.end(), out.inputs.row(i).begin());
      out.patterns[i] = {db[r].name, rule_labels[r]};
    }
  };

  std::size_t threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, (options.n + 255) / 256);
  if (threads <= 1) {
    work(0, options.n);
    return out;
  }
  std::vector<std::future<void>> jobs;
  const std::size_t chunk = (options.n + threads - 1) / threads;
  for (std::size_t b = 0; b < options.n; b += chunk)
    jobs.push_back(std::async(std::launch::async, work, b, std::min(options.n, b + chunk)));
  for (auto& j : jobs) j.get();
  return out;
}

}  // namespace stacksense::datagen

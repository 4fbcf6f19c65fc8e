#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stacksense/encoder.hpp"
#include "stacksense/fpdb.hpp"
#include "stacksense/labels.hpp"
#include "stacksense/matrix.hpp"

namespace stacksense::datagen {

struct Matcher {
  enum class Field { name, vendor, family, version, type };
  Field field = Field::name;
  std::string value;  // name: case-insensitive substring; others: case-insensitive equality

  bool matches(const fpdb::FingerprintRule& rule) const;
  bool operator==(const Matcher&) const = default;
};

struct DistributionEntry {
  double weight = 0.0;
  Matcher matcher;
  bool operator==(const DistributionEntry&) const = default;
};

// Weights are percentages in spirit: "default remainder" spreads
// max(0, 100 - sum of entry weights) over the rules no entry matches;
// "default <w>" spreads w instead. Without a default line those rules get 0.
struct EmpiricalDistribution {
  std::vector<DistributionEntry> entries;
  bool default_remainder = false;
  std::optional<double> default_weight;

  void validate() const;
  bool operator==(const EmpiricalDistribution&) const = default;
};

EmpiricalDistribution parse_distribution(std::string_view text);
std::string print_distribution(const EmpiricalDistribution& dist);
const EmpiricalDistribution& reference_distribution();

// Per-rule probabilities summing to 1. A rule takes the first entry it
// matches; an entry's weight is shared equally by the rules it took.
// Throws InvalidArgument when nothing gets positive weight.
std::vector<double> rule_weights(const EmpiricalDistribution& dist, const std::vector<fpdb::FingerprintRule>& db);

// Constants copied, alternatives picked uniformly, ranges drawn uniformly
// (inclusive) and written in upper-case hex, absent fields omitted.
fpdb::ProbeResponse sample_response(const fpdb::FingerprintRule& rule, std::uint64_t seed);

struct Pattern {
  std::string rule;
  hierarchy::PatternLabels labels;
  bool operator==(const Pattern&) const = default;
};

struct LabeledDataset {
  std::string schema_id;
  std::uint64_t seed = 0;
  Matrix inputs;                  // N x schema dim
  std::vector<Pattern> patterns;  // parallel to rows
  // Only filled by generate_dataset; not stored in dataset files.
  std::vector<fpdb::ProbeResponse> responses;
  std::vector<std::size_t> rule_index;

  std::size_t size() const noexcept { return patterns.size(); }
  bool operator==(const LabeledDataset&) const = default;
};

struct GenerateOptions {
  std::size_t n = 5000;
  std::uint64_t seed = 1;
  std::size_t threads = 0;  // 0: hardware concurrency
};

// Pattern i draws its rule from derive_seed(seed, i, 0) and its response
// from derive_seed(seed, i, 1), so results do not depend on threading.
LabeledDataset generate_dataset(const std::vector<fpdb::FingerprintRule>& db, const EmpiricalDistribution& dist,
                                const hierarchy::LabelConfig& labels, const encoder::EncodingSchema& schema,
                                const GenerateOptions& options);

std::string write_dataset(const LabeledDataset& data);
LabeledDataset read_dataset(std::string_view text);

}  // namespace stacksense::datagen

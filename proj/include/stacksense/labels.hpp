#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stacksense/fpdb.hpp"

namespace stacksense::hierarchy {

struct VersionMapping {
  std::string family;
  std::string class_version;  // as written on the Class line
  std::string group;
  bool operator==(const VersionMapping&) const = default;
};

// Which families count as relevant (and their output order), which of them
// get a version net, and how Class version strings collapse into groups.
struct LabelConfig {
  std::vector<std::string> families;
  std::vector<std::string> version_families;
  std::vector<VersionMapping> mappings;

  // Index into `families` (case-insensitive), or nullopt when irrelevant.
  std::optional<std::size_t> family_index(std::string_view family) const;
  bool has_version_net(std::string_view family) const;
  // Mapped group, or the class version verbatim when no mapping applies.
  std::string version_group(const fpdb::OsClass& c) const;

  void validate() const;
  bool operator==(const LabelConfig&) const = default;
};

LabelConfig parse_labels(std::string_view text);
std::string print_labels(const LabelConfig& config);
const LabelConfig& reference_labels();

struct PatternLabels {
  bool relevant = false;
  std::string family;   // canonical spelling when relevant, Class family otherwise
  std::string version;  // version group
  bool operator==(const PatternLabels&) const = default;
};

PatternLabels label_rule(const LabelConfig& config, const fpdb::FingerprintRule& rule);

}  // namespace stacksense::hierarchy

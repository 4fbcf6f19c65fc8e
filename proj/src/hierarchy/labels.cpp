#include <set>

#include "embedded.hpp"
#include "stacksense/error.hpp"
#include "stacksense/labels.hpp"
#include "text.hpp"

namespace stacksense::hierarchy {

namespace {
constexpr std::string_view kLabelsMagic = "stacksense-labels";
}

std::optional<std::size_t> LabelConfig::family_index(std::string_view family) const {
  for (std::size_t i = 0; i < families.size(); ++i)
    if (text::iequals(families[i], family)) return i;
  return std::nullopt;
}

bool LabelConfig::has_version_net(std::string_view family) const {
  for (const auto& f : version_families)
    if (text::iequals(f, family)) return true;
  return false;
}

std::string LabelConfig::version_group(const fpdb::OsClass& c) const {
  for (const auto& m : mappings)
    if (text::iequals(m.family, c.family) && m.class_version == c.version) return m.group;
  return c.version;
}

void LabelConfig::validate() const {
  if (families.empty()) throw InvalidArgument("label config lists no relevant families");
  std::set<std::string> seen;
  for (const auto& f : families) {
    if (f.empty()) throw InvalidArgument("empty family name");
    if (!seen.insert(text::to_lower(f)).second) throw InvalidArgument("family '" + f + "' listed twice");
  }
  for (const auto& f : version_families)
    if (!family_index(f)) throw InvalidArgument("version net for '" + f + "', which is not a relevant family");
  std::set<std::pair<std::string, std::string>> keys;
  for (const auto& m : mappings) {
    if (m.group.empty()) throw InvalidArgument("empty version group");
    if (!keys.emplace(text::to_lower(m.family), m.class_version).second)
      throw InvalidArgument("version '" + m.class_version + "' of " + m.family + " mapped twice");
  }
}

LabelConfig parse_labels(std::string_view text) {
  const auto all = text::lines(text);
  std::size_t i = 0;
  while (i < all.size() && text::trim(all[i]).empty()) ++i;
  if (i == all.size()) throw ParseError("label file is empty");
  const auto header = text::split_ws(all[i]);
  if (header.size() != 2 || header[0] != kLabelsMagic || header[1] != "1")
    throw ParseError("label file: expected 'stacksense-labels 1'");
  LabelConfig c;
  for (++i; i < all.size(); ++i) {
    const auto line = text::trim(all[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto where = "label file line " + std::to_string(i + 1) + ": ";
    const auto words = text::split_ws(line);
    if (words[0] == "relevant") {
      for (std::size_t w = 1; w < words.size(); ++w) c.families.emplace_back(words[w]);
    } else if (words[0] == "version-nets") {
      for (std::size_t w = 1; w < words.size(); ++w) c.version_families.emplace_back(words[w]);
    } else if (words[0] == "map") {
      const auto parts = text::split(text::trim(line.substr(3)), '|');
      if (parts.size() != 3) throw ParseError(where + "expected 'map <family> | <class version> | <group>'");
      c.mappings.push_back({std::string(text::trim(parts[0])), std::string(text::trim(parts[1])),
                            std::string(text::trim(parts[2]))});
    } else {
      throw ParseError(where + "unknown directive '" + std::string(words[0]) + "'");
    }
  }
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("label file: ") + e.what());
  }
  return c;
}

std::string print_labels(const LabelConfig& config) {
  std::string out = std::string(kLabelsMagic) + " 1\nrelevant";
  for (const auto& f : config.families) out += " " + f;
  out += "\nversion-nets";
  for (const auto& f : config.version_families) out += " " + f;
  out += "\n";
  for (const auto& m : config.mappings) out += "map " + m.family + " | " + m.class_version + " | " + m.group + "\n";
  return out;
}

const LabelConfig& reference_labels() {
  static const LabelConfig config = parse_labels(embedded::kReferenceLabels);
  return config;
}

PatternLabels label_rule(const LabelConfig& config, const fpdb::FingerprintRule& rule) {
  const auto& c = rule.os_class();
  PatternLabels out;
  out.version = config.version_group(c);
  if (const auto idx = config.family_index(c.family)) {
    out.relevant = true;
    out.family = config.families[*idx];
  } else {
    out.family = c.family;
  }
  return out;
}

}  // namespace stacksense::hierarchy

#include <cmath>

#include "embedded.hpp"
#include "stacksense/datagen.hpp"
#include "stacksense/error.hpp"
#include "text.hpp"

namespace stacksense::datagen {

namespace {

constexpr std::string_view kDistributionMagic = "stacksense-distribution";

constexpr std::pair<Matcher::Field, std::string_view> kFieldNames[] = {
    {Matcher::Field::name, "name"},       {Matcher::Field::vendor, "vendor"}, {Matcher::Field::family, "family"},
    {Matcher::Field::version, "version"}, {Matcher::Field::type, "type"},
};

std::string_view field_name(Matcher::Field f) {
  for (const auto& [field, name] : kFieldNames)
    if (field == f) return name;
  return "?";
}

bool contains_ci(std::string_view hay, std::string_view needle) {
  const std::string h = text::to_lower(hay);
  return h.find(text::to_lower(needle)) != std::string::npos;
}

}  // namespace

bool Matcher::matches(const fpdb::FingerprintRule& rule) const {
  const auto& c = rule.os_class();
  switch (field) {
    case Field::name: return contains_ci(rule.name, value);
    case Field::vendor: return text::iequals(c.vendor, value);
    case Field::family: return text::iequals(c.family, value);
    case Field::version: return text::iequals(c.version, value);
    case Field::type: return text::iequals(c.device_type, value);
  }
  return false;
}

void EmpiricalDistribution::validate() const {
  if (entries.empty()) throw InvalidArgument("distribution has no entries");
  for (const auto& e : entries) {
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) throw InvalidArgument("distribution weights must be >= 0");
    if (e.matcher.value.empty()) throw InvalidArgument("distribution matcher with an empty value");
  }
  if (default_weight && (!(*default_weight >= 0.0) || !std::isfinite(*default_weight)))
    throw InvalidArgument("default weight must be >= 0");
  if (default_weight && default_remainder) throw InvalidArgument("two default lines");
}

EmpiricalDistribution parse_distribution(std::string_view text) {
  const auto all = text::lines(text);
  std::size_t i = 0;
  while (i < all.size() && text::trim(all[i]).empty()) ++i;
  if (i == all.size()) throw ParseError("distribution file is empty");
  const auto header = text::split_ws(all[i]);
  if (header.size() != 2 || header[0] != kDistributionMagic || header[1] != "1")
    throw ParseError("distribution: expected 'stacksense-distribution 1'");
  EmpiricalDistribution d;
  bool seen_default = false;
  for (++i; i < all.size(); ++i) {
    const auto line = text::trim(all[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto where = "distribution line " + std::to_string(i + 1) + ": ";
    const auto space = line.find_first_of(" \t");
    if (space == std::string_view::npos) throw ParseError(where + "expected '<weight> <field>:<value>'");
    const auto first = line.substr(0, space);
    const auto rest = text::trim(line.substr(space));
    if (first == "default") {
      if (seen_default) throw ParseError(where + "second default line");
      seen_default = true;
      if (rest == "remainder") {
        d.default_remainder = true;
      } else if (const auto w = text::parse_double(rest); w && *w >= 0.0) {
        d.default_weight = *w;
      } else {
        throw ParseError(where + "expected 'default remainder' or 'default <weight>'");
      }
      continue;
    }
    const auto w = text::parse_double(first);
    if (!w || !(*w >= 0.0)) throw ParseError(where + "bad weight '" + std::string(first) + "'");
    const auto colon = rest.find(':');
    if (colon == std::string_view::npos) throw ParseError(where + "expected '<field>:<value>'");
    const auto key = text::trim(rest.substr(0, colon));
    DistributionEntry e{*w, {}};
    bool known = false;
    for (const auto& [field, name] : kFieldNames)
      if (key == name) {
        e.matcher.field = field;
        known = true;
      }
    if (!known) throw ParseError(where + "unknown field '" + std::string(key) + "'");
    e.matcher.value = std::string(text::trim(rest.substr(colon + 1)));
    if (e.matcher.value.empty()) throw ParseError(where + "empty match value");
    d.entries.push_back(std::move(e));
  }
  try {
    d.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("distribution: ") + e.what());
  }
  return d;
}

std::string print_distribution(const EmpiricalDistribution& dist) {
  std::string out = std::string(kDistributionMagic) + " 1\n";
  for (const auto& e : dist.entries)
    out += text::format_double(e.weight) + " " + std::string(field_name(e.matcher.field)) + ":" + e.matcher.value + "\n";
  if (dist.default_remainder) out += "default remainder\n";
  if (dist.default_weight) out += "default " + text::format_double(*dist.default_weight) + "\n";
  return out;
}

const EmpiricalDistribution& reference_distribution() {
  static const EmpiricalDistribution dist = parse_distribution(embedded::kReferenceDistribution);
  return dist;
}

std::vector<double> rule_weights(const EmpiricalDistribution& dist, const std::vector<fpdb::FingerprintRule>& db) {
  dist.validate();
  const std::size_t none = dist.entries.size();
  std::vector<std::size_t> owner(db.size(), none);
  std::vector<std::size_t> taken(dist.entries.size() + 1, 0);
  for (std::size_t r = 0; r < db.size(); ++r) {
    for (std::size_t e = 0; e < dist.entries.size(); ++e)
      if (dist.entries[e].matcher.matches(db[r])) {
        owner[r] = e;
        break;
      }
    ++taken[owner[r]];
  }

  double entry_total = 0.0;
  for (const auto& e : dist.entries) entry_total += e.weight;
  double default_total = 0.0;
  if (dist.default_remainder) default_total = std::max(0.0, 100.0 - entry_total);
  if (dist.default_weight) default_total = *dist.default_weight;

  std::vector<double> w(db.size(), 0.0);
  double sum = 0.0;
  for (std::size_t r = 0; r < db.size(); ++r) {
    const double pool = owner[r] == none ? default_total : dist.entries[owner[r]].weight;
    w[r] = pool / static_cast<double>(taken[owner[r]]);
    sum += w[r];
  }
  if (!(sum > 0.0)) throw InvalidArgument("the distribution gives no weight to any rule in the database");
  for (double& v : w) v /= sum;
  return w;
}

}  // namespace stacksense::datagen

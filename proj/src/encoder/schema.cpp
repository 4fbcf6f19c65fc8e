#include <cstdio>
#include <set>

#include "embedded.hpp"
#include "stacksense/encoder.hpp"
#include "stacksense/error.hpp"
#include "text.hpp"

namespace stacksense::encoder {

namespace {

constexpr std::string_view kSchemaMagic = "stacksense-schema";

std::string hash_hex(std::string_view data) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(text::fnv1a64(data)));
  return buf;
}

std::optional<FeatureKind> kind_from_string(std::string_view s) {
  for (auto k : {FeatureKind::presence, FeatureKind::flag, FeatureKind::onehot, FeatureKind::hex, FeatureKind::dec})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

}  // namespace

std::string_view to_string(FeatureKind kind) noexcept {
  switch (kind) {
    case FeatureKind::presence: return "presence";
    case FeatureKind::flag: return "flag";
    case FeatureKind::onehot: return "onehot";
    case FeatureKind::hex: return "hex";
    case FeatureKind::dec: return "dec";
  }
  return "?";
}

std::size_t FeatureDescriptor::width() const noexcept {
  return kind == FeatureKind::onehot ? tokens.size() * slots : 1;
}

EncodingSchema::EncodingSchema(std::string name, int version, std::vector<FeatureDescriptor> descriptors)
    : name_(std::move(name)), version_(version), descriptors_(std::move(descriptors)) {
  if (name_.empty() || name_.find_first_of(" \t") != std::string::npos)
    throw InvalidArgument("schema name must be a non-empty word");
  for (auto& d : descriptors_) {
    if (d.field.empty()) throw InvalidArgument("schema descriptor without a field name");
    if (d.labels.empty()) d.labels = d.tokens;
    if (d.labels.size() != d.tokens.size()) throw InvalidArgument("schema labels do not match tokens");
    switch (d.kind) {
      case FeatureKind::flag:
        if (d.tokens.size() != 1 || d.tokens[0].empty()) throw InvalidArgument("flag descriptor needs one token");
        break;
      case FeatureKind::onehot:
        if (d.tokens.empty()) throw InvalidArgument("onehot descriptor needs tokens");
        if (d.slots == 0) throw InvalidArgument("onehot descriptor needs at least one slot");
        if (std::set<std::string>(d.tokens.begin(), d.tokens.end()).size() != d.tokens.size())
          throw InvalidArgument("onehot tokens must be distinct");
        break;
      default:
        if (!d.tokens.empty()) throw InvalidArgument("this descriptor kind takes no tokens");
    }
    if (d.kind != FeatureKind::onehot) d.slots = 1;
    d.offset = dim_;
    dim_ += d.width();
  }
}

std::string EncodingSchema::id() const {
  return name_ + "/" + std::to_string(version_) + "/" + hash_hex(print_schema(*this));
}

std::vector<std::string> EncodingSchema::unit_names() const {
  std::vector<std::string> out;
  out.reserve(dim_);
  for (const auto& d : descriptors_) {
    const std::string base = std::string(fpdb::to_string(d.test)) + "." + d.field;
    switch (d.kind) {
      case FeatureKind::presence: out.push_back(base + "?"); break;
      case FeatureKind::flag: out.push_back(base + ":" + d.labels[0]); break;
      case FeatureKind::hex:
      case FeatureKind::dec: out.push_back(base); break;
      case FeatureKind::onehot:
        for (std::size_t s = 0; s < d.slots; ++s)
          for (const auto& label : d.labels)
            out.push_back(d.slots == 1 ? base + "=" + label : base + "[" + std::to_string(s + 1) + "]=" + label);
        break;
    }
  }
  return out;
}

EncodingSchema parse_schema(std::string_view text) {
  const auto all = text::lines(text);
  std::size_t i = 0;
  auto fail = [&](const std::string& msg) -> ParseError {
    return ParseError("schema line " + std::to_string(i + 1) + ": " + msg);
  };
  while (i < all.size() && text::trim(all[i]).empty()) ++i;
  if (i == all.size()) throw ParseError("schema is empty");
  const auto header = text::split_ws(all[i]);
  if (header.size() != 3 || header[0] != kSchemaMagic) throw fail("expected 'stacksense-schema <name> <version>'");
  const auto version = text::parse_dec(header[2]);
  if (!version) throw fail("bad schema version");
  const std::string name(header[1]);

  std::vector<FeatureDescriptor> descriptors;
  for (++i; i < all.size(); ++i) {
    const auto line = text::trim(all[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto words = text::split_ws(line);
    if (words.size() < 3) throw fail("expected 'TEST FIELD KIND ...'");
    FeatureDescriptor d;
    const auto test = fpdb::test_from_string(words[0]);
    if (!test) throw fail("unknown test '" + std::string(words[0]) + "'");
    d.test = *test;
    d.field = std::string(words[1]);
    const auto kind = kind_from_string(words[2]);
    if (!kind) throw fail("unknown kind '" + std::string(words[2]) + "'");
    d.kind = *kind;
    std::size_t w = 3;
    if (w < words.size() && words[w].substr(0, 6) == "slots=") {
      const auto slots = text::parse_dec(words[w].substr(6));
      if (!slots || *slots == 0) throw fail("bad slot count");
      d.slots = *slots;
      ++w;
    }
    for (; w < words.size(); ++w) {
      const auto colon = words[w].find(':');
      const auto token = words[w].substr(0, colon);
      if (token.empty()) throw fail("empty token");
      d.tokens.emplace_back(token);
      d.labels.emplace_back(colon == std::string_view::npos ? token : words[w].substr(colon + 1));
    }
    try {
      if (d.kind == FeatureKind::flag && d.tokens.size() > 1) {
        for (std::size_t t = 0; t < d.tokens.size(); ++t) {
          FeatureDescriptor one = d;
          one.tokens = {d.tokens[t]};
          one.labels = {d.labels[t]};
          descriptors.push_back(std::move(one));
        }
      } else {
        descriptors.push_back(std::move(d));
      }
      // Validate eagerly so the error carries a line number.
      EncodingSchema(name, static_cast<int>(*version), {descriptors.back()});
    } catch (const InvalidArgument& e) {
      throw fail(e.what());
    }
  }
  try {
    return EncodingSchema(name, static_cast<int>(*version), std::move(descriptors));
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("schema: ") + e.what());
  }
}

std::string print_schema(const EncodingSchema& schema) {
  std::string out = std::string(kSchemaMagic) + " " + schema.name() + " " + std::to_string(schema.version()) + "\n";
  for (const auto& d : schema.descriptors()) {
    out += std::string(fpdb::to_string(d.test)) + " " + d.field + " " + std::string(to_string(d.kind));
    if (d.slots != 1) out += " slots=" + std::to_string(d.slots);
    for (std::size_t t = 0; t < d.tokens.size(); ++t) {
      out += " " + d.tokens[t];
      if (d.labels[t] != d.tokens[t]) out += ":" + d.labels[t];
    }
    out += "\n";
  }
  return out;
}

const EncodingSchema& reference_schema() {
  static const EncodingSchema schema = parse_schema(embedded::kReferenceSchema);
  return schema;
}

EncodingSchema build_nmap_schema(const std::vector<fpdb::FingerprintRule>& db, std::vector<std::string>* uncovered) {
  const EncodingSchema& schema = reference_schema();
  if (uncovered) {
    std::set<std::pair<fpdb::TestId, std::string>> covered;
    for (const auto& d : schema.descriptors()) covered.emplace(d.test, text::to_lower(d.field));
    std::set<std::pair<fpdb::TestId, std::string>> reported;
    for (const auto& rule : db)
      for (const auto& [test, spec] : rule.tests)
        for (const auto& [field, value] : spec.fields) {
          const auto key = std::make_pair(test, text::to_lower(field));
          // Resp is implied by the presence of the test itself.
          if (key.second == "resp" || covered.count(key) || !reported.insert(key).second) continue;
          uncovered->push_back(std::string(fpdb::to_string(test)) + "." + field);
        }
  }
  return schema;
}

}  // namespace stacksense::encoder

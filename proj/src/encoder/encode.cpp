#include <algorithm>

#include "stacksense/encoder.hpp"
#include "stacksense/error.hpp"
#include "text.hpp"

namespace stacksense::encoder {

namespace {

// A test that answered without naming Resp answered yes.
std::optional<std::string> effective_value(const fpdb::ProbeResponse& response, fpdb::TestId test,
                                           std::string_view field) {
  auto v = response.value(test, field);
  if (!v && response.has_test(test) && text::iequals(field, "Resp")) return std::string("Y");
  return v;
}

bool flag_set(const FeatureDescriptor& d, std::string_view value) {
  const auto& token = d.tokens[0];
  if (token.size() == 1) return value.find(token[0]) != std::string_view::npos;
  return value == token;
}

std::string where(const FeatureDescriptor& d) { return std::string(fpdb::to_string(d.test)) + "." + d.field; }

void encode_onehot(const FeatureDescriptor& d, std::string_view value, std::span<double> out,
                   std::vector<std::string>* diagnostics) {
  const std::size_t n = d.tokens.size();
  if (d.slots == 1) {
    for (std::size_t t = 0; t < n; ++t)
      if (value == d.tokens[t]) out[t] = 1.0;
    return;
  }
  // Tokens in order of appearance, longest match first at each position.
  std::vector<std::size_t> by_length(n);
  for (std::size_t t = 0; t < n; ++t) by_length[t] = t;
  std::stable_sort(by_length.begin(), by_length.end(),
                   [&](std::size_t a, std::size_t b) { return d.tokens[a].size() > d.tokens[b].size(); });
  std::size_t pos = 0;
  std::size_t slot = 0;
  while (pos < value.size()) {
    if (slot == d.slots) {
      if (diagnostics)
        diagnostics->push_back(where(d) + ": '" + std::string(value) + "' has more than " + std::to_string(d.slots) +
                               " entries; the rest is ignored");
      return;
    }
    std::size_t matched = n;
    for (auto t : by_length)
      if (value.substr(pos, d.tokens[t].size()) == d.tokens[t]) {
        matched = t;
        break;
      }
    if (matched == n) {
      if (diagnostics)
        diagnostics->push_back(where(d) + ": unknown entry '" + std::string(1, value[pos]) + "' at position " +
                               std::to_string(slot + 1));
      ++pos;
    } else {
      out[slot * n + matched] = 1.0;
      pos += d.tokens[matched].size();
    }
    ++slot;
  }
}

}  // namespace

Vector encode(const fpdb::ProbeResponse& response, const EncodingSchema& schema,
              std::vector<std::string>* diagnostics) {
  Vector out(schema.dim(), -1.0);
  for (const auto& d : schema.descriptors()) {
    const auto value = effective_value(response, d.test, d.field);
    std::span<double> unit(out.data() + d.offset, d.width());
    switch (d.kind) {
      case FeatureKind::presence:
        unit[0] = value ? 1.0 : -1.0;
        break;
      case FeatureKind::flag:
        unit[0] = value && flag_set(d, *value) ? 1.0 : -1.0;
        break;
      case FeatureKind::onehot:
        if (value) encode_onehot(d, *value, unit, diagnostics);
        break;
      case FeatureKind::hex:
      case FeatureKind::dec: {
        if (!value) {
          unit[0] = 0.0;
          break;
        }
        const auto n = d.kind == FeatureKind::hex ? text::parse_hex(*value) : text::parse_dec(*value);
        if (n) {
          unit[0] = static_cast<double>(*n);
        } else if (diagnostics) {
          diagnostics->push_back(where(d) + ": cannot read '" + *value + "' as " + std::string(to_string(d.kind)));
        }
        break;
      }
    }
  }
  return out;
}

}  // namespace stacksense::encoder

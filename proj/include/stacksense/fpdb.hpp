#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace stacksense::fpdb {

// The first-generation probe set, in the order fingerprints list them.
enum class TestId { TSeq, T1, T2, T3, T4, T5, T6, T7, PU };

inline constexpr TestId kAllTests[] = {TestId::TSeq, TestId::T1, TestId::T2, TestId::T3, TestId::T4,
                                       TestId::T5,   TestId::T6, TestId::T7, TestId::PU};

std::string_view to_string(TestId id) noexcept;
// Case-insensitive ("TSEQ" and "TSeq" both work).
std::optional<TestId> test_from_string(std::string_view name) noexcept;

struct HexRange {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;
  bool operator==(const HexRange&) const = default;
};

using Alternative = std::variant<std::string, HexRange>;

// What a rule allows for one field: a constant, a set of alternatives, a hex
// range, or nothing at all.
class ValueSpec {
 public:
  enum class Kind { Const, OneOf, HexRange, Absent };

  ValueSpec() = default;  // Absent
  explicit ValueSpec(std::vector<Alternative> alternatives);
  static ValueSpec constant(std::string value);

  Kind kind() const noexcept;
  bool absent() const noexcept { return alternatives_.empty(); }
  const std::vector<Alternative>& alternatives() const noexcept { return alternatives_; }

  // A concrete value satisfies the spec if it equals a literal alternative
  // (case-sensitive) or parses as hex inside a range alternative.
  bool matches(std::string_view value) const;

  // Canonical text: alternatives joined by '|', ranges as LO-HI in upper hex.
  std::string str() const;

  bool operator==(const ValueSpec&) const = default;

 private:
  std::vector<Alternative> alternatives_;
};

// Parses one value expression: a|b|c, lo-hi, <x, >x, >x&<y. Throws ParseError.
ValueSpec parse_value_spec(std::string_view text);

// Ordered field list; lookups ignore case.
template <class V>
struct FieldList {
  std::vector<std::pair<std::string, V>> fields;

  const V* find(std::string_view name) const;
  bool operator==(const FieldList&) const = default;
};

using TestSpec = FieldList<ValueSpec>;
using TestValues = FieldList<std::string>;

struct OsClass {
  std::string vendor;
  std::string family;
  std::string version;
  std::string device_type;
  bool operator==(const OsClass&) const = default;
};

struct FingerprintRule {
  std::string name;
  std::vector<OsClass> classes;  // at least one; the first one labels the rule
  std::map<TestId, TestSpec> tests;
  std::size_t line = 0;  // line of the Fingerprint keyword; not compared

  const OsClass& os_class() const { return classes.front(); }
  // The effective spec: a test answered Resp=N hides every other field.
  ValueSpec field(TestId test, std::string_view name) const;

  bool operator==(const FingerprintRule& o) const {
    return name == o.name && classes == o.classes && tests == o.tests;
  }
};

struct ProbeResponse {
  std::map<TestId, TestValues> tests;

  bool has_test(TestId test) const { return tests.count(test) != 0; }
  // The effective value: absent when the test is missing or hidden behind
  // Resp=N.
  std::optional<std::string> value(TestId test, std::string_view field) const;
  bool operator==(const ProbeResponse&) const = default;
};

struct Diagnostic {
  enum class Severity { warning, error };
  std::size_t line = 0;
  Severity severity = Severity::error;
  std::string message;
};

std::string format(const Diagnostic& d);

struct ParseResult {
  std::vector<FingerprintRule> rules;
  std::vector<Diagnostic> diagnostics;
};

// Entry-level problems become diagnostics and the entry is skipped; only an
// empty document throws (ParseError).
ParseResult parse_db(std::string_view text);
std::string print_rule(const FingerprintRule& rule);
std::string print_db(const std::vector<FingerprintRule>& rules);

// Lines that do not look like Test(...) are ignored. A missing closing
// parenthesis is tolerated. Throws NotConcrete on '|' in a value and
// ParseError on malformed field lists.
ProbeResponse parse_response(std::string_view text, std::vector<Diagnostic>* diagnostics = nullptr);
std::string print_response(const ProbeResponse& response);

struct ScoreResult {
  double score = 0.0;
  std::size_t considered = 0;
  std::size_t matched = 0;
  bool no_overlap() const noexcept { return considered == 0; }
};

// Fraction of (test, field) pairs present in both that the rule accepts.
ScoreResult classic_score(const ProbeResponse& response, const FingerprintRule& rule);

struct RankedRule {
  std::size_t rule_index = 0;
  ScoreResult score;
};

// Score descending, DB order among ties.
std::vector<RankedRule> classic_match(const ProbeResponse& response, const std::vector<FingerprintRule>& db);

// ---- FieldList ----

bool field_name_equal(std::string_view a, std::string_view b) noexcept;

template <class V>
const V* FieldList<V>::find(std::string_view name) const {
  for (const auto& [k, v] : fields)
    if (field_name_equal(k, name)) return &v;
  return nullptr;
}

}  // namespace stacksense::fpdb

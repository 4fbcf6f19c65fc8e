#include <cctype>
#include <set>

#include "stacksense/error.hpp"
#include "stacksense/fpdb.hpp"
#include "text.hpp"

namespace stacksense::fpdb {

namespace {

bool hides_fields(const TestSpec& spec) {
  const ValueSpec* resp = spec.find("Resp");
  return resp && resp->kind() == ValueSpec::Kind::Const && std::get<std::string>(resp->alternatives()[0]) == "N";
}

bool hides_fields(const TestValues& values) {
  const std::string* resp = values.find("Resp");
  return resp && *resp == "N";
}

struct TestLine {
  std::string_view name;
  std::string_view body;
  bool closed = false;
};

// "Name(body)" with the closing parenthesis optional. Anything that does not
// start with an identifier followed by '(' is not a test line.
std::optional<TestLine> split_test_line(std::string_view line) {
  const auto open = line.find('(');
  if (open == std::string_view::npos || open == 0) return std::nullopt;
  const auto name = line.substr(0, open);
  for (char c : name)
    if (!std::isalnum(static_cast<unsigned char>(c))) return std::nullopt;
  TestLine t{name, line.substr(open + 1), false};
  if (!t.body.empty() && t.body.back() == ')') {
    t.body.remove_suffix(1);
    t.closed = true;
  }
  return t;
}

// k=v pairs separated by '%'. An empty body is an empty test.
template <class V, class Convert>
FieldList<V> parse_fields(std::string_view body, Convert convert) {
  FieldList<V> out;
  if (text::trim(body).empty()) return out;
  for (auto raw : text::split(body, '%')) {
    const auto pair = text::trim(raw);
    const auto eq = pair.find('=');
    if (eq == std::string_view::npos) throw ParseError("field '" + std::string(pair) + "' has no '='");
    const auto key = text::trim(pair.substr(0, eq));
    if (key.empty()) throw ParseError("empty field name in '" + std::string(pair) + "'");
    if (out.find(key)) throw ParseError("duplicate field '" + std::string(key) + "'");
    out.fields.emplace_back(std::string(key), convert(text::trim(pair.substr(eq + 1))));
  }
  return out;
}

bool is_comment(std::string_view line) { return line.empty() || line.front() == '#'; }

OsClass parse_class(std::string_view rest) {
  const auto parts = text::split(rest, '|');
  if (parts.size() != 4) throw ParseError("Class line needs 4 '|'-separated parts");
  OsClass c{std::string(text::trim(parts[0])), std::string(text::trim(parts[1])), std::string(text::trim(parts[2])),
            std::string(text::trim(parts[3]))};
  if (c.vendor.empty() || c.family.empty()) throw ParseError("Class line needs a vendor and a family");
  return c;
}

class DbParser {
 public:
  ParseResult run(std::string_view text) {
    const auto all = text::lines(text);
    bool any_content = false;
    for (std::size_t i = 0; i < all.size(); ++i) {
      const std::size_t lineno = i + 1;
      const auto line = text::trim(all[i]);
      if (is_comment(line)) continue;
      any_content = true;
      if (text::starts_with_word(line, "Fingerprint")) {
        finish();
        begin(lineno, text::trim(line.substr(11)));
        continue;
      }
      if (!open_) {
        error(lineno, "'" + std::string(line.substr(0, 40)) + "' outside of a Fingerprint entry");
        continue;
      }
      if (broken_) continue;
      try {
        entry_line(line);
      } catch (const ParseError& e) {
        error(lineno, std::string("entry '") + current_.name + "' skipped: " + e.what());
        broken_ = true;
      }
    }
    finish();
    if (!any_content) throw ParseError("fingerprint database is empty");
    return std::move(result_);
  }

 private:
  void begin(std::size_t lineno, std::string_view name) {
    current_ = FingerprintRule{};
    current_.name = std::string(name);
    current_.line = lineno;
    open_ = true;
    broken_ = name.empty();
    if (broken_) error(lineno, "Fingerprint line without a name; entry skipped");
  }

  void entry_line(std::string_view line) {
    if (text::starts_with_word(line, "Class")) {
      current_.classes.push_back(parse_class(line.substr(5)));
      return;
    }
    const auto t = split_test_line(line);
    if (!t) throw ParseError("unrecognised line '" + std::string(line) + "'");
    const auto id = test_from_string(t->name);
    if (!id) throw ParseError("unknown test '" + std::string(t->name) + "'");
    if (current_.tests.count(*id)) throw ParseError("test " + std::string(to_string(*id)) + " given twice");
    if (!t->closed) throw ParseError("test " + std::string(to_string(*id)) + " is missing ')'");
    current_.tests[*id] = parse_fields<ValueSpec>(t->body, [](std::string_view v) { return parse_value_spec(v); });
  }

  void finish() {
    if (!open_) return;
    open_ = false;
    if (broken_) return;
    if (current_.classes.empty()) {
      error(current_.line, "entry '" + current_.name + "' skipped: no Class line");
      return;
    }
    if (current_.tests.empty()) {
      error(current_.line, "entry '" + current_.name + "' skipped: no tests");
      return;
    }
    if (!names_.insert(current_.name).second)
      result_.diagnostics.push_back(
          {current_.line, Diagnostic::Severity::warning, "duplicate fingerprint name '" + current_.name + "'"});
    result_.rules.push_back(std::move(current_));
  }

  void error(std::size_t lineno, std::string message) {
    result_.diagnostics.push_back({lineno, Diagnostic::Severity::error, std::move(message)});
  }

  ParseResult result_;
  FingerprintRule current_;
  std::set<std::string> names_;
  bool open_ = false;
  bool broken_ = false;
};

template <class V, class Print>
std::string print_test(TestId id, const FieldList<V>& fields, Print print) {
  std::string out(to_string(id));
  out += '(';
  for (std::size_t i = 0; i < fields.fields.size(); ++i) {
    if (i) out += '%';
    out += fields.fields[i].first;
    out += '=';
    out += print(fields.fields[i].second);
  }
  out += ")\n";
  return out;
}

}  // namespace

ValueSpec FingerprintRule::field(TestId test, std::string_view name) const {
  const auto it = tests.find(test);
  if (it == tests.end()) return {};
  if (hides_fields(it->second) && !field_name_equal(name, "Resp")) return {};
  const ValueSpec* v = it->second.find(name);
  return v ? *v : ValueSpec{};
}

std::optional<std::string> ProbeResponse::value(TestId test, std::string_view field) const {
  const auto it = tests.find(test);
  if (it == tests.end()) return std::nullopt;
  if (hides_fields(it->second) && !field_name_equal(field, "Resp")) return std::nullopt;
  const std::string* v = it->second.find(field);
  if (!v) return std::nullopt;
  return *v;
}

std::string format(const Diagnostic& d) {
  return "line " + std::to_string(d.line) + ": " +
         (d.severity == Diagnostic::Severity::warning ? "warning: " : "error: ") + d.message;
}

ParseResult parse_db(std::string_view text) { return DbParser{}.run(text); }

std::string print_rule(const FingerprintRule& rule) {
  std::string out = "Fingerprint " + rule.name + "\n";
  for (const auto& c : rule.classes)
    out += "Class " + c.vendor + " | " + c.family + " | " + c.version + " | " + c.device_type + "\n";
  for (const auto& [id, spec] : rule.tests)
    out += print_test(id, spec, [](const ValueSpec& v) { return v.str(); });
  return out;
}

std::string print_db(const std::vector<FingerprintRule>& rules) {
  std::string out;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    if (i) out += '\n';
    out += print_rule(rules[i]);
  }
  return out;
}

ProbeResponse parse_response(std::string_view text, std::vector<Diagnostic>* diagnostics) {
  ProbeResponse out;
  const auto all = text::lines(text);
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto line = text::trim(all[i]);
    if (is_comment(line)) continue;
    const auto t = split_test_line(line);
    if (!t) continue;
    const auto id = test_from_string(t->name);
    if (!id) continue;
    if (out.tests.count(*id)) {
      if (diagnostics)
        diagnostics->push_back({i + 1, Diagnostic::Severity::warning,
                                "test " + std::string(to_string(*id)) + " repeated; first occurrence kept"});
      continue;
    }
    try {
      out.tests[*id] = parse_fields<std::string>(t->body, [&](std::string_view v) {
        if (v.find('|') != std::string_view::npos)
          throw NotConcrete("line " + std::to_string(i + 1) + ": value '" + std::string(v) + "' has alternatives");
        return std::string(v);
      });
    } catch (const NotConcrete&) {
      throw;
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

std::string print_response(const ProbeResponse& response) {
  std::string out;
  for (const auto& [id, values] : response.tests)
    out += print_test(id, values, [](const std::string& v) { return v; });
  return out;
}

}  // namespace stacksense::fpdb

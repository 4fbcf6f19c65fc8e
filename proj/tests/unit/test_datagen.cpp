#include <doctest.h>

#include <map>
#include <set>

#include "../common/fixtures.hpp"
#include "stacksense/datagen.hpp"
#include "stacksense/error.hpp"

using namespace stacksense;
using namespace stacksense::datagen;
using fpdb::TestId;

namespace {

std::vector<fpdb::FingerprintRule> combined_db() {
  return fpdb::parse_db(read_fixture("fp20.db") + "\n" + read_fixture("irrelevant.db")).rules;
}

std::size_t find_rule(const std::vector<fpdb::FingerprintRule>& db, const std::string& name) {
  for (std::size_t i = 0; i < db.size(); ++i)
    if (db[i].name == name) return i;
  FAIL("no rule " << name);
  return 0;
}

}  // namespace

TEST_CASE("distribution text") {
  const auto d = parse_distribution(
      "stacksense-distribution 1\n# c\n10 name:Windows XP\n2.5 family:linux\n1 vendor:Sun\ndefault 7\n");
  REQUIRE(d.entries.size() == 3);
  CHECK(d.entries[0].weight == 10.0);
  CHECK(d.entries[0].matcher.field == Matcher::Field::name);
  CHECK(d.entries[0].matcher.value == "Windows XP");
  CHECK(d.entries[1].matcher.field == Matcher::Field::family);
  CHECK(d.entries[2].matcher.field == Matcher::Field::vendor);
  CHECK(d.default_weight == 7.0);
  CHECK_FALSE(d.default_remainder);
  CHECK(parse_distribution(print_distribution(d)) == d);
  CHECK(parse_distribution(print_distribution(reference_distribution())) == reference_distribution());
  CHECK(reference_distribution().entries.front().weight == doctest::Approx(74.6));

  CHECK_THROWS_AS(parse_distribution(""), ParseError);
  CHECK_THROWS_AS(parse_distribution("stacksense-distribution 2\n1 name:x\n"), ParseError);
  CHECK_THROWS_AS(parse_distribution("stacksense-distribution 1\n-1 name:x\n"), ParseError);
  CHECK_THROWS_AS(parse_distribution("stacksense-distribution 1\n1 colour:x\n"), ParseError);
  CHECK_THROWS_AS(parse_distribution("stacksense-distribution 1\n1 name:\n"), ParseError);
  CHECK_THROWS_AS(parse_distribution("stacksense-distribution 1\n1 name:x\ndefault 1\ndefault remainder\n"),
                  ParseError);
  CHECK_THROWS_AS(parse_distribution("stacksense-distribution 1\n"), ParseError);
}

TEST_CASE("matchers") {
  const auto db = combined_db();
  const auto& xp = db[find_rule(db, "Microsoft Windows XP Pro SP1 or SP2")];
  CHECK(Matcher{Matcher::Field::name, "windows xp"}.matches(xp));
  CHECK_FALSE(Matcher{Matcher::Field::name, "Windows 2000"}.matches(xp));
  CHECK(Matcher{Matcher::Field::family, "WINDOWS"}.matches(xp));
  CHECK_FALSE(Matcher{Matcher::Field::family, "Win"}.matches(xp));  // equality, not substring
  CHECK(Matcher{Matcher::Field::vendor, "microsoft"}.matches(xp));
  CHECK(Matcher{Matcher::Field::version, "NT/2K/XP"}.matches(xp));
  CHECK(Matcher{Matcher::Field::type, "general purpose"}.matches(xp));
}

TEST_CASE("rule weights") {
  const auto db = combined_db();
  REQUIRE(db.size() == 25);
  const auto w = rule_weights(reference_distribution(), db);
  double sum = 0.0;
  for (double v : w) sum += v;
  CHECK(sum == doctest::Approx(1.0));

  // Every entry matches something here, so the pools add to exactly 100.
  // Remainder 100 - 94.5 goes to the 15 rules nothing else claims.
  std::map<std::string, double> expect{
      {"Microsoft Windows XP Pro SP1 or SP2", .746},
      {"Microsoft Windows 2000 SP4", .060},
      {"Microsoft Windows 98 SE", .009},
      {"Microsoft Windows Vista Business", .036},
      {"Microsoft Windows Server 2003 SP1", .020},
      {"Linux 2.6.10", .034 / 4},
      {"Apple Mac OS X 10.4.8 (Tiger)", .040},
      {"Sun Solaris 9", .055 / 15},
      {"Cisco IOS 12.2", .055 / 15},
  };
  for (const auto& [name, p] : expect) CHECK_MESSAGE(w[find_rule(db, name)] == doctest::Approx(p), name);

  SUBCASE("first matching entry takes the rule") {
    const auto d = parse_distribution("stacksense-distribution 1\n10 family:Windows\n90 name:Windows XP\n");
    const auto v = rule_weights(d, db);
    CHECK(v[find_rule(db, "Microsoft Windows XP Pro SP1 or SP2")] == doctest::Approx(0.2));
    CHECK(v[find_rule(db, "Sun Solaris 9")] == 0.0);
  }
  SUBCASE("nothing weighted") {
    const auto d = parse_distribution("stacksense-distribution 1\n10 family:Plan9\n");
    CHECK_THROWS_AS(rule_weights(d, db), InvalidArgument);
  }
  SUBCASE("fixed default weight") {
    const auto d = parse_distribution("stacksense-distribution 1\n10 name:Windows XP\ndefault 30\n");
    const auto v = rule_weights(d, db);
    CHECK(v[find_rule(db, "Microsoft Windows XP Pro SP1 or SP2")] == doctest::Approx(0.25));
    CHECK(v[find_rule(db, "Sun Solaris 9")] == doctest::Approx(0.75 / 24));
  }
}

TEST_CASE("sampling a rule") {
  const auto db = combined_db();
  const auto& w2k = db[find_rule(db, "Microsoft Windows 2000 SP4")];
  std::map<std::string, int> windows, uck;
  std::set<std::string> gcd;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    const auto r = sample_response(w2k, 1000 + static_cast<std::uint64_t>(i));
    ++windows[*r.value(TestId::T1, "W")];
    ++uck[*r.value(TestId::PU, "UCK")];
    gcd.insert(*r.value(TestId::TSeq, "gcd"));
    CHECK(r.value(TestId::T1, "Ops") == "MNWNNT");
    CHECK(r.value(TestId::T2, "Ops") == "");
    CHECK(fpdb::classic_score(r, w2k).score == 1.0);
  }
  CHECK(windows.size() == 2);
  CHECK(double(windows["4204"]) / n == doctest::Approx(0.5).epsilon(0.04));
  CHECK(double(uck["E"]) / n == doctest::Approx(0.5).epsilon(0.04));
  // <6 is the range 0..5, every value reachable
  CHECK(gcd == std::set<std::string>{"0", "1", "2", "3", "4", "5"});
  CHECK(sample_response(w2k, 7) == sample_response(w2k, 7));

  SUBCASE("Resp=N tests carry nothing else") {
    const auto& hp = db[find_rule(db, "HP JetDirect printer")];
    const auto r = sample_response(hp, 3);
    REQUIRE(r.has_test(TestId::PU));
    CHECK(r.tests.at(TestId::PU).fields.size() == 1);
    CHECK(r.value(TestId::PU, "Resp") == "N");
  }
}

TEST_CASE("generated datasets") {
  const auto db = combined_db();
  const auto& schema = encoder::reference_schema();
  const auto& labels = hierarchy::reference_labels();

  SUBCASE("population share follows the weights") {
    const auto data = generate_dataset(db, reference_distribution(), labels, schema, {10000, 11, 0});
    REQUIRE(data.size() == 10000);
    std::size_t xp = 0;
    for (const auto& p : data.patterns) xp += p.rule == "Microsoft Windows XP Pro SP1 or SP2";
    CHECK(double(xp) / 10000 == doctest::Approx(0.746).epsilon(0.02 / 0.746));
  }
  SUBCASE("rows are encodings of the stored responses") {
    const auto data = generate_dataset(db, reference_distribution(), labels, schema, {300, 5, 2});
    CHECK(data.schema_id == schema.id());
    CHECK(data.inputs.cols() == schema.dim());
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto row = data.inputs.row(i);
      CHECK(Vector(row.begin(), row.end()) == encoder::encode(data.responses[i], schema));
      CHECK(data.patterns[i].rule == db[data.rule_index[i]].name);
      CHECK(fpdb::classic_score(data.responses[i], db[data.rule_index[i]]).score == 1.0);
    }
  }
  SUBCASE("thread count does not change the bytes") {
    const auto one = generate_dataset(db, reference_distribution(), labels, schema, {1500, 42, 1});
    const auto four = generate_dataset(db, reference_distribution(), labels, schema, {1500, 42, 4});
    CHECK(write_dataset(one) == write_dataset(four));
    const auto other = generate_dataset(db, reference_distribution(), labels, schema, {1500, 43, 4});
    CHECK(write_dataset(one) != write_dataset(other));
  }
  SUBCASE("a one-rule database") {
    const std::vector<fpdb::FingerprintRule> single{db[find_rule(db, "Sun Solaris 9")]};
    const auto data = generate_dataset(single, reference_distribution(), labels, schema, {50, 1, 1});
    for (const auto& p : data.patterns) {
      CHECK(p.rule == "Sun Solaris 9");
      CHECK(p.labels.family == "Solaris");
      CHECK(p.labels.version == "9");
    }
  }
  SUBCASE("bad requests") {
    CHECK_THROWS_AS(generate_dataset(db, reference_distribution(), labels, schema, {0, 1, 1}), InvalidArgument);
    CHECK_THROWS_AS(generate_dataset({}, reference_distribution(), labels, schema, {5, 1, 1}), InvalidArgument);
  }
}

TEST_CASE("dataset files") {
  const auto db = combined_db();
  auto data = generate_dataset(db, reference_distribution(), hierarchy::reference_labels(), encoder::reference_schema(),
                               {400, 9, 1});
  const std::string text = write_dataset(data);
  const auto back = read_dataset(text);
  data.responses.clear();
  data.rule_index.clear();
  CHECK(back == data);
  CHECK(write_dataset(back) == text);

  bool saw_blank_version = false;
  for (const auto& p : back.patterns) saw_blank_version |= p.rule == "HP JetDirect printer" && p.labels.version.empty();
  CHECK(saw_blank_version);

  CHECK_THROWS_AS(read_dataset("hello\n"), ParseError);
  CHECK_THROWS_AS(read_dataset(text.substr(0, text.size() - 40)), ParseError);
  const auto header_end = text.find('\n');
  CHECK_THROWS_AS(read_dataset(text.substr(0, header_end) + "\n"), ParseError);  // rows missing

  auto bad = data;
  bad.patterns[0].rule = "tab\there";
  CHECK_THROWS_AS(write_dataset(bad), InvalidArgument);
}

TEST_CASE("labels") {
  const auto& cfg = hierarchy::reference_labels();
  CHECK(cfg.families == std::vector<std::string>{"Linux", "Solaris", "OpenBSD", "FreeBSD", "NetBSD", "Windows"});
  CHECK(cfg.family_index("windows") == 5u);
  CHECK_FALSE(cfg.family_index("IOS"));
  CHECK(cfg.has_version_net("Linux"));
  CHECK_FALSE(cfg.has_version_net("Windows"));
  CHECK(hierarchy::parse_labels(hierarchy::print_labels(cfg)) == cfg);

  const auto db = combined_db();
  auto label = [&](const std::string& n) { return hierarchy::label_rule(cfg, db[find_rule(db, n)]); };
  CHECK(label("Linux 2.4.18 - 2.4.32") == hierarchy::PatternLabels{true, "Linux", "2.4"});
  CHECK(label("Sun Solaris 10") == hierarchy::PatternLabels{true, "Solaris", "10"});
  CHECK(label("Microsoft Windows 98 SE").relevant);
  CHECK(label("Microsoft Windows 98 SE").family == "Windows");
  CHECK_FALSE(label("Cisco IOS 12.2").relevant);
  CHECK(label("Cisco IOS 12.2").family == "IOS");
  CHECK_FALSE(label("Apple Mac OS X 10.4.8 (Tiger)").relevant);

  fpdb::OsClass c{"Linux", "Linux", "3.X", "general purpose"};
  CHECK(cfg.version_group(c) == "3.X");

  CHECK_THROWS_AS(hierarchy::parse_labels(""), ParseError);
  CHECK_THROWS_AS(hierarchy::parse_labels("stacksense-labels 1\nrelevant A A\n"), ParseError);
  CHECK_THROWS_AS(hierarchy::parse_labels("stacksense-labels 1\nrelevant A\nversion-nets B\n"), ParseError);
  CHECK_THROWS_AS(hierarchy::parse_labels("stacksense-labels 1\nrelevant A\nmap A | 1\n"), ParseError);
  CHECK_THROWS_AS(hierarchy::parse_labels("stacksense-labels 1\nrelevant A\nfrobnicate\n"), ParseError);
}

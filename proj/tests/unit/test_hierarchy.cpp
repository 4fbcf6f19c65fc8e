#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "../common/fixtures.hpp"
#include "../common/oracles.hpp"
#include "stacksense/error.hpp"
#include "stacksense/hierarchy.hpp"

using namespace stacksense;
using namespace stacksense::hierarchy;

namespace {

std::vector<fpdb::FingerprintRule> combined_db() {
  return fpdb::parse_db(read_fixture("fp20.db") + "\n" + read_fixture("irrelevant.db")).rules;
}

const datagen::LabeledDataset& dataset() {
  static const auto data = datagen::generate_dataset(combined_db(), datagen::reference_distribution(),
                                                     reference_labels(), encoder::reference_schema(), {3000, 17, 0});
  return data;
}

const TrainedHierarchy& trained() {
  static const TrainedHierarchy t = [] {
    auto h = train_hierarchy(dataset(), encoder::reference_schema(), reference_labels(), HierarchyConfig{});
    auto corpus = parse_rpc_corpus(read_fixture("rpc.corpus"));
    std::vector<encoder::EndpointMap> maps;
    for (const auto& host : corpus) maps.push_back(host.endpoints);
    NetTrace rt;
    h.model.rpc = train_rpc(corpus, encoder::inventory_from_maps(maps), RpcTrainConfig{}, &rt);
    h.traces.push_back(rt);
    return h;
  }();
  return t;
}

const HierarchicalModel& model() { return trained().model; }

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("stacksense-test-" + name);
}

void write_file(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary) << bytes;
}

}  // namespace

TEST_CASE("holdout split") {
  CHECK(training_rows(100, 0.2) == 80);
  CHECK(training_rows(101, 0.2) == 81);
  CHECK(training_rows(7, 0.0) == 7);
  CHECK(training_rows(0, 0.5) == 0);
}

TEST_CASE("topology sizes") {
  Topology t;
  CHECK(t.hidden_for("family", 15) == 5);  // round(4.5)
  CHECK(t.hidden_for("family", 2) == 2);   // floor of min_hidden
  const auto p = Topology::original_sizes();
  CHECK(p.hidden_for("relevance", 3) == 20);
  CHECK(p.hidden_for(version_net_name("Solaris"), 100) == 7);
  CHECK(p.hidden_for(version_net_name("NetBSD"), 10) == 3);
}

TEST_CASE("training on the fixture database") {
  const auto& t = trained();
  const auto& m = t.model;
  CHECK(m.schema == encoder::reference_schema());
  CHECK(m.relevance.net.output_dim() == 1);
  CHECK(m.family.labels == reference_labels().families);
  for (const char* fam : {"Linux", "Solaris", "OpenBSD", "FreeBSD", "NetBSD"})
    CHECK_MESSAGE(m.version_stage(fam) != nullptr, fam);
  CHECK(m.version_stage("Windows") == nullptr);
  CHECK(m.version_stage("solaris") == m.version_stage("Solaris"));
  CHECK(m.version_stage("Solaris")->labels == std::vector<std::string>{"10", "8", "9"});

  for (const auto& tr : t.traces) {
    INFO(tr.net);
    CHECK(tr.reduced_inputs > 0);
    CHECK(tr.reduced_inputs <= tr.kept_inputs);
    CHECK(tr.kept_inputs <= tr.raw_inputs);
    CHECK(tr.train_accuracy >= 0.95);
    if (tr.heldout_patterns > 0) CHECK(tr.heldout_accuracy >= 0.9);
    CHECK_FALSE(tr.errors.empty());
    CHECK(tr.errors.back() < tr.initial_error);
  }
  // every pipeline sees the full encoded width
  CHECK(m.relevance.pipeline.input_dim() == m.schema.dim());
  CHECK(m.family.pipeline.input_dim() == m.schema.dim());

  std::vector<std::size_t> held;
  for (std::size_t i = training_rows(dataset().size(), 0.2); i < dataset().size(); ++i) held.push_back(i);
  const auto e = evaluate(m, dataset(), held);
  CHECK(e.patterns == held.size());
  CHECK(e.family_patterns <= e.patterns);
  CHECK(e.relevance_accuracy >= 0.95);
  CHECK(e.family_accuracy >= 0.9);
  CHECK(e.version_accuracy >= 0.85);
}

TEST_CASE("classifying hosts") {
  const auto& m = model();
  SUBCASE("Solaris 9") {
    const auto resp = fpdb::parse_response(read_fixture("solaris9.response"));
    const auto r = classify_host(m, resp, encoder::reference_schema());
    CHECK(r.relevant);
    REQUIRE(r.family);
    REQUIRE(r.version);
    CHECK(r.decision == "solaris 9");
    CHECK(r.diagnostics.empty());

    // stage outputs equal a hand-run of projection plus naive forward pass
    const Vector x = encoder::encode(resp, m.schema);
    CHECK(r.relevance == doctest::Approx(oracle::forward(m.relevance.net, dimred::project(m.relevance.pipeline, x))[0]));
    const Vector fam = oracle::forward(m.family.net, dimred::project(m.family.pipeline, x));
    REQUIRE(fam.size() == r.family->outputs.size());
    for (std::size_t i = 0; i < fam.size(); ++i) CHECK(r.family->outputs[i] == doctest::Approx(fam[i]));
    const Stage& sol = *m.version_stage("Solaris");
    const Vector ver = oracle::forward(sol.net, dimred::project(sol.pipeline, x));
    for (std::size_t i = 0; i < ver.size(); ++i) CHECK(r.version->outputs[i] == doctest::Approx(ver[i]));
    CHECK(r.family->decided == nn::argmax(fam));

    const auto text = format_report(r);
    CHECK(text.find("Relevant analysis") != std::string::npos);
    CHECK(text.find("Solaris") != std::string::npos);
    const auto j = report_json(r);
    CHECK(j.find("\"decision\"") != std::string::npos);
  }
  SUBCASE("a router stops at the gate") {
    const auto r = classify_host(m, fpdb::parse_response(read_fixture("cisco.response")));
    CHECK_FALSE(r.relevant);
    CHECK_FALSE(r.family);
    CHECK_FALSE(r.version);
    CHECK(r.decision == "irrelevant");
  }
  SUBCASE("Windows has no version net") {
    const auto& db = combined_db();
    for (const auto& rule : db) {
      if (rule.name != "Microsoft Windows Vista Business") continue;
      const auto r = classify_host(m, datagen::sample_response(rule, 5));
      CHECK(r.decision == "windows unknown");
      CHECK_FALSE(r.version);
    }
  }
  SUBCASE("the gate threshold is monotone") {
    const auto resp = fpdb::parse_response(read_fixture("solaris9.response"));
    auto copy = m;
    const double g = classify_host(m, resp).relevance;
    copy.relevance_threshold = g;
    CHECK(classify_host(copy, resp).relevant);
    copy.relevance_threshold = std::nextafter(g, 2.0);
    CHECK_FALSE(classify_host(copy, resp).relevant);
    copy.relevance_threshold = -2.0;
    CHECK(classify_host(copy, fpdb::parse_response(read_fixture("cisco.response"))).relevant);
  }
  SUBCASE("schema and width checks") {
    const auto other = encoder::parse_schema("stacksense-schema other 1\nT1 DF flag Y\n");
    CHECK_THROWS_AS(classify_host(m, {}, other), SchemaMismatch);
    CHECK_THROWS_AS(classify_vector(m, Vector(3, 0.0)), DimensionMismatch);
  }
}

TEST_CASE("endpoint refinement") {
  const auto& m = model();
  REQUIRE(m.rpc);
  CHECK(m.rpc->versions == std::vector<std::string>{"Windows 2000", "Windows 2003", "Windows NT4", "Windows XP"});
  CHECK(m.rpc->editions.size() == 4);
  CHECK(m.rpc->service_packs == std::vector<std::string>{"0", "1", "2", "4", "6a"});

  const auto r = classify_endpoints(m, encoder::parse_endpoint_map(read_fixture("w2k-server-sp1.endpoints")));
  CHECK(r.version == "Windows 2000");
  CHECK_FALSE(r.low_confidence);
  CHECK(r.versions.size() == 4);
  CHECK(r.decision().rfind("Windows 2000", 0) == 0);
  CHECK(format_rpc_report(r).find("Windows 2000") != std::string::npos);

  const auto exact = classify_endpoints(m, encoder::parse_endpoint_map(read_fixture("w2k-pro-sp0.endpoints")));
  CHECK(exact.version == "Windows 2000");

  CHECK(classify_endpoints(m, {}).low_confidence);

  auto bare = m;
  bare.rpc.reset();
  CHECK_THROWS_AS(classify_endpoints(bare, {}), InvalidArgument);

  CHECK_THROWS_AS(parse_rpc_corpus("stacksense-rpc-corpus 1\nHost A | B\nEnd\n"), ParseError);
  CHECK_THROWS_AS(parse_rpc_corpus("stacksense-rpc-corpus 1\nHost A | B | 1\n"), ParseError);
  CHECK_THROWS_AS(parse_rpc_corpus("nope\n"), ParseError);
}

TEST_CASE("model files") {
  const auto& m = model();
  const std::string bytes = serialize_model(m);
  CHECK(deserialize_model(bytes) == m);
  CHECK(serialize_model(deserialize_model(bytes)) == bytes);

  const auto path = temp_file("model.ssm");
  save_model(m, path.string());
  CHECK(load_model(path.string()) == m);
  CHECK(load_model(path.string(), m.schema.id()) == m);
  CHECK_THROWS_AS(load_model(path.string(), "other/1/0000"), SchemaMismatch);

  write_file(path, bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(load_model(path.string()), CorruptModel);

  std::string flipped = bytes;
  flipped[flipped.size() - 10] ^= 1;
  CHECK_THROWS_AS(deserialize_model(flipped), CorruptModel);
  CHECK_THROWS_AS(deserialize_model(""), CorruptModel);
  CHECK_THROWS_AS(deserialize_model("hello\n"), CorruptModel);

  const auto space = bytes.find(' ');
  std::string future = bytes;
  future.replace(space + 1, bytes.find(' ', space + 1) - space - 1, "99");
  CHECK_THROWS_AS(deserialize_model(future), VersionMismatch);

  CHECK_THROWS_AS(load_model((path.string() + ".missing")), IoError);
  std::filesystem::remove(path);

  CHECK(reduce_report(m).find("family") != std::string::npos);
  CHECK(topology_table(trained().traces).find("relevance") != std::string::npos);
}

TEST_CASE("training failures") {
  SUBCASE("dataset encoded with another schema") {
    auto data = dataset();
    data.schema_id = "other/1/0";
    CHECK_THROWS_AS(train_hierarchy(data, encoder::reference_schema(), reference_labels(), HierarchyConfig{}),
                    SchemaMismatch);
  }
  SUBCASE("a stage with nothing to learn names itself") {
    const auto db = fpdb::parse_db(read_fixture("irrelevant.db")).rules;
    const auto data = datagen::generate_dataset(db, datagen::reference_distribution(), reference_labels(),
                                                encoder::reference_schema(), {200, 3, 1});
    HierarchyConfig cfg;
    cfg.training.max_generations = 5;
    try {
      train_hierarchy(data, encoder::reference_schema(), reference_labels(), cfg);
      FAIL("expected StageError");
    } catch (const StageError& e) {
      CHECK(e.net() == "family");
      CHECK(e.cause() != nullptr);
    }
  }
  SUBCASE("bad configs") {
    HierarchyConfig cfg;
    cfg.holdout_fraction = 1.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = HierarchyConfig{};
    cfg.reduction.retain = 0.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  }
}

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "stacksense/error.hpp"
#include "stacksense/hierarchy.hpp"
#include "stacksense/rng.hpp"
#include "text.hpp"

namespace stacksense::hierarchy {

namespace {

StageReport run_stage(const Stage& stage, std::span<const double> x) {
  StageReport r;
  r.net = stage.name;
  r.labels = stage.labels;
  r.outputs = stage.outputs(x);
  r.decided = nn::argmax(r.outputs);
  return r;
}

}  // namespace

Report classify_vector(const HierarchicalModel& model, std::span<const double> x) {
  if (x.size() != model.schema.dim()) throw DimensionMismatch("encoded response", model.schema.dim(), x.size());
  Report r;
  r.relevance = model.relevance.outputs(x)[0];
  r.relevant = r.relevance >= model.relevance_threshold;
  if (!r.relevant) {
    r.decision = "irrelevant";
    return r;
  }
  r.family = run_stage(model.family, x);
  const std::string& family = r.family->labels[r.family->decided];
  r.decision = text::to_lower(family);
  if (const Stage* v = model.version_stage(family)) {
    r.version = run_stage(*v, x);
    r.decision += " " + r.version->labels[r.version->decided];
  } else {
    r.decision += " unknown";
  }
  return r;
}

Report classify_host(const HierarchicalModel& model, const fpdb::ProbeResponse& response) {
  std::vector<std::string> diagnostics;
  const Vector x = encoder::encode(response, model.schema, &diagnostics);
  Report r = classify_vector(model, x);
  r.diagnostics = std::move(diagnostics);
  return r;
}

Report classify_host(const HierarchicalModel& model, const fpdb::ProbeResponse& response,
                     const encoder::EncodingSchema& schema) {
  if (schema.id() != model.schema.id())
    throw SchemaMismatch("model expects schema " + model.schema.id() + ", got " + schema.id());
  return classify_host(model, response);
}

Evaluation evaluate(const HierarchicalModel& model, const datagen::LabeledDataset& data,
                    std::span<const std::size_t> rows) {
  Evaluation e;
  std::size_t rel_hits = 0, fam_hits = 0, ver_hits = 0;
  for (auto row : rows) {
    const auto x = data.inputs.row(row);
    const auto& truth = data.patterns.at(row).labels;
    ++e.patterns;
    if ((model.relevance.outputs(x)[0] >= model.relevance_threshold) == truth.relevant) ++rel_hits;
    if (!truth.relevant) continue;
    ++e.family_patterns;
    const auto fam = run_stage(model.family, x);
    if (text::iequals(fam.labels[fam.decided], truth.family)) ++fam_hits;
    const Stage* v = model.version_stage(truth.family);
    if (!v || std::find(v->labels.begin(), v->labels.end(), truth.version) == v->labels.end()) continue;
    ++e.version_patterns;
    const auto ver = run_stage(*v, x);
    if (ver.labels[ver.decided] == truth.version) ++ver_hits;
  }
  auto ratio = [](std::size_t a, std::size_t b) {
    return b ? static_cast<double>(a) / static_cast<double>(b) : std::nan("");
  };
  e.relevance_accuracy = ratio(rel_hits, e.patterns);
  e.family_accuracy = ratio(fam_hits, e.family_patterns);
  e.version_accuracy = ratio(ver_hits, e.version_patterns);
  return e;
}

// ---- DCE-RPC ----

std::vector<RpcHost> parse_rpc_corpus(std::string_view text) {
  const auto all = text::lines(text);
  std::size_t i = 0;
  while (i < all.size() && text::trim(all[i]).empty()) ++i;
  if (i == all.size()) throw ParseError("rpc corpus is empty");
  if (text::trim(all[i]) != "stacksense-rpc-corpus 1") throw ParseError("rpc corpus: expected 'stacksense-rpc-corpus 1'");
  std::vector<RpcHost> hosts;
  std::optional<RpcHost> current;
  std::string block;
  std::size_t block_line = 0;
  for (++i; i < all.size(); ++i) {
    const auto line = text::trim(all[i]);
    const auto where = "rpc corpus line " + std::to_string(i + 1) + ": ";
    if (!current) {
      if (line.empty() || line.front() == '#') continue;
      if (!text::starts_with_word(line, "Host")) throw ParseError(where + "expected 'Host <version> | <edition> | <sp>'");
      const auto parts = text::split(line.substr(4), '|');
      if (parts.size() != 3) throw ParseError(where + "expected 'Host <version> | <edition> | <sp>'");
      current = RpcHost{std::string(text::trim(parts[0])), std::string(text::trim(parts[1])),
                        std::string(text::trim(parts[2])), {}};
      if (current->version.empty() || current->edition.empty() || current->service_pack.empty())
        throw ParseError(where + "empty version, edition or service pack");
      block.clear();
      block_line = i + 1;
      continue;
    }
    if (line == "End") {
      try {
        current->endpoints = encoder::parse_endpoint_map(block);
      } catch (const ParseError& e) {
        throw ParseError("rpc corpus block at line " + std::to_string(block_line) + ": " + e.what());
      }
      hosts.push_back(std::move(*current));
      current.reset();
      continue;
    }
    block += all[i];
    block += '\n';
  }
  if (current) throw ParseError("rpc corpus: block at line " + std::to_string(block_line) + " has no End");
  if (hosts.empty()) throw ParseError("rpc corpus has no hosts");
  return hosts;
}

RpcTrainConfig::RpcTrainConfig() {
  training.rate = 0.01;
  training.momentum = 0.5;
  training.error_threshold = 1e-2;
  training.max_generations = 300;
}

namespace {

std::vector<std::string> sorted_unique(const std::vector<RpcHost>& corpus, std::string RpcHost::*field) {
  std::set<std::string> s;
  for (const auto& h : corpus) s.insert(h.*field);
  return {s.begin(), s.end()};
}

std::size_t index_of(const std::vector<std::string>& v, const std::string& s) {
  return static_cast<std::size_t>(std::find(v.begin(), v.end(), s) - v.begin());
}

// A host as a scan might see it: some endpoint lines missing and maybe a
// program the inventory has never heard of.
encoder::EndpointMap perturb(const encoder::EndpointMap& map, const RpcTrainConfig& cfg, Rng& rng) {
  encoder::EndpointMap out;
  for (const auto& e : map.entries)
    if (rng.uniform() >= cfg.drop_probability) out.entries.push_back(e);
  if (rng.uniform() < cfg.unknown_probability) {
    char uuid[37];
    const auto a = rng.next(), b = rng.next();
    std::snprintf(uuid, sizeof uuid, "%08X-%04X-%04X-%04X-%012llX", static_cast<unsigned>(a >> 32),
                  static_cast<unsigned>((a >> 16) & 0xFFFF), static_cast<unsigned>(a & 0xFFFF),
                  static_cast<unsigned>(b >> 48), static_cast<unsigned long long>(b & 0xFFFFFFFFFFFFULL));
    out.entries.push_back({uuid, "", "ncacn_ip_tcp", ""});
  }
  return out;
}

}  // namespace

RpcStage train_rpc(const std::vector<RpcHost>& corpus, const encoder::RpcSchema& schema, const RpcTrainConfig& config,
                   NetTrace* trace) {
  if (corpus.empty()) throw InvalidArgument("rpc corpus is empty");
  if (config.variants_per_host == 0) throw InvalidArgument("need at least one variant per host");
  config.training.validate();
  RpcStage stage;
  stage.schema = schema;
  stage.versions = sorted_unique(corpus, &RpcHost::version);
  stage.editions = sorted_unique(corpus, &RpcHost::edition);
  stage.service_packs = sorted_unique(corpus, &RpcHost::service_pack);
  const std::size_t nv = stage.versions.size(), ne = stage.editions.size(), ns = stage.service_packs.size();

  nn::Dataset ds;
  for (std::size_t h = 0; h < corpus.size(); ++h) {
    Vector t(nv + ne + ns, -1.0);
    t[index_of(stage.versions, corpus[h].version)] = 1.0;
    t[nv + index_of(stage.editions, corpus[h].edition)] = 1.0;
    t[nv + ne + index_of(stage.service_packs, corpus[h].service_pack)] = 1.0;
    for (std::size_t v = 0; v < config.variants_per_host; ++v) {
      Rng rng(derive_seed(config.seed, h * config.variants_per_host + v, 3));
      // The first variant of every host is the listing as recorded.
      const auto map = v == 0 ? corpus[h].endpoints : perturb(corpus[h].endpoints, config, rng);
      ds.inputs.push_back(encoder::encode_endpoints(map, schema));
      ds.targets.push_back(t);
    }
  }

  const std::size_t hidden = config.hidden ? config.hidden : std::max<std::size_t>(4, schema.dim() / 10);
  nn::LayeredNet net({schema.dim(), hidden, nv + ne + ns}, {nn::Activation::tanh, nn::Activation::tanh});
  net.randomize(derive_seed(config.seed, 0, 1), 0.5 / std::sqrt(static_cast<double>(schema.dim())));
  nn::TrainingConfig tc = config.training;
  tc.seed = derive_seed(config.seed, 0, 2);
  auto result = nn::train(std::move(net), ds, tc);
  stage.net = std::move(result.net);

  if (trace) {
    *trace = NetTrace{};
    trace->net = std::string(kRpcNet);
    trace->raw_inputs = trace->kept_inputs = trace->reduced_inputs = schema.dim();
    trace->hidden = hidden;
    trace->outputs = nv + ne + ns;
    trace->train_patterns = ds.size();
    trace->initial_error = result.initial_error;
    trace->reached_threshold = result.reached_threshold;
    trace->errors = std::move(result.trace);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const Vector y = nn::evaluate(stage.net, ds.inputs[i]);
      auto group_ok = [&](std::size_t lo, std::size_t n) {
        const auto span = std::span<const double>(y).subspan(lo, n);
        const auto tspan = std::span<const double>(ds.targets[i]).subspan(lo, n);
        return nn::argmax(span) == nn::argmax(tspan);
      };
      if (group_ok(0, nv) && group_ok(nv, ne) && group_ok(nv + ne, ns)) ++hits;
    }
    trace->train_accuracy = static_cast<double>(hits) / static_cast<double>(ds.size());
    trace->heldout_accuracy = std::nan("");
  }
  return stage;
}

std::string RpcReport::decision() const { return version + " " + edition + " sp" + service_pack; }

RpcReport classify_endpoints(const HierarchicalModel& model, const encoder::EndpointMap& map) {
  if (!model.rpc) throw InvalidArgument("model has no DCE-RPC net");
  const RpcStage& s = *model.rpc;
  const Vector y = nn::evaluate(s.net, encoder::encode_endpoints(map, s.schema));
  RpcReport r;
  std::size_t base = 0;
  auto group = [&](const std::vector<std::string>& labels, std::vector<std::pair<std::string, double>>& out,
                   std::string& decided) {
    for (std::size_t i = 0; i < labels.size(); ++i) out.emplace_back(labels[i], y[base + i]);
    const auto best = nn::argmax(std::span<const double>(y).subspan(base, labels.size()));
    decided = labels[best];
    if (!(y[base + best] > 0.0)) r.low_confidence = true;
    base += labels.size();
  };
  group(s.versions, r.versions, r.version);
  group(s.editions, r.editions, r.edition);
  group(s.service_packs, r.service_packs, r.service_pack);
  if (map.entries.empty()) r.low_confidence = true;
  return r;
}

}  // namespace stacksense::hierarchy

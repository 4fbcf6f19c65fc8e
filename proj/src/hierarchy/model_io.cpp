#include <cstdio>

#include <json.hpp>

#include "stacksense/error.hpp"
#include "stacksense/hierarchy.hpp"
#include "text.hpp"

namespace stacksense::hierarchy {

using nlohmann::json;

namespace {

constexpr std::string_view kModelMagic = "stacksense-model";
constexpr int kModelVersion = 1;

json to_json(const Matrix& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data().begin(), m.data().end())}};
}

Matrix matrix_from(const json& j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != m.rows() * m.cols()) throw CorruptModel("matrix data does not match its shape");
  std::copy(data.begin(), data.end(), m.data().begin());
  return m;
}

json to_json(const nn::LayeredNet& net) {
  json acts = json::array();
  for (auto a : net.activations()) acts.push_back(std::string(nn::to_string(a)));
  json weights = json::array();
  for (const auto& w : net.all_weights()) weights.push_back(to_json(w));
  return json{{"activations", acts}, {"weights", weights}};
}

nn::LayeredNet net_from(const json& j) {
  std::vector<nn::Activation> acts;
  for (const auto& a : j.at("activations")) acts.push_back(nn::activation_from_string(a.get<std::string>()));
  std::vector<Matrix> weights;
  for (const auto& w : j.at("weights")) weights.push_back(matrix_from(w));
  return nn::LayeredNet(std::move(weights), std::move(acts));
}

json to_json(const dimred::ReductionPipeline& p) {
  return json{{"means", p.means},   {"stds", p.stds},          {"kept", p.kept},
              {"basis", to_json(p.basis)}, {"eigenvalues", p.eigenvalues}, {"retain", p.retain}};
}

dimred::ReductionPipeline pipeline_from(const json& j) {
  dimred::ReductionPipeline p;
  p.means = j.at("means").get<Vector>();
  p.stds = j.at("stds").get<Vector>();
  p.kept = j.at("kept").get<std::vector<std::size_t>>();
  p.basis = matrix_from(j.at("basis"));
  p.eigenvalues = j.at("eigenvalues").get<Vector>();
  p.retain = j.at("retain").get<double>();
  if (p.stds.size() != p.means.size() || p.basis.cols() != p.kept.size())
    throw CorruptModel("reduction pipeline shapes disagree");
  for (auto k : p.kept)
    if (k >= p.means.size()) throw CorruptModel("reduction pipeline keeps a column out of range");
  return p;
}

json to_json(const Stage& s) {
  return json{{"name", s.name}, {"labels", s.labels}, {"pipeline", to_json(s.pipeline)}, {"net", to_json(s.net)}};
}

Stage stage_from(const json& j) {
  Stage s;
  s.name = j.at("name").get<std::string>();
  s.labels = j.at("labels").get<std::vector<std::string>>();
  s.pipeline = pipeline_from(j.at("pipeline"));
  s.net = net_from(j.at("net"));
  if (s.net.input_dim() != s.pipeline.output_dim())
    throw CorruptModel("net '" + s.name + "' input size differs from its pipeline output");
  return s;
}

std::string hash_hex(std::string_view data) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(text::fnv1a64(data)));
  return buf;
}

}  // namespace

std::string serialize_model(const HierarchicalModel& model) {
  json versions = json::object();
  for (const auto& [family, stage] : model.versions) versions[family] = to_json(stage);
  json j{
      {"schema_id", model.schema.id()},
      {"schema", encoder::print_schema(model.schema)},
      {"labels", print_labels(model.labels)},
      {"relevance_threshold", model.relevance_threshold},
      {"relevance", to_json(model.relevance)},
      {"family", to_json(model.family)},
      {"versions", versions},
      {"rpc", nullptr},
  };
  if (model.rpc) {
    j["rpc"] = json{{"inventory", encoder::print_rpc_inventory(model.rpc->schema)},
                    {"inventory_id", model.rpc->schema.id()},
                    {"net", to_json(model.rpc->net)},
                    {"versions", model.rpc->versions},
                    {"editions", model.rpc->editions},
                    {"service_packs", model.rpc->service_packs}};
  }
  const std::string body = j.dump(1) + "\n";
  return std::string(kModelMagic) + " " + std::to_string(kModelVersion) + " " + std::to_string(body.size()) + " " +
         hash_hex(body) + "\n" + body;
}

HierarchicalModel deserialize_model(std::string_view bytes) {
  const auto nl = bytes.find('\n');
  if (nl == std::string_view::npos) throw CorruptModel("model file has no header line");
  const auto header = text::split_ws(bytes.substr(0, nl));
  if (header.size() != 4 || header[0] != kModelMagic) throw CorruptModel("not a stacksense model file");
  const auto version = text::parse_dec(header[1]);
  if (!version) throw CorruptModel("model header has a bad version");
  if (*version != kModelVersion)
    throw VersionMismatch("model format version " + std::string(header[1]) + ", this build reads " +
                          std::to_string(kModelVersion));
  const auto length = text::parse_dec(header[2]);
  const auto body = bytes.substr(nl + 1);
  if (!length || body.size() != *length)
    throw CorruptModel("model body is " + std::to_string(body.size()) + " bytes, header says " + std::string(header[2]));
  if (hash_hex(body) != header[3]) throw CorruptModel("model checksum does not match");

  try {
    const json j = json::parse(body);
    HierarchicalModel m;
    m.schema = encoder::parse_schema(j.at("schema").get<std::string>());
    if (m.schema.id() != j.at("schema_id").get<std::string>()) throw CorruptModel("embedded schema does not match its id");
    m.labels = parse_labels(j.at("labels").get<std::string>());
    m.relevance_threshold = j.at("relevance_threshold").get<double>();
    m.relevance = stage_from(j.at("relevance"));
    m.family = stage_from(j.at("family"));
    for (const auto& [family, stage] : j.at("versions").items()) m.versions.emplace(family, stage_from(stage));
    for (const Stage* s : {&m.relevance, &m.family}) {
      if (s->pipeline.input_dim() != m.schema.dim()) throw CorruptModel("net '" + s->name + "' does not fit the schema");
    }
    if (m.relevance.net.output_dim() != 1) throw CorruptModel("relevance net must have one output");
    if (m.family.net.output_dim() != m.labels.families.size())
      throw CorruptModel("family net output size differs from the family list");
    for (const auto& [family, s] : m.versions)
      if (s.pipeline.input_dim() != m.schema.dim() || s.net.output_dim() != s.labels.size())
        throw CorruptModel("version net for " + family + " has inconsistent sizes");
    if (const auto& r = j.at("rpc"); !r.is_null()) {
      RpcStage rpc;
      rpc.schema = encoder::parse_rpc_inventory(r.at("inventory").get<std::string>());
      if (rpc.schema.id() != r.at("inventory_id").get<std::string>())
        throw CorruptModel("embedded rpc inventory does not match its id");
      rpc.net = net_from(r.at("net"));
      rpc.versions = r.at("versions").get<std::vector<std::string>>();
      rpc.editions = r.at("editions").get<std::vector<std::string>>();
      rpc.service_packs = r.at("service_packs").get<std::vector<std::string>>();
      if (rpc.net.input_dim() != rpc.schema.dim() ||
          rpc.net.output_dim() != rpc.versions.size() + rpc.editions.size() + rpc.service_packs.size())
        throw CorruptModel("rpc net has inconsistent sizes");
      m.rpc = std::move(rpc);
    }
    return m;
  } catch (const CorruptModel&) {
    throw;
  } catch (const std::exception& e) {
    throw CorruptModel(std::string("model body is malformed: ") + e.what());
  }
}

void save_model(const HierarchicalModel& model, const std::string& path) {
  text::write_file(path, serialize_model(model));
}

HierarchicalModel load_model(const std::string& path) { return deserialize_model(text::read_file(path)); }

HierarchicalModel load_model(const std::string& path, std::string_view expected_schema_id) {
  HierarchicalModel m = load_model(path);
  if (m.schema.id() != expected_schema_id)
    throw SchemaMismatch("model was trained with schema " + m.schema.id() + ", expected " +
                         std::string(expected_schema_id));
  return m;
}

}  // namespace stacksense::hierarchy

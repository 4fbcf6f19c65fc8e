#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stacksense/datagen.hpp"
#include "stacksense/dimred.hpp"
#include "stacksense/encoder.hpp"
#include "stacksense/fpdb.hpp"
#include "stacksense/labels.hpp"
#include "stacksense/nn.hpp"

namespace stacksense::hierarchy {

inline constexpr std::string_view kRelevanceNet = "relevance";
inline constexpr std::string_view kFamilyNet = "family";
inline constexpr std::string_view kRpcNet = "rpc";
// "version:Linux" and so on.
std::string version_net_name(std::string_view family);

// One reduction pipeline plus the net fed by it.
struct Stage {
  std::string name;
  dimred::ReductionPipeline pipeline;
  nn::LayeredNet net;
  std::vector<std::string> labels;  // one per output unit

  Vector outputs(std::span<const double> raw) const;
  bool operator==(const Stage&) const = default;
};

struct RpcStage {
  encoder::RpcSchema schema;
  nn::LayeredNet net;
  // Output units: versions, then editions, then service packs.
  std::vector<std::string> versions;
  std::vector<std::string> editions;
  std::vector<std::string> service_packs;
  bool operator==(const RpcStage&) const = default;
};

struct HierarchicalModel {
  encoder::EncodingSchema schema;
  LabelConfig labels;
  double relevance_threshold = 0.0;
  Stage relevance;
  Stage family;
  std::map<std::string, Stage> versions;  // keyed by canonical family name
  std::optional<RpcStage> rpc;

  const Stage* version_stage(std::string_view family) const;
  bool operator==(const HierarchicalModel&) const = default;
};

// ---- training ----

struct Topology {
  double hidden_fraction = 0.3;  // of the reduced input size
  std::size_t min_hidden = 2;
  std::map<std::string, std::size_t> hidden;  // per-net overrides

  std::size_t hidden_for(const std::string& net, std::size_t inputs) const;
  // Hidden sizes the original nets used.
  static Topology original_sizes();
};

struct HierarchyConfig {
  nn::TrainingConfig training;
  dimred::PipelineOptions reduction;
  Topology topology;
  double holdout_fraction = 0.2;
  double relevance_threshold = 0.0;
  std::uint64_t seed = 1;
  bool parallel = true;

  HierarchyConfig();
  void validate() const;
};

struct NetTrace {
  std::string net;
  std::size_t raw_inputs = 0;
  std::size_t kept_inputs = 0;
  std::size_t reduced_inputs = 0;
  std::size_t hidden = 0;
  std::size_t outputs = 0;
  std::size_t train_patterns = 0;
  std::size_t heldout_patterns = 0;
  std::vector<double> errors;
  double initial_error = 0.0;
  bool reached_threshold = false;
  double train_accuracy = 0.0;
  double heldout_accuracy = 0.0;  // NaN without held-out patterns
};

struct TrainedHierarchy {
  HierarchicalModel model;
  std::vector<NetTrace> traces;
};

// Rows [0, train) train and the rest are held out, with
// train = N - floor(holdout_fraction * N). Pipelines only see training rows.
std::size_t training_rows(std::size_t n, double holdout_fraction);

TrainedHierarchy train_hierarchy(const datagen::LabeledDataset& data, const encoder::EncodingSchema& schema,
                                 const LabelConfig& labels, const HierarchyConfig& config);

// ---- classification ----

struct StageReport {
  std::string net;
  std::vector<std::string> labels;
  Vector outputs;
  std::size_t decided = 0;
};

struct Report {
  double relevance = 0.0;
  bool relevant = false;
  std::optional<StageReport> family;
  std::optional<StageReport> version;
  std::string decision;  // e.g. "solaris 9", "windows unknown", "irrelevant"
  std::vector<std::string> diagnostics;
};

Report classify_vector(const HierarchicalModel& model, std::span<const double> x);
Report classify_host(const HierarchicalModel& model, const fpdb::ProbeResponse& response);
// Also checks that `schema` is the one the model was trained with.
Report classify_host(const HierarchicalModel& model, const fpdb::ProbeResponse& response,
                     const encoder::EncodingSchema& schema);

struct Evaluation {
  std::size_t patterns = 0;
  double relevance_accuracy = 0.0;
  std::size_t family_patterns = 0;
  double family_accuracy = 0.0;
  std::size_t version_patterns = 0;
  double version_accuracy = 0.0;
};

// Each stage is scored on the rows it is responsible for: relevance on all,
// family on relevant rows, versions on rows of families with a version net
// whose group the net knows.
Evaluation evaluate(const HierarchicalModel& model, const datagen::LabeledDataset& data,
                    std::span<const std::size_t> rows);

// ---- DCE-RPC endpoint refinement ----

struct RpcHost {
  std::string version;
  std::string edition;
  std::string service_pack;
  encoder::EndpointMap endpoints;
};

// "stacksense-rpc-corpus 1", then blocks "Host <version> | <edition> | <sp>",
// listing lines, "End".
std::vector<RpcHost> parse_rpc_corpus(std::string_view text);

struct RpcTrainConfig {
  std::size_t variants_per_host = 40;
  double drop_probability = 0.1;     // per endpoint line
  double unknown_probability = 0.2;  // chance of one extra unknown program
  std::size_t hidden = 0;            // 0: max(4, dim / 10)
  nn::TrainingConfig training;
  std::uint64_t seed = 1;

  RpcTrainConfig();
};

RpcStage train_rpc(const std::vector<RpcHost>& corpus, const encoder::RpcSchema& schema,
                   const RpcTrainConfig& config, NetTrace* trace = nullptr);

struct RpcReport {
  std::vector<std::pair<std::string, double>> versions;
  std::vector<std::pair<std::string, double>> editions;
  std::vector<std::pair<std::string, double>> service_packs;
  std::string version;
  std::string edition;
  std::string service_pack;
  bool low_confidence = false;  // empty map, or some group has no positive output

  std::string decision() const;  // "Windows 2000 Server sp1"
};

RpcReport classify_endpoints(const HierarchicalModel& model, const encoder::EndpointMap& map);

// ---- persistence ----

std::string serialize_model(const HierarchicalModel& model);
HierarchicalModel deserialize_model(std::string_view bytes);
void save_model(const HierarchicalModel& model, const std::string& path);
HierarchicalModel load_model(const std::string& path);
// Throws SchemaMismatch unless the model was trained on `expected_schema_id`.
HierarchicalModel load_model(const std::string& path, std::string_view expected_schema_id);

// ---- reports ----

std::string format_report(const Report& report);
std::string format_rpc_report(const RpcReport& report);
std::string report_json(const Report& report);
std::string rpc_report_json(const RpcReport& report);
// Topology and the input units each net kept after reduction.
std::string reduce_report(const HierarchicalModel& model);
// Our layer sizes next to the original ones, where the original has a row.
std::string topology_table(const std::vector<NetTrace>& traces);

}  // namespace stacksense::hierarchy

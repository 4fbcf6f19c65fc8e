#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <optional>
#include <set>

#include "stacksense/error.hpp"
#include "stacksense/hierarchy.hpp"
#include "stacksense/rng.hpp"
#include "text.hpp"

namespace stacksense::hierarchy {

std::string version_net_name(std::string_view family) { return "version:" + std::string(family); }

Vector Stage::outputs(std::span<const double> raw) const {
  const Vector z = dimred::project(pipeline, raw);
  return nn::evaluate(net, z);
}

const Stage* HierarchicalModel::version_stage(std::string_view family) const {
  for (const auto& [name, stage] : versions)
    if (text::iequals(name, family)) return &stage;
  return nullptr;
}

std::size_t Topology::hidden_for(const std::string& net, std::size_t inputs) const {
  if (const auto it = hidden.find(net); it != hidden.end()) return it->second;
  const auto h = static_cast<std::size_t>(std::lround(hidden_fraction * static_cast<double>(inputs)));
  return std::max(min_hidden, h);
}

Topology Topology::original_sizes() {
  Topology t;
  t.hidden = {{std::string(kRelevanceNet), 20},
              {std::string(kFamilyNet), 20},
              {version_net_name("Linux"), 18},
              {version_net_name("Solaris"), 7},
              {version_net_name("OpenBSD"), 4}};
  return t;
}

HierarchyConfig::HierarchyConfig() {
  training.rate = 0.002;
  training.momentum = 0.5;
  training.error_threshold = 1e-3;
  training.max_generations = 200;
  training.mode = nn::TrainingMode::sequential;
  training.shuffle = true;
}

void HierarchyConfig::validate() const {
  training.validate();
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) throw InvalidArgument("holdout fraction must lie in [0, 1)");
  if (!(reduction.retain > 0.0 && reduction.retain <= 1.0)) throw InvalidArgument("retain fraction must lie in (0, 1]");
  if (!(topology.hidden_fraction > 0.0)) throw InvalidArgument("hidden fraction must be positive");
  if (topology.min_hidden == 0) throw InvalidArgument("nets need at least one hidden unit");
  if (!std::isfinite(relevance_threshold)) throw InvalidArgument("relevance threshold must be finite");
}

std::size_t training_rows(std::size_t n, double holdout_fraction) {
  const auto held = static_cast<std::size_t>(std::floor(holdout_fraction * static_cast<double>(n)));
  return n - std::min(n, held);
}

namespace {

// One net to fit: which rows it sees and the class of each.
struct Job {
  std::string name;
  std::vector<std::string> labels;
  bool binary = false;  // single output, class 1 means +1
  std::vector<std::size_t> train_rows, held_rows;
  std::vector<std::size_t> train_class, held_class;
  bool optional = false;  // skip instead of failing when nothing is left to learn
  std::uint64_t seed = 0;
};

struct JobResult {
  std::optional<Stage> stage;
  NetTrace trace;
};

Vector target_for(const Job& job, std::size_t cls) {
  if (job.binary) return {cls == 1 ? 1.0 : -1.0};
  Vector t(job.labels.size(), -1.0);
  t[cls] = 1.0;
  return t;
}

bool correct(const Job& job, const Vector& y, std::size_t cls, double threshold) {
  if (job.binary) return (y[0] >= threshold) == (cls == 1);
  return nn::argmax(y) == cls;
}

double accuracy(const Job& job, const Stage& stage, const Matrix& inputs, const std::vector<std::size_t>& rows,
                const std::vector<std::size_t>& classes, double threshold) {
  if (rows.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t hits = 0;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (correct(job, stage.outputs(inputs.row(rows[i])), classes[i], threshold)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(rows.size());
}

Job make_job(std::string name, std::vector<std::string> labels, bool binary) {
  Job j;
  j.name = std::move(name);
  j.labels = std::move(labels);
  j.binary = binary;
  return j;
}

JobResult run_job(const Job& job, const Matrix& inputs, const HierarchyConfig& config) {
  JobResult r;
  r.trace.net = job.name;
  r.trace.raw_inputs = inputs.cols();
  r.trace.train_patterns = job.train_rows.size();
  r.trace.heldout_patterns = job.held_rows.size();
  r.trace.heldout_accuracy = std::numeric_limits<double>::quiet_NaN();
  if (job.train_rows.size() < 2) {
    if (job.optional) return r;
    throw InvalidArgument("needs at least 2 training patterns, got " + std::to_string(job.train_rows.size()));
  }

  Matrix x(job.train_rows.size(), inputs.cols());
  for (std::size_t i = 0; i < job.train_rows.size(); ++i) {
    const auto src = inputs.row(job.train_rows[i]);
    std::copy(src.begin(), src.end(), x.row(i).begin());
  }
  Stage stage;
  stage.name = job.name;
  stage.labels = job.labels;
  stage.pipeline = dimred::fit_pipeline(x, config.reduction);
  const std::size_t p = stage.pipeline.output_dim();
  r.trace.kept_inputs = stage.pipeline.kept.size();
  r.trace.reduced_inputs = p;
  if (p == 0) {
    if (job.optional) return r;
    throw InvalidArgument("no input varies across the training patterns");
  }

  nn::Dataset ds;
  const Matrix z = dimred::project_rows(stage.pipeline, x);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const auto row = z.row(i);
    ds.inputs.emplace_back(row.begin(), row.end());
    ds.targets.push_back(target_for(job, job.train_class[i]));
  }

  const std::size_t hidden = config.topology.hidden_for(job.name, p);
  const std::size_t out = job.binary ? 1 : job.labels.size();
  nn::LayeredNet net({p, hidden, out}, {nn::Activation::tanh, nn::Activation::tanh});
  // Projected coordinates have variance lambda_i; keep the first layer out of
  // saturation by scaling the initial weights to the largest one.
  const double spread = std::sqrt(std::max(1.0, stage.pipeline.eigenvalues.front()));
  net.randomize(derive_seed(job.seed, 0, 1), 0.5 / spread);
  nn::TrainingConfig tc = config.training;
  tc.seed = derive_seed(job.seed, 0, 2);
  auto result = nn::train(std::move(net), ds, tc);

  stage.net = std::move(result.net);
  r.trace.hidden = hidden;
  r.trace.outputs = out;
  r.trace.errors = std::move(result.trace);
  r.trace.initial_error = result.initial_error;
  r.trace.reached_threshold = result.reached_threshold;
  r.trace.train_accuracy = accuracy(job, stage, inputs, job.train_rows, job.train_class, config.relevance_threshold);
  r.trace.heldout_accuracy = accuracy(job, stage, inputs, job.held_rows, job.held_class, config.relevance_threshold);
  r.stage = std::move(stage);
  return r;
}

}  // namespace

TrainedHierarchy train_hierarchy(const datagen::LabeledDataset& data, const encoder::EncodingSchema& schema,
                                 const LabelConfig& labels, const HierarchyConfig& config) {
  config.validate();
  labels.validate();
  if (data.schema_id != schema.id())
    throw SchemaMismatch("dataset was encoded with " + data.schema_id + ", expected " + schema.id());
  if (data.inputs.cols() != schema.dim()) throw DimensionMismatch("dataset width", schema.dim(), data.inputs.cols());
  const std::size_t n = data.size();
  const std::size_t n_train = training_rows(n, config.holdout_fraction);

  std::vector<Job> jobs;
  auto add_row = [&](Job& job, std::size_t row, std::size_t cls) {
    if (row < n_train) {
      job.train_rows.push_back(row);
      job.train_class.push_back(cls);
    } else {
      job.held_rows.push_back(row);
      job.held_class.push_back(cls);
    }
  };

  Job relevance = make_job(std::string(kRelevanceNet), {"Relevant"}, true);
  for (std::size_t i = 0; i < n; ++i) add_row(relevance, i, data.patterns[i].labels.relevant ? 1 : 0);
  jobs.push_back(std::move(relevance));

  Job family = make_job(std::string(kFamilyNet), labels.families, false);
  std::vector<std::optional<std::size_t>> family_of(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& l = data.patterns[i].labels;
    if (!l.relevant) continue;
    family_of[i] = labels.family_index(l.family);
    if (!family_of[i]) throw InvalidArgument("pattern " + std::to_string(i) + " is relevant but its family '" +
                                             l.family + "' is not in the label config");
    add_row(family, i, *family_of[i]);
  }
  jobs.push_back(std::move(family));

  for (const auto& fam : labels.version_families) {
    const std::size_t f = *labels.family_index(fam);
    std::set<std::string> groups;
    for (std::size_t i = 0; i < n_train; ++i)
      if (family_of[i] == f) groups.insert(data.patterns[i].labels.version);
    if (groups.size() < 2) continue;
    Job job = make_job(version_net_name(labels.families[f]), {groups.begin(), groups.end()}, false);
    job.optional = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (family_of[i] != f) continue;
      const auto it = groups.find(data.patterns[i].labels.version);
      if (it == groups.end()) continue;  // held-out group the net never saw
      add_row(job, i, static_cast<std::size_t>(std::distance(groups.begin(), it)));
    }
    jobs.push_back(std::move(job));
  }
  for (std::size_t k = 0; k < jobs.size(); ++k) jobs[k].seed = derive_seed(config.seed, k, 100);

  auto guarded = [&](const Job& job) {
    try {
      return run_job(job, data.inputs, config);
    } catch (const std::exception& e) {
      throw StageError(job.name, e.what(), std::current_exception());
    }
  };
  std::vector<JobResult> results;
  if (config.parallel) {
    std::vector<std::future<JobResult>> futures;
    for (const auto& job : jobs) futures.push_back(std::async(std::launch::async, guarded, std::cref(job)));
    // Collect every job before rethrowing so no thread outlives `jobs`.
    std::exception_ptr first_error;
    for (auto& f : futures) {
      try {
        results.push_back(f.get());
      } catch (...) {
        if (!first_error) first_error = std::current_exception();
      }
    }
    if (first_error) std::rethrow_exception(first_error);
  } else {
    for (const auto& job : jobs) results.push_back(guarded(job));
  }

  TrainedHierarchy out;
  out.model.schema = schema;
  out.model.labels = labels;
  out.model.relevance_threshold = config.relevance_threshold;
  out.model.relevance = std::move(*results[0].stage);
  out.model.family = std::move(*results[1].stage);
  for (std::size_t k = 2; k < results.size(); ++k)
    if (results[k].stage) {
      const std::string fam = results[k].trace.net.substr(std::string("version:").size());
      out.model.versions.emplace(fam, std::move(*results[k].stage));
    }
  for (auto& r : results) out.traces.push_back(std::move(r.trace));
  return out;
}

}  // namespace stacksense::hierarchy

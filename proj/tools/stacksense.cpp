// stacksense command-line front end.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "stacksense/datagen.hpp"
#include "stacksense/encoder.hpp"
#include "stacksense/error.hpp"
#include "stacksense/fpdb.hpp"
#include "stacksense/hierarchy.hpp"
#include "stacksense/labels.hpp"

namespace ss = stacksense;

namespace {

enum ExitCode { kOk = 0, kIo = 2, kParse = 3, kSchema = 4, kCorrupt = 5, kDiverged = 6, kOther = 7 };

int log_level() {
  const char* v = std::getenv("STACKSENSE_LOG");
  if (!v) return 1;
  const std::string s(v);
  if (s == "quiet" || s == "0") return 0;
  if (s == "debug" || s == "2") return 2;
  return 1;
}

void log(int level, const std::string& msg) {
  if (level <= log_level()) std::cerr << msg << "\n";
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ss::IoError("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << content)) throw ss::IoError("cannot write " + path);
}

std::vector<ss::fpdb::FingerprintRule> load_db(const std::string& path, bool verbose) {
  auto parsed = ss::fpdb::parse_db(slurp(path));
  if (verbose)
    for (const auto& d : parsed.diagnostics) log(1, path + ": " + ss::fpdb::format(d));
  return std::move(parsed.rules);
}

ss::encoder::EncodingSchema load_schema(const std::string& path) {
  return path.empty() ? ss::encoder::reference_schema() : ss::encoder::parse_schema(slurp(path));
}

ss::hierarchy::LabelConfig load_labels(const std::string& path) {
  return path.empty() ? ss::hierarchy::reference_labels() : ss::hierarchy::parse_labels(slurp(path));
}

ss::datagen::EmpiricalDistribution load_dist(const std::string& path) {
  return path.empty() ? ss::datagen::reference_distribution() : ss::datagen::parse_distribution(slurp(path));
}

struct Options {
  std::string db, dist, labels, schema, out, data, model, response, endpoints, format = "text";
  std::size_t n = 5000;
  std::uint64_t seed = 1;
  std::size_t threads = 0;
  double retain = 0.98;
  double holdout = 0.2;
  double rate = 0.002;
  double momentum = 0.5;
  bool adaptive = false;
  double rate_up = 1.1;
  double rate_down = 0.5;
  double error_threshold = 1e-3;
  std::size_t max_generations = 200;
  std::string mode = "sequential";
  std::string topology = "auto";
  double hidden_fraction = 0.3;
  double relevance_threshold = 0.0;
  double dependence_tolerance = 1e-8;
  bool serial = false;
  std::string rpc_corpus, rpc_inventory;
  std::size_t rpc_variants = 40;
  std::size_t rpc_hidden = 0;
  std::size_t top = 5;
};

int cmd_parse_db(const Options& o) {
  const auto parsed = ss::fpdb::parse_db(slurp(o.db));
  std::map<std::string, std::size_t> families;
  for (const auto& r : parsed.rules) ++families[r.os_class().family];
  std::cout << parsed.rules.size() << " rules, " << families.size() << " families\n";
  for (const auto& [f, count] : families) std::cout << "  " << f << ": " << count << "\n";
  std::size_t errors = 0;
  for (const auto& d : parsed.diagnostics) {
    std::cout << ss::fpdb::format(d) << "\n";
    if (d.severity == ss::fpdb::Diagnostic::Severity::error) ++errors;
  }
  if (errors) std::cout << errors << " malformed entries skipped\n";
  return kOk;
}

int cmd_gen(const Options& o) {
  const auto db = load_db(o.db, true);
  const auto schema = load_schema(o.schema);
  ss::datagen::GenerateOptions g;
  g.n = o.n;
  g.seed = o.seed;
  g.threads = o.threads;
  const auto data = ss::datagen::generate_dataset(db, load_dist(o.dist), load_labels(o.labels), schema, g);
  emit(o.out, ss::datagen::write_dataset(data));
  log(1, "generated " + std::to_string(data.size()) + " patterns, seed " + std::to_string(o.seed));
  return kOk;
}

ss::nn::TrainingMode parse_mode(const std::string& m) {
  if (m == "batch") return ss::nn::TrainingMode::batch;
  if (m == "sequential") return ss::nn::TrainingMode::sequential;
  throw ss::InvalidArgument("--mode must be batch or sequential");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

int cmd_train(const Options& o) {
  const auto schema = load_schema(o.schema);
  const auto labels = load_labels(o.labels);
  ss::datagen::LabeledDataset data;
  if (!o.data.empty()) {
    data = ss::datagen::read_dataset(slurp(o.data));
  } else {
    if (o.db.empty()) throw ss::InvalidArgument("train needs --data or --db");
    ss::datagen::GenerateOptions g;
    g.n = o.n;
    g.seed = o.seed;
    g.threads = o.threads;
    data = ss::datagen::generate_dataset(load_db(o.db, true), load_dist(o.dist), labels, schema, g);
  }

  ss::hierarchy::HierarchyConfig cfg;
  cfg.seed = o.seed;
  cfg.reduction.retain = o.retain;
  cfg.reduction.dependence_tolerance = o.dependence_tolerance;
  cfg.holdout_fraction = o.holdout;
  cfg.relevance_threshold = o.relevance_threshold;
  cfg.parallel = !o.serial;
  cfg.training.rate = o.rate;
  cfg.training.momentum = o.momentum;
  cfg.training.adaptive = o.adaptive;
  cfg.training.rate_up = o.rate_up;
  cfg.training.rate_down = o.rate_down;
  cfg.training.error_threshold = o.error_threshold;
  cfg.training.max_generations = o.max_generations;
  cfg.training.mode = parse_mode(o.mode);
  if (o.topology == "original") {
    cfg.topology = ss::hierarchy::Topology::original_sizes();
  } else if (o.topology != "auto") {
    throw ss::InvalidArgument("--topology must be auto or original");
  }
  cfg.topology.hidden_fraction = o.hidden_fraction;

  log(2, "training on " + std::to_string(data.size()) + " patterns");
  auto trained = ss::hierarchy::train_hierarchy(data, schema, labels, cfg);

  std::vector<ss::hierarchy::NetTrace> traces = trained.traces;
  if (!o.rpc_corpus.empty()) {
    const auto corpus = ss::hierarchy::parse_rpc_corpus(slurp(o.rpc_corpus));
    ss::encoder::RpcSchema inventory;
    if (!o.rpc_inventory.empty()) {
      inventory = ss::encoder::parse_rpc_inventory(slurp(o.rpc_inventory));
    } else {
      std::vector<ss::encoder::EndpointMap> maps;
      for (const auto& h : corpus) maps.push_back(h.endpoints);
      inventory = ss::encoder::inventory_from_maps(maps);
    }
    ss::hierarchy::RpcTrainConfig rc;
    rc.seed = o.seed;
    rc.variants_per_host = o.rpc_variants;
    rc.hidden = o.rpc_hidden;
    ss::hierarchy::NetTrace t;
    trained.model.rpc = ss::hierarchy::train_rpc(corpus, inventory, rc, &t);
    traces.push_back(std::move(t));
  }

  std::cout << "seed " << o.seed << ", " << data.size() << " patterns, schema " << schema.id() << "\n";
  for (const auto& t : traces) {
    std::cout << t.net << ": " << t.errors.size() << " generations, error " << fmt(t.initial_error) << " -> "
              << fmt(t.errors.empty() ? t.initial_error : t.errors.back())
              << (t.reached_threshold ? " (threshold reached)" : "") << ", train accuracy " << fmt(t.train_accuracy);
    if (t.heldout_patterns) std::cout << ", held-out accuracy " << fmt(t.heldout_accuracy);
    std::cout << "\n";
  }
  std::cout << "\n" << ss::hierarchy::topology_table(traces);
  if (o.model.empty()) throw ss::InvalidArgument("train needs --model to write the result");
  ss::hierarchy::save_model(trained.model, o.model);
  std::cout << "model written to " << o.model << "\n";
  return kOk;
}

int cmd_classify(const Options& o) {
  const auto model = o.schema.empty() ? ss::hierarchy::load_model(o.model)
                                      : ss::hierarchy::load_model(o.model, load_schema(o.schema).id());
  const bool structured = o.format == "structured";
  if (!structured && o.format != "text") throw ss::InvalidArgument("--format must be text or structured");
  std::string out;
  if (!o.response.empty()) {
    const auto resp = ss::fpdb::parse_response(slurp(o.response));
    const auto report = ss::hierarchy::classify_host(model, resp);
    out += structured ? ss::hierarchy::report_json(report) : ss::hierarchy::format_report(report);
  }
  if (!o.endpoints.empty()) {
    const auto report = ss::hierarchy::classify_endpoints(model, ss::encoder::parse_endpoint_map(slurp(o.endpoints)));
    if (!out.empty() && !structured) out += "\n";
    out += structured ? ss::hierarchy::rpc_report_json(report) : ss::hierarchy::format_rpc_report(report);
  }
  if (out.empty()) throw ss::InvalidArgument("classify needs --response and/or --endpoints");
  std::cout << out;
  return kOk;
}

int cmd_score_classic(const Options& o) {
  const auto db = load_db(o.db, false);
  const auto resp = ss::fpdb::parse_response(slurp(o.response));
  const auto ranked = ss::fpdb::classic_match(resp, db);
  for (std::size_t i = 0; i < ranked.size() && i < o.top; ++i) {
    const auto& r = ranked[i];
    std::printf("%.4f  %zu/%zu  %s%s\n", r.score.score, r.score.matched, r.score.considered,
                db[r.rule_index].name.c_str(), r.score.no_overlap() ? "  (no overlap)" : "");
  }
  return kOk;
}

int cmd_reduce_report(const Options& o) {
  std::cout << ss::hierarchy::reduce_report(ss::hierarchy::load_model(o.model));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stacksense: OS fingerprinting with neural classifiers"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  Options o;

  auto* parse_db = app.add_subcommand("parse-db", "Parse a fingerprint database and list problems");
  parse_db->add_option("--db", o.db, "Fingerprint database")->required();

  auto add_gen_flags = [&](CLI::App* c) {
    c->add_option("--dist", o.dist, "Distribution file (built-in July 2007 browser shares if empty)");
    c->add_option("--labels", o.labels, "Label config (built-in if empty)");
    c->add_option("--schema", o.schema, "Encoding schema (built-in if empty)");
    c->add_option("--n", o.n, "Number of patterns");
    c->add_option("--seed", o.seed, "Random seed");
    c->add_option("--threads", o.threads, "Generator threads (0: all cores)");
  };

  auto* gen = app.add_subcommand("gen", "Generate a labelled dataset");
  gen->add_option("--db", o.db, "Fingerprint database")->required();
  add_gen_flags(gen);
  gen->add_option("--out", o.out, "Output file (- for stdout)");

  auto* train = app.add_subcommand("train", "Train the classifier hierarchy");
  train->add_option("--data", o.data, "Dataset file from gen");
  train->add_option("--db", o.db, "Fingerprint database (generate on the fly)");
  add_gen_flags(train);
  train->add_option("--model", o.model, "Output model file")->required();
  train->add_option("--retain", o.retain, "Variance fraction kept by PCA");
  train->add_option("--dependence-tolerance", o.dependence_tolerance, "Residual variance below which a column is dependent");
  train->add_option("--holdout", o.holdout, "Held-out fraction (taken from the end)");
  train->add_option("--rate", o.rate, "Learning rate");
  train->add_option("--momentum", o.momentum, "Momentum");
  train->add_flag("--adaptive", o.adaptive, "Bold-driver learning rate");
  train->add_option("--rate-up", o.rate_up, "Rate factor after an error decrease");
  train->add_option("--rate-down", o.rate_down, "Rate factor after an error increase");
  train->add_option("--error-threshold", o.error_threshold, "Stop below this mean error");
  train->add_option("--max-generations", o.max_generations, "Generation cap per net");
  train->add_option("--mode", o.mode, "batch or sequential");
  train->add_option("--topology", o.topology, "auto (hidden = fraction of inputs) or original (hidden sizes of the first published system)");
  train->add_option("--hidden-fraction", o.hidden_fraction, "Hidden units as a fraction of reduced inputs");
  train->add_option("--relevance-threshold", o.relevance_threshold, "Relevance gate threshold");
  train->add_flag("--serial", o.serial, "Train nets one after another");
  train->add_option("--rpc-corpus", o.rpc_corpus, "DCE-RPC host corpus; adds the endpoint net");
  train->add_option("--rpc-inventory", o.rpc_inventory, "DCE-RPC inventory (derived from the corpus if empty)");
  train->add_option("--rpc-variants", o.rpc_variants, "Perturbed samples per corpus host");
  train->add_option("--rpc-hidden", o.rpc_hidden, "Endpoint net hidden units (0: inputs / 10)");

  auto* classify = app.add_subcommand("classify", "Classify a host");
  classify->add_option("--model", o.model, "Model file")->required();
  classify->add_option("--response", o.response, "Probe response file");
  classify->add_option("--endpoints", o.endpoints, "DCE-RPC endpoint listing");
  classify->add_option("--schema", o.schema, "Refuse models trained on a different schema");
  classify->add_option("--format", o.format, "text or structured");

  auto* score = app.add_subcommand("score-classic", "Best-fit scoring against a database");
  score->add_option("--db", o.db, "Fingerprint database")->required();
  score->add_option("--response", o.response, "Probe response file")->required();
  score->add_option("--top", o.top, "Rules to print");

  auto* reduce = app.add_subcommand("reduce-report", "Show what each net kept after reduction");
  reduce->add_option("--model", o.model, "Model file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kParse;
  }

  try {
    if (*parse_db) return cmd_parse_db(o);
    if (*gen) return cmd_gen(o);
    if (*train) return cmd_train(o);
    if (*classify) return cmd_classify(o);
    if (*score) return cmd_score_classic(o);
    if (*reduce) return cmd_reduce_report(o);
  } catch (const ss::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const ss::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kParse;
  } catch (const ss::NotConcrete& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kParse;
  } catch (const ss::SchemaMismatch& e) {
    std::cerr << "schema mismatch: " << e.what() << "\n";
    return kSchema;
  } catch (const ss::CorruptModel& e) {
    std::cerr << "corrupt model: " << e.what() << "\n";
    return kCorrupt;
  } catch (const ss::VersionMismatch& e) {
    std::cerr << "corrupt model: " << e.what() << "\n";
    return kCorrupt;
  } catch (const ss::StageError& e) {
    try {
      std::rethrow_exception(e.cause());
    } catch (const ss::Diverged&) {
      std::cerr << "training diverged: " << e.what() << "\n";
      return kDiverged;
    } catch (...) {
    }
    std::cerr << "error: " << e.what() << "\n";
    return kOther;
  } catch (const ss::Diverged& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return kDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOther;
  }
  return kOther;
}

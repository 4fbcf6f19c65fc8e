#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "stacksense/hierarchy.hpp"
#include "text.hpp"

namespace stacksense::hierarchy {

using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void stage_lines(std::string& out, const StageReport& s, const char* indent) {
  for (std::size_t i = 0; i < s.labels.size(); ++i) out += indent + s.labels[i] + ": " + num(s.outputs[i]) + "\n";
}

json stage_json(const StageReport& s) {
  json scores = json::array();
  for (std::size_t i = 0; i < s.labels.size(); ++i) scores.push_back({{"label", s.labels[i]}, {"output", s.outputs[i]}});
  return json{{"net", s.net}, {"outputs", scores}, {"decided", s.labels[s.decided]}};
}

json group_json(const std::vector<std::pair<std::string, double>>& g) {
  json out = json::array();
  for (const auto& [label, v] : g) out.push_back({{"label", label}, {"output", v}});
  return out;
}

// Layer sizes of the original nets: kept inputs, reduced inputs, hidden,
// outputs.
struct OriginalRow {
  const char* net;
  std::size_t kept, reduced, hidden, outputs;
};
constexpr OriginalRow kOriginalTopology[] = {
    {"relevance", 204, 96, 20, 1}, {"family", 145, 66, 20, 6},  {"version:Linux", 100, 41, 18, 8},
    {"version:Solaris", 55, 26, 7, 5}, {"version:OpenBSD", 34, 23, 4, 3},
};

}  // namespace

std::string format_report(const Report& r) {
  std::string out = "Neural Networks Output (close to 1 is better)\n\nRelevant analysis\nRelevant: " + num(r.relevance) + "\n";
  if (r.family) {
    out += "\nOperating System analysis\n";
    stage_lines(out, *r.family, "");
    if (r.version) {
      out += "\n" + r.family->labels[r.family->decided] + " version analysis\n";
      stage_lines(out, *r.version, "");
    }
  }
  for (const auto& d : r.diagnostics) out += "warning: " + d + "\n";
  out += "\nSetting OS to " + r.decision + "\n";
  return out;
}

std::string format_rpc_report(const RpcReport& r) {
  std::string out = "Neural Network Output (close to 1 is better):\nVersions:\n";
  for (const auto& [label, v] : r.versions) out += "    " + label + ": " + num(v) + "\n";
  out += "Editions:\n";
  for (const auto& [label, v] : r.editions) out += "    " + label + ": " + num(v) + "\n";
  out += "Service Packs:\n";
  for (const auto& [label, v] : r.service_packs) out += "    " + label + ": " + num(v) + "\n";
  if (r.low_confidence) out += "warning: low confidence\n";
  out += "Setting OS to " + r.decision() + "\n";
  return out;
}

std::string report_json(const Report& r) {
  json j{{"relevance", r.relevance},
         {"relevant", r.relevant},
         {"family", r.family ? stage_json(*r.family) : json(nullptr)},
         {"version", r.version ? stage_json(*r.version) : json(nullptr)},
         {"decision", r.decision},
         {"diagnostics", r.diagnostics}};
  return j.dump(2) + "\n";
}

std::string rpc_report_json(const RpcReport& r) {
  json j{{"versions", group_json(r.versions)},
         {"editions", group_json(r.editions)},
         {"service_packs", group_json(r.service_packs)},
         {"decided", {{"version", r.version}, {"edition", r.edition}, {"service_pack", r.service_pack}}},
         {"decision", r.decision()},
         {"low_confidence", r.low_confidence}};
  return j.dump(2) + "\n";
}

std::string reduce_report(const HierarchicalModel& model) {
  const auto names = model.schema.unit_names();
  std::string out = "schema " + model.schema.id() + " (" + std::to_string(model.schema.dim()) + " inputs)\n";
  std::vector<const Stage*> stages{&model.relevance, &model.family};
  for (const auto& [family, s] : model.versions) stages.push_back(&s);
  for (const Stage* s : stages) {
    const auto& p = s->pipeline;
    double total = 0.0, kept = 0.0;
    for (std::size_t i = 0; i < p.eigenvalues.size(); ++i) {
      total += p.eigenvalues[i];
      if (i < p.output_dim()) kept += p.eigenvalues[i];
    }
    out += "\n" + s->name + ": " + std::to_string(p.input_dim()) + " -> " + std::to_string(p.kept.size()) +
           " independent -> " + std::to_string(p.output_dim()) + " components";
    if (total > 0.0) out += " (" + num(100.0 * kept / total) + "% of variance)";
    out += "; net " + std::to_string(s->net.sizes()[0]);
    for (std::size_t l = 1; l < s->net.sizes().size(); ++l) out += "/" + std::to_string(s->net.sizes()[l]);
    out += "\n  index  input  field\n";
    for (std::size_t i = 0; i < p.kept.size(); ++i) {
      char line[64];
      std::snprintf(line, sizeof line, "  %5zu  %5zu  ", i, p.kept[i]);
      out += line + names[p.kept[i]] + "\n";
    }
  }
  if (model.rpc)
    out += "\nrpc: " + std::to_string(model.rpc->schema.dim()) + " inputs (no reduction); net " +
           std::to_string(model.rpc->net.sizes()[0]) + "/" + std::to_string(model.rpc->net.sizes()[1]) + "/" +
           std::to_string(model.rpc->net.sizes()[2]) + "\n";
  return out;
}

std::string topology_table(const std::vector<NetTrace>& traces) {
  std::string out = "net                 kept  reduced  hidden  outputs   | original kept/reduced/hidden/outputs\n";
  for (const auto& t : traces) {
    char line[160];
    std::snprintf(line, sizeof line, "%-18s %5zu  %7zu  %6zu  %7zu   | ", t.net.c_str(), t.kept_inputs,
                  t.reduced_inputs, t.hidden, t.outputs);
    out += line;
    bool found = false;
    for (const auto& p : kOriginalTopology)
      if (t.net == p.net) {
        std::snprintf(line, sizeof line, "%zu/%zu/%zu/%zu", p.kept, p.reduced, p.hidden, p.outputs);
        out += line;
        found = true;
      }
    out += found ? "\n" : "-\n";
  }
  return out;
}

}  // namespace stacksense::hierarchy

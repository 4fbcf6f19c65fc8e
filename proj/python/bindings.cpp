#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "stacksense/datagen.hpp"
#include "stacksense/dimred.hpp"
#include "stacksense/encoder.hpp"
#include "stacksense/error.hpp"
#include "stacksense/fpdb.hpp"
#include "stacksense/hierarchy.hpp"
#include "stacksense/nn.hpp"

namespace py = pybind11;
namespace ss = stacksense;

namespace {

ss::Matrix to_matrix(const std::vector<std::vector<double>>& rows) { return ss::Matrix::from_rows(rows); }

std::vector<std::vector<double>> from_matrix(const ss::Matrix& m) {
  std::vector<std::vector<double>> out;
  for (std::size_t r = 0; r < m.rows(); ++r) out.emplace_back(m.row(r).begin(), m.row(r).end());
  return out;
}

py::dict rule_dict(const ss::fpdb::FingerprintRule& r) {
  py::dict tests;
  for (const auto& [id, spec] : r.tests) {
    py::dict fields;
    for (const auto& [k, v] : spec.fields) fields[py::str(k)] = v.str();
    tests[py::str(std::string(ss::fpdb::to_string(id)))] = fields;
  }
  const auto& c = r.os_class();
  py::dict d;
  d["name"] = r.name;
  d["vendor"] = c.vendor;
  d["family"] = c.family;
  d["version"] = c.version;
  d["device_type"] = c.device_type;
  d["tests"] = tests;
  return d;
}

}  // namespace

PYBIND11_MODULE(_stacksense, m) {
  m.doc() = "OS fingerprinting with neural classifiers";

  // Translators are tried newest first, so the base class goes first.
  py::register_exception<ss::Error>(m, "Error");
  py::register_exception<ss::ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ss::NotConcrete>(m, "NotConcrete", PyExc_ValueError);
  py::register_exception<ss::SchemaMismatch>(m, "SchemaMismatch");
  py::register_exception<ss::CorruptModel>(m, "CorruptModel");

  // fingerprint databases
  py::class_<ss::fpdb::FingerprintRule>(m, "FingerprintRule")
      .def_readonly("name", &ss::fpdb::FingerprintRule::name)
      .def("to_dict", &rule_dict)
      .def("__str__", &ss::fpdb::print_rule);
  py::class_<ss::fpdb::ProbeResponse>(m, "ProbeResponse")
      .def("value",
           [](const ss::fpdb::ProbeResponse& r, const std::string& test, const std::string& field) {
             const auto id = ss::fpdb::test_from_string(test);
             if (!id) throw py::value_error("unknown test " + test);
             return r.value(*id, field);
           })
      .def("__str__", &ss::fpdb::print_response);

  m.def(
      "parse_db",
      [](const std::string& text) {
        auto res = ss::fpdb::parse_db(text);
        std::vector<std::string> diags;
        for (const auto& d : res.diagnostics) diags.push_back(ss::fpdb::format(d));
        return py::make_tuple(res.rules, diags);
      },
      py::arg("text"), "Rules and diagnostics of a fingerprint database.");
  m.def("parse_response", [](const std::string& text) { return ss::fpdb::parse_response(text); }, py::arg("text"));
  m.def(
      "classic_score",
      [](const ss::fpdb::ProbeResponse& r, const ss::fpdb::FingerprintRule& rule) {
        const auto s = ss::fpdb::classic_score(r, rule);
        return py::make_tuple(s.score, s.considered, s.matched);
      },
      py::arg("response"), py::arg("rule"));
  m.def(
      "classic_match",
      [](const ss::fpdb::ProbeResponse& r, const std::vector<ss::fpdb::FingerprintRule>& db) {
        std::vector<std::pair<std::size_t, double>> out;
        for (const auto& x : ss::fpdb::classic_match(r, db)) out.emplace_back(x.rule_index, x.score.score);
        return out;
      },
      py::arg("response"), py::arg("db"));
  m.def("sample_response", &ss::datagen::sample_response, py::arg("rule"), py::arg("seed"));

  // encoding
  py::class_<ss::encoder::EncodingSchema>(m, "EncodingSchema")
      .def_property_readonly("dim", &ss::encoder::EncodingSchema::dim)
      .def_property_readonly("id", &ss::encoder::EncodingSchema::id)
      .def("unit_names", &ss::encoder::EncodingSchema::unit_names);
  m.def("reference_schema", &ss::encoder::reference_schema, py::return_value_policy::copy);
  m.def(
      "encode",
      [](const ss::fpdb::ProbeResponse& r, const ss::encoder::EncodingSchema& s) { return ss::encoder::encode(r, s); },
      py::arg("response"), py::arg("schema"));

  // numerics
  m.def(
      "eig_sym",
      [](const std::vector<std::vector<double>>& a) {
        const auto e = ss::dimred::eig_sym(to_matrix(a));
        return py::make_tuple(e.values, from_matrix(e.vectors));
      },
      py::arg("matrix"), "Eigenvalues (descending) and eigenvectors (columns) of a symmetric matrix.");
  m.def(
      "reduce",
      [](const std::vector<std::vector<double>>& rows, double retain) {
        ss::dimred::PipelineOptions o;
        o.retain = retain;
        const auto p = ss::dimred::fit_pipeline(to_matrix(rows), o);
        return py::make_tuple(p.kept, from_matrix(ss::dimred::project_rows(p, to_matrix(rows))));
      },
      py::arg("rows"), py::arg("retain") = ss::dimred::kDefaultRetain,
      "Kept column indices and the projected rows.");

  // hierarchy
  py::class_<ss::hierarchy::HierarchicalModel>(m, "Model")
      .def_property_readonly("schema_id", [](const ss::hierarchy::HierarchicalModel& h) { return h.schema.id(); })
      .def("classify",
           [](const ss::hierarchy::HierarchicalModel& h, const ss::fpdb::ProbeResponse& r) {
             const auto rep = ss::hierarchy::classify_host(h, r);
             return py::make_tuple(rep.decision, rep.relevance, ss::hierarchy::format_report(rep));
           })
      .def("save", [](const ss::hierarchy::HierarchicalModel& h, const std::string& path) {
        ss::hierarchy::save_model(h, path);
      });
  m.def(
      "load_model", [](const std::string& path) { return ss::hierarchy::load_model(path); }, py::arg("path"));
  m.def(
      "train",
      [](const std::vector<ss::fpdb::FingerprintRule>& db, std::size_t n, std::uint64_t seed,
         std::size_t max_generations) {
        const auto& schema = ss::encoder::reference_schema();
        const auto& labels = ss::hierarchy::reference_labels();
        ss::datagen::GenerateOptions g;
        g.n = n;
        g.seed = seed;
        const auto data =
            ss::datagen::generate_dataset(db, ss::datagen::reference_distribution(), labels, schema, g);
        ss::hierarchy::HierarchyConfig cfg;
        cfg.seed = seed;
        cfg.training.max_generations = max_generations;
        py::gil_scoped_release release;
        return ss::hierarchy::train_hierarchy(data, schema, labels, cfg).model;
      },
      py::arg("db"), py::arg("n") = 2000, py::arg("seed") = 1, py::arg("max_generations") = 200,
      "Generate a dataset from the rules and train the hierarchy on it.");
}

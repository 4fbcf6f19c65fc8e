#include <charconv>

#include "stacksense/datagen.hpp"
#include "stacksense/error.hpp"
#include "text.hpp"

namespace stacksense::datagen {

namespace {

constexpr std::string_view kDatasetMagic = "# stacksense-dataset 1";

void check_cell(const std::string& s, const char* what) {
  if (s.find_first_of("\t\r\n") != std::string::npos)
    throw InvalidArgument(std::string(what) + " '" + s + "' cannot be written: contains a tab or newline");
}

std::string cell(const std::string& s) { return s.empty() ? "-" : s; }

std::string header_value(const std::vector<std::string_view>& words, std::string_view key) {
  for (auto w : words)
    if (w.size() > key.size() && w.substr(0, key.size()) == key && w[key.size()] == '=')
      return std::string(w.substr(key.size() + 1));
  throw ParseError("dataset header lacks '" + std::string(key) + "='");
}

}  // namespace

std::string write_dataset(const LabeledDataset& data) {
  if (data.inputs.rows() != data.patterns.size()) throw DimensionMismatch("dataset rows", data.patterns.size(), data.inputs.rows());
  std::string out = std::string(kDatasetMagic) + " schema=" + data.schema_id + " seed=" + std::to_string(data.seed) +
                    " n=" + std::to_string(data.size()) + " dim=" + std::to_string(data.inputs.cols()) + "\n";
  out += "# rule\trelevant\tfamily\tversion\tx...\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& p = data.patterns[i];
    check_cell(p.rule, "rule name");
    check_cell(p.labels.family, "family");
    check_cell(p.labels.version, "version");
    out += cell(p.rule) + '\t' + (p.labels.relevant ? "+1" : "-1") + '\t' + cell(p.labels.family) + '\t' +
           cell(p.labels.version);
    for (double v : data.inputs.row(i)) {
      out += '\t';
      out += text::format_double(v);
    }
    out += '\n';
  }
  return out;
}

LabeledDataset read_dataset(std::string_view text) {
  const auto all = text::lines(text);
  if (all.empty() || all[0].substr(0, kDatasetMagic.size()) != kDatasetMagic)
    throw ParseError("not a dataset file (expected '" + std::string(kDatasetMagic) + "')");
  const auto words = text::split_ws(all[0]);
  LabeledDataset d;
  d.schema_id = header_value(words, "schema");
  const auto seed = text::parse_dec(header_value(words, "seed"));
  const auto n = text::parse_dec(header_value(words, "n"));
  const auto dim = text::parse_dec(header_value(words, "dim"));
  if (!seed || !n || !dim) throw ParseError("dataset header has a bad number");
  d.seed = *seed;
  d.inputs = Matrix(*n, *dim);
  d.patterns.reserve(*n);
  std::size_t row = 0;
  for (std::size_t i = 1; i < all.size(); ++i) {
    if (all[i].empty() || all[i].front() == '#') continue;
    const auto where = "dataset line " + std::to_string(i + 1) + ": ";
    const auto cells = text::split(all[i], '\t');
    if (cells.size() != 4 + *dim) throw ParseError(where + "expected " + std::to_string(4 + *dim) + " columns");
    if (row == *n) throw ParseError(where + "more rows than the header announces");
    Pattern p;
    auto uncell = [](std::string_view s) { return s == "-" ? std::string() : std::string(s); };
    p.rule = uncell(cells[0]);
    if (cells[1] != "+1" && cells[1] != "-1") throw ParseError(where + "relevance must be +1 or -1");
    p.labels.relevant = cells[1] == "+1";
    p.labels.family = uncell(cells[2]);
    p.labels.version = uncell(cells[3]);
    for (std::size_t c = 0; c < *dim; ++c) {
      const auto v = text::parse_double(cells[4 + c]);
      if (!v) throw ParseError(where + "bad number '" + std::string(cells[4 + c]) + "'");
      d.inputs(row, c) = *v;
    }
    d.patterns.push_back(std::move(p));
    ++row;
  }
  if (row != *n) throw ParseError("dataset has " + std::to_string(row) + " rows, header says " + std::to_string(*n));
  return d;
}

}  // namespace stacksense::datagen

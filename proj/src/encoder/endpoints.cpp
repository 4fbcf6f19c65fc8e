#include <cctype>
#include <cstdio>
#include <map>
#include <set>
#include <tuple>

#include "stacksense/encoder.hpp"
#include "stacksense/error.hpp"
#include "text.hpp"

namespace stacksense::encoder {

namespace {

constexpr std::string_view kInventoryMagic = "stacksense-rpc-inventory";

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

// key="value" pairs in one line of a mapper listing.
std::map<std::string, std::string> attributes(std::string_view line, std::size_t lineno) {
  std::map<std::string, std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto eq = line.find("=\"", pos);
    if (eq == std::string_view::npos) break;
    std::size_t key_start = eq;
    while (key_start > pos && !std::isspace(static_cast<unsigned char>(line[key_start - 1]))) --key_start;
    const auto close = line.find('"', eq + 2);
    if (close == std::string_view::npos)
      throw ParseError("endpoint listing line " + std::to_string(lineno) + ": unterminated quote");
    out[text::to_lower(line.substr(key_start, eq - key_start))] = std::string(line.substr(eq + 2, close - eq - 2));
    pos = close + 1;
  }
  return out;
}

std::string hash_hex(std::string_view data) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(text::fnv1a64(data)));
  return buf;
}

}  // namespace

bool valid_uuid(std::string_view uuid) noexcept {
  if (uuid.size() != 36) return false;
  for (std::size_t i = 0; i < uuid.size(); ++i) {
    const bool dash = i == 8 || i == 13 || i == 18 || i == 23;
    if (dash ? uuid[i] != '-' : !std::isxdigit(static_cast<unsigned char>(uuid[i]))) return false;
  }
  return true;
}

EndpointMap parse_endpoint_map(std::string_view text) {
  EndpointMap out;
  std::string uuid;
  std::string annotation;
  bool program_has_endpoints = true;
  auto close_program = [&] {
    // A program with no endpoint lines still counts as present.
    if (!program_has_endpoints) out.entries.push_back({uuid, annotation, "", ""});
  };
  const auto all = text::lines(text);
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto line = text::trim(all[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto attrs = attributes(line, i + 1);
    if (auto it = attrs.find("uuid"); it != attrs.end()) {
      close_program();
      if (!valid_uuid(it->second))
        throw ParseError("endpoint listing line " + std::to_string(i + 1) + ": invalid uuid '" + it->second + "'");
      uuid = upper(it->second);
      annotation.clear();
      program_has_endpoints = false;
    }
    if (auto it = attrs.find("annotation"); it != attrs.end()) {
      if (uuid.empty()) throw ParseError("endpoint listing line " + std::to_string(i + 1) + ": annotation before uuid");
      annotation = it->second;
    }
    if (auto it = attrs.find("protocol"); it != attrs.end()) {
      if (uuid.empty()) throw ParseError("endpoint listing line " + std::to_string(i + 1) + ": endpoint before uuid");
      const auto ep = attrs.find("endpoint");
      out.entries.push_back({uuid, annotation, it->second, ep == attrs.end() ? "" : ep->second});
      program_has_endpoints = true;
    }
  }
  close_program();
  return out;
}

std::string print_endpoint_map(const EndpointMap& map) {
  std::string out;
  const std::string* last_uuid = nullptr;
  for (const auto& e : map.entries) {
    if (!last_uuid || *last_uuid != e.uuid) {
      if (last_uuid) out += "\n";
      out += "uuid=\"" + e.uuid + "\"\n";
      if (!e.annotation.empty()) out += "annotation=\"" + e.annotation + "\"\n";
      last_uuid = &e.uuid;
    }
    if (e.protocol.empty()) continue;
    out += " protocol=\"" + e.protocol + "\"";
    if (!e.endpoint.empty()) out += " endpoint=\"" + e.endpoint + "\"";
    out += "\n";
  }
  return out;
}

RpcSchema::RpcSchema(std::vector<RpcProgram> programs) : programs_(std::move(programs)) {
  std::set<std::string> seen;
  dim_ = 1;
  for (auto& p : programs_) {
    if (!valid_uuid(p.uuid)) throw InvalidArgument("rpc inventory: invalid uuid '" + p.uuid + "'");
    p.uuid = upper(p.uuid);
    if (!seen.insert(p.uuid).second) throw InvalidArgument("rpc inventory: uuid " + p.uuid + " listed twice");
    std::set<std::pair<std::string, std::string>> eps(p.endpoints.begin(), p.endpoints.end());
    if (eps.size() != p.endpoints.size()) throw InvalidArgument("rpc inventory: repeated endpoint under " + p.uuid);
    dim_ += 1 + p.endpoints.size();
  }
}

std::string RpcSchema::id() const { return "rpc/1/" + hash_hex(print_rpc_inventory(*this)); }

std::vector<std::string> RpcSchema::unit_names() const {
  std::vector<std::string> out;
  for (const auto& p : programs_) {
    out.push_back(p.uuid);
    for (const auto& [proto, ep] : p.endpoints) out.push_back(p.uuid + " " + proto + " " + (ep.empty() ? "-" : ep));
  }
  out.push_back("unknown-uuid-count");
  return out;
}

RpcSchema parse_rpc_inventory(std::string_view text) {
  const auto all = text::lines(text);
  std::size_t i = 0;
  while (i < all.size() && text::trim(all[i]).empty()) ++i;
  if (i == all.size()) throw ParseError("rpc inventory is empty");
  const auto header = text::split_ws(all[i]);
  if (header.size() != 2 || header[0] != kInventoryMagic || header[1] != "1")
    throw ParseError("rpc inventory: expected 'stacksense-rpc-inventory 1'");
  std::vector<RpcProgram> programs;
  for (++i; i < all.size(); ++i) {
    const auto line = text::trim(all[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto words = text::split_ws(line);
    const auto where = "rpc inventory line " + std::to_string(i + 1) + ": ";
    if (words[0] == "uuid" && words.size() == 2) {
      programs.push_back({std::string(words[1]), {}});
    } else if (words[0] == "endpoint" && words.size() == 3) {
      if (programs.empty()) throw ParseError(where + "endpoint before any uuid");
      programs.back().endpoints.emplace_back(std::string(words[1]), words[2] == "-" ? "" : std::string(words[2]));
    } else {
      throw ParseError(where + "expected 'uuid <uuid>' or 'endpoint <protocol> <endpoint|->'");
    }
  }
  try {
    return RpcSchema(std::move(programs));
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what());
  }
}

std::string print_rpc_inventory(const RpcSchema& schema) {
  std::string out = std::string(kInventoryMagic) + " 1\n";
  for (const auto& p : schema.programs()) {
    out += "uuid " + p.uuid + "\n";
    for (const auto& [proto, ep] : p.endpoints) out += "endpoint " + proto + " " + (ep.empty() ? "-" : ep) + "\n";
  }
  return out;
}

RpcSchema inventory_from_maps(const std::vector<EndpointMap>& maps) {
  std::vector<RpcProgram> programs;
  std::map<std::string, std::size_t> index;
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (const auto& m : maps)
    for (const auto& e : m.entries) {
      auto [it, fresh] = index.emplace(e.uuid, programs.size());
      if (fresh) programs.push_back({e.uuid, {}});
      if (e.protocol.empty() || !seen.emplace(e.uuid, e.protocol, e.endpoint).second) continue;
      programs[it->second].endpoints.emplace_back(e.protocol, e.endpoint);
    }
  return RpcSchema(std::move(programs));
}

Vector encode_endpoints(const EndpointMap& map, const RpcSchema& schema) {
  Vector out(schema.dim(), -1.0);
  std::set<std::string> uuids;
  std::set<std::tuple<std::string, std::string, std::string>> eps;
  for (const auto& e : map.entries) {
    const auto u = upper(e.uuid);
    uuids.insert(u);
    eps.emplace(u, e.protocol, e.endpoint);
  }
  std::size_t unit = 0;
  std::size_t known = 0;
  for (const auto& p : schema.programs()) {
    if (uuids.count(p.uuid)) {
      out[unit] = 1.0;
      ++known;
    }
    ++unit;
    for (const auto& [proto, ep] : p.endpoints) {
      if (eps.count({p.uuid, proto, ep})) out[unit] = 1.0;
      ++unit;
    }
  }
  out[unit] = static_cast<double>(uuids.size() - known);
  return out;
}

}  // namespace stacksense::encoder

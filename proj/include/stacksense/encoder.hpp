#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stacksense/fpdb.hpp"
#include "stacksense/matrix.hpp"

namespace stacksense::encoder {

enum class FeatureKind {
  presence,  // +1 if the field has an effective value
  flag,      // +1 if the value carries the token (see FeatureDescriptor)
  onehot,    // one unit per token, times `slots` positions
  hex,       // base-16 numeric
  dec,       // base-10 numeric
};

std::string_view to_string(FeatureKind kind) noexcept;

struct FeatureDescriptor {
  fpdb::TestId test = fpdb::TestId::T1;
  std::string field;
  FeatureKind kind = FeatureKind::presence;
  // flag: one token. A single-character token tests membership in the value
  // (Flags=AS carries A), a longer one tests equality.
  // onehot: the categories, matched longest first when slots > 1.
  std::vector<std::string> tokens;
  std::vector<std::string> labels;  // display names, parallel to tokens
  std::size_t slots = 1;
  std::size_t offset = 0;

  std::size_t width() const noexcept;
  bool operator==(const FeatureDescriptor&) const = default;
};

class EncodingSchema {
 public:
  EncodingSchema() = default;
  EncodingSchema(std::string name, int version, std::vector<FeatureDescriptor> descriptors);

  const std::string& name() const noexcept { return name_; }
  int version() const noexcept { return version_; }
  const std::vector<FeatureDescriptor>& descriptors() const noexcept { return descriptors_; }
  std::size_t dim() const noexcept { return dim_; }
  // name/version/hash of the canonical text; model files pin this.
  std::string id() const;
  // One readable name per unit, e.g. "T1.Ops[2]=NOP".
  std::vector<std::string> unit_names() const;

  bool operator==(const EncodingSchema&) const = default;

 private:
  std::string name_;
  int version_ = 0;
  std::vector<FeatureDescriptor> descriptors_;
  std::size_t dim_ = 0;
};

EncodingSchema parse_schema(std::string_view text);
std::string print_schema(const EncodingSchema& schema);
const EncodingSchema& reference_schema();

// The reference schema; (test, field) pairs used by the DB but not covered by
// the schema are reported in `uncovered` as "T1.Foo" strings.
EncodingSchema build_nmap_schema(const std::vector<fpdb::FingerprintRule>& db,
                                 std::vector<std::string>* uncovered = nullptr);

// Never throws on response content: unparsable numerics become -1 and an
// explanatory line goes to `diagnostics`.
Vector encode(const fpdb::ProbeResponse& response, const EncodingSchema& schema,
              std::vector<std::string>* diagnostics = nullptr);

// ---- DCE-RPC endpoint maps ----

struct Endpoint {
  std::string uuid;  // upper case
  std::string annotation;
  std::string protocol;
  std::string endpoint;  // may be empty
  bool operator==(const Endpoint&) const = default;
};

struct EndpointMap {
  std::vector<Endpoint> entries;
  bool operator==(const EndpointMap&) const = default;
};

bool valid_uuid(std::string_view uuid) noexcept;
// The mapper listing: uuid="..." lines open a program, annotation="..." names
// it and protocol="..." endpoint="..." id="..." lines list its endpoints.
// Throws ParseError (invalid UUID, endpoint before any uuid).
EndpointMap parse_endpoint_map(std::string_view text);
std::string print_endpoint_map(const EndpointMap& map);

struct RpcProgram {
  std::string uuid;
  std::vector<std::pair<std::string, std::string>> endpoints;  // (protocol, endpoint)
  bool operator==(const RpcProgram&) const = default;
};

class RpcSchema {
 public:
  RpcSchema() = default;
  explicit RpcSchema(std::vector<RpcProgram> programs);

  const std::vector<RpcProgram>& programs() const noexcept { return programs_; }
  // One unit per program, one per listed endpoint, one unknown-UUID count.
  std::size_t dim() const noexcept { return dim_; }
  std::string id() const;
  std::vector<std::string> unit_names() const;
  bool operator==(const RpcSchema&) const = default;

 private:
  std::vector<RpcProgram> programs_;
  std::size_t dim_ = 1;
};

RpcSchema parse_rpc_inventory(std::string_view text);
std::string print_rpc_inventory(const RpcSchema& schema);
// Union of everything seen, UUIDs and endpoints in order of first appearance.
RpcSchema inventory_from_maps(const std::vector<EndpointMap>& maps);

Vector encode_endpoints(const EndpointMap& map, const RpcSchema& schema);

}  // namespace stacksense::encoder

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iotfuzz/codec.hpp"
#include "iotfuzz/seeds.hpp"

namespace iotfuzz {

// Static mutation dictionaries. Immutable at runtime; the built-in set can
// be overridden from the registry file.
struct Dictionaries {
  std::vector<std::string> http_methods;
  std::vector<std::string> rtsp_methods;
  std::vector<std::string> http_schemes;
  std::vector<std::string> rtsp_schemes;
  std::vector<std::string> http_versions;
  std::vector<std::string> rtsp_versions;
  std::vector<std::string> http_query_commands;
  std::vector<std::string> tplink_commands;  // cipher bytes, prefix stripped

  static Dictionaries builtin();
  const std::vector<std::string>* for_field(const FieldId& field) const;
};

enum class VulnMode { Passive, Active };

struct VulnerabilityDescriptor {
  std::string id;
  Protocol protocol = Protocol::Http;
  VulnMode mode = VulnMode::Active;
  uint16_t default_port = 80;
  std::vector<FieldId> mutable_fields;
  std::vector<std::string> fixed_headers;  // copied verbatim from the seed
  int campaign_size = 200;
  std::string validity_rule;
  std::string exploit_rule;
  double structure_risk_budget = 0.20;  // fraction of a campaign
  bool mutate_length = false;           // TP-Link length-mismatch mutants
  std::string info;
};

struct RegistryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Registry {
  std::vector<VulnerabilityDescriptor> vulns;
  Dictionaries dicts = Dictionaries::builtin();

  const VulnerabilityDescriptor* find(std::string_view id) const;
};

// Text registry: key:value lines, one entry per vulnerability (or dict
// override), entries separated by lines consisting of "-".
Registry parse_registry(std::string_view text);
Registry load_registry(const std::string& path);
Registry builtin_registry();
const std::string& builtin_registry_text();

}  // namespace iotfuzz

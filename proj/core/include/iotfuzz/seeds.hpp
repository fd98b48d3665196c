#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "iotfuzz/capture.hpp"
#include "iotfuzz/net_types.hpp"

namespace iotfuzz {

enum class FieldName {
  Method,
  SpLeft,
  RequestUri,
  UriScheme,
  UriNetlocPort,
  UriPath,
  UriQuery,
  SpRight,
  Version,
  Crlf,
  HeaderValue,  // carries the header key in FieldId::header_name
  Cseq,
  FrameLength,
  FrameCommand,
};

struct FieldId {
  Protocol protocol = Protocol::Http;
  FieldName name = FieldName::Method;
  std::string header_name;  // set only for HeaderValue

  bool operator==(const FieldId&) const = default;
};

std::string to_string(const FieldId& id);
std::optional<FieldId> parse_field_id(Protocol protocol, std::string_view name);

struct FieldSeed {
  FieldId field;
  std::string value;  // exact byte span from the source message
  std::string source_path;
  uint32_t first_packet_index = 0;
};

struct SeedWarning {
  std::string message;
  uint32_t packet_index = 0;
};

struct SeedCorpus {
  std::vector<FieldSeed> seeds;  // ordered by first occurrence
  std::string device_label;

  // Deduplicated per (field, value); returns false for a duplicate.
  bool add(FieldSeed seed);
  std::vector<std::string> values(const FieldId& field) const;
  const FieldSeed* first(const FieldId& field) const;
};

std::vector<FieldSeed> extract_http_seeds(const FlowMessage& msg,
                                          std::vector<SeedWarning>* warnings = nullptr);
std::vector<FieldSeed> extract_rtsp_seeds(const FlowMessage& msg,
                                          std::vector<SeedWarning>* warnings = nullptr);
std::vector<FieldSeed> extract_tplink_seeds(const FlowMessage& msg,
                                            std::vector<SeedWarning>* warnings = nullptr);

SeedCorpus build_corpus(const std::vector<FlowMessage>& msgs, std::string device_label,
                        std::vector<SeedWarning>* warnings = nullptr);

// Line-oriented export: protocol<TAB>field<TAB>base64(value)
std::string export_corpus(const SeedCorpus& corpus);
SeedCorpus import_corpus(std::string_view text);  // throws std::runtime_error
void save_corpus(const SeedCorpus& corpus, const std::string& path);
SeedCorpus load_corpus(const std::string& path);

}  // namespace iotfuzz

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iotfuzz/net_types.hpp"

namespace iotfuzz {

struct Header {
  std::string name;
  std::string value;
  std::string sep = ": ";  // original colon+whitespace, kept for losslessness

  Header() = default;
  Header(std::string n, std::string v) : name(std::move(n)), value(std::move(v)) {}
};

// One request decomposed into its fuzzable fields. serialize(parse(x)) == x
// for well-formed requests; every field is stored in wire form, unmodified.
struct RequestTemplate {
  Protocol protocol = Protocol::Http;
  std::string method;
  std::string sp_left = " ";
  std::string uri_scheme;       // "rtsp://" / "http://", empty when origin-form
  std::string uri_netloc_port;  // host[:port], empty when origin-form
  std::string uri_path;
  std::optional<std::string> uri_query;
  std::string sp_right = " ";
  std::string version;
  std::string crlf = "\r\n";  // request-line terminator
  std::vector<Header> headers;
  std::string body;

  std::string request_uri() const;
  const std::string* find_header(std::string_view name) const;
  std::string* find_header(std::string_view name);
};

std::optional<RequestTemplate> parse_request(std::string_view bytes);
// Re-splits a full Request-URI into scheme / netloc / path / query.
void assign_request_uri(RequestTemplate& t, std::string_view uri);
std::optional<RequestTemplate> parse_http_request(std::string_view bytes);
std::optional<RequestTemplate> parse_rtsp_request(std::string_view bytes);
std::string serialize(const RequestTemplate& t);

// Strict well-formedness: canonical separators and a recognised version
// token. Mutants that only touch non-structural fields stay well-formed.
bool is_well_formed_request(std::string_view bytes);

struct ResponseView {
  bool well_formed = false;
  int status_code = 0;
  std::string version;
  std::string reason;
  std::vector<Header> headers;
  std::string body;
  std::string raw;  // retained verbatim for reports

  const std::string* find_header(std::string_view name) const;
};

ResponseView parse_response(std::string_view bytes);

// Message boundary for a byte stream read off a socket: returns total
// message length once the boundary rules are satisfied, nullopt if more
// bytes are needed.
std::optional<size_t> http_message_length(std::string_view buffer);
std::optional<size_t> tplink_message_length(std::string_view buffer);

struct CredentialFinding {
  std::string scheme;
  std::string encoded;
  std::optional<std::string> user;
  std::optional<std::string> pass;
  uint32_t packet_index = 0;
};

// Non-Basic schemes yield a finding without decode. Invalid Base64 under
// Basic is a rejection: nullopt with the reason written to *reject_reason.
std::optional<CredentialFinding> decode_basic_credential(std::string_view header_value,
                                                         uint32_t packet_index,
                                                         std::string* reject_reason = nullptr);

}  // namespace iotfuzz

#include "iotfuzz/codec.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace iotfuzz {

namespace {

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  return true;
}

bool is_blank(char c) { return c == ' ' || c == '\t'; }

std::optional<size_t> parse_content_length(const std::vector<Header>& headers) {
  for (const auto& h : headers) {
    if (!iequals(h.name, "Content-Length")) continue;
    size_t value = 0;
    auto sv = std::string_view(h.value);
    auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), value);
    if (ec == std::errc{} && ptr == sv.data() + sv.size()) return value;
  }
  return std::nullopt;
}

// Header block parser shared by requests and responses. Returns false on a
// malformed line.
bool parse_headers(std::string_view block, std::vector<Header>* out) {
  size_t pos = 0;
  while (pos < block.size()) {
    size_t eol = block.find("\r\n", pos);
    if (eol == std::string_view::npos) return false;
    std::string_view line = block.substr(pos, eol - pos);
    pos = eol + 2;
    size_t colon = line.find(':');
    if (colon == std::string_view::npos || colon == 0) return false;
    Header h;
    h.name = std::string(line.substr(0, colon));
    size_t vstart = colon + 1;
    while (vstart < line.size() && is_blank(line[vstart])) ++vstart;
    h.sep = std::string(line.substr(colon, vstart - colon));
    h.value = std::string(line.substr(vstart));
    out->push_back(std::move(h));
  }
  return true;
}

}  // namespace

std::string RequestTemplate::request_uri() const {
  std::string uri = uri_scheme + uri_netloc_port + uri_path;
  if (uri_query) uri += "?" + *uri_query;
  return uri;
}

const std::string* RequestTemplate::find_header(std::string_view name) const {
  for (const auto& h : headers)
    if (iequals(h.name, name)) return &h.value;
  return nullptr;
}

std::string* RequestTemplate::find_header(std::string_view name) {
  for (auto& h : headers)
    if (iequals(h.name, name)) return &h.value;
  return nullptr;
}

const std::string* ResponseView::find_header(std::string_view name) const {
  for (const auto& h : headers)
    if (iequals(h.name, name)) return &h.value;
  return nullptr;
}

// Request-URI decomposition: [scheme][netloc:port][path][?query]
void assign_request_uri(RequestTemplate& t, std::string_view uri) {
  t.uri_scheme.clear();
  t.uri_netloc_port.clear();
  t.uri_path.clear();
  t.uri_query.reset();
  std::string_view rest = uri;
  size_t scheme_sep = uri.find("://");
  if (scheme_sep != std::string_view::npos && scheme_sep > 0 &&
      std::all_of(uri.begin(), uri.begin() + scheme_sep,
                  [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; })) {
    t.uri_scheme = std::string(uri.substr(0, scheme_sep + 3));
    rest = uri.substr(scheme_sep + 3);
    size_t netloc_end = rest.find_first_of("/?");
    if (netloc_end == std::string_view::npos) netloc_end = rest.size();
    t.uri_netloc_port = std::string(rest.substr(0, netloc_end));
    rest = rest.substr(netloc_end);
  }
  size_t q = rest.find('?');
  if (q != std::string_view::npos) {
    t.uri_path = std::string(rest.substr(0, q));
    t.uri_query = std::string(rest.substr(q + 1));
  } else {
    t.uri_path = std::string(rest);
  }
}

std::optional<RequestTemplate> parse_request(std::string_view bytes) {
  size_t line_end = bytes.find("\r\n");
  if (line_end == std::string_view::npos || line_end == 0) return std::nullopt;
  std::string_view line = bytes.substr(0, line_end);

  // method, whitespace run, URI (may itself contain blanks), whitespace
  // run, version
  size_t m_end = 0;
  while (m_end < line.size() && !is_blank(line[m_end])) ++m_end;
  if (m_end == 0 || m_end == line.size()) return std::nullopt;
  size_t sp1_end = m_end;
  while (sp1_end < line.size() && is_blank(line[sp1_end])) ++sp1_end;

  size_t v_start = line.size();
  while (v_start > sp1_end && !is_blank(line[v_start - 1])) --v_start;
  size_t sp2_start = v_start;
  while (sp2_start > sp1_end && is_blank(line[sp2_start - 1])) --sp2_start;
  if (sp2_start <= sp1_end || v_start == line.size()) return std::nullopt;

  RequestTemplate t;
  t.method = std::string(line.substr(0, m_end));
  t.sp_left = std::string(line.substr(m_end, sp1_end - m_end));
  std::string_view uri = line.substr(sp1_end, sp2_start - sp1_end);
  t.sp_right = std::string(line.substr(sp2_start, v_start - sp2_start));
  t.version = std::string(line.substr(v_start));
  t.crlf = "\r\n";
  if (uri.empty()) return std::nullopt;

  t.protocol = t.version.starts_with("RTSP/") ? Protocol::Rtsp : Protocol::Http;

  assign_request_uri(t, uri);

  size_t hdr_start = line_end + 2;
  // Header block must terminate with an empty line.
  size_t blank = bytes.find("\r\n\r\n", line_end);
  if (blank == std::string_view::npos) return std::nullopt;
  std::string_view hdr_block = bytes.substr(hdr_start, blank + 2 - hdr_start);
  if (!parse_headers(hdr_block, &t.headers)) return std::nullopt;
  t.body = std::string(bytes.substr(blank + 4));
  return t;
}

std::optional<RequestTemplate> parse_http_request(std::string_view bytes) {
  auto t = parse_request(bytes);
  if (t && t->protocol != Protocol::Http) return std::nullopt;
  return t;
}

std::optional<RequestTemplate> parse_rtsp_request(std::string_view bytes) {
  auto t = parse_request(bytes);
  if (t && t->protocol != Protocol::Rtsp) return std::nullopt;
  return t;
}

std::string serialize(const RequestTemplate& t) {
  std::string out = t.method + t.sp_left + t.request_uri() + t.sp_right + t.version + t.crlf;
  for (const auto& h : t.headers) out += h.name + h.sep + h.value + "\r\n";
  out += "\r\n";
  out += t.body;
  return out;
}

bool is_well_formed_request(std::string_view bytes) {
  auto t = parse_request(bytes);
  if (!t) return false;
  if (t->sp_left != " " || t->sp_right != " " || t->crlf != "\r\n") return false;
  const std::string& v = t->version;
  size_t slash = v.find('/');
  if (slash == std::string::npos) return false;
  std::string_view name = std::string_view(v).substr(0, slash);
  if (name != "HTTP" && name != "RTSP") return false;
  std::string_view num = std::string_view(v).substr(slash + 1);
  size_t dot = num.find('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 >= num.size()) return false;
  auto all_digits = [](std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
      return std::isdigit(static_cast<unsigned char>(c)) != 0;
    });
  };
  return all_digits(num.substr(0, dot)) && all_digits(num.substr(dot + 1));
}

ResponseView parse_response(std::string_view bytes) {
  ResponseView view;
  view.raw = std::string(bytes);
  size_t line_end = bytes.find("\r\n");
  if (line_end == std::string_view::npos) return view;
  std::string_view line = bytes.substr(0, line_end);

  size_t sp1 = line.find(' ');
  if (sp1 == std::string_view::npos) return view;
  std::string_view version = line.substr(0, sp1);
  if (!version.starts_with("HTTP/") && !version.starts_with("RTSP/")) return view;
  std::string_view rest = line.substr(sp1 + 1);
  size_t sp2 = rest.find(' ');
  std::string_view code = (sp2 == std::string_view::npos) ? rest : rest.substr(0, sp2);
  int status = 0;
  auto [ptr, ec] = std::from_chars(code.data(), code.data() + code.size(), status);
  if (ec != std::errc{} || ptr != code.data() + code.size() || status < 100 || status > 999)
    return view;

  size_t blank = bytes.find("\r\n\r\n", line_end);
  if (blank == std::string_view::npos) return view;
  std::vector<Header> headers;
  if (!parse_headers(bytes.substr(line_end + 2, blank + 2 - (line_end + 2)), &headers))
    return view;

  view.well_formed = true;
  view.version = std::string(version);
  view.status_code = status;
  view.reason = (sp2 == std::string_view::npos) ? "" : std::string(rest.substr(sp2 + 1));
  view.headers = std::move(headers);
  std::string_view body = bytes.substr(blank + 4);
  if (auto cl = parse_content_length(view.headers); cl && *cl < body.size())
    body = body.substr(0, *cl);
  view.body = std::string(body);
  return view;
}

std::optional<size_t> http_message_length(std::string_view buffer) {
  size_t blank = buffer.find("\r\n\r\n");
  if (blank == std::string_view::npos) return std::nullopt;
  size_t hdr_end = blank + 4;
  std::vector<Header> headers;
  size_t line_end = buffer.find("\r\n");
  if (line_end != std::string_view::npos && line_end + 2 <= blank + 2)
    parse_headers(buffer.substr(line_end + 2, blank + 2 - (line_end + 2)), &headers);
  if (auto cl = parse_content_length(headers)) {
    if (buffer.size() < hdr_end + *cl) return std::nullopt;
    return hdr_end + *cl;
  }
  return hdr_end;
}

std::optional<size_t> tplink_message_length(std::string_view buffer) {
  constexpr size_t kMaxFrame = 1u << 20;
  if (buffer.size() < 4) return std::nullopt;
  uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len = (len << 8) | static_cast<uint8_t>(buffer[i]);
  if (len > kMaxFrame) return std::nullopt;
  if (buffer.size() < 4u + len) return std::nullopt;
  return 4u + len;
}

std::optional<CredentialFinding> decode_basic_credential(std::string_view header_value,
                                                         uint32_t packet_index,
                                                         std::string* reject_reason) {
  CredentialFinding finding;
  finding.packet_index = packet_index;
  size_t sp = header_value.find(' ');
  if (sp == std::string_view::npos) {
    finding.scheme = std::string(header_value);
    return finding;
  }
  finding.scheme = std::string(header_value.substr(0, sp));
  std::string_view payload = header_value.substr(sp + 1);
  while (!payload.empty() && payload.front() == ' ') payload.remove_prefix(1);
  finding.encoded = std::string(payload);
  if (finding.scheme != "Basic") return finding;  // passthrough, no decode

  auto decoded = base64_decode(payload);
  if (!decoded) {
    if (reject_reason) *reject_reason = "invalid Base64 in Basic credential";
    return std::nullopt;
  }
  size_t colon = decoded->find(':');
  if (colon == std::string::npos) return finding;  // Basic but no separator
  finding.user = decoded->substr(0, colon);
  finding.pass = decoded->substr(colon + 1);
  return finding;
}

}  // namespace iotfuzz

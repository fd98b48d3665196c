#include "iotfuzz/seeds.hpp"

#include <fstream>
#include <sstream>

#include "iotfuzz/codec.hpp"
#include "iotfuzz/tplink.hpp"

namespace iotfuzz {

std::string to_string(const FieldId& id) {
  switch (id.name) {
    case FieldName::Method: return "method";
    case FieldName::SpLeft: return "sp_left";
    case FieldName::RequestUri: return "request_uri";
    case FieldName::UriScheme: return "uri_scheme";
    case FieldName::UriNetlocPort: return "uri_netloc_port";
    case FieldName::UriPath: return "uri_path";
    case FieldName::UriQuery: return "uri_query";
    case FieldName::SpRight: return "sp_right";
    case FieldName::Version: return "version";
    case FieldName::Crlf: return "crlf";
    case FieldName::HeaderValue: return "header(" + id.header_name + ")";
    case FieldName::Cseq: return "cseq";
    case FieldName::FrameLength: return "frame_length";
    case FieldName::FrameCommand: return "frame_command";
  }
  return "?";
}

std::optional<FieldId> parse_field_id(Protocol protocol, std::string_view name) {
  FieldId id;
  id.protocol = protocol;
  if (name.starts_with("header(") && name.ends_with(")")) {
    id.name = FieldName::HeaderValue;
    id.header_name = std::string(name.substr(7, name.size() - 8));
    if (id.header_name.empty()) return std::nullopt;
    return id;
  }
  static const std::pair<const char*, FieldName> kNames[] = {
      {"method", FieldName::Method},
      {"sp_left", FieldName::SpLeft},
      {"request_uri", FieldName::RequestUri},
      {"uri_scheme", FieldName::UriScheme},
      {"uri_netloc_port", FieldName::UriNetlocPort},
      {"uri_path", FieldName::UriPath},
      {"uri_query", FieldName::UriQuery},
      {"sp_right", FieldName::SpRight},
      {"version", FieldName::Version},
      {"crlf", FieldName::Crlf},
      {"cseq", FieldName::Cseq},
      {"frame_length", FieldName::FrameLength},
      {"frame_command", FieldName::FrameCommand},
  };
  for (const auto& [text, value] : kNames) {
    if (name == text) {
      id.name = value;
      return id;
    }
  }
  return std::nullopt;
}

bool SeedCorpus::add(FieldSeed seed) {
  for (const auto& existing : seeds)
    if (existing.field == seed.field && existing.value == seed.value) return false;
  seeds.push_back(std::move(seed));
  return true;
}

std::vector<std::string> SeedCorpus::values(const FieldId& field) const {
  std::vector<std::string> out;
  for (const auto& s : seeds)
    if (s.field == field) out.push_back(s.value);
  return out;
}

const FieldSeed* SeedCorpus::first(const FieldId& field) const {
  for (const auto& s : seeds)
    if (s.field == field) return &s;
  return nullptr;
}

namespace {

void warn(std::vector<SeedWarning>* warnings, std::string message, uint32_t index) {
  if (warnings) warnings->push_back({std::move(message), index});
}

FieldSeed make_seed(Protocol protocol, FieldName name, std::string value, const FlowMessage& msg,
                    std::string header_name = {}) {
  FieldSeed s;
  s.field = FieldId{protocol, name, std::move(header_name)};
  s.value = std::move(value);
  s.first_packet_index = msg.first_packet_index;
  return s;
}

bool looks_like_response(const FlowMessage& msg) {
  return msg.bytes.starts_with("HTTP/") || msg.bytes.starts_with("RTSP/");
}

std::vector<FieldSeed> extract_text_seeds(Protocol protocol, const FlowMessage& msg,
                                          std::vector<SeedWarning>* warnings) {
  std::vector<FieldSeed> out;
  if (looks_like_response(msg)) return out;
  auto t = parse_request(msg.bytes);
  if (!t || t->protocol != protocol) {
    warn(warnings, "malformed " + to_string(protocol) + " request line", msg.first_packet_index);
    return out;
  }
  out.push_back(make_seed(protocol, FieldName::Method, t->method, msg));
  out.push_back(make_seed(protocol, FieldName::SpLeft, t->sp_left, msg));
  out.push_back(make_seed(protocol, FieldName::RequestUri, t->request_uri(), msg));
  if (!t->uri_scheme.empty())
    out.push_back(make_seed(protocol, FieldName::UriScheme, t->uri_scheme, msg));
  if (!t->uri_netloc_port.empty())
    out.push_back(make_seed(protocol, FieldName::UriNetlocPort, t->uri_netloc_port, msg));
  out.push_back(make_seed(protocol, FieldName::UriPath, t->uri_path, msg));
  if (t->uri_query)
    out.push_back(make_seed(protocol, FieldName::UriQuery, *t->uri_query, msg));
  out.push_back(make_seed(protocol, FieldName::SpRight, t->sp_right, msg));
  out.push_back(make_seed(protocol, FieldName::Version, t->version, msg));
  out.push_back(make_seed(protocol, FieldName::Crlf, t->crlf, msg));

  if (protocol == Protocol::Http) {
    for (const char* name : {"Authorization", "Accept", "Host"}) {
      if (const std::string* value = t->find_header(name))
        out.push_back(make_seed(protocol, FieldName::HeaderValue, *value, msg, name));
    }
  } else {
    if (const std::string* cseq = t->find_header("CSeq"))
      out.push_back(make_seed(protocol, FieldName::Cseq, *cseq, msg));
  }
  return out;
}

}  // namespace

std::vector<FieldSeed> extract_http_seeds(const FlowMessage& msg,
                                          std::vector<SeedWarning>* warnings) {
  return extract_text_seeds(Protocol::Http, msg, warnings);
}

std::vector<FieldSeed> extract_rtsp_seeds(const FlowMessage& msg,
                                          std::vector<SeedWarning>* warnings) {
  return extract_text_seeds(Protocol::Rtsp, msg, warnings);
}

std::vector<FieldSeed> extract_tplink_seeds(const FlowMessage& msg,
                                            std::vector<SeedWarning>* warnings) {
  std::vector<FieldSeed> out;
  auto cipher = tplink_unframe(msg.bytes);
  if (!cipher) {
    warn(warnings, "TP-Link length prefix does not match frame size", msg.first_packet_index);
    return out;
  }
  if (cipher->empty()) {
    warn(warnings, "zero-length TP-Link frame", msg.first_packet_index);
    return out;
  }
  out.push_back(make_seed(Protocol::TplinkSmartHome, FieldName::FrameLength,
                          msg.bytes.substr(0, 4), msg));
  out.push_back(make_seed(Protocol::TplinkSmartHome, FieldName::FrameCommand,
                          std::string(*cipher), msg));
  return out;
}

SeedCorpus build_corpus(const std::vector<FlowMessage>& msgs, std::string device_label,
                        std::vector<SeedWarning>* warnings) {
  SeedCorpus corpus;
  corpus.device_label = std::move(device_label);
  for (const auto& msg : msgs) {
    std::vector<FieldSeed> seeds;
    switch (msg.protocol_guess) {
      case Protocol::Http:
        seeds = extract_http_seeds(msg, warnings);
        break;
      case Protocol::Rtsp:
        seeds = extract_rtsp_seeds(msg, warnings);
        break;
      case Protocol::TplinkSmartHome:
        // Responses are never fuzzed; only to-device frames seed the corpus.
        if (msg.direction == Direction::ToDevice) seeds = extract_tplink_seeds(msg, warnings);
        break;
      case Protocol::Unknown:
        break;
    }
    for (auto& s : seeds) corpus.add(std::move(s));
  }
  return corpus;
}

std::string export_corpus(const SeedCorpus& corpus) {
  std::string out = "# seed corpus";
  if (!corpus.device_label.empty()) out += " device=" + corpus.device_label;
  out += "\n";
  for (const auto& s : corpus.seeds) {
    out += to_string(s.field.protocol);
    out += '\t';
    out += to_string(s.field);
    out += '\t';
    out += base64_encode(s.value);
    out += '\n';
  }
  return out;
}

SeedCorpus import_corpus(std::string_view text) {
  SeedCorpus corpus;
  std::istringstream in{std::string(text)};
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.front() == '#') {
      size_t at = line.find("device=");
      if (at != std::string::npos) corpus.device_label = line.substr(at + 7);
      continue;
    }
    size_t t1 = line.find('\t');
    size_t t2 = (t1 == std::string::npos) ? std::string::npos : line.find('\t', t1 + 1);
    if (t2 == std::string::npos)
      throw std::runtime_error("corpus line " + std::to_string(line_no) + ": expected 3 fields");
    auto protocol = parse_protocol(line.substr(0, t1));
    auto field = protocol ? parse_field_id(*protocol, std::string_view(line).substr(t1 + 1, t2 - t1 - 1))
                          : std::nullopt;
    auto value = base64_decode(std::string_view(line).substr(t2 + 1));
    if (!protocol || !field || !value)
      throw std::runtime_error("corpus line " + std::to_string(line_no) + ": unparseable entry");
    FieldSeed seed;
    seed.field = *field;
    seed.value = *value;
    corpus.add(std::move(seed));
  }
  return corpus;
}

void save_corpus(const SeedCorpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write corpus file: " + path);
  out << export_corpus(corpus);
}

SeedCorpus load_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read corpus file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return import_corpus(text);
}

}  // namespace iotfuzz

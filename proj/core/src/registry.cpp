#include "iotfuzz/registry.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

namespace iotfuzz {

namespace {

// Table of known TP-Link SmartHome command ciphers (length prefix already
// stripped), used for whole-command dictionary substitution.
const char* kTplinkCommandCiphersB64[] = {
    "0PDSodir37rX9c+0lLbRtMCf7JXmj+GH6MrwnuuH68u2lus=",              // get_sysinfo
    "0PKB+Iv/mvfV75S2xaDUi/mc8JHot8Sw0aXA4tijgfKG55P21O7fot+i",      // relay on
    "0PKB+Iv/mvfV75S2xaDUi/mc8JHot8Sw0aXA4tijgfKG55P21O7eo96j",      // relay off
    "0PDSt9q/y67c/sS/n73av8uU5oPijvqT/pu5g+2Y9Ji4xeWY",              // emeter realtime
};

}  // namespace

Dictionaries Dictionaries::builtin() {
  Dictionaries d;
  d.http_methods = {"GET", "POST", "OPTIONS", "HEAD", "TRACE", "CONNECT", "PUT", "DELETE"};
  d.rtsp_methods = {"DESCRIBE", "ANNOUNCE", "OPTIONS",       "PLAY",         "SETUP",
                    "PAUSE",    "TEARDOWN", "SET_PARAMETER", "GET_PARAMETER"};
  d.http_schemes = {"http://", "http"};
  d.rtsp_schemes = {"rtsp://", "rtsp"};
  d.http_versions = {"HTTP/1.0", "HTTP/1.1"};
  d.rtsp_versions = {"RTSP/1.0"};
  d.http_query_commands = {"-step=0&-act=left", "-step=0&-act=right", "-a=ledt"};
  for (const char* b64 : kTplinkCommandCiphersB64) d.tplink_commands.push_back(*base64_decode(b64));
  return d;
}

const std::vector<std::string>* Dictionaries::for_field(const FieldId& field) const {
  switch (field.name) {
    case FieldName::Method:
      return field.protocol == Protocol::Rtsp ? &rtsp_methods : &http_methods;
    case FieldName::UriScheme:
      return field.protocol == Protocol::Rtsp ? &rtsp_schemes : &http_schemes;
    case FieldName::Version:
      return field.protocol == Protocol::Rtsp ? &rtsp_versions : &http_versions;
    case FieldName::UriQuery:
      return field.protocol == Protocol::Http && !http_query_commands.empty()
                 ? &http_query_commands
                 : nullptr;
    case FieldName::FrameCommand:
      return &tplink_commands;
    default:
      return nullptr;
  }
}

const VulnerabilityDescriptor* Registry::find(std::string_view id) const {
  for (const auto& v : vulns)
    if (v.id == id) return &v;
  return nullptr;
}

const std::string& builtin_registry_text() {
  static const std::string text = R"(id: D3D_000
protocol: HTTP
mode: passive
port: 80
match: authorization-basic
info: access credential leakage via Basic authorization header in captured traffic
-
id: D3D_001
protocol: RTSP
mode: active
port: 554
mutate: method, uri_netloc_port, uri_path, cseq, sp_left, sp_right, version, crlf
match: rtsp-200-cseq-echo
campaign: 200
info: live video stream reachable through mutated RTSP requests
-
id: D3D_002
protocol: HTTP
mode: active
port: 80
mutate: uri_path, uri_query, sp_left, sp_right, version, crlf
fixed-header: Authorization
match: http-200-jpeg
exploit: jpeg-capture
campaign: 200
info: live image fetched through mutated image-path requests
-
id: D3D_003
protocol: HTTP
mode: active
port: 80
mutate: uri_path, uri_query, sp_left, sp_right, version, crlf
fixed-header: Authorization
match: http-200-set-ok
campaign: 200
info: command execution through mutated control-CGI requests
-
id: Ezviz_000
protocol: RTSP
mode: active
port: 554
mutate: method, uri_netloc_port, uri_path, cseq, sp_left, sp_right, version, crlf
match: rtsp-200-cseq-echo
campaign: 200
info: live video stream reachable through mutated RTSP requests
-
id: Ezviz_001
protocol: HTTP
mode: active
port: 80
mutate: uri_path, uri_query, sp_left, sp_right, version, crlf
match: http-200-jpeg
exploit: jpeg-capture
campaign: 200
info: live image fetched through mutated image-path requests
-
id: TPLink_Kasa_000
protocol: TPLINK_SMARTHOME
mode: active
port: 9999
mutate: frame_command
match: tplink-err-code-0
campaign: 200
info: unauthenticated command injection over the SmartHome/JSON channel
)";
  return text;
}

namespace {

std::string trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  size_t e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos <= s.size()) {
    size_t comma = s.find(',', pos);
    std::string item = trim(std::string_view(s).substr(
        pos, comma == std::string::npos ? std::string::npos : comma - pos));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

VulnerabilityDescriptor parse_entry(const std::vector<std::pair<std::string, std::string>>& kv,
                                    Dictionaries* dicts) {
  VulnerabilityDescriptor v;
  std::optional<Protocol> protocol;
  std::vector<std::string> mutate_names;
  for (const auto& [key, value] : kv) {
    if (key == "id") v.id = value;
    else if (key == "protocol") protocol = parse_protocol(value);
    else if (key == "mode") {
      if (value == "passive") v.mode = VulnMode::Passive;
      else if (value == "active") v.mode = VulnMode::Active;
      else throw RegistryError("entry '" + v.id + "': unknown mode '" + value + "'");
    } else if (key == "port") v.default_port = static_cast<uint16_t>(std::stoi(value));
    else if (key == "mutate") mutate_names = split_list(value);
    else if (key == "fixed-header") v.fixed_headers.push_back(value);
    else if (key == "campaign") v.campaign_size = std::stoi(value);
    else if (key == "match") v.validity_rule = value;
    else if (key == "exploit") v.exploit_rule = value;
    else if (key == "risk-budget") v.structure_risk_budget = std::stod(value);
    else if (key == "mutate-length") v.mutate_length = value == "true";
    else if (key == "info") v.info = value;
    else if (key.starts_with("dict.")) {
      if (!dicts) continue;
      std::string name = key.substr(5);
      std::vector<std::string> values = split_list(value);
      if (name == "http_methods") dicts->http_methods = values;
      else if (name == "rtsp_methods") dicts->rtsp_methods = values;
      else if (name == "http_query_commands") dicts->http_query_commands = values;
      else if (name == "tplink_commands_b64") {
        dicts->tplink_commands.clear();
        for (const auto& b64 : values) {
          auto raw = base64_decode(b64);
          if (!raw) throw RegistryError("entry '" + v.id + "': bad base64 in " + key);
          dicts->tplink_commands.push_back(*raw);
        }
      } else {
        throw RegistryError("unknown dictionary '" + name + "'");
      }
    } else {
      throw RegistryError("entry '" + v.id + "': unknown key '" + key + "'");
    }
  }
  if (v.id.empty()) throw RegistryError("registry entry without id");
  if (!protocol || *protocol == Protocol::Unknown)
    throw RegistryError("entry '" + v.id + "': missing or bad protocol");
  v.protocol = *protocol;
  if (v.mode == VulnMode::Active && v.validity_rule.empty())
    throw RegistryError("entry '" + v.id + "': active entry needs a match rule");
  for (const auto& name : mutate_names) {
    auto field = parse_field_id(v.protocol, name);
    if (!field) throw RegistryError("entry '" + v.id + "': unknown field '" + name + "'");
    v.mutable_fields.push_back(*field);
  }
  if (v.mode == VulnMode::Passive && !v.mutable_fields.empty())
    throw RegistryError("entry '" + v.id + "': passive entries take no mutable fields");
  return v;
}

}  // namespace

Registry parse_registry(std::string_view text) {
  Registry registry;
  std::istringstream in{std::string(text)};
  std::string line;
  std::vector<std::pair<std::string, std::string>> kv;
  std::unordered_set<std::string> ids;

  auto flush = [&] {
    if (kv.empty()) return;
    VulnerabilityDescriptor v = parse_entry(kv, &registry.dicts);
    if (!ids.insert(v.id).second) throw RegistryError("duplicate vulnerability id '" + v.id + "'");
    registry.vulns.push_back(std::move(v));
    kv.clear();
  };

  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (t == "-") {
      flush();
      continue;
    }
    size_t colon = t.find(':');
    if (colon == std::string::npos)
      throw RegistryError("registry line is not key:value: '" + t + "'");
    kv.emplace_back(trim(std::string_view(t).substr(0, colon)),
                    trim(std::string_view(t).substr(colon + 1)));
  }
  flush();
  return registry;
}

Registry load_registry(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RegistryError("cannot read registry file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_registry(text);
}

Registry builtin_registry() { return parse_registry(builtin_registry_text()); }

}  // namespace iotfuzz

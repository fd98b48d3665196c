#include "iotfuzz/mock.hpp"

#include <arpa/inet.h>
#include <errno.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "iotfuzz/codec.hpp"
#include "iotfuzz/tplink.hpp"
#include "json.hpp"

namespace iotfuzz {

namespace {

// Smallest JPEG that still satisfies an SOI check: SOI, minimal segments, EOI.
std::string minimal_jpeg() {
  static const uint8_t bytes[] = {0xFF, 0xD8, 0xFF, 0xE0, 0x00, 0x10, 'J',  'F',
                                  'I',  'F',  0x00, 0x01, 0x01, 0x00, 0x00, 0x01,
                                  0x00, 0x01, 0x00, 0x00, 0xFF, 0xD9};
  return std::string(reinterpret_cast<const char*>(bytes), sizeof(bytes));
}

size_t levenshtein(std::string_view a, std::string_view b, size_t cap) {
  if (a.size() > b.size()) std::swap(a, b);
  if (b.size() - a.size() > cap) return cap + 1;
  std::vector<size_t> row(a.size() + 1);
  for (size_t i = 0; i <= a.size(); ++i) row[i] = i;
  for (size_t j = 1; j <= b.size(); ++j) {
    size_t prev = row[0];
    row[0] = j;
    size_t best = row[0];
    for (size_t i = 1; i <= a.size(); ++i) {
      size_t cur = row[i];
      row[i] = std::min({row[i] + 1, row[i - 1] + 1, prev + (a[i - 1] == b[j - 1] ? 0 : 1)});
      prev = cur;
      best = std::min(best, row[i]);
    }
    if (best > cap) return cap + 1;
  }
  return row[a.size()];
}

std::string status_line(Protocol protocol, int code, const char* reason) {
  std::string out = protocol == Protocol::Rtsp ? "RTSP/1.0 " : "HTTP/1.1 ";
  out += std::to_string(code);
  out += ' ';
  out += reason;
  out += "\r\n";
  return out;
}

std::string http_reply(Protocol protocol, int code, const char* reason,
                       const std::vector<std::pair<std::string, std::string>>& headers,
                       const std::string& body) {
  std::string out = status_line(protocol, code, reason);
  for (const auto& [name, value] : headers) out += name + ": " + value + "\r\n";
  out += "Content-Length: " + std::to_string(body.size()) + "\r\n\r\n";
  out += body;
  return out;
}

}  // namespace

MockBehavior MockBehavior::d3d_http(uint16_t port) {
  MockBehavior b;
  b.device = MockDevice::D3D;
  b.protocol = Protocol::Http;
  b.listen_port = port;
  b.auth_required = true;
  b.expected_basic = "Basic YWRtaW46YWRtaW4xMjM=";
  b.matcher = MatcherMode::Lenient;
  b.routes = {"/web/cgi-bin/hi3510/ptzctrl.cgi", "/cgi-bin/hi3510/param.cgi"};
  b.image_routes = {"/tmpfs/auto.jpg"};
  return b;
}

MockBehavior MockBehavior::d3d_rtsp(uint16_t port) {
  MockBehavior b;
  b.device = MockDevice::D3D;
  b.protocol = Protocol::Rtsp;
  b.listen_port = port;
  b.matcher = MatcherMode::Lenient;
  b.routes = {"/", "/11", "/12"};
  return b;
}

MockBehavior MockBehavior::ezviz_http(uint16_t port) {
  MockBehavior b;
  b.device = MockDevice::Ezviz;
  b.protocol = Protocol::Http;
  b.listen_port = port;
  b.matcher = MatcherMode::Lenient;
  b.image_routes = {"/tmpfs/auto.jpg", "/snapshot.jpg"};
  return b;
}

MockBehavior MockBehavior::ezviz_rtsp(uint16_t port) {
  MockBehavior b;
  b.device = MockDevice::Ezviz;
  b.protocol = Protocol::Rtsp;
  b.listen_port = port;
  b.matcher = MatcherMode::Lenient;
  b.routes = {"/", "/0", "/1", "/1/stream1", "/stream2"};
  return b;
}

MockBehavior MockBehavior::tplink(uint16_t port) {
  MockBehavior b;
  b.device = MockDevice::Tplink;
  b.protocol = Protocol::TplinkSmartHome;
  b.listen_port = port;
  b.sysinfo_json =
      R"json({"system":{"get_sysinfo":{"sw_ver":"1.5.6","model":"HS110(EU)","relay_state":0,"err_code":0}}})json";
  return b;
}

MockBehavior load_mock_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read mock config: " + path);
  MockBehavior b;
  bool have_device = false;
  std::string line;
  size_t line_no = 0;
  auto b64_item = [&](std::string_view value) {
    auto raw = base64_decode(value);
    if (!raw)
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad base64 value");
    return *raw;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    size_t colon = line.find(':');
    if (colon == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected key: value");
    std::string key = line.substr(0, colon);
    std::string value = line.substr(colon + 1);
    while (!value.empty() && value.front() == ' ') value.erase(value.begin());

    if (key == "device") {
      if (value == "d3d") b.device = MockDevice::D3D;
      else if (value == "ezviz") b.device = MockDevice::Ezviz;
      else if (value == "tplink") b.device = MockDevice::Tplink;
      else throw std::runtime_error(path + ": unknown device '" + value + "'");
      have_device = true;
    } else if (key == "protocol") {
      auto p = parse_protocol(value);
      if (!p) throw std::runtime_error(path + ": unknown protocol '" + value + "'");
      b.protocol = *p;
    } else if (key == "port") b.listen_port = static_cast<uint16_t>(std::stoi(value));
    else if (key == "auth-required") b.auth_required = value == "true";
    else if (key == "expected-basic") b.expected_basic = value;
    else if (key == "matcher") {
      if (value == "exact") b.matcher = MatcherMode::Exact;
      else if (value == "lenient") b.matcher = MatcherMode::Lenient;
      else if (value == "scripted") b.matcher = MatcherMode::Scripted;
      else throw std::runtime_error(path + ": unknown matcher '" + value + "'");
    } else if (key == "lenient-distance") b.lenient_distance = std::stoi(value);
    else if (key == "route") b.routes.push_back(value);
    else if (key == "image-route") b.image_routes.push_back(value);
    else if (key == "accept-b64") b.accept_list.push_back(b64_item(value));
    else if (key == "reject-400-b64") b.reject_400_list.push_back(b64_item(value));
    else if (key == "drop-b64") b.drop_list.push_back(b64_item(value));
    else if (key == "drop-every") b.drop_every = std::stoi(value);
    else if (key == "stall-ms") b.stall_ms = std::stoi(value);
    else if (key == "silent-close-unknown") b.silent_close_unknown = value == "true";
    else if (key == "set-ok-body") b.set_ok_body = value;
    else if (key == "sysinfo-json") b.sysinfo_json = value;
    else throw std::runtime_error(path + ": unknown key '" + key + "'");
  }
  if (!have_device) throw std::runtime_error(path + ": missing device key");
  return b;
}

MockServer::MockServer(MockBehavior behavior) : behavior_(std::move(behavior)) {
  if (behavior_.jpeg_body.empty()) behavior_.jpeg_body = minimal_jpeg();
  if (behavior_.sysinfo_json.empty())
    behavior_.sysinfo_json = R"({"system":{"get_sysinfo":{"err_code":0}}})";
}

MockServer::~MockServer() { stop(); }

void MockServer::start() {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(behavior_.listen_port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
    int err = errno;
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw std::runtime_error(std::string("bind: ") + std::strerror(err));
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  if (::listen(listen_fd_, 64) < 0) {
    int err = errno;
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw std::runtime_error(std::string("listen: ") + std::strerror(err));
  }
  running_ = true;
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void MockServer::stop() {
  if (!running_.exchange(false)) {
    if (accept_thread_.joinable()) accept_thread_.join();
    return;
  }
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  listen_fd_ = -1;
  if (accept_thread_.joinable()) accept_thread_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard<std::mutex> lock(workers_mu_);
    workers.swap(workers_);
  }
  for (auto& w : workers)
    if (w.joinable()) w.join();
}

void MockServer::accept_loop() {
  while (running_) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (!running_) return;
      if (errno == EINTR) continue;
      return;
    }
    uint64_t conn_no = ++conn_count_;
    std::lock_guard<std::mutex> lock(workers_mu_);
    // Reap finished-but-unjoined workers opportunistically.
    if (workers_.size() > 64) {
      for (auto& w : workers_) w.join();
      workers_.clear();
    }
    workers_.emplace_back([this, fd, conn_no] { handle_connection(fd, conn_no); });
  }
}

void MockServer::handle_connection(int fd, uint64_t conn_no) {
  struct Closer {
    int fd;
    ~Closer() { ::close(fd); }
  } closer{fd};

  timeval tv{2, 0};
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));

  if (behavior_.drop_every > 0 && conn_no % behavior_.drop_every == 0) return;

  std::string buf;
  char chunk[4096];
  auto have_message = [&]() -> std::optional<size_t> {
    if (behavior_.protocol == Protocol::TplinkSmartHome) return tplink_message_length(buf);
    return http_message_length(buf);
  };
  while (running_) {
    if (auto len = have_message()) {
      std::string request = buf.substr(0, *len);
      if (behavior_.stall_ms > 0)
        std::this_thread::sleep_for(std::chrono::milliseconds(behavior_.stall_ms));
      std::string reply = respond(request);
      if (reply.empty()) return;  // drop: close without answering
      size_t off = 0;
      while (off < reply.size()) {
        ssize_t n = ::send(fd, reply.data() + off, reply.size() - off, MSG_NOSIGNAL);
        if (n <= 0) return;
        off += static_cast<size_t>(n);
      }
      return;  // one exchange per connection, like the real devices
    }
    ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
    if (n <= 0) return;
    buf.append(chunk, static_cast<size_t>(n));
    if (buf.size() > (1u << 20)) return;
  }
}

std::string MockServer::respond(const std::string& request) const {
  if (behavior_.matcher == MatcherMode::Scripted) {
    for (const auto& r : behavior_.drop_list)
      if (r == request) return {};
    for (const auto& r : behavior_.reject_400_list)
      if (r == request)
        return http_reply(behavior_.protocol, 400, "Bad Request", {}, "");
    bool accepted = false;
    for (const auto& r : behavior_.accept_list)
      if (r == request) accepted = true;
    if (!accepted) {
      if (behavior_.silent_close_unknown || behavior_.protocol == Protocol::TplinkSmartHome)
        return {};
      return http_reply(behavior_.protocol, 404, "Not Found", {}, "");
    }
    // Accepted requests answer as if they hit a known route; the path in
    // the script may be arbitrarily mutated so route matching is skipped.
    switch (behavior_.protocol) {
      case Protocol::Http:
        if (!behavior_.image_routes.empty())
          return http_reply(Protocol::Http, 200, "OK", {{"Content-Type", "image/jpeg"}},
                            behavior_.jpeg_body);
        return http_reply(Protocol::Http, 200, "OK", {{"Content-Type", "text/plain"}},
                          behavior_.set_ok_body);
      case Protocol::Rtsp: {
        std::vector<std::pair<std::string, std::string>> headers;
        if (auto req = parse_request(request))
          if (const std::string* cseq = req->find_header("CSeq"))
            headers.emplace_back("CSeq", *cseq);
        return http_reply(Protocol::Rtsp, 200, "OK", headers, "");
      }
      case Protocol::TplinkSmartHome:
        return respond_tplink(request);
      case Protocol::Unknown:
        return {};
    }
  }
  switch (behavior_.protocol) {
    case Protocol::Http: return respond_http(request);
    case Protocol::Rtsp: return respond_rtsp(request);
    case Protocol::TplinkSmartHome: return respond_tplink(request);
    case Protocol::Unknown: break;
  }
  return {};
}

std::string MockServer::respond_http(const std::string& request) const {
  auto req = parse_request(request);
  if (!req || req->protocol != Protocol::Http)
    return http_reply(Protocol::Http, 400, "Bad Request", {}, "");
  if (behavior_.auth_required) {
    const std::string* auth = req->find_header("Authorization");
    if (!auth || *auth != behavior_.expected_basic)
      return http_reply(Protocol::Http, 401, "Unauthorized",
                        {{"WWW-Authenticate", "Basic realm=\"device\""}}, "");
  }

  size_t cap = behavior_.matcher == MatcherMode::Lenient
                   ? static_cast<size_t>(behavior_.lenient_distance)
                   : 0;
  auto matches = [&](const std::vector<std::string>& routes) {
    for (const auto& r : routes)
      if (levenshtein(req->uri_path, r, cap) <= cap) return true;
    return false;
  };
  if (matches(behavior_.image_routes))
    return http_reply(Protocol::Http, 200, "OK", {{"Content-Type", "image/jpeg"}},
                      behavior_.jpeg_body);
  if (matches(behavior_.routes))
    return http_reply(Protocol::Http, 200, "OK", {{"Content-Type", "text/plain"}},
                      behavior_.set_ok_body);
  if (behavior_.silent_close_unknown) return {};
  return http_reply(Protocol::Http, 404, "Not Found", {}, "");
}

std::string MockServer::respond_rtsp(const std::string& request) const {
  auto req = parse_request(request);
  if (!req || req->protocol != Protocol::Rtsp)
    return http_reply(Protocol::Rtsp, 400, "Bad Request", {}, "");
  const std::string* cseq = req->find_header("CSeq");
  std::vector<std::pair<std::string, std::string>> headers;
  if (cseq) headers.emplace_back("CSeq", *cseq);

  size_t cap = behavior_.matcher == MatcherMode::Lenient
                   ? static_cast<size_t>(behavior_.lenient_distance)
                   : 0;
  bool known = false;
  std::string path = req->uri_path.empty() ? "/" : req->uri_path;
  for (const auto& r : behavior_.routes)
    if (levenshtein(path, r, cap) <= cap) known = true;
  if (!known) {
    if (behavior_.silent_close_unknown) return {};
    return http_reply(Protocol::Rtsp, 404, "Not Found", headers, "");
  }
  if (req->method == "OPTIONS")
    headers.emplace_back("Public", "OPTIONS, DESCRIBE, SETUP, TEARDOWN, PLAY, PAUSE");
  if (req->method == "DESCRIBE") {
    headers.emplace_back("Content-Type", "application/sdp");
    return http_reply(Protocol::Rtsp, 200, "OK", headers, "v=0\r\ns=mock stream\r\n");
  }
  return http_reply(Protocol::Rtsp, 200, "OK", headers, "");
}

std::string MockServer::respond_tplink(const std::string& request) const {
  auto cipher = tplink_unframe(request);
  if (!cipher) return {};  // a real plug just hangs up on bad frames
  std::string plain = tplink_decode(*cipher);
  auto j = nlohmann::json::parse(plain, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return {};

  nlohmann::json reply = nlohmann::json::object();
  for (const auto& [ns, cmds] : j.items()) {
    if (!cmds.is_object()) return {};
    nlohmann::json ns_reply = nlohmann::json::object();
    for (const auto& [cmd, args] : cmds.items()) {
      (void)args;
      if (ns == "system" && cmd == "get_sysinfo") {
        auto canned = nlohmann::json::parse(behavior_.sysinfo_json, nullptr, false);
        if (!canned.is_discarded() && canned.contains("system") &&
            canned["system"].contains("get_sysinfo"))
          ns_reply[cmd] = canned["system"]["get_sysinfo"];
        else
          ns_reply[cmd] = {{"err_code", 0}};
      } else {
        // The plug acks every recognised-shape command with err_code 0,
        // authentication never enters the picture.
        ns_reply[cmd] = {{"err_code", 0}};
      }
    }
    reply[ns] = std::move(ns_reply);
  }
  return tplink_frame(tplink_encode(reply.dump()));
}

}  // namespace iotfuzz

#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "iotfuzz/net_types.hpp"

namespace iotfuzz {

enum class MatcherMode { Exact, Lenient, Scripted };
enum class MockDevice { D3D, Ezviz, Tplink };

// Desk-scale stand-in for one device service (one listening port). A
// camera is modelled as two servers, HTTP and RTSP, with separate
// behaviors. Robust against arbitrary bytes by construction.
struct MockBehavior {
  MockDevice device = MockDevice::D3D;
  Protocol protocol = Protocol::Http;
  uint16_t listen_port = 0;  // 0 = ephemeral

  bool auth_required = false;
  std::string expected_basic;  // full header value, e.g. "Basic YWRt..."

  MatcherMode matcher = MatcherMode::Exact;
  int lenient_distance = 2;
  std::vector<std::string> routes;       // known-good URI paths
  std::vector<std::string> image_routes; // paths answered with a JPEG body

  // Scripted mode: byte-exact request matching, nothing else accepted.
  std::vector<std::string> accept_list;
  std::vector<std::string> reject_400_list;
  std::vector<std::string> drop_list;  // close without responding

  int drop_every = 0;  // fault schedule: drop every Nth connection (1-based)
  int stall_ms = 0;    // delay before responding
  bool silent_close_unknown = false;

  std::string set_ok_body = "[Succeed] set ok.";
  std::string jpeg_body;      // defaults to a minimal JPEG (SOI..EOI)
  std::string sysinfo_json;   // canned get_sysinfo reply

  static MockBehavior d3d_http(uint16_t port = 0);
  static MockBehavior d3d_rtsp(uint16_t port = 0);
  static MockBehavior ezviz_http(uint16_t port = 0);
  static MockBehavior ezviz_rtsp(uint16_t port = 0);
  static MockBehavior tplink(uint16_t port = 0);
};

MockBehavior load_mock_config(const std::string& path);

class MockServer {
 public:
  explicit MockServer(MockBehavior behavior);
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  void start();  // throws std::runtime_error on bind failure
  void stop();
  uint16_t port() const { return port_; }
  uint64_t connections_seen() const { return conn_count_.load(); }

 private:
  void accept_loop();
  void handle_connection(int fd, uint64_t conn_no);
  std::string respond(const std::string& request) const;  // empty = drop
  std::string respond_http(const std::string& request) const;
  std::string respond_rtsp(const std::string& request) const;
  std::string respond_tplink(const std::string& request) const;

  MockBehavior behavior_;
  int listen_fd_ = -1;
  uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::atomic<uint64_t> conn_count_{0};
  std::thread accept_thread_;
  std::mutex workers_mu_;
  std::vector<std::thread> workers_;
};

}  // namespace iotfuzz

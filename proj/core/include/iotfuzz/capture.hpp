#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iotfuzz/net_types.hpp"

namespace iotfuzz {

/// Reads classic pcap files (Ethernet II + IPv4 + TCP) and reassembles
/// per-flow application messages. In-order-only: segments are concatenated
/// by capture ordinal, no sequence-number tracking.

struct CaptureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Direction { ToDevice, FromDevice };

struct PacketRecord {
  uint32_t index = 0;  // ordinal in capture, strictly increasing
  uint32_t ts_sec = 0;
  uint32_t ts_usec = 0;
  uint32_t src_ip = 0;
  uint32_t dst_ip = 0;
  uint16_t src_port = 0;
  uint16_t dst_port = 0;
  Direction direction = Direction::ToDevice;
  std::string payload;  // TCP payload only, never empty
};

struct CaptureResult {
  std::vector<PacketRecord> records;
  size_t skipped_non_tcp = 0;
  size_t skipped_empty = 0;
};

CaptureResult load_capture(const std::string& path, uint32_t device_ip);

struct FlowKey {
  uint32_t src_ip = 0;
  uint16_t src_port = 0;
  uint32_t dst_ip = 0;
  uint16_t dst_port = 0;
  bool operator==(const FlowKey&) const = default;
};

struct FlowMessage {
  FlowKey flow;
  Protocol protocol_guess = Protocol::Unknown;
  std::string bytes;
  uint32_t first_packet_index = 0;
  Direction direction = Direction::ToDevice;
};

std::vector<FlowMessage> reassemble(const std::vector<PacketRecord>& records);

}  // namespace iotfuzz

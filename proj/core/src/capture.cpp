#include "iotfuzz/capture.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>
#include <tuple>

#include "iotfuzz/codec.hpp"

namespace iotfuzz {

namespace {

constexpr uint32_t kPcapMagicNative = 0xa1b2c3d4u;
constexpr uint32_t kPcapMagicSwapped = 0xd4c3b2a1u;
constexpr uint32_t kLinkTypeEthernet = 1;

struct Reader {
  const std::string& data;
  size_t pos = 0;
  bool swap = false;

  bool remaining(size_t n) const { return pos + n <= data.size(); }

  uint32_t u32() {
    uint32_t v;
    std::memcpy(&v, data.data() + pos, 4);
    pos += 4;
    return swap ? __builtin_bswap32(v) : v;
  }
  uint16_t u16be() {
    uint16_t v = static_cast<uint16_t>((static_cast<uint8_t>(data[pos]) << 8) |
                                       static_cast<uint8_t>(data[pos + 1]));
    pos += 2;
    return v;
  }
  uint32_t u32be() {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | static_cast<uint8_t>(data[pos + i]);
    pos += 4;
    return v;
  }
};

}  // namespace

CaptureResult load_capture(const std::string& path, uint32_t device_ip) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CaptureError("cannot open capture file: " + path);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (data.size() < 24) throw CaptureError("not a pcap file (truncated global header): " + path);
  Reader r{data};
  uint32_t magic = r.u32();
  if (magic == kPcapMagicSwapped) {
    r.swap = true;
  } else if (magic != kPcapMagicNative) {
    throw CaptureError("not a classic pcap file (bad magic): " + path);
  }
  r.pos += 16;  // version, thiszone, sigfigs, snaplen
  uint32_t linktype = r.u32();
  if (linktype != kLinkTypeEthernet)
    throw CaptureError("unsupported link type " + std::to_string(linktype) + " in " + path);

  CaptureResult result;
  uint32_t index = 0;
  while (r.pos < data.size()) {
    size_t record_offset = r.pos;
    if (!r.remaining(16))
      throw CaptureError("truncated record header at byte offset " + std::to_string(record_offset));
    uint32_t ts_sec = r.u32();
    uint32_t ts_usec = r.u32();
    uint32_t incl_len = r.u32();
    r.u32();  // orig_len
    if (!r.remaining(incl_len))
      throw CaptureError("truncated capture record at byte offset " + std::to_string(record_offset));

    size_t frame = r.pos;
    size_t frame_end = frame + incl_len;
    r.pos = frame_end;
    ++index;

    // Ethernet II
    if (incl_len < 14) { ++result.skipped_non_tcp; continue; }
    uint16_t ethertype = static_cast<uint16_t>((static_cast<uint8_t>(data[frame + 12]) << 8) |
                                               static_cast<uint8_t>(data[frame + 13]));
    if (ethertype != 0x0800) { ++result.skipped_non_tcp; continue; }

    // IPv4
    size_t ip = frame + 14;
    if (ip + 20 > frame_end) { ++result.skipped_non_tcp; continue; }
    uint8_t vihl = static_cast<uint8_t>(data[ip]);
    if ((vihl >> 4) != 4) { ++result.skipped_non_tcp; continue; }
    size_t ihl = (vihl & 0x0f) * 4u;
    uint16_t total_len = static_cast<uint16_t>((static_cast<uint8_t>(data[ip + 2]) << 8) |
                                               static_cast<uint8_t>(data[ip + 3]));
    uint8_t proto = static_cast<uint8_t>(data[ip + 9]);
    if (proto != 6) { ++result.skipped_non_tcp; continue; }
    if (ip + total_len > frame_end || ihl < 20 || total_len < ihl) {
      ++result.skipped_non_tcp;
      continue;
    }
    Reader addr{data};
    addr.pos = ip + 12;
    uint32_t src_ip = addr.u32be();
    uint32_t dst_ip = addr.u32be();

    // TCP
    size_t tcp = ip + ihl;
    if (tcp + 20 > frame_end) { ++result.skipped_non_tcp; continue; }
    Reader ports{data};
    ports.pos = tcp;
    uint16_t src_port = ports.u16be();
    uint16_t dst_port = ports.u16be();
    size_t doff = ((static_cast<uint8_t>(data[tcp + 12]) >> 4) & 0x0f) * 4u;
    if (doff < 20 || tcp + doff > ip + total_len) { ++result.skipped_non_tcp; continue; }
    size_t payload_off = tcp + doff;
    size_t payload_len = ip + total_len - payload_off;
    if (payload_len == 0) { ++result.skipped_empty; continue; }

    PacketRecord rec;
    rec.index = index;
    rec.ts_sec = ts_sec;
    rec.ts_usec = ts_usec;
    rec.src_ip = src_ip;
    rec.dst_ip = dst_ip;
    rec.src_port = src_port;
    rec.dst_port = dst_port;
    rec.direction = (dst_ip == device_ip) ? Direction::ToDevice : Direction::FromDevice;
    rec.payload = data.substr(payload_off, payload_len);
    result.records.push_back(std::move(rec));
  }
  return result;
}

namespace {

bool starts_with_token(std::string_view bytes, std::string_view token) {
  return bytes.substr(0, token.size()) == token;
}

const char* kMethodTokens[] = {
    "GET ", "POST ", "OPTIONS ", "HEAD ", "TRACE ", "CONNECT ", "PUT ", "DELETE ",
    "DESCRIBE ", "ANNOUNCE ", "PLAY ", "SETUP ", "PAUSE ", "TEARDOWN ",
    "SET_PARAMETER ", "GET_PARAMETER ", "RECORD ", "REDIRECT ",
};

// First-line sniff; the version token decides HTTP vs RTSP for requests.
Protocol guess_text_protocol(std::string_view bytes) {
  if (starts_with_token(bytes, "HTTP/")) return Protocol::Http;
  if (starts_with_token(bytes, "RTSP/")) return Protocol::Rtsp;
  bool method = false;
  for (const char* tok : kMethodTokens) {
    if (starts_with_token(bytes, tok)) { method = true; break; }
  }
  if (!method) return Protocol::Unknown;
  size_t eol = bytes.find("\r\n");
  std::string_view line = (eol == std::string_view::npos) ? bytes : bytes.substr(0, eol);
  if (line.find("RTSP/") != std::string_view::npos) return Protocol::Rtsp;
  if (line.find("HTTP/") != std::string_view::npos) return Protocol::Http;
  return Protocol::Unknown;
}

}  // namespace

std::vector<FlowMessage> reassemble(const std::vector<PacketRecord>& records) {
  struct FlowBuf {
    FlowKey key;
    Direction direction = Direction::ToDevice;
    std::string bytes;
    // (byte offset of segment start, capture ordinal) in arrival order.
    std::vector<std::pair<size_t, uint32_t>> segments;
    bool tplink_port = false;
  };
  using MapKey = std::tuple<uint32_t, uint16_t, uint32_t, uint16_t>;
  std::map<MapKey, FlowBuf> flows;
  std::vector<MapKey> order;

  for (const auto& rec : records) {
    MapKey k{rec.src_ip, rec.src_port, rec.dst_ip, rec.dst_port};
    auto it = flows.find(k);
    if (it == flows.end()) {
      FlowBuf buf;
      buf.key = FlowKey{rec.src_ip, rec.src_port, rec.dst_ip, rec.dst_port};
      buf.direction = rec.direction;
      buf.tplink_port = rec.src_port == 9999 || rec.dst_port == 9999;
      it = flows.emplace(k, std::move(buf)).first;
      order.push_back(k);
    }
    it->second.segments.emplace_back(it->second.bytes.size(), rec.index);
    it->second.bytes += rec.payload;
  }

  std::vector<FlowMessage> out;
  for (const auto& k : order) {
    FlowBuf& buf = flows[k];
    std::string_view rest = buf.bytes;
    size_t offset = 0;
    auto index_at = [&buf](size_t off) {
      uint32_t idx = buf.segments.front().second;
      for (const auto& [start, pkt_index] : buf.segments) {
        if (start > off) break;
        idx = pkt_index;
      }
      return idx;
    };
    while (!rest.empty()) {
      FlowMessage msg;
      msg.flow = buf.key;
      msg.direction = buf.direction;
      msg.first_packet_index = index_at(offset);

      Protocol text_guess = guess_text_protocol(rest);
      std::optional<size_t> len;
      if (buf.tplink_port) {
        len = tplink_message_length(rest);
        if (len) msg.protocol_guess = Protocol::TplinkSmartHome;
      }
      if (!len && text_guess != Protocol::Unknown) {
        len = http_message_length(rest);
        if (len) msg.protocol_guess = text_guess;
      }
      if (!len && !buf.tplink_port) {
        // Length-prefix framing that validates against the full remainder
        // also counts as TP-Link even off the standard port.
        auto tl = tplink_message_length(rest);
        if (tl && *tl == rest.size()) {
          len = tl;
          msg.protocol_guess = Protocol::TplinkSmartHome;
        }
      }

      if (!len) {
        // Unparseable residue.
        msg.protocol_guess = Protocol::Unknown;
        msg.bytes = std::string(rest);
        out.push_back(std::move(msg));
        break;
      }
      msg.bytes = std::string(rest.substr(0, *len));
      rest.remove_prefix(*len);
      offset += *len;
      out.push_back(std::move(msg));
    }
  }
  return out;
}

}  // namespace iotfuzz

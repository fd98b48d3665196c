#include "iotfuzz/net_types.hpp"

#include <array>
#include <charconv>

namespace iotfuzz {

std::string to_string(Protocol p) {
  switch (p) {
    case Protocol::Http: return "HTTP";
    case Protocol::Rtsp: return "RTSP";
    case Protocol::TplinkSmartHome: return "TPLINK_SMARTHOME";
    case Protocol::Unknown: return "UNKNOWN";
  }
  return "UNKNOWN";
}

std::optional<Protocol> parse_protocol(std::string_view s) {
  if (s == "HTTP") return Protocol::Http;
  if (s == "RTSP") return Protocol::Rtsp;
  if (s == "TPLINK_SMARTHOME" || s == "TPLINK") return Protocol::TplinkSmartHome;
  if (s == "UNKNOWN") return Protocol::Unknown;
  return std::nullopt;
}

uint32_t parse_ipv4(std::string_view s) {
  uint32_t addr = 0;
  int octets = 0;
  size_t pos = 0;
  while (octets < 4) {
    size_t dot = s.find('.', pos);
    std::string_view part = (dot == std::string_view::npos) ? s.substr(pos) : s.substr(pos, dot - pos);
    unsigned value = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (ec != std::errc{} || ptr != part.data() + part.size() || value > 255 || part.empty())
      throw std::invalid_argument("bad IPv4 address: " + std::string(s));
    addr = (addr << 8) | value;
    ++octets;
    if (dot == std::string_view::npos) break;
    pos = dot + 1;
  }
  if (octets != 4) throw std::invalid_argument("bad IPv4 address: " + std::string(s));
  return addr;
}

std::string ipv4_to_string(uint32_t addr) {
  return std::to_string((addr >> 24) & 0xff) + "." + std::to_string((addr >> 16) & 0xff) + "." +
         std::to_string((addr >> 8) & 0xff) + "." + std::to_string(addr & 0xff);
}

namespace {
constexpr char kB64Alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::array<int8_t, 256> build_reverse() {
  std::array<int8_t, 256> rev{};
  rev.fill(-1);
  for (int i = 0; i < 64; ++i) rev[static_cast<uint8_t>(kB64Alphabet[i])] = static_cast<int8_t>(i);
  return rev;
}
}  // namespace

std::string base64_encode(std::string_view data) {
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  size_t i = 0;
  while (i + 3 <= data.size()) {
    uint32_t v = (static_cast<uint8_t>(data[i]) << 16) | (static_cast<uint8_t>(data[i + 1]) << 8) |
                 static_cast<uint8_t>(data[i + 2]);
    out += kB64Alphabet[(v >> 18) & 63];
    out += kB64Alphabet[(v >> 12) & 63];
    out += kB64Alphabet[(v >> 6) & 63];
    out += kB64Alphabet[v & 63];
    i += 3;
  }
  size_t rem = data.size() - i;
  if (rem == 1) {
    uint32_t v = static_cast<uint8_t>(data[i]) << 16;
    out += kB64Alphabet[(v >> 18) & 63];
    out += kB64Alphabet[(v >> 12) & 63];
    out += "==";
  } else if (rem == 2) {
    uint32_t v = (static_cast<uint8_t>(data[i]) << 16) | (static_cast<uint8_t>(data[i + 1]) << 8);
    out += kB64Alphabet[(v >> 18) & 63];
    out += kB64Alphabet[(v >> 12) & 63];
    out += kB64Alphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::optional<std::string> base64_decode(std::string_view text) {
  static const std::array<int8_t, 256> rev = build_reverse();
  std::string out;
  uint32_t acc = 0;
  int bits = 0;
  size_t pad = 0;
  for (char c : text) {
    if (c == '=') {
      ++pad;
      continue;
    }
    if (pad > 0) return std::nullopt;  // data after padding
    int8_t v = rev[static_cast<uint8_t>(c)];
    if (v < 0) return std::nullopt;
    acc = (acc << 6) | static_cast<uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out += static_cast<char>((acc >> bits) & 0xff);
    }
  }
  if (pad > 2) return std::nullopt;
  if (bits >= 6) return std::nullopt;  // dangling sextet
  return out;
}

}  // namespace iotfuzz

#include "iotfuzz/tplink.hpp"

namespace iotfuzz {

std::string tplink_encode(std::string_view plain) {
  std::string out;
  out.reserve(plain.size());
  uint8_t key = kTplinkInitialKey;
  for (char p : plain) {
    uint8_t c = static_cast<uint8_t>(p) ^ key;
    key = c;  // autokey: next key byte is the cipher byte just produced
    out += static_cast<char>(c);
  }
  return out;
}

std::string tplink_decode(std::string_view cipher) {
  std::string out;
  out.reserve(cipher.size());
  uint8_t key = kTplinkInitialKey;
  for (char b : cipher) {
    uint8_t c = static_cast<uint8_t>(b);
    out += static_cast<char>(c ^ key);
    key = c;
  }
  return out;
}

std::string tplink_frame(std::string_view cipher) {
  std::string out;
  out.reserve(cipher.size() + 4);
  uint32_t len = static_cast<uint32_t>(cipher.size());
  out += static_cast<char>((len >> 24) & 0xff);
  out += static_cast<char>((len >> 16) & 0xff);
  out += static_cast<char>((len >> 8) & 0xff);
  out += static_cast<char>(len & 0xff);
  out.append(cipher);
  return out;
}

std::optional<std::string_view> tplink_unframe(std::string_view frame) {
  if (frame.size() < 4) return std::nullopt;
  uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len = (len << 8) | static_cast<uint8_t>(frame[i]);
  if (frame.size() - 4 != len) return std::nullopt;
  return frame.substr(4);
}

}  // namespace iotfuzz

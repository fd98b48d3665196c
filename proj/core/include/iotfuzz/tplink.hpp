#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace iotfuzz {

// TP-Link SmartHome/JSON frame codec: a 4-byte big-endian length prefix
// followed by the command bytes under a byte-stream autokey XOR transform.
// The initial key byte was derived by known-plaintext analysis of captured
// command/cipher pairs (key0 = cipher[0] ^ '{'); the derivation is re-run
// in the codec tests against all known pairs.
inline constexpr uint8_t kTplinkInitialKey = 0xAB;

std::string tplink_encode(std::string_view plain);
std::string tplink_decode(std::string_view cipher);

std::string tplink_frame(std::string_view cipher);
// Validates prefix == remaining length; nullopt on mismatch or short input.
std::optional<std::string_view> tplink_unframe(std::string_view frame);

}  // namespace iotfuzz

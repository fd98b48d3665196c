#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace iotfuzz {

enum class Protocol {
  Http,
  Rtsp,
  TplinkSmartHome,
  Unknown,
};

std::string to_string(Protocol p);
std::optional<Protocol> parse_protocol(std::string_view s);

// Dotted-quad IPv4 helpers. Addresses are kept host-order as a plain u32.
uint32_t parse_ipv4(std::string_view s);  // throws std::invalid_argument
std::string ipv4_to_string(uint32_t addr);

std::string base64_encode(std::string_view data);
std::optional<std::string> base64_decode(std::string_view text);

}  // namespace iotfuzz

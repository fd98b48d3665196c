#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "iotfuzz/mutate.hpp"
#include "iotfuzz/net_types.hpp"

namespace iotfuzz {

struct TargetSpec {
  std::string host;
  uint16_t port = 0;
  Protocol protocol = Protocol::Http;
  int connect_timeout_ms = 1000;
  int read_timeout_ms = 2000;
  int pacing_ms = 10;  // min gap between connection starts
  int max_parallel = 4;
};

enum class ExchangeOutcome { Responded, Timeout, ConnectionRefused, Reset };

std::string to_string(ExchangeOutcome o);

struct ExchangeRecord {
  uint32_t mutant_id = 0;
  std::string sent;
  std::string response;
  ExchangeOutcome outcome = ExchangeOutcome::Timeout;
  double rtt_ms = 0.0;
  bool structure_risk = false;
};

// Local socket failures (resolution, no route) as opposed to target
// outcomes, which are data.
struct InjectError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Fresh TCP connection per mutant; reads until the protocol's message
// boundary, peer close, or read_timeout.
ExchangeRecord inject_one(const TargetSpec& target, const std::string& bytes,
                          uint32_t mutant_id = 0);

// One record per mutant, output order matches input order regardless of
// completion order; at most max_parallel connections in flight.
std::vector<ExchangeRecord> run_campaign(const TargetSpec& target,
                                         const std::vector<MutantRequest>& mutants);

}  // namespace iotfuzz

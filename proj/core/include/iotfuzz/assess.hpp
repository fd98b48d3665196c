#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iotfuzz/capture.hpp"
#include "iotfuzz/codec.hpp"
#include "iotfuzz/inject.hpp"
#include "iotfuzz/registry.hpp"

namespace iotfuzz {

enum class VerdictClass { Valid, Invalid, MalformedRejected, NoResponse };

std::string to_string(VerdictClass c);

struct ResponseVerdict {
  uint32_t mutant_id = 0;
  VerdictClass cls = VerdictClass::NoResponse;
  std::string evidence;
};

struct FuzzReport {
  std::string vuln_id;
  int sent = 0;
  int valid = 0;
  int invalid = 0;
  int malformed_rejected = 0;
  int no_response = 0;
  int loss_pct = 0;
  double duration_s = 0.0;
  int coverage_valid_pct = 0;
  int coverage_invalid_pct = 0;
  bool vulnerable = false;
  std::vector<ResponseVerdict> verdicts;
};

// Half-up rounding to integer percent, the report's declared rule.
int percent_half_up(int64_t numerator, int64_t denominator);

// Pure function of (descriptor, exchange); every exchange maps to exactly
// one class.
ResponseVerdict classify(const VulnerabilityDescriptor& vuln, const ExchangeRecord& exchange);

FuzzReport assess(const VulnerabilityDescriptor& vuln,
                  const std::vector<ResponseVerdict>& verdicts, double duration_s);

struct CredentialScan {
  std::vector<CredentialFinding> findings;
  std::vector<std::string> rejections;
  size_t total_packets = 0;
  size_t http_requests = 0;
};

CredentialScan scan_credentials(const std::vector<PacketRecord>& records);

std::string render_report(const FuzzReport& report, bool verbose,
                          const std::vector<MutantRequest>* mutants = nullptr);
std::string render_credential_scan(const CredentialScan& scan, bool verbose);

}  // namespace iotfuzz

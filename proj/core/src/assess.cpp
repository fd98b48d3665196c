#include "iotfuzz/assess.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "iotfuzz/tplink.hpp"
#include "json.hpp"

namespace iotfuzz {

std::string to_string(VerdictClass c) {
  switch (c) {
    case VerdictClass::Valid: return "valid";
    case VerdictClass::Invalid: return "invalid";
    case VerdictClass::MalformedRejected: return "malformed_rejected";
    case VerdictClass::NoResponse: return "no_response";
  }
  return "?";
}

int percent_half_up(int64_t numerator, int64_t denominator) {
  if (denominator <= 0) return 0;
  // floor(100*n/d + 1/2) without floating point
  return static_cast<int>((200 * numerator + denominator) / (2 * denominator));
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Substring, case-sensitive, on the body: matches the observed
// "[Succeed] set ok." form.
bool body_contains_set_ok(const ResponseView& resp) {
  return resp.body.find("set ok") != std::string::npos;
}

bool is_jpeg_response(const ResponseView& resp) {
  const std::string* ct = resp.find_header("Content-Type");
  if (!ct || lower(*ct).find("image/jpeg") == std::string::npos) return false;
  return resp.body.size() >= 2 && static_cast<uint8_t>(resp.body[0]) == 0xFF &&
         static_cast<uint8_t>(resp.body[1]) == 0xD8;
}

bool cseq_echoed(const ExchangeRecord& exchange, const ResponseView& resp) {
  auto req = parse_request(exchange.sent);
  if (!req) return false;
  const std::string* want = req->find_header("CSeq");
  const std::string* got = resp.find_header("CSeq");
  if (!want || !got) return false;
  return *want == *got;
}

// err_code may sit at any nesting depth in the reply JSON.
bool json_has_err_code_zero(const nlohmann::json& j) {
  if (j.is_object()) {
    for (const auto& [key, value] : j.items()) {
      if (key == "err_code" && value.is_number_integer() && value.get<int64_t>() == 0) return true;
      if (json_has_err_code_zero(value)) return true;
    }
  } else if (j.is_array()) {
    for (const auto& value : j)
      if (json_has_err_code_zero(value)) return true;
  }
  return false;
}

bool tplink_err_code_zero(const ExchangeRecord& exchange, std::string* evidence) {
  auto cipher = tplink_unframe(exchange.response);
  if (!cipher) return false;
  std::string plain = tplink_decode(*cipher);
  auto j = nlohmann::json::parse(plain, nullptr, false);
  if (j.is_discarded()) return false;
  if (!json_has_err_code_zero(j)) return false;
  if (evidence) *evidence = "err_code 0 in decoded reply: " + plain;
  return true;
}

bool matches_validity(const VulnerabilityDescriptor& vuln, const ExchangeRecord& exchange,
                      const ResponseView& resp, std::string* evidence) {
  const std::string& rule = vuln.validity_rule;
  if (rule == "http-200-set-ok") {
    if (resp.well_formed && resp.status_code == 200 && body_contains_set_ok(resp)) {
      if (evidence) *evidence = "200 with set-ok body: " + resp.body;
      return true;
    }
    return false;
  }
  if (rule == "http-200-jpeg") {
    if (resp.well_formed && resp.status_code == 200 && is_jpeg_response(resp)) {
      if (evidence)
        *evidence = "200 image/jpeg, JPEG SOI present, " + std::to_string(resp.body.size()) +
                    " body bytes";
      return true;
    }
    return false;
  }
  if (rule == "rtsp-200-cseq-echo") {
    if (resp.well_formed && resp.status_code == 200 && cseq_echoed(exchange, resp)) {
      if (evidence) *evidence = "RTSP 200 with echoed CSeq";
      return true;
    }
    return false;
  }
  if (rule == "tplink-err-code-0") return tplink_err_code_zero(exchange, evidence);
  return false;
}

}  // namespace

ResponseVerdict classify(const VulnerabilityDescriptor& vuln, const ExchangeRecord& exchange) {
  ResponseVerdict verdict;
  verdict.mutant_id = exchange.mutant_id;
  if (exchange.outcome != ExchangeOutcome::Responded) {
    verdict.cls = VerdictClass::NoResponse;
    verdict.evidence = to_string(exchange.outcome);
    return verdict;
  }
  if (vuln.protocol == Protocol::TplinkSmartHome) {
    if (matches_validity(vuln, exchange, ResponseView{}, &verdict.evidence))
      verdict.cls = VerdictClass::Valid;
    else
      verdict.cls = VerdictClass::Invalid;
    return verdict;
  }
  ResponseView resp = parse_response(exchange.response);
  if (matches_validity(vuln, exchange, resp, &verdict.evidence)) {
    verdict.cls = VerdictClass::Valid;
    return verdict;
  }
  // A 400-class answer to a structurally risky mutant is the device
  // correctly rejecting a malformed request, not a miss.
  if (resp.well_formed && resp.status_code >= 400 && resp.status_code < 500 &&
      exchange.structure_risk) {
    verdict.cls = VerdictClass::MalformedRejected;
    verdict.evidence = "rejected with " + std::to_string(resp.status_code);
    return verdict;
  }
  verdict.cls = VerdictClass::Invalid;
  if (resp.well_formed) verdict.evidence = "status " + std::to_string(resp.status_code);
  return verdict;
}

FuzzReport assess(const VulnerabilityDescriptor& vuln,
                  const std::vector<ResponseVerdict>& verdicts, double duration_s) {
  FuzzReport report;
  report.vuln_id = vuln.id;
  report.sent = static_cast<int>(verdicts.size());
  report.duration_s = duration_s;
  report.verdicts = verdicts;
  for (const auto& v : verdicts) {
    switch (v.cls) {
      case VerdictClass::Valid: ++report.valid; break;
      case VerdictClass::Invalid: ++report.invalid; break;
      case VerdictClass::MalformedRejected: ++report.malformed_rejected; break;
      case VerdictClass::NoResponse: ++report.no_response; break;
    }
  }
  report.loss_pct = percent_half_up(report.no_response, report.sent);
  // Coverage counts only requests the device actually answered in-protocol.
  int denom = report.valid + report.invalid;
  report.coverage_valid_pct = percent_half_up(report.valid, denom);
  report.coverage_invalid_pct = percent_half_up(report.invalid, denom);
  report.vulnerable = report.valid >= 1;
  return report;
}

CredentialScan scan_credentials(const std::vector<PacketRecord>& records) {
  CredentialScan scan;
  scan.total_packets = records.size();
  std::vector<FlowMessage> msgs = reassemble(records);
  for (const auto& msg : msgs) {
    if (msg.protocol_guess != Protocol::Http && msg.protocol_guess != Protocol::Rtsp) continue;
    if (msg.bytes.starts_with("HTTP/") || msg.bytes.starts_with("RTSP/")) continue;
    auto req = parse_request(msg.bytes);
    if (!req) continue;
    if (msg.protocol_guess == Protocol::Http) ++scan.http_requests;
    const std::string* auth = req->find_header("Authorization");
    if (!auth) continue;
    std::string reason;
    auto finding = decode_basic_credential(*auth, msg.first_packet_index, &reason);
    if (!finding) {
      scan.rejections.push_back("packet " + std::to_string(msg.first_packet_index) + ": " + reason);
      continue;
    }
    bool dup = false;
    for (const auto& f : scan.findings)
      if (f.scheme == finding->scheme && f.encoded == finding->encoded) dup = true;
    if (!dup) scan.findings.push_back(std::move(*finding));
  }
  return scan;
}

std::string render_report(const FuzzReport& report, bool verbose,
                          const std::vector<MutantRequest>* mutants) {
  std::ostringstream out;
  out << "Vulnerability: " << report.vuln_id << "\n";
  out << "Sent: " << report.sent << "\n";
  out << "Valid: " << report.valid << "\n";
  out << "Invalid: " << report.invalid << "\n";
  out << "MalformedRejected: " << report.malformed_rejected << "\n";
  out << "NoResponse: " << report.no_response << "\n";
  out << "MessageLoss%: " << report.loss_pct << "\n";
  char dur[32];
  std::snprintf(dur, sizeof(dur), "%.3f", report.duration_s);
  out << "Duration(s): " << dur << "\n";
  out << "CoverageValid%: " << report.coverage_valid_pct << "\n";
  out << "CoverageInvalid%: " << report.coverage_invalid_pct << "\n";
  out << "Vulnerable: " << (report.vulnerable ? "yes" : "no") << "\n";
  if (verbose) {
    for (const auto& v : report.verdicts) {
      out << "  mutant " << v.mutant_id << ": " << to_string(v.cls);
      if (!v.evidence.empty()) out << " (" << v.evidence << ")";
      if (mutants && v.mutant_id < mutants->size()) {
        const auto& m = (*mutants)[v.mutant_id];
        out << " ops=";
        if (m.applied.empty()) out << "identity";
        for (size_t i = 0; i < m.applied.size(); ++i) {
          if (i) out << ",";
          out << to_string(m.applied[i].kind) << "@" << to_string(m.applied[i].target);
        }
      }
      out << "\n";
    }
  }
  return out.str();
}

std::string render_credential_scan(const CredentialScan& scan, bool verbose) {
  std::ostringstream out;
  out << "Packets: " << scan.total_packets << "\n";
  out << "HttpRequests: " << scan.http_requests << "\n";
  out << "Findings: " << scan.findings.size() << "\n";
  for (const auto& f : scan.findings) {
    out << "  scheme=" << f.scheme;
    if (!f.encoded.empty()) out << " encoded=" << f.encoded;
    if (f.user) out << " user=" << *f.user;
    if (f.pass) out << " pass=" << *f.pass;
    out << " packet=" << f.packet_index << "\n";
  }
  if (verbose)
    for (const auto& r : scan.rejections) out << "  rejected: " << r << "\n";
  out << "Vulnerable: " << (scan.findings.empty() ? "no" : "yes") << "\n";
  return out.str();
}

}  // namespace iotfuzz

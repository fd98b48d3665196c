// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
// and exits nonzero if any fail. argv[1] is the path to the iotfuzz CLI.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "iotfuzz/assess.hpp"
#include "iotfuzz/codec.hpp"
#include "iotfuzz/inject.hpp"
#include "iotfuzz/mock.hpp"
#include "iotfuzz/mutate.hpp"
#include "iotfuzz/registry.hpp"
#include "iotfuzz/seeds.hpp"
#include "iotfuzz/tplink.hpp"

using namespace iotfuzz;
namespace ts = testsupport;

namespace {

std::string g_cli;
std::string g_dir;
int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::cout << "criterion " << criterion << ": " << (pass ? "PASS" : "FAIL") << " - " << detail
            << "\n";
  if (!pass) ++g_failures;
}

struct Check {
  bool ok = true;
  std::string why;
  void expect(bool cond, const std::string& message) {
    if (!cond && ok) {
      ok = false;
      why = message;
    }
  }
};

// First line of the report of the form "Key: value".
std::string report_value(const std::string& text, const std::string& key) {
  std::string needle = key + ": ";
  size_t at = text.rfind("\n" + needle);
  if (at == std::string::npos) {
    if (text.rfind(needle, 0) != 0) return {};
    at = 0;
  } else {
    at += 1;
  }
  size_t start = at + needle.size();
  size_t end = text.find('\n', start);
  return text.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

SeedCorpus corpus_from(Protocol protocol, const std::vector<const std::string*>& requests) {
  std::vector<FlowMessage> msgs;
  for (const std::string* bytes : requests) {
    FlowMessage msg;
    msg.protocol_guess = protocol;
    msg.bytes = *bytes;
    msgs.push_back(std::move(msg));
  }
  return build_corpus(msgs, "acceptance");
}

bool rtsp_scriptable(const MutantRequest& m) {
  auto t = parse_request(m.bytes);
  return t && t->protocol == Protocol::Rtsp && t->find_header("CSeq") != nullptr;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void criterion_1_tplink_ground_truth() {
  Check c;
  auto t0 = std::chrono::steady_clock::now();

  const std::pair<const std::string*, const std::string*> pairs[] = {
      {&ts::kTplinkSysinfoB64, &ts::kTplinkSysinfoPlain},
      {&ts::kTplinkOnB64, &ts::kTplinkOnPlain},
      {&ts::kTplinkOffB64, &ts::kTplinkOffPlain},
      {&ts::kTplinkEmeterB64, &ts::kTplinkEmeterPlain},
  };
  for (const auto& [b64, plain] : pairs) {
    auto cipher = base64_decode(*b64);
    c.expect(cipher.has_value(), "payload is not valid base64");
    if (!cipher) break;
    c.expect(tplink_decode(*cipher) == *plain, "decode mismatch for " + *b64);
    uint8_t derived =
        static_cast<uint8_t>((*cipher)[0]) ^ static_cast<uint8_t>((*plain)[0]);
    c.expect(derived == kTplinkInitialKey, "derived key byte disagrees across pairs");
  }

  std::mt19937_64 rng(2024);
  for (int i = 0; i < 10000 && c.ok; ++i) {
    size_t len = rng() % 4097;
    std::string plain(len, '\0');
    for (auto& ch : plain) ch = static_cast<char>(rng() & 0xff);
    if (tplink_decode(tplink_encode(plain)) != plain) {
      c.expect(false, "round-trip failed at iteration " + std::to_string(i));
    }
  }
  double elapsed = seconds_since(t0);
  c.expect(elapsed < 1.0, "took " + std::to_string(elapsed) + "s, limit 1s");
  report(1, c.ok,
         c.ok ? "four command ciphers, one derived key, 10000 round-trips in " +
                    std::to_string(elapsed).substr(0, 5) + "s"
              : c.why);
}

void criterion_2_credential_scan() {
  Check c;
  std::string pcap = g_dir + "/synth.pcap";
  auto creds = ts::write_synth_capture(pcap, 20543, 394);

  auto t0 = std::chrono::steady_clock::now();
  auto result = ts::run_command(g_cli + " scan-credentials --pcap " + pcap +
                                " --device-ip 192.168.4.17");
  double elapsed = seconds_since(t0);

  c.expect(result.exit_code == 1, "expected exit code 1, got " +
                                      std::to_string(result.exit_code));
  c.expect(report_value(result.output, "Packets") == "20543", "packet count mismatch");
  c.expect(report_value(result.output, "Findings") == "394",
           "findings: got '" + report_value(result.output, "Findings") + "', want 394");
  for (const auto& cred : creds) {
    std::string needle = "user=" + cred.user + " pass=" + cred.pass;
    if (result.output.find(needle) == std::string::npos) {
      c.expect(false, "missing credential " + cred.user + ":" + cred.pass);
      break;
    }
  }
  c.expect(result.output.find("user=admin pass=admin123") != std::string::npos,
           "missing the known admin:admin123 credential");
  c.expect(elapsed < 5.0, "took " + std::to_string(elapsed) + "s, limit 5s");
  report(2, c.ok,
         c.ok ? "394 credentials recovered from 20543 packets in " +
                    std::to_string(elapsed).substr(0, 5) + "s"
              : c.why);
}

struct ReplaySetup {
  std::string vuln_id;
  int expect_valid = 0;
  SeedCorpus corpus;
  MockBehavior base_behavior;
};

std::vector<ReplaySetup> replay_setups() {
  std::vector<ReplaySetup> setups;
  {
    ReplaySetup s;
    s.vuln_id = "D3D_001";
    s.expect_valid = 30;
    s.corpus = corpus_from(Protocol::Rtsp, {&ts::kD3dRtspRequest});
    s.base_behavior = MockBehavior::d3d_rtsp();
    setups.push_back(std::move(s));
  }
  {
    ReplaySetup s;
    s.vuln_id = "Ezviz_000";
    s.expect_valid = 28;
    s.corpus = corpus_from(Protocol::Rtsp, {&ts::kEzvizRtspRequest, &ts::kEzvizRtspRequest2});
    s.base_behavior = MockBehavior::ezviz_rtsp();
    setups.push_back(std::move(s));
  }
  {
    ReplaySetup s;
    s.vuln_id = "D3D_002";
    s.expect_valid = 28;
    s.corpus = corpus_from(Protocol::Http, {&ts::kD3dImageRequest});
    s.base_behavior = MockBehavior::d3d_http();
    setups.push_back(std::move(s));
  }
  {
    ReplaySetup s;
    s.vuln_id = "D3D_003";
    s.expect_valid = 39;
    s.corpus = corpus_from(Protocol::Http, {&ts::kD3dPtzRequest});
    s.base_behavior = MockBehavior::d3d_http();
    s.base_behavior.image_routes.clear();  // scripted accepts answer "set ok"
    setups.push_back(std::move(s));
  }
  return setups;
}

// Builds the scripted accept-list from the campaign itself: the first k
// mutants the mock could plausibly have accepted.
MockBehavior script_mock(const ReplaySetup& setup, const std::vector<MutantRequest>& mutants,
                         int k) {
  MockBehavior behavior = setup.base_behavior;
  behavior.matcher = MatcherMode::Scripted;
  behavior.auth_required = false;
  int taken = 0;
  for (const auto& m : mutants) {
    if (taken >= k) break;
    if (behavior.protocol == Protocol::Rtsp && !rtsp_scriptable(m)) continue;
    behavior.accept_list.push_back(m.bytes);
    ++taken;
  }
  return behavior;
}

std::string fuzz_command(const std::string& vuln_id, const std::string& corpus_path,
                         uint16_t port, int count, uint64_t rng_seed) {
  std::ostringstream cmd;
  cmd << g_cli << " fuzz --vuln " << vuln_id << " --corpus " << corpus_path
      << " --host 127.0.0.1 --port " << port << " --count " << count << " --rng-seed "
      << rng_seed << " --pacing-ms 0 --timeout-ms 2000 --parallel 4";
  return cmd.str();
}

void criterion_3_campaign_reproduction() {
  Check c;
  auto registry = builtin_registry();
  std::string summary;
  for (const auto& setup : replay_setups()) {
    const auto* vuln = registry.find(setup.vuln_id);
    auto mutants = generate_campaign(setup.corpus, *vuln, 200, 1234, registry.dicts);
    MockBehavior behavior = script_mock(setup, mutants, setup.expect_valid);
    if (static_cast<int>(behavior.accept_list.size()) != setup.expect_valid) {
      c.expect(false, setup.vuln_id + ": campaign yielded too few scriptable mutants");
      break;
    }
    std::string corpus_path = g_dir + "/corpus_" + setup.vuln_id + ".tsv";
    save_corpus(setup.corpus, corpus_path);

    MockServer server(std::move(behavior));
    server.start();
    auto result = ts::run_command(
        fuzz_command(setup.vuln_id, corpus_path, server.port(), 200, 1234));
    server.stop();

    std::string valid = report_value(result.output, "Valid");
    c.expect(valid == std::to_string(setup.expect_valid),
             setup.vuln_id + ": Valid=" + valid + ", want " +
                 std::to_string(setup.expect_valid));
    c.expect(report_value(result.output, "Sent") == "200", setup.vuln_id + ": Sent != 200");
    c.expect(report_value(result.output, "Vulnerable") == "yes",
             setup.vuln_id + ": not reported vulnerable");
    c.expect(result.exit_code == 1,
             setup.vuln_id + ": exit code " + std::to_string(result.exit_code) + ", want 1");
    if (!c.ok) break;
    if (!summary.empty()) summary += ", ";
    summary += setup.vuln_id + "=" + valid + "/200";
  }
  report(3, c.ok, c.ok ? summary + ", all Vulnerable=true" : c.why);
}

void criterion_4_coverage_arithmetic() {
  Check c;
  auto registry = builtin_registry();
  const auto* vuln = registry.find("D3D_001");
  auto corpus = corpus_from(Protocol::Rtsp, {&ts::kD3dRtspRequest});
  auto mutants = generate_campaign(corpus, *vuln, 125, 4321, registry.dicts);

  std::vector<const MutantRequest*> risk, safe;
  for (const auto& m : mutants) (m.structure_risk ? risk : safe).push_back(&m);
  c.expect(safe.size() >= 100, "campaign has fewer than 100 structure-safe mutants");
  if (c.ok) {
    // 48 accepted, 52 structure-safe mutants answered 404 (invalid), the
    // remaining safe ones dropped, every risky mutant answered 400
    // (malformed_rejected). Denominator is exactly 100.
    MockBehavior behavior = MockBehavior::d3d_rtsp();
    behavior.matcher = MatcherMode::Scripted;
    for (size_t i = 0; i < safe.size(); ++i) {
      if (i < 48) behavior.accept_list.push_back(safe[i]->bytes);
      else if (i >= 100) behavior.drop_list.push_back(safe[i]->bytes);
    }
    for (const auto* m : risk) behavior.reject_400_list.push_back(m->bytes);

    std::string corpus_path = g_dir + "/corpus_coverage.tsv";
    save_corpus(corpus, corpus_path);
    MockServer server(std::move(behavior));
    server.start();
    auto result =
        ts::run_command(fuzz_command("D3D_001", corpus_path, server.port(), 125, 4321));
    server.stop();

    c.expect(report_value(result.output, "CoverageValid%") == "48",
             "CoverageValid%=" + report_value(result.output, "CoverageValid%") + ", want 48");
    c.expect(report_value(result.output, "CoverageInvalid%") == "52",
             "CoverageInvalid%=" + report_value(result.output, "CoverageInvalid%") +
                 ", want 52");
    c.expect(report_value(result.output, "Valid") == "48", "Valid != 48");
    c.expect(report_value(result.output, "Invalid") == "52", "Invalid != 52");
    int sent = std::stoi(report_value(result.output, "Sent"));
    int total = std::stoi(report_value(result.output, "Valid")) +
                std::stoi(report_value(result.output, "Invalid")) +
                std::stoi(report_value(result.output, "MalformedRejected")) +
                std::stoi(report_value(result.output, "NoResponse"));
    c.expect(sent == 125 && total == sent, "totals do not reconcile");
  }

  // Property: totals reconcile and the coverage split matches the declared
  // rounding over 50 randomized scripted mocks.
  std::mt19937_64 rng(77);
  for (int round = 0; round < 50 && c.ok; ++round) {
    auto small = generate_campaign(corpus, *vuln, 20, 1000 + round, registry.dicts);
    MockBehavior behavior = MockBehavior::d3d_rtsp();
    behavior.matcher = MatcherMode::Scripted;
    for (const auto& m : small) {
      switch (rng() % 4) {
        case 0: behavior.accept_list.push_back(m.bytes); break;
        case 1: behavior.reject_400_list.push_back(m.bytes); break;
        case 2: behavior.drop_list.push_back(m.bytes); break;
        default: break;  // unknown: mock answers 404
      }
    }
    MockServer server(std::move(behavior));
    server.start();
    TargetSpec target;
    target.host = "127.0.0.1";
    target.port = server.port();
    target.protocol = Protocol::Rtsp;
    target.pacing_ms = 0;
    auto exchanges = run_campaign(target, small);
    server.stop();

    std::vector<ResponseVerdict> verdicts;
    for (const auto& e : exchanges) verdicts.push_back(classify(*vuln, e));
    auto rep = assess(*vuln, verdicts, 0.0);
    c.expect(rep.sent == static_cast<int>(small.size()), "property: sent mismatch");
    c.expect(rep.valid + rep.invalid + rep.malformed_rejected + rep.no_response == rep.sent,
             "property: classes do not sum to sent");
    int denom = rep.valid + rep.invalid;
    c.expect(rep.coverage_valid_pct == percent_half_up(rep.valid, denom),
             "property: CoverageValid% rounding mismatch");
    c.expect(rep.coverage_invalid_pct == percent_half_up(rep.invalid, denom),
             "property: CoverageInvalid% rounding mismatch");
    c.expect(rep.loss_pct == percent_half_up(rep.no_response, rep.sent),
             "property: MessageLoss% rounding mismatch");
  }
  report(4, c.ok,
         c.ok ? "CoverageValid%=48 / CoverageInvalid%=52; totals reconcile across 50 "
                "randomized mocks"
              : c.why);
}

void criterion_5_determinism() {
  Check c;
  auto registry = builtin_registry();
  auto setups = replay_setups();
  const auto& setup = setups.back();  // D3D_003
  const auto* vuln = registry.find(setup.vuln_id);
  auto mutants = generate_campaign(setup.corpus, *vuln, 200, 1234, registry.dicts);
  MockBehavior behavior = script_mock(setup, mutants, setup.expect_valid);
  std::string corpus_path = g_dir + "/corpus_det.tsv";
  save_corpus(setup.corpus, corpus_path);

  MockServer server(std::move(behavior));
  server.start();
  std::string cmd = fuzz_command("D3D_003", corpus_path, server.port(), 200, 1234);
  auto first = ts::run_command(cmd);
  auto second = ts::run_command(cmd);
  server.stop();

  auto strip_duration = [](const std::string& text) {
    std::istringstream in(text);
    std::string line, out;
    while (std::getline(in, line))
      if (line.rfind("Duration(s):", 0) != 0) out += line + "\n";
    return out;
  };
  c.expect(!first.output.empty(), "first run produced no output");
  c.expect(first.exit_code == second.exit_code, "exit codes differ between runs");
  c.expect(strip_duration(first.output) == strip_duration(second.output),
           "reports differ outside the Duration line");
  report(5, c.ok, c.ok ? "two identical --rng-seed runs match byte for byte" : c.why);
}

void criterion_6_structural_validity() {
  Check c;
  auto registry = builtin_registry();
  const auto* vuln = registry.find("D3D_003");
  auto corpus = corpus_from(Protocol::Http, {&ts::kD3dPtzRequest});
  const int n = 1000;
  auto mutants = generate_campaign(corpus, *vuln, n, 31337, registry.dicts);
  c.expect(static_cast<int>(mutants.size()) == n, "campaign came up short");

  int well_formed = 0, risky = 0;
  for (const auto& m : mutants) {
    if (is_well_formed_request(m.bytes)) ++well_formed;
    if (m.structure_risk) ++risky;
  }
  int cap = static_cast<int>(vuln->structure_risk_budget * n);
  c.expect(risky <= cap, "risk budget exceeded: " + std::to_string(risky) + " > " +
                             std::to_string(cap));
  c.expect(well_formed * 5 >= n * 4, "only " + std::to_string(well_formed) +
                                         " of 1000 mutants re-parse as well-formed");
  report(6, c.ok,
         c.ok ? std::to_string(well_formed) + "/1000 well-formed, " + std::to_string(risky) +
                    " structure-risk mutants within the cap of " + std::to_string(cap)
              : c.why);
}

void criterion_7_parser_round_trips() {
  Check c;
  const std::string* fixtures[] = {&ts::kD3dPtzRequest, &ts::kD3dImageRequest,
                                   &ts::kD3dRtspRequest};
  for (const std::string* bytes : fixtures) {
    auto t = parse_request(*bytes);
    c.expect(t.has_value(), "fixture failed to parse");
    if (t) c.expect(serialize(*t) == *bytes, "serialize(parse(x)) != x");
  }
  report(7, c.ok, c.ok ? "serialize and parse are inverses on all three captured requests"
                       : c.why);
}

void criterion_8_tplink_oracle() {
  Check c;
  auto registry = builtin_registry();
  const auto* vuln = registry.find("TPLink_Kasa_000");

  MockServer server(MockBehavior::tplink());
  server.start();
  TargetSpec target;
  target.host = "127.0.0.1";
  target.port = server.port();
  target.protocol = Protocol::TplinkSmartHome;
  target.pacing_ms = 0;

  for (const std::string* plain : {&ts::kTplinkOnPlain, &ts::kTplinkOffPlain}) {
    auto rec = inject_one(target, tplink_frame(tplink_encode(*plain)));
    auto verdict = classify(*vuln, rec);
    c.expect(verdict.cls == VerdictClass::Valid, "seed frame was not judged valid");
    c.expect(verdict.evidence.find("err_code") != std::string::npos,
             "verdict lacks err_code evidence");
  }

  SeedCorpus corpus;
  std::vector<FlowMessage> msgs(2);
  msgs[0].protocol_guess = Protocol::TplinkSmartHome;
  msgs[0].bytes = tplink_frame(tplink_encode(ts::kTplinkOnPlain));
  msgs[1].protocol_guess = Protocol::TplinkSmartHome;
  msgs[1].bytes = tplink_frame(tplink_encode(ts::kTplinkOffPlain));
  corpus = build_corpus(msgs, "kasa");
  std::string corpus_path = g_dir + "/corpus_kasa.tsv";
  save_corpus(corpus, corpus_path);

  auto result = ts::run_command(fuzz_command("TPLink_Kasa_000", corpus_path, server.port(),
                                             40, 5));
  server.stop();
  c.expect(report_value(result.output, "Vulnerable") == "yes",
           "TPLink_Kasa_000 not reported vulnerable");
  c.expect(result.exit_code == 1, "exit code " + std::to_string(result.exit_code) + ", want 1");
  c.expect(std::stoi(report_value(result.output, "Valid")) >= 1, "no valid mutants reported");
  report(8, c.ok,
         c.ok ? "switch-on/off frames judged valid via err_code 0; TPLink_Kasa_000 "
                "Vulnerable=true"
              : c.why);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: iotfuzz_acceptance <path-to-iotfuzz-cli>\n";
    return 2;
  }
  g_cli = argv[1];
  g_dir = ts::make_temp_dir();

  try {
    criterion_1_tplink_ground_truth();
    criterion_2_credential_scan();
    criterion_3_campaign_reproduction();
    criterion_4_coverage_arithmetic();
    criterion_5_determinism();
    criterion_6_structural_validity();
    criterion_7_parser_round_trips();
    criterion_8_tplink_oracle();
  } catch (const std::exception& e) {
    std::cerr << "acceptance run aborted: " << e.what() << "\n";
    return 1;
  }
  return g_failures == 0 ? 0 : 1;
}

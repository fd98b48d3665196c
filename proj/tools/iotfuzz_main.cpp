// iotfuzz: protocol-guided black-box fuzzer for consumer IoT devices.
//
// Exit codes: 0 target not shown vulnerable, 1 vulnerability confirmed,
// 2 usage or configuration error, 3 runtime failure.

#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "iotfuzz/assess.hpp"
#include "iotfuzz/capture.hpp"
#include "iotfuzz/inject.hpp"
#include "iotfuzz/mock.hpp"
#include "iotfuzz/mutate.hpp"
#include "iotfuzz/registry.hpp"
#include "iotfuzz/seeds.hpp"
#include "iotfuzz/tplink.hpp"

namespace {

constexpr int kExitClean = 0;
constexpr int kExitVulnerable = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

volatile std::sig_atomic_t g_stop = 0;
void handle_signal(int) { g_stop = 1; }

iotfuzz::Registry load_registry_arg(const std::string& path) {
  if (path.empty()) return iotfuzz::builtin_registry();
  return iotfuzz::load_registry(path);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

struct ScanArgs {
  std::string pcap;
  std::string device_ip;
  std::string report_path;
  bool verbose = false;
};

int run_scan(const ScanArgs& args) {
  auto capture = iotfuzz::load_capture(args.pcap, iotfuzz::parse_ipv4(args.device_ip));
  auto scan = iotfuzz::scan_credentials(capture.records);
  std::string text = iotfuzz::render_credential_scan(scan, args.verbose);
  std::cout << text;
  if (!args.report_path.empty()) write_file(args.report_path, text);
  return scan.findings.empty() ? kExitClean : kExitVulnerable;
}

struct ExtractArgs {
  std::string pcap;
  std::string device_ip;
  std::string out_path;
  std::string device_label;
  bool verbose = false;
};

int run_extract(const ExtractArgs& args) {
  auto capture = iotfuzz::load_capture(args.pcap, iotfuzz::parse_ipv4(args.device_ip));
  auto msgs = iotfuzz::reassemble(capture.records);
  std::vector<iotfuzz::SeedWarning> warnings;
  auto corpus = iotfuzz::build_corpus(msgs, args.device_label, &warnings);
  if (args.out_path.empty()) {
    std::cout << iotfuzz::export_corpus(corpus);
  } else {
    iotfuzz::save_corpus(corpus, args.out_path);
    std::cout << "Seeds: " << corpus.seeds.size() << "\n";
  }
  if (args.verbose)
    for (const auto& w : warnings)
      std::cerr << "warning: packet " << w.packet_index << ": " << w.message << "\n";
  return kExitClean;
}

struct FuzzArgs {
  std::string vuln_id;
  std::string corpus_path;
  std::string registry_path;
  std::string host;
  int port = 0;
  int count = 0;
  uint64_t rng_seed = 1;
  int pacing_ms = 10;
  int timeout_ms = 2000;
  int parallel = 4;
  std::string report_path;
  bool dry_run = false;
  bool verbose = false;
};

int run_fuzz(const FuzzArgs& args) {
  iotfuzz::Registry registry = load_registry_arg(args.registry_path);
  const iotfuzz::VulnerabilityDescriptor* vuln = registry.find(args.vuln_id);
  if (!vuln) {
    std::cerr << "error: unknown vulnerability id '" << args.vuln_id << "'\n";
    return kExitUsage;
  }
  if (vuln->mode == iotfuzz::VulnMode::Passive) {
    std::cerr << "error: " << vuln->id << " is passive; use scan-credentials\n";
    return kExitUsage;
  }
  auto corpus = iotfuzz::load_corpus(args.corpus_path);
  int n = args.count > 0 ? args.count : vuln->campaign_size;
  auto mutants = iotfuzz::generate_campaign(corpus, *vuln, n, args.rng_seed, registry.dicts);

  if (args.dry_run) {
    for (const auto& m : mutants)
      std::cout << m.mutant_id << "\t" << (m.structure_risk ? "risk" : "safe") << "\t"
                << iotfuzz::base64_encode(m.bytes) << "\n";
    return kExitClean;
  }

  iotfuzz::TargetSpec target;
  target.host = args.host;
  target.port = args.port > 0 ? static_cast<uint16_t>(args.port) : vuln->default_port;
  target.protocol = vuln->protocol;
  target.pacing_ms = args.pacing_ms;
  target.read_timeout_ms = args.timeout_ms;
  target.connect_timeout_ms = args.timeout_ms;
  target.max_parallel = args.parallel;

  auto t0 = std::chrono::steady_clock::now();
  auto exchanges = iotfuzz::run_campaign(target, mutants);
  double duration_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::vector<iotfuzz::ResponseVerdict> verdicts;
  verdicts.reserve(exchanges.size());
  for (const auto& e : exchanges) verdicts.push_back(iotfuzz::classify(*vuln, e));
  auto report = iotfuzz::assess(*vuln, verdicts, duration_s);

  std::string text = iotfuzz::render_report(report, args.verbose, &mutants);
  std::cout << text;
  if (!args.report_path.empty()) write_file(args.report_path, text);
  return report.vulnerable ? kExitVulnerable : kExitClean;
}

struct MockArgs {
  std::string config_path;
  std::string preset;
  int port = 0;
  bool print_port = false;
};

int run_mock(const MockArgs& args) {
  iotfuzz::MockBehavior behavior;
  if (!args.config_path.empty()) {
    behavior = iotfuzz::load_mock_config(args.config_path);
  } else if (args.preset == "d3d-http") behavior = iotfuzz::MockBehavior::d3d_http();
  else if (args.preset == "d3d-rtsp") behavior = iotfuzz::MockBehavior::d3d_rtsp();
  else if (args.preset == "ezviz-http") behavior = iotfuzz::MockBehavior::ezviz_http();
  else if (args.preset == "ezviz-rtsp") behavior = iotfuzz::MockBehavior::ezviz_rtsp();
  else if (args.preset == "tplink") behavior = iotfuzz::MockBehavior::tplink();
  else {
    std::cerr << "error: need --config or a valid --preset\n";
    return kExitUsage;
  }
  if (args.port > 0) behavior.listen_port = static_cast<uint16_t>(args.port);

  iotfuzz::MockServer server(std::move(behavior));
  server.start();
  if (args.print_port) std::cout << server.port() << std::endl;
  std::cerr << "mock device listening on 127.0.0.1:" << server.port() << "\n";
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return kExitClean;
}

struct DecodeArgs {
  std::string b64;
  bool framed = false;
  bool encode = false;
};

int run_decode(const DecodeArgs& args) {
  if (args.encode) {
    std::cout << iotfuzz::base64_encode(iotfuzz::tplink_frame(iotfuzz::tplink_encode(args.b64)))
              << "\n";
    return kExitClean;
  }
  auto raw = iotfuzz::base64_decode(args.b64);
  if (!raw) {
    std::cerr << "error: invalid base64\n";
    return kExitUsage;
  }
  std::string_view cipher = *raw;
  if (args.framed) {
    auto inner = iotfuzz::tplink_unframe(*raw);
    if (!inner) {
      std::cerr << "error: length prefix does not match frame size\n";
      return kExitUsage;
    }
    cipher = *inner;
  }
  std::cout << iotfuzz::tplink_decode(cipher) << "\n";
  return kExitClean;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"protocol-guided black-box fuzzer for consumer IoT devices"};
  app.require_subcommand(1);

  ScanArgs scan;
  auto* scan_cmd =
      app.add_subcommand("scan-credentials", "mine a pcap for leaked access credentials");
  scan_cmd->add_option("--pcap", scan.pcap, "capture file")->required();
  scan_cmd->add_option("--device-ip", scan.device_ip, "device address in the capture")->required();
  scan_cmd->add_option("--report", scan.report_path, "also write the report to a file");
  scan_cmd->add_flag("--verbose", scan.verbose, "list rejected header values");

  ExtractArgs extract;
  auto* extract_cmd = app.add_subcommand("extract-seeds", "build a seed corpus from a pcap");
  extract_cmd->add_option("--pcap", extract.pcap, "capture file")->required();
  extract_cmd->add_option("--device-ip", extract.device_ip, "device address in the capture")
      ->required();
  extract_cmd->add_option("--out", extract.out_path, "corpus output path (default stdout)");
  extract_cmd->add_option("--device-label", extract.device_label, "label stored in the corpus");
  extract_cmd->add_flag("--verbose", extract.verbose, "print per-message warnings");

  FuzzArgs fuzz;
  auto* fuzz_cmd = app.add_subcommand("fuzz", "run one mutation campaign against a target");
  fuzz_cmd->add_option("--vuln", fuzz.vuln_id, "vulnerability id from the registry")->required();
  fuzz_cmd->add_option("--corpus", fuzz.corpus_path, "seed corpus file")->required();
  fuzz_cmd->add_option("--registry", fuzz.registry_path, "registry file (default built-in)");
  fuzz_cmd->add_option("--host", fuzz.host, "target host");
  fuzz_cmd->add_option("--port", fuzz.port, "target port (default from registry)");
  fuzz_cmd->add_option("--count", fuzz.count, "campaign size (default from registry)");
  fuzz_cmd->add_option("--rng-seed", fuzz.rng_seed, "campaign RNG seed")->capture_default_str();
  fuzz_cmd->add_option("--pacing-ms", fuzz.pacing_ms, "gap between connection starts")
      ->capture_default_str();
  fuzz_cmd->add_option("--timeout-ms", fuzz.timeout_ms, "connect/read timeout")
      ->capture_default_str();
  fuzz_cmd->add_option("--parallel", fuzz.parallel, "max connections in flight")
      ->capture_default_str();
  fuzz_cmd->add_option("--report", fuzz.report_path, "also write the report to a file");
  fuzz_cmd->add_flag("--dry-run", fuzz.dry_run, "print the campaign instead of injecting");
  fuzz_cmd->add_flag("--verbose", fuzz.verbose, "per-mutant verdict listing");

  MockArgs mock;
  auto* mock_cmd = app.add_subcommand("mock-serve", "run a mock device service");
  mock_cmd->add_option("--config", mock.config_path, "behavior config file");
  mock_cmd->add_option("--preset", mock.preset,
                       "d3d-http | d3d-rtsp | ezviz-http | ezviz-rtsp | tplink");
  mock_cmd->add_option("--port", mock.port, "listen port (default ephemeral)");
  mock_cmd->add_flag("--print-port", mock.print_port, "print the bound port on stdout");

  DecodeArgs decode;
  auto* decode_cmd =
      app.add_subcommand("decode-tplink", "decode a base64 SmartHome cipher to JSON");
  decode_cmd->add_option("input", decode.b64, "base64 cipher, or plaintext with --encode")
      ->required();
  decode_cmd->add_flag("--framed", decode.framed, "input carries the 4-byte length prefix");
  decode_cmd->add_flag("--encode", decode.encode, "encode plaintext to a framed cipher instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitClean : kExitUsage;
  }

  try {
    if (scan_cmd->parsed()) return run_scan(scan);
    if (extract_cmd->parsed()) return run_extract(extract);
    if (fuzz_cmd->parsed()) {
      if (!fuzz.dry_run && fuzz.host.empty()) {
        std::cerr << "error: --host is required unless --dry-run\n";
        return kExitUsage;
      }
      return run_fuzz(fuzz);
    }
    if (mock_cmd->parsed()) return run_mock(mock);
    if (decode_cmd->parsed()) return run_decode(decode);
  } catch (const iotfuzz::RegistryError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

#include <set>
#include <string>

#include "doctest.h"
#include "fixtures.hpp"
#include "iotfuzz/mutate.hpp"
#include "iotfuzz/tplink.hpp"

using namespace iotfuzz;
namespace ts = testsupport;

namespace {

SeedCorpus d3d_http_corpus() {
  std::vector<FlowMessage> msgs(2);
  msgs[0].protocol_guess = Protocol::Http;
  msgs[0].bytes = ts::kD3dPtzRequest;
  msgs[1].protocol_guess = Protocol::Http;
  msgs[1].bytes = ts::kD3dImageRequest;
  return build_corpus(msgs, "d3d");
}

SeedCorpus rtsp_corpus() {
  std::vector<FlowMessage> msgs(1);
  msgs[0].protocol_guess = Protocol::Rtsp;
  msgs[0].bytes = ts::kD3dRtspRequest;
  return build_corpus(msgs, "d3d");
}

SeedCorpus tplink_corpus() {
  std::vector<FlowMessage> msgs(2);
  msgs[0].protocol_guess = Protocol::TplinkSmartHome;
  msgs[0].bytes = tplink_frame(tplink_encode(ts::kTplinkOnPlain));
  msgs[1].protocol_guess = Protocol::TplinkSmartHome;
  msgs[1].bytes = tplink_frame(tplink_encode(ts::kTplinkOffPlain));
  return build_corpus(msgs, "kasa");
}

FieldId path_field() { return FieldId{Protocol::Http, FieldName::UriPath, {}}; }

}  // namespace

TEST_CASE("single mutation operators behave as specified") {
  Dictionaries dicts = Dictionaries::builtin();
  MutationOp op;
  op.target = path_field();

  op.kind = MutationKind::CharInsert;
  op.position = 4;
  op.replacement = 'A';
  CHECK(mutate_field("/web/cgi", op, dicts) == "/webA/cgi");

  op.kind = MutationKind::CharDelete;
  op.position = 0;
  CHECK(mutate_field("/tmpfs", op, dicts) == "tmpfs");

  op.kind = MutationKind::CharSubstitute;
  op.position = 2;
  op.replacement = 'V';
  CHECK(mutate_field("/tmpfs/auto.jpg", op, dicts) == "/tVpfs/auto.jpg");

  op.kind = MutationKind::CharSwap;
  op.position = 1;
  CHECK(mutate_field("abcd", op, dicts) == "acbd");

  op.kind = MutationKind::DigitPerturb;
  op.position = 0;
  op.delta = 3;
  CHECK(mutate_field("v1x2", op, dicts) == "v4x2");

  op.kind = MutationKind::CaseFlip;
  op.position = 1;
  CHECK(mutate_field("/tmp", op, dicts) == "/tMp");

  op.kind = MutationKind::DictionarySubstitute;
  op.dict_index = 1;
  op.target = FieldId{Protocol::Http, FieldName::Method, {}};
  CHECK(mutate_field("GET", op, dicts) == "POST");
}

TEST_CASE("inapplicable operators are refused, not mangled") {
  Dictionaries dicts = Dictionaries::builtin();
  MutationOp op;
  op.target = path_field();
  op.kind = MutationKind::CharDelete;
  CHECK_FALSE(mutate_field("", op, dicts).has_value());
  op.kind = MutationKind::DigitPerturb;
  CHECK_FALSE(mutate_field("/nodigits", op, dicts).has_value());
  op.kind = MutationKind::CaseFlip;
  CHECK_FALSE(mutate_field("123", op, dicts).has_value());
  op.kind = MutationKind::DictionarySubstitute;
  CHECK_FALSE(mutate_field("/x", op, dicts).has_value());  // no path dictionary
  op.kind = MutationKind::CharInsert;
  op.replacement = '\r';
  CHECK_FALSE(mutate_field("/x", op, dicts).has_value());  // CR outside crlf fields
}

TEST_CASE("structure risk covers exactly the grammar-breaking fields") {
  CHECK(is_structure_risk_field(FieldId{Protocol::Http, FieldName::SpLeft, {}}));
  CHECK(is_structure_risk_field(FieldId{Protocol::Http, FieldName::SpRight, {}}));
  CHECK(is_structure_risk_field(FieldId{Protocol::Http, FieldName::Version, {}}));
  CHECK(is_structure_risk_field(FieldId{Protocol::Rtsp, FieldName::Crlf, {}}));
  CHECK_FALSE(is_structure_risk_field(path_field()));
  CHECK_FALSE(is_structure_risk_field(FieldId{Protocol::Rtsp, FieldName::Cseq, {}}));
}

TEST_CASE("campaigns are deterministic and free of duplicates") {
  auto registry = builtin_registry();
  const auto* vuln = registry.find("D3D_003");
  auto corpus = d3d_http_corpus();
  auto a = generate_campaign(corpus, *vuln, 200, 99, registry.dicts);
  auto b = generate_campaign(corpus, *vuln, 200, 99, registry.dicts);
  REQUIRE(a.size() == 200);
  REQUIRE(b.size() == 200);
  std::set<std::string> unique;
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].bytes == b[i].bytes);
    unique.insert(a[i].bytes);
  }
  CHECK(unique.size() == 200);

  auto c = generate_campaign(corpus, *vuln, 200, 100, registry.dicts);
  bool differs = false;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i].bytes != c[i].bytes) differs = true;
  CHECK(differs);
}

TEST_CASE("mutant zero is the unmutated identity probe") {
  auto registry = builtin_registry();
  auto corpus = d3d_http_corpus();
  auto mutants = generate_campaign(corpus, *registry.find("D3D_003"), 10, 1, registry.dicts);
  CHECK(mutants[0].applied.empty());
  CHECK_FALSE(mutants[0].structure_risk);
  auto probe = parse_request(mutants[0].bytes);
  REQUIRE(probe.has_value());
  CHECK(probe->method == "GET");
  CHECK(probe->uri_path == "/web/cgi-bin/hi3510/ptzctrl.cgi");
  REQUIRE(probe->find_header("Authorization"));
  CHECK(*probe->find_header("Authorization") == "Basic YWRtaW46YWRtaW4xMjM=");
}

TEST_CASE("fixed headers ride along unmutated in every mutant") {
  auto registry = builtin_registry();
  auto corpus = d3d_http_corpus();
  auto mutants = generate_campaign(corpus, *registry.find("D3D_002"), 100, 5, registry.dicts);
  for (const auto& m : mutants) {
    auto t = parse_request(m.bytes);
    if (!t) continue;  // structure-risk mutants may break the grammar
    const std::string* auth = t->find_header("Authorization");
    REQUIRE(auth != nullptr);
    CHECK(*auth == "Basic YWRtaW46YWRtaW4xMjM=");
  }
}

TEST_CASE("structure risk budget caps grammar-breaking mutants") {
  auto registry = builtin_registry();
  auto corpus = d3d_http_corpus();
  for (int n : {50, 200}) {
    auto mutants = generate_campaign(corpus, *registry.find("D3D_003"), n, 77, registry.dicts);
    int risk = 0;
    for (const auto& m : mutants) risk += m.structure_risk ? 1 : 0;
    CHECK(risk <= n / 5);
  }
}

TEST_CASE("rtsp campaigns keep a cseq header to echo against") {
  auto registry = builtin_registry();
  auto corpus = rtsp_corpus();
  auto mutants = generate_campaign(corpus, *registry.find("D3D_001"), 50, 3, registry.dicts);
  REQUIRE(mutants.size() == 50);
  int with_cseq = 0;
  for (const auto& m : mutants) {
    auto t = parse_request(m.bytes);
    if (t && t->find_header("CSeq")) ++with_cseq;
  }
  CHECK(with_cseq >= 40);
}

TEST_CASE("tplink campaigns mutate the cipher and re-frame the length") {
  auto registry = builtin_registry();
  auto corpus = tplink_corpus();
  auto mutants =
      generate_campaign(corpus, *registry.find("TPLink_Kasa_000"), 50, 11, registry.dicts);
  REQUIRE(mutants.size() == 50);
  for (const auto& m : mutants) {
    auto inner = tplink_unframe(m.bytes);
    REQUIRE(inner.has_value());
    CHECK(*inner == m.frame_command);
    CHECK_FALSE(m.structure_risk);
  }
  CHECK(tplink_decode(*tplink_unframe(mutants[0].bytes)) == ts::kTplinkOnPlain);
}

TEST_CASE("campaign generation fails loudly without required seeds") {
  auto registry = builtin_registry();
  SeedCorpus empty;
  CHECK_THROWS_AS(generate_campaign(empty, *registry.find("D3D_003"), 10, 1, registry.dicts),
                  CampaignError);
  CHECK_THROWS_AS(
      generate_campaign(empty, *registry.find("TPLink_Kasa_000"), 10, 1, registry.dicts),
      CampaignError);
  // method+path present but the fixed Authorization header seed is missing
  SeedCorpus partial;
  FieldSeed s;
  s.field = FieldId{Protocol::Http, FieldName::Method, {}};
  s.value = "GET";
  partial.add(s);
  s.field = FieldId{Protocol::Http, FieldName::UriPath, {}};
  s.value = "/x.cgi";
  partial.add(s);
  CHECK_THROWS_AS(generate_campaign(partial, *registry.find("D3D_003"), 10, 1, registry.dicts),
                  CampaignError);
  CHECK_THROWS_AS(generate_campaign(d3d_http_corpus(), *registry.find("D3D_000"), 10, 1,
                                    registry.dicts),
                  CampaignError);
}

TEST_CASE("a campaign that can only break structure stops at the risk cap") {
  // Only a structure-risk field is mutable, so once the cap is spent no
  // further mutants are generatable.
  std::string text =
      "id: Tiny_000\n"
      "protocol: HTTP\n"
      "mode: active\n"
      "mutate: sp_left\n"
      "match: http-200-set-ok\n";
  auto registry = parse_registry(text);
  SeedCorpus corpus;
  FieldSeed s;
  s.field = FieldId{Protocol::Http, FieldName::Method, {}};
  s.value = "GET";
  corpus.add(s);
  s.field = FieldId{Protocol::Http, FieldName::UriPath, {}};
  s.value = "/x.cgi";
  corpus.add(s);
  CHECK_THROWS_AS(generate_campaign(corpus, *registry.find("Tiny_000"), 50, 1, registry.dicts),
                  CampaignError);
}

#include <string>

#include "doctest.h"
#include "fixtures.hpp"
#include "iotfuzz/seeds.hpp"
#include "iotfuzz/tplink.hpp"

using namespace iotfuzz;
namespace ts = testsupport;

namespace {

FlowMessage text_msg(Protocol guess, const std::string& bytes, uint32_t index = 1,
                     Direction dir = Direction::ToDevice) {
  FlowMessage msg;
  msg.protocol_guess = guess;
  msg.bytes = bytes;
  msg.first_packet_index = index;
  msg.direction = dir;
  return msg;
}

}  // namespace

TEST_CASE("HTTP seed extraction captures every fuzzable field") {
  auto seeds = extract_http_seeds(text_msg(Protocol::Http, ts::kD3dPtzRequest));
  SeedCorpus corpus;
  for (auto& s : seeds) corpus.add(std::move(s));

  auto value_of = [&](FieldName name, std::string header = {}) {
    const FieldSeed* s = corpus.first(FieldId{Protocol::Http, name, std::move(header)});
    REQUIRE(s != nullptr);
    return s->value;
  };
  CHECK(value_of(FieldName::Method) == "GET");
  CHECK(value_of(FieldName::UriPath) == "/web/cgi-bin/hi3510/ptzctrl.cgi");
  CHECK(value_of(FieldName::UriQuery) == "-step=0&-act=left");
  CHECK(value_of(FieldName::Version) == "HTTP/1.1");
  CHECK(value_of(FieldName::SpLeft) == " ");
  CHECK(value_of(FieldName::Crlf) == "\r\n");
  CHECK(value_of(FieldName::HeaderValue, "Authorization") == "Basic YWRtaW46YWRtaW4xMjM=");
  CHECK(value_of(FieldName::RequestUri) == "/web/cgi-bin/hi3510/ptzctrl.cgi?-step=0&-act=left");
}

TEST_CASE("RTSP seed extraction keeps netloc and cseq") {
  auto seeds = extract_rtsp_seeds(text_msg(Protocol::Rtsp, ts::kD3dRtspRequest, 4));
  SeedCorpus corpus;
  for (auto& s : seeds) corpus.add(std::move(s));
  const FieldSeed* netloc = corpus.first(FieldId{Protocol::Rtsp, FieldName::UriNetlocPort, {}});
  REQUIRE(netloc != nullptr);
  CHECK(netloc->value == "192.168.4.6:554");
  CHECK(netloc->first_packet_index == 4);
  const FieldSeed* cseq = corpus.first(FieldId{Protocol::Rtsp, FieldName::Cseq, {}});
  REQUIRE(cseq != nullptr);
  CHECK(cseq->value == "2");
  const FieldSeed* scheme = corpus.first(FieldId{Protocol::Rtsp, FieldName::UriScheme, {}});
  REQUIRE(scheme != nullptr);
  CHECK(scheme->value == "rtsp://");
}

TEST_CASE("responses and malformed requests yield warnings, not seeds") {
  std::vector<SeedWarning> warnings;
  auto from_response = extract_http_seeds(text_msg(Protocol::Http, ts::kD3dPtzResponse), &warnings);
  CHECK(from_response.empty());
  auto from_junk =
      extract_http_seeds(text_msg(Protocol::Http, "GEThello world\r\n\r\n", 9), &warnings);
  CHECK(from_junk.empty());
  REQUIRE(!warnings.empty());
  CHECK(warnings.back().packet_index == 9);
}

TEST_CASE("tplink seeds carry frame length and cipher command") {
  std::string cipher = tplink_encode(ts::kTplinkOnPlain);
  auto seeds =
      extract_tplink_seeds(text_msg(Protocol::TplinkSmartHome, tplink_frame(cipher)));
  SeedCorpus corpus;
  for (auto& s : seeds) corpus.add(std::move(s));
  const FieldSeed* cmd = corpus.first(FieldId{Protocol::TplinkSmartHome, FieldName::FrameCommand, {}});
  REQUIRE(cmd != nullptr);
  CHECK(cmd->value == cipher);
  const FieldSeed* len = corpus.first(FieldId{Protocol::TplinkSmartHome, FieldName::FrameLength, {}});
  REQUIRE(len != nullptr);
  CHECK(len->value.size() == 4);

  std::vector<SeedWarning> warnings;
  auto bad = extract_tplink_seeds(
      text_msg(Protocol::TplinkSmartHome, std::string("\x00\x00\x00\x09", 4) + "abc", 3),
      &warnings);
  CHECK(bad.empty());
  REQUIRE(!warnings.empty());
  CHECK(warnings.back().packet_index == 3);
}

TEST_CASE("corpus building dedupes and skips device-to-client tplink frames") {
  std::string frame = tplink_frame(tplink_encode(ts::kTplinkOnPlain));
  std::vector<FlowMessage> msgs = {
      text_msg(Protocol::Http, ts::kD3dPtzRequest),
      text_msg(Protocol::Http, ts::kD3dPtzRequest, 2),  // duplicate values
      text_msg(Protocol::TplinkSmartHome, frame, 3, Direction::FromDevice),
  };
  auto corpus = build_corpus(msgs, "d3d");
  CHECK(corpus.device_label == "d3d");
  CHECK(corpus.values(FieldId{Protocol::Http, FieldName::Method, {}}).size() == 1);
  CHECK(corpus.first(FieldId{Protocol::TplinkSmartHome, FieldName::FrameCommand, {}}) == nullptr);
}

TEST_CASE("corpus export and import round-trip, preserving order") {
  std::vector<FlowMessage> msgs = {
      text_msg(Protocol::Http, ts::kD3dPtzRequest),
      text_msg(Protocol::Rtsp, ts::kD3dRtspRequest, 2),
      text_msg(Protocol::TplinkSmartHome, tplink_frame(tplink_encode(ts::kTplinkOnPlain)), 3),
  };
  auto corpus = build_corpus(msgs, "bench rig");
  std::string text = export_corpus(corpus);
  auto loaded = import_corpus(text);
  CHECK(loaded.device_label == "bench rig");
  REQUIRE(loaded.seeds.size() == corpus.seeds.size());
  for (size_t i = 0; i < corpus.seeds.size(); ++i) {
    CHECK(loaded.seeds[i].field == corpus.seeds[i].field);
    CHECK(loaded.seeds[i].value == corpus.seeds[i].value);
  }
  CHECK_THROWS_AS(import_corpus("HTTP\tmethod\t!!!\n"), std::runtime_error);
  CHECK_THROWS_AS(import_corpus("one-field-line\n"), std::runtime_error);
}

TEST_CASE("field ids parse from their text names") {
  auto cseq = parse_field_id(Protocol::Rtsp, "cseq");
  REQUIRE(cseq.has_value());
  CHECK(cseq->name == FieldName::Cseq);
  auto header = parse_field_id(Protocol::Http, "header(Authorization)");
  REQUIRE(header.has_value());
  CHECK(header->name == FieldName::HeaderValue);
  CHECK(header->header_name == "Authorization");
  CHECK(to_string(*header) == "header(Authorization)");
  CHECK_FALSE(parse_field_id(Protocol::Http, "no_such_field").has_value());
  CHECK_FALSE(parse_field_id(Protocol::Http, "header()").has_value());
}

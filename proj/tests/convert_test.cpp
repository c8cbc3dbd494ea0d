#include <gtest/gtest.h>

#include <sstream>

#include "fedpkt/convert.hpp"
#include "fedpkt/error.hpp"

namespace fedpkt {
namespace {

ParseResult run(const std::string& text, const ConvertOptions& o,
                Strictness s = Strictness::skip_invalid) {
  std::istringstream in(text);
  return convert_raw(in, o, s);
}

TEST(Convert, NomoadsObjectKeyedById) {
  auto o = convert_preset("nomoads");
  auto r = run(R"({
    "r1": {"package_name": "com.a", "method": "GET", "host": "ads.x.com", "uri": "/s?gaid=1",
           "headers": {"User-Agent": "UA", "Cookie": "c=1"}, "label": 1, "pii_types": ["aaid"]},
    "r2": {"package_name": "com.b", "method": "POST", "host": "y.com", "uri": "/p",
           "headers": {}, "label": 0, "pii_types": []}
  })", o);
  ASSERT_EQ(r.packets.size(), 2u);
  const auto& p = r.packets[0];
  EXPECT_EQ(p.packet_id, "r1");
  EXPECT_EQ(p.app_id, "com.a");
  EXPECT_EQ(p.domain, "ads.x.com");
  EXPECT_EQ(p.cookie, "c=1");
  EXPECT_EQ(p.label_ad, true);
  EXPECT_EQ(p.label_pii, true);
  EXPECT_EQ(r.packets[1].label_ad, false);
  EXPECT_EQ(r.packets[1].label_pii, false);
}

TEST(Convert, AbsoluteUrlSplitIntoDomainAndUri) {
  ConvertOptions o = convert_preset("jsonl");
  auto r = run(R"({"id":"a","app":"x","method":"GET","url":"https://host.example:8443/p/q?k=v"})" "\n", o);
  ASSERT_EQ(r.packets.size(), 1u);
  EXPECT_EQ(r.packets[0].domain, "host.example");
  EXPECT_EQ(r.packets[0].uri, "/p/q?k=v");
}

TEST(Convert, HeaderShapes) {
  ConvertOptions o = convert_preset("jsonl");
  auto r = run(
      R"([{"id":"a","app":"x","method":"GET","uri":"/","headers":[["X-A","1"],["Host","h"]]},
          {"id":"b","app":"x","method":"GET","uri":"/","headers":["X-B: 2","Accept: */*"]},
          {"id":"c","app":"x","method":"GET","uri":"/","headers":"X-C: 3\r\nAccept: */*\r\n"}])",
      o);
  ASSERT_EQ(r.packets.size(), 3u);
  EXPECT_EQ(r.packets[0].headers[0], (Header{"x-a", "1"}));
  EXPECT_EQ(r.packets[1].headers[0], (Header{"x-b", "2"}));
  EXPECT_EQ(r.packets[2].headers.size(), 2u);
  EXPECT_EQ(r.packets[2].headers[0], (Header{"x-c", "3"}));
}

TEST(Convert, LabelShapes) {
  ConvertOptions o = convert_preset("jsonl");
  auto r = run(R"({"id":"a","app":"x","method":"GET","uri":"/","pii":"true","ad":0})" "\n"
               R"({"id":"b","app":"x","method":"GET","uri":"/","pii":[],"ad":true})" "\n",
               o);
  ASSERT_EQ(r.packets.size(), 2u);
  EXPECT_EQ(r.packets[0].label_pii, true);
  EXPECT_EQ(r.packets[0].label_ad, false);
  EXPECT_EQ(r.packets[1].label_pii, false);
  EXPECT_EQ(r.packets[1].label_ad, true);
}

TEST(Convert, BadRecordsSkippedOrFatal) {
  ConvertOptions o = convert_preset("jsonl");
  std::string text = R"({"id":"a","app":"x","method":"GET","uri":"/"})" "\n" "{oops\n";
  auto r = run(text, o);
  EXPECT_EQ(r.packets.size(), 1u);
  EXPECT_EQ(r.warnings.size(), 1u);
  EXPECT_THROW(run(text, o, Strictness::strict), MalformedRecord);
}

TEST(Convert, UnknownPreset) {
  EXPECT_THROW(convert_preset("pcap"), ValidationError);
}

}  // namespace
}  // namespace fedpkt

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "fedpkt/error.hpp"
#include "fedpkt/features.hpp"
#include "fedpkt/synth.hpp"
#include "fuzz_packets.hpp"
#include "helpers.hpp"

namespace fedpkt {
namespace {

using testing::make_packet;

const StandardHeaders& std_headers() { return StandardHeaders::bundled(); }

Feature uri(std::string t) { return {FeatureKind::uri_key, std::move(t)}; }
Feature cookie(std::string t) { return {FeatureKind::cookie_key, std::move(t)}; }
Feature custom(std::string t) { return {FeatureKind::custom_header, std::move(t)}; }
Feature word(std::string t) { return {FeatureKind::word, std::move(t)}; }

bool has_word(const std::vector<Feature>& words, const std::string& token) {
  return std::find(words.begin(), words.end(), word(token)) != words.end();
}

HttpPacket bitmoji_like() {
  return make_packet("GET",
                     "/pagead/ads?android_id=3f2a9c&rdid=38400000-8cf0-11bd&zip=92617&city=city_X",
                     {{"bitmoji-user-agent", "Bitmoji/10.18 Android"},
                      {"user-agent", "Dalvik/2.1.0"},
                      {"accept-encoding", "gzip"}},
                     "IDE=AHWqTUk; DSID=NO_DATA", "com.bitstrips.imoji", "googleads.g.doubleclick.net");
}

TEST(HttpKeys, CustomHeaderAndKeysButNoValues) {
  auto f = extract_http_keys(bitmoji_like(), std_headers());
  EXPECT_TRUE(f.contains(custom("bitmoji-user-agent")));
  EXPECT_TRUE(f.contains(uri("android_id")));
  EXPECT_TRUE(f.contains(uri("rdid")));
  EXPECT_TRUE(f.contains(uri("zip")));
  EXPECT_TRUE(f.contains(uri("city")));
  EXPECT_TRUE(f.contains(cookie("IDE")));
  EXPECT_TRUE(f.contains(cookie("DSID")));
  EXPECT_EQ(f.size(), 7u);
  for (const auto& feature : f) {
    EXPECT_NE(feature.token, "city_X");
    EXPECT_NE(feature.token, "92617");
  }
}

TEST(HttpKeys, PlainGetIsFileRequest) {
  auto f = extract_http_keys(make_packet("GET", "/index.html", {{"user-agent", "x"}}), std_headers());
  EXPECT_EQ(f, FeatureSet{Feature::file_request()});
}

TEST(HttpKeys, QueryAndCookieKeys) {
  auto f = extract_http_keys(make_packet("GET", "/?aid=1234&width=240", {{"accept", "*/*"}}, "sid=abc"),
                             std_headers());
  EXPECT_EQ(f, (FeatureSet{uri("aid"), uri("width"), cookie("sid")}));
}

TEST(HttpKeys, PercentEncodedKeysAreDecodedAndNormalized) {
  auto f = extract_http_keys(make_packet("GET", "/?user%20id=1&first+name=2&%41b=3"), std_headers());
  EXPECT_EQ(f, (FeatureSet{uri("Ab"), uri("first_name"), uri("user_id")}));
}

TEST(HttpKeys, KeysWithoutValuesAndRepeats) {
  auto f = extract_http_keys(make_packet("GET", "/?flag&a=1&a=2&=orphan"), std_headers());
  EXPECT_EQ(f, (FeatureSet{uri("a"), uri("flag")}));
}

TEST(Keyless, Examples) {
  EXPECT_TRUE(is_keyless(make_packet("POST", "/upload"), std_headers()));
  EXPECT_FALSE(is_keyless(make_packet("GET", "/a.png"), std_headers()));
  EXPECT_FALSE(is_keyless(make_packet("GET", "/?k=v"), std_headers()));
  EXPECT_TRUE(is_keyless(make_packet("PUT", "/x", {{"content-type", "a"}}), std_headers()));
  EXPECT_FALSE(is_keyless(make_packet("POST", "/x", {{"x-sdk", "1"}}), std_headers()));
}

TEST(PercentDecode, MalformedEscapesKept) {
  EXPECT_EQ(percent_decode("a%2"), "a%2");
  EXPECT_EQ(percent_decode("%zz"), "%zz");
  EXPECT_EQ(percent_decode("%3D+x"), "= x");
}

TEST(NormalizeToken, TrimsAndJoins) {
  EXPECT_EQ(normalize_token("  a \t b  "), "a_b");
  EXPECT_EQ(normalize_token(""), "");
}

TEST(Words, AllWordsKeepsValues) {
  auto w = extract_words(make_packet("GET", "/?aid=1234&width=240"), FeatureMode::all_words, {});
  EXPECT_TRUE(has_word(w, "aid"));
  EXPECT_TRUE(has_word(w, "1234"));
  EXPECT_TRUE(has_word(w, "width"));
  EXPECT_TRUE(has_word(w, "240"));
  EXPECT_TRUE(has_word(w, "GET"));
}

TEST(Words, ReconDropsValues) {
  auto w = extract_words(make_packet("GET", "/?aid=1234&width=240"), FeatureMode::recon_words_approx, {});
  EXPECT_TRUE(has_word(w, "aid"));
  EXPECT_TRUE(has_word(w, "width"));
  EXPECT_FALSE(has_word(w, "1234"));
  EXPECT_FALSE(has_word(w, "240"));
}

TEST(Words, ReconKeepsPathWords) {
  auto w = extract_words(bitmoji_like(), FeatureMode::recon_words_approx, {});
  EXPECT_TRUE(has_word(w, "pagead"));
  EXPECT_FALSE(has_word(w, "city_X"));
}

TEST(Words, HttpKeysModeRejected) {
  EXPECT_THROW(extract_words(make_packet("GET", "/"), FeatureMode::http_keys, {}), ValidationError);
}

TEST(Featurizer, ReconStopwordsIncludeStandardHeadersAndTopTokens) {
  FeaturizerOptions options;
  options.stopword_top_fraction = 0.5;
  Featurizer f(FeatureMode::recon_words_approx, std_headers(), options);
  std::vector<HttpPacket> corpus = {make_packet("GET", "/a?k=1", {{"user-agent", "x"}}),
                                    make_packet("GET", "/b?k=2", {{"user-agent", "y"}})};
  f.fit(corpus);
  EXPECT_TRUE(f.stopwords().contains("user-agent"));
  EXPECT_TRUE(f.stopwords().contains("GET"));
  auto features = f.features(corpus[0]);
  EXPECT_FALSE(features.contains(word("user-agent")));
  EXPECT_FALSE(features.contains(word("1")));
}

TEST(Vocabulary, LexicographicIndices) {
  std::vector<FeatureSet> sets = {{word("a")}, {word("a"), word("b")}};
  auto v = build_vocabulary(sets, FeatureMode::all_words, 1);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v.index_of(word("a")), 0u);
  EXPECT_EQ(v.index_of(word("b")), 1u);
}

TEST(Vocabulary, EmptyAndThreshold) {
  EXPECT_TRUE(build_vocabulary({}, FeatureMode::http_keys, 1).empty());
  std::vector<FeatureSet> sets = {{word("a")}, {word("b")}};
  EXPECT_TRUE(build_vocabulary(sets, FeatureMode::all_words, 2).empty());
}

TEST(Vocabulary, KindsOrderBeforeTokens) {
  std::vector<FeatureSet> sets = {{custom("a"), uri("z"), cookie("m"), Feature::file_request()}};
  auto v = build_vocabulary(sets, FeatureMode::http_keys, 1);
  EXPECT_EQ(v.feature(0), uri("z"));
  EXPECT_EQ(v.feature(1), cookie("m"));
  EXPECT_EQ(v.feature(2), custom("a"));
  EXPECT_EQ(v.feature(3), Feature::file_request());
}

TEST(Vocabulary, FileRoundTripKeepsFingerprint) {
  std::vector<FeatureSet> sets = {{uri("a b"), cookie("c")}, {custom("x-y"), Feature::file_request()}};
  auto v = build_vocabulary(sets, FeatureMode::http_keys, 1);
  std::stringstream buf;
  v.write(buf);
  auto back = Vocabulary::read(buf);
  EXPECT_EQ(back.entries(), v.entries());
  EXPECT_EQ(back.fingerprint(), v.fingerprint());
  EXPECT_EQ(back.mode(), FeatureMode::http_keys);
}

TEST(Vocabulary, UnsortedEntriesRejected) {
  EXPECT_THROW(Vocabulary(FeatureMode::all_words, 1, {word("b"), word("a")}), Error);
}

TEST(Vocabulary, FingerprintSensitiveToContent) {
  auto a = build_vocabulary(std::vector<FeatureSet>{{word("a")}}, FeatureMode::all_words, 1);
  auto b = build_vocabulary(std::vector<FeatureSet>{{word("b")}}, FeatureMode::all_words, 1);
  EXPECT_NE(a.fingerprint(), b.fingerprint());
}

TEST(Vocabulary, MonotoneAcrossModesOnGeneratedCorpora) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    PlantedCorpusOptions options;
    options.packets = 400 + 300 * seed;
    options.seed = seed;
    auto packets = generate_planted_corpus(options);
    std::vector<HttpPacket> usable;
    for (const auto& p : packets) {
      if (!is_keyless(p, std_headers())) usable.push_back(p);
    }
    std::size_t sizes[3];
    int i = 0;
    for (auto mode : {FeatureMode::http_keys, FeatureMode::recon_words_approx, FeatureMode::all_words}) {
      Featurizer f(mode, std_headers());
      f.fit(usable);
      std::vector<FeatureSet> sets;
      for (const auto& p : usable) sets.push_back(f.features(p));
      sizes[i++] = build_vocabulary(sets, mode, 1).size();
    }
    EXPECT_LE(sizes[0], sizes[1]) << "seed " << seed;
    EXPECT_LE(sizes[1], sizes[2]) << "seed " << seed;
  }
}

TEST(Encode, KnownAndUnknownFeatures) {
  Vocabulary v(FeatureMode::all_words, 1, {word("a"), word("b"), word("c")});
  auto e = encode({word("a"), word("b")}, v, true);
  EXPECT_EQ(e.indices, (std::vector<std::uint32_t>{0, 1}));
  EXPECT_EQ(e.label, 1);
  EncodeStats stats;
  auto oov = encode({word("d")}, v, false, "x", &stats);
  EXPECT_TRUE(oov.indices.empty());
  EXPECT_EQ(oov.label, -1);
  EXPECT_EQ(stats.dropped, 1u);
}

TEST(Encode, AllKindsRepresentableWithoutValues) {
  auto p = bitmoji_like();
  p.uri = "/pagead/ads?zip=92617";
  p.cookie = "IDE=x";
  auto features = extract_http_keys(p, std_headers());
  auto with_file = features;
  with_file.insert(Feature::file_request());
  auto v = build_vocabulary(std::vector<FeatureSet>{with_file}, FeatureMode::http_keys, 1);
  EXPECT_EQ(v.size(), 4u);
  auto e = encode(features, v, true);
  EXPECT_EQ(e.indices.size(), 3u);
  for (const auto& f : v.entries()) EXPECT_NE(f.token, "92617");
}

TEST(Encode, Idempotent) {
  std::vector<FeatureSet> sets = {{uri("a"), cookie("b")}, {uri("c")}};
  auto v = build_vocabulary(sets, FeatureMode::http_keys, 1);
  EXPECT_EQ(encode(sets[0], v, true, "id"), encode(sets[0], v, true, "id"));
}

TEST(VocabOverlap, Examples) {
  auto va = build_vocabulary(std::vector<FeatureSet>{{word("a"), word("b")}}, FeatureMode::all_words, 1);
  auto vb = build_vocabulary(std::vector<FeatureSet>{{word("b"), word("c")}}, FeatureMode::all_words, 1);
  std::vector<Vocabulary> pair = {va, vb};
  auto o = vocab_overlap(pair);
  EXPECT_EQ(o.intersection, 1u);
  EXPECT_EQ(o.union_size, 3u);
  std::vector<Vocabulary> same = {va, va, va};
  o = vocab_overlap(same);
  EXPECT_EQ(o.intersection, 2u);
  EXPECT_EQ(o.union_size, 2u);
}

TEST(VocabOverlap, ModeMismatch) {
  std::vector<Vocabulary> mixed = {Vocabulary(FeatureMode::all_words, 1, {}),
                                   Vocabulary(FeatureMode::http_keys, 1, {})};
  EXPECT_THROW(vocab_overlap(mixed), ValidationError);
}

TEST(Privacy, FuzzedPacketsYieldExactlyTheirKeys) {
  Rng rng(20240601);
  for (std::size_t n = 0; n < 2000; ++n) {
    auto f = fuzz::random_packet(rng, n);
    auto features = extract_http_keys(f.packet, std_headers());
    ASSERT_EQ(features, f.expected) << f.packet.uri;
    for (const auto& feature : features) {
      for (const auto& v : f.values) ASSERT_NE(feature.token, v);
      for (const auto& s : f.path_segments) ASSERT_NE(feature.token, s);
      ASSERT_NE(feature.token, f.packet.domain);
    }
  }
}

TEST(Privacy, ChangingValuesNeverChangesFeatures) {
  Rng rng(7);
  for (std::size_t n = 0; n < 500; ++n) {
    auto f = fuzz::random_packet(rng, n);
    auto before = extract_http_keys(f.packet, std_headers());
    auto mutated = f.packet;
    mutated.domain = "other.example";
    auto q = mutated.uri.find('?');
    std::string path = "/Z9/Q" + std::to_string(n);
    mutated.uri = q == std::string::npos ? path : path + mutated.uri.substr(q);
    for (const auto& v : f.values) {
      for (auto* field : {&mutated.uri}) {
        auto pos = field->find("=" + v);
        if (pos != std::string::npos) field->replace(pos + 1, v.size(), "0");
      }
      if (mutated.cookie) {
        auto pos = mutated.cookie->find("=" + v);
        if (pos != std::string::npos) mutated.cookie->replace(pos + 1, v.size(), "1");
      }
    }
    for (auto& h : mutated.headers) h.second = "changed";
    EXPECT_EQ(extract_http_keys(mutated, std_headers()), before);
  }
}

}  // namespace
}  // namespace fedpkt

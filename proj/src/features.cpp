#include "fedpkt/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "fedpkt/error.hpp"

namespace fedpkt {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f';
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(s.substr(start));
      break;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return parts;
}

struct KeyValue {
  std::string_view key;
  std::optional<std::string_view> value;
};

std::string_view query_of(std::string_view uri) {
  auto q = uri.find('?');
  if (q == std::string_view::npos) return {};
  auto query = uri.substr(q + 1);
  if (auto hash = query.find('#'); hash != std::string_view::npos) query = query.substr(0, hash);
  return query;
}

std::vector<KeyValue> query_pairs(std::string_view uri) {
  std::vector<KeyValue> pairs;
  auto query = query_of(uri);
  if (query.empty()) return pairs;
  for (auto segment : split(query, '&')) {
    if (segment.empty()) continue;
    auto eq = segment.find('=');
    if (eq == std::string_view::npos) {
      pairs.push_back({segment, std::nullopt});
    } else {
      pairs.push_back({segment.substr(0, eq), segment.substr(eq + 1)});
    }
  }
  return pairs;
}

std::vector<KeyValue> cookie_pairs(std::string_view cookie) {
  std::vector<KeyValue> pairs;
  for (auto segment : split(cookie, ';')) {
    segment = trim(segment);
    if (segment.empty()) continue;
    auto eq = segment.find('=');
    if (eq == std::string_view::npos) {
      pairs.push_back({segment, std::nullopt});
    } else {
      pairs.push_back({trim(segment.substr(0, eq)), segment.substr(eq + 1)});
    }
  }
  return pairs;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

constexpr std::string_view kVocabMagic = "# fedpkt-vocab/1";

}  // namespace

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::uri_key: return "uri_key";
    case FeatureKind::cookie_key: return "cookie_key";
    case FeatureKind::custom_header: return "custom_header";
    case FeatureKind::file_request: return "file_request";
    case FeatureKind::word: return "word";
  }
  return "word";
}

std::optional<FeatureKind> parse_feature_kind(std::string_view text) {
  for (auto kind : {FeatureKind::uri_key, FeatureKind::cookie_key, FeatureKind::custom_header,
                    FeatureKind::file_request, FeatureKind::word}) {
    if (to_string(kind) == text) return kind;
  }
  return std::nullopt;
}

std::string to_string(const Feature& feature) {
  std::string out(to_string(feature.kind));
  if (!feature.token.empty()) {
    out += ':';
    out += feature.token;
  }
  return out;
}

std::string_view to_string(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::http_keys: return "http_keys";
    case FeatureMode::all_words: return "all_words";
    case FeatureMode::recon_words_approx: return "recon_words_approx";
  }
  return "http_keys";
}

std::optional<FeatureMode> parse_feature_mode(std::string_view text) {
  for (auto mode : {FeatureMode::http_keys, FeatureMode::all_words,
                    FeatureMode::recon_words_approx}) {
    if (to_string(mode) == text) return mode;
  }
  return std::nullopt;
}

StandardHeaders StandardHeaders::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open header list " + path.string());
  std::unordered_set<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    auto name = trim(line);
    if (name.empty() || name.front() == '#') continue;
    std::string lowered(name);
    for (auto& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    names.insert(std::move(lowered));
  }
  return StandardHeaders(std::move(names));
}

std::string percent_decode(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '+') {
      out += ' ';
    } else if (c == '%' && i + 2 < text.size() && hex_value(text[i + 1]) >= 0 &&
               hex_value(text[i + 2]) >= 0) {
      out += static_cast<char>(hex_value(text[i + 1]) * 16 + hex_value(text[i + 2]));
      i += 2;
    } else {
      out += c;
    }
  }
  return out;
}

std::string normalize_token(std::string_view text) {
  text = trim(text);
  std::string out;
  out.reserve(text.size());
  bool in_space = false;
  for (char c : text) {
    if (is_space(c)) {
      if (!in_space) out += '_';
      in_space = true;
    } else {
      out += c;
      in_space = false;
    }
  }
  return out;
}

FeatureSet extract_http_keys(const HttpPacket& packet,
                             const StandardHeaders& standard_headers) {
  FeatureSet features;
  for (const auto& kv : query_pairs(packet.uri)) {
    auto key = normalize_token(percent_decode(kv.key));
    if (!key.empty()) features.insert({FeatureKind::uri_key, std::move(key)});
  }
  if (packet.cookie) {
    for (const auto& kv : cookie_pairs(*packet.cookie)) {
      auto key = normalize_token(kv.key);
      if (!key.empty()) features.insert({FeatureKind::cookie_key, std::move(key)});
    }
  }
  for (const auto& [name, value] : packet.headers) {
    auto header = normalize_token(name);
    if (header.empty() || header == "cookie" || standard_headers.contains(header)) continue;
    features.insert({FeatureKind::custom_header, std::move(header)});
  }
  if (features.empty() && packet.method.is_get()) features.insert(Feature::file_request());
  return features;
}

bool is_keyless(const HttpPacket& packet, const StandardHeaders& standard_headers) {
  return extract_http_keys(packet, standard_headers).empty();
}

std::vector<std::string> split_words(std::string_view text, std::string_view delimiters) {
  std::vector<std::string> words;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || delimiters.find(text[i]) != std::string_view::npos) {
      if (i > start) words.emplace_back(text.substr(start, i - start));
      start = i + 1;
    }
  }
  return words;
}

std::string serialize_request(const HttpPacket& packet) {
  std::string out = packet.method.str() + " " + packet.uri + "\r\n";
  bool has_host = std::any_of(packet.headers.begin(), packet.headers.end(),
                              [](const Header& h) { return h.first == "host"; });
  if (!has_host && !packet.domain.empty()) out += "host: " + packet.domain + "\r\n";
  for (const auto& [name, value] : packet.headers) out += name + ": " + value + "\r\n";
  if (packet.cookie) out += "cookie: " + *packet.cookie + "\r\n";
  return out;
}

std::vector<Feature> extract_words(const HttpPacket& packet, FeatureMode mode,
                                   const WordOptions& options) {
  std::vector<Feature> words;
  auto tokens = split_words(serialize_request(packet), options.delimiters);
  if (mode == FeatureMode::all_words) {
    for (auto& t : tokens) words.push_back({FeatureKind::word, std::move(t)});
    return words;
  }
  if (mode != FeatureMode::recon_words_approx) {
    throw ValidationError("ModeMismatch", "extract_words needs a word mode");
  }

  std::set<std::string, std::less<>> key_tokens;
  std::set<std::string, std::less<>> value_tokens;
  auto collect = [&](const std::vector<KeyValue>& pairs) {
    for (const auto& kv : pairs) {
      for (auto& t : split_words(kv.key, options.delimiters)) key_tokens.insert(std::move(t));
      if (kv.value) {
        for (auto& t : split_words(*kv.value, options.delimiters)) value_tokens.insert(std::move(t));
      }
    }
  };
  collect(query_pairs(packet.uri));
  if (packet.cookie) collect(cookie_pairs(*packet.cookie));

  for (auto& t : tokens) {
    if (options.stopwords.contains(t)) continue;
    if (value_tokens.contains(t) && !key_tokens.contains(t)) continue;
    words.push_back({FeatureKind::word, std::move(t)});
  }
  return words;
}

Featurizer::Featurizer(FeatureMode mode, StandardHeaders standard_headers,
                       FeaturizerOptions options)
    : mode_(mode), standard_headers_(std::move(standard_headers)), options_(std::move(options)) {
  words_.delimiters = options_.delimiters;
  if (mode_ == FeatureMode::recon_words_approx) {
    words_.stopwords = standard_headers_.names();
  }
}

void Featurizer::fit(std::span<const HttpPacket> corpus) {
  if (mode_ != FeatureMode::recon_words_approx) return;
  words_.stopwords = standard_headers_.names();
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& p : corpus) {
    std::set<std::string> seen;
    for (auto& w : extract_words(p, mode_, words_)) seen.insert(std::move(w.token));
    for (const auto& t : seen) ++df[t];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(df.begin(), df.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  auto top = static_cast<std::size_t>(
      std::ceil(options_.stopword_top_fraction * static_cast<double>(ranked.size())));
  for (std::size_t i = 0; i < top && i < ranked.size(); ++i) words_.stopwords.insert(ranked[i].first);
}

FeatureSet Featurizer::features(const HttpPacket& packet) const {
  if (mode_ == FeatureMode::http_keys) return extract_http_keys(packet, standard_headers_);
  auto words = extract_words(packet, mode_, words_);
  return FeatureSet(std::make_move_iterator(words.begin()), std::make_move_iterator(words.end()));
}

bool Featurizer::is_keyless(const HttpPacket& packet) const {
  return fedpkt::is_keyless(packet, standard_headers_);
}

Vocabulary::Vocabulary(FeatureMode mode, std::size_t min_df, std::vector<Feature> sorted_entries)
    : mode_(mode), min_df_(min_df), entries_(std::move(sorted_entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (i > 0 && !(entries_[i - 1] < entries_[i])) {
      throw ValidationError("VocabInvalid", "vocabulary entries must be strictly increasing");
    }
    index_.emplace(entries_[i], static_cast<std::uint32_t>(i));
  }
}

std::optional<std::uint32_t> Vocabulary::index_of(const Feature& feature) const {
  auto it = index_.find(feature);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t Vocabulary::fingerprint() const {
  std::ostringstream out;
  write(out);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : out.str()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void Vocabulary::write(std::ostream& out) const {
  out << kVocabMagic << " mode=" << to_string(mode_) << " min_df=" << min_df_ << '\n';
  for (const auto& f : entries_) out << to_string(f.kind) << '\t' << f.token << '\n';
}

Vocabulary Vocabulary::read(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header.rfind(kVocabMagic, 0) != 0) {
    throw DataError("VocabInvalid", "missing vocabulary header line");
  }
  std::istringstream hs(header.substr(kVocabMagic.size()));
  std::string field;
  std::optional<FeatureMode> mode;
  std::optional<std::size_t> min_df;
  while (hs >> field) {
    if (field.rfind("mode=", 0) == 0) mode = parse_feature_mode(field.substr(5));
    if (field.rfind("min_df=", 0) == 0) min_df = std::stoul(field.substr(7));
  }
  if (!mode || !min_df) throw DataError("VocabInvalid", "vocabulary header lacks mode/min_df");

  std::vector<Feature> entries;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError("VocabInvalid", "line " + std::to_string(line_no) + ": expected kind<TAB>token");
    }
    auto kind = parse_feature_kind(std::string_view(line).substr(0, tab));
    if (!kind) throw DataError("VocabInvalid", "line " + std::to_string(line_no) + ": unknown kind");
    entries.push_back({*kind, line.substr(tab + 1)});
  }
  return Vocabulary(*mode, *min_df, std::move(entries));
}

Vocabulary build_vocabulary(std::span<const FeatureSet> feature_sets, FeatureMode mode,
                            std::size_t min_df) {
  std::map<Feature, std::size_t> df;
  for (const auto& set : feature_sets) {
    for (const auto& f : set) ++df[f];
  }
  std::vector<Feature> entries;
  for (const auto& [f, count] : df) {
    if (count >= min_df) entries.push_back(f);
  }
  return Vocabulary(mode, min_df, std::move(entries));
}

EncodedExample encode(const FeatureSet& features, const Vocabulary& vocab, bool positive,
                      std::string origin_packet_id, EncodeStats* stats) {
  EncodedExample ex;
  ex.label = positive ? 1 : -1;
  ex.origin_packet_id = std::move(origin_packet_id);
  for (const auto& f : features) {
    if (auto idx = vocab.index_of(f)) {
      ex.indices.push_back(*idx);
    } else if (stats) {
      ++stats->dropped;
    }
  }
  std::sort(ex.indices.begin(), ex.indices.end());
  return ex;
}

VocabOverlap vocab_overlap(std::span<const Vocabulary> vocabs) {
  VocabOverlap overlap;
  if (vocabs.empty()) return overlap;
  for (const auto& v : vocabs) {
    if (v.mode() != vocabs.front().mode()) {
      throw ValidationError("ModeMismatch", "vocabularies built with different feature modes");
    }
  }
  std::set<Feature> all(vocabs.front().entries().begin(), vocabs.front().entries().end());
  std::vector<Feature> common = vocabs.front().entries();
  for (const auto& v : vocabs.subspan(1)) {
    all.insert(v.entries().begin(), v.entries().end());
    std::vector<Feature> next;
    std::set_intersection(common.begin(), common.end(), v.entries().begin(), v.entries().end(),
                          std::back_inserter(next));
    common = std::move(next);
  }
  overlap.intersection = common.size();
  overlap.union_size = all.size();
  return overlap;
}

}  // namespace fedpkt

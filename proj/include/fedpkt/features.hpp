#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "fedpkt/feature.hpp"
#include "fedpkt/trace.hpp"

namespace fedpkt {

enum class FeatureMode { http_keys, all_words, recon_words_approx };

std::string_view to_string(FeatureMode mode);
std::optional<FeatureMode> parse_feature_mode(std::string_view text);

// Lowercased names of the standard (registered) HTTP headers. Anything not in
// this list counts as an app-defined custom header.
class StandardHeaders {
 public:
  StandardHeaders() = default;
  explicit StandardHeaders(std::unordered_set<std::string> names)
      : names_(std::move(names)) {}

  // The list compiled in from data/standard_headers.txt.
  static const StandardHeaders& bundled();
  // One lowercase name per line; '#' starts a comment line.
  static StandardHeaders load(const std::filesystem::path& path);

  bool contains(std::string_view lowercase_name) const {
    return names_.contains(std::string(lowercase_name));
  }
  std::size_t size() const { return names_.size(); }
  const std::unordered_set<std::string>& names() const { return names_; }

 private:
  std::unordered_set<std::string> names_;
};

// Decodes '+' and %XX escapes; malformed escapes are kept verbatim.
std::string percent_decode(std::string_view text);
// Trims surrounding whitespace and replaces inner whitespace runs by '_'.
std::string normalize_token(std::string_view text);

// URI query keys, Cookie keys, custom header names, and the file_request flag
// (granted only to GET requests that have none of the other three). Never
// emits values, path segments or the destination domain.
FeatureSet extract_http_keys(const HttpPacket& packet,
                             const StandardHeaders& standard_headers);

bool is_keyless(const HttpPacket& packet, const StandardHeaders& standard_headers);

inline constexpr std::string_view kDefaultDelimiters = "=&;,:/? \"{}[]\r\n\t";

struct WordOptions {
  std::string delimiters{kDefaultDelimiters};
  std::unordered_set<std::string> stopwords;  // recon_words_approx only
};

std::vector<std::string> split_words(std::string_view text, std::string_view delimiters);

// The request as the word tokenizers see it: request line, headers, cookie.
std::string serialize_request(const HttpPacket& packet);

// Word tokens of the serialized request (a multiset). recon_words_approx drops
// stopwords and tokens that occur only as query/cookie values.
std::vector<Feature> extract_words(const HttpPacket& packet, FeatureMode mode,
                                   const WordOptions& options);

struct FeaturizerOptions {
  std::size_t min_df = 1;
  double stopword_top_fraction = 0.001;
  std::string delimiters{kDefaultDelimiters};
};

// Corpus-level featurization for one mode. For recon_words_approx the
// frequent-token stopwords are fitted on the corpus passed to fit().
class Featurizer {
 public:
  Featurizer(FeatureMode mode, StandardHeaders standard_headers,
             FeaturizerOptions options = {});

  void fit(std::span<const HttpPacket> corpus);
  FeatureSet features(const HttpPacket& packet) const;
  bool is_keyless(const HttpPacket& packet) const;

  FeatureMode mode() const { return mode_; }
  const FeaturizerOptions& options() const { return options_; }
  const StandardHeaders& standard_headers() const { return standard_headers_; }
  const std::unordered_set<std::string>& stopwords() const { return words_.stopwords; }

 private:
  FeatureMode mode_;
  StandardHeaders standard_headers_;
  FeaturizerOptions options_;
  WordOptions words_;
};

// Frozen, lexicographically ordered feature -> index map.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(FeatureMode mode, std::size_t min_df, std::vector<Feature> sorted_entries);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  FeatureMode mode() const { return mode_; }
  std::size_t min_df() const { return min_df_; }
  const std::vector<Feature>& entries() const { return entries_; }
  const Feature& feature(std::size_t index) const { return entries_.at(index); }
  std::optional<std::uint32_t> index_of(const Feature& feature) const;

  // FNV-1a 64 of the serialized vocabulary file.
  std::uint64_t fingerprint() const;

  void write(std::ostream& out) const;
  static Vocabulary read(std::istream& in);

 private:
  FeatureMode mode_ = FeatureMode::http_keys;
  std::size_t min_df_ = 1;
  std::vector<Feature> entries_;
  std::map<Feature, std::uint32_t> index_;
};

Vocabulary build_vocabulary(std::span<const FeatureSet> feature_sets, FeatureMode mode,
                            std::size_t min_df);

// Multi-hot support plus a +1/-1 label.
struct EncodedExample {
  std::vector<std::uint32_t> indices;  // strictly increasing
  int label = -1;
  int weight = 1;
  std::string origin_packet_id;

  bool operator==(const EncodedExample&) const = default;
};

struct EncodeStats {
  std::size_t dropped = 0;  // out-of-vocabulary features
};

EncodedExample encode(const FeatureSet& features, const Vocabulary& vocab, bool positive,
                      std::string origin_packet_id = {}, EncodeStats* stats = nullptr);

struct VocabOverlap {
  std::size_t intersection = 0;
  std::size_t union_size = 0;
};

VocabOverlap vocab_overlap(std::span<const Vocabulary> vocabs);

}  // namespace fedpkt

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fedpkt/feature.hpp"

namespace fedpkt {

class HttpMethod {
 public:
  enum class Kind { get, post, other };

  HttpMethod() = default;
  static HttpMethod parse(std::string_view text);

  Kind kind() const { return kind_; }
  bool is_get() const { return kind_ == Kind::get; }
  bool is_post() const { return kind_ == Kind::post; }
  std::string str() const;

  bool operator==(const HttpMethod&) const = default;

 private:
  Kind kind_ = Kind::get;
  std::string other_;  // uppercased, only for Kind::other
};

using Header = std::pair<std::string, std::string>;

// One outgoing HTTP request with its ground-truth labels.
struct HttpPacket {
  std::string packet_id;
  std::string app_id;
  HttpMethod method;
  std::string domain;
  std::string uri;               // path + optional query, starts with '/'
  std::vector<Header> headers;   // names lowercased, order and duplicates kept
  std::optional<std::string> cookie;
  std::optional<bool> label_pii;
  std::optional<bool> label_ad;
  std::optional<std::int64_t> timestamp;

  bool operator==(const HttpPacket&) const = default;
};

enum class Strictness { strict, skip_invalid };

struct ParseWarning {
  std::size_t line_no = 0;
  std::string message;
};

struct ParseResult {
  std::vector<HttpPacket> packets;
  std::vector<ParseWarning> warnings;
};

// Reads the canonical line-delimited JSON trace format. Blank lines are
// ignored. In strict mode the first malformed record throws MalformedRecord;
// unknown top-level keys only ever produce warnings.
ParseResult parse_trace(std::istream& in, Strictness strictness);
ParseResult parse_trace_file(const std::filesystem::path& path,
                             Strictness strictness);

// Serializes packets back to the canonical format, one record per line.
std::string to_trace_line(const HttpPacket& packet);
void emit_trace(std::span<const HttpPacket> packets, std::ostream& out);

struct AppSummary {
  std::size_t packet_count = 0;
  std::size_t feature_count = 0;  // distinct HTTP-Keys features
  std::size_t domain_count = 0;

  bool operator==(const AppSummary&) const = default;
};

struct DatasetSummary {
  std::size_t packet_count = 0;
  std::size_t pii_positive_count = 0;
  std::size_t ad_positive_count = 0;
  std::size_t pii_labeled_count = 0;
  std::size_t ad_labeled_count = 0;
  std::size_t uri_key_count = 0;
  std::size_t cookie_key_count = 0;
  std::size_t custom_header_count = 0;
  std::size_t file_request_only_count = 0;
  // Packets with no HTTP-Keys feature at all, and the POST subset of them.
  // Published summaries print these as one "a/b" pair.
  std::size_t keyless_count = 0;
  std::size_t keyless_post_count = 0;
  std::size_t distinct_domains = 0;
  std::map<std::string, AppSummary> per_app;

  bool operator==(const DatasetSummary&) const = default;
};

using KeyExtractor = std::function<FeatureSet(const HttpPacket&)>;

DatasetSummary summarize(std::span<const HttpPacket> packets,
                         const KeyExtractor& extract_keys);

std::string format_summary(const DatasetSummary& summary);

std::map<std::string, std::vector<HttpPacket>> partition_by_app(
    std::span<const HttpPacket> packets);

}  // namespace fedpkt

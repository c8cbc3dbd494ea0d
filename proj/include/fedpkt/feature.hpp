#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace fedpkt {

// Declaration order is the sort order of features within a vocabulary.
enum class FeatureKind : std::uint8_t {
  uri_key,
  cookie_key,
  custom_header,
  file_request,
  word,
};

std::string_view to_string(FeatureKind kind);
std::optional<FeatureKind> parse_feature_kind(std::string_view text);

// A namespaced token. (kind, token) is the identity; file_request has an
// empty token and exactly one instance.
struct Feature {
  FeatureKind kind = FeatureKind::word;
  std::string token;

  static Feature file_request() { return {FeatureKind::file_request, {}}; }

  auto operator<=>(const Feature&) const = default;
  bool operator==(const Feature&) const = default;
};

using FeatureSet = std::set<Feature>;

std::string to_string(const Feature& feature);

}  // namespace fedpkt

#include "fedpkt/trace.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "fedpkt/error.hpp"
#include "json.hpp"

namespace fedpkt {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

const std::set<std::string, std::less<>> kKnownKeys = {
    "id", "app", "method", "domain", "uri", "headers", "cookie", "labels", "ts"};

struct RecordError {
  std::string reason;
};

std::string require_string(const json& record, const char* key) {
  auto it = record.find(key);
  if (it == record.end()) throw RecordError{std::string("missing \"") + key + "\""};
  if (!it->is_string()) throw RecordError{std::string("\"") + key + "\" must be a string"};
  return it->get<std::string>();
}

std::optional<bool> optional_bool(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_boolean()) throw RecordError{std::string("label \"") + key + "\" must be bool or null"};
  return it->get<bool>();
}

HttpPacket packet_from_json(const json& record, std::vector<std::string>& unknown) {
  if (!record.is_object()) throw RecordError{"record is not a JSON object"};
  HttpPacket p;
  p.packet_id = require_string(record, "id");
  p.app_id = require_string(record, "app");
  auto method = require_string(record, "method");
  if (method.empty()) throw RecordError{"\"method\" is empty"};
  p.method = HttpMethod::parse(method);
  p.uri = require_string(record, "uri");
  if (p.uri.empty() || p.uri.front() != '/') throw RecordError{"\"uri\" must begin with '/'"};

  if (auto it = record.find("domain"); it != record.end() && !it->is_null()) {
    if (!it->is_string()) throw RecordError{"\"domain\" must be a string"};
    p.domain = it->get<std::string>();
  }

  std::vector<std::string> cookie_parts;
  if (auto it = record.find("cookie"); it != record.end() && !it->is_null()) {
    if (!it->is_string()) throw RecordError{"\"cookie\" must be a string or null"};
    cookie_parts.push_back(it->get<std::string>());
  }

  if (auto it = record.find("headers"); it != record.end() && !it->is_null()) {
    if (!it->is_array()) throw RecordError{"\"headers\" must be an array"};
    for (const auto& h : *it) {
      if (!h.is_array() || h.size() != 2 || !h[0].is_string() || !h[1].is_string()) {
        throw RecordError{"each header must be a [name, value] pair of strings"};
      }
      auto name = lower(h[0].get<std::string>());
      auto value = h[1].get<std::string>();
      if (name == "cookie") {
        cookie_parts.push_back(std::move(value));
      } else {
        p.headers.emplace_back(std::move(name), std::move(value));
      }
    }
  }
  if (!cookie_parts.empty()) {
    std::string joined;
    for (std::size_t i = 0; i < cookie_parts.size(); ++i) {
      if (i) joined += "; ";
      joined += cookie_parts[i];
    }
    p.cookie = std::move(joined);
  }

  if (auto it = record.find("labels"); it != record.end() && !it->is_null()) {
    if (!it->is_object()) throw RecordError{"\"labels\" must be an object"};
    p.label_pii = optional_bool(*it, "pii");
    p.label_ad = optional_bool(*it, "ad");
  }

  if (auto it = record.find("ts"); it != record.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw RecordError{"\"ts\" must be an integer or null"};
    p.timestamp = it->get<std::int64_t>();
  }

  for (const auto& [key, _] : record.items()) {
    if (!kKnownKeys.contains(key)) unknown.push_back(key);
  }
  return p;
}

}  // namespace

HttpMethod HttpMethod::parse(std::string_view text) {
  HttpMethod m;
  auto up = upper(text);
  if (up == "GET") {
    m.kind_ = Kind::get;
  } else if (up == "POST") {
    m.kind_ = Kind::post;
  } else {
    m.kind_ = Kind::other;
    m.other_ = std::move(up);
  }
  return m;
}

std::string HttpMethod::str() const {
  switch (kind_) {
    case Kind::get: return "GET";
    case Kind::post: return "POST";
    case Kind::other: return other_;
  }
  return other_;
}

ParseResult parse_trace(std::istream& in, Strictness strictness) {
  ParseResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (std::all_of(line.begin(), line.end(),
                    [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    try {
      json record = json::parse(line);
      std::vector<std::string> unknown;
      result.packets.push_back(packet_from_json(record, unknown));
      for (const auto& key : unknown) {
        result.warnings.push_back({line_no, "unknown key \"" + key + "\" ignored"});
      }
    } catch (const json::exception& e) {
      if (strictness == Strictness::strict) throw MalformedRecord(line_no, "invalid JSON");
      result.warnings.push_back({line_no, "invalid JSON, record skipped"});
    } catch (const RecordError& e) {
      if (strictness == Strictness::strict) throw MalformedRecord(line_no, e.reason);
      result.warnings.push_back({line_no, e.reason + ", record skipped"});
    }
  }
  if (in.bad()) throw IoFailure("read error after line " + std::to_string(line_no));
  return result;
}

ParseResult parse_trace_file(const std::filesystem::path& path,
                             Strictness strictness) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open trace " + path.string());
  return parse_trace(in, strictness);
}

std::string to_trace_line(const HttpPacket& p) {
  ordered_json record;
  record["id"] = p.packet_id;
  record["app"] = p.app_id;
  record["method"] = p.method.str();
  record["domain"] = p.domain;
  record["uri"] = p.uri;
  ordered_json headers = ordered_json::array();
  for (const auto& [name, value] : p.headers) headers.push_back({name, value});
  record["headers"] = std::move(headers);
  record["cookie"] = p.cookie ? ordered_json(*p.cookie) : ordered_json(nullptr);
  ordered_json labels;
  labels["pii"] = p.label_pii ? ordered_json(*p.label_pii) : ordered_json(nullptr);
  labels["ad"] = p.label_ad ? ordered_json(*p.label_ad) : ordered_json(nullptr);
  record["labels"] = std::move(labels);
  record["ts"] = p.timestamp ? ordered_json(*p.timestamp) : ordered_json(nullptr);
  return record.dump(-1, ' ', false, ordered_json::error_handler_t::replace);
}

void emit_trace(std::span<const HttpPacket> packets, std::ostream& out) {
  for (const auto& p : packets) out << to_trace_line(p) << '\n';
}

DatasetSummary summarize(std::span<const HttpPacket> packets,
                         const KeyExtractor& extract_keys) {
  DatasetSummary s;
  std::set<Feature> all_features;
  std::set<std::string> domains;
  std::map<std::string, std::pair<std::set<Feature>, std::set<std::string>>> apps;

  for (const auto& p : packets) {
    ++s.packet_count;
    if (p.label_pii) {
      ++s.pii_labeled_count;
      if (*p.label_pii) ++s.pii_positive_count;
    }
    if (p.label_ad) {
      ++s.ad_labeled_count;
      if (*p.label_ad) ++s.ad_positive_count;
    }
    auto features = extract_keys(p);
    if (features.empty()) {
      ++s.keyless_count;
      if (p.method.is_post()) ++s.keyless_post_count;
    } else if (features.size() == 1 && features.begin()->kind == FeatureKind::file_request) {
      ++s.file_request_only_count;
    }
    domains.insert(p.domain);
    auto& [app_features, app_domains] = apps[p.app_id];
    app_domains.insert(p.domain);
    ++s.per_app[p.app_id].packet_count;
    for (const auto& f : features) {
      app_features.insert(f);
      all_features.insert(f);
    }
  }

  for (const auto& f : all_features) {
    switch (f.kind) {
      case FeatureKind::uri_key: ++s.uri_key_count; break;
      case FeatureKind::cookie_key: ++s.cookie_key_count; break;
      case FeatureKind::custom_header: ++s.custom_header_count; break;
      default: break;
    }
  }
  s.distinct_domains = domains.size();
  for (const auto& [app, sets] : apps) {
    auto& entry = s.per_app[app];
    entry.feature_count = sets.first.size();
    entry.domain_count = sets.second.size();
  }
  return s;
}

std::string format_summary(const DatasetSummary& s) {
  std::ostringstream out;
  out << "packets                 " << s.packet_count << '\n'
      << "apps                    " << s.per_app.size() << '\n'
      << "positive PII            " << s.pii_positive_count << " / " << s.pii_labeled_count << " labeled\n"
      << "positive Ad             " << s.ad_positive_count << " / " << s.ad_labeled_count << " labeled\n"
      << "URI keys                " << s.uri_key_count << '\n'
      << "Cookie keys             " << s.cookie_key_count << '\n'
      << "custom headers          " << s.custom_header_count << '\n'
      << "file-request packets    " << s.file_request_only_count << '\n'
      << "keyless/keyless POST    " << s.keyless_count << '/' << s.keyless_post_count << '\n'
      << "domains                 " << s.distinct_domains << '\n';
  out << "\napp\tpackets\tfeatures\tdomains\n";
  for (const auto& [app, a] : s.per_app) {
    out << app << '\t' << a.packet_count << '\t' << a.feature_count << '\t'
        << a.domain_count << '\n';
  }
  return out.str();
}

std::map<std::string, std::vector<HttpPacket>> partition_by_app(
    std::span<const HttpPacket> packets) {
  std::map<std::string, std::vector<HttpPacket>> buckets;
  for (const auto& p : packets) buckets[p.app_id].push_back(p);
  return buckets;
}

}  // namespace fedpkt

#include "fedpkt/convert.hpp"

#include <algorithm>
#include <cctype>
#include <iterator>
#include <sstream>

#include "fedpkt/error.hpp"
#include "json.hpp"

namespace fedpkt {

namespace {

using json = nlohmann::json;

struct FieldError {
  std::string reason;
};

const json* field(const json& record, const std::string& name) {
  if (name.empty()) return nullptr;
  auto it = record.find(name);
  if (it == record.end() || it->is_null()) return nullptr;
  return &*it;
}

std::string as_string(const json& v, const std::string& name) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  throw FieldError{"field \"" + name + "\" is not a string"};
}

std::optional<bool> as_label(const json* v, const std::string& name) {
  if (!v) return std::nullopt;
  if (v->is_boolean()) return v->get<bool>();
  if (v->is_number()) return v->get<double>() != 0.0;
  if (v->is_array()) return !v->empty();
  if (v->is_string()) {
    auto s = v->get<std::string>();
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no" || s.empty()) return false;
  }
  throw FieldError{"label field \"" + name + "\" has an unsupported value"};
}

void add_header_line(std::string_view line, std::vector<Header>& headers) {
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
  auto colon = line.find(':');
  if (colon == std::string_view::npos || colon == 0) return;
  auto value = line.substr(colon + 1);
  while (!value.empty() && value.front() == ' ') value.remove_prefix(1);
  headers.emplace_back(std::string(line.substr(0, colon)), std::string(value));
}

std::vector<Header> as_headers(const json& v) {
  std::vector<Header> headers;
  if (v.is_object()) {
    for (const auto& [name, value] : v.items()) {
      if (value.is_array()) {
        for (const auto& item : value) headers.emplace_back(name, as_string(item, name));
      } else {
        headers.emplace_back(name, value.is_string() ? value.get<std::string>() : value.dump());
      }
    }
  } else if (v.is_array()) {
    for (const auto& item : v) {
      if (item.is_array() && item.size() == 2 && item[0].is_string()) {
        headers.emplace_back(item[0].get<std::string>(), as_string(item[1], "header"));
      } else if (item.is_string()) {
        add_header_line(item.get<std::string>(), headers);
      } else {
        throw FieldError{"unsupported header entry"};
      }
    }
  } else if (v.is_string()) {
    std::istringstream lines(v.get<std::string>());
    std::string line;
    while (std::getline(lines, line)) add_header_line(line, headers);
  } else {
    throw FieldError{"unsupported headers value"};
  }
  for (auto& [name, _] : headers) {
    for (auto& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return headers;
}

HttpPacket convert_record(const json& record, const std::string& fallback_id,
                          const ConvertOptions& o) {
  if (!record.is_object()) throw FieldError{"record is not an object"};
  HttpPacket p;
  p.packet_id = fallback_id;
  if (auto* v = field(record, o.id_field)) p.packet_id = as_string(*v, o.id_field);
  if (auto* v = field(record, o.app_field)) p.app_id = as_string(*v, o.app_field);
  p.method = HttpMethod::parse("GET");
  if (auto* v = field(record, o.method_field)) p.method = HttpMethod::parse(as_string(*v, o.method_field));
  if (auto* v = field(record, o.domain_field)) p.domain = as_string(*v, o.domain_field);

  if (auto* v = field(record, o.uri_field)) {
    p.uri = as_string(*v, o.uri_field);
  } else if (auto* u = field(record, o.url_field)) {
    p.uri = as_string(*u, o.url_field);
  } else {
    throw FieldError{"no uri"};
  }
  if (auto scheme = p.uri.find("://"); scheme != std::string::npos && p.uri.front() != '/') {
    auto rest = p.uri.substr(scheme + 3);
    auto slash = rest.find_first_of("/?");
    auto host = rest.substr(0, slash);
    if (p.domain.empty()) p.domain = host.substr(0, host.find(':'));
    p.uri = slash == std::string::npos ? "/" : rest.substr(slash);
    if (p.uri.front() == '?') p.uri = "/" + p.uri;
  }
  if (p.uri.empty() || p.uri.front() != '/') p.uri = "/" + p.uri;

  std::vector<std::string> cookies;
  if (auto* v = field(record, o.headers_field)) {
    for (auto& h : as_headers(*v)) {
      if (h.first == "cookie") cookies.push_back(std::move(h.second));
      else p.headers.push_back(std::move(h));
    }
  }
  if (auto* v = field(record, o.cookie_field)) cookies.insert(cookies.begin(), as_string(*v, o.cookie_field));
  if (!cookies.empty()) {
    std::string joined;
    for (std::size_t i = 0; i < cookies.size(); ++i) joined += (i ? "; " : "") + cookies[i];
    p.cookie = std::move(joined);
  }
  p.label_pii = as_label(field(record, o.pii_field), o.pii_field);
  p.label_ad = as_label(field(record, o.ad_field), o.ad_field);
  if (auto* v = field(record, o.ts_field)) {
    if (v->is_number()) p.timestamp = static_cast<std::int64_t>(v->get<double>());
    else if (v->is_string()) p.timestamp = std::stoll(v->get<std::string>());
  }
  if (p.app_id.empty()) p.app_id = "unknown";
  return p;
}

}  // namespace

ConvertOptions convert_preset(const std::string& format) {
  ConvertOptions o;
  if (format == "nomoads") {
    o.app_field = "package_name";
    o.domain_field = "host";
    o.uri_field = "uri";
    o.headers_field = "headers";
    o.ad_field = "label";
    o.pii_field = "pii_types";
    o.ts_field = "ts";
  } else if (format == "antshield") {
    o.app_field = "package_name";
    o.domain_field = "host";
    o.uri_field = "uri";
    o.headers_field = "headers";
    o.pii_field = "pii_types";
    o.ts_field = "ts";
  } else if (format == "jsonl") {
    o.id_field = "id";
    o.app_field = "app";
    o.domain_field = "domain";
    o.uri_field = "uri";
    o.url_field = "url";
    o.headers_field = "headers";
    o.cookie_field = "cookie";
    o.pii_field = "pii";
    o.ad_field = "ad";
    o.ts_field = "ts";
  } else {
    throw config_invalid("convert.format", "must be nomoads, antshield or jsonl");
  }
  return o;
}

ParseResult convert_raw(std::istream& in, const ConvertOptions& options, Strictness strictness) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoFailure("read error while converting");

  std::vector<std::pair<std::string, json>> records;
  std::vector<ParseWarning> warnings;
  auto first = text.find_first_not_of(" \t\r\n");
  json whole = json::parse(text, nullptr, false);
  if (!whole.is_discarded() && first != std::string::npos && text[first] == '[') {
    for (std::size_t i = 0; i < whole.size(); ++i) records.emplace_back(std::to_string(i), whole[i]);
  } else if (!whole.is_discarded() && whole.is_object() && !whole.empty() &&
             std::all_of(whole.begin(), whole.end(), [](const json& v) { return v.is_object(); })) {
    for (auto& [key, value] : whole.items()) records.emplace_back(key, value);
  } else {
    std::istringstream lines(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json record = json::parse(line, nullptr, false);
      if (record.is_discarded()) {
        if (strictness == Strictness::strict) throw MalformedRecord(line_no, "invalid JSON");
        warnings.push_back({line_no, "invalid JSON, record skipped"});
        continue;
      }
      records.emplace_back(std::to_string(line_no - 1), std::move(record));
    }
  }

  ParseResult result;
  result.warnings = std::move(warnings);
  for (std::size_t i = 0; i < records.size(); ++i) {
    try {
      result.packets.push_back(convert_record(records[i].second, records[i].first, options));
    } catch (const FieldError& e) {
      if (strictness == Strictness::strict) throw MalformedRecord(i + 1, e.reason);
      result.warnings.push_back({i + 1, e.reason + ", record skipped"});
    } catch (const std::exception& e) {
      if (strictness == Strictness::strict) throw MalformedRecord(i + 1, e.what());
      result.warnings.push_back({i + 1, std::string(e.what()) + ", record skipped"});
    }
  }
  return result;
}

}  // namespace fedpkt

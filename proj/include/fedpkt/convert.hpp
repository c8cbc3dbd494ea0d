#pragma once

#include <istream>
#include <string>
#include <vector>

#include "fedpkt/trace.hpp"

namespace fedpkt {

// Field mapping from a raw labeled-packet dump to the canonical trace format.
// An empty field name means "not present". id_field empty: the record's key
// (object input) or its position (array / JSON-lines input) becomes the id.
struct ConvertOptions {
  std::string id_field;
  std::string app_field = "package_name";
  std::string method_field = "method";
  std::string domain_field = "host";
  std::string uri_field = "uri";
  std::string url_field;  // absolute URL, split into domain + uri when uri_field is absent
  std::string headers_field = "headers";
  std::string cookie_field;
  std::string pii_field;
  std::string ad_field;
  std::string ts_field;
};

// Presets: "nomoads" (ad + PII labels), "antshield" (PII labels), "jsonl"
// (generic field names). All fields can be overridden afterwards.
ConvertOptions convert_preset(const std::string& format);

// Accepts a JSON object of records keyed by id, a JSON array of records, or
// JSON lines. Headers may be an object, a list of [name, value] pairs, a list
// of "Name: value" strings, or one CRLF-separated string. Labels may be bool,
// 0/1, "true"/"false", or a list (nonempty means positive).
ParseResult convert_raw(std::istream& in, const ConvertOptions& options, Strictness strictness);

}  // namespace fedpkt

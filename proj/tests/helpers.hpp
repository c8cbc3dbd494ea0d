#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fedpkt/experiment.hpp"
#include "fedpkt/synth.hpp"
#include "fedpkt/trace.hpp"

namespace fedpkt {

// Readable gtest failure output for feature sets.
inline void PrintTo(const Feature& f, std::ostream* os) { *os << to_string(f); }

}  // namespace fedpkt

namespace fedpkt::testing {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(FEDPKT_DATA_DIR) / name;
}

inline HttpPacket make_packet(std::string method, std::string uri,
                              std::vector<Header> headers = {},
                              std::optional<std::string> cookie = std::nullopt,
                              std::string app = "app", std::string domain = "example.com") {
  HttpPacket p;
  p.packet_id = "p";
  p.app_id = std::move(app);
  p.method = HttpMethod::parse(method);
  p.domain = std::move(domain);
  p.uri = std::move(uri);
  p.headers = std::move(headers);
  p.cookie = std::move(cookie);
  return p;
}

inline EncodedExample example(std::vector<std::uint32_t> indices, int label) {
  EncodedExample e;
  e.indices = std::move(indices);
  e.label = label;
  return e;
}

// The 5000-packet planted-rule corpus, encoded with HTTP-Keys for the ad task.
inline const PreparedData& planted_data(double noise = 0.05) {
  static std::map<double, PreparedData> cache;
  auto it = cache.find(noise);
  if (it != cache.end()) return it->second;
  PlantedCorpusOptions options;
  options.label_noise = noise;
  auto packets = generate_planted_corpus(options);
  ExperimentSpec spec;
  spec.task = Task::ad;
  return cache.emplace(noise, prepare_data(spec, packets)).first->second;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace fedpkt::testing

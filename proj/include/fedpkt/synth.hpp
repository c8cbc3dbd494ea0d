#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fedpkt/trace.hpp"

namespace fedpkt {

// Synthetic traffic with a planted rule: a packet carries the key "gaid" or
// "adid" (query or cookie) iff its clean label is positive. Both task labels
// follow the rule and are then flipped independently with probability
// label_noise. Benign keys follow a Zipf-like popularity so most are rare.
struct PlantedCorpusOptions {
  std::size_t packets = 5000;
  double positive_rate = 0.5;
  double label_noise = 0.05;
  std::size_t apps = 8;
  std::size_t benign_keys = 1500;
  double featureless_rate = 0.04;  // packets with no keys (GET -> file_request)
  std::uint64_t seed = 1;
  std::vector<std::string> planted_keys = {"gaid", "adid"};
};

std::vector<HttpPacket> generate_planted_corpus(const PlantedCorpusOptions& options);

}  // namespace fedpkt

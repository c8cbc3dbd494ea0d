#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedpkt/experiment.hpp"

namespace fedpkt {

// Experiment configuration in a small TOML subset:
//
//   # comment
//   [section]
//   key = value        # value: "quoted string", number, true/false, inf,
//                      # bare word, or a comma-separated list of those
//
// Keys are addressed as "section.key" and must belong to the documented key
// set; relative paths resolve against the directory of the config file.
class Config {
 public:
  static Config parse(std::string_view text, std::filesystem::path base_dir = {});
  static Config load(const std::filesystem::path& path);

  // "section.key=value"; the key must be a known key.
  void apply_override(std::string_view assignment);
  void set(const std::string& key, std::string value);

  bool has(const std::string& key) const { return values_.contains(key); }
  std::optional<std::string> raw(const std::string& key) const;
  const std::filesystem::path& base_dir() const { return base_dir_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  // Positive integer or "inf" (nullopt).
  std::optional<std::size_t> get_batch(const std::string& key,
                                       std::optional<std::size_t> fallback) const;
  std::optional<double> get_optional_double(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;
  std::filesystem::path get_path(const std::string& key, const std::string& fallback) const;

  static const std::vector<std::string>& known_keys();

 private:
  std::map<std::string, std::string> values_;
  std::filesystem::path base_dir_;
};

// Builds and validates the experiment spec. FEDPKT_SEED, when set, replaces
// experiment.seed.
ExperimentSpec to_experiment_spec(const Config& config);

}  // namespace fedpkt

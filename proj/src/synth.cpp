#include "fedpkt/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fedpkt/rng.hpp"

namespace fedpkt {

namespace {

std::string random_word(Rng& rng, std::size_t min_len, std::size_t max_len,
                        std::string_view alphabet = "abcdefghijklmnopqrstuvwxyz") {
  auto len = min_len + uniform_index(rng, max_len - min_len + 1);
  std::string s;
  for (std::size_t i = 0; i < len; ++i) s += alphabet[uniform_index(rng, alphabet.size())];
  return s;
}

std::string random_value(Rng& rng) {
  return random_word(rng, 4, 16, "0123456789abcdefABCDEF-_.");
}

// Samples ranks with probability proportional to 1/(rank+1).
class ZipfSampler {
 public:
  explicit ZipfSampler(std::size_t n) : cdf_(n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += 1.0 / static_cast<double>(i + 1);
      cdf_[i] = acc;
    }
    for (auto& c : cdf_) c /= acc;
  }
  std::size_t operator()(Rng& rng) const {
    auto it = std::lower_bound(cdf_.begin(), cdf_.end(), uniform_unit(rng));
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

}  // namespace

std::vector<HttpPacket> generate_planted_corpus(const PlantedCorpusOptions& options) {
  Rng rng(derive_seed(options.seed, {0xc0de}));

  std::set<std::string> reserved(options.planted_keys.begin(), options.planted_keys.end());
  std::vector<std::string> keys;
  std::set<std::string> seen;
  while (keys.size() < options.benign_keys) {
    auto k = random_word(rng, 2, 9);
    if (reserved.contains(k) || !seen.insert(k).second) continue;
    keys.push_back(std::move(k));
  }
  ZipfSampler key_rank(keys.size());

  std::vector<std::vector<std::string>> app_domains(options.apps);
  for (auto& domains : app_domains) {
    auto n = 2 + uniform_index(rng, 4);
    for (std::size_t i = 0; i < n; ++i) domains.push_back(random_word(rng, 4, 10) + ".com");
  }
  const std::vector<Header> standard = {{"user-agent", "Dalvik/2.1.0 (Linux; U; Android 9)"},
                                        {"accept-encoding", "gzip"},
                                        {"connection", "Keep-Alive"},
                                        {"accept", "*/*"}};

  std::vector<HttpPacket> packets;
  packets.reserve(options.packets);
  for (std::size_t n = 0; n < options.packets; ++n) {
    HttpPacket p;
    p.packet_id = "p" + std::to_string(n);
    auto app = uniform_index(rng, options.apps);
    p.app_id = "com.synthetic.app" + std::to_string(app);
    p.domain = app_domains[app][uniform_index(rng, app_domains[app].size())];
    p.method = HttpMethod::parse(uniform_unit(rng) < 0.9 ? "GET" : "POST");
    p.timestamp = 1500000000000LL + static_cast<std::int64_t>(n) * 1000;

    std::string path = "/";
    auto segments = 1 + uniform_index(rng, 3);
    for (std::size_t i = 0; i < segments; ++i) {
      path += random_word(rng, 3, 8) + (i + 1 < segments ? "/" : "");
    }

    for (std::size_t i = 0, h = uniform_index(rng, standard.size() + 1); i < h; ++i) {
      p.headers.push_back(standard[i]);
    }

    std::vector<std::pair<std::string, std::string>> query, cookie;
    const bool positive = uniform_unit(rng) < options.positive_rate;
    const bool featureless = !positive && uniform_unit(rng) < options.featureless_rate;
    if (!featureless) {
      auto benign = 1 + uniform_index(rng, 5);
      for (std::size_t i = 0; i < benign; ++i) {
        const auto& key = keys[key_rank(rng)];
        double where = uniform_unit(rng);
        if (where < 0.6) {
          query.emplace_back(key, random_value(rng));
        } else if (where < 0.85) {
          cookie.emplace_back(key, random_value(rng));
        } else {
          p.headers.emplace_back("x-" + key, random_value(rng));
        }
      }
      if (positive) {
        std::vector<std::string> planted;
        for (const auto& k : options.planted_keys) {
          if (uniform_unit(rng) < 0.6) planted.push_back(k);
        }
        if (planted.empty()) {
          planted.push_back(options.planted_keys[uniform_index(rng, options.planted_keys.size())]);
        }
        for (const auto& k : planted) {
          auto value = random_word(rng, 8, 8, "0123456789abcdef") + "-" +
                       random_word(rng, 4, 4, "0123456789abcdef");
          (uniform_unit(rng) < 0.8 ? query : cookie).emplace_back(k, value);
        }
      }
    }
    shuffle_in_place(query, rng);
    shuffle_in_place(cookie, rng);

    p.uri = path;
    for (std::size_t i = 0; i < query.size(); ++i) {
      p.uri += (i == 0 ? "?" : "&") + query[i].first + "=" + query[i].second;
    }
    if (!cookie.empty()) {
      std::string c;
      for (std::size_t i = 0; i < cookie.size(); ++i) {
        if (i) c += "; ";
        c += cookie[i].first + "=" + cookie[i].second;
      }
      p.cookie = std::move(c);
    }
    auto noisy = [&](bool clean) { return uniform_unit(rng) < options.label_noise ? !clean : clean; };
    p.label_pii = noisy(positive);
    p.label_ad = noisy(positive);
    packets.push_back(std::move(p));
  }
  return packets;
}

}  // namespace fedpkt

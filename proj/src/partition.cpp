#include "fedpkt/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "fedpkt/error.hpp"
#include "fedpkt/rng.hpp"
#include "json.hpp"

namespace fedpkt {

namespace {

enum : std::uint64_t {
  kStreamBalance = 1,
  kStreamSplit = 2,
  kStreamTrainTest = 3,
  kStreamClients = 4,
  kStreamProportions = 5,
};

ExampleList shuffled(std::span<const EncodedExample> examples, std::uint64_t seed,
                     std::uint64_t stream) {
  ExampleList out(examples.begin(), examples.end());
  Rng rng(derive_seed(seed, {stream}));
  shuffle_in_place(out, rng);
  return out;
}

void check_clients(std::size_t n, std::size_t k) {
  if (k == 0) throw ValidationError("TooManyClients", "need at least one client");
  if (k > n) {
    throw ValidationError("TooManyClients", std::to_string(k) + " clients for " +
                                                std::to_string(n) + " examples");
  }
}

}  // namespace

void SplitSpec::validate() const {
  if (k < 1) throw config_invalid("split.clients", "must be >= 1");
  if (!(min_frac >= 0.0 && min_frac <= 1.0)) throw config_invalid("split.min_frac", "must be in [0, 1]");
  if (!(train_frac > 0.0 && train_frac < 1.0)) throw config_invalid("split.train_frac", "must be in (0, 1)");
}

bool has_both_labels(std::span<const EncodedExample> examples) {
  bool pos = false, neg = false;
  for (const auto& e : examples) (e.label > 0 ? pos : neg) = true;
  return pos && neg;
}

ExampleList balance(std::span<const EncodedExample> examples, std::uint64_t seed) {
  ExampleList pos, neg;
  for (const auto& e : examples) (e.label > 0 ? pos : neg).push_back(e);
  if (pos.empty() || neg.empty()) {
    throw DataError("SingleClass", "balancing needs both labels (" + std::to_string(pos.size()) +
                                       " positive, " + std::to_string(neg.size()) + " negative)");
  }
  Rng rng(derive_seed(seed, {kStreamBalance}));
  auto& majority = pos.size() > neg.size() ? pos : neg;
  auto& minority = pos.size() > neg.size() ? neg : pos;
  shuffle_in_place(majority, rng);
  majority.resize(minority.size());
  ExampleList out;
  out.reserve(2 * minority.size());
  out.insert(out.end(), pos.begin(), pos.end());
  out.insert(out.end(), neg.begin(), neg.end());
  shuffle_in_place(out, rng);
  return out;
}

std::pair<ExampleList, ExampleList> train_test_split(std::span<const EncodedExample> examples,
                                                     double train_frac, std::uint64_t seed) {
  if (examples.empty()) throw DataError("EmptyInput", "nothing to split");
  if (!(train_frac > 0.0 && train_frac < 1.0)) {
    throw config_invalid("train_frac", "must be in (0, 1)");
  }
  auto all = shuffled(examples, seed, kStreamTrainTest);
  auto n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(all.size())));
  ExampleList test(std::make_move_iterator(all.begin() + static_cast<std::ptrdiff_t>(n_train)),
                   std::make_move_iterator(all.end()));
  all.resize(n_train);
  return {std::move(all), std::move(test)};
}

std::vector<ExampleList> split_even(std::span<const EncodedExample> examples, std::size_t k,
                                    std::uint64_t seed) {
  check_clients(examples.size(), k);
  auto all = shuffled(examples, seed, kStreamSplit);
  std::vector<ExampleList> buckets(k);
  for (std::size_t i = 0; i < all.size(); ++i) buckets[i % k].push_back(std::move(all[i]));
  return buckets;
}

std::vector<std::size_t> uneven_sizes(std::size_t n, std::size_t k, std::uint64_t seed,
                                      double min_frac) {
  check_clients(n, k);
  if (!(min_frac >= 0.0 && min_frac <= 1.0)) {
    throw ValidationError("InfeasibleSpec", "min_frac must be in [0, 1], got " + std::to_string(min_frac));
  }
  Rng rng(derive_seed(seed, {kStreamProportions}));
  std::vector<double> draws(k);
  for (auto& d : draws) d = uniform_unit(rng) + 1e-12;
  double total = std::accumulate(draws.begin(), draws.end(), 0.0);
  double floor_share = min_frac / static_cast<double>(k);

  std::vector<double> exact(k);
  std::vector<std::size_t> sizes(k);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    double p = min_frac >= 1.0 ? 1.0 / static_cast<double>(k)
                               : floor_share + (1.0 - min_frac) * draws[i] / total;
    exact[i] = p * static_cast<double>(n);
    sizes[i] = static_cast<std::size_t>(std::floor(exact[i] + 1e-9));
    assigned += sizes[i];
  }
  // Largest remainder; equal remainders go to the lower index.
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return exact[a] - static_cast<double>(sizes[a]) > exact[b] - static_cast<double>(sizes[b]);
  });
  for (std::size_t i = 0; assigned < n; i = (i + 1) % k, ++assigned) ++sizes[order[i]];
  while (assigned > n) {
    auto largest = std::max_element(sizes.begin(), sizes.end());
    --*largest;
    --assigned;
  }
  for (auto& s : sizes) {
    if (s == 0) {
      auto largest = std::max_element(sizes.begin(), sizes.end());
      --*largest;
      s = 1;
    }
  }
  return sizes;
}

std::vector<ExampleList> split_uneven(std::span<const EncodedExample> examples, std::size_t k,
                                      std::uint64_t seed, double min_frac) {
  auto sizes = uneven_sizes(examples.size(), k, seed, min_frac);
  auto all = shuffled(examples, seed, kStreamSplit);
  std::vector<ExampleList> buckets(k);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < sizes[i]; ++j) buckets[i].push_back(std::move(all[pos++]));
  }
  return buckets;
}

std::vector<ClientDataset> make_clients(std::span<const EncodedExample> examples,
                                        const SplitSpec& spec, std::uint64_t vocab_fingerprint,
                                        bool balance_test) {
  spec.validate();
  auto buckets = spec.mode == SplitMode::even
                     ? split_even(examples, spec.k, spec.seed)
                     : split_uneven(examples, spec.k, spec.seed, spec.min_frac);
  std::vector<ClientDataset> clients;
  clients.reserve(buckets.size());
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    auto client_seed = derive_seed(spec.seed, {kStreamClients, i});
    ClientDataset c;
    c.client_id = static_cast<int>(i);
    c.vocab_fingerprint = vocab_fingerprint;
    auto [train, test] = train_test_split(buckets[i], spec.train_frac, client_seed);
    if (spec.balance && has_both_labels(train)) train = balance(train, client_seed);
    if (balance_test && has_both_labels(test)) test = balance(test, client_seed + 1);
    c.train = std::move(train);
    c.test = std::move(test);
    clients.push_back(std::move(c));
  }
  return clients;
}

void write_manifest(std::span<const ClientDataset> clients, std::ostream& out) {
  nlohmann::ordered_json doc;
  doc["clients"] = nlohmann::ordered_json::array();
  for (const auto& c : clients) {
    nlohmann::ordered_json entry;
    entry["client_id"] = c.client_id;
    auto ids = [](const ExampleList& list) {
      auto arr = nlohmann::ordered_json::array();
      for (const auto& e : list) arr.push_back(e.origin_packet_id);
      return arr;
    };
    entry["train"] = ids(c.train);
    entry["test"] = ids(c.test);
    doc["clients"].push_back(std::move(entry));
  }
  out << doc.dump(1) << '\n';
}

}  // namespace fedpkt

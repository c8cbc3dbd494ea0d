#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "fedpkt/features.hpp"

namespace fedpkt {

using ExampleList = std::vector<EncodedExample>;

// One synthetic user. n_k is the training size that weights aggregation.
struct ClientDataset {
  int client_id = 0;
  ExampleList train;
  ExampleList test;
  std::uint64_t vocab_fingerprint = 0;

  std::size_t n_k() const { return train.size(); }
};

enum class SplitMode { even, uneven };

struct SplitSpec {
  std::size_t k = 1;
  SplitMode mode = SplitMode::even;
  double min_frac = 0.3;  // uneven: floor as a fraction of the even share n/k
  std::uint64_t seed = 0;
  double train_frac = 0.8;
  bool balance = true;

  void validate() const;
};

// Undersamples the majority class to the minority size, then shuffles.
ExampleList balance(std::span<const EncodedExample> examples, std::uint64_t seed);

bool has_both_labels(std::span<const EncodedExample> examples);

// Shuffle, then prefix split with |train| = round(train_frac * n).
std::pair<ExampleList, ExampleList> train_test_split(std::span<const EncodedExample> examples,
                                                     double train_frac, std::uint64_t seed);

// Shuffle, then deal round-robin: sizes differ by at most one.
std::vector<ExampleList> split_even(std::span<const EncodedExample> examples, std::size_t k,
                                    std::uint64_t seed);

// Random shares p_i >= min_frac / k summing to one, realized by largest
// remainder rounding over a shuffled copy. Every bucket is nonempty.
std::vector<ExampleList> split_uneven(std::span<const EncodedExample> examples, std::size_t k,
                                      std::uint64_t seed, double min_frac);

// Bucket sizes split_uneven would use for n examples (exposed for audit).
std::vector<std::size_t> uneven_sizes(std::size_t n, std::size_t k, std::uint64_t seed,
                                      double min_frac);

// Client split, then a per-client train/test split; each client's training
// data is balanced when spec.balance is set and both labels are present.
std::vector<ClientDataset> make_clients(std::span<const EncodedExample> examples,
                                        const SplitSpec& spec, std::uint64_t vocab_fingerprint,
                                        bool balance_test = false);

// {"clients":[{"client_id":0,"train":[ids...],"test":[ids...]},...]}
void write_manifest(std::span<const ClientDataset> clients, std::ostream& out);

}  // namespace fedpkt

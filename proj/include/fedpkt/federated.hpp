#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedpkt/partition.hpp"
#include "fedpkt/rng.hpp"
#include "fedpkt/svm.hpp"

namespace fedpkt {

enum class EvalSet { union_test, per_client_test, both };

// participants: average over the sampled clients only (n = sum over S_t).
// all_clients: every client is weighted by n_k and non-participants
// contribute the current global model.
enum class Aggregation { participants, all_clients };

struct FedConfig {
  std::size_t K = 1;
  double C = 1.0;
  std::optional<std::size_t> B;  // nullopt: one batch of all local data
  int E = 1;
  int R_max = 800;
  double eta = 0.1;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  std::optional<double> target_f1;
  EvalSet eval_set = EvalSet::union_test;
  Aggregation aggregation = Aggregation::participants;
  std::size_t workers = 1;  // never affects results

  void validate() const;
  // m = max(floor(C K), 1)
  std::size_t clients_per_round() const;
};

struct RoundLog {
  int round = 0;
  std::vector<int> selected_clients;
  double global_f1_union = 0.0;
  std::optional<std::map<int, double>> per_client_f1;
  std::optional<double> holdout_f1;
  std::int64_t wall_time_ms = 0;
};

struct RunResult {
  SvmModel final_model;
  std::vector<RoundLog> logs;
  std::optional<int> rounds_to_target;
  bool reached_target = false;
};

std::size_t clients_per_round(std::size_t K, double C);

// Uniform sample without replacement of m = max(floor(C K), 1) ids, sorted.
std::vector<int> sample_clients(std::size_t K, double C, Rng& round_rng);

struct WeightedModel {
  SvmModel model;
  std::size_t n_k = 0;
};

// Coordinate-wise average weighted by n_k / sum(n_k). The result does not
// depend on the order of `updates`, and m copies of one model return it
// exactly.
SvmModel aggregate(std::span<const WeightedModel> updates);

// Federated Averaging over linear SVM clients, starting from w = 0. Each
// round's client updates use streams derived from (seed, round, client id).
// `holdout` is an optional extra evaluation set logged as holdout_f1.
RunResult run_federated(std::span<const ClientDataset> clients, const FedConfig& config,
                        const FeatureSpace& space,
                        std::span<const EncodedExample> holdout = {});

// First 1-based round whose union F1 reaches target.
std::optional<int> first_round_reaching(std::span<const RoundLog> logs, double target);

struct SweepPoint {
  double C = 1.0;
  std::optional<std::size_t> B;
  int E = 1;
};

struct SweepRow {
  SweepPoint point;
  std::optional<double> mean_rounds;
  std::optional<int> min_rounds;
  std::optional<int> max_rounds;
  int censored_runs = 0;
  int runs = 0;
  std::vector<std::optional<int>> per_run;
};

// Runs each grid point `runs` times with seeds hash(base.seed, run); runs that
// never reach base.target_f1 within R_max are censored and excluded from the
// mean/min/max.
std::vector<SweepRow> rounds_to_target_sweep(std::span<const ClientDataset> clients,
                                             const FedConfig& base,
                                             std::span<const SweepPoint> grid, int runs,
                                             const FeatureSpace& space);

struct CrowdPoint {
  std::size_t k = 0;
  double f1_on_k_users_test = 0.0;
  double f1_on_all_users_test = 0.0;
};

// Federates over the first k clients (C = 1) for k = 1..K; each F1 is the
// maximum over rounds of the F1 averaged across `runs` seeded runs.
std::vector<CrowdPoint> crowdsourcing_curve(std::span<const ClientDataset> clients_ascending,
                                            const FedConfig& config, int runs,
                                            const FeatureSpace& space);

// One JSON record per round. wall_time_ms is left out unless asked for, so
// logs of identical runs are byte-identical.
void write_round_log(std::span<const RoundLog> logs, std::ostream& out,
                     bool include_wall_time = false, std::optional<int> run = std::nullopt);
void write_sweep_csv(std::span<const SweepRow> rows, std::ostream& out);
void write_crowd_csv(std::span<const CrowdPoint> points, std::ostream& out);

std::string format_batch(const std::optional<std::size_t>& batch);

}  // namespace fedpkt

#include "fedpkt/federated.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <numeric>
#include <ostream>
#include <thread>

#include "fedpkt/error.hpp"
#include "json.hpp"

namespace fedpkt {

namespace {

enum : std::uint64_t { kStreamSample = 0x5a3b1e, kStreamClient = 0xc11e47 };

template <typename Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

double f1_of(const SvmModel& model, std::span<const EncodedExample> examples) {
  if (examples.empty()) return 0.0;
  return evaluate(model, examples).f1;
}

std::string format_double(double v) {
  // Shortest text that round-trips.
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::size_t clients_per_round(std::size_t K, double C) {
  // The epsilon keeps e.g. C = 0.29, K = 100 at 29 despite rounding in C*K.
  auto m = static_cast<std::size_t>(std::floor(C * static_cast<double>(K) + 1e-9));
  return std::clamp<std::size_t>(m, 1, std::max<std::size_t>(K, 1));
}

void FedConfig::validate() const {
  if (K < 1) throw config_invalid("federated.K", "must be >= 1");
  if (!(C > 0.0 && C <= 1.0)) throw config_invalid("federated.C", "must be in (0, 1]");
  if (B && *B == 0) throw config_invalid("federated.B", "must be positive or inf");
  if (E < 1) throw config_invalid("federated.E", "must be >= 1");
  if (R_max < 1) throw config_invalid("federated.R_max", "must be >= 1");
  if (!(eta > 0.0) || !std::isfinite(eta)) throw config_invalid("svm.eta", "must be > 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw config_invalid("svm.lambda", "must be >= 0");
  if (target_f1 && !(*target_f1 >= 0.0 && *target_f1 <= 1.0)) {
    throw config_invalid("federated.target_f1", "must be in [0, 1]");
  }
}

std::size_t FedConfig::clients_per_round() const { return fedpkt::clients_per_round(K, C); }

std::vector<int> sample_clients(std::size_t K, double C, Rng& round_rng) {
  auto m = clients_per_round(K, C);
  std::vector<int> ids(K);
  std::iota(ids.begin(), ids.end(), 0);
  // Partial Fisher-Yates: the first m slots are a uniform sample.
  for (std::size_t i = 0; i < m; ++i) {
    auto j = i + uniform_index(round_rng, K - i);
    std::swap(ids[i], ids[j]);
  }
  ids.resize(m);
  std::sort(ids.begin(), ids.end());
  return ids;
}

SvmModel aggregate(std::span<const WeightedModel> updates) {
  if (updates.empty()) throw ValidationError("EmptyUpdateSet", "no client updates to aggregate");
  const auto dim = updates.front().model.dimension();
  double total = 0.0;
  for (const auto& u : updates) {
    if (u.model.dimension() != dim) {
      throw ValidationError("DimensionMismatch", "client models have different dimensions");
    }
    if (u.n_k == 0) throw ValidationError("ClientTooSmall", "client update with n_k = 0");
    total += static_cast<double>(u.n_k);
  }

  // Canonical order makes the floating-point sum independent of the input
  // order; averaging offsets from the first model makes equal models exact.
  std::vector<std::size_t> order(updates.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ua = updates[a];
    const auto& ub = updates[b];
    if (ua.n_k != ub.n_k) return ua.n_k < ub.n_k;
    return ua.model.weights < ub.model.weights;
  });

  const auto& anchor = updates[order.front()].model;
  SvmModel out = anchor;
  out.trained_rounds = 0;
  for (const auto& u : updates) out.trained_rounds = std::max(out.trained_rounds, u.model.trained_rounds);
  for (std::size_t i = 0; i < dim; ++i) {
    double acc = 0.0;
    for (auto k : order) {
      const auto& u = updates[k];
      acc += (static_cast<double>(u.n_k) / total) * (u.model.weights[i] - anchor.weights[i]);
    }
    out.weights[i] = anchor.weights[i] + acc;
  }
  return out;
}

std::optional<int> first_round_reaching(std::span<const RoundLog> logs, double target) {
  for (const auto& log : logs) {
    if (log.global_f1_union >= target) return log.round;
  }
  return std::nullopt;
}

RunResult run_federated(std::span<const ClientDataset> clients, const FedConfig& config,
                        const FeatureSpace& space, std::span<const EncodedExample> holdout) {
  config.validate();
  if (clients.size() != config.K) {
    throw config_invalid("federated.K", "is " + std::to_string(config.K) + " but " +
                                            std::to_string(clients.size()) + " clients were given");
  }
  for (const auto& c : clients) {
    if (c.vocab_fingerprint != space.fingerprint) {
      throw ValidationError("VocabMismatch", "client " + std::to_string(c.client_id) +
                                                 " was encoded with a different vocabulary");
    }
    if (c.n_k() == 0) {
      throw DataError("ClientTooSmall", "client " + std::to_string(c.client_id) + " has no training data");
    }
  }

  ExampleList union_test;
  for (const auto& c : clients) union_test.insert(union_test.end(), c.test.begin(), c.test.end());

  const bool per_client = config.eval_set != EvalSet::union_test;
  RunResult result;
  SvmModel global = SvmModel::zeros(space.dimension, space.fingerprint);

  for (int round = 1; round <= config.R_max; ++round) {
    auto started = std::chrono::steady_clock::now();
    Rng sample_rng(derive_seed(config.seed, {kStreamSample, static_cast<std::uint64_t>(round)}));
    auto selected = sample_clients(config.K, config.C, sample_rng);

    std::vector<WeightedModel> updates(selected.size());
    parallel_for(selected.size(), config.workers, [&](std::size_t slot) {
      const auto& client = clients[static_cast<std::size_t>(selected[slot])];
      Hyperparams hyper;
      hyper.eta = config.eta;
      hyper.lambda = config.lambda;
      hyper.batch_size = config.B;
      hyper.epochs = config.E;
      hyper.seed = derive_seed(config.seed, {kStreamClient, static_cast<std::uint64_t>(round),
                                             static_cast<std::uint64_t>(client.client_id)});
      updates[slot] = {client_update(global, client.train, hyper), client.n_k()};
    });
    if (config.aggregation == Aggregation::all_clients) {
      std::size_t s = 0;
      for (std::size_t k = 0; k < clients.size(); ++k) {
        if (s < selected.size() && static_cast<std::size_t>(selected[s]) == k) {
          ++s;
          continue;
        }
        updates.push_back({global, clients[k].n_k()});
      }
    }
    global = aggregate(updates);
    global.trained_rounds = round;

    RoundLog log;
    log.round = round;
    log.selected_clients = std::move(selected);
    log.global_f1_union = f1_of(global, union_test);
    if (per_client) {
      std::map<int, double> scores;
      for (const auto& c : clients) scores[c.client_id] = f1_of(global, c.test);
      log.per_client_f1 = std::move(scores);
    }
    if (!holdout.empty()) log.holdout_f1 = f1_of(global, holdout);
    log.wall_time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - started)
                           .count();

    double score = log.global_f1_union;
    if (config.eval_set == EvalSet::per_client_test && !log.per_client_f1->empty()) {
      score = 0.0;
      for (const auto& [_, f1] : *log.per_client_f1) score += f1;
      score /= static_cast<double>(log.per_client_f1->size());
    }
    result.logs.push_back(std::move(log));
    if (config.target_f1 && score >= *config.target_f1) {
      result.rounds_to_target = round;
      result.reached_target = true;
      break;
    }
  }
  result.final_model = std::move(global);
  return result;
}

std::vector<SweepRow> rounds_to_target_sweep(std::span<const ClientDataset> clients,
                                             const FedConfig& base,
                                             std::span<const SweepPoint> grid, int runs,
                                             const FeatureSpace& space) {
  if (!base.target_f1) throw config_invalid("federated.target_f1", "required for a sweep");
  if (runs < 1) throw config_invalid("experiment.runs", "must be >= 1");
  std::vector<SweepRow> rows;
  for (const auto& point : grid) {
    SweepRow row;
    row.point = point;
    row.runs = runs;
    std::vector<int> reached;
    for (int r = 0; r < runs; ++r) {
      FedConfig cfg = base;
      cfg.C = point.C;
      cfg.B = point.B;
      cfg.E = point.E;
      cfg.seed = derive_seed(base.seed, {static_cast<std::uint64_t>(r)});
      auto result = run_federated(clients, cfg, space);
      row.per_run.push_back(result.rounds_to_target);
      if (result.rounds_to_target) {
        reached.push_back(*result.rounds_to_target);
      } else {
        ++row.censored_runs;
      }
    }
    if (!reached.empty()) {
      row.mean_rounds = std::accumulate(reached.begin(), reached.end(), 0.0) /
                        static_cast<double>(reached.size());
      row.min_rounds = *std::min_element(reached.begin(), reached.end());
      row.max_rounds = *std::max_element(reached.begin(), reached.end());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<CrowdPoint> crowdsourcing_curve(std::span<const ClientDataset> clients_ascending,
                                            const FedConfig& config, int runs,
                                            const FeatureSpace& space) {
  if (runs < 1) throw config_invalid("experiment.runs", "must be >= 1");
  for (std::size_t i = 1; i < clients_ascending.size(); ++i) {
    if (clients_ascending[i - 1].n_k() > clients_ascending[i].n_k()) {
      throw ValidationError("ConfigInvalid", "clients must be sorted by ascending training size");
    }
  }
  ExampleList all_test;
  for (const auto& c : clients_ascending) all_test.insert(all_test.end(), c.test.begin(), c.test.end());

  std::vector<CrowdPoint> curve;
  for (std::size_t k = 1; k <= clients_ascending.size(); ++k) {
    auto subset = clients_ascending.subspan(0, k);
    FedConfig cfg = config;
    cfg.K = k;
    cfg.C = 1.0;
    cfg.target_f1.reset();
    std::vector<double> subset_sum(static_cast<std::size_t>(cfg.R_max), 0.0);
    std::vector<double> all_sum(static_cast<std::size_t>(cfg.R_max), 0.0);
    for (int r = 0; r < runs; ++r) {
      cfg.seed = derive_seed(config.seed, {static_cast<std::uint64_t>(r)});
      auto result = run_federated(subset, cfg, space, all_test);
      for (const auto& log : result.logs) {
        subset_sum[static_cast<std::size_t>(log.round - 1)] += log.global_f1_union;
        all_sum[static_cast<std::size_t>(log.round - 1)] += log.holdout_f1.value_or(0.0);
      }
    }
    CrowdPoint point;
    point.k = k;
    point.f1_on_k_users_test = *std::max_element(subset_sum.begin(), subset_sum.end()) / runs;
    point.f1_on_all_users_test = *std::max_element(all_sum.begin(), all_sum.end()) / runs;
    curve.push_back(point);
  }
  return curve;
}

void write_round_log(std::span<const RoundLog> logs, std::ostream& out, bool include_wall_time,
                     std::optional<int> run) {
  for (const auto& log : logs) {
    nlohmann::ordered_json rec;
    if (run) rec["run"] = *run;
    rec["round"] = log.round;
    rec["selected_clients"] = log.selected_clients;
    rec["global_f1_union"] = log.global_f1_union;
    if (log.per_client_f1) {
      nlohmann::ordered_json per = nlohmann::ordered_json::object();
      for (const auto& [id, f1] : *log.per_client_f1) per[std::to_string(id)] = f1;
      rec["per_client_f1"] = std::move(per);
    }
    if (log.holdout_f1) rec["holdout_f1"] = *log.holdout_f1;
    if (include_wall_time) rec["wall_time_ms"] = log.wall_time_ms;
    out << rec.dump() << '\n';
  }
}

std::string format_batch(const std::optional<std::size_t>& batch) {
  return batch ? std::to_string(*batch) : std::string("inf");
}

void write_sweep_csv(std::span<const SweepRow> rows, std::ostream& out) {
  out << "C,B,E,mean_rounds,min_rounds,max_rounds,censored_runs\n";
  for (const auto& row : rows) {
    out << format_double(row.point.C) << ',' << format_batch(row.point.B) << ',' << row.point.E
        << ',' << (row.mean_rounds ? format_double(*row.mean_rounds) : "") << ','
        << (row.min_rounds ? std::to_string(*row.min_rounds) : "") << ','
        << (row.max_rounds ? std::to_string(*row.max_rounds) : "") << ',' << row.censored_runs
        << '\n';
  }
}

void write_crowd_csv(std::span<const CrowdPoint> points, std::ostream& out) {
  out << "k,f1_on_k_users_test,f1_on_all_users_test\n";
  for (const auto& p : points) {
    out << p.k << ',' << format_double(p.f1_on_k_users_test) << ','
        << format_double(p.f1_on_all_users_test) << '\n';
  }
}

}  // namespace fedpkt

// Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and exits
// non-zero when any criterion fails.
//
// Criterion 10 needs the public NoMoAds trace in canonical format; point
// FEDPKT_NOMOADS at it (see configs/nomoads_convert.toml) to enable it.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>

#include "fedpkt/cli.hpp"
#include "fedpkt/dtree.hpp"
#include "fedpkt/experiment.hpp"
#include "fedpkt/federated.hpp"
#include "fedpkt/metrics.hpp"
#include "fedpkt/rng.hpp"
#include "fedpkt/synth.hpp"
#include "fuzz_packets.hpp"

using namespace fedpkt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  enum class Status { pass, fail, skip } status;
  std::string detail;
};

Outcome pass(std::string d) { return {Outcome::Status::pass, std::move(d)}; }
Outcome fail(std::string d) { return {Outcome::Status::fail, std::move(d)}; }
Outcome check(bool ok, std::string d) { return ok ? pass(std::move(d)) : fail(std::move(d)); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// The planted-rule corpus: 5000 packets, "gaid"/"adid" imply positive, 5% label noise.
const std::vector<HttpPacket>& planted_packets() {
  static const auto packets = generate_planted_corpus(PlantedCorpusOptions{});
  return packets;
}

const PreparedData& planted() {
  static const PreparedData data = [] {
    ExperimentSpec spec;
    spec.task = Task::ad;
    return prepare_data(spec, planted_packets());
  }();
  return data;
}

std::vector<ClientDataset> planted_clients(std::size_t k, std::uint64_t seed) {
  SplitSpec split;
  split.k = k;
  split.seed = seed;
  return make_clients(planted().examples, split, planted().vocab.fingerprint());
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// 1. K=1, C=1, E=1, B=inf federation equals centralized full-batch training.
Outcome fedsgd_degeneracy() {
  const auto& d = planted();
  ClientDataset client{0, d.examples, {}, d.vocab.fingerprint()};
  FedConfig cfg;
  cfg.K = 1;
  cfg.C = 1.0;
  cfg.E = 1;
  cfg.B.reset();
  cfg.lambda = 0.0;
  cfg.R_max = 1;
  cfg.seed = 5;
  auto fed = run_federated(std::span(&client, 1), cfg, d.space());
  Hyperparams h;
  h.eta = cfg.eta;
  h.batch_size.reset();
  auto central = train_centralized(d.examples, d.vocab.size(), h, 1);
  double worst = 0.0;
  for (std::size_t i = 0; i < central.weights.size(); ++i) {
    double a = fed.final_model.weights[i], b = central.weights[i];
    double scale = std::max(std::abs(a), std::abs(b));
    if (scale > 0) worst = std::max(worst, std::abs(a - b) / scale);
  }
  return check(worst <= 1e-12, fmt("max relative difference %.3g over %zu weights", worst,
                                   central.weights.size()));
}

// 2. Central finite differences of the hinge loss match the subgradient.
Outcome gradient_check() {
  Rng rng(2);
  const std::size_t dim = 16;
  int points = 0;
  double worst = 0.0;
  while (points < 200) {
    SvmModel m = SvmModel::zeros(dim);
    for (auto& w : m.weights) w = 3.0 * uniform_unit(rng) - 1.5;
    EncodedExample e;
    for (std::uint32_t i = 0; i < dim; ++i) {
      if (uniform_index(rng, 3) == 0) e.indices.push_back(i);
    }
    if (e.indices.empty()) continue;
    e.label = uniform_index(rng, 2) ? 1 : -1;
    if (std::abs(e.label * dot(m.weights, e.indices) - 1.0) < 1e-3) continue;
    auto g = subgradient(m, e);
    std::vector<double> dense(dim, 0.0);
    for (const auto& [i, v] : g) dense[i] = v;
    for (std::size_t i = 0; i < dim; ++i) {
      const double h = 1e-7;
      auto plus = m, minus = m;
      plus.weights[i] += h;
      minus.weights[i] -= h;
      double fd = (hinge_loss(plus, e) - hinge_loss(minus, e)) / (2 * h);
      double err = dense[i] == 0.0 ? std::abs(fd) : std::abs(fd - dense[i]) / std::abs(dense[i]);
      worst = std::max(worst, err);
    }
    ++points;
  }
  return check(worst <= 1e-5, fmt("200 points, max error %.3g", worst));
}

// 3. Weighted averaging: idempotent, order-free, and the hand value [4.0].
Outcome aggregation_properties() {
  std::vector<WeightedModel> hand = {{{{1.0}, 0, 0}, 1}, {{{5.0}, 0, 0}, 3}};
  bool hand_ok = aggregate(hand).weights == std::vector<double>{4.0};

  Rng rng(3);
  bool idempotent = true, invariant = true;
  for (int trial = 0; trial < 200; ++trial) {
    SvmModel m = SvmModel::zeros(8);
    for (auto& w : m.weights) w = uniform_unit(rng) * 2 - 1;
    std::vector<WeightedModel> same;
    for (int i = 0; i < 1 + static_cast<int>(uniform_index(rng, 8)); ++i) {
      same.push_back({m, 1 + uniform_index(rng, 500)});
    }
    idempotent &= aggregate(same).weights == m.weights;

    std::vector<WeightedModel> mixed;
    for (int i = 0; i < 6; ++i) {
      SvmModel x = SvmModel::zeros(8);
      for (auto& w : x.weights) w = uniform_unit(rng) * 2 - 1;
      mixed.push_back({x, 1 + uniform_index(rng, 500)});
    }
    auto expected = aggregate(mixed).weights;
    for (int p = 0; p < 4; ++p) {
      shuffle_in_place(mixed, rng);
      invariant &= aggregate(mixed).weights == expected;
    }
  }
  return check(hand_ok && idempotent && invariant,
               fmt("hand value %s, idempotence %s, permutation invariance %s", hand_ok ? "ok" : "wrong",
                   idempotent ? "ok" : "broken", invariant ? "ok" : "broken"));
}

// 4. Confusion counts and F1 against a pair-enumeration oracle.
Outcome f1_oracle() {
  Rng rng(4);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::size_t n = 1 + uniform_index(rng, 200);
    std::vector<int> preds(n), truths(n);
    for (std::size_t i = 0; i < n; ++i) {
      preds[i] = uniform_index(rng, 2) ? 1 : -1;
      truths[i] = uniform_index(rng, 2) ? 1 : -1;
    }
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (int p : {1, -1}) {
        for (int t : {1, -1}) {
          if (preds[i] != p || truths[i] != t) continue;
          (p == 1 ? (t == 1 ? tp : fp) : (t == 1 ? fn : tn))++;
        }
      }
    }
    double f1 = tp == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
    double precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    double recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    auto r = confusion(preds, truths);
    if (r.tp != tp || r.fp != fp || r.fn != fn || r.tn != tn || r.f1 != f1 ||
        r.precision != precision || r.recall != recall) {
      ++mismatches;
    }
  }
  return check(mismatches == 0, fmt("1000 vectors, %d mismatches", mismatches));
}

// 5. Federation on the planted corpus reaches F1 0.90 within 20 rounds and beats Local.
Outcome planted_federation() {
  const auto& d = planted();
  std::vector<double> fed_f1, local_f1, rounds;
  int censored = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto clients = planted_clients(5, seed);
    FedConfig cfg;
    cfg.K = 5;
    cfg.C = 1.0;
    cfg.B = 10;
    cfg.E = 5;
    cfg.R_max = 20;
    cfg.seed = seed;
    auto result = run_federated(clients, cfg, d.space());
    fed_f1.push_back(result.logs.back().global_f1_union);
    if (auto r = first_round_reaching(result.logs, 0.90)) rounds.push_back(*r);
    else ++censored;

    // Local models get the same local computation: E epochs for each of R rounds.
    Hyperparams h;
    h.batch_size = cfg.B;
    h.seed = seed;
    for (const auto& c : clients) {
      auto m = train_centralized(c.train, d.vocab.size(), h, cfg.E * cfg.R_max);
      local_f1.push_back(evaluate(m, c.test).f1);
    }
  }
  double fed = mean(fed_f1), local = mean(local_f1);
  double mean_rounds = rounds.empty() ? INFINITY : mean(rounds);
  bool ok = fed >= 0.90 && censored == 0 && mean_rounds <= 20 && fed >= local;
  return check(ok, fmt("federated F1 %.4f, mean Local F1 %.4f, mean rounds to 0.90 %.1f, %d censored",
                       fed, local, mean_rounds, censored));
}

// 6. More clients per round, fewer rounds to the target.
Outcome c_trend() {
  const auto& d = planted();
  // K = 20 so the three fractions select 20, 4 and 1 clients per round; with
  // K = 5 both 0.2 and 0.05 would select a single client.
  const std::size_t K = 20;
  std::vector<double> cs = {1.0, 0.2, 0.05};
  std::vector<double> means;
  std::string detail;
  int censored = 0;
  for (double c : cs) {
    std::vector<double> rounds;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      auto clients = planted_clients(K, seed);
      FedConfig cfg;
      cfg.K = K;
      cfg.C = c;
      cfg.B = 10;
      cfg.E = 5;
      cfg.R_max = 200;
      cfg.target_f1 = 0.92;
      cfg.seed = seed;
      auto r = run_federated(clients, cfg, d.space());
      if (r.rounds_to_target) rounds.push_back(*r.rounds_to_target);
      else ++censored;
    }
    means.push_back(rounds.empty() ? INFINITY : mean(rounds));
    detail += fmt("C=%g: %.1f  ", c, means.back());
  }
  detail += fmt("(K=20, target F1 0.92, %d censored)", censored);
  return check(censored == 0 && means[0] < means[1] && means[1] < means[2], detail);
}

// 7. HTTP-Keys never leak values, path segments or domains.
Outcome feature_privacy() {
  Rng rng(7);
  const auto& headers = StandardHeaders::bundled();
  std::size_t leaks = 0, wrong = 0, tokens = 0;
  for (std::size_t n = 0; n < 10000; ++n) {
    auto f = fuzz::random_packet(rng, n);
    auto features = extract_http_keys(f.packet, headers);
    if (features != f.expected) ++wrong;
    for (const auto& feature : features) {
      ++tokens;
      bool leak = feature.token == f.packet.domain;
      for (const auto& v : f.values) leak |= feature.token == v;
      for (const auto& s : f.path_segments) leak |= feature.token == s;
      leaks += leak;
    }
  }
  return check(leaks == 0 && wrong == 0,
               fmt("10000 packets, %zu tokens, %zu leaks, %zu packets with unexpected keys", tokens,
                   leaks, wrong));
}

// 8. SVM -> decision tree transfer keeps F1 and agrees with the teacher.
Outcome knowledge_transfer_check() {
  const auto& d = planted();
  Hyperparams h;
  h.batch_size = 10;
  h.epochs = 5;
  std::vector<double> teacher, student, fidelity;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto r = knowledge_transfer(d.examples, d.vocab.size(), h, {}, seed).report;
    teacher.push_back(r.teacher_f1);
    student.push_back(r.student_f1);
    fidelity.push_back(r.fidelity);
  }
  double t = mean(teacher), s = mean(student), fi = mean(fidelity);
  return check(t >= 0.90 && fi >= 0.95 && std::abs(t - s) <= 0.03,
               fmt("means over 5 seeds: teacher F1 %.4f, student F1 %.4f, fidelity %.4f", t, s, fi));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "fedpkt");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) std::fprintf(stderr, "%s", err.str().c_str());
  return code;
}

// 9. Identical config and seed give byte-identical artifacts for any worker count.
Outcome determinism() {
  auto dir = fs::temp_directory_path() / "fedpkt_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream trace(dir / "planted.jsonl");
    emit_trace(planted_packets(), trace);
  }
  std::ofstream(dir / "exp.toml") << "[experiment]\ndataset = \"planted.jsonl\"\ntask = \"ad\"\n"
                                     "runs = 3\nseed = 21\n[split]\nclients = 8\n"
                                     "[federated]\nC = 0.5\nE = 2\nR_max = 10\ntarget_f1 = 0.93\n"
                                     "[sweep]\nC = 1, 0.25\n";
  const std::vector<std::pair<std::string, std::vector<std::string>>> experiments = {
      {"federate", {"report.json", "round_log.jsonl", "model.bin"}},
      {"train", {"report.json", "model.bin"}},
      {"transfer", {"report.json", "student.json"}},
      {"sweep", {"sweep.csv"}},
      {"crowdsource", {"crowdsourcing.csv"}},
  };
  int compared = 0, differing = 0;
  std::string first_diff;
  for (const auto& [cmd, files] : experiments) {
    std::vector<std::string> outputs;
    for (const char* workers : {"1", "4", "1"}) {
      auto out = dir / (cmd + "_w" + workers + "_" + std::to_string(outputs.size()));
      if (cli({cmd, "-c", (dir / "exp.toml").string(), "--workers", workers, "--set",
               "experiment.output=" + out.string()}) != 0) {
        return fail(cmd + " exited non-zero");
      }
      outputs.push_back(out.string());
    }
    for (const auto& f : files) {
      auto ref = slurp(fs::path(outputs[0]) / f);
      for (std::size_t i = 1; i < outputs.size(); ++i) {
        ++compared;
        if (ref.empty() || slurp(fs::path(outputs[i]) / f) != ref) {
          ++differing;
          if (first_diff.empty()) first_diff = cmd + "/" + f;
        }
      }
    }
  }
  fs::remove_all(dir);
  return check(differing == 0, fmt("%d artifact comparisons across workers 1/4, %d differ%s%s", compared,
                                   differing, first_diff.empty() ? "" : ": ", first_diff.c_str()));
}

// 10. Published dataset statistics and centralized F1, when the trace is available.
Outcome nomoads() {
  const char* path = std::getenv("FEDPKT_NOMOADS");
  if (!path || !*path) return {Outcome::Status::skip, "FEDPKT_NOMOADS not set"};
  auto parsed = parse_trace_file(path, Strictness::skip_invalid);
  const auto& headers = StandardHeaders::bundled();
  auto s = summarize(parsed.packets, [&](const HttpPacket& p) { return extract_http_keys(p, headers); });
  auto within = [](double got, double want, double rel) { return std::abs(got - want) <= rel * want; };
  bool counts = within(s.uri_key_count, 2580, 0.05) && within(s.cookie_key_count, 216, 0.05) &&
                within(s.custom_header_count, 204, 0.05);
  std::string detail = fmt("keys %zu/%zu/%zu", s.uri_key_count, s.cookie_key_count, s.custom_header_count);

  bool f1_ok = true;
  for (auto [task, want] : {std::pair{Task::ad, 0.838}, std::pair{Task::pii, 0.944}}) {
    ExperimentSpec spec;
    spec.task = task;
    spec.family = ModelFamily::centralized;
    spec.runs = 5;
    spec.seed = 1;
    spec.svm.batch_size = 10;
    auto outcome = run_experiment(spec, prepare_data(spec, parsed.packets));
    double f1 = outcome.report.rows.at(0).mean_f1;
    f1_ok &= std::abs(f1 - want) <= 0.05;
    detail += fmt(", %s F1 %.3f", task == Task::ad ? "ad" : "pii", f1);
  }
  return check(counts && f1_ok, detail);
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "FedSGD degeneracy", 1, fedsgd_degeneracy},
      {2, "gradient check", 1, gradient_check},
      {3, "aggregation properties", 1, aggregation_properties},
      {4, "F1 oracle equivalence", 5, f1_oracle},
      {5, "planted-rule federation", 30, planted_federation},
      {6, "C-trend", 120, c_trend},
      {7, "feature privacy", 10, feature_privacy},
      {8, "knowledge transfer", 30, knowledge_transfer_check},
      {9, "determinism", 120, determinism},
      {10, "NoMoAds statistics and F1", 600, nomoads},
  };

  // Corpus generation and featurization are shared setup, not part of any criterion.
  planted();

  int failures = 0;
  for (const auto& c : criteria) {
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (o.status == Outcome::Status::pass && secs > c.limit_s) {
      o = fail(o.detail + fmt("; took %.2f s, limit %.0f s", secs, c.limit_s));
    }
    const char* tag = o.status == Outcome::Status::pass ? "PASS" : o.status == Outcome::Status::skip ? "SKIP" : "FAIL";
    std::printf("criterion %2d %-28s %s  %s (%.2f s)\n", c.id, c.name, tag, o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += o.status == Outcome::Status::fail;
  }
  return failures == 0 ? 0 : 1;
}

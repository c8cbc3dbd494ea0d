#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedpkt/dtree.hpp"
#include "fedpkt/federated.hpp"
#include "fedpkt/features.hpp"
#include "fedpkt/metrics.hpp"
#include "fedpkt/partition.hpp"
#include "fedpkt/svm.hpp"
#include "fedpkt/trace.hpp"

namespace fedpkt {

enum class Task { pii, ad };
enum class ModelFamily { local, centralized, federated, dtree, knowledge_transfer };
enum class ReportFormat { json, csv, markdown_table };

std::string_view to_string(Task task);
std::string_view to_string(ModelFamily family);
std::string_view to_string(ReportFormat format);
std::optional<Task> parse_task(std::string_view text);
std::optional<ModelFamily> parse_model_family(std::string_view text);
std::optional<ReportFormat> parse_report_format(std::string_view text);

struct ExperimentSpec {
  std::string name = "experiment";
  std::filesystem::path dataset;
  Task task = Task::pii;
  FeatureMode features = FeatureMode::http_keys;
  FeaturizerOptions featurizer;
  std::optional<std::filesystem::path> standard_headers;  // bundled list when unset
  Strictness strictness = Strictness::skip_invalid;
  SplitSpec split;
  bool balance_test = false;
  Hyperparams svm;
  int passes = 5;  // centralized and local training
  FedConfig fed;
  std::vector<SweepPoint> sweep;
  TreeParams tree;
  ModelFamily family = ModelFamily::centralized;
  int runs = 5;
  std::uint64_t seed = 0;

  void validate() const;
};

// Encoded, keyless-filtered examples for one task.
struct PreparedData {
  Vocabulary vocab;
  ExampleList examples;
  std::size_t packets_read = 0;
  std::size_t missing_label = 0;
  std::size_t keyless_excluded = 0;
  std::size_t oov_dropped = 0;
  std::vector<ParseWarning> warnings;

  FeatureSpace space() const { return FeatureSpace::of(vocab); }
};

std::optional<bool> task_label(const HttpPacket& packet, Task task);

PreparedData prepare_data(const ExperimentSpec& spec, std::span<const HttpPacket> packets);
PreparedData prepare_data(const ExperimentSpec& spec);  // reads spec.dataset

struct ReportRow {
  std::string trained_on;
  std::string tested_on;
  double mean_f1 = 0.0;
  std::vector<double> per_run_f1;
  EvalReport pooled;  // counts summed over runs

  bool operator==(const ReportRow&) const = default;
};

struct RoundsSummary {
  double target_f1 = 0.0;
  std::optional<double> mean;
  std::optional<int> min;
  std::optional<int> max;
  int censored = 0;
  std::vector<std::optional<int>> per_run;

  bool operator==(const RoundsSummary&) const = default;
};

struct ExperimentReport {
  std::string schema = "fedpkt-report/1";
  std::string name;
  std::string family;
  std::string task;
  std::string features;
  int runs = 0;
  std::uint64_t seed = 0;
  std::vector<ReportRow> rows;
  std::optional<RoundsSummary> rounds;
  std::map<std::string, double> extras;

  const ReportRow* find(std::string_view trained_on, std::string_view tested_on) const;
  bool operator==(const ExperimentReport&) const = default;
};

// Report plus the artifacts of the first run, for export.
struct ExperimentOutcome {
  ExperimentReport report;
  std::vector<std::vector<RoundLog>> round_logs;  // federated: one per run
  std::optional<SvmModel> model;
  std::optional<DecisionTree> tree;
};

std::uint64_t run_seed(std::uint64_t master_seed, int run_index);

ExperimentOutcome run_experiment(const ExperimentSpec& spec, const PreparedData& data);
ExperimentOutcome run_experiment(const ExperimentSpec& spec);

std::string emit_report(const ExperimentReport& report, ReportFormat format);
ExperimentReport parse_report_json(std::string_view text);

}  // namespace fedpkt

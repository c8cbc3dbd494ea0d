#include "fedpkt/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "fedpkt/error.hpp"
#include "fedpkt/rng.hpp"
#include "json.hpp"

namespace fedpkt {

namespace {

template <typename E, std::size_t N>
std::optional<E> parse_enum(std::string_view text, const E (&values)[N]) {
  for (auto v : values) {
    if (to_string(v) == text) return v;
  }
  return std::nullopt;
}

std::string fmt_double(double v, const char* format = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

// Rows in first-seen order, one EvalReport per run.
class RowTable {
 public:
  void add(const std::string& trained_on, const std::string& tested_on, const EvalReport& r) {
    auto key = trained_on + '\x1f' + tested_on;
    auto it = index_.find(key);
    if (it == index_.end()) {
      it = index_.emplace(key, rows_.size()).first;
      ReportRow row;
      row.trained_on = trained_on;
      row.tested_on = tested_on;
      row.pooled = EvalReport::from_counts(0, 0, 0, 0, tested_on, 0);
      rows_.push_back(std::move(row));
    }
    auto& row = rows_[it->second];
    row.per_run_f1.push_back(r.f1);
    row.pooled = pool(row.pooled, r);
  }

  std::vector<ReportRow> finish() {
    for (auto& row : rows_) {
      row.mean_f1 = std::accumulate(row.per_run_f1.begin(), row.per_run_f1.end(), 0.0) /
                    static_cast<double>(row.per_run_f1.size());
    }
    return std::move(rows_);
  }

 private:
  std::vector<ReportRow> rows_;
  std::map<std::string, std::size_t> index_;
};

std::string user_name(int client_id) { return "User " + std::to_string(client_id + 1); }
std::string local_name(int client_id) { return "Local " + std::to_string(client_id + 1); }
constexpr const char* kAllUsers = "All users";

ExampleList union_test(std::span<const ClientDataset> clients) {
  ExampleList all;
  for (const auto& c : clients) all.insert(all.end(), c.test.begin(), c.test.end());
  return all;
}

}  // namespace

std::string_view to_string(Task task) { return task == Task::pii ? "pii" : "ad"; }

std::string_view to_string(ModelFamily family) {
  switch (family) {
    case ModelFamily::local: return "local";
    case ModelFamily::centralized: return "centralized";
    case ModelFamily::federated: return "federated";
    case ModelFamily::dtree: return "dtree";
    case ModelFamily::knowledge_transfer: return "knowledge_transfer";
  }
  return "centralized";
}

std::string_view to_string(ReportFormat format) {
  switch (format) {
    case ReportFormat::json: return "json";
    case ReportFormat::csv: return "csv";
    case ReportFormat::markdown_table: return "markdown_table";
  }
  return "json";
}

std::optional<Task> parse_task(std::string_view text) {
  static constexpr Task all[] = {Task::pii, Task::ad};
  return parse_enum(text, all);
}

std::optional<ModelFamily> parse_model_family(std::string_view text) {
  static constexpr ModelFamily all[] = {ModelFamily::local, ModelFamily::centralized,
                                        ModelFamily::federated, ModelFamily::dtree,
                                        ModelFamily::knowledge_transfer};
  return parse_enum(text, all);
}

std::optional<ReportFormat> parse_report_format(std::string_view text) {
  static constexpr ReportFormat all[] = {ReportFormat::json, ReportFormat::csv,
                                         ReportFormat::markdown_table};
  return parse_enum(text, all);
}

void ExperimentSpec::validate() const {
  if (runs < 1) throw config_invalid("experiment.runs", "must be >= 1");
  if (passes < 0) throw config_invalid("svm.passes", "must be >= 0");
  if (featurizer.min_df < 1) throw config_invalid("features.min_df", "must be >= 1");
  if (!(featurizer.stopword_top_fraction >= 0.0 && featurizer.stopword_top_fraction <= 1.0)) {
    throw config_invalid("features.stopword_top_fraction", "must be in [0, 1]");
  }
  split.validate();
  svm.validate();
  FedConfig fed_check = fed;
  fed_check.K = split.k;
  fed_check.validate();
  if (tree.min_samples_leaf < 1) throw config_invalid("tree.min_samples_leaf", "must be >= 1");
  for (const auto& p : sweep) {
    FedConfig point = fed_check;
    point.C = p.C;
    point.B = p.B;
    point.E = p.E;
    try {
      point.validate();
    } catch (const ValidationError& e) {
      throw config_invalid("sweep", e.what());
    }
  }
}

std::optional<bool> task_label(const HttpPacket& packet, Task task) {
  return task == Task::pii ? packet.label_pii : packet.label_ad;
}

PreparedData prepare_data(const ExperimentSpec& spec, std::span<const HttpPacket> packets) {
  PreparedData data;
  data.packets_read = packets.size();
  auto headers = spec.standard_headers ? StandardHeaders::load(*spec.standard_headers)
                                       : StandardHeaders::bundled();

  std::vector<const HttpPacket*> admitted;
  for (const auto& p : packets) {
    if (!task_label(p, spec.task)) {
      ++data.missing_label;
    } else if (is_keyless(p, headers)) {
      ++data.keyless_excluded;
    } else {
      admitted.push_back(&p);
    }
  }

  std::vector<HttpPacket> corpus;
  corpus.reserve(admitted.size());
  for (auto* p : admitted) corpus.push_back(*p);
  Featurizer featurizer(spec.features, std::move(headers), spec.featurizer);
  featurizer.fit(corpus);

  std::vector<FeatureSet> sets;
  sets.reserve(corpus.size());
  for (const auto& p : corpus) sets.push_back(featurizer.features(p));
  data.vocab = build_vocabulary(sets, spec.features, spec.featurizer.min_df);

  EncodeStats stats;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    data.examples.push_back(
        encode(sets[i], data.vocab, *task_label(corpus[i], spec.task), corpus[i].packet_id, &stats));
  }
  data.oov_dropped = stats.dropped;
  return data;
}

PreparedData prepare_data(const ExperimentSpec& spec) {
  auto parsed = parse_trace_file(spec.dataset, spec.strictness);
  auto data = prepare_data(spec, parsed.packets);
  data.warnings = std::move(parsed.warnings);
  return data;
}

const ReportRow* ExperimentReport::find(std::string_view trained_on,
                                        std::string_view tested_on) const {
  for (const auto& row : rows) {
    if (row.trained_on == trained_on && row.tested_on == tested_on) return &row;
  }
  return nullptr;
}

std::uint64_t run_seed(std::uint64_t master_seed, int run_index) {
  return derive_seed(master_seed, {0x52554e, static_cast<std::uint64_t>(run_index)});
}

ExperimentOutcome run_experiment(const ExperimentSpec& spec, const PreparedData& data) {
  spec.validate();
  if (data.examples.empty()) throw DataError("EmptyData", "no usable packets for this task");
  const auto space = data.space();

  ExperimentOutcome outcome;
  auto& report = outcome.report;
  report.name = spec.name;
  report.family = std::string(to_string(spec.family));
  report.task = std::string(to_string(spec.task));
  report.features = std::string(to_string(spec.features));
  report.runs = spec.runs;
  report.seed = spec.seed;

  RowTable rows;
  std::map<std::string, std::vector<double>> extras;
  std::vector<std::optional<int>> rounds;

  for (int run = 0; run < spec.runs; ++run) {
    const auto seed = run_seed(spec.seed, run);
    Hyperparams hyper = spec.svm;
    hyper.seed = seed;

    switch (spec.family) {
      case ModelFamily::centralized:
      case ModelFamily::dtree: {
        auto [train, test] = train_test_split(data.examples, spec.split.train_frac, seed);
        if (spec.split.balance && has_both_labels(train)) train = balance(train, seed);
        if (spec.balance_test && has_both_labels(test)) test = balance(test, seed + 1);
        if (spec.family == ModelFamily::centralized) {
          auto model = train_centralized(train, space.dimension, hyper, spec.passes, space.fingerprint);
          rows.add("Centralized", kAllUsers, evaluate(model, test, kAllUsers));
          if (run == 0) outcome.model = std::move(model);
        } else {
          auto tree = train_tree(train, space.dimension, spec.tree);
          rows.add("Decision Tree", kAllUsers, evaluate(tree, test, kAllUsers));
          extras["tree_nodes"].push_back(static_cast<double>(tree.node_count()));
          if (run == 0) outcome.tree = std::move(tree);
        }
        break;
      }
      case ModelFamily::local:
      case ModelFamily::federated: {
        SplitSpec split = spec.split;
        split.seed = seed;
        auto clients = make_clients(data.examples, split, space.fingerprint, spec.balance_test);
        for (const auto& c : clients) {
          if (c.train.empty()) continue;
          auto local = train_centralized(c.train, space.dimension, hyper, spec.passes, space.fingerprint);
          rows.add(local_name(c.client_id), user_name(c.client_id),
                   evaluate(local, c.test, user_name(c.client_id)));
        }
        if (spec.family == ModelFamily::federated) {
          FedConfig fed = spec.fed;
          fed.K = clients.size();
          fed.seed = seed;
          auto result = run_federated(clients, fed, space);
          for (const auto& c : clients) {
            rows.add("Federated", user_name(c.client_id),
                     evaluate(result.final_model, c.test, user_name(c.client_id)));
          }
          rows.add("Federated", kAllUsers, evaluate(result.final_model, union_test(clients), kAllUsers));
          rounds.push_back(result.rounds_to_target);
          extras["rounds_run"].push_back(static_cast<double>(result.logs.size()));
          outcome.round_logs.push_back(std::move(result.logs));
          if (run == 0) outcome.model = std::move(result.final_model);
        }
        break;
      }
      case ModelFamily::knowledge_transfer: {
        ExampleList examples = data.examples;
        if (spec.split.balance && has_both_labels(examples)) examples = balance(examples, seed);
        Hyperparams teacher_hyper = hyper;
        teacher_hyper.epochs = std::max(spec.passes, 1);
        auto result = knowledge_transfer(examples, space.dimension, teacher_hyper, spec.tree, seed);
        const auto& r = result.report;
        // Counts are not kept for the transfer slices; rows carry F1 only.
        EvalReport teacher, student, direct;
        teacher.f1 = r.teacher_f1;
        student.f1 = r.student_f1;
        direct.f1 = r.direct_tree_f1;
        rows.add("SVM teacher", "Test slice", teacher);
        rows.add("DT student", "Test slice", student);
        rows.add("DT direct", "Test slice", direct);
        extras["fidelity"].push_back(r.fidelity);
        extras["student_train_fidelity"].push_back(r.student_train_fidelity);
        extras["student_nodes"].push_back(static_cast<double>(r.student_nodes));
        extras["direct_tree_nodes"].push_back(static_cast<double>(r.direct_tree_nodes));
        if (run == 0) {
          outcome.model = std::move(result.teacher);
          outcome.tree = std::move(result.student);
        }
        break;
      }
    }
  }

  report.rows = rows.finish();
  for (const auto& [key, values] : extras) {
    report.extras[key] =
        std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  }
  if (spec.family == ModelFamily::federated && spec.fed.target_f1) {
    RoundsSummary summary;
    summary.target_f1 = *spec.fed.target_f1;
    summary.per_run = rounds;
    std::vector<int> reached;
    for (const auto& r : rounds) {
      if (r) reached.push_back(*r);
      else ++summary.censored;
    }
    if (!reached.empty()) {
      summary.mean = std::accumulate(reached.begin(), reached.end(), 0.0) /
                     static_cast<double>(reached.size());
      summary.min = *std::min_element(reached.begin(), reached.end());
      summary.max = *std::max_element(reached.begin(), reached.end());
    }
    report.rounds = std::move(summary);
  }
  return outcome;
}

ExperimentOutcome run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  return run_experiment(spec, prepare_data(spec));
}

namespace {

using ojson = nlohmann::ordered_json;

ojson to_json(const EvalReport& r) {
  ojson j;
  j["tp"] = r.tp;
  j["fp"] = r.fp;
  j["fn"] = r.fn;
  j["tn"] = r.tn;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["eval_set_name"] = r.eval_set_name;
  j["runs"] = r.runs;
  return j;
}

template <typename T>
ojson opt(const std::optional<T>& v) {
  return v ? ojson(*v) : ojson(nullptr);
}

template <typename T>
std::optional<T> opt_get(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

}  // namespace

std::string emit_report(const ExperimentReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::json: {
      ojson doc;
      doc["schema"] = report.schema;
      doc["name"] = report.name;
      doc["family"] = report.family;
      doc["task"] = report.task;
      doc["features"] = report.features;
      doc["runs"] = report.runs;
      doc["seed"] = report.seed;
      auto rows = ojson::array();
      for (const auto& row : report.rows) {
        ojson r;
        r["trained_on"] = row.trained_on;
        r["tested_on"] = row.tested_on;
        r["mean_f1"] = row.mean_f1;
        r["per_run_f1"] = row.per_run_f1;
        r["pooled"] = to_json(row.pooled);
        rows.push_back(std::move(r));
      }
      doc["rows"] = std::move(rows);
      if (report.rounds) {
        ojson r;
        r["target_f1"] = report.rounds->target_f1;
        r["mean"] = opt(report.rounds->mean);
        r["min"] = opt(report.rounds->min);
        r["max"] = opt(report.rounds->max);
        r["censored"] = report.rounds->censored;
        auto per_run = ojson::array();
        for (const auto& v : report.rounds->per_run) per_run.push_back(opt(v));
        r["per_run"] = std::move(per_run);
        doc["rounds"] = std::move(r);
      } else {
        doc["rounds"] = nullptr;
      }
      ojson extras = ojson::object();
      for (const auto& [k, v] : report.extras) extras[k] = v;
      doc["extras"] = std::move(extras);
      return doc.dump(2) + "\n";
    }
    case ReportFormat::csv: {
      std::ostringstream out;
      out << "trained_on,tested_on,mean_f1,precision,recall,f1,tp,fp,fn,tn,runs\n";
      for (const auto& row : report.rows) {
        const auto& p = row.pooled;
        out << csv_field(row.trained_on) << ',' << csv_field(row.tested_on) << ','
            << fmt_double(row.mean_f1) << ',' << fmt_double(p.precision) << ','
            << fmt_double(p.recall) << ',' << fmt_double(p.f1) << ',' << p.tp << ',' << p.fp
            << ',' << p.fn << ',' << p.tn << ',' << row.per_run_f1.size() << '\n';
      }
      return out.str();
    }
    case ReportFormat::markdown_table: {
      std::ostringstream out;
      out << "| Trained on | Tested on | F1 |\n|---|---|---|\n";
      for (const auto& row : report.rows) {
        out << "| " << row.trained_on << " | " << row.tested_on << " | "
            << fmt_double(row.mean_f1, "%.3f") << " |\n";
      }
      if (report.rounds && report.rounds->mean) {
        out << "\nRounds to F1 " << fmt_double(report.rounds->target_f1, "%.2f") << ": "
            << fmt_double(*report.rounds->mean, "%.1f") << " [" << *report.rounds->min << ", "
            << *report.rounds->max << "]";
        if (report.rounds->censored) out << ", " << report.rounds->censored << " run(s) not converged";
        out << '\n';
      }
      return out.str();
    }
  }
  return {};
}

ExperimentReport parse_report_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("ReportInvalid", e.what());
  }
  if (doc.value("schema", "") != "fedpkt-report/1") {
    throw DataError("ReportInvalid", "unsupported report schema");
  }
  ExperimentReport report;
  try {
    report.schema = doc.at("schema").get<std::string>();
    report.name = doc.at("name").get<std::string>();
    report.family = doc.at("family").get<std::string>();
    report.task = doc.at("task").get<std::string>();
    report.features = doc.at("features").get<std::string>();
    report.runs = doc.at("runs").get<int>();
    report.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& r : doc.at("rows")) {
      ReportRow row;
      row.trained_on = r.at("trained_on").get<std::string>();
      row.tested_on = r.at("tested_on").get<std::string>();
      row.mean_f1 = r.at("mean_f1").get<double>();
      row.per_run_f1 = r.at("per_run_f1").get<std::vector<double>>();
      const auto& p = r.at("pooled");
      row.pooled.tp = p.at("tp").get<std::size_t>();
      row.pooled.fp = p.at("fp").get<std::size_t>();
      row.pooled.fn = p.at("fn").get<std::size_t>();
      row.pooled.tn = p.at("tn").get<std::size_t>();
      row.pooled.precision = p.at("precision").get<double>();
      row.pooled.recall = p.at("recall").get<double>();
      row.pooled.f1 = p.at("f1").get<double>();
      row.pooled.eval_set_name = p.at("eval_set_name").get<std::string>();
      row.pooled.runs = p.at("runs").get<int>();
      report.rows.push_back(std::move(row));
    }
    if (!doc.at("rounds").is_null()) {
      const auto& r = doc.at("rounds");
      RoundsSummary s;
      s.target_f1 = r.at("target_f1").get<double>();
      s.mean = opt_get<double>(r, "mean");
      s.min = opt_get<int>(r, "min");
      s.max = opt_get<int>(r, "max");
      s.censored = r.at("censored").get<int>();
      for (const auto& v : r.at("per_run")) {
        s.per_run.push_back(v.is_null() ? std::nullopt : std::optional<int>(v.get<int>()));
      }
      report.rounds = std::move(s);
    }
    for (const auto& [k, v] : doc.at("extras").items()) report.extras[k] = v.get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("ReportInvalid", e.what());
  }
  return report;
}

}  // namespace fedpkt

#include "fedpkt/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "fedpkt/config.hpp"
#include "fedpkt/convert.hpp"
#include "fedpkt/error.hpp"
#include "fedpkt/experiment.hpp"
#include "fedpkt/io.hpp"
#include "json.hpp"

namespace fedpkt {

namespace {

struct Invocation {
  std::string subcommand;
  std::string config_path;
  std::vector<std::string> overrides;
  bool dry_run = false;
  int workers = 0;
  int verbosity = 0;
};

struct Context {
  const Invocation& inv;
  const Config& config;
  const ExperimentSpec& spec;
  std::filesystem::path output_dir;
  std::ostream& out;
  std::ostream& err;

  void note(const std::string& message) const {
    if (inv.verbosity > 0) err << "fedpkt: " << message << '\n';
  }
  void write(const std::string& name, const std::string& content) const {
    write_file_atomic(output_dir / name, content);
    note("wrote " + (output_dir / name).string());
  }
};

PreparedData load_data(const Context& ctx) {
  if (ctx.spec.dataset.empty()) throw config_invalid("experiment.dataset", "is required");
  auto data = prepare_data(ctx.spec);
  ctx.note(std::to_string(data.packets_read) + " packets read, " +
           std::to_string(data.examples.size()) + " usable, " +
           std::to_string(data.keyless_excluded) + " keyless, " +
           std::to_string(data.missing_label) + " without a " +
           std::string(to_string(ctx.spec.task)) + " label, " +
           std::to_string(data.warnings.size()) + " warning(s)");
  if (ctx.inv.verbosity > 1) {
    for (const auto& w : data.warnings) ctx.err << "  line " << w.line_no << ": " << w.message << '\n';
  }
  return data;
}

std::string model_bytes(const SvmModel& model, const Hyperparams& hyper) {
  std::ostringstream out(std::ios::binary);
  write_model(model, hyper, out);
  return out.str();
}

std::string coefficients_csv(const SvmModel& model, const Vocabulary& vocab) {
  std::ostringstream out;
  write_coefficients_csv(top_coefficients(model, vocab, 10), out);
  return out.str();
}

std::vector<ClientDataset> clients_for(const Context& ctx, const PreparedData& data) {
  SplitSpec split = ctx.spec.split;
  split.seed = ctx.spec.seed;
  return make_clients(data.examples, split, data.vocab.fingerprint(), ctx.spec.balance_test);
}

FedConfig fed_for(const Context& ctx, std::size_t clients) {
  FedConfig fed = ctx.spec.fed;
  fed.K = clients;
  fed.seed = ctx.spec.seed;
  return fed;
}

int cmd_convert(const Context& ctx) {
  auto format = ctx.config.get_string("convert.format", "jsonl");
  auto options = convert_preset(format);
  auto pick = [&](const char* key, std::string& field) {
    if (ctx.config.has(key)) field = ctx.config.get_string(key, field);
  };
  pick("convert.id_field", options.id_field);
  pick("convert.app_field", options.app_field);
  pick("convert.method_field", options.method_field);
  pick("convert.domain_field", options.domain_field);
  pick("convert.uri_field", options.uri_field);
  pick("convert.url_field", options.url_field);
  pick("convert.headers_field", options.headers_field);
  pick("convert.cookie_field", options.cookie_field);
  pick("convert.pii_field", options.pii_field);
  pick("convert.ad_field", options.ad_field);
  pick("convert.ts_field", options.ts_field);
  auto input = ctx.config.get_path("convert.input", "");
  auto output = ctx.config.get_path("convert.output", "");
  if (input.empty()) throw config_invalid("convert.input", "is required");
  if (output.empty()) throw config_invalid("convert.output", "is required");
  if (ctx.inv.dry_run) return kExitOk;

  std::ifstream in(input, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + input.string());
  auto result = convert_raw(in, options, ctx.spec.strictness);
  std::ostringstream trace;
  emit_trace(result.packets, trace);
  write_file_atomic(output, trace.str());
  ctx.out << "converted " << result.packets.size() << " packets (" << result.warnings.size()
          << " skipped) to " << output.string() << '\n';
  return kExitOk;
}

int cmd_summarize(const Context& ctx) {
  if (ctx.spec.dataset.empty()) throw config_invalid("experiment.dataset", "is required");
  auto parsed = parse_trace_file(ctx.spec.dataset, ctx.spec.strictness);
  auto headers = ctx.spec.standard_headers ? StandardHeaders::load(*ctx.spec.standard_headers)
                                           : StandardHeaders::bundled();
  auto summary = summarize(parsed.packets, [&](const HttpPacket& p) {
    return extract_http_keys(p, headers);
  });
  ctx.out << format_summary(summary);

  // Vocabulary sizes of the three feature spaces over the non-keyless packets.
  std::vector<HttpPacket> usable;
  for (const auto& p : parsed.packets) {
    if (!is_keyless(p, headers)) usable.push_back(p);
  }
  ctx.out << "\nfeature space sizes (non-keyless packets)\n";
  for (auto mode : {FeatureMode::http_keys, FeatureMode::recon_words_approx, FeatureMode::all_words}) {
    const FeaturizerOptions& options = ctx.spec.featurizer;
    Featurizer featurizer(mode, headers, options);
    featurizer.fit(usable);
    std::vector<FeatureSet> sets;
    for (const auto& p : usable) sets.push_back(featurizer.features(p));
    ctx.out << to_string(mode) << '\t' << build_vocabulary(sets, mode, options.min_df).size() << '\n';
  }
  if (!parsed.warnings.empty()) ctx.err << "fedpkt: " << parsed.warnings.size() << " record(s) skipped\n";
  return kExitOk;
}

int cmd_featurize(const Context& ctx) {
  auto data = load_data(ctx);
  std::ostringstream vocab;
  data.vocab.write(vocab);
  std::ostringstream encoded;
  for (const auto& e : data.examples) {
    nlohmann::ordered_json rec;
    rec["id"] = e.origin_packet_id;
    rec["label"] = e.label;
    rec["indices"] = e.indices;
    encoded << rec.dump() << '\n';
  }
  ctx.write("vocab.tsv", vocab.str());
  ctx.write("encoded.jsonl", encoded.str());
  ctx.out << data.vocab.size() << " features, " << data.examples.size() << " examples\n";
  return kExitOk;
}

int cmd_split(const Context& ctx) {
  auto data = load_data(ctx);
  auto clients = clients_for(ctx, data);
  std::ostringstream manifest;
  write_manifest(clients, manifest);
  ctx.write("split_manifest.json", manifest.str());
  for (const auto& c : clients) {
    ctx.out << "client " << c.client_id << ": " << c.train.size() << " train, " << c.test.size()
            << " test\n";
  }
  return kExitOk;
}

void write_outcome(const Context& ctx, const PreparedData& data, const ExperimentOutcome& outcome) {
  ctx.write("report.json", emit_report(outcome.report, ReportFormat::json));
  if (outcome.model) {
    Hyperparams hyper = ctx.spec.svm;
    hyper.seed = run_seed(ctx.spec.seed, 0);
    ctx.write("model.bin", model_bytes(*outcome.model, hyper));
    ctx.write("coefficients.csv", coefficients_csv(*outcome.model, data.vocab));
  }
  if (outcome.tree) {
    ctx.write("tree.dot", to_dot(*outcome.tree, &data.vocab));
    ctx.write("tree.json", to_json(*outcome.tree));
  }
  ctx.out << emit_report(outcome.report, ReportFormat::markdown_table);
}

int cmd_train(const Context& ctx) {
  auto family = ctx.spec.family;
  if (family != ModelFamily::centralized && family != ModelFamily::local &&
      family != ModelFamily::dtree) {
    throw config_invalid("experiment.family", "train supports centralized, local and dtree");
  }
  auto data = load_data(ctx);
  write_outcome(ctx, data, run_experiment(ctx.spec, data));
  return kExitOk;
}

int cmd_federate(const Context& ctx) {
  ExperimentSpec spec = ctx.spec;
  spec.family = ModelFamily::federated;
  auto data = load_data(ctx);
  auto outcome = run_experiment(spec, data);
  std::ostringstream log;
  bool wall = ctx.config.get_bool("experiment.log_wall_time", false);
  for (std::size_t run = 0; run < outcome.round_logs.size(); ++run) {
    write_round_log(outcome.round_logs[run], log, wall, static_cast<int>(run));
  }
  ctx.write("round_log.jsonl", log.str());
  write_outcome(ctx, data, outcome);
  return kExitOk;
}

int cmd_sweep(const Context& ctx) {
  if (ctx.spec.sweep.empty()) throw config_invalid("sweep.C", "no sweep grid configured");
  if (!ctx.spec.fed.target_f1) throw config_invalid("federated.target_f1", "required for a sweep");
  auto data = load_data(ctx);
  auto clients = clients_for(ctx, data);
  auto rows = rounds_to_target_sweep(clients, fed_for(ctx, clients.size()), ctx.spec.sweep,
                                     ctx.spec.runs, data.space());
  std::ostringstream csv;
  write_sweep_csv(rows, csv);
  ctx.write("sweep.csv", csv.str());
  ctx.out << csv.str();
  return kExitOk;
}

int cmd_crowdsource(const Context& ctx) {
  auto data = load_data(ctx);
  auto clients = clients_for(ctx, data);
  std::stable_sort(clients.begin(), clients.end(),
                   [](const ClientDataset& a, const ClientDataset& b) { return a.n_k() < b.n_k(); });
  auto curve = crowdsourcing_curve(clients, fed_for(ctx, clients.size()), ctx.spec.runs, data.space());
  std::ostringstream csv;
  write_crowd_csv(curve, csv);
  ctx.write("crowdsourcing.csv", csv.str());
  ctx.out << csv.str();
  return kExitOk;
}

int cmd_transfer(const Context& ctx) {
  ExperimentSpec spec = ctx.spec;
  spec.family = ModelFamily::knowledge_transfer;
  auto data = load_data(ctx);
  auto outcome = run_experiment(spec, data);
  ctx.write("report.json", emit_report(outcome.report, ReportFormat::json));
  if (outcome.tree) {
    ctx.write("student.dot", to_dot(*outcome.tree, &data.vocab));
    ctx.write("student.json", to_json(*outcome.tree));
  }
  ctx.out << emit_report(outcome.report, ReportFormat::markdown_table);
  for (const auto& [k, v] : outcome.report.extras) ctx.out << k << " = " << v << '\n';
  return kExitOk;
}

int cmd_report(const Context& ctx) {
  auto format_name = ctx.config.get_string("experiment.report_format", "markdown_table");
  auto format = parse_report_format(format_name);
  if (!format) throw config_invalid("experiment.report_format", "must be json, csv or markdown_table");
  auto data = load_data(ctx);
  auto outcome = run_experiment(ctx.spec, data);
  auto text = emit_report(outcome.report, *format);
  const char* ext = *format == ReportFormat::json ? "json" : *format == ReportFormat::csv ? "csv" : "md";
  ctx.write(std::string("report.") + ext, text);
  ctx.out << text;
  return kExitOk;
}

int dispatch(const Invocation& inv, std::ostream& out, std::ostream& err) {
  if (!std::filesystem::is_regular_file(inv.config_path)) {
    throw ValidationError("ConfigInvalid", "config file " + inv.config_path + " not found");
  }
  auto config = Config::load(inv.config_path);
  for (const auto& o : inv.overrides) config.apply_override(o);
  if (inv.workers > 0) config.set("experiment.workers", std::to_string(inv.workers));
  auto spec = to_experiment_spec(config);
  Context ctx{inv, config, spec, config.get_path("experiment.output", "out"), out, err};

  if (inv.subcommand == "convert") return cmd_convert(ctx);
  if (inv.dry_run) {
    if (inv.subcommand == "sweep" && spec.sweep.empty()) throw config_invalid("sweep.C", "no sweep grid configured");
    out << "config ok: " << inv.subcommand << ' ' << to_string(spec.family) << " on "
        << spec.dataset.string() << '\n';
    return kExitOk;
  }
  if (inv.subcommand == "summarize") return cmd_summarize(ctx);
  if (inv.subcommand == "featurize") return cmd_featurize(ctx);
  if (inv.subcommand == "split") return cmd_split(ctx);
  if (inv.subcommand == "train") return cmd_train(ctx);
  if (inv.subcommand == "federate") return cmd_federate(ctx);
  if (inv.subcommand == "sweep") return cmd_sweep(ctx);
  if (inv.subcommand == "crowdsource") return cmd_crowdsource(ctx);
  if (inv.subcommand == "transfer") return cmd_transfer(ctx);
  if (inv.subcommand == "report") return cmd_report(ctx);
  throw ValidationError("ConfigInvalid", "unknown subcommand " + inv.subcommand);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Federated HTTP packet classification toolkit", "fedpkt"};
  app.require_subcommand(1);
  const std::vector<std::pair<const char*, const char*>> subcommands = {
      {"convert", "Convert a raw labeled dump into the canonical trace format"},
      {"summarize", "Print dataset statistics"},
      {"featurize", "Build the vocabulary and write encoded examples"},
      {"split", "Create synthetic clients and write the split manifest"},
      {"train", "Train a local, centralized or decision-tree model"},
      {"federate", "Run Federated SVM"},
      {"sweep", "Rounds-to-target over a (C, B, E) grid"},
      {"crowdsource", "F1 as more users join the federation"},
      {"transfer", "SVM to decision-tree knowledge transfer"},
      {"report", "Run the configured experiment and emit its report"},
  };
  // One invocation per subcommand so unparsed subcommands cannot reset shared bindings.
  std::vector<Invocation> invocations(subcommands.size());
  std::vector<CLI::App*> apps;
  for (std::size_t i = 0; i < subcommands.size(); ++i) {
    auto& inv = invocations[i];
    inv.subcommand = subcommands[i].first;
    auto* sub = app.add_subcommand(subcommands[i].first, subcommands[i].second);
    apps.push_back(sub);
    sub->add_option("-c,--config", inv.config_path, "Experiment config file")->required();
    sub->add_option("-s,--set", inv.overrides, "Override a config key (section.key=value)");
    sub->add_flag("--dry-run", inv.dry_run, "Validate the config without touching files");
    sub->add_option("-w,--workers", inv.workers, "Concurrent client updates")->check(CLI::PositiveNumber);
    sub->add_flag("-v,--verbose", inv.verbosity, "More diagnostics on stderr (repeatable)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  std::size_t chosen = 0;
  while (chosen < apps.size() && !apps[chosen]->parsed()) ++chosen;
  try {
    return dispatch(invocations.at(chosen), out, err);
  } catch (const ValidationError& e) {
    err << "fedpkt: error: " << e.kind() << ": " << e.what() << '\n';
    return kExitValidation;
  } catch (const DataError& e) {
    err << "fedpkt: error: " << e.kind() << ": " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "fedpkt: error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace fedpkt

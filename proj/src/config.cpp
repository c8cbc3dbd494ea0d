#include "fedpkt/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <limits>
#include <set>

#include "fedpkt/error.hpp"
#include "fedpkt/io.hpp"

namespace fedpkt {

namespace {

std::string_view trim(std::string_view s) {
  auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

// Drops a trailing '#' comment that is not inside a quoted string.
std::string_view strip_comment(std::string_view s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && quoted) {
      ++i;
    } else if (s[i] == '"') {
      quoted = !quoted;
    } else if (s[i] == '#' && !quoted) {
      return s.substr(0, i);
    }
  }
  return s;
}

std::vector<std::string> split_items(std::string_view s) {
  std::vector<std::string> items;
  bool quoted = false;
  std::string current;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == '\\' && quoted && i + 1 < s.size()) {
      current += c;
      current += s[++i];
    } else if (c == '"') {
      quoted = !quoted;
      current += c;
    } else if (c == ',' && !quoted) {
      items.emplace_back(trim(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (quoted) throw ValidationError("ConfigInvalid", "unterminated string in \"" + std::string(s) + "\"");
  items.emplace_back(trim(current));
  return items;
}

std::string unquote(std::string_view s) {
  if (s.size() < 2 || s.front() != '"' || s.back() != '"') return std::string(s);
  std::string out;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i] == '\\' && i + 2 < s.size()) {
      char n = s[++i];
      out += n == 'n' ? '\n' : n == 't' ? '\t' : n;
    } else {
      out += s[i];
    }
  }
  return out;
}

}  // namespace

const std::vector<std::string>& Config::known_keys() {
  static const std::vector<std::string> keys = {
      "experiment.name", "experiment.dataset", "experiment.task", "experiment.features",
      "experiment.family", "experiment.runs", "experiment.seed", "experiment.output",
      "experiment.strict", "experiment.balance_test", "experiment.workers",
      "experiment.report_format", "experiment.log_wall_time",
      "features.min_df", "features.stopword_top_fraction", "features.standard_headers",
      "split.clients", "split.mode", "split.min_frac", "split.train_frac", "split.balance",
      "svm.eta", "svm.lambda", "svm.batch", "svm.epochs", "svm.passes",
      "federated.C", "federated.B", "federated.E", "federated.R_max", "federated.target_f1",
      "federated.eval_set", "federated.aggregation",
      "sweep.C", "sweep.B", "sweep.E",
      "tree.max_depth", "tree.min_samples_leaf",
      "convert.input", "convert.output", "convert.format", "convert.id_field",
      "convert.app_field", "convert.method_field", "convert.domain_field", "convert.uri_field",
      "convert.url_field", "convert.headers_field", "convert.cookie_field", "convert.pii_field",
      "convert.ad_field", "convert.ts_field"};
  return keys;
}

void Config::set(const std::string& key, std::string value) {
  const auto& known = known_keys();
  if (std::find(known.begin(), known.end(), key) == known.end()) {
    throw ValidationError("ConfigInvalid", key + ": unknown configuration key");
  }
  values_[key] = std::move(value);
}

Config Config::parse(std::string_view text, std::filesystem::path base_dir) {
  Config config;
  config.base_dir_ = std::move(base_dir);
  std::string section;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = trim(strip_comment(text.substr(start, end - start)));
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    auto where = "config line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ValidationError("ConfigInvalid", where + ": bad section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ValidationError("ConfigInvalid", where + ": expected key = value");
    auto key = std::string(trim(line.substr(0, eq)));
    auto value = std::string(trim(line.substr(eq + 1)));
    if (key.empty()) throw ValidationError("ConfigInvalid", where + ": empty key");
    split_items(value);  // rejects unterminated strings early
    config.set(section.empty() ? key : section + "." + key, std::move(value));
  }
  return config;
}

Config Config::load(const std::filesystem::path& path) {
  auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return parse(read_text_file(path), base);
}

void Config::apply_override(std::string_view assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ValidationError("ConfigInvalid", "override \"" + std::string(assignment) + "\" is not key=value");
  }
  set(std::string(trim(assignment.substr(0, eq))), std::string(trim(assignment.substr(eq + 1))));
}

std::optional<std::string> Config::raw(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  auto v = raw(key);
  return v ? unquote(*v) : fallback;
}

double Config::get_double(const std::string& key, double fallback) const {
  auto v = raw(key);
  if (!v) return fallback;
  auto text = unquote(*v);
  if (text == "inf") return std::numeric_limits<double>::infinity();
  char* end = nullptr;
  errno = 0;
  double d = std::strtod(text.c_str(), &end);
  if (text.empty() || *end != '\0' || errno == ERANGE) throw config_invalid(key, "expected a number, got \"" + text + "\"");
  return d;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
  auto v = raw(key);
  if (!v) return fallback;
  auto text = unquote(*v);
  char* end = nullptr;
  errno = 0;
  long long n = std::strtoll(text.c_str(), &end, 10);
  if (text.empty() || *end != '\0' || errno == ERANGE) throw config_invalid(key, "expected an integer, got \"" + text + "\"");
  return n;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  auto v = raw(key);
  if (!v) return fallback;
  auto text = unquote(*v);
  char* end = nullptr;
  errno = 0;
  unsigned long long n = std::strtoull(text.c_str(), &end, 10);
  if (text.empty() || text.front() == '-' || *end != '\0' || errno == ERANGE) {
    throw config_invalid(key, "expected an unsigned integer, got \"" + text + "\"");
  }
  return n;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto v = raw(key);
  if (!v) return fallback;
  auto text = unquote(*v);
  if (text == "true") return true;
  if (text == "false") return false;
  throw config_invalid(key, "expected true or false, got \"" + text + "\"");
}

std::optional<std::size_t> Config::get_batch(const std::string& key,
                                             std::optional<std::size_t> fallback) const {
  auto v = raw(key);
  if (!v) return fallback;
  if (unquote(*v) == "inf") return std::nullopt;
  auto n = get_int(key, 0);
  if (n < 1) throw config_invalid(key, "must be a positive integer or inf");
  return static_cast<std::size_t>(n);
}

std::optional<double> Config::get_optional_double(const std::string& key) const {
  auto v = raw(key);
  if (!v || unquote(*v) == "none") return std::nullopt;
  return get_double(key, 0.0);
}

std::vector<std::string> Config::get_list(const std::string& key) const {
  auto v = raw(key);
  if (!v) return {};
  std::vector<std::string> out;
  for (const auto& item : split_items(*v)) out.push_back(unquote(item));
  return out;
}

std::filesystem::path Config::get_path(const std::string& key, const std::string& fallback) const {
  std::filesystem::path p = get_string(key, fallback);
  if (p.empty() || p.is_absolute()) return p;
  return base_dir_ / p;
}

ExperimentSpec to_experiment_spec(const Config& c) {
  ExperimentSpec spec;
  spec.name = c.get_string("experiment.name", spec.name);
  spec.dataset = c.get_path("experiment.dataset", "");

  auto task = c.get_string("experiment.task", "pii");
  if (auto t = parse_task(task)) spec.task = *t;
  else throw config_invalid("experiment.task", "must be pii or ad, got \"" + task + "\"");

  auto features = c.get_string("experiment.features", "http_keys");
  if (auto m = parse_feature_mode(features)) spec.features = *m;
  else throw config_invalid("experiment.features", "must be http_keys, all_words or recon_words_approx");

  auto family = c.get_string("experiment.family", "centralized");
  if (auto f = parse_model_family(family)) spec.family = *f;
  else throw config_invalid("experiment.family", "unknown model family \"" + family + "\"");

  spec.runs = static_cast<int>(c.get_int("experiment.runs", spec.runs));
  spec.seed = c.get_u64("experiment.seed", spec.seed);
  if (const char* env = std::getenv("FEDPKT_SEED"); env && *env) {
    char* end = nullptr;
    errno = 0;
    auto seed = std::strtoull(env, &end, 10);
    if (*end != '\0' || errno == ERANGE || env[0] == '-') {
      throw config_invalid("FEDPKT_SEED", "expected an unsigned integer");
    }
    spec.seed = seed;
  }
  spec.strictness = c.get_bool("experiment.strict", false) ? Strictness::strict : Strictness::skip_invalid;
  spec.balance_test = c.get_bool("experiment.balance_test", false);

  auto min_df = c.get_int("features.min_df", 1);
  if (min_df < 1) throw config_invalid("features.min_df", "must be >= 1");
  spec.featurizer.min_df = static_cast<std::size_t>(min_df);
  spec.featurizer.stopword_top_fraction =
      c.get_double("features.stopword_top_fraction", spec.featurizer.stopword_top_fraction);
  if (c.has("features.standard_headers")) spec.standard_headers = c.get_path("features.standard_headers", "");

  auto clients = c.get_int("split.clients", 1);
  if (clients < 1) throw config_invalid("split.clients", "must be >= 1");
  spec.split.k = static_cast<std::size_t>(clients);
  auto mode = c.get_string("split.mode", "even");
  if (mode == "even") spec.split.mode = SplitMode::even;
  else if (mode == "uneven") spec.split.mode = SplitMode::uneven;
  else throw config_invalid("split.mode", "must be even or uneven");
  spec.split.min_frac = c.get_double("split.min_frac", spec.split.min_frac);
  spec.split.train_frac = c.get_double("split.train_frac", spec.split.train_frac);
  spec.split.balance = c.get_bool("split.balance", spec.split.balance);
  spec.split.seed = spec.seed;

  spec.svm.eta = c.get_double("svm.eta", spec.svm.eta);
  spec.svm.lambda = c.get_double("svm.lambda", spec.svm.lambda);
  spec.svm.batch_size = c.get_batch("svm.batch", std::size_t{10});
  spec.svm.epochs = static_cast<int>(c.get_int("svm.epochs", 1));
  spec.passes = static_cast<int>(c.get_int("svm.passes", spec.passes));

  spec.fed.K = spec.split.k;
  spec.fed.C = c.get_double("federated.C", 1.0);
  spec.fed.B = c.get_batch("federated.B", std::size_t{10});
  spec.fed.E = static_cast<int>(c.get_int("federated.E", 1));
  spec.fed.R_max = static_cast<int>(c.get_int("federated.R_max", 800));
  spec.fed.target_f1 = c.get_optional_double("federated.target_f1");
  spec.fed.eta = spec.svm.eta;
  spec.fed.lambda = spec.svm.lambda;
  spec.fed.seed = spec.seed;
  auto workers = c.get_int("experiment.workers", 1);
  if (workers < 1) throw config_invalid("experiment.workers", "must be >= 1");
  spec.fed.workers = static_cast<std::size_t>(workers);
  auto eval_set = c.get_string("federated.eval_set", "union_test");
  if (eval_set == "union_test") spec.fed.eval_set = EvalSet::union_test;
  else if (eval_set == "per_client_test") spec.fed.eval_set = EvalSet::per_client_test;
  else if (eval_set == "both") spec.fed.eval_set = EvalSet::both;
  else throw config_invalid("federated.eval_set", "must be union_test, per_client_test or both");
  auto aggregation = c.get_string("federated.aggregation", "participants");
  if (aggregation == "participants") spec.fed.aggregation = Aggregation::participants;
  else if (aggregation == "all_clients") spec.fed.aggregation = Aggregation::all_clients;
  else throw config_invalid("federated.aggregation", "must be participants or all_clients");

  if (c.has("sweep.C") || c.has("sweep.B") || c.has("sweep.E")) {
    std::vector<double> cs;
    for (const auto& s : c.get_list("sweep.C")) {
      Config one;
      one.set("federated.C", s);
      cs.push_back(one.get_double("federated.C", 0));
    }
    if (cs.empty()) cs.push_back(spec.fed.C);
    std::vector<std::optional<std::size_t>> bs;
    for (const auto& s : c.get_list("sweep.B")) {
      Config one;
      one.set("federated.B", s);
      bs.push_back(one.get_batch("federated.B", std::nullopt));
    }
    if (bs.empty()) bs.push_back(spec.fed.B);
    std::vector<int> es;
    for (const auto& s : c.get_list("sweep.E")) {
      Config one;
      one.set("federated.E", s);
      es.push_back(static_cast<int>(one.get_int("federated.E", 1)));
    }
    if (es.empty()) es.push_back(spec.fed.E);
    for (auto cval : cs) {
      for (const auto& b : bs) {
        for (auto e : es) spec.sweep.push_back({cval, b, e});
      }
    }
  }

  auto depth = c.get_string("tree.max_depth", "inf");
  if (depth != "inf") {
    auto d = c.get_int("tree.max_depth", 0);
    if (d < 0) throw config_invalid("tree.max_depth", "must be >= 0 or inf");
    spec.tree.max_depth = static_cast<std::size_t>(d);
  }
  auto leaf = c.get_int("tree.min_samples_leaf", 1);
  if (leaf < 1) throw config_invalid("tree.min_samples_leaf", "must be >= 1");
  spec.tree.min_samples_leaf = static_cast<std::size_t>(leaf);

  spec.validate();
  return spec;
}

}  // namespace fedpkt

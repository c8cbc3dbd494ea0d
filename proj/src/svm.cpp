#include "fedpkt/svm.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include "fedpkt/error.hpp"
#include "fedpkt/rng.hpp"

namespace fedpkt {

namespace {

void check_dimension(const SvmModel& model, const EncodedExample& example) {
  if (!example.indices.empty() && example.indices.back() >= model.dimension()) {
    throw ValidationError("DimensionMismatch",
                          "feature index " + std::to_string(example.indices.back()) +
                              " outside model dimension " + std::to_string(model.dimension()));
  }
}

void check_dimension(const SvmModel& model, std::span<const EncodedExample> examples) {
  for (const auto& e : examples) check_dimension(model, e);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw DataError("ModelInvalid", "truncated model file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

constexpr char kModelMagic[8] = {'F', 'P', 'K', 'T', 'S', 'V', 'M', '1'};

}  // namespace

void Hyperparams::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw config_invalid("svm.eta", "must be > 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw config_invalid("svm.lambda", "must be >= 0");
  if (batch_size && *batch_size == 0) throw config_invalid("svm.batch", "must be positive or inf");
  if (epochs < 1) throw config_invalid("svm.epochs", "must be >= 1");
}

double dot(std::span<const double> weights, std::span<const std::uint32_t> indices) {
  double s = 0.0;
  for (auto i : indices) s += weights[i];
  return s;
}

double hinge_loss(const SvmModel& model, const EncodedExample& example) {
  check_dimension(model, example);
  return std::max(0.0, 1.0 - example.label * dot(model.weights, example.indices));
}

SparseVector subgradient(const SvmModel& model, const EncodedExample& example) {
  check_dimension(model, example);
  SparseVector g;
  if (example.label * dot(model.weights, example.indices) < 1.0) {
    g.reserve(example.indices.size());
    for (auto i : example.indices) g.emplace_back(i, -static_cast<double>(example.label));
  }
  return g;
}

SvmModel client_update(const SvmModel& model, std::span<const EncodedExample> examples,
                       const Hyperparams& hyper) {
  hyper.validate();
  if (examples.empty()) throw DataError("EmptyData", "client update without examples");
  check_dimension(model, examples);

  SvmModel out = model;
  auto& w = out.weights;
  const std::size_t n = examples.size();
  const std::size_t batch = hyper.batch_size ? std::min(*hyper.batch_size, n) : n;
  const double shrink = 1.0 - 2.0 * hyper.eta * hyper.lambda;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Per-coordinate sums of y over margin violators; integer valued, so the
  // accumulation order never changes the result.
  std::vector<double> delta(w.size(), 0.0);
  std::vector<std::uint32_t> touched;
  std::vector<char> is_touched(w.size(), 0);
  Rng rng(derive_seed(hyper.seed, {0x5e1f}));

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    shuffle_in_place(order, rng);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(start + batch, n);
      for (std::size_t j = start; j < end; ++j) {
        const auto& ex = examples[order[j]];
        if (ex.label * dot(w, ex.indices) < 1.0) {
          for (auto i : ex.indices) {
            delta[i] += ex.label;
            if (!is_touched[i]) {
              is_touched[i] = 1;
              touched.push_back(i);
            }
          }
        }
      }
      const double step = hyper.eta / static_cast<double>(end - start);
      for (auto i : touched) {
        w[i] += step * delta[i];
        delta[i] = 0.0;
        is_touched[i] = 0;
      }
      touched.clear();
      if (hyper.lambda > 0.0) {
        for (auto& v : w) v *= shrink;
      }
    }
  }
  for (double v : w) {
    if (!std::isfinite(v)) throw DataError("NonFinite", "weights diverged; lower svm.eta or svm.lambda");
  }
  return out;
}

SvmModel train_centralized(std::span<const EncodedExample> examples, std::size_t dimension,
                           const Hyperparams& hyper, int passes, std::uint64_t vocab_fingerprint) {
  if (examples.empty()) throw DataError("EmptyData", "no training examples");
  if (passes < 0) throw config_invalid("svm.passes", "must be >= 0");
  auto model = SvmModel::zeros(dimension, vocab_fingerprint);
  check_dimension(model, examples);
  if (passes == 0) return model;
  Hyperparams h = hyper;
  h.epochs = passes;
  model = client_update(model, examples, h);
  model.trained_rounds = 1;
  return model;
}

int predict(const SvmModel& model, std::span<const std::uint32_t> indices) {
  if (!indices.empty() && indices.back() >= model.dimension()) {
    throw ValidationError("DimensionMismatch", "feature index outside model dimension");
  }
  return dot(model.weights, indices) > 0.0 ? 1 : -1;
}

EvalReport evaluate(const SvmModel& model, std::span<const EncodedExample> examples,
                    std::string eval_set_name) {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (const auto& e : examples) {
    bool pred = predict(model, e) > 0;
    bool truth = e.label > 0;
    if (pred && truth) ++tp;
    else if (pred) ++fp;
    else if (truth) ++fn;
    else ++tn;
  }
  return EvalReport::from_counts(tp, fp, fn, tn, std::move(eval_set_name));
}

Coefficients top_coefficients(const SvmModel& model, const Vocabulary& vocab, std::size_t k) {
  if (model.dimension() != vocab.size()) {
    throw ValidationError("DimensionMismatch", "model and vocabulary sizes differ");
  }
  std::vector<std::uint32_t> pos, neg;
  for (std::uint32_t i = 0; i < model.dimension(); ++i) {
    if (model.weights[i] > 0) pos.push_back(i);
    if (model.weights[i] < 0) neg.push_back(i);
  }
  auto by_magnitude = [&](std::uint32_t a, std::uint32_t b) {
    double ma = std::abs(model.weights[a]), mb = std::abs(model.weights[b]);
    if (ma != mb) return ma > mb;
    return a < b;  // index order is feature order
  };
  std::sort(pos.begin(), pos.end(), by_magnitude);
  std::sort(neg.begin(), neg.end(), by_magnitude);
  Coefficients c;
  for (std::size_t i = 0; i < std::min(k, pos.size()); ++i) {
    c.positive.emplace_back(vocab.feature(pos[i]), model.weights[pos[i]]);
  }
  for (std::size_t i = 0; i < std::min(k, neg.size()); ++i) {
    c.negative.emplace_back(vocab.feature(neg[i]), model.weights[neg[i]]);
  }
  return c;
}

void write_coefficients_csv(const Coefficients& coefficients, std::ostream& out) {
  auto quote = [](const std::string& s) {
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  out << "sign,rank,kind,token,weight\n";
  auto rows = [&](const auto& list, const char* sign) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", list[i].second);
      out << sign << ',' << i + 1 << ',' << to_string(list[i].first.kind) << ','
          << quote(list[i].first.token) << ',' << buf << '\n';
    }
  };
  rows(coefficients.positive, "positive");
  rows(coefficients.negative, "negative");
}

void write_model(const SvmModel& model, const Hyperparams& hyper, std::ostream& out) {
  out.write(kModelMagic, sizeof kModelMagic);
  put_u64(out, model.vocab_fingerprint);
  put_f64(out, hyper.eta);
  put_f64(out, hyper.lambda);
  put_u64(out, hyper.batch_size.value_or(0));
  put_u64(out, static_cast<std::uint64_t>(hyper.epochs));
  put_u64(out, hyper.seed);
  put_u64(out, static_cast<std::uint64_t>(model.trained_rounds));
  put_u64(out, model.dimension());
  for (double v : model.weights) put_f64(out, v);
}

std::pair<SvmModel, Hyperparams> read_model(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || !std::equal(magic, magic + 8, kModelMagic)) {
    throw DataError("ModelInvalid", "not a fedpkt model file");
  }
  SvmModel model;
  Hyperparams hyper;
  model.vocab_fingerprint = get_u64(in);
  hyper.eta = get_f64(in);
  hyper.lambda = get_f64(in);
  if (auto b = get_u64(in); b != 0) hyper.batch_size = b;
  hyper.epochs = static_cast<int>(get_u64(in));
  hyper.seed = get_u64(in);
  model.trained_rounds = static_cast<int>(get_u64(in));
  auto dim = get_u64(in);
  if (dim > (1ULL << 32)) throw DataError("ModelInvalid", "implausible model dimension");
  model.weights.resize(dim);
  for (auto& v : model.weights) v = get_f64(in);
  return {std::move(model), hyper};
}

}  // namespace fedpkt

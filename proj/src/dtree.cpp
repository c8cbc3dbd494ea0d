#include "fedpkt/dtree.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fedpkt/error.hpp"
#include "fedpkt/partition.hpp"
#include "fedpkt/rng.hpp"
#include "json.hpp"

namespace fedpkt {

namespace {

double gini(double pos, double neg) {
  double n = pos + neg;
  if (n == 0) return 0.0;
  double p = pos / n, q = neg / n;
  return 1.0 - p * p - q * q;
}

class TreeBuilder {
 public:
  TreeBuilder(std::span<const EncodedExample> examples, std::size_t dimension,
              const TreeParams& params)
      : examples_(examples), params_(params), pos_(dimension, 0), neg_(dimension, 0) {}

  DecisionTree build() {
    std::vector<std::uint32_t> all(examples_.size());
    for (std::uint32_t i = 0; i < all.size(); ++i) all[i] = i;
    tree_.params = params_;
    tree_.root = grow(all, 0);
    return std::move(tree_);
  }

 private:
  int grow(const std::vector<std::uint32_t>& samples, std::size_t depth) {
    std::size_t pos_total = 0;
    for (auto s : samples) pos_total += examples_[s].label > 0;
    const std::size_t neg_total = samples.size() - pos_total;

    int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({});
    tree_.nodes[id].support = samples.size();
    tree_.nodes[id].label = pos_total > neg_total ? 1 : -1;

    bool depth_left = !params_.max_depth || depth < *params_.max_depth;
    if (pos_total == 0 || neg_total == 0 || !depth_left) return id;

    auto split = best_split(samples, pos_total, neg_total);
    if (!split) return id;

    std::vector<std::uint32_t> left, right;
    for (auto s : samples) {
      const auto& idx = examples_[s].indices;
      (std::binary_search(idx.begin(), idx.end(), *split) ? right : left).push_back(s);
    }
    int l = grow(left, depth + 1);
    int r = grow(right, depth + 1);
    auto& node = tree_.nodes[id];
    node.is_leaf = false;
    node.feature_index = *split;
    node.left = l;
    node.right = r;
    return id;
  }

  std::optional<std::uint32_t> best_split(const std::vector<std::uint32_t>& samples,
                                          std::size_t pos_total, std::size_t neg_total) {
    touched_.clear();
    for (auto s : samples) {
      const auto& ex = examples_[s];
      for (auto f : ex.indices) {
        if (pos_[f] == 0 && neg_[f] == 0) touched_.push_back(f);
        (ex.label > 0 ? pos_[f] : neg_[f])++;
      }
    }
    std::sort(touched_.begin(), touched_.end());

    const double n = static_cast<double>(samples.size());
    const double parent = gini(static_cast<double>(pos_total), static_cast<double>(neg_total));
    std::optional<std::uint32_t> best;
    double best_gain = -1.0;
    for (auto f : touched_) {
      const std::size_t rp = pos_[f], rn = neg_[f];
      const std::size_t right = rp + rn, left = samples.size() - right;
      pos_[f] = neg_[f] = 0;
      if (left < params_.min_samples_leaf || right < params_.min_samples_leaf || left == 0) continue;
      const double lp = static_cast<double>(pos_total - rp), ln = static_cast<double>(neg_total - rn);
      const double gain = parent - (static_cast<double>(left) / n) * gini(lp, ln) -
                          (static_cast<double>(right) / n) *
                              gini(static_cast<double>(rp), static_cast<double>(rn));
      if (gain > best_gain) {
        best_gain = gain;
        best = f;
      }
    }
    return best;
  }

  std::span<const EncodedExample> examples_;
  TreeParams params_;
  std::vector<std::size_t> pos_, neg_;
  std::vector<std::uint32_t> touched_;
  DecisionTree tree_;
};

std::size_t depth_from(const DecisionTree& tree, int id) {
  const auto& node = tree.nodes[static_cast<std::size_t>(id)];
  if (node.is_leaf) return 0;
  return 1 + std::max(depth_from(tree, node.left), depth_from(tree, node.right));
}

double agreement(std::span<const int> a, std::span<const int> b) {
  if (a.empty()) return 0.0;
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
  return static_cast<double>(same) / static_cast<double>(a.size());
}

}  // namespace

std::size_t DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  return depth_from(*this, root);
}

DecisionTree train_tree(std::span<const EncodedExample> examples, std::size_t dimension,
                        const TreeParams& params) {
  if (examples.empty()) throw DataError("EmptyData", "no examples to grow a tree from");
  if (params.min_samples_leaf < 1) throw config_invalid("tree.min_samples_leaf", "must be >= 1");
  for (const auto& e : examples) {
    if (!e.indices.empty() && e.indices.back() >= dimension) {
      throw ValidationError("DimensionMismatch", "feature index outside tree dimension");
    }
  }
  return TreeBuilder(examples, dimension, params).build();
}

int predict_tree(const DecisionTree& tree, std::span<const std::uint32_t> indices) {
  int id = tree.root;
  while (true) {
    const auto& node = tree.nodes.at(static_cast<std::size_t>(id));
    if (node.is_leaf) return node.label;
    bool present = std::binary_search(indices.begin(), indices.end(), node.feature_index);
    id = present ? node.right : node.left;
  }
}

EvalReport evaluate(const DecisionTree& tree, std::span<const EncodedExample> examples,
                    std::string eval_set_name) {
  std::vector<int> preds, truths;
  preds.reserve(examples.size());
  for (const auto& e : examples) {
    preds.push_back(predict_tree(tree, e));
    truths.push_back(e.label);
  }
  if (preds.empty()) return EvalReport::from_counts(0, 0, 0, 0, std::move(eval_set_name));
  return confusion(preds, truths, std::move(eval_set_name));
}

TransferResult distill(const SvmModel& teacher, std::span<const EncodedExample> student_slice,
                       std::span<const EncodedExample> test_slice, const TreeParams& params) {
  if (student_slice.empty() || test_slice.empty()) {
    throw DataError("EmptyData", "knowledge transfer needs student and test examples");
  }
  ExampleList relabeled(student_slice.begin(), student_slice.end());
  for (auto& e : relabeled) e.label = predict(teacher, e);

  TransferResult result;
  result.teacher = teacher;
  result.student = train_tree(relabeled, teacher.dimension(), params);
  auto direct = train_tree(student_slice, teacher.dimension(), params);

  std::vector<int> teacher_preds, student_preds;
  for (const auto& e : test_slice) {
    teacher_preds.push_back(predict(teacher, e));
    student_preds.push_back(predict_tree(result.student, e));
  }
  std::vector<int> teacher_train, student_train;
  for (const auto& e : relabeled) {
    teacher_train.push_back(e.label);
    student_train.push_back(predict_tree(result.student, e));
  }

  auto& r = result.report;
  r.teacher_f1 = evaluate(teacher, test_slice).f1;
  r.student_f1 = evaluate(result.student, test_slice).f1;
  r.fidelity = agreement(teacher_preds, student_preds);
  r.student_train_fidelity = agreement(teacher_train, student_train);
  r.student_nodes = result.student.node_count();
  r.direct_tree_nodes = direct.node_count();
  r.direct_tree_f1 = evaluate(direct, test_slice).f1;
  return result;
}

TransferResult knowledge_transfer(std::span<const EncodedExample> examples, std::size_t dimension,
                                  const Hyperparams& svm_hyper, const TreeParams& tree_params,
                                  std::uint64_t seed) {
  if (examples.size() < 10) throw DataError("EmptyData", "knowledge transfer needs >= 10 examples");
  if (!has_both_labels(examples)) throw DataError("SingleClass", "knowledge transfer needs both labels");
  ExampleList all(examples.begin(), examples.end());
  Rng rng(derive_seed(seed, {0x7ea}));
  shuffle_in_place(all, rng);
  const auto n = static_cast<double>(all.size());
  const auto n_teacher = static_cast<std::size_t>(std::llround(0.4 * n));
  const auto n_student = static_cast<std::size_t>(std::llround(0.4 * n));
  std::span<const EncodedExample> view(all);
  auto teacher_slice = view.subspan(0, n_teacher);
  auto student_slice = view.subspan(n_teacher, n_student);
  auto test_slice = view.subspan(n_teacher + n_student);

  Hyperparams hyper = svm_hyper;
  hyper.seed = derive_seed(seed, {0x7eac4e7});
  auto teacher = train_centralized(teacher_slice, dimension, hyper, hyper.epochs);
  return distill(teacher, student_slice, test_slice, tree_params);
}

std::string to_dot(const DecisionTree& tree, const Vocabulary* vocab) {
  std::ostringstream out;
  out << "digraph tree {\n  node [shape=box];\n";
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& node = tree.nodes[i];
    out << "  n" << i << " [label=\"";
    if (node.is_leaf) {
      out << (node.label > 0 ? "positive" : "negative") << "\\nsamples=" << node.support;
    } else {
      std::string name = vocab && node.feature_index < vocab->size()
                             ? to_string(vocab->feature(node.feature_index))
                             : "f" + std::to_string(node.feature_index);
      for (char c : name) {
        if (c == '"' || c == '\\') out << '\\';
        out << c;
      }
      out << "\\nsamples=" << node.support;
    }
    out << "\"];\n";
    if (!node.is_leaf) {
      out << "  n" << i << " -> n" << node.left << " [label=\"absent\"];\n";
      out << "  n" << i << " -> n" << node.right << " [label=\"present\"];\n";
    }
  }
  out << "}\n";
  return out.str();
}

std::string to_json(const DecisionTree& tree) {
  nlohmann::ordered_json doc;
  doc["root"] = tree.root;
  doc["max_depth"] = tree.params.max_depth ? nlohmann::ordered_json(*tree.params.max_depth)
                                           : nlohmann::ordered_json(nullptr);
  doc["min_samples_leaf"] = tree.params.min_samples_leaf;
  auto nodes = nlohmann::ordered_json::array();
  for (const auto& node : tree.nodes) {
    nlohmann::ordered_json n;
    if (node.is_leaf) {
      n["label"] = node.label;
    } else {
      n["feature"] = node.feature_index;
      n["left"] = node.left;
      n["right"] = node.right;
    }
    n["support"] = node.support;
    nodes.push_back(std::move(n));
  }
  doc["nodes"] = std::move(nodes);
  return doc.dump() + "\n";
}

}  // namespace fedpkt

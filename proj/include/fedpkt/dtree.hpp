#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedpkt/features.hpp"
#include "fedpkt/metrics.hpp"
#include "fedpkt/svm.hpp"

namespace fedpkt {

struct TreeParams {
  std::optional<std::size_t> max_depth;  // nullopt: unbounded
  std::size_t min_samples_leaf = 1;
};

// Binary split on one multi-hot feature: absent goes left, present goes right.
struct TreeNode {
  bool is_leaf = true;
  std::uint32_t feature_index = 0;
  int left = -1;
  int right = -1;
  int label = -1;           // leaves only
  std::size_t support = 0;  // training samples that reached the node

  bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;
  int root = 0;
  TreeParams params;

  std::size_t node_count() const { return nodes.size(); }
  std::size_t depth() const;
};

// Greedy CART with Gini impurity. Stops at max_depth, pure nodes, or when no
// split leaves min_samples_leaf on both sides. Zero-gain splits are still
// taken while a node is impure, so an unbounded tree separates any training
// set without duplicate feature vectors of opposite labels. Equal gains go to
// the lowest feature index; leaf label is the majority with ties to -1.
DecisionTree train_tree(std::span<const EncodedExample> examples, std::size_t dimension,
                        const TreeParams& params);

int predict_tree(const DecisionTree& tree, std::span<const std::uint32_t> indices);
inline int predict_tree(const DecisionTree& tree, const EncodedExample& example) {
  return predict_tree(tree, example.indices);
}

EvalReport evaluate(const DecisionTree& tree, std::span<const EncodedExample> examples,
                    std::string eval_set_name = {});

struct TransferReport {
  double teacher_f1 = 0.0;
  double student_f1 = 0.0;
  double fidelity = 0.0;             // teacher/student agreement on the test slice
  double student_train_fidelity = 0.0;
  std::size_t student_nodes = 0;
  std::size_t direct_tree_nodes = 0;  // tree fit to the same slice with true labels
  double direct_tree_f1 = 0.0;
};

struct TransferResult {
  SvmModel teacher;
  DecisionTree student;
  TransferReport report;
};

// Trains a tree on `student_slice` relabeled by the teacher and scores both
// models on `test_slice` against the true labels.
TransferResult distill(const SvmModel& teacher, std::span<const EncodedExample> student_slice,
                       std::span<const EncodedExample> test_slice, const TreeParams& params);

// Seeded 40/40/20 split: teacher SVM on the first slice, student tree on the
// second (teacher labels), both evaluated on the third.
TransferResult knowledge_transfer(std::span<const EncodedExample> examples, std::size_t dimension,
                                  const Hyperparams& svm_hyper, const TreeParams& tree_params,
                                  std::uint64_t seed);

// Graphviz rendering; features are named through `vocab` when given.
std::string to_dot(const DecisionTree& tree, const Vocabulary* vocab = nullptr);
std::string to_json(const DecisionTree& tree);

}  // namespace fedpkt

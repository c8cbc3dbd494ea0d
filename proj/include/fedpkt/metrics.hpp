#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace fedpkt {

// Confusion counts for the positive (+1) class. Zero denominators give 0 for
// precision, recall and F1.
struct EvalReport {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::string eval_set_name;
  int runs = 1;

  static EvalReport from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn,
                                std::string name = {}, int runs = 1);
  std::size_t total() const { return tp + fp + fn + tn; }

  bool operator==(const EvalReport&) const = default;
};

EvalReport confusion(std::span<const int> predictions, std::span<const int> truths,
                     std::string eval_set_name = {});

// Sums the counts of two reports and recomputes the derived metrics.
EvalReport pool(const EvalReport& a, const EvalReport& b);

}  // namespace fedpkt

#include "fedpkt/metrics.hpp"

#include "fedpkt/error.hpp"

namespace fedpkt {

EvalReport EvalReport::from_counts(std::size_t tp, std::size_t fp, std::size_t fn,
                                   std::size_t tn, std::string name, int runs) {
  EvalReport r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  r.tn = tn;
  r.eval_set_name = std::move(name);
  r.runs = runs;
  if (tp + fp > 0) r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  // Same value as 2PR / (P + R), but one correctly rounded division.
  if (tp > 0) r.f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
  return r;
}

EvalReport confusion(std::span<const int> predictions, std::span<const int> truths,
                     std::string eval_set_name) {
  if (predictions.size() != truths.size()) {
    throw ValidationError("LengthMismatch", std::to_string(predictions.size()) +
                                                " predictions vs " +
                                                std::to_string(truths.size()) + " labels");
  }
  if (predictions.empty()) throw DataError("EmptyInput", "no predictions to score");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    bool pred = predictions[i] > 0;
    bool truth = truths[i] > 0;
    if (pred && truth) {
      ++tp;
    } else if (pred) {
      ++fp;
    } else if (truth) {
      ++fn;
    } else {
      ++tn;
    }
  }
  return EvalReport::from_counts(tp, fp, fn, tn, std::move(eval_set_name));
}

EvalReport pool(const EvalReport& a, const EvalReport& b) {
  return EvalReport::from_counts(a.tp + b.tp, a.fp + b.fp, a.fn + b.fn, a.tn + b.tn,
                                 a.eval_set_name, a.runs + b.runs);
}

}  // namespace fedpkt

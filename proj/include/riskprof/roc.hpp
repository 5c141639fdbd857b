#pragma once

#include <span>
#include <stdexcept>
#include <vector>

namespace riskprof {

/// A profile score paired with an outcome. `weight` counts identically scored,
/// identically labelled inspections.
struct ScoredOutcome {
  double score = 0.0;
  bool label = false;
  long weight = 1;
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // (0,0) ... (1,1), one vertex per distinct score
  double auc = 0.0;
};

/// Raised when the scored set lacks positives or negatives.
class UndefinedAuc : public std::runtime_error {
 public:
  UndefinedAuc() : std::runtime_error("AUC undefined: need both positive and negative labels") {}
};

/// Mann-Whitney AUC: P(score+ > score-) + 0.5 P(tie).
double auc(std::span<const ScoredOutcome> scored);

/// Tie-aware ROC curve (a tie group is a diagonal segment); auc is the
/// trapezoidal area.
RocCurve roc_curve(std::span<const ScoredOutcome> scored);

}  // namespace riskprof

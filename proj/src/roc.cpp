#include "riskprof/roc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace riskprof {

namespace {

struct TieGroup {
  double positives = 0.0;
  double negatives = 0.0;
};

// Tie groups in ascending score order.
std::vector<TieGroup> tie_groups(std::span<const ScoredOutcome> scored, double& total_pos,
                                 double& total_neg) {
  std::vector<std::size_t> order(scored.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (const auto& s : scored) {
    if (!std::isfinite(s.score)) throw std::invalid_argument("auc: non-finite score");
    if (s.weight < 0) throw std::invalid_argument("auc: negative weight");
  }
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return scored[i].score < scored[j].score; });
  std::vector<TieGroup> groups;
  total_pos = total_neg = 0.0;
  for (std::size_t k = 0; k < order.size();) {
    const double score = scored[order[k]].score;
    TieGroup g;
    for (; k < order.size() && scored[order[k]].score == score; ++k) {
      const auto& s = scored[order[k]];
      (s.label ? g.positives : g.negatives) += static_cast<double>(s.weight);
    }
    total_pos += g.positives;
    total_neg += g.negatives;
    groups.push_back(g);
  }
  if (total_pos <= 0.0 || total_neg <= 0.0) throw UndefinedAuc();
  return groups;
}

}  // namespace

double auc(std::span<const ScoredOutcome> scored) {
  double pos = 0.0, neg = 0.0;
  const auto groups = tie_groups(scored, pos, neg);
  double u = 0.0, neg_below = 0.0;
  for (const auto& g : groups) {
    u += g.positives * (neg_below + 0.5 * g.negatives);
    neg_below += g.negatives;
  }
  return u / (pos * neg);
}

RocCurve roc_curve(std::span<const ScoredOutcome> scored) {
  double pos = 0.0, neg = 0.0;
  const auto groups = tie_groups(scored, pos, neg);
  RocCurve curve;
  curve.points.push_back({0.0, 0.0});
  double tp = 0.0, fp = 0.0, area = 0.0;
  // Threshold sweeps from the highest score down.
  for (auto it = groups.rbegin(); it != groups.rend(); ++it) {
    const double tp_next = tp + it->positives, fp_next = fp + it->negatives;
    area += (fp_next - fp) * (tp + tp_next) * 0.5;
    tp = tp_next;
    fp = fp_next;
    curve.points.push_back({fp / neg, tp / pos});
  }
  curve.points.back() = {1.0, 1.0};
  curve.auc = area / (pos * neg);
  return curve;
}

}  // namespace riskprof

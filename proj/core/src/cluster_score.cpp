#include "mesc/structure/cluster_score.hpp"

#include <map>
#include <stdexcept>
#include <utility>

namespace mesc::structure {

namespace {
double pairs(double m) { return m * (m - 1.0) / 2.0; }
}  // namespace

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("adjusted_rand_index: length mismatch");
  const size_t n = a.size();
  if (n == 0) return 0.0;

  std::map<std::pair<int, int>, size_t> joint;
  std::map<int, size_t> rows, cols;
  for (size_t i = 0; i < n; ++i) {
    ++joint[{a[i], b[i]}];
    ++rows[a[i]];
    ++cols[b[i]];
  }

  double sum_joint = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [key, c] : joint) sum_joint += pairs(static_cast<double>(c));
  for (const auto& [key, c] : rows) sum_rows += pairs(static_cast<double>(c));
  for (const auto& [key, c] : cols) sum_cols += pairs(static_cast<double>(c));

  const double total = pairs(static_cast<double>(n));
  const double expected = total > 0.0 ? sum_rows * sum_cols / total : 0.0;
  const double max_index = 0.5 * (sum_rows + sum_cols);
  const double denom = max_index - expected;
  // Both partitions trivial (all singletons or one block each): identical by
  // construction, agreement is perfect.
  if (denom == 0.0) return 1.0;
  return (sum_joint - expected) / denom;
}

double cluster_purity(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size())
    throw std::invalid_argument("cluster_purity: length mismatch");
  if (pred.empty()) return 0.0;
  std::map<int, std::map<int, size_t>> table;  // pred cluster -> truth counts
  for (size_t i = 0; i < pred.size(); ++i) ++table[pred[i]][truth[i]];
  size_t majority_sum = 0;
  for (const auto& [c, counts] : table) {
    size_t best = 0;
    for (const auto& [t, cnt] : counts) best = std::max(best, cnt);
    majority_sum += best;
  }
  return static_cast<double>(majority_sum) / static_cast<double>(pred.size());
}

ClusterScore score_clusters(const std::vector<int>& pred,
                            const std::vector<int>& truth) {
  if (pred.size() != truth.size())
    throw std::invalid_argument("score_clusters: length mismatch");
  ClusterScore score;
  score.n_total = pred.size();

  std::vector<int> pred_kept, truth_kept;
  for (size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0) {
      ++score.n_noise;
      continue;
    }
    pred_kept.push_back(pred[i]);
    truth_kept.push_back(truth[i]);
  }

  score.ari_incl_noise = adjusted_rand_index(pred, truth);
  score.purity_incl_noise = cluster_purity(pred, truth);
  score.ari_excl_noise =
      pred_kept.empty() ? 0.0 : adjusted_rand_index(pred_kept, truth_kept);
  score.purity_excl_noise = cluster_purity(pred_kept, truth_kept);
  return score;
}

}  // namespace mesc::structure

#pragma once

#include <cstddef>
#include <vector>

namespace mesc::structure {

// Agreement between predicted structure labels and planted ground-truth parts.
// The excl variants drop points predicted as noise (-1); the incl variants keep
// them as a cluster of their own.
struct ClusterScore {
  double ari_excl_noise = 0.0;
  double ari_incl_noise = 0.0;
  double purity_excl_noise = 0.0;
  double purity_incl_noise = 0.0;
  size_t n_total = 0;
  size_t n_noise = 0;
};

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);
double cluster_purity(const std::vector<int>& pred, const std::vector<int>& truth);

ClusterScore score_clusters(const std::vector<int>& pred,
                            const std::vector<int>& truth);

}  // namespace mesc::structure

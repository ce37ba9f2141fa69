#pragma once

#include <cstddef>
#include <vector>

namespace mesc::structure {

// Density treated as lambda = 1/distance; zero distances are capped here.
constexpr double kMaxLambda = 1e12;
double lambda_of(double distance);

double point_distance(const float* a, const float* b, size_t dim);

struct ClusterInfo {
  double lambda_birth = 0.0;
  double lambda_death = 0.0;
  // Most-persistent members (max-lambda points of the cluster's condensed
  // leaves); used to label unseen points.
  std::vector<size_t> exemplars;
  // Largest mutual-reachability distance at which the cluster's members were
  // still merging among themselves; the assignment radius.
  double max_merge_distance = 0.0;
};

struct ClusterModel {
  size_t min_cluster_size = 15;
  size_t min_samples = 15;
  size_t dim = 0;
  size_t n = 0;
  std::vector<float> points;      // training points, n x dim
  std::vector<double> core_dist;  // per point
  std::vector<int> labels;        // per point, -1 = noise, else 0..K-1
  size_t num_clusters = 0;        // K
  std::vector<ClusterInfo> clusters;  // indexed by label
};

// Full pipeline: core distances (min_samples-th neighbor, self excluded) ->
// mutual reachability -> Prim MST -> single-linkage hierarchy with equal-
// distance merges collapsed into one multiway node (order-invariant) ->
// condensed tree at min_cluster_size -> excess-of-mass selection (root
// excluded; if nothing else survives, the root becomes a single cluster).
// Fewer than min_cluster_size points: everything is noise, K=0, warning.
ClusterModel hdbscan_fit(const std::vector<float>& points, size_t n, size_t dim,
                         size_t min_cluster_size, size_t min_samples);

}  // namespace mesc::structure

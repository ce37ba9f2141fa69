#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "mesc/structure/hdbscan.hpp"
#include "mesc/structure/pca.hpp"

namespace mesc::structure {

// Fitted Stage-3a model: linear reduction followed by density clustering.
// point_index maps the byte hash of a reduced training point to its row ids so
// that re-queried training points get their training label back exactly.
struct StructureModel {
  ReductionModel reduction;
  ClusterModel cluster;
  std::unordered_map<uint64_t, std::vector<size_t>> point_index;
};

struct StructureLabels {
  std::string doc_id;
  std::vector<int> labels;       // per chunk: -1 noise, else 0..K-1
  std::vector<float> histogram;  // K+1 bins, bin 0 = noise share, sums to 1
};

void build_point_index(StructureModel& model);

// Reduces training embeddings and fits the clustering. data is n x dim
// row-major with dim = reduction input width.
StructureModel fit_structure(const std::vector<float>& data, size_t n, size_t dim,
                             size_t r, size_t min_cluster_size, size_t min_samples);

// Labels one already-reduced point: exact training-point match wins; otherwise
// the nearest exemplar's cluster if max(distance, exemplar core distance) stays
// within that cluster's merge radius x tolerance, else -1.
int assign_reduced_point(const StructureModel& model, const float* q,
                         double tolerance);

// Normalized (K+1)-bin occupancy: bin 0 counts noise, bin k+1 counts cluster k.
std::vector<float> label_histogram(const std::vector<int>& labels,
                                   size_t num_clusters);

StructureLabels assign_labels(const StructureModel& model, const std::string& doc_id,
                              const std::vector<float>& chunk_embeddings,
                              size_t num_chunks, double tolerance = 1.0);

void save_structure_model(const StructureModel& model, const std::string& path);
StructureModel load_structure_model(const std::string& path);

// One row per chunk: doc_id,chunk_idx,cluster_label.
void save_structure_csv(const std::vector<StructureLabels>& docs,
                        const std::string& path);

// Reads the CSV back into per-document label sequences ordered by chunk index.
std::map<std::string, std::vector<int>> load_structure_csv(const std::string& path);

}  // namespace mesc::structure

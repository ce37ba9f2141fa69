#include "mesc/structure/structure_model.hpp"

#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "mesc/io_util.hpp"
#include "mesc/rng.hpp"

namespace mesc::structure {

namespace {
constexpr const char* kMagic = "MESCCLS";
constexpr uint32_t kVersion = 1;

uint64_t hash_point(const float* p, size_t dim) {
  return fnv1a64(p, dim * sizeof(float));
}
}  // namespace

void build_point_index(StructureModel& model) {
  model.point_index.clear();
  const auto& cm = model.cluster;
  for (size_t i = 0; i < cm.n; ++i)
    model.point_index[hash_point(cm.points.data() + i * cm.dim, cm.dim)].push_back(i);
}

StructureModel fit_structure(const std::vector<float>& data, size_t n, size_t dim,
                             size_t r, size_t min_cluster_size, size_t min_samples) {
  StructureModel model;
  model.reduction = fit_reduction(data, n, dim, r);
  const auto reduced = model.reduction.reduce_all(data, n);
  model.cluster =
      hdbscan_fit(reduced, n, model.reduction.r, min_cluster_size, min_samples);
  build_point_index(model);
  return model;
}

int assign_reduced_point(const StructureModel& model, const float* q,
                         double tolerance) {
  const auto& cm = model.cluster;
  const auto it = model.point_index.find(hash_point(q, cm.dim));
  if (it != model.point_index.end()) {
    for (size_t i : it->second)
      if (std::memcmp(q, cm.points.data() + i * cm.dim, cm.dim * sizeof(float)) == 0)
        return cm.labels[i];
  }

  int best_label = -1;
  double best_dist = std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < cm.num_clusters; ++k) {
    for (size_t e : cm.clusters[k].exemplars) {
      const double d =
          std::max(point_distance(q, cm.points.data() + e * cm.dim, cm.dim),
                   cm.core_dist[e]);
      if (d < best_dist) {
        best_dist = d;
        best_label = static_cast<int>(k);
      }
    }
  }
  if (best_label < 0) return -1;
  if (best_dist <= cm.clusters[best_label].max_merge_distance * tolerance)
    return best_label;
  return -1;
}

std::vector<float> label_histogram(const std::vector<int>& labels,
                                   size_t num_clusters) {
  if (labels.empty())
    throw std::invalid_argument("label_histogram: empty label sequence");
  std::vector<float> hist(num_clusters + 1, 0.0f);
  for (int l : labels) {
    if (l < -1 || l >= static_cast<int>(num_clusters))
      throw std::invalid_argument("label_histogram: label out of range");
    hist[static_cast<size_t>(l + 1)] += 1.0f;
  }
  const float inv = 1.0f / static_cast<float>(labels.size());
  for (float& h : hist) h *= inv;
  return hist;
}

StructureLabels assign_labels(const StructureModel& model, const std::string& doc_id,
                              const std::vector<float>& chunk_embeddings,
                              size_t num_chunks, double tolerance) {
  const size_t dim = model.reduction.input_dim;
  if (chunk_embeddings.size() != num_chunks * dim)
    throw std::invalid_argument("assign_labels: embedding size mismatch for doc " +
                                doc_id);
  StructureLabels out;
  out.doc_id = doc_id;
  out.labels.reserve(num_chunks);
  for (size_t i = 0; i < num_chunks; ++i) {
    const auto q = model.reduction.reduce(chunk_embeddings.data() + i * dim);
    out.labels.push_back(assign_reduced_point(model, q.data(), tolerance));
  }
  out.histogram = label_histogram(out.labels, model.cluster.num_clusters);
  return out;
}

void save_structure_model(const StructureModel& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write cluster model: " + path);
  const auto& rd = model.reduction;
  const auto& cm = model.cluster;

  write_magic(os, kMagic);
  write_u32(os, kVersion);
  write_u32(os, static_cast<uint32_t>(rd.r));
  write_u32(os, static_cast<uint32_t>(cm.num_clusters));
  write_u32(os, static_cast<uint32_t>(cm.min_cluster_size));
  write_u32(os, static_cast<uint32_t>(cm.min_samples));

  write_u32(os, static_cast<uint32_t>(rd.input_dim));
  write_f32s(os, rd.mean.data(), rd.mean.size());
  write_f32s(os, rd.components.data(), rd.components.size());

  write_u64(os, cm.n);
  write_f32s(os, cm.points.data(), cm.points.size());
  for (size_t i = 0; i < cm.n; ++i) write_i32(os, cm.labels[i]);
  for (size_t i = 0; i < cm.n; ++i) write_f64(os, cm.core_dist[i]);

  for (const auto& info : cm.clusters) {
    write_f64(os, info.lambda_birth);
    write_f64(os, info.lambda_death);
    write_f64(os, info.max_merge_distance);
    write_u64(os, info.exemplars.size());
    for (size_t e : info.exemplars) write_u64(os, e);
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

StructureModel load_structure_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read cluster model: " + path);
  expect_magic(is, kMagic, path);
  const uint32_t version = read_u32(is);
  if (version != kVersion)
    throw std::runtime_error("unsupported cluster model version in " + path);

  StructureModel model;
  auto& rd = model.reduction;
  auto& cm = model.cluster;
  rd.r = read_u32(is);
  cm.num_clusters = read_u32(is);
  cm.min_cluster_size = read_u32(is);
  cm.min_samples = read_u32(is);
  cm.dim = rd.r;

  rd.input_dim = read_u32(is);
  rd.mean.resize(rd.input_dim);
  read_f32s(is, rd.mean.data(), rd.mean.size());
  rd.components.resize(rd.input_dim * rd.r);
  read_f32s(is, rd.components.data(), rd.components.size());

  cm.n = read_u64(is);
  cm.points.resize(cm.n * cm.dim);
  read_f32s(is, cm.points.data(), cm.points.size());
  cm.labels.resize(cm.n);
  for (size_t i = 0; i < cm.n; ++i) cm.labels[i] = read_i32(is);
  cm.core_dist.resize(cm.n);
  for (size_t i = 0; i < cm.n; ++i) cm.core_dist[i] = read_f64(is);

  cm.clusters.resize(cm.num_clusters);
  for (auto& info : cm.clusters) {
    info.lambda_birth = read_f64(is);
    info.lambda_death = read_f64(is);
    info.max_merge_distance = read_f64(is);
    info.exemplars.resize(read_u64(is));
    for (size_t& e : info.exemplars) e = read_u64(is);
  }
  if (!is) throw std::runtime_error("truncated cluster model: " + path);
  build_point_index(model);
  return model;
}

void save_structure_csv(const std::vector<StructureLabels>& docs,
                        const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write structure labels: " + path);
  os << "doc_id,chunk_idx,cluster_label\n";
  for (const auto& doc : docs)
    for (size_t i = 0; i < doc.labels.size(); ++i)
      os << doc.doc_id << ',' << i << ',' << doc.labels[i] << '\n';
  if (!os) throw std::runtime_error("write failed: " + path);
}

std::map<std::string, std::vector<int>> load_structure_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read structure labels: " + path);
  std::string line;
  if (!std::getline(is, line) || line != "doc_id,chunk_idx,cluster_label")
    throw std::runtime_error("bad structure label header in " + path);
  std::map<std::string, std::vector<int>> out;
  size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const size_t c1 = line.find(',');
    const size_t c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected doc_id,chunk_idx,cluster_label");
    const std::string id = line.substr(0, c1);
    const size_t idx = std::stoul(line.substr(c1 + 1, c2 - c1 - 1));
    const int label = std::stoi(line.substr(c2 + 1));
    auto& labels = out[id];
    if (labels.size() <= idx) labels.resize(idx + 1, -1);
    labels[idx] = label;
  }
  return out;
}

}  // namespace mesc::structure

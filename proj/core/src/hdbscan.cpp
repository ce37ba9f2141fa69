#include "mesc/structure/hdbscan.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace mesc::structure {

double lambda_of(double distance) {
  if (distance <= 1.0 / kMaxLambda) return kMaxLambda;
  return std::min(1.0 / distance, kMaxLambda);
}

double point_distance(const float* a, const float* b, size_t dim) {
  double acc = 0.0;
  for (size_t i = 0; i < dim; ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

namespace {

struct MstEdge {
  size_t a, b;
  double w;
};

// Union-find over point indices.
struct DisjointSet {
  std::vector<size_t> parent;
  explicit DisjointSet(size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  size_t find(size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(size_t a, size_t b) { parent[find(a)] = find(b); }
};

// Single-linkage dendrogram node; children are either earlier nodes or
// singleton points. Merges at equal distance collapse into one node, making
// the tree independent of edge processing order.
struct DendroNode {
  double height = 0.0;
  std::vector<long> children;  // >=0: node index, <0: point ~(index)
  size_t size = 0;
};

long point_ref(size_t p) { return ~static_cast<long>(p); }

std::vector<double> core_distances(const std::vector<float>& pts, size_t n, size_t dim,
                                   size_t min_samples) {
  std::vector<double> core(n, 0.0);
  const size_t k = std::min(min_samples, n > 0 ? n - 1 : 0);
  if (k == 0) return core;
  std::vector<double> row(n);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j)
      row[j] = point_distance(pts.data() + i * dim, pts.data() + j * dim, dim);
    row[i] = std::numeric_limits<double>::infinity();  // exclude self
    std::nth_element(row.begin(), row.begin() + static_cast<long>(k - 1), row.end());
    core[i] = row[k - 1];
  }
  return core;
}

// Prim over the implicit complete mutual-reachability graph, O(n^2).
std::vector<MstEdge> mutual_reachability_mst(const std::vector<float>& pts, size_t n,
                                             size_t dim,
                                             const std::vector<double>& core) {
  std::vector<MstEdge> edges;
  if (n < 2) return edges;
  std::vector<char> in_tree(n, 0);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<size_t> best_from(n, 0);
  in_tree[0] = 1;
  size_t current = 0;
  for (size_t added = 1; added < n; ++added) {
    for (size_t j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      const double d =
          point_distance(pts.data() + current * dim, pts.data() + j * dim, dim);
      const double mr = std::max({core[current], core[j], d});
      if (mr < best[j]) {
        best[j] = mr;
        best_from[j] = current;
      }
    }
    size_t next = 0;
    double next_w = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < n; ++j)
      if (!in_tree[j] && best[j] < next_w) {
        next_w = best[j];
        next = j;
      }
    edges.push_back({best_from[next], next, next_w});
    in_tree[next] = 1;
    current = next;
  }
  return edges;
}

// Merges MST edges grouped by equal weight into multiway dendrogram nodes.
std::vector<DendroNode> build_dendrogram(size_t n, std::vector<MstEdge> edges) {
  std::sort(edges.begin(), edges.end(), [](const MstEdge& x, const MstEdge& y) {
    if (x.w != y.w) return x.w < y.w;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });

  std::vector<DendroNode> nodes;
  DisjointSet ds(n);
  // Representative dendro ref for each union-find root.
  std::vector<long> rep(n);
  for (size_t i = 0; i < n; ++i) rep[i] = point_ref(i);
  std::vector<size_t> sizes(n, 1);

  size_t gi = 0;
  while (gi < edges.size()) {
    size_t ge = gi;
    while (ge < edges.size() && edges[ge].w == edges[gi].w) ++ge;

    // Components formed among current roots by this weight group.
    std::unordered_map<size_t, size_t> comp_of;  // root -> component id
    std::vector<std::vector<size_t>> comp_roots;
    std::vector<std::pair<size_t, size_t>> root_pairs;
    for (size_t e = gi; e < ge; ++e) {
      const size_t ra = ds.find(edges[e].a), rb = ds.find(edges[e].b);
      if (ra != rb) root_pairs.emplace_back(ra, rb);
    }
    // Union within a scratch structure of the touched roots.
    std::unordered_map<size_t, size_t> scratch_parent;
    auto scratch_find = [&](size_t x) {
      while (true) {
        auto it = scratch_parent.find(x);
        if (it == scratch_parent.end() || it->second == x) return x;
        x = it->second;
      }
    };
    for (const auto& [ra, rb] : root_pairs) {
      scratch_parent.emplace(ra, ra);
      scratch_parent.emplace(rb, rb);
      const size_t fa = scratch_find(ra), fb = scratch_find(rb);
      if (fa != fb) scratch_parent[fa] = fb;
    }
    for (const auto& [ra, rb] : root_pairs) {
      for (size_t r : {ra, rb}) {
        const size_t f = scratch_find(r);
        auto it = comp_of.find(f);
        size_t cid;
        if (it == comp_of.end()) {
          cid = comp_roots.size();
          comp_of.emplace(f, cid);
          comp_roots.emplace_back();
        } else {
          cid = it->second;
        }
        auto& v = comp_roots[comp_of[f]];
        if (std::find(v.begin(), v.end(), r) == v.end()) v.push_back(r);
      }
    }

    for (auto& roots : comp_roots) {
      if (roots.size() < 2) continue;
      std::sort(roots.begin(), roots.end());
      DendroNode node;
      node.height = edges[gi].w;
      for (size_t r : roots) {
        node.children.push_back(rep[r]);
        node.size += sizes[r];
      }
      nodes.push_back(node);
      size_t merged = roots[0];
      for (size_t k = 1; k < roots.size(); ++k) ds.unite(roots[k], merged);
      const size_t new_root = ds.find(merged);
      rep[new_root] = static_cast<long>(nodes.size() - 1);
      sizes[new_root] = node.size;
    }
    gi = ge;
  }
  return nodes;
}

size_t subtree_size(const std::vector<DendroNode>& nodes, long ref) {
  return ref < 0 ? 1 : nodes[static_cast<size_t>(ref)].size;
}

// Collects the leaf points under a dendrogram ref.
void collect_points(const std::vector<DendroNode>& nodes, long ref,
                    std::vector<size_t>& out) {
  if (ref < 0) {
    out.push_back(static_cast<size_t>(~ref));
    return;
  }
  for (long ch : nodes[static_cast<size_t>(ref)].children)
    collect_points(nodes, ch, out);
}

struct CondensedCluster {
  int parent = -1;
  double lambda_birth = 0.0;
  double lambda_death = 0.0;
  size_t size = 0;
  std::vector<std::pair<size_t, double>> fallout;  // (point, lambda at exit)
  std::vector<int> children;
  double stability = 0.0;
  bool selected = false;
};

// Walks the dendrogram top-down applying the min-cluster-size condensation.
std::vector<CondensedCluster> condense_tree(const std::vector<DendroNode>& nodes,
                                            size_t n, size_t mcs) {
  std::vector<CondensedCluster> cond;
  if (nodes.empty()) return cond;
  const long root_ref = static_cast<long>(nodes.size() - 1);

  struct Item {
    long ref;
    int cluster;
  };
  cond.push_back({});
  cond[0].lambda_birth = 0.0;
  cond[0].size = n;
  std::vector<Item> stack{{root_ref, 0}};

  while (!stack.empty()) {
    auto [ref, cid] = stack.back();
    stack.pop_back();
    long cur = ref;
    while (true) {
      const DendroNode& node = nodes[static_cast<size_t>(cur)];
      const double lam = lambda_of(node.height);
      std::vector<long> real;
      for (long ch : node.children)
        if (subtree_size(nodes, ch) >= mcs) real.push_back(ch);

      for (long ch : node.children) {
        if (subtree_size(nodes, ch) >= mcs) continue;
        std::vector<size_t> pts;
        collect_points(nodes, ch, pts);
        for (size_t p : pts) cond[cid].fallout.emplace_back(p, lam);
      }

      if (real.size() >= 2) {
        cond[cid].lambda_death = lam;
        for (long ch : real) {
          CondensedCluster child;
          child.parent = cid;
          child.lambda_birth = lam;
          child.size = subtree_size(nodes, ch);
          const int child_id = static_cast<int>(cond.size());
          cond.push_back(std::move(child));
          cond[cid].children.push_back(child_id);
          stack.push_back({ch, child_id});
        }
        break;
      }
      if (real.size() == 1) {
        cur = real[0];
        continue;
      }
      cond[cid].lambda_death = lam;  // condensed leaf: everyone left here
      break;
    }
  }

  for (auto& c : cond) {
    double s = 0.0;
    for (const auto& [p, lam] : c.fallout) s += lam - c.lambda_birth;
    for (int ch : c.children)
      s += static_cast<double>(cond[ch].size) *
           (cond[ch].lambda_birth - c.lambda_birth);
    c.stability = s;
  }
  return cond;
}

// Excess-of-mass: children beat the parent only when their summed selected
// stability strictly exceeds the parent's own. The root never competes.
void select_clusters(std::vector<CondensedCluster>& cond) {
  if (cond.empty()) return;
  std::vector<double> value(cond.size(), 0.0);
  // Clusters were appended parent-before-child, so reverse order is bottom-up.
  for (size_t i = cond.size(); i-- > 0;) {
    auto& c = cond[i];
    if (c.children.empty()) {
      value[i] = c.stability;
      c.selected = i != 0;
      continue;
    }
    double child_sum = 0.0;
    for (int ch : c.children) child_sum += value[ch];
    if (i != 0 && c.stability >= child_sum) {
      c.selected = true;
      value[i] = c.stability;
      // Deselect the whole subtree below.
      std::vector<int> todo(c.children.begin(), c.children.end());
      while (!todo.empty()) {
        const int x = todo.back();
        todo.pop_back();
        cond[x].selected = false;
        todo.insert(todo.end(), cond[x].children.begin(), cond[x].children.end());
      }
    } else {
      value[i] = child_sum;
    }
  }
}

}  // namespace

ClusterModel hdbscan_fit(const std::vector<float>& points, size_t n, size_t dim,
                         size_t min_cluster_size, size_t min_samples) {
  if (n == 0 || dim == 0) throw std::invalid_argument("hdbscan_fit: empty input");
  if (points.size() != n * dim)
    throw std::invalid_argument("hdbscan_fit: data size does not match n x dim");
  if (min_cluster_size < 2)
    throw std::invalid_argument("hdbscan_fit: min_cluster_size must be >= 2");
  if (min_samples == 0)
    throw std::invalid_argument("hdbscan_fit: min_samples must be >= 1");

  ClusterModel model;
  model.min_cluster_size = min_cluster_size;
  model.min_samples = min_samples;
  model.dim = dim;
  model.n = n;
  model.points = points;
  model.core_dist = core_distances(points, n, dim, min_samples);
  model.labels.assign(n, -1);

  if (n < min_cluster_size) {
    std::fprintf(stderr,
                 "[hdbscan_fit] warning: %zu points < min_cluster_size=%zu, all "
                 "points labeled noise\n",
                 n, min_cluster_size);
    return model;
  }

  const auto mst = mutual_reachability_mst(points, n, dim, model.core_dist);
  const auto dendro = build_dendrogram(n, mst);
  auto cond = condense_tree(dendro, n, min_cluster_size);
  select_clusters(cond);

  bool any_selected = false;
  for (const auto& c : cond) any_selected |= c.selected;
  if (!any_selected && !cond.empty()) cond[0].selected = true;  // single-cluster root

  // Point labels: the selected cluster on the path from the fallout cluster up.
  std::vector<int> selected_of(cond.size(), -1);
  for (size_t i = 0; i < cond.size(); ++i) {
    int cur = static_cast<int>(i);
    while (cur >= 0 && !cond[cur].selected) cur = cond[cur].parent;
    selected_of[i] = cur;
  }
  std::vector<std::vector<size_t>> members(cond.size());
  for (size_t i = 0; i < cond.size(); ++i)
    for (const auto& [p, lam] : cond[i].fallout)
      if (selected_of[i] >= 0) members[selected_of[i]].push_back(p);

  // Deterministic label ids: clusters ordered by their smallest member index.
  std::vector<int> selected_ids;
  for (size_t i = 0; i < cond.size(); ++i)
    if (cond[i].selected && !members[i].empty())
      selected_ids.push_back(static_cast<int>(i));
  std::vector<size_t> min_member(cond.size(), 0);
  for (int id : selected_ids)
    min_member[id] = *std::min_element(members[id].begin(), members[id].end());
  std::sort(selected_ids.begin(), selected_ids.end(),
            [&](int a, int b) { return min_member[a] < min_member[b]; });

  model.num_clusters = selected_ids.size();
  model.clusters.resize(selected_ids.size());
  for (size_t label = 0; label < selected_ids.size(); ++label) {
    const int cid = selected_ids[label];
    for (size_t p : members[cid]) model.labels[p] = static_cast<int>(label);

    ClusterInfo info;
    info.lambda_birth = cond[cid].lambda_birth;
    info.lambda_death = cond[cid].lambda_death;

    // Exemplars: max-lambda fallout points of each condensed leaf below.
    std::vector<int> leaves;
    std::vector<int> todo{cid};
    while (!todo.empty()) {
      const int x = todo.back();
      todo.pop_back();
      if (cond[x].children.empty())
        leaves.push_back(x);
      else
        todo.insert(todo.end(), cond[x].children.begin(), cond[x].children.end());
    }
    for (int leaf : leaves) {
      double max_lam = -1.0;
      for (const auto& [p, lam] : cond[leaf].fallout) max_lam = std::max(max_lam, lam);
      for (const auto& [p, lam] : cond[leaf].fallout)
        if (lam == max_lam && model.labels[p] == static_cast<int>(label))
          info.exemplars.push_back(p);
    }
    std::sort(info.exemplars.begin(), info.exemplars.end());
    model.clusters[label] = std::move(info);
  }

  // Assignment radii: the MST weight at which each cluster's member set first
  // became fully connected.
  {
    std::vector<MstEdge> edges = mst;
    std::sort(edges.begin(), edges.end(),
              [](const MstEdge& x, const MstEdge& y) { return x.w < y.w; });
    DisjointSet ds(n);
    std::vector<std::unordered_map<int, size_t>> tally(n);
    std::vector<size_t> want(model.num_clusters, 0);
    size_t pending = 0;
    for (size_t p = 0; p < n; ++p)
      if (model.labels[p] >= 0) {
        ++tally[p][model.labels[p]];
        ++want[model.labels[p]];
      }
    for (size_t c = 0; c < model.num_clusters; ++c) pending += want[c] > 0 ? 1 : 0;
    for (const auto& e : edges) {
      if (pending == 0) break;
      size_t ra = ds.find(e.a), rb = ds.find(e.b);
      if (ra == rb) continue;
      if (tally[ra].size() < tally[rb].size()) std::swap(ra, rb);
      ds.unite(rb, ra);
      for (const auto& [label, cnt] : tally[rb]) {
        auto& dst = tally[ra][label];
        dst += cnt;
        if (dst == want[label] && cnt != want[label]) {
          // This union completed the cluster.
          if (model.clusters[label].max_merge_distance == 0.0) {
            model.clusters[label].max_merge_distance = e.w;
            --pending;
          }
        }
      }
      tally[rb].clear();
    }
    // Single-member-one-union edge cases: any cluster never completed above
    // was whole from the start (cannot happen with mcs >= 2), keep 0.
  }

  return model;
}

}  // namespace mesc::structure

#include "bioslam/memory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "bioslam/error.hpp"
#include "bioslam/rng.hpp"

namespace bioslam {

namespace {

std::size_t nearest(const Vec& p, std::span<const Vec> centroids, double* best_d2) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_euclidean(p, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (best_d2 != nullptr) *best_d2 = best_d;
  return best;
}

// Draws an index proportional to `weights`; uniform when they sum to zero.
std::size_t draw_weighted(std::span<const double> weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (total <= 0.0) {
    std::uniform_int_distribution<std::size_t> pick(0, weights.size() - 1);
    return pick(rng);
  }
  std::uniform_real_distribution<double> u(0.0, total);
  const double target = u(rng);
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (target < acc) return i;
  }
  return last_positive;
}

std::vector<Vec> mean_centroids(std::span<const Vec> points, std::span<const std::size_t> assign, std::size_t k) {
  const std::size_t dim = points.front().size();
  std::vector<Vec> centroids(k, Vec(dim, 0.0));
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    Vec& c = centroids[assign[i]];
    for (std::size_t d = 0; d < dim; ++d) c[d] += points[i][d];
    ++counts[assign[i]];
  }
  for (std::size_t c = 0; c < k; ++c)
    for (double& v : centroids[c]) v /= static_cast<double>(counts[c]);
  return centroids;
}

// Moves the globally farthest point (from its own centroid, among clusters
// with more than one member) into each empty cluster.
void reseed_empty(std::span<const Vec> points, std::vector<std::size_t>& assign, std::vector<Vec>& centroids) {
  const std::size_t k = centroids.size();
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t a : assign) ++counts[a];
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] != 0) continue;
    std::size_t far = points.size();
    double far_d = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (counts[assign[i]] <= 1) continue;
      const double d = squared_euclidean(points[i], centroids[assign[i]]);
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    if (far == points.size()) break;  // cannot happen while k <= n
    --counts[assign[far]];
    assign[far] = c;
    counts[c] = 1;
    centroids[c] = points[far];
  }
}

}  // namespace

double within_cluster_ss(std::span<const Vec> points, std::span<const std::size_t> assignments,
                         std::span<const Vec> centroids) {
  double s = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) s += squared_euclidean(points[i], centroids[assignments[i]]);
  return s;
}

KMeansResult kmeans(std::span<const Vec> points, std::size_t k, std::size_t max_iters, std::uint64_t seed) {
  if (points.empty()) throw Error(ErrorKind::invalid_argument, "kmeans needs at least one point");
  if (k == 0) throw Error(ErrorKind::invalid_argument, "kmeans needs K >= 1");
  for (const auto& p : points)
    if (p.size() != points.front().size()) throw Error(ErrorKind::dimension_mismatch, "kmeans points differ in size");
  k = std::min(k, points.size());
  const std::size_t n = points.size();
  Rng rng(seed);

  // k-means++ seeding
  std::vector<Vec> centroids;
  centroids.reserve(k);
  std::vector<bool> chosen(n, false);
  {
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    const std::size_t i0 = first(rng);
    centroids.push_back(points[i0]);
    chosen[i0] = true;
  }
  Vec d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_euclidean(points[i], centroids[0]);
  while (centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (!chosen[i]) total += d2[i];
    std::size_t pick = n;
    if (total > 0.0) {
      Vec w(n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        if (!chosen[i]) w[i] = d2[i];
      pick = draw_weighted(w, rng);
    } else {
      // Remaining points coincide with chosen centers; take any unchosen one.
      std::vector<std::size_t> rest;
      for (std::size_t i = 0; i < n; ++i)
        if (!chosen[i]) rest.push_back(i);
      std::uniform_int_distribution<std::size_t> u(0, rest.size() - 1);
      pick = rest[u(rng)];
    }
    chosen[pick] = true;
    centroids.push_back(points[pick]);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_euclidean(points[i], centroids.back()));
  }

  KMeansResult result;
  result.assignments.assign(n, 0);
  std::vector<std::size_t> previous;
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    for (std::size_t i = 0; i < n; ++i) result.assignments[i] = nearest(points[i], centroids, nullptr);
    reseed_empty(points, result.assignments, centroids);
    centroids = mean_centroids(points, result.assignments, k);
    result.wcss_history.push_back(within_cluster_ss(points, result.assignments, centroids));
    result.iterations = iter + 1;
    if (result.assignments == previous) {
      result.converged = true;
      break;
    }
    previous = result.assignments;
  }
  result.centroids = std::move(centroids);
  return result;
}

double Cluster::mean_reward() const {
  if (members.empty()) return 0.0;
  double s = 0.0;
  for (const auto& m : members) s += m.reward;
  return s / static_cast<double>(members.size());
}

void Cluster::recompute_centroid(double spatial_weight) {
  if (members.empty()) throw Error(ErrorKind::invalid_argument, "cluster has no members");
  Vec c = make_code(members.front(), spatial_weight).c;
  std::fill(c.begin(), c.end(), 0.0);
  for (const auto& m : members) {
    const Vec code = make_code(m, spatial_weight).c;
    for (std::size_t d = 0; d < c.size(); ++d) c[d] += code[d];
  }
  for (double& v : c) v /= static_cast<double>(members.size());
  centroid.c = std::move(c);
}

Cluster downsample_cluster(Cluster cluster, std::size_t max_members, double spatial_weight) {
  if (max_members == 0) throw Error(ErrorKind::invalid_argument, "max_members must be >= 1");
  if (cluster.members.size() <= max_members) return cluster;

  const std::size_t n = cluster.members.size();
  std::vector<FeatureSpatialCode> codes;
  codes.reserve(n);
  for (const auto& m : cluster.members) codes.push_back(make_code(m, spatial_weight));

  std::size_t seed = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (cluster.members[i].reward > cluster.members[seed].reward) seed = i;

  std::vector<bool> keep(n, false);
  keep[seed] = true;
  Vec min_d(n);
  for (std::size_t i = 0; i < n; ++i) min_d[i] = code_distance(codes[i], codes[seed]);
  for (std::size_t taken = 1; taken < max_members; ++taken) {
    std::size_t far = n;
    double far_d = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (keep[i]) continue;
      if (min_d[i] > far_d) {
        far_d = min_d[i];
        far = i;
      }
    }
    keep[far] = true;
    for (std::size_t i = 0; i < n; ++i) min_d[i] = std::min(min_d[i], code_distance(codes[i], codes[far]));
  }

  std::vector<MemoryTrace> kept;
  kept.reserve(max_members);
  for (std::size_t i = 0; i < n; ++i)
    if (keep[i]) kept.push_back(std::move(cluster.members[i]));
  cluster.members = std::move(kept);
  cluster.recompute_centroid(spatial_weight);
  return cluster;
}

std::vector<std::uint64_t> forget_clusters(std::vector<Cluster>& clusters, std::size_t max_clusters) {
  std::vector<std::uint64_t> removed;
  if (clusters.size() <= max_clusters) return removed;
  const std::size_t k = clusters.size();
  const std::size_t rounds = k - max_clusters;

  // Distance matrix computed once; removed clusters are masked out.
  std::vector<double> dist(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) dist[i * k + j] = code_distance(clusters[i].centroid, clusters[j].centroid);
  std::vector<bool> alive(k, true);

  for (std::size_t round = 0; round < rounds; ++round) {
    std::size_t bi = k, bj = k;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) {
      if (!alive[i]) continue;
      for (std::size_t j = i + 1; j < k; ++j) {
        if (!alive[j]) continue;
        if (dist[i * k + j] < best) {
          best = dist[i * k + j];
          bi = i;
          bj = j;
        }
      }
    }
    const double ri = clusters[bi].mean_reward();
    const double rj = clusters[bj].mean_reward();
    std::size_t victim = bi;
    if (rj < ri) victim = bj;
    else if (rj == ri && clusters[bj].creation_step < clusters[bi].creation_step) victim = bj;
    alive[victim] = false;
    removed.push_back(clusters[victim].id);
  }

  std::vector<Cluster> kept;
  kept.reserve(max_clusters);
  for (std::size_t i = 0; i < k; ++i)
    if (alive[i]) kept.push_back(std::move(clusters[i]));
  clusters = std::move(kept);
  return removed;
}

StaticMemory::StaticMemory(StaticMemoryConfig config) : config_(config) {
  if (config_.max_clusters == 0 || config_.max_members == 0 || !(config_.spatial_weight > 0.0) ||
      config_.max_new_clusters == 0)
    throw Error(ErrorKind::invalid_config, "static memory limits must be positive");
}

std::size_t StaticMemory::new_cluster_count(std::size_t trace_count) const {
  const std::size_t k = (trace_count + config_.max_members - 1) / config_.max_members;
  return std::min(k, config_.max_new_clusters);
}

std::vector<std::uint64_t> StaticMemory::consolidate(std::span<const MemoryTrace> traces, std::size_t k_new,
                                                     std::int64_t step, std::uint64_t seed) {
  if (traces.empty()) return {};
  std::vector<Vec> codes;
  codes.reserve(traces.size());
  for (const auto& t : traces) codes.push_back(make_code(t, config_.spatial_weight).c);
  const KMeansResult km = kmeans(codes, std::max<std::size_t>(k_new, 1), config_.kmeans_iters, seed);

  std::vector<Cluster> fresh(km.centroids.size());
  for (std::size_t i = 0; i < traces.size(); ++i) fresh[km.assignments[i]].members.push_back(traces[i]);
  for (auto& c : fresh) {
    c.id = next_cluster_id_++;
    c.creation_step = step;
    c.recompute_centroid(config_.spatial_weight);
    clusters_.push_back(downsample_cluster(std::move(c), config_.max_members, config_.spatial_weight));
  }
  return forget();
}

std::vector<std::uint64_t> StaticMemory::consolidate_singletons(std::span<const MemoryTrace> traces,
                                                                std::int64_t step) {
  for (const auto& t : traces) {
    Cluster c;
    c.id = next_cluster_id_++;
    c.creation_step = step;
    c.members.push_back(t);
    c.recompute_centroid(config_.spatial_weight);
    clusters_.push_back(std::move(c));
  }
  return forget();
}

std::vector<std::uint64_t> StaticMemory::forget() { return forget_clusters(clusters_, config_.max_clusters); }

std::size_t StaticMemory::trace_count() const {
  std::size_t n = 0;
  for (const auto& c : clusters_) n += c.members.size();
  return n;
}

std::vector<MemoryTrace> StaticMemory::traces() const {
  std::vector<MemoryTrace> out;
  out.reserve(trace_count());
  for (const auto& c : clusters_) out.insert(out.end(), c.members.begin(), c.members.end());
  return out;
}

MemoryTrace* StaticMemory::find(std::uint64_t trace_id) {
  for (auto& c : clusters_)
    for (auto& m : c.members)
      if (m.id == trace_id) return &m;
  return nullptr;
}

void StaticMemory::restore(std::vector<Cluster> clusters, std::uint64_t next_cluster_id) {
  clusters_ = std::move(clusters);
  next_cluster_id_ = next_cluster_id;
}

Vec importance_weights(std::span<const MemoryTrace> traces, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error(ErrorKind::invalid_argument, "gamma must be in [0, 1]");
  Vec w(traces.size());
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const double decay = traces[i].replay_count == 0 ? 1.0 : std::pow(gamma, static_cast<double>(traces[i].replay_count));
    w[i] = decay * traces[i].reward;
  }
  return w;
}

DynamicMemory::DynamicMemory(DynamicMemoryConfig config) : config_(config) {
  if (config_.capacity == 0) throw Error(ErrorKind::invalid_config, "dynamic memory capacity must be >= 1");
  if (!(config_.gamma >= 0.0 && config_.gamma <= 1.0)) throw Error(ErrorKind::invalid_config, "gamma must be in [0, 1]");
}

void DynamicMemory::write_back(StaticMemory& static_memory) const {
  for (const auto& t : traces_)
    if (MemoryTrace* original = static_memory.find(t.id))
      original->replay_count = std::max(original->replay_count, t.replay_count);
}

void DynamicMemory::refresh(StaticMemory& static_memory, std::uint64_t seed) {
  if (static_memory.empty()) throw Error(ErrorKind::empty_memory, "cannot refresh from empty static memory");
  write_back(static_memory);
  std::vector<MemoryTrace> pool = static_memory.traces();
  if (pool.size() <= config_.capacity) {
    traces_ = std::move(pool);
    return;
  }
  Vec weights = importance_weights(pool, config_.gamma);
  std::vector<bool> taken(pool.size(), false);
  Rng rng(seed);
  std::vector<std::size_t> picked;
  picked.reserve(config_.capacity);
  for (std::size_t draw = 0; draw < config_.capacity; ++draw) {
    // Sequential draws without replacement. Once the positive mass is
    // exhausted, fall back to uniform over what remains.
    double mass = 0.0;
    for (std::size_t i = 0; i < pool.size(); ++i)
      if (!taken[i]) mass += weights[i];
    Vec w(pool.size(), 0.0);
    for (std::size_t i = 0; i < pool.size(); ++i)
      if (!taken[i]) w[i] = mass > 0.0 ? weights[i] : 1.0;
    const std::size_t i = draw_weighted(w, rng);
    taken[i] = true;
    picked.push_back(i);
  }
  std::sort(picked.begin(), picked.end());
  traces_.clear();
  traces_.reserve(picked.size());
  for (std::size_t i : picked) traces_.push_back(pool[i]);
}

std::vector<std::size_t> DynamicMemory::sample_replay(std::size_t batch, std::uint64_t seed) {
  std::vector<std::size_t> out;
  if (traces_.empty() || batch == 0) return out;
  const Vec weights = importance_weights(traces_, config_.gamma);
  Rng rng(seed);
  out.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) out.push_back(draw_weighted(weights, rng));
  for (std::size_t i : out) ++traces_[i].replay_count;
  return out;
}

}  // namespace bioslam

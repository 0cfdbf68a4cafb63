#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bioslam/types.hpp"

namespace bioslam {

struct KMeansResult {
  std::vector<std::size_t> assignments;
  std::vector<Vec> centroids;
  /// Within-cluster sum of squares after each Lloyd iteration.
  std::vector<double> wcss_history;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Lloyd's algorithm from k-means++ seeding. K is clamped to the number of
/// points. A cluster that goes empty is reseeded with the point farthest from
/// its current centroid, so every returned cluster is non-empty.
KMeansResult kmeans(std::span<const Vec> points, std::size_t k, std::size_t max_iters, std::uint64_t seed);

double within_cluster_ss(std::span<const Vec> points, std::span<const std::size_t> assignments,
                         std::span<const Vec> centroids);

struct Cluster {
  std::uint64_t id = 0;
  std::vector<MemoryTrace> members;
  FeatureSpatialCode centroid;
  std::int64_t creation_step = 0;

  double mean_reward() const;
  void recompute_centroid(double spatial_weight);

  friend bool operator==(const Cluster&, const Cluster&) = default;
};

/// Caps a cluster at `max_members`: keeps the highest-reward trace, then adds
/// members by farthest-point sampling over feature-spatial codes. Kept members
/// stay in their original order.
Cluster downsample_cluster(Cluster cluster, std::size_t max_members, double spatial_weight);

/// Removes clusters until at most `max_clusters` remain. Each round takes the
/// closest centroid pair (first in (i, j) scan order on ties) and drops the
/// member with the lower mean reward, then the older one, then the lower
/// index. Returns the ids of removed clusters in removal order.
std::vector<std::uint64_t> forget_clusters(std::vector<Cluster>& clusters, std::size_t max_clusters);

struct StaticMemoryConfig {
  std::size_t max_clusters = 256;   // K_max
  std::size_t max_members = 8;      // N_max
  double spatial_weight = 0.1;      // lambda, per meter
  std::size_t max_new_clusters = 64;
  std::size_t kmeans_iters = 50;
};

class StaticMemory {
 public:
  StaticMemory() = default;
  explicit StaticMemory(StaticMemoryConfig config);

  /// min(ceil(n / N_max), max_new_clusters)
  std::size_t new_cluster_count(std::size_t trace_count) const;

  /// Clusters the new traces, downsamples, appends and forgets. Returns the
  /// ids of forgotten clusters.
  std::vector<std::uint64_t> consolidate(std::span<const MemoryTrace> traces, std::size_t k_new, std::int64_t step,
                                         std::uint64_t seed);
  /// Stores every trace as its own cluster (clustering ablation); forgetting
  /// still bounds the count.
  std::vector<std::uint64_t> consolidate_singletons(std::span<const MemoryTrace> traces, std::int64_t step);
  std::vector<std::uint64_t> forget();

  const StaticMemoryConfig& config() const { return config_; }
  const std::vector<Cluster>& clusters() const { return clusters_; }
  std::size_t trace_count() const;
  bool empty() const { return clusters_.empty(); }

  /// All member traces, cluster by cluster.
  std::vector<MemoryTrace> traces() const;
  MemoryTrace* find(std::uint64_t trace_id);

  std::uint64_t next_cluster_id() const { return next_cluster_id_; }
  void restore(std::vector<Cluster> clusters, std::uint64_t next_cluster_id);

 private:
  StaticMemoryConfig config_;
  std::vector<Cluster> clusters_;
  std::uint64_t next_cluster_id_ = 0;
};

/// w_k = gamma^n_k * R_k with 0^0 = 1.
Vec importance_weights(std::span<const MemoryTrace> traces, double gamma);

struct DynamicMemoryConfig {
  std::size_t capacity = 128;  // B_d
  double gamma = 0.9;
};

class DynamicMemory {
 public:
  DynamicMemory() = default;
  explicit DynamicMemory(DynamicMemoryConfig config);

  /// Writes replay counts of the current copies back to their static
  /// originals, then redraws the buffer from static memory without
  /// replacement, proportional to importance weight (uniform when all weights
  /// are zero). Throws Error(empty_memory) if static memory is empty.
  void refresh(StaticMemory& static_memory, std::uint64_t seed);

  /// Draws `batch` indices with replacement proportional to importance
  /// weight; each draw increments that trace's replay count. Empty memory
  /// yields an empty batch.
  std::vector<std::size_t> sample_replay(std::size_t batch, std::uint64_t seed);

  /// Pushes replay counts into static originals without redrawing.
  void write_back(StaticMemory& static_memory) const;

  const DynamicMemoryConfig& config() const { return config_; }
  const std::vector<MemoryTrace>& traces() const { return traces_; }
  std::size_t size() const { return traces_.size(); }
  bool empty() const { return traces_.empty(); }

  void restore(std::vector<MemoryTrace> traces) { traces_ = std::move(traces); }

 private:
  DynamicMemoryConfig config_;
  std::vector<MemoryTrace> traces_;
};

}  // namespace bioslam

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace bioslam {

using DomainId = std::uint32_t;
using Vec = std::vector<double>;

/// Planar position in meters.
struct Pose {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Pose&, const Pose&) = default;
};

double distance(const Pose& a, const Pose& b);

/// One place sample delivered by the stream. `signal` is the ring signal of
/// length W; `place` indexes the generating world place.
struct Observation {
  std::uint64_t id = 0;
  DomainId domain = 0;
  std::size_t place = 0;
  Pose pose;
  Vec signal;
};

struct LatentCode {
  Vec z;

  friend bool operator==(const LatentCode&, const LatentCode&) = default;
};

/// Unit-norm place descriptor. Only constructible through `from_raw`, which
/// renormalizes.
class Descriptor {
 public:
  Descriptor() = default;

  /// Throws Error(degenerate_descriptor) when `raw` is exactly zero.
  static Descriptor from_raw(Vec raw);

  std::span<const double> values() const { return f_; }
  std::size_t size() const { return f_.size(); }
  double operator[](std::size_t i) const { return f_[i]; }

 private:
  Vec f_;
};

struct RewardBreakdown {
  double external = 0.0;
  double internal = 0.0;
  double total = 0.0;
};

struct MemoryTrace {
  LatentCode z;
  Pose pose;
  double reward = 0.0;
  std::uint64_t replay_count = 0;
  std::int64_t birth_step = 0;
  DomainId domain = 0;
  std::uint32_t segment = 0;
  std::uint64_t id = 0;  // observation id the trace was built from

  friend bool operator==(const MemoryTrace&, const MemoryTrace&) = default;
};

/// c = [z ; lambda*x, lambda*y]
struct FeatureSpatialCode {
  Vec c;

  friend bool operator==(const FeatureSpatialCode&, const FeatureSpatialCode&) = default;
};

FeatureSpatialCode make_code(const MemoryTrace& trace, double spatial_weight);

/// Euclidean distance; throws Error(dimension_mismatch) on unequal sizes.
double code_distance(const FeatureSpatialCode& a, const FeatureSpatialCode& b);
double euclidean(std::span<const double> a, std::span<const double> b);
double squared_euclidean(std::span<const double> a, std::span<const double> b);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

/// Returns v / ||v||; throws Error(degenerate_descriptor) when v is zero.
Vec normalize(std::span<const double> v);

bool all_finite(std::span<const double> v);

}  // namespace bioslam

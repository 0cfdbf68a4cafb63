#include "bioslam/types.hpp"

#include <cmath>
#include <string>

#include "bioslam/error.hpp"

namespace bioslam {

double distance(const Pose& a, const Pose& b) { return std::hypot(a.x - b.x, a.y - b.y); }

Descriptor Descriptor::from_raw(Vec raw) {
  Descriptor d;
  d.f_ = normalize(raw);
  return d;
}

FeatureSpatialCode make_code(const MemoryTrace& trace, double spatial_weight) {
  if (!(spatial_weight > 0.0)) throw Error(ErrorKind::invalid_argument, "spatial weight must be positive");
  FeatureSpatialCode code;
  code.c.reserve(trace.z.z.size() + 2);
  code.c.assign(trace.z.z.begin(), trace.z.z.end());
  code.c.push_back(spatial_weight * trace.pose.x);
  code.c.push_back(spatial_weight * trace.pose.y);
  return code;
}

double squared_euclidean(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::dimension_mismatch,
                "vector sizes " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double euclidean(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_euclidean(a, b));
}

double code_distance(const FeatureSpatialCode& a, const FeatureSpatialCode& b) { return euclidean(a.c, b.c); }

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::dimension_mismatch, "dot of unequal sizes");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

Vec normalize(std::span<const double> v) {
  const double n = l2_norm(v);
  if (n == 0.0) throw Error(ErrorKind::degenerate_descriptor, "cannot normalize a zero vector");
  if (!std::isfinite(n)) throw Error(ErrorKind::non_finite, "cannot normalize a non-finite vector");
  Vec out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace bioslam

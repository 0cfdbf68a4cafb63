#include "bioslam/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bioslam/error.hpp"

namespace bioslam {

namespace {

// Reference indices sorted by descriptor distance to `query`, ties by index.
std::vector<std::size_t> ranked(const LocatedDescriptor& query, std::span<const LocatedDescriptor> references,
                                std::size_t depth) {
  std::vector<double> d(references.size());
  for (std::size_t r = 0; r < references.size(); ++r)
    d[r] = squared_euclidean(query.descriptor.values(), references[r].descriptor.values());
  std::vector<std::size_t> order(references.size());
  std::iota(order.begin(), order.end(), 0);
  depth = std::min(depth, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(depth), order.end(),
                    [&](std::size_t a, std::size_t b) { return d[a] < d[b] || (d[a] == d[b] && a < b); });
  order.resize(depth);
  return order;
}

void check_retrieval(std::span<const LocatedDescriptor> queries, std::span<const LocatedDescriptor> references) {
  if (queries.empty()) throw Error(ErrorKind::invalid_argument, "recall needs at least one query");
  if (references.empty()) throw Error(ErrorKind::invalid_argument, "recall needs at least one reference");
}

}  // namespace

double recall_at_k(std::span<const LocatedDescriptor> queries, std::span<const LocatedDescriptor> references,
                   std::size_t k, double match_radius) {
  check_retrieval(queries, references);
  if (k == 0) throw Error(ErrorKind::invalid_argument, "recall@k needs k >= 1");
  std::size_t hits = 0;
  for (const auto& q : queries) {
    for (std::size_t r : ranked(q, references, k)) {
      if (distance(q.pose, references[r].pose) <= match_radius) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(queries.size());
}

std::array<double, kRecallDepth> recall_curve(std::span<const LocatedDescriptor> queries,
                                              std::span<const LocatedDescriptor> references, double match_radius) {
  check_retrieval(queries, references);
  std::array<std::size_t, kRecallDepth> hits{};
  for (const auto& q : queries) {
    const auto order = ranked(q, references, kRecallDepth);
    std::size_t first = kRecallDepth;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      if (distance(q.pose, references[order[rank]].pose) <= match_radius) {
        first = rank;
        break;
      }
    }
    for (std::size_t k = first; k < kRecallDepth; ++k) ++hits[k];
  }
  std::array<double, kRecallDepth> out{};
  for (std::size_t k = 0; k < kRecallDepth; ++k)
    out[k] = static_cast<double>(hits[k]) / static_cast<double>(queries.size());
  return out;
}

double weighted_recall(const std::array<double, kRecallDepth>& recalls) {
  double wr = 0.0;
  for (std::size_t k = 0; k < kRecallDepth; ++k) {
    if (recalls[k] < 0.0 || recalls[k] > 1.0) throw Error(ErrorKind::invalid_argument, "recall outside [0, 1]");
    wr += kRecallWeights[k] * recalls[k];
  }
  return wr;
}

Matrix similarity_matrix(std::span<const Descriptor> references, std::span<const Descriptor> queries) {
  Matrix m(references.size(), queries.size());
  for (std::size_t i = 0; i < references.size(); ++i)
    for (std::size_t j = 0; j < queries.size(); ++j)
      m(i, j) = std::clamp(dot(references[i].values(), queries[j].values()), -1.0, 1.0);
  return m;
}

std::vector<ConfidencePoint> confidence_map(std::span<const LocatedDescriptor> references,
                                            std::span<const LocatedDescriptor> queries) {
  if (references.size() != queries.size())
    throw Error(ErrorKind::dimension_mismatch, "confidence map needs references and queries paired by place");
  std::vector<ConfidencePoint> out;
  out.reserve(references.size());
  for (std::size_t i = 0; i < references.size(); ++i) {
    const double c = dot(references[i].descriptor.values(), queries[i].descriptor.values());
    out.push_back({references[i].pose, std::clamp(c, -1.0, 1.0)});
  }
  return out;
}

Projection2d pca_2d(std::span<const Vec> points) {
  if (points.size() < 3) throw Error(ErrorKind::invalid_argument, "pca_2d needs at least 3 points");
  const std::size_t dim = points.front().size();
  if (dim < 2) throw Error(ErrorKind::invalid_argument, "pca_2d needs at least 2 dimensions");
  for (const auto& p : points)
    if (p.size() != dim) throw Error(ErrorKind::dimension_mismatch, "pca_2d points differ in size");

  const double n = static_cast<double>(points.size());
  Vec mean(dim, 0.0);
  for (const auto& p : points)
    for (std::size_t d = 0; d < dim; ++d) mean[d] += p[d];
  for (double& v : mean) v /= n;

  Matrix cov(dim, dim);
  for (const auto& p : points) {
    for (std::size_t a = 0; a < dim; ++a) {
      const double da = p[a] - mean[a];
      for (std::size_t b = 0; b < dim; ++b) cov(a, b) += da * (p[b] - mean[b]);
    }
  }
  for (double& v : cov.data) v /= n - 1.0;

  Projection2d out;
  Matrix work = cov;
  for (std::size_t axis = 0; axis < 2; ++axis) {
    // Power iteration from a fixed dense start vector.
    Vec v(dim);
    for (std::size_t d = 0; d < dim; ++d) v[d] = 1.0 + 0.01 * static_cast<double>(d);
    v = normalize(v);
    double lambda = 0.0;
    Vec next(dim);
    for (int it = 0; it < 100000; ++it) {
      std::fill(next.begin(), next.end(), 0.0);
      for (std::size_t a = 0; a < dim; ++a)
        for (std::size_t b = 0; b < dim; ++b) next[a] += work(a, b) * v[b];
      const double norm = l2_norm(next);
      if (norm == 0.0) {
        lambda = 0.0;
        break;
      }
      for (double& x : next) x /= norm;
      double delta = 0.0;
      for (std::size_t d = 0; d < dim; ++d) delta = std::max(delta, std::abs(std::abs(next[d]) - std::abs(v[d])));
      const double flip = dot(next, v) < 0.0 ? -1.0 : 1.0;
      for (std::size_t d = 0; d < dim; ++d) v[d] = flip * next[d];
      lambda = norm;
      if (delta < 1e-10) break;
    }
    std::size_t big = 0;
    for (std::size_t d = 1; d < dim; ++d)
      if (std::abs(v[d]) > std::abs(v[big])) big = d;
    if (v[big] < 0.0)
      for (double& x : v) x = -x;
    out.axes[axis] = v;
    out.variances[axis] = lambda;
    for (std::size_t a = 0; a < dim; ++a)
      for (std::size_t b = 0; b < dim; ++b) work(a, b) -= lambda * v[a] * v[b];
  }

  out.points.reserve(points.size());
  for (const auto& p : points) {
    std::array<double, 2> xy{};
    for (std::size_t axis = 0; axis < 2; ++axis)
      for (std::size_t d = 0; d < dim; ++d) xy[axis] += (p[d] - mean[d]) * out.axes[axis][d];
    out.points.push_back(xy);
  }
  return out;
}

std::vector<RetentionSummary> retention_and_adaptation(std::span<const WrSample> samples,
                                                       std::span<const SegmentSpan> spans) {
  std::vector<RetentionSummary> out;
  for (const auto& span : spans) {
    RetentionSummary s;
    s.segment = span.segment;
    const WrSample* at_end = nullptr;
    const WrSample* last = nullptr;
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& w : samples) {
      if (w.segment != span.segment) continue;
      if (last == nullptr || w.epoch >= last->epoch) last = &w;
      if (w.epoch <= span.end_epoch && (at_end == nullptr || w.epoch >= at_end->epoch)) at_end = &w;
      if (w.epoch >= span.start_epoch && w.epoch <= span.end_epoch) best = std::max(best, w.wr);
    }
    if (at_end != nullptr && last != nullptr) s.retention = last->wr - at_end->wr;
    if (std::isfinite(best)) {
      const double target = 0.9 * best;
      std::uint64_t reached = span.end_epoch;
      for (const auto& w : samples) {
        if (w.segment != span.segment || w.epoch < span.start_epoch || w.epoch > span.end_epoch) continue;
        if (w.wr >= target && w.epoch < reached) reached = w.epoch;
      }
      s.adaptation_epochs = static_cast<std::int64_t>(reached - span.start_epoch);
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace bioslam

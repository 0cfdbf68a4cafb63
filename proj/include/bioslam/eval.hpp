#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bioslam/matrix.hpp"
#include "bioslam/types.hpp"

namespace bioslam {

inline constexpr std::size_t kRecallDepth = 6;

/// Weights of the top-6 weighted recall: 0.5 for recall@1, 0.1 for the rest.
inline constexpr std::array<double, kRecallDepth> kRecallWeights = {0.5, 0.1, 0.1, 0.1, 0.1, 0.1};

struct RecallReport {
  std::array<double, kRecallDepth> recall{};  // recall@1..6
  double weighted = 0.0;
  std::size_t segment = 0;
  DomainId domain = 0;
  std::uint64_t epoch = 0;
};

/// A descriptor with the pose it was observed at.
struct LocatedDescriptor {
  Descriptor descriptor;
  Pose pose;
};

/// Fraction of queries whose k nearest references (Euclidean on descriptors,
/// ties to the lower reference index) include one within `match_radius`.
double recall_at_k(std::span<const LocatedDescriptor> queries, std::span<const LocatedDescriptor> references,
                   std::size_t k, double match_radius = 3.0);

/// recall@1..6 in one retrieval pass.
std::array<double, kRecallDepth> recall_curve(std::span<const LocatedDescriptor> queries,
                                              std::span<const LocatedDescriptor> references,
                                              double match_radius = 3.0);

double weighted_recall(const std::array<double, kRecallDepth>& recalls);

/// M(i, j) = cos(reference_i, query_j).
Matrix similarity_matrix(std::span<const Descriptor> references, std::span<const Descriptor> queries);

struct ConfidencePoint {
  Pose pose;
  double score = 0.0;
};

/// Cosine similarity between the reference and query descriptor of each place.
std::vector<ConfidencePoint> confidence_map(std::span<const LocatedDescriptor> references,
                                            std::span<const LocatedDescriptor> queries);

struct Projection2d {
  std::vector<std::array<double, 2>> points;
  std::array<Vec, 2> axes;           // unit principal directions
  std::array<double, 2> variances{};  // eigenvalues of the sample covariance
};

/// Mean-centred projection onto the top two principal directions, found by
/// power iteration with deflation. Each axis is signed so its largest
/// magnitude coordinate is positive. Throws for fewer than 3 points.
Projection2d pca_2d(std::span<const Vec> points);

/// One WR sample of one segment at one epoch, as read back from metrics.
struct WrSample {
  std::uint64_t epoch = 0;
  std::size_t segment = 0;
  double wr = 0.0;
};

/// Epoch bounds of each trained segment: [start, end].
struct SegmentSpan {
  std::size_t segment = 0;
  std::uint64_t start_epoch = 0;
  std::uint64_t end_epoch = 0;
};

struct RetentionSummary {
  std::size_t segment = 0;
  /// WR at the last recorded epoch minus WR when training moved past the segment.
  double retention = 0.0;
  /// Epochs after the segment started until its WR first reached 90% of its
  /// within-segment maximum; -1 if the segment has no samples in its span.
  std::int64_t adaptation_epochs = -1;
};

std::vector<RetentionSummary> retention_and_adaptation(std::span<const WrSample> samples,
                                                       std::span<const SegmentSpan> spans);

}  // namespace bioslam

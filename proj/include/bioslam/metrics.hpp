#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "bioslam/eval.hpp"
#include "bioslam/lifelong.hpp"

namespace bioslam {

/// JSONL rows for one epoch: one "eval" row per evaluated segment, nothing
/// on epochs without evaluation. Memory composition and per-group mean
/// rewards are omitted for strategies without dual memory.
std::vector<std::string> eval_rows(const EpochMetrics& m, Strategy strategy, std::uint64_t seed);

/// One "segment" row with the segment's epoch span and reward statistics.
std::string segment_row(const SegmentRewardSummary& s, Strategy strategy, std::uint64_t seed);

/// Append-only JSONL writer. Opening with `keep_rows` truncates the file to
/// its first `keep_rows` lines, which is how a resumed run drops rows written
/// after its snapshot.
class MetricsWriter {
 public:
  MetricsWriter(const std::string& path, std::uint64_t keep_rows);

  void write(const std::string& row);
  std::uint64_t rows() const { return rows_; }

 private:
  std::ofstream out_;
  std::uint64_t rows_ = 0;
};

struct EvalRow {
  std::uint64_t epoch = 0;
  std::size_t segment = 0;
  std::size_t train_segment = 0;
  double wr = 0.0;
};

struct SegmentRow {
  std::size_t segment = 0;
  std::uint64_t start_epoch = 0;
  std::uint64_t end_epoch = 0;
};

struct MetricsLog {
  std::vector<EvalRow> evals;
  std::vector<SegmentRow> segments;
};

/// Parses a metrics file; Error(corrupt_file) names the offending line.
MetricsLog read_metrics(const std::string& path);

std::vector<WrSample> wr_samples(const MetricsLog& log);
std::vector<SegmentSpan> segment_spans(const MetricsLog& log);

}  // namespace bioslam

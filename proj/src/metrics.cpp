#include "bioslam/metrics.hpp"

#include <filesystem>
#include <sstream>

#include "bioslam/error.hpp"
#include "json.hpp"

namespace bioslam {

namespace {

using ojson = nlohmann::ordered_json;

ojson row_header(const char* type, Strategy strategy, std::uint64_t seed) {
  ojson j;
  j["type"] = type;
  j["strategy"] = std::string(to_string(strategy));
  j["seed"] = seed;
  return j;
}

}  // namespace

std::vector<std::string> eval_rows(const EpochMetrics& m, Strategy strategy, std::uint64_t seed) {
  std::vector<std::string> out;
  out.reserve(m.recalls.size());
  for (const auto& r : m.recalls) {
    ojson j = row_header("eval", strategy, seed);
    j["epoch"] = m.epoch;
    j["segment"] = r.segment;
    j["domain"] = r.domain;
    j["train_segment"] = m.train_segment;
    j["segment_end"] = m.segment_end;
    j["wr"] = r.weighted;
    for (std::size_t k = 0; k < kRecallDepth; ++k) j["recall@" + std::to_string(k + 1)] = r.recall[k];
    j["loss_total"] = m.loss.total;
    j["loss_loc_real"] = m.loss.loc_real;
    j["loss_loc_replay"] = m.loss.loc_replay;
    j["loss_rec"] = m.loss.rec;
    if (uses_dual_memory(strategy)) {
      j["composition"] = m.dynamic_composition;
      j["mean_reward"] = m.group_mean_reward;
    }
    out.push_back(j.dump());
  }
  return out;
}

std::string segment_row(const SegmentRewardSummary& s, Strategy strategy, std::uint64_t seed) {
  ojson j = row_header("segment", strategy, seed);
  j["segment"] = s.segment;
  j["domain"] = s.domain;
  j["start_epoch"] = s.start_epoch;
  j["end_epoch"] = s.end_epoch;
  j["mean_external"] = s.mean_external;
  j["mean_internal"] = s.mean_internal;
  j["mean_total"] = s.mean_total;
  if (uses_dual_memory(strategy)) {
    j["static_clusters"] = s.static_clusters;
    j["static_traces"] = s.static_traces;
    j["forgotten_clusters"] = s.forgotten_clusters;
    j["mean_reward"] = s.group_mean_reward;
    j["reward_ratio"] = s.reward_ratio;
  }
  return j.dump();
}

MetricsWriter::MetricsWriter(const std::string& path, std::uint64_t keep_rows) {
  std::string kept;
  if (keep_rows > 0) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot reopen metrics '" + path + "'");
    std::string line;
    while (rows_ < keep_rows && std::getline(in, line)) {
      kept += line;
      kept += '\n';
      ++rows_;
    }
    if (rows_ < keep_rows)
      throw Error(ErrorKind::corrupt_file, "metrics '" + path + "' has " + std::to_string(rows_) +
                                               " rows but the snapshot expects " + std::to_string(keep_rows));
  }
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw Error(ErrorKind::io, "cannot write metrics '" + path + "'");
  out_ << kept;
  out_.flush();
}

void MetricsWriter::write(const std::string& row) {
  out_ << row << '\n';
  out_.flush();
  if (!out_) throw Error(ErrorKind::io, "metrics write failed");
  ++rows_;
}

MetricsLog read_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open metrics '" + path + "'");
  MetricsLog log;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "eval") {
        log.evals.push_back({j.at("epoch").get<std::uint64_t>(), j.at("segment").get<std::size_t>(),
                             j.at("train_segment").get<std::size_t>(), j.at("wr").get<double>()});
      } else if (type == "segment") {
        log.segments.push_back({j.at("segment").get<std::size_t>(), j.at("start_epoch").get<std::uint64_t>(),
                                j.at("end_epoch").get<std::uint64_t>()});
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::corrupt_file, "metrics '" + path + "' line " + std::to_string(n) + ": " + e.what());
    }
  }
  return log;
}

std::vector<WrSample> wr_samples(const MetricsLog& log) {
  std::vector<WrSample> out;
  out.reserve(log.evals.size());
  for (const auto& e : log.evals) out.push_back({e.epoch, e.segment, e.wr});
  return out;
}

std::vector<SegmentSpan> segment_spans(const MetricsLog& log) {
  std::vector<SegmentSpan> out;
  out.reserve(log.segments.size());
  for (const auto& s : log.segments) out.push_back({s.segment, s.start_epoch, s.end_epoch});
  return out;
}

}  // namespace bioslam

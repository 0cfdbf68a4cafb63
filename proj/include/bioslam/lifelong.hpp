#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "bioslam/eval.hpp"
#include "bioslam/memory.hpp"
#include "bioslam/model.hpp"
#include "bioslam/synthworld.hpp"

namespace bioslam {

enum class Strategy : std::uint8_t {
  bioslam,
  bioslam_no_ex,
  bioslam_no_in,
  bioslam_no_cluster,
  bioslam_no_decay,
  uniform_replay,
  naive,
  raw_rehearsal,
};

inline constexpr std::array<Strategy, 8> kAllStrategies = {
    Strategy::bioslam,          Strategy::bioslam_no_ex,  Strategy::bioslam_no_in, Strategy::bioslam_no_cluster,
    Strategy::bioslam_no_decay, Strategy::uniform_replay, Strategy::naive,         Strategy::raw_rehearsal};

std::string_view to_string(Strategy s);
/// Throws Error(invalid_config) for an unknown tag.
Strategy parse_strategy(std::string_view tag);

/// True for every strategy that keeps static and dynamic memory.
bool uses_dual_memory(Strategy s);

struct LifelongConfig {
  ModelDims dims;
  TrainerHyper hyper;
  TripletConfig triplets;
  StaticMemoryConfig static_memory;
  DynamicMemoryConfig dynamic_memory;
  Strategy strategy = Strategy::bioslam;
  std::uint64_t seed = 0;
  std::size_t eval_interval = 5;
  std::size_t refresh_interval = 10;
  double match_radius = 3.0;

  void validate() const;
};

/// Raw-feature buffer of the rehearsal baseline (reservoir over every
/// observation seen).
struct RehearsalEntry {
  Vec feature;
  Pose pose;
  DomainId domain = 0;
  std::uint32_t segment = 0;
  std::uint64_t id = 0;

  friend bool operator==(const RehearsalEntry&, const RehearsalEntry&) = default;
};

struct RehearsalBuffer {
  std::vector<RehearsalEntry> entries;
  std::uint64_t seen = 0;

  friend bool operator==(const RehearsalBuffer&, const RehearsalBuffer&) = default;
};

struct RunState {
  ModelParams params;
  StaticMemory static_memory;
  DynamicMemory dynamic_memory;
  RehearsalBuffer rehearsal;
  std::uint64_t master_seed = 0;
  std::uint64_t epoch = 0;             // global epochs completed
  std::uint64_t segment = 0;           // segment in progress, or next to start
  std::uint64_t epoch_in_segment = 0;  // epochs completed in `segment`
  std::uint64_t segment_start_epoch = 0;
  double last_epoch_loss = 0.0;        // for early stopping; valid once epoch_in_segment > 0
  std::uint64_t stall_epochs = 0;
  std::uint64_t initial_evaluated = 0;  // 1 once the epoch-0 evaluation was emitted
  std::uint64_t metrics_rows = 0;      // rows the metrics sink had written at this state
};

struct SegmentRewardSummary {
  std::size_t segment = 0;
  DomainId domain = 0;
  std::uint64_t start_epoch = 0;
  std::uint64_t end_epoch = 0;
  double mean_external = 0.0;
  double mean_internal = 0.0;
  double mean_total = 0.0;
  std::size_t static_clusters = 0;
  std::size_t static_traces = 0;
  std::size_t forgotten_clusters = 0;
  Vec group_mean_reward;  // per scheduled segment, over static memory
  Vec reward_ratio;       // normalized group_mean_reward
};

struct EpochMetrics {
  std::uint64_t epoch = 0;  // global, after this epoch
  std::size_t train_segment = 0;
  std::size_t steps = 0;
  JointLoss loss;  // epoch means
  bool segment_end = false;
  std::vector<RecallReport> recalls;  // empty on epochs without evaluation
  /// Share of dynamic-memory traces per scheduled segment. Empty for
  /// strategies without dual memory.
  Vec dynamic_composition;
  Vec group_mean_reward;
};

/// Receives progress; returning false from on_epoch stops the run after that
/// epoch (the state is then consistent and can be snapshotted).
struct RunObserver {
  std::function<bool(const EpochMetrics&, const RunState&)> on_epoch;
  std::function<void(const SegmentRewardSummary&)> on_segment_end;
};

class LifelongTrainer {
 public:
  LifelongTrainer(const World& world, Schedule schedule, LifelongConfig config);

  RunState initial_state() const;

  /// Trains every remaining segment. Returns true when the schedule is
  /// complete, false when the observer stopped the run.
  bool run(RunState& state, const RunObserver& observer) const;

  /// Trains one segment from `state.epoch_in_segment` on. Returns false if
  /// the observer stopped the run mid-segment.
  bool train_segment(RunState& state, const Segment& segment, const RunObserver& observer) const;

  /// recall@1..6 and WR on the held-out renders of every scheduled segment.
  std::vector<RecallReport> evaluate(const ModelParams& params, std::uint64_t epoch) const;

  /// Held-out reference and query descriptors of one segment.
  std::pair<std::vector<LocatedDescriptor>, std::vector<LocatedDescriptor>> holdout_descriptors(
      const ModelParams& params, std::size_t segment) const;

  const LifelongConfig& config() const { return config_; }
  const Schedule& schedule() const { return schedule_; }
  const World& world() const { return *world_; }

  /// Observation ids rendered for training by this trainer (testing hook for
  /// the one-pass property).
  const std::vector<std::uint64_t>& rendered_ids() const { return rendered_ids_; }

 private:
  struct HoldoutSet {
    std::vector<Vec> reference_features;
    std::vector<Vec> query_features;
    std::vector<Pose> poses;
  };

  void end_segment(RunState& state, const Segment& segment, const std::vector<Vec>& features,
                   const RunObserver& observer) const;
  EpochMetrics make_metrics(const RunState& state, std::size_t segment, std::size_t steps, const JointLoss& loss,
                            bool segment_end, bool evaluate_now) const;

  const World* world_;
  Schedule schedule_;
  LifelongConfig config_;
  std::vector<HoldoutSet> holdout_;
  mutable std::vector<std::uint64_t> rendered_ids_;
};

struct RunResult {
  std::vector<EpochMetrics> epochs;
  std::vector<SegmentRewardSummary> segments;
  RunState state;
};

/// Convenience driver: fresh state, full schedule, metrics kept in memory.
RunResult run_schedule(const World& world, const Schedule& schedule, const LifelongConfig& config);

/// Mean WR over the given segments from one evaluation row set.
double mean_wr(std::span<const RecallReport> reports, std::size_t segment_count);

}  // namespace bioslam

#include "bioslam/lifelong.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bioslam/error.hpp"
#include "bioslam/rewards.hpp"
#include "bioslam/rng.hpp"

namespace bioslam {

namespace {

constexpr std::array<std::string_view, 8> kStrategyNames = {
    "bioslam",          "bioslam_no_ex",  "bioslam_no_in", "bioslam_no_cluster",
    "bioslam_no_decay", "uniform_replay", "naive",         "raw_rehearsal"};

DynamicMemoryConfig dynamic_config_for(const LifelongConfig& config) {
  DynamicMemoryConfig d = config.dynamic_memory;
  if (config.strategy == Strategy::bioslam_no_decay || config.strategy == Strategy::uniform_replay) d.gamma = 1.0;
  return d;
}

double reward_for(Strategy s, const RewardBreakdown& r) {
  switch (s) {
    case Strategy::bioslam_no_ex: return r.internal;
    case Strategy::bioslam_no_in: return r.external;
    case Strategy::uniform_replay: return 1.0;
    default: return r.total;
  }
}

InputRef feature_ref(const Vec& v) { return {InputKind::feature, v}; }
InputRef latent_ref(const Vec& v) { return {InputKind::latent, v}; }

}  // namespace

std::string_view to_string(Strategy s) { return kStrategyNames[static_cast<std::size_t>(s)]; }

Strategy parse_strategy(std::string_view tag) {
  for (std::size_t i = 0; i < kStrategyNames.size(); ++i)
    if (kStrategyNames[i] == tag) return static_cast<Strategy>(i);
  throw Error(ErrorKind::invalid_config, "unknown strategy '" + std::string(tag) + "'");
}

bool uses_dual_memory(Strategy s) { return s != Strategy::naive && s != Strategy::raw_rehearsal; }

void LifelongConfig::validate() const {
  hyper.validate();
  if (!(triplets.pos_radius >= 0.0) || !(triplets.neg_radius > triplets.pos_radius))
    throw Error(ErrorKind::invalid_config, "need 0 <= pos_radius < neg_radius");
  if (triplets.n_pos == 0 || triplets.n_neg == 0) throw Error(ErrorKind::invalid_config, "n_pos and n_neg must be >= 1");
  if (eval_interval == 0) throw Error(ErrorKind::invalid_config, "eval_interval must be >= 1");
  if (!(match_radius >= 0.0)) throw Error(ErrorKind::invalid_config, "match_radius must be >= 0");
  StaticMemory{static_memory};
  DynamicMemory{dynamic_memory};
}

LifelongTrainer::LifelongTrainer(const World& world, Schedule schedule, LifelongConfig config)
    : world_(&world), schedule_(std::move(schedule)), config_(config) {
  config_.validate();
  validate_schedule(schedule_, world.config);
  if (config_.dims.ring_width != world.config.ring_width)
    throw Error(ErrorKind::invalid_config, "model ring width does not match world ring width");

  holdout_.reserve(schedule_.size());
  for (std::size_t s = 0; s < schedule_.size(); ++s) {
    HoldoutSet h;
    const ScheduleEntry& entry = schedule_[s];
    for (const auto& range : entry.ranges) {
      for (std::size_t p = range.first; p < range.last; ++p) {
        const auto ref = render(world, entry.domain, p, derive_seed(config_.seed, {seed_tag::eval_reference, s, p}));
        const auto qry = render(world, entry.domain, p, derive_seed(config_.seed, {seed_tag::eval_query, s, p}));
        h.reference_features.push_back(invariant_transform(ref.signal));
        h.query_features.push_back(invariant_transform(qry.signal));
        h.poses.push_back(ref.pose);
      }
    }
    holdout_.push_back(std::move(h));
  }
}

RunState LifelongTrainer::initial_state() const {
  RunState st;
  st.params = ModelParams::random(config_.dims, derive_seed(config_.seed, {seed_tag::init}));
  st.static_memory = StaticMemory(config_.static_memory);
  st.dynamic_memory = DynamicMemory(dynamic_config_for(config_));
  st.master_seed = config_.seed;
  return st;
}

std::pair<std::vector<LocatedDescriptor>, std::vector<LocatedDescriptor>> LifelongTrainer::holdout_descriptors(
    const ModelParams& params, std::size_t segment) const {
  const HoldoutSet& h = holdout_.at(segment);
  std::vector<LocatedDescriptor> refs;
  std::vector<LocatedDescriptor> queries;
  refs.reserve(h.poses.size());
  queries.reserve(h.poses.size());
  for (std::size_t i = 0; i < h.poses.size(); ++i) {
    refs.push_back({describe(params, encode_feature(params, h.reference_features[i])), h.poses[i]});
    queries.push_back({describe(params, encode_feature(params, h.query_features[i])), h.poses[i]});
  }
  return {std::move(refs), std::move(queries)};
}

std::vector<RecallReport> LifelongTrainer::evaluate(const ModelParams& params, std::uint64_t epoch) const {
  std::vector<RecallReport> out;
  out.reserve(schedule_.size());
  for (std::size_t s = 0; s < schedule_.size(); ++s) {
    const auto [refs, queries] = holdout_descriptors(params, s);
    RecallReport r;
    r.recall = recall_curve(queries, refs, config_.match_radius);
    r.weighted = weighted_recall(r.recall);
    r.segment = s;
    r.domain = schedule_[s].domain;
    r.epoch = epoch;
    out.push_back(r);
  }
  return out;
}

EpochMetrics LifelongTrainer::make_metrics(const RunState& state, std::size_t segment, std::size_t steps,
                                           const JointLoss& loss, bool segment_end, bool evaluate_now) const {
  EpochMetrics m;
  m.epoch = state.epoch;
  m.train_segment = segment;
  m.steps = steps;
  m.loss = loss;
  m.segment_end = segment_end;
  if (evaluate_now) m.recalls = evaluate(state.params, state.epoch);
  if (uses_dual_memory(config_.strategy)) {
    const std::size_t groups = schedule_.size();
    m.dynamic_composition.assign(groups, 0.0);
    for (const auto& t : state.dynamic_memory.traces())
      if (t.segment < groups) m.dynamic_composition[t.segment] += 1.0;
    if (!state.dynamic_memory.empty())
      for (double& v : m.dynamic_composition) v /= static_cast<double>(state.dynamic_memory.size());
    m.group_mean_reward.assign(groups, 0.0);
    std::vector<std::size_t> counts(groups, 0);
    for (const auto& c : state.static_memory.clusters())
      for (const auto& t : c.members)
        if (t.segment < groups) {
          m.group_mean_reward[t.segment] += t.reward;
          ++counts[t.segment];
        }
    for (std::size_t g = 0; g < groups; ++g)
      if (counts[g] > 0) m.group_mean_reward[g] /= static_cast<double>(counts[g]);
  }
  return m;
}

bool LifelongTrainer::run(RunState& state, const RunObserver& observer) const {
  if (state.initial_evaluated == 0) {
    state.initial_evaluated = 1;
    const EpochMetrics m = make_metrics(state, state.segment, 0, JointLoss{}, false, true);
    if (observer.on_epoch && !observer.on_epoch(m, state)) return false;
  }
  ObservationStream stream(*world_, schedule_, config_.seed);
  while (state.segment < schedule_.size()) {
    stream.seek(state.segment);
    std::optional<Segment> segment = stream.next();
    for (const auto& o : segment->observations) rendered_ids_.push_back(o.id);
    if (!train_segment(state, *segment, observer)) return state.segment >= schedule_.size();
  }
  return true;
}

bool LifelongTrainer::train_segment(RunState& state, const Segment& segment, const RunObserver& observer) const {
  if (segment.observations.empty()) throw Error(ErrorKind::invalid_argument, "segment has no observations");
  const TrainerHyper& hyper = config_.hyper;
  const Strategy strategy = config_.strategy;
  const std::uint64_t seed = config_.seed;

  std::vector<Vec> features;
  features.reserve(segment.observations.size());
  for (const auto& o : segment.observations) features.push_back(invariant_transform(o.signal, config_.dims.ring_width));

  for (;;) {
    const std::uint64_t local_epoch = state.epoch_in_segment;
    const TripletBatch real = mine_triplets(segment.observations, config_.triplets,
                                            derive_seed(seed, {seed_tag::triplets, segment.index, local_epoch}));
    std::vector<std::size_t> order(real.size());
    std::iota(order.begin(), order.end(), 0);
    {
      Rng rng(derive_seed(seed, {seed_tag::order, segment.index, local_epoch}));
      std::shuffle(order.begin(), order.end(), rng);
    }
    const std::size_t steps = std::max<std::size_t>(1, (real.size() + hyper.real_batch - 1) / hyper.real_batch);

    JointLoss epoch_loss;
    for (std::size_t step = 0; step < steps; ++step) {
      std::vector<TripletSample> real_samples;
      const std::size_t begin = step * hyper.real_batch;
      const std::size_t end = std::min(real.size(), begin + hyper.real_batch);
      for (std::size_t k = begin; k < end; ++k) {
        const TripletIndices& t = real[order[k]];
        TripletSample s;
        s.query = feature_ref(features[t.query]);
        for (std::size_t p : t.positives) s.positives.push_back(feature_ref(features[p]));
        for (std::size_t n : t.negatives) s.negatives.push_back(feature_ref(features[n]));
        real_samples.push_back(std::move(s));
      }

      std::vector<TripletSample> replay_samples;
      std::vector<LatentCode> rec_codes;
      const std::uint64_t replay_seed = derive_seed(seed, {seed_tag::replay, state.epoch, step});
      Rng partner_rng(derive_seed(seed, {seed_tag::replay_triplets, state.epoch, step}));
      if (uses_dual_memory(strategy) && !state.dynamic_memory.empty()) {
        const std::vector<std::size_t> draws = state.dynamic_memory.sample_replay(hyper.replay_batch, replay_seed);
        const auto& traces = state.dynamic_memory.traces();
        std::vector<Pose> poses;
        std::vector<DomainId> domains;
        for (const auto& t : traces) {
          poses.push_back(t.pose);
          domains.push_back(t.domain);
        }
        for (std::size_t i : draws) {
          rec_codes.push_back(traces[i].z);
          TripletIndices t;
          if (!mine_query(poses, domains, i, config_.triplets, partner_rng, t)) continue;
          TripletSample s;
          s.query = latent_ref(traces[i].z.z);
          for (std::size_t p : t.positives) s.positives.push_back(latent_ref(traces[p].z.z));
          for (std::size_t n : t.negatives) s.negatives.push_back(latent_ref(traces[n].z.z));
          replay_samples.push_back(std::move(s));
        }
      } else if (strategy == Strategy::raw_rehearsal && !state.rehearsal.entries.empty()) {
        const auto& entries = state.rehearsal.entries;
        std::vector<Pose> poses;
        std::vector<DomainId> domains;
        for (const auto& e : entries) {
          poses.push_back(e.pose);
          domains.push_back(e.domain);
        }
        Rng rng(replay_seed);
        std::uniform_int_distribution<std::size_t> pick(0, entries.size() - 1);
        for (std::size_t b = 0; b < hyper.replay_batch; ++b) {
          const std::size_t i = pick(rng);
          TripletIndices t;
          if (!mine_query(poses, domains, i, config_.triplets, partner_rng, t)) continue;
          TripletSample s;
          s.query = feature_ref(entries[i].feature);
          for (std::size_t p : t.positives) s.positives.push_back(feature_ref(entries[p].feature));
          for (std::size_t n : t.negatives) s.negatives.push_back(feature_ref(entries[n].feature));
          replay_samples.push_back(std::move(s));
        }
      }

      const JointLoss l = joint_loss_step(state.params, real_samples, replay_samples, rec_codes, hyper);
      epoch_loss.loc_real += l.loc_real;
      epoch_loss.loc_replay += l.loc_replay;
      epoch_loss.rec += l.rec;
      epoch_loss.total += l.total;
    }
    const double inv = 1.0 / static_cast<double>(steps);
    epoch_loss.loc_real *= inv;
    epoch_loss.loc_replay *= inv;
    epoch_loss.rec *= inv;
    epoch_loss.total *= inv;

    ++state.epoch;
    ++state.epoch_in_segment;
    if (local_epoch > 0) {
      if (state.last_epoch_loss - epoch_loss.total < hyper.early_stop_tol) ++state.stall_epochs;
      else state.stall_epochs = 0;
    }
    state.last_epoch_loss = epoch_loss.total;

    const bool done = state.epoch_in_segment >= hyper.epochs || state.stall_epochs >= hyper.early_stop_patience;
    const bool eval_now = done || state.epoch_in_segment % config_.eval_interval == 0;
    if (!done && uses_dual_memory(strategy) && config_.refresh_interval > 0 &&
        state.epoch_in_segment % config_.refresh_interval == 0 && !state.static_memory.empty()) {
      state.dynamic_memory.refresh(state.static_memory, derive_seed(seed, {seed_tag::refresh, state.epoch}));
    }
    if (done) end_segment(state, segment, features, observer);

    const EpochMetrics m = make_metrics(state, segment.index, steps, epoch_loss, done, eval_now);
    if (observer.on_epoch && !observer.on_epoch(m, state)) return false;
    if (done) return true;
  }
}

void LifelongTrainer::end_segment(RunState& state, const Segment& segment, const std::vector<Vec>& features,
                                  const RunObserver& observer) const {
  const Strategy strategy = config_.strategy;
  const std::uint64_t seed = config_.seed;
  const std::size_t n = segment.observations.size();

  // Rewards from the final parameters of this segment.
  const TripletBatch triplets = mine_triplets(segment.observations, config_.triplets,
                                              derive_seed(seed, {seed_tag::reward_triplets, segment.index}));
  std::vector<double> external(n, 0.0);
  for (const auto& t : triplets) {
    TripletSample s;
    s.query = feature_ref(features[t.query]);
    for (std::size_t p : t.positives) s.positives.push_back(feature_ref(features[p]));
    for (std::size_t q : t.negatives) s.negatives.push_back(feature_ref(features[q]));
    external[t.query] = external_reward(state.params, s, config_.hyper.margin);
  }

  SegmentRewardSummary summary;
  summary.segment = segment.index;
  summary.domain = segment.domain;
  summary.start_epoch = state.segment_start_epoch;
  summary.end_epoch = state.epoch;

  std::vector<MemoryTrace> traces;
  traces.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Observation& o = segment.observations[i];
    const double internal =
        internal_reward(state.params, o.signal, config_.hyper.augment, derive_seed(seed, {seed_tag::augment, o.id}));
    const RewardBreakdown r = total_reward(external[i], internal);
    summary.mean_external += r.external;
    summary.mean_internal += r.internal;
    summary.mean_total += r.total;

    MemoryTrace t;
    t.z = encode_feature(state.params, features[i]);
    t.pose = o.pose;
    t.reward = reward_for(strategy, r);
    t.birth_step = static_cast<std::int64_t>(state.epoch);
    t.domain = o.domain;
    t.segment = static_cast<std::uint32_t>(segment.index);
    t.id = o.id;
    traces.push_back(std::move(t));
  }
  summary.mean_external /= static_cast<double>(n);
  summary.mean_internal /= static_cast<double>(n);
  summary.mean_total /= static_cast<double>(n);

  const auto step = static_cast<std::int64_t>(state.epoch);
  if (uses_dual_memory(strategy)) {
    std::vector<std::uint64_t> forgotten;
    if (strategy == Strategy::bioslam_no_cluster) {
      forgotten = state.static_memory.consolidate_singletons(traces, step);
    } else {
      forgotten = state.static_memory.consolidate(traces, state.static_memory.new_cluster_count(traces.size()), step,
                                                  derive_seed(seed, {seed_tag::kmeans, segment.index}));
    }
    summary.forgotten_clusters = forgotten.size();
    state.dynamic_memory.refresh(state.static_memory, derive_seed(seed, {seed_tag::refresh, state.epoch}));
  } else if (strategy == Strategy::raw_rehearsal) {
    const std::size_t capacity = config_.dynamic_memory.capacity;
    auto& buffer = state.rehearsal;
    for (std::size_t i = 0; i < n; ++i) {
      const Observation& o = segment.observations[i];
      RehearsalEntry e{features[i], o.pose, o.domain, static_cast<std::uint32_t>(segment.index), o.id};
      ++buffer.seen;
      if (buffer.entries.size() < capacity) {
        buffer.entries.push_back(std::move(e));
        continue;
      }
      Rng rng(derive_seed(seed, {seed_tag::rehearsal, o.id}));
      std::uniform_int_distribution<std::uint64_t> slot(0, buffer.seen - 1);
      const std::uint64_t j = slot(rng);
      if (j < capacity) buffer.entries[j] = std::move(e);
    }
  }

  summary.static_clusters = state.static_memory.clusters().size();
  summary.static_traces = state.static_memory.trace_count();
  const std::size_t groups = schedule_.size();
  summary.group_mean_reward.assign(groups, 0.0);
  std::vector<std::size_t> counts(groups, 0);
  for (const auto& c : state.static_memory.clusters())
    for (const auto& t : c.members)
      if (t.segment < groups) {
        summary.group_mean_reward[t.segment] += t.reward;
        ++counts[t.segment];
      }
  for (std::size_t g = 0; g < groups; ++g)
    if (counts[g] > 0) summary.group_mean_reward[g] /= static_cast<double>(counts[g]);
  summary.reward_ratio = reward_ratio(summary.group_mean_reward);

  state.segment += 1;
  state.epoch_in_segment = 0;
  state.stall_epochs = 0;
  state.last_epoch_loss = 0.0;
  state.segment_start_epoch = state.epoch;
  if (observer.on_segment_end) observer.on_segment_end(summary);
}

RunResult run_schedule(const World& world, const Schedule& schedule, const LifelongConfig& config) {
  LifelongTrainer trainer(world, schedule, config);
  RunResult result;
  result.state = trainer.initial_state();
  RunObserver observer;
  observer.on_epoch = [&](const EpochMetrics& m, const RunState&) {
    result.epochs.push_back(m);
    return true;
  };
  observer.on_segment_end = [&](const SegmentRewardSummary& s) { result.segments.push_back(s); };
  trainer.run(result.state, observer);
  return result;
}

double mean_wr(std::span<const RecallReport> reports, std::size_t segment_count) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& r : reports)
    if (r.segment < segment_count) {
      s += r.weighted;
      ++n;
    }
  return n == 0 ? 0.0 : s / static_cast<double>(n);
}

}  // namespace bioslam

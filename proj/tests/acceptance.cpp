// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "bioslam/config.hpp"
#include "bioslam/eval.hpp"
#include "bioslam/lifelong.hpp"
#include "bioslam/memory.hpp"
#include "bioslam/metrics.hpp"
#include "bioslam/model.hpp"
#include "bioslam/rewards.hpp"
#include "bioslam/store.hpp"
#include "bioslam/synthworld.hpp"
#include "oracles.hpp"

using namespace bioslam;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool pass, double elapsed, double budget, const std::string& detail) {
  const bool in_time = elapsed < budget;
  const bool ok = pass && in_time;
  if (!ok) ++failures;
  std::printf("%s criterion %d: %s (%.1fs of %.0fs%s)\n", ok ? "PASS" : "FAIL", id, detail.c_str(), elapsed, budget,
              in_time ? "" : ", over budget");
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Vec values(const Descriptor& d) { return Vec(d.values().begin(), d.values().end()); }

ModelParams random_params(const ModelDims& dims, std::uint64_t seed, double scale) {
  ModelParams p = ModelParams::zeros(dims);
  std::mt19937_64 rng(seed);
  p.assign(oracle::random_vec(p.parameter_count(), rng, scale));
  return p;
}

MemoryTrace random_trace(std::mt19937_64& rng, std::size_t latent, std::uint64_t id, std::int64_t step) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MemoryTrace t;
  t.z.z = oracle::random_vec(latent, rng);
  t.pose = {200.0 * u(rng), 200.0 * u(rng)};
  t.reward = 2.0 * u(rng);
  t.birth_step = step;
  t.id = id;
  return t;
}

// --- 1 ---------------------------------------------------------------------

void invariance() {
  const auto t0 = Clock::now();
  const ModelDims dims{64, 32, 16, 32};
  const ModelParams p = random_params(dims, 11, 0.3);
  std::mt19937_64 rng(12);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Vec signal = oracle::random_vec(64, rng);
    const Vec base = values(describe(p, encode(p, signal)));
    for (std::size_t s = 0; s < 64; ++s) {
      const Vec shifted = values(describe(p, encode(p, circular_shift(signal, s))));
      worst = std::max(worst, oracle::relative_l2(shifted, base));
    }
  }
  report(1, worst < 1e-7, seconds_since(t0), 5, fmt("max relative L2 over all shifts %.2e", worst));
}

// --- 2 ---------------------------------------------------------------------

void gradients() {
  const auto t0 = Clock::now();
  const ModelDims dims{16, 8, 4, 6};
  const double step = 1e-5;
  const double margin = 4.5;  // keeps every hinge active at these scales
  double worst_loc = 0.0;
  double worst_rec = 0.0;
  double worst_joint = 0.0;
  auto fd = [&](const ModelParams& p, const std::function<double(const ModelParams&)>& f, const ModelParams& g) {
    return oracle::gradient_error(g.flatten(), oracle::numeric_gradient(p, f, step, {}));
  };
  for (std::uint64_t point = 0; point < 20; ++point) {
    const ModelParams p = random_params(dims, 500 + point, 0.5);
    std::mt19937_64 rng(600 + point);
    std::vector<Vec> f;
    for (int i = 0; i < 6; ++i) f.push_back(oracle::naive_dft_magnitude(oracle::random_vec(16, rng)));
    std::vector<Vec> z;
    for (int i = 0; i < 4; ++i) z.push_back(oracle::random_vec(4, rng));
    auto feat = [&](int i) { return InputRef{InputKind::feature, f[i]}; };
    auto lat = [&](int i) { return InputRef{InputKind::latent, z[i]}; };

    const std::vector<TripletSample> real{{feat(0), {feat(1), feat(2)}, {feat(3), feat(4)}},
                                          {feat(5), {feat(0)}, {feat(2)}}};
    const std::vector<TripletSample> replay{{lat(0), {lat(1)}, {lat(2), feat(3)}}};
    const std::vector<LatentCode> codes{{z[0]}, {z[3]}};

    ModelParams g = ModelParams::zeros(dims);
    loc_loss(p, real[0], margin, &g);
    worst_loc = std::max(worst_loc, fd(p, [&](const ModelParams& m) { return loc_loss(m, real[0], margin); }, g));
    g = ModelParams::zeros(dims);
    loc_loss(p, replay[0], margin, &g);
    worst_loc = std::max(worst_loc, fd(p, [&](const ModelParams& m) { return loc_loss(m, replay[0], margin); }, g));

    g = ModelParams::zeros(dims);
    rec_loss(p, codes[0], &g);
    worst_rec = std::max(worst_rec, fd(p, [&](const ModelParams& m) { return rec_loss(m, codes[0]); }, g));

    g = ModelParams::zeros(dims);
    joint_loss(p, real, replay, codes, margin, &g);
    worst_joint = std::max(
        worst_joint, fd(p, [&](const ModelParams& m) { return joint_loss(m, real, replay, codes, margin).total; }, g));
  }
  const double worst = std::max({worst_loc, worst_rec, worst_joint});
  report(2, worst < 1e-4, seconds_since(t0), 30,
         fmt("worst relative error loc %.2e, rec %.2e, joint %.2e", worst_loc, worst_rec, worst_joint));
}

// --- 3 ---------------------------------------------------------------------

struct StressOutcome {
  bool bounded = true;
  std::size_t clusters = 0;
  std::size_t traces = 0;
  std::size_t size = 0;
};

// Streams 10,000 traces through consolidation, refresh and replay, checking
// the bounds after every batch. `grouped` draws each batch as tight groups of
// 2 * N_max near-identical traces and asks for one new cluster per group,
// which saturates static memory.
StressOutcome stress_stream(const ModelDims& dims, const StaticMemoryConfig& sc, std::size_t capacity, bool grouped,
                            std::uint64_t seed) {
  StaticMemory stat(sc);
  DynamicMemory dyn({capacity, 0.9});
  std::mt19937_64 rng(seed);
  StressOutcome out;
  const std::size_t total = 10000;
  const std::size_t batch = 200;
  const std::size_t group = 2 * sc.max_members;
  for (std::size_t start = 0, step = 0; start < total; start += batch, ++step) {
    std::vector<MemoryTrace> traces;
    for (std::size_t i = start; i < start + batch; ++i) {
      MemoryTrace t = random_trace(rng, dims.latent, i, static_cast<std::int64_t>(step));
      if (grouped && (i - start) % group != 0) {
        const MemoryTrace& lead = traces[traces.size() - (i - start) % group];
        for (std::size_t k = 0; k < t.z.z.size(); ++k) t.z.z[k] = lead.z.z[k] + 0.01 * t.z.z[k];
        t.pose = lead.pose;
      } else if (grouped) {
        for (double& v : t.z.z) v *= 10.0;
      }
      traces.push_back(t);
    }
    const std::size_t k_new = grouped ? (batch + group - 1) / group : stat.new_cluster_count(traces.size());
    stat.consolidate(traces, k_new, static_cast<std::int64_t>(step), seed + 1000 + step);
    dyn.refresh(stat, seed + 2000 + step);
    dyn.sample_replay(20, seed + 3000 + step);
    out.bounded = out.bounded && stat.clusters().size() <= sc.max_clusters && dyn.size() <= capacity;
    for (const auto& c : stat.clusters()) out.bounded = out.bounded && c.members.size() <= sc.max_members;
  }
  dyn.write_back(stat);

  RunState state;
  state.params = ModelParams::zeros(dims);
  state.static_memory = stat;
  state.dynamic_memory = dyn;
  out.clusters = stat.clusters().size();
  out.traces = stat.trace_count();
  out.size = serialize_state(state, 7).size();
  return out;
}

void memory_bounds() {
  const auto t0 = Clock::now();
  const ModelDims dims{64, 32, 16, 32};
  StaticMemoryConfig sc;
  sc.max_clusters = 64;
  sc.max_members = 8;
  const std::size_t capacity = 32;
  const std::size_t bound = snapshot_size_bound(dims, sc, capacity, 0);

  const StressOutcome loose = stress_stream(dims, sc, capacity, false, 31);
  const StressOutcome full = stress_stream(dims, sc, capacity, true, 32);
  const double gap = std::abs(static_cast<double>(bound) - static_cast<double>(full.size)) / static_cast<double>(bound);
  const bool ok = loose.bounded && full.bounded && loose.size <= bound && full.size <= bound && gap <= 0.01;
  report(3, ok, seconds_since(t0), 60,
         fmt("bound %zu bytes; random stream %zu clusters, %zu traces, %zu bytes; saturating stream %zu clusters, %zu "
             "traces, %zu bytes (gap %.3f%%)",
             bound, loose.clusters, loose.traces, loose.size, full.clusters, full.traces, full.size, 100.0 * gap));
}

// --- 4 ---------------------------------------------------------------------

void forgetting_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> coord(0, 5);
  std::uniform_int_distribution<int> reward(0, 3);
  std::uniform_int_distribution<int> step(0, 3);
  std::uniform_int_distribution<int> members(1, 3);
  int matched = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 19);
    std::vector<Cluster> cs;
    for (std::size_t i = 0; i < n; ++i) {
      Cluster c;
      c.id = 10 * i + 3;
      c.creation_step = step(rng);
      const int m = members(rng);
      for (int k = 0; k < m; ++k) {
        MemoryTrace t;
        // Coarse integer grids make distance and reward ties frequent.
        t.z.z = {static_cast<double>(coord(rng)), static_cast<double>(coord(rng))};
        t.pose = {static_cast<double>(coord(rng)), 0.0};
        t.reward = static_cast<double>(reward(rng));
        c.members.push_back(t);
      }
      c.recompute_centroid(1.0);
      cs.push_back(c);
    }
    const std::size_t keep = 1 + static_cast<std::size_t>(trial % 7);
    const auto expect = oracle::brute_force_forget(cs, keep);
    std::vector<Cluster> work = cs;
    const auto got = forget_clusters(work, keep);
    auto a = got;
    auto b = expect;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::set<std::uint64_t> left;
    for (const auto& c : work) left.insert(c.id);
    bool survivors = work.size() == std::min(keep, n);
    for (auto id : expect) survivors = survivors && !left.count(id);
    if (a == b && got == expect && survivors) ++matched;
  }
  report(4, matched == 200, seconds_since(t0), 20, fmt("%d of 200 instances match the pair-scan oracle", matched));
}

// --- 5 ---------------------------------------------------------------------

double mean_buffer_replay_count(const World& world, const RunConfig& rc, double gamma) {
  LifelongConfig cfg = rc.lifelong;
  cfg.strategy = Strategy::bioslam;
  cfg.dynamic_memory.gamma = gamma;
  LifelongTrainer trainer(world, rc.schedule, cfg);
  RunState state = trainer.initial_state();
  double sum = 0.0;
  std::size_t n = 0;
  RunObserver obs;
  obs.on_epoch = [&](const EpochMetrics&, const RunState& st) {
    for (const auto& t : st.dynamic_memory.traces()) {
      sum += static_cast<double>(t.replay_count);
      ++n;
    }
    return true;
  };
  trainer.run(state, obs);
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

void sampling(const World& world, const RunConfig& rc) {
  const auto t0 = Clock::now();
  StaticMemoryConfig sc;
  sc.max_clusters = 40;
  sc.max_members = 1;
  StaticMemory stat(sc);
  std::mt19937_64 rng(51);
  std::vector<Cluster> clusters;
  for (std::uint64_t i = 0; i < 40; ++i) {
    Cluster c;
    c.id = i;
    MemoryTrace t = random_trace(rng, 4, i, 0);
    t.replay_count = i % 7;
    c.members.push_back(t);
    c.recompute_centroid(sc.spatial_weight);
    clusters.push_back(c);
  }
  stat.restore(clusters, clusters.size());
  DynamicMemory dyn({24, 0.8});
  dyn.refresh(stat, 52);

  // Independent weights: gamma^n * R, straight from the definition.
  std::vector<double> w;
  double total = 0.0;
  for (const auto& t : dyn.traces()) {
    w.push_back(std::pow(0.8, static_cast<double>(t.replay_count)) * t.reward);
    total += w.back();
  }
  const std::size_t draws = 100000;
  const auto idx = dyn.sample_replay(draws, 53);
  std::vector<double> freq(w.size(), 0.0);
  for (auto i : idx) freq[i] += 1.0 / static_cast<double>(draws);
  double worst = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) worst = std::max(worst, std::abs(freq[i] - w[i] / total));

  const double n_half = mean_buffer_replay_count(world, rc, 0.5);
  const double n_one = mean_buffer_replay_count(world, rc, 1.0);
  report(5, worst < 0.01 && n_half < n_one, seconds_since(t0), 60,
         fmt("max |freq - w/sum w| %.4f over %zu traces; mean buffer replay count %.3f (gamma 0.5) vs %.3f (gamma 1)",
             worst, w.size(), n_half, n_one));
}

// --- 6 ---------------------------------------------------------------------

struct BenchRun {
  RunResult result;
  double final_wr = 0.0;
};

// WR of every segment at the end of each trained segment.
std::vector<std::vector<double>> wr_at_segment_ends(const RunResult& r, std::size_t segments) {
  std::vector<std::vector<double>> out;
  for (const auto& e : r.epochs) {
    if (!e.segment_end || e.recalls.empty()) continue;
    std::vector<double> row(segments, 0.0);
    for (const auto& rep : e.recalls) row[rep.segment] = rep.weighted;
    out.push_back(row);
  }
  return out;
}

// Mean WR loss on the already-trained segments caused by training segment s.
std::vector<double> switch_drops(const RunResult& r, std::size_t segments) {
  const auto ends = wr_at_segment_ends(r, segments);
  std::vector<double> drops;
  for (std::size_t s = 1; s < ends.size(); ++s) {
    double d = 0.0;
    for (std::size_t p = 0; p < s; ++p) d += ends[s - 1][p] - ends[s][p];
    drops.push_back(d / static_cast<double>(s));
  }
  return drops;
}

double retention_of(const RunResult& r, std::size_t segment) {
  std::vector<WrSample> samples;
  for (const auto& e : r.epochs)
    for (const auto& rep : e.recalls) samples.push_back({e.epoch, rep.segment, rep.weighted});
  std::vector<SegmentSpan> spans;
  for (const auto& s : r.segments) spans.push_back({s.segment, s.start_epoch, s.end_epoch});
  return retention_and_adaptation(samples, spans).at(segment).retention;
}

double mean_internal_reward(const World& world, const RunConfig& rc, const ModelParams& params) {
  double sum = 0.0;
  std::size_t n = 0;
  for (DomainId d = 0; d < rc.world.domains; ++d)
    for (std::size_t p = 0; p < rc.world.places; p += 5) {
      const Observation o = render(world, d, p, 900000 + 1000 * d + p);
      sum += internal_reward(params, o.signal, rc.lifelong.hyper.augment, 700000 + 1000 * d + p);
      ++n;
    }
  return sum / static_cast<double>(n);
}

void benchmark(const World& world, const RunConfig& rc) {
  const auto t0 = Clock::now();
  const std::size_t segments = rc.schedule.size();
  std::map<Strategy, BenchRun> runs;
  for (Strategy s : kAllStrategies) {
    LifelongConfig cfg = rc.lifelong;
    cfg.strategy = s;
    BenchRun b;
    b.result = run_schedule(world, rc.schedule, cfg);
    b.final_wr = mean_wr(b.result.epochs.back().recalls, segments);
    std::printf("  benchmark %-20s final mean WR %.4f\n", std::string(to_string(s)).c_str(), b.final_wr);
    runs.emplace(s, std::move(b));
  }
  const double bio = runs[Strategy::bioslam].final_wr;
  const double naive = runs[Strategy::naive].final_wr;
  const double uniform = runs[Strategy::uniform_replay].final_wr;
  const bool a = bio >= naive + 0.15 && bio >= uniform + 0.05;

  const auto drop_bio = switch_drops(runs[Strategy::bioslam].result, segments);
  const auto drop_naive = switch_drops(runs[Strategy::naive].result, segments);
  bool b = drop_bio.size() == segments - 1 && drop_naive.size() == drop_bio.size();
  std::string drops;
  for (std::size_t i = 0; i < drop_bio.size(); ++i) {
    b = b && drop_bio[i] < drop_naive[i];
    drops += fmt(" %.3f/%.3f", drop_bio[i], drop_naive[i]);
  }

  bool c = true;
  for (Strategy s : {Strategy::bioslam_no_ex, Strategy::bioslam_no_in, Strategy::bioslam_no_cluster,
                     Strategy::bioslam_no_decay})
    c = c && runs[s].final_wr <= bio;

  const double ra_naive = retention_of(runs[Strategy::naive].result, 1);
  const double ra_bio = retention_of(runs[Strategy::bioslam].result, 1);
  const bool ra = ra_naive < 0.0 && ra_bio >= ra_naive + 0.15;

  LifelongTrainer fresh(world, rc.schedule, rc.lifelong);
  const double in_random = mean_internal_reward(world, rc, fresh.initial_state().params);
  const double in_trained = mean_internal_reward(world, rc, runs[Strategy::bioslam].result.state.params);
  const bool internal = in_trained < in_random;

  report(6, a && b && c && ra && internal, seconds_since(t0), 900,
         fmt("(a) %s bioslam %.4f vs naive %.4f, uniform_replay %.4f; (b) %s switch drops bioslam/naive%s; "
             "(c) %s ablations <= bioslam; RA(1) %s bioslam %.3f vs naive %.3f; internal reward %s trained %.4f vs "
             "random %.4f",
             a ? "ok" : "no", bio, naive, uniform, b ? "ok" : "no", drops.c_str(), c ? "ok" : "no", ra ? "ok" : "no",
             ra_bio, ra_naive, internal ? "ok" : "no", in_trained, in_random));
}

// --- 7 ---------------------------------------------------------------------

void wr_formula() {
  const auto t0 = Clock::now();
  const double a = weighted_recall({1, 1, 1, 1, 1, 1});
  const double b = weighted_recall({0, 0, 0, 0, 0, 0});
  const double c = weighted_recall({0.6, 0.7, 0.8, 0.8, 0.9, 1.0});
  const double err = std::max({std::abs(a - 1.0), std::abs(b), std::abs(c - 0.72)});
  report(7, err < 1e-12, seconds_since(t0), 1, fmt("WR examples 1.0, 0.0, 0.72 reproduced, max error %.1e", err));
}

// --- 8 ---------------------------------------------------------------------

std::string rows_of(const std::vector<EpochMetrics>& epochs, const std::vector<SegmentRewardSummary>& segments,
                    Strategy strategy, std::uint64_t seed) {
  std::string out;
  for (const auto& m : epochs)
    for (const auto& r : eval_rows(m, strategy, seed)) out += r + "\n";
  for (const auto& s : segments) out += segment_row(s, strategy, seed) + "\n";
  return out;
}

void determinism(const World& world, const RunConfig& rc) {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  const std::uint64_t digest = config_digest(rc);
  for (Strategy s : {Strategy::bioslam, Strategy::raw_rehearsal}) {
    LifelongConfig cfg = rc.lifelong;
    cfg.strategy = s;
    const RunResult one = run_schedule(world, rc.schedule, cfg);
    const RunResult two = run_schedule(world, rc.schedule, cfg);
    const std::string rows = rows_of(one.epochs, one.segments, s, cfg.seed);
    const bool repeat = rows == rows_of(two.epochs, two.segments, s, cfg.seed) &&
                        serialize_state(one.state, digest) == serialize_state(two.state, digest);

    // Stop mid-way through the second segment, round-trip the state through
    // its serialized form and finish with a fresh trainer.
    const std::uint64_t stop_at = rc.lifelong.hyper.epochs + rc.lifelong.hyper.epochs / 2 + 1;
    std::vector<EpochMetrics> epochs;
    std::vector<SegmentRewardSummary> segs;
    RunObserver obs;
    obs.on_segment_end = [&](const SegmentRewardSummary& sr) { segs.push_back(sr); };
    obs.on_epoch = [&](const EpochMetrics& m, const RunState& st) {
      epochs.push_back(m);
      return st.epoch < stop_at;
    };
    LifelongTrainer first(world, rc.schedule, cfg);
    RunState state = first.initial_state();
    const bool stopped = !first.run(state, obs);
    const auto bytes = serialize_state(state, digest);
    LifelongTrainer second(world, rc.schedule, cfg);
    RunState resumed = deserialize_state(bytes, digest, second.initial_state());
    obs.on_epoch = [&](const EpochMetrics& m, const RunState&) {
      epochs.push_back(m);
      return true;
    };
    const bool finished = second.run(resumed, obs);
    const bool resume = stopped && finished && rows_of(epochs, segs, s, cfg.seed) == rows &&
                        serialize_state(resumed, digest) == serialize_state(one.state, digest);
    ok = ok && repeat && resume;
    detail += fmt("%s%s: repeat %s, resume at epoch %llu %s", detail.empty() ? "" : "; ",
                  std::string(to_string(s)).c_str(), repeat ? "identical" : "differs",
                  static_cast<unsigned long long>(stop_at), resume ? "identical" : "differs");
  }
  report(8, ok, seconds_since(t0), 120, detail);
}

// --- 9 ---------------------------------------------------------------------

void kmeans_property() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(91);
  std::size_t runs = 0;
  std::size_t monotone = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 5 + static_cast<std::size_t>(trial % 60);
    const std::size_t dim = 1 + static_cast<std::size_t>(trial % 5);
    std::vector<Vec> pts;
    for (std::size_t i = 0; i < n; ++i) pts.push_back(oracle::random_vec(dim, rng));
    const auto r = kmeans(pts, 1 + static_cast<std::size_t>(trial % 8), 50, 9000 + trial);
    bool ok = true;
    for (std::size_t i = 1; i < r.wcss_history.size(); ++i)
      ok = ok && r.wcss_history[i] <= r.wcss_history[i - 1] * (1.0 + 1e-12);
    ++runs;
    if (ok) ++monotone;
  }

  // 12 points in 3 blobs of radius 1, centres 100 apart.
  const std::vector<Vec> centres{{0, 0}, {100, 0}, {0, 100}};
  std::vector<Vec> pts;
  std::vector<std::size_t> labels;
  std::uniform_real_distribution<double> u(-0.7, 0.7);
  for (std::size_t b = 0; b < 3; ++b)
    for (int i = 0; i < 4; ++i) {
      pts.push_back({centres[b][0] + u(rng), centres[b][1] + u(rng)});
      labels.push_back(b);
    }
  const auto r = kmeans(pts, 3, 50, 92);
  bool partition = r.assignments.size() == 12;
  for (std::size_t i = 0; i < 12 && partition; ++i)
    for (std::size_t j = 0; j < 12; ++j)
      partition = partition && ((labels[i] == labels[j]) == (r.assignments[i] == r.assignments[j]));
  const bool nearest = oracle::nearest_centroids(pts, r.centroids) == r.assignments;
  report(9, monotone == runs && partition && nearest, seconds_since(t0), 10,
         fmt("WCSS non-increasing on %zu of %zu runs; blobs recovered %s, nearest-centroid oracle %s", monotone, runs,
             partition ? "yes" : "no", nearest ? "agrees" : "disagrees"));
}

}  // namespace

int main() {
  const RunConfig rc = load_config(std::string(BIOSLAM_SOURCE_DIR) + "/configs/benchmark.json");
  const World world = generate_world(rc.world, rc.world_seed);

  invariance();
  gradients();
  memory_bounds();
  forgetting_oracle();
  sampling(world, rc);
  benchmark(world, rc);
  wr_formula();
  determinism(world, rc);
  kmeans_property();
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

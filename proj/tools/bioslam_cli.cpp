// Command-line runner: gen, train, eval.
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "bioslam/config.hpp"
#include "bioslam/error.hpp"
#include "bioslam/eval.hpp"
#include "bioslam/lifelong.hpp"
#include "bioslam/metrics.hpp"
#include "bioslam/store.hpp"

namespace fs = std::filesystem;
using namespace bioslam;

namespace {

constexpr int kExitError = 1;
constexpr int kExitInterrupted = 3;

volatile std::sig_atomic_t g_stop_requested = 0;

extern "C" void request_stop(int) { g_stop_requested = 1; }

struct CommonArgs {
  std::string config;
  std::string world;
  std::string out;
  std::optional<std::uint64_t> seed_override;
};

RunConfig resolve(const CommonArgs& a) {
  RunConfig c = load_config(a.config);
  if (a.seed_override) override_seed(c, *a.seed_override);
  if (!a.out.empty()) c.output_dir = a.out;
  return c;
}

std::string world_path(const CommonArgs& a, const RunConfig& c) {
  return a.world.empty() ? (fs::path(c.output_dir) / "world.bslw").string() : a.world;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create directory '" + dir + "': " + ec.message());
}

World load_matching_world(const std::string& path, const RunConfig& c) {
  LoadedWorld lw = load_world(path);
  const std::uint64_t expected = world_digest(c.world, c.world_seed);
  if (lw.digest != expected)
    throw Error(ErrorKind::digest_mismatch, "world file '" + path + "' was generated from a different world config");
  return std::move(lw.world);
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw Error(ErrorKind::io, "cannot write '" + p.string() + "'");
  f << std::setprecision(17);
  return f;
}

int cmd_gen(const CommonArgs& a) {
  const RunConfig c = resolve(a);
  ensure_dir(c.output_dir);
  const World world = generate_world(c.world, c.world_seed);
  const std::string path = world_path(a, c);
  save_world(path, world, world_digest(c.world, c.world_seed));
  spdlog::info("wrote world with {} domains and {} places to {}", c.world.domains, c.world.places, path);
  return 0;
}

int cmd_train(const CommonArgs& a, const std::string& resume, std::optional<std::uint64_t> stop_after) {
  const RunConfig c = resolve(a);
  ensure_dir(c.output_dir);
  const World world = load_matching_world(world_path(a, c), c);
  const std::uint64_t digest = config_digest(c);
  {
    std::ofstream f = open_out(fs::path(c.output_dir) / "config.resolved.json");
    f << canonical_json(c) << '\n';
  }

  LifelongTrainer trainer(world, c.schedule, c.lifelong);
  RunState state = trainer.initial_state();
  if (!resume.empty()) {
    state = load_snapshot(resume, digest, trainer.initial_state());
    spdlog::info("resuming at epoch {} (segment {})", state.epoch, state.segment);
  }

  const std::string metrics_path = (fs::path(c.output_dir) / "metrics.jsonl").string();
  const std::string snapshot_path = (fs::path(c.output_dir) / "snapshot.bslm").string();
  MetricsWriter metrics(metrics_path, resume.empty() ? 0 : state.metrics_rows);
  const Strategy strategy = c.lifelong.strategy;

  auto snapshot = [&](const RunState& s) {
    RunState copy = s;
    copy.metrics_rows = metrics.rows();
    save_snapshot(snapshot_path, copy, digest);
    spdlog::debug("snapshot at epoch {}", s.epoch);
  };

  std::uint64_t epochs_here = 0;
  bool interrupted = false;
  RunObserver observer;
  observer.on_segment_end = [&](const SegmentRewardSummary& s) {
    metrics.write(segment_row(s, strategy, c.seed));
    spdlog::info("segment {} done at epoch {}: {} clusters, {} traces", s.segment, s.end_epoch, s.static_clusters,
                 s.static_traces);
  };
  observer.on_epoch = [&](const EpochMetrics& m, const RunState& s) {
    for (const auto& row : eval_rows(m, strategy, c.seed)) metrics.write(row);
    if (!m.recalls.empty())
      spdlog::info("epoch {} mean WR {:.4f}", m.epoch, mean_wr(m.recalls, c.schedule.size()));
    if (m.steps > 0) ++epochs_here;
    if (g_stop_requested != 0 || (stop_after && epochs_here >= *stop_after)) {
      snapshot(s);
      interrupted = true;
      return false;
    }
    if (m.steps > 0 && c.snapshot_interval > 0 && m.epoch % c.snapshot_interval == 0) snapshot(s);
    return true;
  };

  // SIGINT and SIGTERM finish the current epoch, snapshot and exit with the
  // interrupted code.
  std::signal(SIGINT, request_stop);
  std::signal(SIGTERM, request_stop);
  const bool complete = trainer.run(state, observer);
  if (!complete || interrupted) {
    if (!interrupted) snapshot(state);
    std::cerr << "error: interrupted: stopped after " << epochs_here << " epochs; resume with --resume "
              << snapshot_path << '\n';
    return kExitInterrupted;
  }
  snapshot(state);
  spdlog::info("run complete after {} epochs", state.epoch);
  return 0;
}

int cmd_eval(const CommonArgs& a, const std::string& snapshot_path, const std::string& metrics_path) {
  const RunConfig c = resolve(a);
  const World world = load_matching_world(world_path(a, c), c);
  LifelongTrainer trainer(world, c.schedule, c.lifelong);
  const RunState state = load_snapshot(snapshot_path, config_digest(c), trainer.initial_state());
  const fs::path dir = fs::path(c.output_dir) / "eval";
  ensure_dir(dir.string());

  const auto reports = trainer.evaluate(state.params, state.epoch);
  {
    std::ofstream f = open_out(dir / "recall.csv");
    f << "segment,domain,recall@1,recall@2,recall@3,recall@4,recall@5,recall@6,wr\n";
    for (const auto& r : reports) {
      f << r.segment << ',' << r.domain;
      for (double v : r.recall) f << ',' << v;
      f << ',' << r.weighted << '\n';
    }
  }
  std::cout << "segment domain   R@1    R@2    R@3    R@4    R@5    R@6    WR\n";
  for (const auto& r : reports) {
    std::cout << std::setw(7) << r.segment << std::setw(7) << r.domain << std::fixed << std::setprecision(3);
    for (double v : r.recall) std::cout << std::setw(7) << v;
    std::cout << std::setw(7) << r.weighted << '\n';
  }
  std::cout << "mean WR " << mean_wr(reports, c.schedule.size()) << '\n';

  std::vector<Vec> all_descriptors;
  std::vector<std::size_t> owner;
  for (std::size_t s = 0; s < c.schedule.size(); ++s) {
    const auto [refs, queries] = trainer.holdout_descriptors(state.params, s);
    std::vector<Descriptor> rd;
    std::vector<Descriptor> qd;
    for (const auto& r : refs) rd.push_back(r.descriptor);
    for (const auto& q : queries) qd.push_back(q.descriptor);
    const Matrix sim = similarity_matrix(rd, qd);
    {
      std::ofstream f = open_out(dir / ("similarity_seg" + std::to_string(s) + ".csv"));
      for (std::size_t i = 0; i < sim.rows; ++i) {
        for (std::size_t j = 0; j < sim.cols; ++j) f << (j ? "," : "") << sim(i, j);
        f << '\n';
      }
    }
    {
      std::ofstream f = open_out(dir / ("confidence_seg" + std::to_string(s) + ".csv"));
      f << "x,y,confidence\n";
      for (const auto& p : confidence_map(refs, queries)) f << p.pose.x << ',' << p.pose.y << ',' << p.score << '\n';
    }
    for (const auto& r : refs) {
      all_descriptors.emplace_back(r.descriptor.values().begin(), r.descriptor.values().end());
      owner.push_back(s);
    }
  }
  {
    const Projection2d pca = pca_2d(all_descriptors);
    std::ofstream f = open_out(dir / "pca.csv");
    f << "segment,domain,pc1,pc2\n";
    for (std::size_t i = 0; i < pca.points.size(); ++i)
      f << owner[i] << ',' << c.schedule[owner[i]].domain << ',' << pca.points[i][0] << ',' << pca.points[i][1]
        << '\n';
  }
  if (!metrics_path.empty()) {
    const MetricsLog log = read_metrics(metrics_path);
    std::ofstream f = open_out(dir / "retention.csv");
    f << "segment,retention,adaptation_epochs\n";
    std::cout << "segment  RA       AE\n";
    for (const auto& r : retention_and_adaptation(wr_samples(log), segment_spans(log))) {
      f << r.segment << ',' << r.retention << ',' << r.adaptation_epochs << '\n';
      std::cout << std::setw(7) << r.segment << std::setw(9) << std::setprecision(3) << r.retention << std::setw(6)
                << r.adaptation_epochs << '\n';
    }
  }
  spdlog::info("wrote evaluation artifacts to {}", dir.string());
  return 0;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("bioslam");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  const char* level = std::getenv("BIOSLAM_LOG");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::info);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Lifelong place recognition with dual-memory generative replay"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string resume;
  std::string snapshot;
  std::string metrics;
  std::optional<std::uint64_t> stop_after;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "JSON run config")->required()->check(CLI::ExistingFile);
    sub->add_option("--world", common.world, "world file (default: <out>/world.bslw)");
    sub->add_option("--out", common.out, "output directory (overrides output_dir)");
    sub->add_option("--seed-override", common.seed_override, "replace the master seed of the run");
  };

  CLI::App* gen = app.add_subcommand("gen", "generate the world file");
  add_common(gen);
  CLI::App* train = app.add_subcommand("train", "train over the schedule, writing metrics and snapshots");
  add_common(train);
  train->add_option("--resume", resume, "snapshot to continue from")->check(CLI::ExistingFile);
  train->add_option("--stop-after-epochs", stop_after, "testing aid: snapshot and exit with code 3 after N epochs");
  CLI::App* eval = app.add_subcommand("eval", "evaluate a snapshot and write reports");
  add_common(eval);
  eval->add_option("--snapshot", snapshot, "snapshot to evaluate")->required()->check(CLI::ExistingFile);
  eval->add_option("--metrics", metrics, "metrics log for the retention/adaptation summary")
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: usage: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*gen) return cmd_gen(common);
    if (*train) return cmd_train(common, resume, stop_after);
    if (*eval) return cmd_eval(common, snapshot, metrics);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

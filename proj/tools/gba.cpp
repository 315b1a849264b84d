// gba: simulate, capture, label and report on a synthetic game-frame corpus.
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "gba/errors.hpp"
#include "gba/pipeline.hpp"
#include "gba/service.hpp"

namespace {

constexpr int kInputError = 2;
constexpr int kVerifyFailure = 3;

std::string slurp(const std::filesystem::path& path) {
  const gba::Bytes b = gba::read_file(path);
  return std::string(b.begin(), b.end());
}

gba::LabelParams params_from(const std::string& path) {
  std::string file = path;
  if (file.empty())
    if (const char* env = std::getenv("GBA_PARAMS")) file = env;
  return file.empty() ? gba::LabelParams{} : gba::LabelParams::parse(slurp(file));
}

int serve(const gba::ServiceConfig& config, const std::string& host, int port) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  gba::AnnotationService service(config);
  gba::AnnotationServer server(service);
  const int bound = server.bind(host, port);
  std::printf("listening on http://%s:%d (%zu frames, %zu clicks replayed)\n", host.c_str(), bound,
              service.corpus().frames.size(), service.click_count());
  std::fflush(stdout);
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.run();
  if (waiter.joinable()) {
    // run() can also end on its own; wake the waiter so it can exit.
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic game-frame capture and label propagation pipeline"};
  app.require_subcommand(1);
  unsigned jobs = 0;
  std::string runDir;

  auto* sim = app.add_subcommand("sim", "generate a world and record capture sessions");
  std::string configFile;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> frames, stride, sessions, objects, resources;
  std::optional<std::uint16_t> width, height;
  std::optional<double> ambiguity;
  sim->add_option("run", runDir, "run directory")->required();
  sim->add_option("--config", configFile, "corpus config file (key = value)");
  sim->add_option("--seed", seed);
  sim->add_option("--frames", frames, "recorded frames per session");
  sim->add_option("--stride", stride, "camera steps between recorded frames");
  sim->add_option("--sessions", sessions);
  sim->add_option("--width", width);
  sim->add_option("--height", height);
  sim->add_option("--objects", objects);
  sim->add_option("--resources", resources);
  sim->add_option("--ambiguity", ambiguity, "fraction of textures shared by two classes");

  auto* process = app.add_subcommand("process", "capture and decompose every recorded frame");
  process->add_option("run", runDir)->required();
  process->add_option("--jobs", jobs, "worker threads (0 = all cores)");

  auto* autolabel = app.add_subcommand("autolabel", "run the scripted annotator against the oracle");
  std::string paramsFile;
  autolabel->add_option("run", runDir)->required();
  autolabel->add_option("--params", paramsFile, "label parameters (default: $GBA_PARAMS)");

  auto* verify = app.add_subcommand("verify", "diff exported labels against the oracle");
  std::optional<double> minDensity;
  verify->add_option("run", runDir)->required();
  verify->add_option("--jobs", jobs);
  verify->add_option("--min-density", minDensity, "also fail below this annotation density");

  auto* stats = app.add_subcommand("stats", "write reports and figures");
  stats->add_option("run", runDir)->required();
  stats->add_option("--jobs", jobs);

  auto* exportCmd = app.add_subcommand("export", "write label maps as PGM");
  std::vector<std::uint32_t> exportFrames;
  exportCmd->add_option("run", runDir)->required();
  exportCmd->add_option("--frame", exportFrames, "frame index (repeatable; default all)");

  auto* serveCmd = app.add_subcommand("serve", "serve the annotation API");
  std::string host = "127.0.0.1", logFile;
  int port = 8080;
  serveCmd->add_option("run", runDir);
  serveCmd->add_option("--corpus", runDir, "processed run directory");
  serveCmd->add_option("--port", port, "0 picks a free port");
  serveCmd->add_option("--host", host);
  serveCmd->add_option("--params", paramsFile, "label parameters (default: $GBA_PARAMS)");
  serveCmd->add_option("--log", logFile, "click log (default: <run>/labels/service.log)");

  auto* gallery = app.add_subcommand("gallery", "export randomly chosen frames with label overlays");
  std::size_t count = 12;
  std::uint64_t gallerySeed = 7;
  gallery->add_option("run", runDir)->required();
  gallery->add_option("--count", count);
  gallery->add_option("--seed", gallerySeed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  const gba::RunLayout run{runDir};
  try {
    if (*sim) {
      const gba::Palette palette = gba::Palette::default_palette();
      gba::CorpusConfig cfg = configFile.empty() ? gba::CorpusConfig{} : gba::CorpusConfig::parse(slurp(configFile), palette);
      if (seed) cfg.seed = *seed;
      if (frames) cfg.frames = *frames;
      if (stride) cfg.stride = *stride;
      if (sessions) cfg.sessions = *sessions;
      if (width) cfg.width = *width;
      if (height) cfg.height = *height;
      if (objects) cfg.world.objectCount = *objects;
      if (resources) cfg.world.resourceCount = *resources;
      if (ambiguity) cfg.world.ambiguity = *ambiguity;
      gba::run_sim(run, cfg, palette);
      std::printf("sim: %u session(s) x %u frames -> %s\n", cfg.sessions, cfg.frames, run.captures().c_str());
    } else if (*process) {
      const std::size_t n = gba::run_process(run, jobs);
      std::printf("process: %zu frames\n", n);
    } else if (*autolabel) {
      const gba::AnnotationRun r = gba::run_autolabel(run, params_from(paramsFile));
      std::printf("autolabel: %zu of %zu frames presented, %zu clicks, %zu rules\n", r.presented.size(),
                  r.checks.size(), r.store.click_log().size(), r.store.rules().size());
    } else if (*verify) {
      const gba::VerifyResult r = gba::run_verify(run, jobs);
      const bool densityOk = !minDensity || r.density() >= *minDensity;
      std::printf("verify: density %.4f, %llu mislabeled pixels, %llu schedule violations: %s\n", r.density(),
                  (unsigned long long)r.mislabeledPixels, (unsigned long long)r.scheduleViolations,
                  r.ok() && densityOk ? "pass" : "FAIL");
      if (!r.ok() || !densityOk) return kVerifyFailure;
    } else if (*stats) {
      const gba::StatsResult s = gba::run_stats(run, jobs);
      std::printf("stats: density %.4f, %llu rules, MTS median %u -> %s\n", s.report.annotationDensity,
                  (unsigned long long)s.report.ruleCount, s.distribution.medianOccurrences, run.reports().c_str());
    } else if (*exportCmd) {
      const std::size_t n = gba::run_export(run, exportFrames);
      std::printf("export: %zu label maps -> %s\n", n, run.maps().c_str());
    } else if (*serveCmd) {
      if (runDir.empty()) throw gba::Error("serve needs a run directory (--corpus)");
      return serve({runDir, params_from(paramsFile), logFile}, host, port);
    } else if (*gallery) {
      const auto chosen = gba::run_gallery(run, count, gallerySeed);
      std::printf("gallery: %zu frames -> %s\n", chosen.size(), (run.reports() / "gallery").c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "gba: %s\n", e.what());
    return kInputError;
  }
  return 0;
}

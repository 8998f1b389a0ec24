// Command-line front end: run experiments, compute statistics of saved
// expansions, and turn traces into error curves.
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "uqsub/uqsub.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

int report(uqsub_status status) {
  std::cerr << "uqsub: " << uqsub_status_name(status) << ": "
            << uqsub_last_error() << '\n';
  return status == UQSUB_ERR_CONFIG ? kExitConfig : kExitRuntime;
}

struct ConfigHandle {
  uqsub_config* ptr = nullptr;
  ~ConfigHandle() { uqsub_config_free(ptr); }
};

struct TraceHandle {
  uqsub_trace* ptr = nullptr;
  ~TraceHandle() { uqsub_trace_free(ptr); }
};

uqsub_status load_config(const std::string& path,
                         const std::optional<std::uint64_t>& seed,
                         const std::string& out_dir, ConfigHandle& cfg) {
  if (const uqsub_status s = uqsub_config_load(path.c_str(), &cfg.ptr)) return s;
  if (seed)
    if (const uqsub_status s = uqsub_config_set_seed(cfg.ptr, *seed)) return s;
  if (!out_dir.empty())
    if (const uqsub_status s =
            uqsub_config_set_output_dir(cfg.ptr, out_dir.c_str()))
      return s;
  return UQSUB_OK;
}

int cmd_run(const std::string& config, const std::optional<std::uint64_t>& seed,
            const std::string& out_dir) {
  ConfigHandle cfg;
  if (const uqsub_status s = load_config(config, seed, out_dir, cfg))
    return report(s);
  uqsub_run_summary summary{};
  if (const uqsub_status s = uqsub_run_experiment(cfg.ptr, &summary))
    return report(s);
  char* dir = nullptr;
  if (const uqsub_status s = uqsub_config_output_dir(cfg.ptr, &dir))
    return report(s);
  std::printf("sg_calls=%zu rsg_calls=%zu terms=%zu initial_error=%.6g "
              "final_error=%.6g out=%s\n",
              summary.sg_calls, summary.rsg_calls, summary.final_terms,
              summary.initial_error_pi, summary.final_error_pi, dir);
  uqsub_string_free(dir);
  return kExitOk;
}

int cmd_stats(const std::string& expansion, const std::string& config,
              const std::optional<std::uint64_t>& seed,
              const std::string& out_dir) {
  ConfigHandle cfg;
  if (const uqsub_status s = load_config(config, seed, out_dir, cfg))
    return report(s);
  if (const uqsub_status s = uqsub_run_statistics(cfg.ptr, expansion.c_str()))
    return report(s);
  return kExitOk;
}

int cmd_curve(const std::string& trace_path, const std::string& out_dir) {
  TraceHandle trace;
  if (const uqsub_status s = uqsub_trace_load(trace_path.c_str(), &trace.ptr))
    return report(s);
  char* csv = nullptr;
  if (const uqsub_status s = uqsub_trace_error_curve(trace.ptr, &csv))
    return report(s);
  const std::string text(csv);
  uqsub_string_free(csv);
  if (out_dir.empty()) {
    std::cout << text;
    return kExitOk;
  }
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  const fs::path target = fs::path(out_dir) / "curve.csv";
  const fs::path tmp = fs::path(out_dir) / "curve.csv.tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) {
      std::cerr << "uqsub: io error: cannot write " << tmp.string() << '\n';
      return kExitRuntime;
    }
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    std::cerr << "uqsub: io error: cannot write " << target.string() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Restarted subgradient solver for parametric uncertainty"};
  app.require_subcommand(1);
  app.set_version_flag("--version", uqsub_version());

  std::optional<std::uint64_t> seed;
  std::string out_dir;
  app.add_option("--seed", seed, "Override rsg.seed")->expected(1);
  app.add_option("--out", out_dir, "Output directory");

  std::string config;
  std::string expansion;
  std::string trace;

  CLI::App* run = app.add_subcommand("run", "Solve and write all artifacts");
  run->add_option("config", config, "Experiment config")->required();
  run->fallthrough();

  CLI::App* stats =
      app.add_subcommand("stats", "Statistics of a saved expansion");
  stats->add_option("expansion", expansion, "expansion.json")->required();
  stats->add_option("config", config, "Experiment config")->required();
  stats->fallthrough();

  CLI::App* curve = app.add_subcommand("curve", "Error curve of a trace");
  curve->add_option("trace", trace, "trace.csv")->required();
  curve->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (run->parsed()) return cmd_run(config, seed, out_dir);
  if (stats->parsed()) return cmd_stats(expansion, config, seed, out_dir);
  return cmd_curve(trace, out_dir);
}

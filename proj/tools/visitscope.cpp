// visitscope command line: runs the staged pipeline.
//
//   visitscope <stage> --config path [--out dir] [--threads n] [--seed s] [overrides]
//
// Exit status: 0 success (including cache hits), 1 stage failure, 2 bad
// arguments or configuration.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "visitscope/config.hpp"
#include "visitscope/pipeline.hpp"

namespace vs = visitscope;
namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"visitscope: mobility data quality, visit taxonomy and visitation patterns"};
  app.set_version_flag("--version", vs::pipeline::kVersion);

  std::string stage_name;
  std::string config_path;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
  std::optional<std::uint64_t> seed;
  std::optional<double> tau, max_speed, mu_t_min, mu_s_min;
  std::optional<int> T;
  std::optional<std::size_t> k, k_max, k_m;
  std::optional<std::string> cov_kind, transform;
  bool progress_json = false;
  bool quiet = false;

  app.add_option("stage", stage_name, "ingest | quality | visits | fit | classify | patterns | report | all")
      ->required();
  app.add_option("--config,-c", config_path, "pipeline config (JSON)")->required();
  app.add_option("--out,-o", out, "output directory (overrides output_dir)");
  app.add_option("--threads,-j", threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "base random seed");
  app.add_option("--tau", tau, "quality: window size tau in hours");
  app.add_option("--T", T, "quality: observation period in days");
  app.add_option("--max-speed", max_speed, "quality: maximum plausible speed, km/h");
  app.add_option("--mu-t-min", mu_t_min, "quality: cohort threshold on mu_T");
  app.add_option("--mu-s-min", mu_s_min, "quality: cohort threshold on mu_S");
  app.add_option("--k", k, "model: selected number of components");
  app.add_option("--cov-kind", cov_kind, "model: spherical | diag | tied | full");
  app.add_option("--k-max", k_max, "model: largest k in the sweep");
  app.add_option("--transform", transform, "model: none | log1p");
  app.add_option("--k-m", k_m, "patterns: number of visitation motifs");
  app.add_flag("--progress-json", progress_json, "write JSON progress lines to stdout");
  app.add_flag("--quiet,-q", quiet, "only log errors");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  vs::pipeline::Stage target = vs::pipeline::Stage::Report;
  if (stage_name != "all") {
    const auto s = vs::pipeline::stage_from_string(stage_name);
    if (!s) {
      std::cerr << "visitscope: unknown stage '" << stage_name << "'\n";
      return 2;
    }
    target = *s;
  }

  nlohmann::json ov = nlohmann::json::object();
  if (out) ov["output_dir"] = fs::absolute(*out).string();
  if (threads) ov["threads"] = *threads;
  if (seed) ov["seed"] = *seed;
  if (tau) ov["quality"]["tau_h"] = *tau;
  if (T) ov["quality"]["T_d"] = *T;
  if (max_speed) ov["quality"]["max_speed_kmh"] = *max_speed;
  if (mu_t_min) ov["quality"]["mu_T_min"] = *mu_t_min;
  if (mu_s_min) ov["quality"]["mu_S_min"] = *mu_s_min;
  if (k) ov["model"]["k"] = *k;
  if (cov_kind) ov["model"]["cov_kind"] = *cov_kind;
  if (k_max) ov["model"]["k_max"] = *k_max;
  if (transform) ov["model"]["transform"] = *transform;
  if (k_m) ov["patterns"]["k_m"] = *k_m;

  vs::PipelineConfig cfg;
  try {
    cfg = vs::load_config(config_path, ov);
  } catch (const vs::ConfigError& e) {
    std::cerr << "visitscope: config error at " << e.field() << ": "
              << std::string(e.what()).substr(e.field().size() + 2) << "\n";
    return 2;
  }

  vs::pipeline::RunOptions opt;
  opt.progress_json = progress_json;
  if (!quiet) opt.log = [](const std::string& line) { std::cerr << "visitscope " << line << "\n"; };
  opt.progress = [](const std::string& line) { std::cout << line << std::endl; };
  try {
    vs::pipeline::run(cfg, target, opt);
  } catch (const vs::pipeline::StageError& e) {
    std::cerr << "visitscope: stage " << vs::pipeline::to_string(e.stage()) << " failed: "
              << std::string(e.what()).substr(std::string(vs::pipeline::to_string(e.stage())).size() + 2) << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "visitscope: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

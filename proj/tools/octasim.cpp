// octasim: synthetic retinal OCTA dataset generator.
//
//   octasim generate --out DIR [--config FILE] [--count N] [--seed S] [--noise none|random|file] ...
//   octasim render GRAPH.csv --out DIR [--config FILE] [--img-size N] [--upsample K] [--detail UM]...
//   octasim bench [--config FILE] [--reps N] [--seed S]
//
// Exit codes: 0 success, 1 internal error, 2 usage or input error.

#include "octasim/config.hpp"
#include "octasim/dataset.hpp"
#include "octasim/graph_io.hpp"
#include "octasim/png_io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace octasim;

namespace {

constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;

// Errors caused by the user's input rather than by the program.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RenderOverrides {
  std::optional<int> img_size;
  std::optional<int> upsample;
  std::optional<int> bit_depth;
  std::vector<double> details;
};

void add_render_flags(CLI::App* cmd, RenderOverrides& r) {
  cmd->add_option("--img-size", r.img_size, "Base image size in pixels (default 304)");
  cmd->add_option("--upsample", r.upsample, "Integer upsampling factor for images and labels (default 4)");
  cmd->add_option("--bit-depth", r.bit_depth, "Image PNG bit depth, 8 or 16")->check(CLI::IsMember({8, 16}));
  cmd->add_option("--detail,--min-radius-um", r.details, "Label radius threshold in micrometres (repeatable)")->take_all();
}

GeneratorConfig load_effective_config(const std::string& path, const RenderOverrides& r) {
  GeneratorConfig c;
  if (!path.empty()) {
    if (!fs::exists(path)) throw InputError("config file not found: " + path);
    c = load_config(path);
  }
  if (r.img_size) c.render.img_size = *r.img_size;
  if (r.upsample) c.render.upsample = *r.upsample;
  if (r.bit_depth) c.render.bit_depth = *r.bit_depth;
  if (!r.details.empty()) c.render.details_um = r.details;
  c.validate();
  return c;
}

NoiseParams load_noise_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open noise parameter file " + path);
  try {
    return noise_params_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(path + ": " + e.what());
  }
}

// "1_0_graph.csv" -> "1_0"
std::string render_stem(const fs::path& graph) {
  auto stem = graph.stem().string();
  constexpr std::string_view suffix = "_graph";
  if (stem.size() > suffix.size() && stem.ends_with(suffix)) stem.resize(stem.size() - suffix.size());
  return stem;
}

int run_render(const std::string& graph_path, const fs::path& out_dir, const GeneratorConfig& c) {
  if (!fs::exists(graph_path)) throw InputError("graph file not found: " + graph_path);
  VesselForest forest;
  try {
    forest = load_graph_csv(graph_path, c.simulation.fov_mm);
  } catch (const GraphParseError& e) {
    throw InputError(graph_path + ": " + e.what());
  }
  fs::create_directories(out_dir);
  const auto stem = render_stem(graph_path);
  std::vector<fs::path> written;
  try {
    written.push_back(out_dir / (stem + ".png"));
    write_png(written.back().string(), render_image(forest, c), c.render.bit_depth);
    for (double um : c.render.details_um) {
      written.push_back(out_dir / (stem + "_label_" + detail_tag(um) + ".png"));
      write_label_png(written.back(), render_label_for(forest, c, um));
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
    throw;
  }
  for (const auto& p : written) std::cout << p.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic retinal OCTA vessel simulator and dataset generator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::string config_path;
  RenderOverrides render;

  auto* gen = app.add_subcommand("generate", "Simulate, render and write a batch of samples");
  int count = 1;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string noise_mode = "none";
  std::string noise_params_path;
  int jobs = 1;
  std::optional<double> subtree_removal;
  gen->add_option("--config", config_path, "INI configuration file");
  gen->add_option("--count", count, "Number of samples")->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", seed, "Master seed");
  gen->add_option("--out", out_dir, "Output directory")->required();
  gen->add_option("--noise", noise_mode, "Noise mode")->check(CLI::IsMember({"none", "random", "file"}));
  gen->add_option("--noise-params", noise_params_path, "Noise parameter JSON for --noise file");
  gen->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  gen->add_option("--remove-subtrees", subtree_removal, "Upper bound of the subtree drop probability")
      ->check(CLI::Range(0.0, 1.0));
  add_render_flags(gen, render);

  auto* ren = app.add_subcommand("render", "Re-render a saved graph CSV");
  std::string graph_path;
  std::string render_out;
  ren->add_option("graph", graph_path, "Graph CSV file")->required();
  ren->add_option("--config", config_path, "INI configuration file");
  ren->add_option("--out", render_out, "Output directory")->required();
  add_render_flags(ren, render);

  auto* bench = app.add_subcommand("bench", "Time simulate() over several seeds");
  int reps = 5;
  std::uint64_t bench_seed = 0;
  bench->add_option("--config", config_path, "INI configuration file");
  bench->add_option("--reps", reps, "Repetitions")->check(CLI::PositiveNumber);
  bench->add_option("--seed", bench_seed, "Master seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen) {
      GenerateOptions opt;
      opt.config = load_effective_config(config_path, render);
      if (subtree_removal) opt.config.subtree_removal_upper = *subtree_removal;
      opt.master_seed = seed;
      opt.count = count;
      opt.out_dir = out_dir;
      opt.noise = parse_noise_mode(noise_mode);
      opt.jobs = jobs;
      if (opt.noise == NoiseMode::file) {
        if (noise_params_path.empty()) throw InputError("--noise file requires --noise-params");
        opt.noise_params = load_noise_params(noise_params_path);
      }
      const auto manifest = generate_dataset(opt);
      std::cout << "wrote " << manifest.at("samples").size() << " samples to " << out_dir << '\n';
      return 0;
    }
    if (*ren) return run_render(graph_path, render_out, load_effective_config(config_path, render));
    if (*bench) {
      const auto c = load_effective_config(config_path, render);
      const auto report = run_bench(c, bench_seed, reps, [](int i, const BenchRun& r) {
        std::printf("run %d seed %llu nodes %zu wall_ms %.1f\n", i, static_cast<unsigned long long>(r.seed),
                    r.node_count, r.wall_ms);
        std::fflush(stdout);
      });
      std::printf("median_nodes %.1f\nmedian_ms %.1f\np95_ms %.1f\n", report.median_nodes, report.median_ms,
                  report.p95_ms);
      return 0;
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}

#pragma once

// Batch dataset generation: per-sample pipeline, file layout, manifest and
// the timing benchmark.

#include "octasim/config.hpp"
#include "octasim/graph_io.hpp"
#include "octasim/growth.hpp"
#include "octasim/noise.hpp"
#include "octasim/png_io.hpp"
#include "octasim/raster.hpp"
#include "octasim/random.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace octasim {

inline constexpr const char* kToolVersion = "0.1.0";

enum class NoiseMode { none, random, file };

inline std::string_view to_string(NoiseMode m) {
  switch (m) {
    case NoiseMode::none: return "none";
    case NoiseMode::random: return "random";
    case NoiseMode::file: return "file";
  }
  return "none";
}

inline NoiseMode parse_noise_mode(std::string_view s) {
  if (s == "none") return NoiseMode::none;
  if (s == "random") return NoiseMode::random;
  if (s == "file") return NoiseMode::file;
  throw std::invalid_argument("unknown noise mode '" + std::string(s) + "'");
}

/// Label file suffix for a threshold in micrometres: 0 -> "0", 2.5 -> "2.5".
inline std::string detail_tag(double um) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", um);
  return buf;
}

inline std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed for " + path.string());
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out.flush()) throw std::runtime_error("failed writing " + path.string());
}

struct SampleFiles {
  std::string graph;
  std::string graph_json;
  std::string image;
  std::vector<std::pair<std::string, std::string>> labels;  // (detail tag, file)
  std::optional<std::string> noise;

  [[nodiscard]] std::vector<std::string> all() const {
    std::vector<std::string> v{graph, graph_json, image};
    for (const auto& [tag, f] : labels) v.push_back(f);
    if (noise) v.push_back(*noise);
    return v;
  }
};

inline SampleFiles sample_files(std::uint64_t master_seed, int index, const RenderSettings& render, bool with_noise) {
  const auto stem = std::to_string(master_seed) + "_" + std::to_string(index);
  SampleFiles f;
  f.graph = stem + "_graph.csv";
  f.graph_json = stem + "_graph.json";
  f.image = stem + ".png";
  for (double um : render.details_um) {
    const auto tag = detail_tag(um);
    f.labels.emplace_back(tag, stem + "_label_" + tag + ".png");
  }
  if (with_noise) f.noise = stem + "_noise.json";
  return f;
}

struct SampleRecord {
  int index = 0;
  std::uint64_t seed = 0;
  SampleFiles files;
  std::size_t node_count = 0;
  double wall_ms = 0.0;
  std::map<std::string, std::string> sha256;
};

/// Final grayscale image: MIP at the base size, optional noise, then upsampling.
inline RasterImage render_image(const VesselForest& forest, const GeneratorConfig& c,
                                const std::optional<RasterImage>& background = std::nullopt,
                                const NoiseParams* noise = nullptr, Rng* noise_rng = nullptr) {
  auto img = render_mip(forest, c.render.img_size, c.simulation.fov_mm);
  if (noise) img = augment(img, *background, *noise, *noise_rng);
  return upsample_bilinear(img, c.render.upsample);
}

/// Labels rendered directly at the upsampled resolution.
inline RasterImage render_label_for(const VesselForest& forest, const GeneratorConfig& c, double detail_um) {
  return render_label(forest, c.render.img_size * c.render.upsample, c.simulation.fov_mm,
                      LabelDetail{detail_um * 1e-3, false});
}

inline void write_label_png(const std::filesystem::path& path, const RasterImage& label) {
  write_png(path.string(), label, 8);
}

struct GenerateOptions {
  GeneratorConfig config;
  std::uint64_t master_seed = 0;
  int count = 1;
  std::filesystem::path out_dir;
  NoiseMode noise = NoiseMode::none;
  std::optional<NoiseParams> noise_params;  // required for NoiseMode::file
  int jobs = 1;
};

/// Runs the full pipeline for one sample and writes its files.
inline SampleRecord generate_sample(const GenerateOptions& opt, int index) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& c = opt.config;
  SampleRecord rec;
  rec.index = index;
  rec.seed = derive_seed(opt.master_seed, static_cast<std::uint64_t>(index));
  rec.files = sample_files(opt.master_seed, index, c.render, opt.noise != NoiseMode::none);

  const PhaseConfig phases[] = {c.svc, c.dvc};
  const auto state = simulate_phases(phases, rec.seed, c.simulation);
  auto graph_json = graph_manifest(state, phases);
  VesselForest forest = state.forest();
  if (c.subtree_removal_upper > 0.0) {
    Rng rng(rec.seed, "subtrees");
    auto removal = remove_random_subtrees(forest, c.subtree_removal_upper, rng);
    graph_json["subtree_removal"] = {{"drop_probability", removal.drop_probability},
                                     {"removed_nodes", removal.removed_nodes}};
    forest = std::move(removal.forest);
    graph_json["node_count"] = forest.size();
  }
  rec.node_count = forest.size();

  RasterImage image;
  if (opt.noise == NoiseMode::none) {
    image = render_image(forest, c);
  } else {
    Rng rng(rec.seed, "noise");
    const NoiseParams params = opt.noise == NoiseMode::random ? random_noise_params(rng, c.noise) : *opt.noise_params;
    const std::optional<RasterImage> background =
        generate_background_map(rec.seed, c.render.img_size, c.dvc, c.simulation, c.background);
    image = render_image(forest, c, background, &params, &rng);
    write_text_file(opt.out_dir / *rec.files.noise, to_json(params).dump(2) + "\n");
  }

  save_graph_csv((opt.out_dir / rec.files.graph).string(), forest);
  write_text_file(opt.out_dir / rec.files.graph_json, graph_json.dump(2) + "\n");
  write_png((opt.out_dir / rec.files.image).string(), image, c.render.bit_depth);
  for (std::size_t i = 0; i < c.render.details_um.size(); ++i) {
    write_label_png(opt.out_dir / rec.files.labels[i].second, render_label_for(forest, c, c.render.details_um[i]));
  }
  for (const auto& f : rec.files.all()) rec.sha256[f] = sha256_file(opt.out_dir / f);
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

inline nlohmann::json to_json(const SampleRecord& r) {
  auto labels = nlohmann::json::object();
  for (const auto& [tag, f] : r.files.labels) labels[tag] = f;
  nlohmann::json j{{"index", r.index},
                   {"seed", r.seed},
                   {"graph", r.files.graph},
                   {"graph_json", r.files.graph_json},
                   {"image", r.files.image},
                   {"labels", labels},
                   {"node_count", r.node_count},
                   {"sha256", r.sha256}};
  j["noise"] = r.files.noise ? nlohmann::json(*r.files.noise) : nlohmann::json(nullptr);
  return j;
}

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kTimingsFile = "timings.csv";

/// Manifest contents depend only on config and seed. Wall-clock times live
/// in the timings sidecar so repeated runs stay byte-identical.
inline nlohmann::json dataset_manifest(const GenerateOptions& opt, const std::vector<SampleRecord>& records) {
  auto samples = nlohmann::json::array();
  for (const auto& r : records) samples.push_back(to_json(r));
  nlohmann::json j{{"tool_version", kToolVersion},
                   {"master_seed", opt.master_seed},
                   {"count", opt.count},
                   {"noise_mode", to_string(opt.noise)},
                   {"config", to_json(opt.config)},
                   {"samples", samples}};
  if (opt.noise == NoiseMode::file) j["noise_params"] = to_json(*opt.noise_params);
  return j;
}

/// Runs `fn(i)` for i in [0, n) on up to `jobs` threads. Results are stored by
/// index; the exception of the lowest failing index is rethrown.
template <class T, class F>
std::vector<T> parallel_map(int n, int jobs, F&& fn) {
  std::vector<std::optional<T>> results(static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  const auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      if (failed) return;
      try {
        results[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        failed = true;
      }
    }
  };
  const int threads = std::clamp(jobs, 1, std::max(1, n));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<T> out;
  out.reserve(results.size());
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

/// Generates `count` samples into out_dir. On failure every file this run
/// would have produced is removed before the error propagates.
inline nlohmann::json generate_dataset(const GenerateOptions& opt) {
  if (opt.count < 0) throw std::invalid_argument("count must be >= 0");
  if (opt.jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  if (opt.noise == NoiseMode::file && !opt.noise_params) throw std::invalid_argument("noise mode 'file' needs parameters");
  opt.config.validate();
  namespace fs = std::filesystem;
  const bool created_dir = !fs::exists(opt.out_dir);
  fs::create_directories(opt.out_dir);

  const auto cleanup = [&] {
    std::error_code ec;
    for (int i = 0; i < opt.count; ++i) {
      for (const auto& f : sample_files(opt.master_seed, i, opt.config.render, opt.noise != NoiseMode::none).all()) {
        fs::remove(opt.out_dir / f, ec);
      }
    }
    fs::remove(opt.out_dir / kManifestFile, ec);
    fs::remove(opt.out_dir / kTimingsFile, ec);
    if (created_dir) fs::remove(opt.out_dir, ec);  // only succeeds when empty
  };

  try {
    const auto records = parallel_map<SampleRecord>(opt.count, opt.jobs, [&](int i) { return generate_sample(opt, i); });
    const auto manifest = dataset_manifest(opt, records);
    write_text_file(opt.out_dir / kManifestFile, manifest.dump(2) + "\n");
    std::string timings = "index,seed,node_count,wall_ms\n";
    for (const auto& r : records) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.3f", r.wall_ms);
      timings += std::to_string(r.index) + "," + std::to_string(r.seed) + "," + std::to_string(r.node_count) + "," +
                 buf + "\n";
    }
    write_text_file(opt.out_dir / kTimingsFile, timings);
    return manifest;
  } catch (...) {
    cleanup();
    throw;
  }
}

/// Re-hashes every file a manifest references; returns the names that are
/// missing or whose hash differs.
inline std::vector<std::string> verify_manifest(const nlohmann::json& manifest, const std::filesystem::path& dir) {
  std::vector<std::string> bad;
  for (const auto& s : manifest.at("samples")) {
    for (const auto& [file, hash] : s.at("sha256").items()) {
      const auto path = dir / file;
      if (!std::filesystem::exists(path) || sha256_file(path) != hash.get<std::string>()) bad.push_back(file);
    }
  }
  return bad;
}

struct BenchRun {
  std::uint64_t seed = 0;
  std::size_t node_count = 0;
  double wall_ms = 0.0;
};

struct BenchReport {
  std::vector<BenchRun> runs;
  double median_ms = 0.0;
  double p95_ms = 0.0;
  double median_nodes = 0.0;
};

/// Median of a non-empty sample (mean of the two middle values for even n).
inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty sample");
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Nearest-rank percentile, q in (0, 100].
inline double percentile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("percentile of empty sample");
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q / 100.0 * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

/// Times simulate() only; rendering and I/O are excluded.
template <class OnRun>
BenchReport run_bench(const GeneratorConfig& c, std::uint64_t master_seed, int repetitions, OnRun&& on_run) {
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  c.validate();
  BenchReport report;
  for (int i = 0; i < repetitions; ++i) {
    BenchRun run;
    run.seed = derive_seed(master_seed, static_cast<std::uint64_t>(i));
    const auto t0 = std::chrono::steady_clock::now();
    const auto state = simulate(c.svc, c.dvc, run.seed, c.simulation);
    run.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    run.node_count = state.forest().size();
    on_run(i, run);
    report.runs.push_back(run);
  }
  std::vector<double> ms;
  std::vector<double> nodes;
  for (const auto& r : report.runs) {
    ms.push_back(r.wall_ms);
    nodes.push_back(static_cast<double>(r.node_count));
  }
  report.median_ms = median(ms);
  report.p95_ms = percentile(ms, 95.0);
  report.median_nodes = median(nodes);
  return report;
}

inline BenchReport run_bench(const GeneratorConfig& c, std::uint64_t master_seed, int repetitions) {
  return run_bench(c, master_seed, repetitions, [](int, const BenchRun&) {});
}

}  // namespace octasim

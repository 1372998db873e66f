#include "octasim/dataset.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <set>

using namespace octasim;
namespace fs = std::filesystem;

namespace {

GeneratorConfig small_config() {
  GeneratorConfig c;
  c.svc.iterations = 10;
  c.svc.sinks_per_iteration = 200;
  c.dvc.iterations = 6;
  c.dvc.sinks_per_iteration = 200;
  c.render.img_size = 96;
  c.render.upsample = 2;
  c.render.details_um = {0.0, 10.0};
  return c;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::path(OCTASIM_TEST_TMP) / name;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Dataset, FileNamesAndTags) {
  EXPECT_EQ(detail_tag(0), "0");
  EXPECT_EQ(detail_tag(10), "10");
  EXPECT_EQ(detail_tag(2.5), "2.5");
  const auto f = sample_files(7, 3, RenderSettings{}, true);
  EXPECT_EQ(f.graph, "7_3_graph.csv");
  EXPECT_EQ(f.image, "7_3.png");
  EXPECT_EQ(f.labels.size(), 3u);
  EXPECT_EQ(f.labels[2].second, "7_3_label_10.png");
  EXPECT_EQ(f.noise, "7_3_noise.json");
  EXPECT_EQ(f.all().size(), 7u);
  EXPECT_EQ(parse_noise_mode("random"), NoiseMode::random);
  EXPECT_THROW(parse_noise_mode("loud"), std::invalid_argument);
}

TEST(Dataset, Sha256KnownValue) {
  const auto path = fs::path(OCTASIM_TEST_TMP) / "abc.txt";
  write_text_file(path, "abc");
  EXPECT_EQ(sha256_file(path), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Dataset, ThreeSamplesManifest) {
  GenerateOptions opt;
  opt.config = small_config();
  opt.master_seed = 11;
  opt.count = 3;
  opt.out_dir = fresh_dir("dataset_three");
  const auto manifest = generate_dataset(opt);
  ASSERT_EQ(manifest.at("samples").size(), 3u);
  std::set<std::uint64_t> seeds;
  for (const auto& s : manifest.at("samples")) seeds.insert(s.at("seed").get<std::uint64_t>());
  EXPECT_EQ(seeds.size(), 3u);
  EXPECT_EQ(manifest.at("tool_version"), kToolVersion);
  EXPECT_EQ(manifest.at("config").at("svc").at("I"), 10);
  EXPECT_TRUE(verify_manifest(manifest, opt.out_dir).empty());
  EXPECT_TRUE(fs::exists(opt.out_dir / kTimingsFile));

  // Coarse label pixel set is a subset of the full label pixel set.
  for (const auto& s : manifest.at("samples")) {
    const auto full = read_png((opt.out_dir / s.at("labels").at("0").get<std::string>()).string());
    const auto coarse = read_png((opt.out_dir / s.at("labels").at("10").get<std::string>()).string());
    EXPECT_EQ(full.width, 192);
    for (std::size_t i = 0; i < full.values.size(); ++i) {
      if (coarse.values[i]) ASSERT_TRUE(full.values[i]) << "pixel " << i;
    }
  }

  // Tampering is detected.
  const auto victim = manifest.at("samples")[1].at("image").get<std::string>();
  write_text_file(opt.out_dir / victim, "x");
  EXPECT_EQ(verify_manifest(manifest, opt.out_dir), std::vector<std::string>{victim});
}

TEST(Dataset, FailureRemovesPartialOutputs) {
  GenerateOptions opt;
  opt.config = small_config();
  opt.count = 2;
  opt.out_dir = fresh_dir("dataset_fail");
  // A label name that collides with an existing directory makes the write fail.
  const auto files = sample_files(0, 1, opt.config.render, false);
  fs::create_directories(opt.out_dir / files.labels[1].second);
  EXPECT_ANY_THROW(generate_dataset(opt));
  for (int i = 0; i < 2; ++i) {
    for (const auto& f : sample_files(0, i, opt.config.render, false).all()) {
      if (f != files.labels[1].second) EXPECT_FALSE(fs::exists(opt.out_dir / f)) << f;
    }
  }
  EXPECT_FALSE(fs::exists(opt.out_dir / kManifestFile));
}

TEST(Dataset, JobsDoNotChangeOutputs) {
  GenerateOptions opt;
  opt.config = small_config();
  opt.master_seed = 5;
  opt.count = 4;
  opt.out_dir = fresh_dir("dataset_jobs1");
  const auto one = generate_dataset(opt);
  opt.jobs = 3;
  opt.out_dir = fresh_dir("dataset_jobs3");
  EXPECT_EQ(generate_dataset(opt).dump(), one.dump());
}

TEST(Dataset, SubtreeRemovalRecorded) {
  GenerateOptions opt;
  opt.config = small_config();
  opt.config.subtree_removal_upper = 0.2;
  opt.out_dir = fresh_dir("dataset_subtrees");
  const auto manifest = generate_dataset(opt);
  const auto graph = nlohmann::json::parse(
      std::ifstream(opt.out_dir / manifest.at("samples")[0].at("graph_json").get<std::string>()));
  EXPECT_TRUE(graph.contains("subtree_removal"));
  EXPECT_EQ(graph.at("node_count"), manifest.at("samples")[0].at("node_count"));
}

TEST(Dataset, ParallelMapOrderAndErrors) {
  const auto v = parallel_map<int>(50, 4, [](int i) { return i * i; });
  for (int i = 0; i < 50; ++i) EXPECT_EQ(v[i], i * i);
  EXPECT_THROW(parallel_map<int>(10, 3,
                                 [](int i) {
                                   if (i == 4) throw std::runtime_error("boom");
                                   return i;
                                 }),
               std::runtime_error);
  EXPECT_TRUE(parallel_map<int>(0, 4, [](int i) { return i; }).empty());
}

TEST(Dataset, MedianAndPercentile) {
  EXPECT_EQ(median({3, 1, 2}), 2);
  EXPECT_EQ(median({4, 1, 2, 3}), 2.5);
  EXPECT_EQ(percentile({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 95), 10);
  EXPECT_EQ(percentile({5, 1, 3, 2, 4}, 50), 3);
  EXPECT_THROW(median({}), std::invalid_argument);
}

TEST(Dataset, BenchReportsEveryRun) {
  auto c = small_config();
  int calls = 0;
  const auto report = run_bench(c, 1, 3, [&](int, const BenchRun&) { ++calls; });
  EXPECT_EQ(calls, 3);
  EXPECT_EQ(report.runs.size(), 3u);
  EXPECT_GT(report.median_nodes, 0);
  EXPECT_GE(report.p95_ms, report.median_ms);
}

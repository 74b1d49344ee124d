#include <gtest/gtest.h>

#include <sstream>

#include "cli_runner.hpp"
#include "test_helpers.hpp"

namespace {

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

std::string smoke() { return cli::config_path("smoke.json"); }

std::filesystem::path synth_scene(const std::filesystem::path& dir) {
  const auto pts = dir / "scene.bin";
  const auto r = cli::run({"synth", "--config", smoke(), "--seed", "7", "--clusters", "2",
                           "--noise", "500", "--out", pts.string(), "--boxes",
                           (dir / "boxes.json").string()},
                          dir);
  EXPECT_EQ(r.exit_code, 0) << r.err;
  return pts;
}

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
  const auto dir = testutil::scratch_dir();
  EXPECT_EQ(cli::run({}, dir).exit_code, 2);
  EXPECT_EQ(cli::run({"infer"}, dir).exit_code, 2);
  EXPECT_EQ(cli::run({"frobnicate"}, dir).exit_code, 2);
}

TEST(Cli, SynthWritesCloudAndBoxes) {
  const auto dir = testutil::scratch_dir();
  const auto pts = synth_scene(dir);
  EXPECT_EQ(std::filesystem::file_size(pts), (2 * 200 + 500) * 16u);
  const auto boxes = cli::load_json((dir / "boxes.json").string());
  EXPECT_EQ(boxes["detections"].size(), 2u);
  const auto csv = dir / "scene.csv";
  ASSERT_EQ(cli::run({"synth", "--config", smoke(), "--out", csv.string()}, dir).exit_code, 0);
  EXPECT_EQ(cli::slurp(csv).rfind("x,y,z,intensity\n", 0), 0u);
}

TEST(Cli, InferIsDeterministicAndSchemaValid) {
  const auto dir = testutil::scratch_dir();
  const auto pts = synth_scene(dir);
  std::string first;
  for (int run = 0; run < 2; ++run) {
    const auto out = dir / ("det" + std::to_string(run) + ".json");
    const auto r = cli::run({"infer", "--config", smoke(), "--points", pts.string(),
                             "--random-weights", "--seed", "7", "--out", out.string()},
                            dir);
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_NE(r.out.find("tokens "), std::string::npos);
    EXPECT_NE(r.out.find("macs.backbone3d "), std::string::npos);
    const auto bytes = cli::slurp(out);
    std::string why;
    EXPECT_TRUE(cli::valid_detections_json(nlohmann::json::parse(bytes), 3, &why)) << why;
    if (run == 0) first = bytes;
    else EXPECT_EQ(bytes, first);
  }
}

TEST(Cli, InferWithDumpedWeightsMatchesRandomWeights) {
  const auto dir = testutil::scratch_dir();
  const auto pts = synth_scene(dir);
  const auto w = dir / "w.bin";
  ASSERT_EQ(cli::run({"infer", "--config", smoke(), "--points", pts.string(), "--random-weights",
                      "--seed", "3", "--out", (dir / "a.json").string(), "--dump-weights",
                      w.string()},
                     dir)
                .exit_code,
            0);
  const auto r = cli::run({"infer", "--config", smoke(), "--points", pts.string(), "--weights",
                           w.string(), "--out", (dir / "b.json").string()},
                          dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(cli::slurp(dir / "a.json"), cli::slurp(dir / "b.json"));
}

TEST(Cli, InferEmptyCloud) {
  const auto dir = testutil::scratch_dir();
  testutil::write_bytes(dir / "empty.bin", "");
  const auto r = cli::run({"infer", "--config", smoke(), "--points", (dir / "empty.bin").string(),
                           "--random-weights", "--out", (dir / "d.json").string()},
                          dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("tokens 0"), std::string::npos);
  std::string why;
  EXPECT_TRUE(cli::valid_detections_json(cli::load_json((dir / "d.json").string()), 3, &why)) << why;
}

TEST(Cli, InferErrors) {
  const auto dir = testutil::scratch_dir();
  const auto pts = synth_scene(dir);
  auto bad = cli::load_json(smoke());
  bad["backbone"]["schedule"] = {100};
  cli::write_json(dir / "bad.json", bad);
  auto r = cli::run({"infer", "--config", (dir / "bad.json").string(), "--points", pts.string(),
                     "--random-weights", "--out", (dir / "d.json").string()},
                    dir);
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("backbone.schedule"), std::string::npos) << r.err;

  r = cli::run({"infer", "--config", smoke(), "--points", (dir / "missing.bin").string(),
                "--random-weights", "--out", (dir / "d.json").string()},
               dir);
  EXPECT_EQ(r.exit_code, 1);

  testutil::write_bytes(dir / "trunc.bin", std::string(20, '\0'));
  r = cli::run({"infer", "--config", smoke(), "--points", (dir / "trunc.bin").string(),
                "--random-weights", "--out", (dir / "d.json").string()},
               dir);
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.err.find("offset 16"), std::string::npos) << r.err;

  r = cli::run({"infer", "--config", smoke(), "--points", pts.string(), "--out",
                (dir / "d.json").string()},
               dir);
  EXPECT_EQ(r.exit_code, 2);
}

TEST(Cli, FlopsReport) {
  const auto dir = testutil::scratch_dir();
  const auto cfg = cli::config_path("default.json");
  const auto r1 = cli::run({"flops", "--config", cfg, "--n-tokens", "6000"}, dir);
  const auto r2 = cli::run({"flops", "--config", cfg, "--n-tokens", "12000"}, dir);
  const auto r0 = cli::run({"flops", "--config", cfg, "--n-tokens", "0"}, dir);
  ASSERT_EQ(r1.exit_code, 0) << r1.err;
  const auto a = nlohmann::json::parse(r1.out), b = nlohmann::json::parse(r2.out),
             z = nlohmann::json::parse(r0.out);
  EXPECT_EQ(a["n_pad"], 6144);
  EXPECT_EQ(b["backbone3d"]["macs"].get<std::uint64_t>(), 2 * a["backbone3d"]["macs"].get<std::uint64_t>());
  EXPECT_EQ(a["backbone3d"]["by_op"]["dwconv1d"]["macs"].get<std::uint64_t>(), 8ull * 6144 * 128 * 11);
  EXPECT_EQ(a["backbone3d"]["layers"].size(), 8u);
  EXPECT_EQ(z["backbone3d"]["macs"], 0);
  EXPECT_EQ(z["dense"], a["dense"]);
}

TEST(Cli, BenchCustomShapes) {
  const auto dir = testutil::scratch_dir();
  const auto csv = dir / "bench.csv";
  const auto r = cli::run({"bench", "--config", smoke(), "--shapes", "1x64x32,2x32x32", "--repeats",
                           "3", "--out", csv.string()},
                          dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto rows = lines(cli::slurp(csv));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], "B,T,C,K,macs,median_ms,p10_ms,p90_ms");
  EXPECT_EQ(rows[1].rfind("1,64,32,11,", 0), 0u);
  EXPECT_EQ(cli::run({"bench", "--config", smoke(), "--shapes", "1x64x32", "--repeats", "2",
                      "--out", csv.string()},
                     dir)
                .exit_code,
            2);
  EXPECT_EQ(cli::run({"bench", "--config", smoke(), "--shapes", "1x64", "--out", csv.string()}, dir)
                .exit_code,
            2);
}

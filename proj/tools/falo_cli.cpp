// falo: command-line driver for the pillar detection pipeline.
//
//   falo infer --config C --points P (--weights W | --random-weights) --out D.json
//   falo bench --config C [--shapes default|BxTxC,...] --out rows.csv
//   falo flops --config C --n-tokens N
//   falo synth [--config C] [scene flags] --out P.bin|P.csv [--boxes B.json]
//
// Exit codes: 0 success, 1 I/O or file-format error, 2 configuration or usage error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "falo/falo.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;

struct InferArgs {
  std::string config, points, weights, out, dump_weights;
  bool random_weights = false;
  std::optional<std::uint64_t> seed;
};

struct BenchArgs {
  std::string config, shapes = "default", out;
  std::size_t repeats = 5, warmup = 1;
};

struct FlopsArgs {
  std::string config, out;
  std::size_t n_tokens = 6000;
};

struct SynthArgs {
  std::string config, out, boxes;
  std::uint64_t seed = 7;
  std::size_t clusters = 2, points_per_cluster = 200, noise = 500;
  std::vector<double> box{4.0, 2.0, 1.6};
  std::vector<double> range;
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw falo::IoError("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw falo::IoError("write failed for '" + path + "'");
}

nlohmann::ordered_json report_json(const falo::FlopsReport& r) {
  nlohmann::ordered_json j;
  j["macs"] = r.macs;
  j["muls"] = r.muls;
  j["adds"] = r.adds;
  j["gflops"] = r.gflops();
  nlohmann::ordered_json ops = nlohmann::ordered_json::object();
  for (const auto& [name, c] : r.by_op) ops[name] = {{"macs", c.macs}, {"muls", c.muls},
                                                     {"adds", c.adds}};
  j["by_op"] = std::move(ops);
  return j;
}

int cmd_infer(const InferArgs& a) {
  const falo::PipelineConfig cfg = falo::load_config(a.config);
  const std::uint64_t seed = a.seed.value_or(cfg.seed);
  const falo::WeightStore store =
      a.random_weights ? falo::random_weights(cfg, seed) : falo::read_weight_file(a.weights);
  if (!a.dump_weights.empty()) falo::write_weight_file(store, a.dump_weights);
  const falo::PipelineParams params = falo::params_from_weights(store, cfg);
  const falo::PointCloud cloud = falo::load_points(a.points);

  const falo::InferenceResult res = falo::run_inference(cfg, cloud, params);
  falo::save_detections(res.detections, a.out);

  std::cout << "points " << res.n_points << "\n"
            << "tokens " << res.n_tokens << "\n"
            << "padded_tokens " << res.n_pad << "\n";
  for (const auto& s : res.stage_flops) std::cout << "macs." << s.stage << " " << s.flops.macs << "\n";
  const falo::FlopsReport total = res.total_flops();
  std::cout << "macs.total " << total.macs << "\n"
            << "gflops.total " << total.gflops() << "\n"
            << "detections " << res.detections.size() << "\n";
  return kExitOk;
}

std::vector<falo::Shape3> parse_shapes(const std::string& text) {
  if (text == "default") return falo::default_bench_shapes();
  std::vector<falo::Shape3> shapes;
  std::stringstream list(text);
  std::string item;
  while (std::getline(list, item, ',')) {
    unsigned long long b = 0, t = 0, c = 0;
    char tail = 0;
    if (std::sscanf(item.c_str(), "%llux%llux%llu%c", &b, &t, &c, &tail) != 3 || !b || !t || !c) {
      throw falo::ConfigError("shapes", "expected 'default' or BxTxC[,BxTxC...], got '" + item + "'");
    }
    shapes.push_back({b, t, c});
  }
  if (shapes.empty()) throw falo::ConfigError("shapes", "no shapes given");
  return shapes;
}

int cmd_bench(const BenchArgs& a) {
  const falo::PipelineConfig cfg = falo::load_config(a.config);
  falo::BenchSpec spec;
  spec.shapes = parse_shapes(a.shapes);
  spec.repeats = a.repeats;
  spec.warmup = a.warmup;
  spec.kernel = cfg.backbone.kernel;
  spec.seed = cfg.seed;
  const auto rows = falo::bench_layer(spec);

  std::ostringstream csv;
  falo::write_bench_csv(csv, rows, spec.kernel);
  write_text(a.out, csv.str());

  const bool defaults = spec.shapes == falo::default_bench_shapes();
  std::printf("%-16s %14s %10s %10s %10s%s\n", "shape", "macs", "median_ms", "p10_ms", "p90_ms",
              defaults ? "  ref_npu_ms" : "");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const std::string shape = std::to_string(r.shape.batch) + "x" + std::to_string(r.shape.tokens) +
                              "x" + std::to_string(r.shape.channels);
    std::printf("%-16s %14llu %10.3f %10.3f %10.3f", shape.c_str(),
                static_cast<unsigned long long>(r.macs), r.median_ms, r.p10_ms, r.p90_ms);
    if (defaults) std::printf("  %10.2f", falo::kReferenceNpuLatencyMs[i]);
    std::printf("\n");
  }
  return kExitOk;
}

int cmd_flops(const FlopsArgs& a) {
  const falo::PipelineConfig cfg = falo::load_config(a.config);
  const falo::FlopsSummary s = falo::pipeline_flops(cfg, a.n_tokens);

  nlohmann::ordered_json j;
  j["n_tokens"] = s.n_tokens;
  j["n_pad"] = s.n_pad;
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  for (const auto& l : s.backbone_layers) layers.push_back(report_json(l));
  j["backbone3d"] = report_json(s.backbone);
  j["backbone3d"]["layers"] = std::move(layers);
  j["attention_reference"] = report_json(s.attention_reference);
  j["attention_over_backbone_macs"] =
      s.backbone.macs == 0 ? 0.0
                           : static_cast<double>(s.attention_reference.macs) /
                                 static_cast<double>(s.backbone.macs);
  j["dense"]["bev_backbone"] = report_json(s.bev);
  j["dense"]["head"] = report_json(s.head);
  falo::FlopsReport total = s.backbone;
  total += s.bev;
  total += s.head;
  j["total"] = report_json(total);

  const std::string text = j.dump(2) + "\n";
  if (!a.out.empty()) write_text(a.out, text);
  std::cout << text;
  return kExitOk;
}

int cmd_synth(const SynthArgs& a) {
  falo::SceneSpec spec;
  if (!a.config.empty()) spec.range = falo::load_config(a.config).voxel.range;
  if (!a.range.empty()) {
    spec.range = {a.range[0], a.range[1], a.range[2], a.range[3], a.range[4], a.range[5]};
  }
  spec.seed = a.seed;
  spec.num_clusters = a.clusters;
  spec.points_per_cluster = a.points_per_cluster;
  spec.noise_points = a.noise;
  spec.box_l = a.box[0];
  spec.box_w = a.box[1];
  spec.box_h = a.box[2];
  const falo::SyntheticScene scene = falo::synth_scene(spec);
  falo::save_points(scene.cloud, a.out);
  if (!a.boxes.empty()) falo::save_detections(scene.boxes, a.boxes);
  std::cout << "points " << scene.cloud.size() << "\n"
            << "boxes " << scene.boxes.size() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FALO pillar detection pipeline"};
  app.require_subcommand(1);

  InferArgs infer;
  auto* ci = app.add_subcommand("infer", "Run detection on a point cloud");
  ci->add_option("--config", infer.config, "Pipeline config (JSON)")->required();
  ci->add_option("--points", infer.points, "Point cloud (.bin xyzi or .csv)")->required();
  auto* w = ci->add_option("--weights", infer.weights, "Weight file");
  auto* rw = ci->add_flag("--random-weights", infer.random_weights,
                          "Initialize weights from the seed instead of a file");
  w->excludes(rw);
  ci->add_option("--seed", infer.seed, "Seed for --random-weights (default: config seed)");
  ci->add_option("--out", infer.out, "Detections JSON output")->required();
  ci->add_option("--dump-weights", infer.dump_weights, "Also write the weights used to this file");

  BenchArgs bench;
  auto* cb = app.add_subcommand("bench", "Time one ConvDotMix layer across tensor shapes");
  cb->add_option("--config", bench.config, "Pipeline config (JSON)")->required();
  cb->add_option("--shapes", bench.shapes, "'default' or BxTxC[,BxTxC...]");
  cb->add_option("--out", bench.out, "CSV output")->required();
  cb->add_option("--repeats", bench.repeats, "Timed passes per shape (>= 3)");
  cb->add_option("--warmup", bench.warmup, "Untimed passes per shape");

  FlopsArgs flops;
  auto* cf = app.add_subcommand("flops", "Analytic operation counts for N voxel tokens");
  cf->add_option("--config", flops.config, "Pipeline config (JSON)")->required();
  cf->add_option("--n-tokens", flops.n_tokens, "Number of non-empty pillars");
  cf->add_option("--out", flops.out, "Also write the JSON report here");

  SynthArgs synth;
  auto* cs = app.add_subcommand("synth", "Generate a deterministic synthetic scene");
  cs->add_option("--config", synth.config, "Take the point range from this config");
  cs->add_option("--seed", synth.seed, "Scene seed");
  cs->add_option("--clusters", synth.clusters, "Number of object clusters");
  cs->add_option("--points-per-cluster", synth.points_per_cluster, "Points per cluster");
  cs->add_option("--noise", synth.noise, "Uniform noise points");
  cs->add_option("--box", synth.box, "Cluster box l w h (m)")->expected(3);
  cs->add_option("--range", synth.range, "x_min y_min z_min x_max y_max z_max (m)")->expected(6);
  cs->add_option("--out", synth.out, "Point cloud output (.bin or .csv)")->required();
  cs->add_option("--boxes", synth.boxes, "Ground-truth boxes JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (ci->parsed()) {
      if (!infer.random_weights && infer.weights.empty()) {
        throw falo::ConfigError("weights", "pass --weights FILE or --random-weights");
      }
      return cmd_infer(infer);
    }
    if (cb->parsed()) return cmd_bench(bench);
    if (cf->parsed()) return cmd_flops(flops);
    if (cs->parsed()) return cmd_synth(synth);
  } catch (const falo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}

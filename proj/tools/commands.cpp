#include "commands.hpp"

#include "sparsevox/checkpoint.hpp"
#include "sparsevox/dataset.hpp"
#include "sparsevox/errors.hpp"
#include "sparsevox/ppm.hpp"
#include "sparsevox/rasterizer.hpp"
#include "sparsevox/synth.hpp"
#include "sparsevox/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

namespace sparsevox::cli {

namespace fs = std::filesystem;

namespace {

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

struct SynthArgs {
  std::string scene;
  std::string out;
  int size = 64;
  int cameras = 16;
};

struct TrainArgs {
  std::string config;
  std::string data;
  std::string out;
  std::int64_t seed = -1;
  std::vector<std::string> ablate;
  int iters = 0;
  int threads = -1;
};

struct RenderArgs {
  std::string checkpoint;
  std::string data;
  std::string out = ".";
  int view = 0;
  int threads = 0;
};

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string split = "test";
  int holdout_every = 8;
  int threads = 0;
};

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": malformed JSON", e.byte > 0 ? e.byte - 1 : 0);
  }
}

int run_synth(const SynthArgs& a, std::ostream& out) {
  const SceneSpec spec = a.scene.empty() ? three_box_scene(a.size, a.cameras) : scene_from_json(read_json_file(a.scene));
  const Dataset ds = synth(spec, a.out);
  out << "wrote " << ds.size() << " views to " << a.out << "\n";
  return 0;
}

int run_train(const TrainArgs& a, std::ostream& out) {
  TrainConfig config = a.config.empty() ? TrainConfig{} : load_train_config(a.config);
  if (a.seed >= 0) config.seed = static_cast<std::uint64_t>(a.seed);
  if (a.iters > 0) {
    config.total_iters = a.iters;
    // Derived schedule values follow the new length unless the config pinned them.
    if (a.config.empty()) config.adapt_every = 0;
  }
  if (a.threads >= 0) config.threads = a.threads;
  for (const auto& flag : a.ablate) {
    if (flag == "lf") config.ablate.lf_off = true;
    else if (flag == "prune") config.ablate.prune_off = true;
    else if (flag == "subdiv") config.ablate.subdivide_off = true;
    else if (flag == "bins") config.ablate.depth_bins_off = true;
  }
  const Dataset ds = load_dataset(a.data);
  const TrainResult result = train_to_dir(config, ds, a.out);
  const EvalSummary held_out = eval(result.grid, ds, result.split.test, config.threads);
  out << "trained " << result.rows.size() << " iterations, " << result.grid.size() << " voxels, peak "
      << result.peak_model_bytes << " bytes\n";
  out << std::fixed << std::setprecision(4) << "held-out psnr " << held_out.mean_psnr << " ssim "
      << held_out.mean_ssim << "\n";
  return 0;
}

int run_render(const RenderArgs& a, std::ostream& out) {
  const fs::path ckpt(a.checkpoint);
  const VoxelGrid grid = load_checkpoint(ckpt);
  const fs::path cam_dir = a.data.empty() ? ckpt.parent_path() : fs::path(a.data);
  const std::vector<Camera> cameras = read_cameras_json(cam_dir / "cameras.json");
  if (a.view < 0 || static_cast<std::size_t>(a.view) >= cameras.size()) {
    throw NotFoundError("view " + std::to_string(a.view) + " not in " + std::to_string(cameras.size()) + " cameras");
  }
  RenderOptions options;
  options.threads = a.threads;
  const RenderOutput frame = render_image(grid, cameras[a.view], options);
  char name[32];
  std::snprintf(name, sizeof(name), "view_%04d.ppm", a.view);
  fs::create_directories(a.out);
  const fs::path path = fs::path(a.out) / name;
  write_ppm(frame.image, path);
  out << "wrote " << path.string() << "\n";
  return 0;
}

int run_eval(const EvalArgs& a, std::ostream& out) {
  const VoxelGrid grid = load_checkpoint(a.checkpoint);
  const Dataset ds = load_dataset(a.data);
  const DatasetSplit split = split_views(ds.size(), a.holdout_every);
  std::vector<std::size_t> views;
  if (a.split == "test") views = split.test;
  else if (a.split == "train") views = split.train;
  else
    for (std::size_t i = 0; i < ds.size(); ++i) views.push_back(i);
  const EvalSummary s = eval(grid, ds, views, a.threads);
  out << std::fixed << std::setprecision(4);
  out << "view,psnr,ssim\n";
  for (const auto& v : s.views) out << v.view << ',' << v.psnr << ',' << v.ssim << "\n";
  out << "mean psnr " << s.mean_psnr << " ssim " << s.mean_ssim << "\n";
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse voxel radiance field trainer"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic box-scene dataset");
  synth_cmd->add_option("--scene", synth_args.scene, "Scene spec JSON (default: built-in three-box scene)");
  synth_cmd->add_option("--out", synth_args.out, "Output dataset directory")->required();
  synth_cmd->add_option("--size", synth_args.size, "Image size for the built-in scene")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--cameras", synth_args.cameras, "Camera count for the built-in scene")
      ->check(CLI::PositiveNumber);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a voxel grid on a dataset");
  train_cmd->add_option("--config", train_args.config, "Training config JSON");
  train_cmd->add_option("--data", train_args.data, "Dataset directory")->required();
  train_cmd->add_option("--out", train_args.out, "Output directory")->required();
  train_cmd->add_option("--seed", train_args.seed, "Random seed")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--ablate", train_args.ablate, "Disable a component (repeatable)")
      ->check(CLI::IsMember({"lf", "prune", "subdiv", "bins"}));
  train_cmd->add_option("--iters", train_args.iters, "Override total iterations")->check(CLI::PositiveNumber);
  train_cmd->add_option("--threads", train_args.threads, "Worker threads (0 = default)")
      ->check(CLI::NonNegativeNumber);

  RenderArgs render_args;
  auto* render_cmd = app.add_subcommand("render", "Render one camera view of a checkpoint to PPM");
  render_cmd->add_option("--checkpoint", render_args.checkpoint, "Checkpoint JSON")->required();
  render_cmd->add_option("--view", render_args.view, "Camera index")->check(CLI::NonNegativeNumber);
  render_cmd->add_option("--data", render_args.data, "Directory holding cameras.json (default: checkpoint's)");
  render_cmd->add_option("--out", render_args.out, "Output directory");
  render_cmd->add_option("--threads", render_args.threads, "Worker threads")->check(CLI::NonNegativeNumber);

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Report PSNR/SSIM of a checkpoint on dataset views");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint JSON")->required();
  eval_cmd->add_option("--data", eval_args.data, "Dataset directory")->required();
  eval_cmd->add_option("--split", eval_args.split, "Views to evaluate")->check(CLI::IsMember({"test", "train", "all"}));
  eval_cmd->add_option("--holdout-every", eval_args.holdout_every, "Held-out view stride");
  eval_cmd->add_option("--threads", eval_args.threads, "Worker threads")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*synth_cmd) return run_synth(synth_args, out);
    if (*train_cmd) return run_train(train_args, out);
    if (*render_cmd) return run_render(render_args, out);
    if (*eval_cmd) return run_eval(eval_args, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace sparsevox::cli

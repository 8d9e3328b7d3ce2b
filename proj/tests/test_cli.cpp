#include "commands.hpp"

#include "sparsevox/checkpoint.hpp"
#include "sparsevox/ppm.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace sparsevox {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "sparsevox");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliResult r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / ("sparsevox_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  std::string path(const std::string& name) const { return (root_ / name).string(); }

  void make_dataset() {
    ASSERT_EQ(run({"synth", "--out", path("data"), "--size", "16", "--cameras", "6"}).code, 0);
  }
  void write_config(int iters) {
    std::ofstream(path("cfg.json")) << R"({"total_iters": )" << iters << R"(, "init_level": 2, "threads": 1})";
  }

  fs::path root_;
};

TEST_F(CliTest, SynthWritesDataset) {
  make_dataset();
  EXPECT_TRUE(fs::exists(path("data/cameras.json")));
  EXPECT_TRUE(fs::exists(path("data/images/view_0005.ppm")));
}

TEST_F(CliTest, SynthFromSceneFile) {
  std::ofstream(path("scene.json"))
      << R"({"boxes": [{"min": [-0.5,-0.5,-0.5], "max": [0.5,0.5,0.5], "color": [1,0,0], "opacity": 1}],
             "cameras": {"count": 2, "radius": 3, "height": 0.5, "fov_deg": 50}, "width": 12, "height": 10})";
  ASSERT_EQ(run({"synth", "--scene", path("scene.json"), "--out", path("d")}).code, 0);
  const Image img = read_ppm(path("d/images/view_0001.ppm"));
  EXPECT_EQ(img.width(), 12);
  EXPECT_EQ(img.height(), 10);
  EXPECT_EQ(img.at(6, 5, 0), 1.0);
}

TEST_F(CliTest, TrainRenderEval) {
  make_dataset();
  write_config(40);
  const CliResult t = run({"train", "--config", path("cfg.json"), "--data", path("data"), "--out", path("o")});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_TRUE(fs::exists(path("o/metrics.csv")));
  EXPECT_TRUE(fs::exists(path("o/checkpoint.json")));
  EXPECT_NE(t.out.find("held-out psnr"), std::string::npos);

  const CliResult r = run({"render", "--checkpoint", path("o/checkpoint.json"), "--view", "2", "--out", path("r")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream ppm(path("r/view_0002.ppm"), std::ios::binary);
  std::string header;
  std::getline(ppm, header);
  EXPECT_EQ(header, "P6");
  EXPECT_EQ(read_ppm(path("r/view_0002.ppm")).width(), 16);

  const CliResult e = run({"eval", "--checkpoint", path("o/checkpoint.json"), "--data", path("data")});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_NE(e.out.find("view,psnr,ssim"), std::string::npos);
  EXPECT_NE(e.out.find("mean psnr"), std::string::npos);
}

TEST_F(CliTest, AblationFlagReachesTrainer) {
  make_dataset();
  write_config(40);
  ASSERT_EQ(run({"train", "--config", path("cfg.json"), "--data", path("data"), "--out", path("o"), "--ablate",
                 "prune", "--ablate", "subdiv"})
                .code,
            0);
  std::ifstream csv(path("o/metrics.csv"));
  std::string line;
  std::getline(csv, line);
  while (std::getline(csv, line)) {
    // splits and prunes are the 12th and 13th columns
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    ASSERT_EQ(cells.size(), 14u);
    EXPECT_EQ(cells[11], "0");
    EXPECT_EQ(cells[12], "0");
  }
}

TEST_F(CliTest, BadFlagsExitTwo) {
  EXPECT_EQ(run({"train", "--data", path("x")}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"train", "--data", "d", "--out", "o", "--ablate", "everything"}).code, 2);
  EXPECT_EQ(run({"eval", "--checkpoint", "c", "--data", "d", "--split", "val"}).code, 2);
}

TEST_F(CliTest, HelpExitsZero) { EXPECT_EQ(run({"--help"}).code, 0); }

TEST_F(CliTest, DataErrorsExitOne) {
  const CliResult missing = run({"train", "--data", path("nope"), "--out", path("o")});
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find("error:"), std::string::npos);

  make_dataset();
  std::ofstream(path("bad.json")) << R"({"total_iters": "many"})";
  EXPECT_EQ(run({"train", "--config", path("bad.json"), "--data", path("data"), "--out", path("o")}).code, 1);

  std::ofstream(path("ckpt.json")) << "{ not json";
  EXPECT_EQ(run({"render", "--checkpoint", path("ckpt.json")}).code, 1);
}

TEST_F(CliTest, BinaryRunsAsProcess) {
  const std::string cmd = std::string(SPARSEVOX_CLI_PATH) + " synth --out " + path("proc") + " --size 8 --cameras 2 > " +
                          path("log.txt") + " 2>&1";
  EXPECT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(path("proc/images/view_0001.ppm")));
  const std::string bad = std::string(SPARSEVOX_CLI_PATH) + " render > " + path("log2.txt") + " 2>&1";
  const int status = std::system(bad.c_str());
  EXPECT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 2);
}

}  // namespace
}  // namespace sparsevox

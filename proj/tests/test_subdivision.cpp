#include "sparsevox/subdivision.hpp"

#include "oracles.hpp"
#include "sparsevox/errors.hpp"
#include "sparsevox/optimizer.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

namespace sparsevox {
namespace {

using testing::random_grid;
using testing::unit_bounds;

std::vector<VoxelKey> sorted(std::vector<VoxelKey> keys) {
  std::sort(keys.begin(), keys.end());
  return keys;
}

TEST(Eligibility, Examples) {
  VoxelGrid grid(unit_bounds(), 4);
  grid.insert(VoxelKey{2, 0, 0, 0}, Voxel{});  // half size 0.25
  grid.insert(VoxelKey{4, 15, 15, 15}, Voxel{});
  const Voxel& coarse = grid.voxel(*grid.find(VoxelKey{2, 0, 0, 0}));
  const Voxel& finest = grid.voxel(*grid.find(VoxelKey{4, 15, 15, 15}));
  EXPECT_TRUE(eligibility(coarse, 0.125, 1.0, 4));
  EXPECT_FALSE(eligibility(coarse, 0.3125, 1.0, 4));
  EXPECT_FALSE(eligibility(coarse, 0.25, 1.0, 4));
  EXPECT_FALSE(eligibility(finest, 1e-6, 1.0, 4));
  EXPECT_FALSE(eligibility(coarse, 0.01, 1.0, 2));
}

TEST(NormalizeDepth, Examples) {
  const DepthPercentiles p{2.0, 4.0};
  EXPECT_EQ(normalize_depth(2.0, p), 0.0);
  EXPECT_EQ(normalize_depth(4.0, p), 1.0);
  EXPECT_EQ(normalize_depth(1.0, p), 0.0);
  EXPECT_EQ(normalize_depth(9.0, p), 1.0);
  EXPECT_EQ(normalize_depth(3.0, p), 0.5);
  EXPECT_EQ(normalize_depth(7.0, DepthPercentiles{3.0, 3.0}), 0.5);
}

TEST(DepthPercentiles, LinearInterpolation) {
  std::vector<double> d;
  for (int i = 0; i <= 100; ++i) d.push_back(i);
  const auto p = compute_depth_percentiles(d);
  EXPECT_DOUBLE_EQ(p.z_p5, 5.0);
  EXPECT_DOUBLE_EQ(p.z_p95, 95.0);
}

TEST(FarBias, Examples) {
  EXPECT_EQ(far_bias(0.0, 0.2), 1.0);
  EXPECT_DOUBLE_EQ(far_bias(1.0, 0.2), 1.2);
  EXPECT_DOUBLE_EQ(far_bias(0.5, 0.1), 1.05);
}

TEST(Usefulness, ConstantStreamConverges) {
  Voxel v;
  for (int i = 0; i < 200; ++i) update_usefulness(v, 0.7, 0.3);
  EXPECT_NEAR(v.usefulness, 0.7, 1e-12);
  for (int i = 0; i < 200; ++i) update_usefulness(v, 0.0, 0.3);
  EXPECT_NEAR(v.usefulness, 0.0, 1e-12);
}

TEST(Usefulness, MatchesScalarFold) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  Voxel v;
  double oracle_u = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double s = u(rng);
    update_usefulness(v, s, 0.25);
    oracle_u = 0.75 * oracle_u + 0.25 * s;
  }
  EXPECT_NEAR(v.usefulness, oracle_u, 1e-12);
}

TEST(Usefulness, FromWindowUsesMeanResidualTimesWmax) {
  VoxelGrid grid = VoxelGrid::init_uniform(unit_bounds(), 1, 0.5, Vec3(0.5, 0.5, 0.5));
  WindowStats w;
  w.reset(grid.size());
  w.residual_sum[0] = 0.6;
  w.residual_count[0] = 3;
  grid.mutable_voxel(0).w_max = 0.5;
  grid.mutable_voxel(1).w_max = 0.9;  // no counted rays
  update_usefulness_from_window(grid, w, 1.0);
  EXPECT_NEAR(grid.voxel(0).usefulness, 0.5 * 0.2, 1e-15);
  EXPECT_EQ(grid.voxel(1).usefulness, 0.0);
}

// Three eligible voxels in one row with controlled priorities.
struct Three {
  VoxelGrid grid{unit_bounds(), 6};
  VoxelViewInfo views;
};

Three three_voxels(const std::vector<double>& usefulness) {
  Three t;
  for (std::size_t i = 0; i < usefulness.size(); ++i) {
    Voxel v;
    v.usefulness = usefulness[i];
    t.grid.insert(VoxelKey{2, static_cast<int>(i), 0, 0}, v);
  }
  t.views.depth.assign(t.grid.size(), 3.0);
  t.views.spacing.assign(t.grid.size(), 0.01);
  return t;
}

TEST(SelectAndSplit, BudgetZero) {
  Three t = three_voxels({5, 2, 9});
  SubdivideConfig c;
  c.budget = 0;
  const auto r = select_and_split(t.grid, t.views, c);
  EXPECT_TRUE(r.split.empty());
  EXPECT_EQ(t.grid.size(), 3u);
}

TEST(SelectAndSplit, TopTwoByPriority) {
  Three t = three_voxels({5, 2, 9});
  SubdivideConfig c;
  c.budget = 2;
  const auto r = select_and_split(t.grid, t.views, c);
  ASSERT_EQ(r.split.size(), 2u);
  EXPECT_EQ(r.split[0], (VoxelKey{2, 2, 0, 0}));
  EXPECT_EQ(r.split[1], (VoxelKey{2, 0, 0, 0}));
  EXPECT_EQ(r.truncated_by, Truncation::kBudget);
  EXPECT_EQ(r.eligible, 3u);
  EXPECT_TRUE(t.grid.contains(VoxelKey{2, 1, 0, 0}));
  EXPECT_EQ(t.grid.size(), 1u + 16u);
  EXPECT_DOUBLE_EQ(r.min_selected_priority(), 5.0 * 1.1);
}

TEST(SelectAndSplit, HardCapBlocksSplits) {
  Three t = three_voxels({5, 2, 9});
  SubdivideConfig c;
  c.budget = 3;
  c.hard_cap = 9;  // 3 + 7 > 9
  const auto r = select_and_split(t.grid, t.views, c);
  EXPECT_TRUE(r.split.empty());
  EXPECT_EQ(r.truncated_by, Truncation::kHardCap);
  c.hard_cap = 10;
  const auto r2 = select_and_split(t.grid, t.views, c);
  EXPECT_EQ(r2.split.size(), 1u);
  EXPECT_LE(t.grid.size(), 10u);
}

TEST(SelectAndSplit, DeeperWinsTies) {
  Three t = three_voxels({1, 1, 1});
  t.views.depth = {2.0, 5.0, 3.0};
  SubdivideConfig c;
  c.budget = 1;
  const auto r = select_and_split(t.grid, t.views, c);
  ASSERT_EQ(r.split.size(), 1u);
  EXPECT_EQ(r.split[0], (VoxelKey{2, 1, 0, 0}));
}

TEST(SelectAndSplit, EqualPrioritiesFollowKeyOrder) {
  Three t = three_voxels({1, 1, 1});
  SubdivideConfig c;
  c.budget = 2;
  const auto r = select_and_split(t.grid, t.views, c);
  ASSERT_EQ(r.split.size(), 2u);
  EXPECT_EQ(r.split[0], (VoxelKey{2, 0, 0, 0}));
  EXPECT_EQ(r.split[1], (VoxelKey{2, 1, 0, 0}));
}

TEST(SelectAndSplit, MatchesSortOracleAndInvariants) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    VoxelGrid grid = random_grid(rng, 40 + trial * 8, 5);
    oracle::randomize_stats(grid, rng);
    const VoxelViewInfo views = oracle::random_views(grid, rng, 0.12);
    SubdivideConfig c;
    c.budget = trial % 4 == 0 ? static_cast<int>(u(rng) * 30) : -1;
    c.budget_fraction = 0.02 + 0.1 * u(rng);
    c.hard_cap = trial % 3 == 0 ? grid.size() + static_cast<std::size_t>(u(rng) * 60) : 0;
    const auto want = oracle::select(grid, views, c);
    const std::size_t live = grid.size();
    std::vector<bool> eligible(live);
    for (std::size_t i = 0; i < live; ++i)
      eligible[i] = eligibility(grid.voxel(i), views.spacing[i], c.kappa, grid.max_level());
    const VoxelGrid before = grid;
    const auto r = select_and_split(grid, views, c);
    EXPECT_EQ(sorted(r.split), want) << "trial " << trial;
    EXPECT_LE(r.split.size(), c.budget_for(live));
    if (c.hard_cap > 0) EXPECT_LE(grid.size(), c.hard_cap);
    for (const auto& k : r.split) EXPECT_TRUE(eligible[*before.find(k)]);
    EXPECT_EQ(grid.size(), live + 7 * r.split.size());
    EXPECT_FALSE(grid.has_overlap());
  }
}

TEST(SelectAndSplit, InvariantUnderPositiveScaling) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    VoxelGrid grid = random_grid(rng, 300, 5);
    oracle::randomize_stats(grid, rng);
    const VoxelViewInfo views = oracle::random_views(grid, rng, 0.12);
    VoxelGrid scaled = grid;
    for (std::size_t i = 0; i < scaled.size(); ++i) scaled.mutable_voxel(i).usefulness *= 4.0;
    SubdivideConfig c;
    c.budget_fraction = 0.1;
    EXPECT_EQ(sorted(select_and_split(grid, views, c).split), sorted(select_and_split(scaled, views, c).split));
  }
}

TEST(SelectAndSplit, RefreshesOptimizer) {
  Three t = three_voxels({5, 2, 9});
  OptimizerState opt(t.grid, AdamConfig{});
  SubdivideConfig c;
  c.budget = 1;
  select_and_split(t.grid, t.views, c, &opt);
  EXPECT_EQ(opt.keys(), t.grid.keys());
}

TEST(SubdivideConfig, Validation) {
  SubdivideConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.budget_for(1000), 20u);
  EXPECT_EQ(c.budget_for(101), 3u);
  c.kappa = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = SubdivideConfig{};
  c.usefulness_ema = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = SubdivideConfig{};
  c.beta = 0.5;  // warns only
  EXPECT_NO_THROW(c.validate());
}

TEST(SplitCsv, HeaderAndRow) {
  std::ostringstream out;
  write_split_csv_header(out);
  Three t = three_voxels({5, 2, 9});
  SubdivideConfig c;
  c.budget = 1;
  append_split_csv(out, 3, select_and_split(t.grid, t.views, c));
  EXPECT_EQ(out.str(), "step,splits,truncated_by,min_selected_priority\n3,1,budget,9.9\n");
}

}  // namespace
}  // namespace sparsevox

#include "sparsevox/pruning.hpp"

#include "oracles.hpp"
#include "sparsevox/errors.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

namespace sparsevox {
namespace {

using testing::random_grid;
using testing::unit_bounds;

std::vector<VoxelKey> sorted_removed(const PruneReport& r) {
  std::vector<VoxelKey> keys = r.removed;
  std::sort(keys.begin(), keys.end());
  return keys;
}

TEST(DepthBins, SingleBin) {
  const std::vector<double> d = {3, 1, 2, 5};
  for (int b : assign_depth_bins(d, 1)) EXPECT_EQ(b, 0);
}

TEST(DepthBins, MedianSplit) {
  const std::vector<double> d = {3, 1, 4, 2};
  EXPECT_EQ(assign_depth_bins(d, 2), (std::vector<int>{1, 0, 1, 0}));
}

TEST(DepthBins, EqualPopulationsMatchSortOracle) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> d(50 + trial * 7);
    for (double& v : d) v = u(rng);
    const auto bins = assign_depth_bins(d, 8);
    EXPECT_EQ(bins, oracle::depth_bins(d, 8));
    std::vector<int> pop(8, 0);
    for (int b : bins) ++pop[b];
    EXPECT_LE(*std::max_element(pop.begin(), pop.end()) - *std::min_element(pop.begin(), pop.end()), 1);
  }
}

TEST(DepthBins, RejectsZeroBins) { EXPECT_THROW(assign_depth_bins(std::vector<double>{1.0}, 0), ArgumentError); }

TEST(DepthBins, EmptyGridGivesEmptyAssignment) {
  const VoxelGrid grid(unit_bounds());
  const std::vector<Camera> cams = {testing::make_camera(8, 8, 8, Vec3(0, 0, -3))};
  EXPECT_TRUE(assign_depth_bins(grid, cams, 4).empty());
}

TEST(BinThreshold, Examples) {
  const std::vector<double> w = {0.3, 0.1, 0.4, 0.2};
  EXPECT_EQ(*bin_threshold(w, 0.5), 0.2);
  EXPECT_EQ(*bin_threshold(w, 0.25), 0.1);
  const std::vector<double> same(5, 0.7);
  for (double q : {0.01, 0.5, 0.99}) EXPECT_EQ(*bin_threshold(same, q), 0.7);
  EXPECT_FALSE(bin_threshold(std::vector<double>{}, 0.5).has_value());
}

TEST(BinThreshold, MatchesCdfOracle) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> k(0, 9);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> w(1 + trial % 40);
    for (double& v : w) v = k(rng) / 10.0;
    const double q = 0.001 + 0.998 * u(rng);
    EXPECT_EQ(*bin_threshold(w, q), oracle::cdf_inverse(w, q));
  }
}

TEST(BinQuantile, AnnealsAndRelaxes) {
  PruneConfig c;
  EXPECT_NEAR(bin_quantile(c, 0.0, 0, 1), 0.05, 1e-15);
  EXPECT_NEAR(bin_quantile(c, 1.0, 0, 1), 0.25, 1e-15);
  EXPECT_NEAR(bin_quantile(c, 0.5, 0, 8), 0.15 * 1.1, 1e-15);
  EXPECT_NEAR(bin_quantile(c, 0.5, 7, 8), 0.15 * 0.9, 1e-15);
  EXPECT_GT(bin_quantile(c, 0.5, 2, 8), bin_quantile(c, 0.5, 5, 8));
}

TEST(InsideState, Examples) {
  PruneConfig c;
  c.ema_alpha = 1.0;
  Voxel v;
  update_inside_state(v, 0.2, c);
  EXPECT_EQ(v.inside_state, InsideState::kOut);
  update_inside_state(v, 0.8, c);
  EXPECT_EQ(v.inside_state, InsideState::kIn);
  update_inside_state(v, 0.5, c);
  EXPECT_EQ(v.inside_state, InsideState::kIn);
  v.inside_state = InsideState::kOut;
  update_inside_state(v, 0.5, c);
  EXPECT_EQ(v.inside_state, InsideState::kOut);
}

TEST(InsideState, EmaRecurrence) {
  PruneConfig c;
  Voxel v;
  v.inside_ema = 0.4;
  update_inside_state(v, 1.0, c);
  EXPECT_NEAR(v.inside_ema, 0.9 * 0.4 + 0.1, 1e-15);
}

TEST(InsideState, BandSequencesNeverFlip) {
  std::mt19937_64 rng(3);
  PruneConfig c;
  std::uniform_real_distribution<double> band(c.m_low + 1e-9, c.m_high - 1e-9);
  for (int trial = 0; trial < 200; ++trial) {
    Voxel v;
    v.inside_ema = band(rng);
    v.inside_state = trial % 2 ? InsideState::kIn : InsideState::kOut;
    const InsideState start = v.inside_state;
    for (int s = 0; s < 100; ++s) {
      update_inside_state(v, band(rng), c);
      EXPECT_EQ(v.inside_state, start);
    }
  }
}

TEST(InsideState, RampFlipsOnce) {
  PruneConfig c;
  Voxel v;
  v.inside_ema = 0.0;
  v.inside_state = InsideState::kOut;
  int flips = 0;
  for (int s = 0; s <= 200; ++s) {
    const InsideState before = v.inside_state;
    update_inside_state(v, s / 200.0, c);
    if (v.inside_state != before) {
      ++flips;
      EXPECT_EQ(v.inside_state, InsideState::kIn);
    }
  }
  for (int s = 0; s < 100; ++s) update_inside_state(v, 1.0, c);
  EXPECT_EQ(flips, 1);
}

TEST(InsideState, GridUpdateUsesContributionFloor) {
  VoxelGrid grid = VoxelGrid::init_uniform(unit_bounds(), 1, 0.5, Vec3(0.5, 0.5, 0.5));
  PruneConfig c;
  c.ema_alpha = 1.0;
  grid.mutable_voxel(0).w_max = 2e-3;
  grid.mutable_voxel(1).w_max = 1e-3;
  update_inside_states(grid, c);
  EXPECT_EQ(grid.voxel(0).inside_ema, 1.0);
  EXPECT_EQ(grid.voxel(1).inside_ema, 0.0);
  EXPECT_EQ(grid.voxel(1).inside_state, InsideState::kOut);
}

TEST(KeepHalo, SizeClause) {
  VoxelGrid grid = VoxelGrid::init_uniform(unit_bounds(), 2, 0.5, Vec3(0.5, 0.5, 0.5));
  PruneConfig c;
  std::vector<double> spacing(grid.size(), 1e-3);
  spacing[5] = 2.0 * grid.voxel(5).half_size();  // h = 0.5 delta
  const auto mask = keep_halo_mask(grid, spacing, c);
  EXPECT_TRUE(mask[5]);
  EXPECT_FALSE(mask[4]);
}

TEST(KeepHalo, IsolatedBrightVoxelIsNotProtected) {
  VoxelGrid grid(unit_bounds(), 6);
  grid.insert(VoxelKey{2, 0, 0, 0}, Voxel{});
  grid.insert(VoxelKey{2, 2, 0, 0}, Voxel{});
  grid.mutable_voxel(0).w_max = 0.9;
  grid.mutable_voxel(1).w_max = 0.9;
  const std::vector<double> spacing(grid.size(), 1e-3);
  const auto mask = keep_halo_mask(grid, spacing, PruneConfig{});
  EXPECT_FALSE(mask[0]);
  EXPECT_FALSE(mask[1]);
}

TEST(KeepHalo, ThinWallMatchesClauseOracle) {
  VoxelGrid grid = VoxelGrid::init_uniform(unit_bounds(), 3, 0.5, Vec3(0.5, 0.5, 0.5));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid.mutable_voxel(i).w_max = grid.voxel(i).key().i == 4 ? 0.95 : 0.1;
  }
  const std::vector<double> spacing(grid.size(), 1e-3);
  PruneConfig c;
  const auto mask = keep_halo_mask(grid, spacing, c);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_EQ(mask[i], grid.voxel(i).key().i == 4);
    EXPECT_EQ(mask[i], oracle::halo_protected(grid, i, spacing[i], c));
  }
}

TEST(PruneStep, CapKeepsLowestWeights) {
  VoxelGrid grid(unit_bounds(), 6);
  std::vector<std::pair<VoxelKey, Voxel>> items;
  for (int n = 0; n < 1000; ++n) items.push_back({VoxelKey{4, n % 16, (n / 16) % 16, n / 256}, Voxel{}});
  grid.insert_many(items);
  std::mt19937_64 rng(4);
  std::vector<std::size_t> idx(grid.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    Voxel& v = grid.mutable_voxel(idx[r]);
    v.w_max = 0.2 + 0.0005 * r;
    v.inside_state = r < 100 ? InsideState::kOut : InsideState::kIn;
  }
  VoxelViewInfo views{std::vector<double>(grid.size(), 3.0), std::vector<double>(grid.size(), 1e-4)};
  PruneConfig c;
  c.num_bins = 1;
  c.q_start = c.q_end = 1e-4;  // only the bin minimum falls below tau, and it is already out
  const VoxelGrid before = grid;
  const auto report = prune_step(grid, views, c, 0.0);
  EXPECT_EQ(report.candidates, 100u);
  EXPECT_EQ(report.cap, 50u);
  EXPECT_TRUE(report.cap_limited);
  ASSERT_EQ(report.total_removed(), 50u);
  std::vector<VoxelKey> want;
  for (std::size_t r = 0; r < 50; ++r) want.push_back(before.voxel(idx[r]).key());
  std::sort(want.begin(), want.end());
  EXPECT_EQ(sorted_removed(report), want);
  EXPECT_EQ(grid.size(), 950u);
}

TEST(PruneStep, AllProtectedRemovesNothing) {
  VoxelGrid grid = VoxelGrid::init_uniform(unit_bounds(), 2, 0.5, Vec3(0.5, 0.5, 0.5));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid.mutable_voxel(i).w_max = 0.0;
    grid.mutable_voxel(i).inside_state = InsideState::kOut;
  }
  VoxelViewInfo views{std::vector<double>(grid.size(), 3.0), std::vector<double>(grid.size(), 10.0)};
  const auto report = prune_step(grid, views, PruneConfig{}, 0.5);
  EXPECT_EQ(report.total_removed(), 0u);
  EXPECT_EQ(grid.size(), 64u);
}

TEST(PruneStep, TinyQuantileRemovesOnlyBinMinima) {
  std::mt19937_64 rng(5);
  VoxelGrid grid = VoxelGrid::init_uniform(unit_bounds(), 3, 0.5, Vec3(0.5, 0.5, 0.5));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  VoxelViewInfo views{{}, std::vector<double>(grid.size(), 1e-4)};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid.mutable_voxel(i).w_max = 0.01 + 0.4 * u(rng);
    views.depth.push_back(1 + u(rng));
  }
  PruneConfig c;
  c.q_start = c.q_end = 1e-6;
  c.cap_fraction = 1.0;
  const auto bins = assign_depth_bins(views.depth, c.num_bins);
  std::vector<double> minima(c.num_bins, 1e9);
  for (std::size_t i = 0; i < grid.size(); ++i) minima[bins[i]] = std::min(minima[bins[i]], grid.voxel(i).w_max);
  std::vector<VoxelKey> want;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid.voxel(i).w_max == minima[bins[i]]) want.push_back(grid.voxel(i).key());
  const auto report = prune_step(grid, views, c, 0.0);
  EXPECT_EQ(sorted_removed(report), want);
  EXPECT_EQ(report.total_removed(), static_cast<std::size_t>(c.num_bins));
}

TEST(PruneStep, MatchesBruteForceOracle) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    VoxelGrid grid = random_grid(rng, 50 + trial * 9, 5);
    oracle::randomize_stats(grid, rng);
    const VoxelViewInfo views = oracle::random_views(grid, rng);
    PruneConfig c;
    c.num_bins = 1 + trial % 8;
    c.cap_fraction = trial % 3 == 0 ? 0.05 : 0.3;
    const double progress = u(rng);
    const auto want = oracle::prune(grid, views, c, progress);
    const std::size_t live = grid.size();
    const auto report = prune_step(grid, views, c, progress);
    EXPECT_EQ(sorted_removed(report), want) << "trial " << trial;
    EXPECT_LE(report.total_removed(), static_cast<std::size_t>(std::ceil(c.cap_fraction * live)));
    EXPECT_EQ(grid.size(), live - report.total_removed());
  }
}

TEST(PruneStep, NeverRemovesProtectedVoxels) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    VoxelGrid grid = random_grid(rng, 300, 5);
    oracle::randomize_stats(grid, rng);
    const VoxelViewInfo views = oracle::random_views(grid, rng, 0.1);
    PruneConfig c;
    c.cap_fraction = 1.0;
    const auto mask = keep_halo_mask(grid, views.spacing, c);
    std::vector<VoxelKey> protected_keys;
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (mask[i]) protected_keys.push_back(grid.voxel(i).key());
    prune_step(grid, views, c, 1.0);
    for (const auto& k : protected_keys) EXPECT_TRUE(grid.contains(k));
  }
}

TEST(PruneStep, BinFairness) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  VoxelGrid grid = VoxelGrid::init_uniform(unit_bounds(), 4, 0.5, Vec3(0.5, 0.5, 0.5));
  VoxelViewInfo views{{}, std::vector<double>(grid.size(), 1e-6)};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid.mutable_voxel(i).w_max = u(rng);
    views.depth.push_back(1.0 + 3.0 * u(rng));
  }
  PruneConfig c;
  c.cap_fraction = 1.0;
  c.halo_wmax = 2.0;
  const double progress = 0.6;
  const auto report = prune_step(grid, views, c, progress);
  for (const auto& b : report.bins) {
    const double frac = static_cast<double>(b.pruned) / static_cast<double>(b.population);
    EXPECT_LE(std::abs(frac - b.quantile), 2.0 / std::sqrt(static_cast<double>(b.population))) << "bin " << b.bin;
  }
}

TEST(PruneStep, CameraOverloadAgreesWithViewInfo) {
  std::mt19937_64 rng(9);
  VoxelGrid a = random_grid(rng, 200, 4);
  oracle::randomize_stats(a, rng);
  VoxelGrid b = a;
  std::vector<Camera> cams;
  for (int i = 0; i < 4; ++i) cams.push_back(testing::random_camera(rng, 32, 32));
  const auto ra = prune_step(a, cams, PruneConfig{}, 0.3);
  const auto rb = prune_step(b, compute_view_info(b, cams), PruneConfig{}, 0.3);
  EXPECT_EQ(ra.removed, rb.removed);
}

TEST(PruneConfig, Validation) {
  PruneConfig c;
  EXPECT_NO_THROW(c.validate());
  c.m_low = 0.8;
  EXPECT_THROW(c.validate(), ConfigError);
  c = PruneConfig{};
  c.cap_fraction = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = PruneConfig{};
  c.num_bins = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = PruneConfig{};
  c.ema_alpha = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(PruneCsv, HeaderAndRows) {
  std::ostringstream out;
  write_prune_csv_header(out);
  PruneReport r;
  r.bins.push_back({0, 10, 0.1, 0.25, 2, 3});
  r.bins.push_back({1, 0, 0.1, std::nullopt, 0, 0});
  append_prune_csv(out, 4, r);
  const std::string s = out.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "step,bin,population,tau,pruned,protected");
  EXPECT_NE(s.find("4,0,10,0.25,2,3"), std::string::npos);
}

}  // namespace
}  // namespace sparsevox

#include "sparsevox/optimizer.hpp"

#include "sparsevox/errors.hpp"
#include "sparsevox/pruning.hpp"
#include "sparsevox/subdivision.hpp"

#include <cmath>
#include <map>

namespace sparsevox {

void AdamConfig::validate() const {
  if (!(lr_opacity >= 0.0 && lr_color >= 0.0)) throw ConfigError("optimizer: learning rates must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("optimizer: beta1 and beta2 must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw ConfigError("optimizer: eps must be positive");
}

double adam_update(double param, double grad, double& m, double& v, std::int64_t step, double lr,
                   const AdamConfig& config) {
  m = config.beta1 * m + (1.0 - config.beta1) * grad;
  v = config.beta2 * v + (1.0 - config.beta2) * grad * grad;
  const double m_hat = m / (1.0 - std::pow(config.beta1, static_cast<double>(step)));
  const double v_hat = v / (1.0 - std::pow(config.beta2, static_cast<double>(step)));
  return param - lr * m_hat / (std::sqrt(v_hat) + config.eps);
}

OptimizerState::OptimizerState(const VoxelGrid& grid, const AdamConfig& config)
    : config_(config), keys_(grid.keys()), slots_(grid.size()) {
  config_.validate();
}

void OptimizerState::step(VoxelGrid& grid, const GradientBuffer& grads) {
  if (grads.size() != grid.size()) throw ArgumentError("optimizer step: gradient buffer size mismatch");
  if (keys_.size() != grid.size()) throw ConsistencyError("optimizer step: state size differs from grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Voxel& voxel = grid.mutable_voxel(i);
    if (voxel.key() != keys_[i]) throw ConsistencyError("optimizer step: state keys out of sync with grid");
    AdamSlot& slot = slots_[i];
    ++slot.step;
    const VoxelGradient& g = grads[i];
    voxel.opacity_param = adam_update(voxel.opacity_param, g[0], slot.m[0], slot.v[0], slot.step,
                                      config_.lr_opacity, config_);
    for (int c = 0; c < 3; ++c) {
      voxel.color_params[c] = adam_update(voxel.color_params[c], g[1 + c], slot.m[1 + c], slot.v[1 + c],
                                          slot.step, config_.lr_color, config_);
    }
  }
}

void OptimizerState::refresh_after_topology(const VoxelGrid& grid, const SplitReport* split,
                                            const PruneReport* prune) {
  std::map<VoxelKey, AdamSlot> state;
  for (std::size_t i = 0; i < keys_.size(); ++i) state.emplace(keys_[i], slots_[i]);

  auto erase = [&](const VoxelKey& key, const char* what) {
    if (state.erase(key) == 0) {
      throw ConsistencyError(std::string("optimizer refresh: ") + what + " voxel has no optimizer state");
    }
  };
  if (prune) {
    for (const auto& key : prune->removed) erase(key, "pruned");
  }
  if (split) {
    for (std::size_t n = 0; n < split->split.size(); ++n) {
      erase(split->split[n], "split");
      for (const auto& child : split->children.at(n)) {
        if (!state.emplace(child, AdamSlot{}).second) {
          throw ConsistencyError("optimizer refresh: child voxel already has optimizer state");
        }
      }
    }
  }
  if (state.size() != grid.size()) throw ConsistencyError("optimizer refresh: state does not match grid size");
  keys_.clear();
  slots_.clear();
  keys_.reserve(state.size());
  slots_.reserve(state.size());
  // std::map iterates in key order, which is the grid's dense order.
  std::size_t i = 0;
  for (const auto& [key, slot] : state) {
    if (grid.voxel(i).key() != key) throw ConsistencyError("optimizer refresh: state keys differ from grid keys");
    keys_.push_back(key);
    slots_.push_back(slot);
    ++i;
  }
}

}  // namespace sparsevox

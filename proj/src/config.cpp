#include "sparsevox/errors.hpp"
#include "sparsevox/trainer.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <string>

namespace sparsevox {

using nlohmann::json;

namespace {

// Reads optional fields from one JSON object and rejects keys it does not know.
class FieldReader {
 public:
  FieldReader(const json& obj, std::string scope) : obj_(obj), scope_(std::move(scope)) {
    if (!obj_.is_object()) throw ConfigError("config: '" + scope_ + "' must be an object");
  }

  template <typename T>
  void read(const char* name, T& out) {
    seen_.insert(name);
    auto it = obj_.find(name);
    if (it == obj_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config: '" + path(name) + "' has the wrong type");
    }
  }

  const json* child(const char* name) {
    seen_.insert(name);
    auto it = obj_.find(name);
    return it == obj_.end() ? nullptr : &*it;
  }

  std::string path(const char* name) const { return scope_.empty() ? name : scope_ + "." + name; }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("config: unknown field '" + path(it.key().c_str()) + "'");
    }
  }

 private:
  const json& obj_;
  std::string scope_;
  std::set<std::string> seen_;
};

Vec3 vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("config: '" + where + "' must be a 3-vector");
  try {
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  } catch (const json::exception&) {
    throw ConfigError("config: '" + where + "' must hold numbers");
  }
}

}  // namespace

TrainConfig TrainConfig::resolved() const {
  TrainConfig c = *this;
  if (c.adapt_every == 0) c.adapt_every = std::max(1, c.total_iters / 20);
  if (c.t0 < 0.0) c.t0 = 0.3 * c.total_iters;
  if (c.t1 < 0.0) c.t1 = 0.6 * c.total_iters;
  c.validate();
  return c;
}

void TrainConfig::validate() const {
  if (total_iters < 1) throw ConfigError("config: total_iters must be >= 1");
  if (adapt_every < 1) throw ConfigError("config: adapt_every must be >= 1");
  if (!(t0 >= 0.0 && t0 < t1 && t1 <= total_iters)) throw ConfigError("config: need 0 <= t0 < t1 <= total_iters");
  if (!(gamma_max >= 0.0)) throw ConfigError("config: gamma_max must be >= 0");
  if (!(lf_eps > 0.0)) throw ConfigError("config: lf_eps must be positive");
  if (!(lambdas.ssim >= 0.0 && lambdas.t_conc >= 0.0 && lambdas.tv >= 0.0)) {
    throw ConfigError("config: loss weights must be non-negative");
  }
  prune.validate();
  subdivide.validate();
  optimizer.validate();
  if (init_level < 0 || init_level > max_level) throw ConfigError("config: init_level must be in [0, max_level]");
  if (!(init_alpha > 0.0 && init_alpha < 1.0)) throw ConfigError("config: init_alpha must be in (0, 1)");
  if (!(init_color > 0.0 && init_color < 1.0)) throw ConfigError("config: init_color must be in (0, 1)");
  if (threads < 0) throw ConfigError("config: threads must be >= 0");
}

TrainConfig train_config_from_json(const json& doc) {
  TrainConfig c;
  FieldReader top(doc, "");
  top.read("total_iters", c.total_iters);
  top.read("adapt_every", c.adapt_every);
  top.read("t0", c.t0);
  top.read("t1", c.t1);
  top.read("gamma_max", c.gamma_max);
  top.read("lf_eps", c.lf_eps);
  top.read("seed", c.seed);
  top.read("init_level", c.init_level);
  top.read("init_alpha", c.init_alpha);
  top.read("init_color", c.init_color);
  top.read("max_level", c.max_level);
  top.read("holdout_every", c.holdout_every);
  top.read("early_termination", c.early_termination);
  top.read("threads", c.threads);
  if (const json* j = top.child("lambdas")) {
    FieldReader r(*j, "lambdas");
    r.read("ssim", c.lambdas.ssim);
    r.read("t_conc", c.lambdas.t_conc);
    r.read("tv", c.lambdas.tv);
    r.finish();
  }
  if (const json* j = top.child("prune")) {
    FieldReader r(*j, "prune");
    r.read("num_bins", c.prune.num_bins);
    r.read("q_start", c.prune.q_start);
    r.read("q_end", c.prune.q_end);
    r.read("near_far_relax", c.prune.near_far_relax);
    r.read("ema_alpha", c.prune.ema_alpha);
    r.read("m_low", c.prune.m_low);
    r.read("m_high", c.prune.m_high);
    r.read("cap_fraction", c.prune.cap_fraction);
    r.read("halo_wmax", c.prune.halo_wmax);
    r.read("halo_size_ratio", c.prune.halo_size_ratio);
    r.read("inside_floor", c.prune.inside_floor);
    r.finish();
  }
  if (const json* j = top.child("subdivide")) {
    FieldReader r(*j, "subdivide");
    r.read("kappa", c.subdivide.kappa);
    r.read("beta", c.subdivide.beta);
    r.read("budget", c.subdivide.budget);
    r.read("budget_fraction", c.subdivide.budget_fraction);
    r.read("hard_cap", c.subdivide.hard_cap);
    r.read("usefulness_ema", c.subdivide.usefulness_ema);
    r.finish();
  }
  if (const json* j = top.child("optimizer")) {
    FieldReader r(*j, "optimizer");
    r.read("lr_opacity", c.optimizer.lr_opacity);
    r.read("lr_color", c.optimizer.lr_color);
    r.read("beta1", c.optimizer.beta1);
    r.read("beta2", c.optimizer.beta2);
    r.read("eps", c.optimizer.eps);
    r.finish();
  }
  if (const json* j = top.child("ablate")) {
    FieldReader r(*j, "ablate");
    r.read("lf_off", c.ablate.lf_off);
    r.read("prune_off", c.ablate.prune_off);
    r.read("subdivide_off", c.ablate.subdivide_off);
    r.read("depth_bins_off", c.ablate.depth_bins_off);
    r.finish();
  }
  if (const json* j = top.child("bounds")) {
    FieldReader r(*j, "bounds");
    if (const json* lo = r.child("min")) c.bounds.min = vec3(*lo, "bounds.min");
    if (const json* hi = r.child("max")) c.bounds.max = vec3(*hi, "bounds.max");
    r.finish();
  }
  top.finish();
  c.resolved();  // validates with derived defaults filled in
  return c;
}

json train_config_to_json(const TrainConfig& c) {
  auto v = [](const Vec3& x) { return json::array({x.x(), x.y(), x.z()}); };
  return {
      {"total_iters", c.total_iters},
      {"adapt_every", c.adapt_every},
      {"t0", c.t0},
      {"t1", c.t1},
      {"gamma_max", c.gamma_max},
      {"lf_eps", c.lf_eps},
      {"lambdas", {{"ssim", c.lambdas.ssim}, {"t_conc", c.lambdas.t_conc}, {"tv", c.lambdas.tv}}},
      {"prune",
       {{"num_bins", c.prune.num_bins},
        {"q_start", c.prune.q_start},
        {"q_end", c.prune.q_end},
        {"near_far_relax", c.prune.near_far_relax},
        {"ema_alpha", c.prune.ema_alpha},
        {"m_low", c.prune.m_low},
        {"m_high", c.prune.m_high},
        {"cap_fraction", c.prune.cap_fraction},
        {"halo_wmax", c.prune.halo_wmax},
        {"halo_size_ratio", c.prune.halo_size_ratio},
        {"inside_floor", c.prune.inside_floor}}},
      {"subdivide",
       {{"kappa", c.subdivide.kappa},
        {"beta", c.subdivide.beta},
        {"budget", c.subdivide.budget},
        {"budget_fraction", c.subdivide.budget_fraction},
        {"hard_cap", c.subdivide.hard_cap},
        {"usefulness_ema", c.subdivide.usefulness_ema}}},
      {"optimizer",
       {{"lr_opacity", c.optimizer.lr_opacity},
        {"lr_color", c.optimizer.lr_color},
        {"beta1", c.optimizer.beta1},
        {"beta2", c.optimizer.beta2},
        {"eps", c.optimizer.eps}}},
      {"seed", c.seed},
      {"ablate",
       {{"lf_off", c.ablate.lf_off},
        {"prune_off", c.ablate.prune_off},
        {"subdivide_off", c.ablate.subdivide_off},
        {"depth_bins_off", c.ablate.depth_bins_off}}},
      {"bounds", {{"min", v(c.bounds.min)}, {"max", v(c.bounds.max)}}},
      {"init_level", c.init_level},
      {"init_alpha", c.init_alpha},
      {"init_color", c.init_color},
      {"max_level", c.max_level},
      {"holdout_every", c.holdout_every},
      {"early_termination", c.early_termination},
      {"threads", c.threads},
  };
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("config " + path.string() + ": malformed JSON", e.byte > 0 ? e.byte - 1 : 0);
  }
  return train_config_from_json(doc);
}

}  // namespace sparsevox

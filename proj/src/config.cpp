// Copyright 2026 The lordo Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#include "lordo/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

namespace lordo {
namespace {

using nlohmann::json;

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where("") + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <typename T>
  void number(const std::string& key, T& out) {
    const json* v = get(key);
    if (!v) return;
    if constexpr (std::is_floating_point_v<T>) {
      if (!v->is_number()) throw ConfigError(where(key) + ": expected a number");
      out = v->get<T>();
    } else {
      if (!v->is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
      if (std::is_unsigned_v<T> && v->get<std::int64_t>() < 0 && !v->is_number_unsigned())
        throw ConfigError(where(key) + ": must be non-negative");
      out = v->get<T>();
    }
  }

  void boolean(const std::string& key, bool& out) {
    const json* v = get(key);
    if (!v) return;
    if (!v->is_boolean()) throw ConfigError(where(key) + ": expected true or false");
    out = v->get<bool>();
  }

  template <typename E>
  void choice(const std::string& key, E& out, std::initializer_list<std::pair<const char*, E>> opts) {
    const json* v = get(key);
    if (!v) return;
    if (!v->is_string()) throw ConfigError(where(key) + ": expected a string");
    const auto s = v->get<std::string>();
    std::string names;
    for (const auto& [name, value] : opts) {
      if (s == name) {
        out = value;
        return;
      }
      names += names.empty() ? name : std::string(", ") + name;
    }
    throw ConfigError(where(key) + ": unknown value \"" + s + "\" (expected one of " + names + ")");
  }

  std::string where(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.contains(it.key())) throw ConfigError(where(it.key()) + ": unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field + ": " + what);
}

}  // namespace

std::string_view to_string(OuterType t) {
  return t == OuterType::kAverage ? "average" : "nesterov";
}

std::string_view to_string(ShardLayout s) {
  return s == ShardLayout::kContiguous ? "contiguous" : "block_orthogonal";
}

void RunConfig::validate() const {
  require(workers >= 1, "workers", "must be >= 1");
  require(steps >= 1, "steps", "must be >= 1");
  require(batch_size >= 1, "batch_size", "must be >= 1");
  require(sync.kx >= 1, "sync.params", "must be >= 1");
  require(sync.ku >= 1, "sync.first_moment", "must be >= 1");
  require(sync.kv >= 1, "sync.second_moment", "must be >= 1");

  require(problem.p >= 1, "problem.p", "must be >= 1");
  require(problem.q >= 1, "problem.q", "must be >= 1");
  require(problem.layers >= 1, "problem.layers", "must be >= 1");
  require(problem.noise_std >= 0.0, "problem.noise_std", "must be >= 0");
  require(problem.truth_decay >= 0.0, "problem.truth_decay", "must be >= 0");
  require(problem.truth_scale > 0.0, "problem.truth_scale", "must be > 0");
  require(problem.rows >= workers && problem.rows % workers == 0, "problem.rows",
          "must be a positive multiple of workers");
  if (problem.shards == ShardLayout::kBlockOrthogonal)
    require(problem.p % workers == 0, "problem.shards",
            "block_orthogonal needs problem.p divisible by workers");

  const std::size_t min_dim = std::min(problem.p, problem.q);
  require(rank >= 1 && rank <= min_dim, "rank",
          "must be in [1, min(problem.p, problem.q)] = [1, " + std::to_string(min_dim) +
              "], got " + std::to_string(rank));

  require(hp.beta1 >= 0.0 && hp.beta1 < 1.0, "optimizer.beta1", "must be in [0, 1)");
  require(hp.beta2 >= 0.0 && hp.beta2 < 1.0, "optimizer.beta2", "must be in [0, 1)");
  require(hp.eps > 0.0, "optimizer.eps", "must be > 0");
  require(hp.clip_radius > 0.0, "optimizer.clip_radius", "must be > 0");
  require(lr.peak > 0.0, "optimizer.lr", "must be > 0");
  require(lr.warmup_steps >= 0 && lr.warmup_steps < steps, "optimizer.warmup_steps",
          "must be in [0, steps)");
  require(hp.omega >= 0.0 && hp.omega <= 1.0, "qhm.omega", "must be in [0, 1]");

  if (outer.type == OuterType::kNesterov) {
    require(outer.lr > 0.0, "outer.lr", "must be > 0");
    require(outer.momentum >= 0.0 && outer.momentum < 1.0, "outer.momentum", "must be in [0, 1)");
  }
  require(flags.sparsify_keep > 0.0 && flags.sparsify_keep <= 1.0, "flags.sparsify_keep",
          "must be in (0, 1]");
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  ObjectReader top(j, "");
  top.number("seed", c.seed);
  top.number("workers", c.workers);
  top.number("steps", c.steps);
  top.number("batch_size", c.batch_size);
  top.number("rank", c.rank);
  top.choice("projection", c.projection,
             {{"global", ProjectionStrategy::kGlobal},
              {"local", ProjectionStrategy::kLocal},
              {"fixed", ProjectionStrategy::kFixed}});

  if (const json* s = top.get("sync")) {
    ObjectReader r(*s, "sync");
    r.number("params", c.sync.kx);
    r.number("first_moment", c.sync.ku);
    r.number("second_moment", c.sync.kv);
    r.finish();
  }

  bool omega_given = false;
  if (const json* s = top.get("qhm")) {
    ObjectReader r(*s, "qhm");
    r.choice("mode", c.qhm,
             {{"none", QhmMode::kNone}, {"low_rank", QhmMode::kLowRank},
              {"full_rank", QhmMode::kFullRank}});
    omega_given = r.has("omega");
    r.number("omega", c.hp.omega);
    r.choice("mu", c.hp.mu,
             {{"per_column", MuSemantics::kPerColumn}, {"scalar", MuSemantics::kScalar}});
    r.finish();
  }
  if (c.qhm == QhmMode::kNone && omega_given)
    throw ConfigError("qhm.omega: only allowed when qhm.mode is low_rank or full_rank");
  if (c.qhm != QhmMode::kNone && !omega_given)
    throw ConfigError("qhm.omega: required when qhm.mode is " + std::string(to_string(c.qhm)));

  if (const json* s = top.get("optimizer")) {
    ObjectReader r(*s, "optimizer");
    r.number("beta1", c.hp.beta1);
    r.number("beta2", c.hp.beta2);
    r.number("eps", c.hp.eps);
    r.number("clip_radius", c.hp.clip_radius);
    r.number("lr", c.lr.peak);
    r.number("warmup_steps", c.lr.warmup_steps);
    r.finish();
  }

  if (const json* s = top.get("outer")) {
    ObjectReader r(*s, "outer");
    r.choice("type", c.outer.type,
             {{"average", OuterType::kAverage}, {"nesterov", OuterType::kNesterov}});
    r.number("lr", c.outer.lr);
    r.number("momentum", c.outer.momentum);
    r.finish();
  }

  if (const json* s = top.get("flags")) {
    ObjectReader r(*s, "flags");
    r.boolean("rotate_moments", c.flags.rotate_moments);
    r.boolean("error_feedback", c.flags.error_feedback);
    r.number("sparsify_keep", c.flags.sparsify_keep);
    r.finish();
  }

  if (const json* s = top.get("problem")) {
    ObjectReader r(*s, "problem");
    r.choice("type", c.problem.type, {{"matrix_regression", ProblemType::kMatrixRegression}});
    r.number("rows", c.problem.rows);
    r.number("p", c.problem.p);
    r.number("q", c.problem.q);
    r.number("layers", c.problem.layers);
    r.number("noise_std", c.problem.noise_std);
    r.number("truth_decay", c.problem.truth_decay);
    r.number("truth_scale", c.problem.truth_scale);
    r.choice("shards", c.problem.shards,
             {{"contiguous", ShardLayout::kContiguous},
              {"block_orthogonal", ShardLayout::kBlockOrthogonal}});
    r.finish();
  }
  top.finish();
  c.validate();
  return c;
}

RunConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

json config_to_json(const RunConfig& c) {
  json qhm = {{"mode", to_string(c.qhm)}, {"mu", to_string(c.hp.mu)}};
  if (c.qhm != QhmMode::kNone) qhm["omega"] = c.hp.omega;
  return {
      {"seed", c.seed},
      {"workers", c.workers},
      {"steps", c.steps},
      {"batch_size", c.batch_size},
      {"rank", c.rank},
      {"projection", to_string(c.projection)},
      {"sync", {{"params", c.sync.kx}, {"first_moment", c.sync.ku}, {"second_moment", c.sync.kv}}},
      {"qhm", qhm},
      {"optimizer",
       {{"beta1", c.hp.beta1},
        {"beta2", c.hp.beta2},
        {"eps", c.hp.eps},
        {"clip_radius", c.hp.clip_radius},
        {"lr", c.lr.peak},
        {"warmup_steps", c.lr.warmup_steps}}},
      {"outer", {{"type", to_string(c.outer.type)}, {"lr", c.outer.lr}, {"momentum", c.outer.momentum}}},
      {"flags",
       {{"rotate_moments", c.flags.rotate_moments},
        {"error_feedback", c.flags.error_feedback},
        {"sparsify_keep", c.flags.sparsify_keep}}},
      {"problem",
       {{"type", "matrix_regression"},
        {"rows", c.problem.rows},
        {"p", c.problem.p},
        {"q", c.problem.q},
        {"layers", c.problem.layers},
        {"noise_std", c.problem.noise_std},
        {"truth_decay", c.problem.truth_decay},
        {"truth_scale", c.problem.truth_scale},
        {"shards", to_string(c.problem.shards)}}},
  };
}

}  // namespace lordo

#include "idxlab/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include <nlohmann/json.hpp>

namespace idxlab {

using nlohmann::json;

const char* agent_kind_name(AgentKind kind) {
  switch (kind) {
    case AgentKind::kBdqn: return "bdqn";
    case AgentKind::kSpg: return "spg";
    case AgentKind::kDefault: return "default";
    case AgentKind::kFull: return "full";
    case AgentKind::kSearch: return "search";
  }
  return "?";
}

AgentKind agent_kind_from_name(const std::string& name) {
  if (name == "bdqn") return AgentKind::kBdqn;
  if (name == "spg") return AgentKind::kSpg;
  if (name == "default") return AgentKind::kDefault;
  if (name == "full") return AgentKind::kFull;
  if (name == "search") return AgentKind::kSearch;
  throw SchemaError("unknown agent kind: " + name);
}

double EpsilonSchedule::at(int64_t step, int64_t total_steps) const {
  const double decay_steps = decay_frac * static_cast<double>(total_steps);
  if (decay_steps <= 0.0) return end;
  const double t = std::min(1.0, static_cast<double>(step) / decay_steps);
  return start + t * (end - start);
}

namespace {

ReplayMode replay_mode_from_name(const std::string& name) {
  if (name == "uniform") return ReplayMode::kUniform;
  if (name == "prioritized") return ReplayMode::kPrioritized;
  throw SchemaError("unknown replay mode: " + name);
}

const char* replay_mode_name(ReplayMode mode) {
  return mode == ReplayMode::kUniform ? "uniform" : "prioritized";
}

// Applies `fn(key, value)` per entry and rejects keys fn does not recognize.
void strict_object(const json& j, const std::string& where,
                   const std::function<bool(const std::string&, const json&)>& fn) {
  if (!j.is_object()) throw SchemaError("config section " + where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!fn(key, value)) throw SchemaError("unknown config key " + where + "." + key);
  }
}

}  // namespace

json RunConfig::to_json() const {
  return json{
      {"schema_path", schema_path},
      {"agent", agent_kind_name(agent)},
      {"seed", seed},
      {"out_dir", out_dir},
      {"curve_window", curve_window},
      {"pointer_width", pointer_width},
      {"workloads",
       {{"train_count", workloads.train_count},
        {"test_count", workloads.test_count},
        {"length", workloads.length},
        {"seed", workloads.seed},
        {"test_seed", workloads.test_seed},
        {"n_max", workloads.n_max},
        {"p_eq", workloads.p_eq}}},
      {"cost_model",
       {{"c_seq", cost_model.c_seq},
        {"c_probe", cost_model.c_probe},
        {"c_fetch", cost_model.c_fetch},
        {"c_op", cost_model.c_op},
        {"f_range", cost_model.f_range},
        {"noise_sigma", cost_model.noise_sigma}}},
      {"converter",
       {{"flat_len", converter.flat_len},
        {"row_token_budget", converter.row_token_budget},
        {"noop_row_last", converter.noop_row_last}}},
      {"reward", {{"w_size", w_size}, {"w_latency", w_latency}}},
      {"bdqn",
       {{"embed_dim", bdqn.embed_dim},
        {"trunk_dim", bdqn.trunk_dim},
        {"stream_dim", bdqn.stream_dim},
        {"lr", bdqn.lr},
        {"gamma", bdqn.gamma},
        {"target_sync_every", bdqn.target_sync_every},
        {"batch_size", bdqn.batch_size},
        {"warmup", bdqn.warmup},
        {"grad_clip", bdqn.grad_clip},
        {"replay_capacity", bdqn.replay.capacity},
        {"replay_mode", replay_mode_name(bdqn.replay.mode)},
        {"alpha", bdqn.replay.alpha},
        {"beta", bdqn.replay.beta}}},
      {"spg",
       {{"embed_dim", spg.embed_dim},
        {"hidden_dim", spg.hidden_dim},
        {"lr_actor", spg.lr_actor},
        {"lr_critic", spg.lr_critic},
        {"tau", spg.tau},
        {"sinkhorn_iterations", spg.sinkhorn_iterations},
        {"batch_size", spg.batch_size},
        {"warmup", spg.warmup},
        {"grad_clip", spg.grad_clip},
        {"replay_capacity", spg.replay.capacity},
        {"replay_mode", replay_mode_name(spg.replay.mode)},
        {"alpha", spg.replay.alpha},
        {"beta", spg.replay.beta},
        {"priority_eps", spg.replay.priority_eps}}},
      {"epsilon",
       {{"start", epsilon.start}, {"end", epsilon.end}, {"decay_frac", epsilon.decay_frac}}},
      {"search",
       {{"budget", search.budget},
        {"subsample_frac", search.subsample_frac},
        {"w_size", search.w_size},
        {"explore_prob", search.explore_prob},
        {"ema", search.ema}}}};
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig cfg;
  strict_object(j, "<root>", [&](const std::string& key, const json& v) {
    if (key == "schema_path") { cfg.schema_path = v.get<std::string>(); return true; }
    if (key == "agent") { cfg.agent = agent_kind_from_name(v.get<std::string>()); return true; }
    if (key == "seed") { cfg.seed = v.get<uint64_t>(); return true; }
    if (key == "out_dir") { cfg.out_dir = v.get<std::string>(); return true; }
    if (key == "curve_window") { cfg.curve_window = v.get<int>(); return true; }
    if (key == "pointer_width") { cfg.pointer_width = v.get<int>(); return true; }
    if (key == "workloads") {
      strict_object(v, "workloads", [&](const std::string& k, const json& w) {
        if (k == "train_count") { cfg.workloads.train_count = w.get<int>(); return true; }
        if (k == "test_count") { cfg.workloads.test_count = w.get<int>(); return true; }
        if (k == "length") { cfg.workloads.length = w.get<int>(); return true; }
        if (k == "seed") { cfg.workloads.seed = w.get<uint64_t>(); return true; }
        if (k == "test_seed") { cfg.workloads.test_seed = w.get<uint64_t>(); return true; }
        if (k == "n_max") { cfg.workloads.n_max = w.get<int>(); return true; }
        if (k == "p_eq") { cfg.workloads.p_eq = w.get<double>(); return true; }
        return false;
      });
      return true;
    }
    if (key == "cost_model") {
      strict_object(v, "cost_model", [&](const std::string& k, const json& w) {
        if (k == "c_seq") { cfg.cost_model.c_seq = w.get<double>(); return true; }
        if (k == "c_probe") { cfg.cost_model.c_probe = w.get<double>(); return true; }
        if (k == "c_fetch") { cfg.cost_model.c_fetch = w.get<double>(); return true; }
        if (k == "c_op") { cfg.cost_model.c_op = w.get<double>(); return true; }
        if (k == "f_range") { cfg.cost_model.f_range = w.get<double>(); return true; }
        if (k == "noise_sigma") { cfg.cost_model.noise_sigma = w.get<double>(); return true; }
        return false;
      });
      return true;
    }
    if (key == "converter") {
      strict_object(v, "converter", [&](const std::string& k, const json& w) {
        if (k == "flat_len") { cfg.converter.flat_len = w.get<int>(); return true; }
        if (k == "row_token_budget") { cfg.converter.row_token_budget = w.get<int>(); return true; }
        if (k == "noop_row_last") { cfg.converter.noop_row_last = w.get<bool>(); return true; }
        return false;
      });
      return true;
    }
    if (key == "reward") {
      strict_object(v, "reward", [&](const std::string& k, const json& w) {
        if (k == "w_size") { cfg.w_size = w.get<double>(); return true; }
        if (k == "w_latency") { cfg.w_latency = w.get<double>(); return true; }
        return false;
      });
      return true;
    }
    if (key == "bdqn") {
      strict_object(v, "bdqn", [&](const std::string& k, const json& w) {
        if (k == "embed_dim") { cfg.bdqn.embed_dim = w.get<int>(); return true; }
        if (k == "trunk_dim") { cfg.bdqn.trunk_dim = w.get<int>(); return true; }
        if (k == "stream_dim") { cfg.bdqn.stream_dim = w.get<int>(); return true; }
        if (k == "lr") { cfg.bdqn.lr = w.get<double>(); return true; }
        if (k == "gamma") { cfg.bdqn.gamma = w.get<double>(); return true; }
        if (k == "target_sync_every") { cfg.bdqn.target_sync_every = w.get<int>(); return true; }
        if (k == "batch_size") { cfg.bdqn.batch_size = w.get<int>(); return true; }
        if (k == "warmup") { cfg.bdqn.warmup = w.get<int>(); return true; }
        if (k == "grad_clip") { cfg.bdqn.grad_clip = w.get<double>(); return true; }
        if (k == "replay_capacity") { cfg.bdqn.replay.capacity = w.get<size_t>(); return true; }
        if (k == "replay_mode") {
          cfg.bdqn.replay.mode = replay_mode_from_name(w.get<std::string>());
          return true;
        }
        if (k == "alpha") { cfg.bdqn.replay.alpha = w.get<double>(); return true; }
        if (k == "beta") { cfg.bdqn.replay.beta = w.get<double>(); return true; }
        return false;
      });
      return true;
    }
    if (key == "spg") {
      strict_object(v, "spg", [&](const std::string& k, const json& w) {
        if (k == "embed_dim") { cfg.spg.embed_dim = w.get<int>(); return true; }
        if (k == "hidden_dim") { cfg.spg.hidden_dim = w.get<int>(); return true; }
        if (k == "lr_actor") { cfg.spg.lr_actor = w.get<double>(); return true; }
        if (k == "lr_critic") { cfg.spg.lr_critic = w.get<double>(); return true; }
        if (k == "tau") { cfg.spg.tau = w.get<double>(); return true; }
        if (k == "sinkhorn_iterations") { cfg.spg.sinkhorn_iterations = w.get<int>(); return true; }
        if (k == "batch_size") { cfg.spg.batch_size = w.get<int>(); return true; }
        if (k == "warmup") { cfg.spg.warmup = w.get<int>(); return true; }
        if (k == "grad_clip") { cfg.spg.grad_clip = w.get<double>(); return true; }
        if (k == "replay_capacity") { cfg.spg.replay.capacity = w.get<size_t>(); return true; }
        if (k == "replay_mode") {
          cfg.spg.replay.mode = replay_mode_from_name(w.get<std::string>());
          return true;
        }
        if (k == "alpha") { cfg.spg.replay.alpha = w.get<double>(); return true; }
        if (k == "beta") { cfg.spg.replay.beta = w.get<double>(); return true; }
        if (k == "priority_eps") { cfg.spg.replay.priority_eps = w.get<double>(); return true; }
        return false;
      });
      return true;
    }
    if (key == "epsilon") {
      strict_object(v, "epsilon", [&](const std::string& k, const json& w) {
        if (k == "start") { cfg.epsilon.start = w.get<double>(); return true; }
        if (k == "end") { cfg.epsilon.end = w.get<double>(); return true; }
        if (k == "decay_frac") { cfg.epsilon.decay_frac = w.get<double>(); return true; }
        return false;
      });
      return true;
    }
    if (key == "search") {
      strict_object(v, "search", [&](const std::string& k, const json& w) {
        if (k == "budget") { cfg.search.budget = w.get<int>(); return true; }
        if (k == "subsample_frac") { cfg.search.subsample_frac = w.get<double>(); return true; }
        if (k == "w_size") { cfg.search.w_size = w.get<double>(); return true; }
        if (k == "explore_prob") { cfg.search.explore_prob = w.get<double>(); return true; }
        if (k == "ema") { cfg.search.ema = w.get<double>(); return true; }
        return false;
      });
      return true;
    }
    return false;
  });

  if (cfg.workloads.train_count < 1 || cfg.workloads.test_count < 1 || cfg.workloads.length < 1)
    throw SchemaError("workload counts and length must be >= 1");
  if (cfg.w_size < 0.0 || cfg.w_latency < 0.0) throw SchemaError("reward weights must be >= 0");
  if (cfg.search.budget < 1) throw SchemaError("search budget must be >= 1");
  return cfg;
}

RunConfig RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open config file: " + path);
  json j;
  in >> j;
  return from_json(j);
}

std::string RunConfig::resolved_out_dir() const {
  const char* root = std::getenv("IDXLAB_OUT_ROOT");
  if (root == nullptr || *root == '\0' || out_dir.starts_with('/')) return out_dir;
  return std::string(root) + "/" + out_dir;
}

}  // namespace idxlab

#include "idxlab/harness.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace idxlab {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<TrainingLogRow> Policy::empty_log_{};

nlohmann::json Policy::checkpoint_params() const { return json::object(); }
void Policy::restore_params(const nlohmann::json&) {}

namespace {

uint64_t mix(uint64_t seed, uint64_t salt) {
  uint64_t z = seed ^ (0x9e3779b97f4a7c15ULL + salt * 0xbf58476d1ce4e5b9ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string action_label(const std::vector<Index>& actions) {
  if (actions.empty()) return "NOOP";
  std::string out;
  for (size_t i = 0; i < actions.size(); ++i) {
    if (i) out += ';';
    for (size_t k = 0; k < actions[i].keys.size(); ++k) {
      if (k) out += '+';
      out += actions[i].keys[k];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Policies
// ---------------------------------------------------------------------------

class DefaultPolicy : public Policy {
 public:
  std::vector<Index> act(const Query&, const IndexSet&) override { return {}; }
};

class FullPolicy : public Policy {
 public:
  std::vector<Index> act(const Query& query, const IndexSet&) override {
    std::vector<Index> out;
    for (const auto& p : query.predicates) out.push_back(Index{query.table, {p.attribute}});
    return out;
  }
};

class BdqnPolicy : public Policy {
 public:
  BdqnPolicy(const RunConfig& cfg, const Converter& converter)
      : converter_(converter), epsilon_(cfg.epsilon) {
    BdqnConfig agent_cfg = cfg.bdqn;
    agent_cfg.vocab_size = converter.vocab().size();
    agent_cfg.flat_len = cfg.converter.flat_len;
    agent_cfg.n_max = cfg.converter.n_max;
    agent_cfg.m_streams = cfg.converter.m_streams;
    agent_cfg.seed = mix(cfg.seed, 11);
    agent_ = std::make_unique<BdqnAgent>(agent_cfg);
  }

  void begin_training(int64_t total_steps) override { total_steps_ = total_steps; }

  std::vector<Index> act(const Query& query, const IndexSet& context) override {
    FlatState state = converter_.to_flat_state(query, context);
    const double eps = frozen_ ? 0.0 : epsilon_.at(step_, total_steps_);
    CompactAction action = agent_->act(state, eps);
    if (!frozen_) {
      flush_pending(&state.token_ids);
      pending_ = Pending{std::move(state.token_ids), action.choices, 0.0, false};
      ++step_;
      last_epsilon_ = eps;
    }
    auto idx = converter_.decode_compact(action, query);
    if (!idx) return {};
    return {std::move(*idx)};
  }

  void observe(double reward) override {
    if (frozen_) return;
    pending_.reward = reward;
    pending_.has_reward = true;
    if (agent_->ready_to_train()) {
      const double loss = agent_->update();
      log_.push_back({step_, loss, 0.0, last_epsilon_, agent_->buffer_size()});
    }
  }

  void end_episode() override {
    if (frozen_) return;
    flush_pending(nullptr);
  }

  json checkpoint_params() const override { return agent_->checkpoint(); }
  void restore_params(const json& j) override { agent_->restore(j); }
  const std::vector<TrainingLogRow>& training_log() const override { return log_; }
  BdqnAgent& agent() { return *agent_; }

 private:
  struct Pending {
    std::vector<int> state;
    std::vector<int> action;
    double reward = 0.0;
    bool has_reward = false;
  };

  void flush_pending(const std::vector<int>* next_state) {
    if (!pending_.has_reward) return;
    BdqnTransition t;
    t.state = std::move(pending_.state);
    t.action = std::move(pending_.action);
    t.reward = pending_.reward;
    if (next_state != nullptr) t.next_state = *next_state;
    agent_->push(std::move(t));
    pending_ = Pending{};
  }

  const Converter& converter_;
  EpsilonSchedule epsilon_;
  std::unique_ptr<BdqnAgent> agent_;
  Pending pending_;
  int64_t step_ = 0;
  int64_t total_steps_ = 0;
  double last_epsilon_ = 0.0;
  std::vector<TrainingLogRow> log_;
};

class SpgPolicy : public Policy {
 public:
  SpgPolicy(const RunConfig& cfg, const Converter& converter)
      : converter_(converter), epsilon_(cfg.epsilon) {
    SpgConfig agent_cfg = cfg.spg;
    agent_cfg.vocab_size = converter.vocab().size();
    agent_cfg.state_rows = converter.state_rows();
    agent_cfg.row_token_budget = cfg.converter.row_token_budget;
    agent_cfg.seed = mix(cfg.seed, 23);
    agent_ = std::make_unique<SpgAgent>(agent_cfg);
  }

  void begin_training(int64_t total_steps) override { total_steps_ = total_steps; }

  std::vector<Index> act(const Query& query, const IndexSet& context) override {
    MatrixState state = converter_.to_matrix_state(query, context);
    const double eps = frozen_ ? 0.0 : epsilon_.at(step_, total_steps_);
    PermutationAction action = agent_->act(state, eps);
    if (!frozen_) {
      pending_state_ = matrix_state_ids(state);
      pending_action_ = action.hard;
      ++step_;
      last_epsilon_ = eps;
    }
    auto idx = converter_.decode_permutation(action, query);
    if (!idx) return {};
    return {std::move(*idx)};
  }

  void observe(double reward) override {
    if (frozen_) return;
    agent_->push(SpgTransition{pending_state_, pending_action_, reward});
    if (agent_->ready_to_train()) {
      const double loss = agent_->update();
      log_.push_back({step_, loss, agent_->last_actor_objective(), last_epsilon_,
                      agent_->buffer_size()});
    }
  }

  json checkpoint_params() const override { return agent_->checkpoint(); }
  void restore_params(const json& j) override { agent_->restore(j); }
  const std::vector<TrainingLogRow>& training_log() const override { return log_; }
  SpgAgent& agent() { return *agent_; }

 private:
  const Converter& converter_;
  EpsilonSchedule epsilon_;
  std::unique_ptr<SpgAgent> agent_;
  nn::IntMatrix pending_state_;
  nn::Matrix pending_action_;
  int64_t step_ = 0;
  int64_t total_steps_ = 0;
  double last_epsilon_ = 0.0;
  std::vector<TrainingLogRow> log_;
};

}  // namespace

std::unique_ptr<Policy> make_policy(AgentKind kind, const RunConfig& cfg,
                                    const TableSchema& schema, const Converter& converter) {
  (void)schema;
  switch (kind) {
    case AgentKind::kBdqn: return std::make_unique<BdqnPolicy>(cfg, converter);
    case AgentKind::kSpg: return std::make_unique<SpgPolicy>(cfg, converter);
    case AgentKind::kDefault: return std::make_unique<DefaultPolicy>();
    case AgentKind::kFull: return std::make_unique<FullPolicy>();
    case AgentKind::kSearch:
      // the offline search has no per-query policy; evaluation preinstalls its set
      return std::make_unique<DefaultPolicy>();
  }
  throw SchemaError("unhandled agent kind");
}

// ---------------------------------------------------------------------------
// Episode loop (training and build pass share it)
// ---------------------------------------------------------------------------

namespace {

StepRecord run_one_step(Policy& policy, const Query& query, IndexSet& context,
                        const EnvContext& env, int episode, int step) {
  const IndexSet before = context;
  const std::vector<Index> actions = policy.act(query, context);

  int64_t delta_total = 0;
  std::vector<const Index*> built;
  for (const auto& idx : actions) {
    auto [next, delta] = create_index(context, idx, env.schema, env.pointer_width);
    context = std::move(next);
    if (delta > 0) built.push_back(&idx);
    delta_total += delta;
  }

  const ExecutionReport report = cost(query, context, env.schema, env.cost_params);
  const double reward =
      to_reward(static_cast<double>(delta_total), report.latency, env.reward_params);
  policy.observe(reward);

  StepRecord rec;
  rec.episode = episode;
  rec.step = step;
  rec.query_id = query.id;
  rec.action = action_label(actions);
  rec.reward = reward;
  rec.latency = report.latency;
  rec.delta_size = delta_total;
  rec.chosen_path = report.chosen_path;
  auto [opportunity, taken] = intersection_stats(query, actions.empty(), before, report);
  rec.intersection_opportunity = opportunity;
  rec.intersection_taken = taken;
  if (!built.empty()) {
    double ratio_sum = 0.0;
    for (const Index* idx : built) ratio_sum += selectivity_ratio(*idx, query, env.schema);
    rec.selectivity_ratio = ratio_sum / static_cast<double>(built.size());
  }
  return rec;
}

}  // namespace

std::vector<StepRecord> run_episodes(Policy& policy, const std::vector<Workload>& workloads,
                                     const EnvContext& env, std::vector<bool>* query_has_range,
                                     std::vector<IndexSet>* final_sets) {
  std::vector<StepRecord> records;
  for (size_t ep = 0; ep < workloads.size(); ++ep) {
    IndexSet context = reset(env.schema);
    int step = 0;
    for (const Query& query : workloads[ep].queries) {
      records.push_back(
          run_one_step(policy, query, context, env, static_cast<int>(ep), step++));
      if (query_has_range != nullptr) query_has_range->push_back(query.has_range_predicate());
    }
    policy.end_episode();
    if (final_sets != nullptr) final_sets->push_back(std::move(context));
  }
  return records;
}

EvalOutcome evaluate_policy(Policy& policy, const std::vector<Workload>& test_workloads,
                            const EnvContext& env, const IndexSet* preinstalled) {
  policy.set_frozen(true);
  EvalOutcome out;
  int64_t total_bytes = 0;
  int64_t default_bytes_each =
      index_set_bytes(reset(env.schema), env.schema, env.pointer_width);
  std::vector<bool> has_range;

  for (size_t ep = 0; ep < test_workloads.size(); ++ep) {
    IndexSet context = preinstalled ? *preinstalled : reset(env.schema);
    int step = 0;
    for (const Query& query : test_workloads[ep].queries) {
      out.build_records.push_back(
          run_one_step(policy, query, context, env, static_cast<int>(ep), step++));
      has_range.push_back(query.has_range_predicate());
    }
    policy.end_episode();

    total_bytes += index_set_bytes(context, env.schema, env.pointer_width);
    for (const Query& query : test_workloads[ep].queries) {
      const ExecutionReport report = cost(query, context, env.schema, env.cost_params);
      out.final_latencies.push_back(report.latency);
      StepRecord rec;
      rec.episode = static_cast<int>(ep);
      rec.step = query.id;
      rec.query_id = query.id;
      rec.action = "";
      rec.latency = report.latency;
      rec.chosen_path = report.chosen_path;
      out.final_pass_records.push_back(std::move(rec));
    }
  }

  const int64_t built_bytes =
      total_bytes - default_bytes_each * static_cast<int64_t>(test_workloads.size());
  out.summary = summarize_eval(out.build_records, has_range, out.final_latencies, total_bytes,
                               built_bytes);
  policy.set_frozen(false);
  return out;
}

// ---------------------------------------------------------------------------
// Full pipeline
// ---------------------------------------------------------------------------

RunResult run_training(const RunConfig& cfg) {
  RunResult result;
  result.config = cfg;

  const TableSchema schema = load_schema_file(cfg.schema_path);
  SamplerConfig sampler{cfg.workloads.n_max, cfg.workloads.p_eq};
  const auto train_workloads = build_workloads(schema, cfg.workloads.train_count,
                                               cfg.workloads.length, cfg.workloads.seed, sampler);
  const auto test_workloads = build_workloads(schema, cfg.workloads.test_count,
                                              cfg.workloads.length, cfg.workloads.test_seed,
                                              sampler);

  ConverterConfig conv_cfg = cfg.converter;
  conv_cfg.n_max = cfg.workloads.n_max;
  Converter converter(schema, conv_cfg);

  RewardParams reward = default_reward_params(schema, cfg.cost_model, cfg.pointer_width);
  reward.w_size = cfg.w_size;
  reward.w_latency = cfg.w_latency;
  EnvContext env{schema, converter, cfg.cost_model, reward, cfg.pointer_width};

  auto policy = make_policy(cfg.agent, cfg, schema, converter);

  const IndexSet* preinstalled = nullptr;
  IndexSet searched_set;
  if (cfg.agent == AgentKind::kSearch) {
    result.search = search_baseline(train_workloads, schema, converter, cfg.cost_model, reward,
                                    cfg.search, mix(cfg.seed, 47), cfg.pointer_width);
    searched_set = result.search.best_set;
    preinstalled = &searched_set;
  } else {
    policy->begin_training(static_cast<int64_t>(train_workloads.size()) * cfg.workloads.length);
    result.train_records = run_episodes(*policy, train_workloads, env);
    result.curves = build_curves(result.train_records, cfg.curve_window);
    result.training_log = policy->training_log();
  }

  result.eval = evaluate_policy(*policy, test_workloads, env, preinstalled);

  json checkpoint{{"agent", agent_kind_name(cfg.agent)},
                  {"config", cfg.to_json()},
                  {"schema", schema_to_json(schema)},
                  {"params", policy->checkpoint_params()}};
  if (cfg.agent == AgentKind::kSearch) {
    json indices = json::array();
    for (const auto& idx : result.search.best_set.indices)
      indices.push_back({{"table", idx.table}, {"keys", idx.keys}});
    checkpoint["search_set"] = indices;
    checkpoint["search_score"] = result.search.best_score;
  }
  result.checkpoint = std::move(checkpoint);
  result.test_workloads = test_workloads;
  return result;
}

namespace {

void write_training_log_csv(const std::string& path, const std::vector<TrainingLogRow>& rows) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write csv: " + path);
  out << "step,loss,actor_objective,epsilon,buffer_size\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g,%zu\n",
                  static_cast<long long>(r.step), r.loss, r.actor_objective, r.epsilon,
                  r.buffer_size);
    out << buf;
  }
}

void write_search_log_csv(const std::string& path, const std::vector<SearchLogRow>& rows) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write csv: " + path);
  out << "iteration,technique,candidate_score,best_score\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%s,%.17g,%.17g\n", r.iteration, r.technique.c_str(),
                  r.candidate_score, r.best_score);
    out << buf;
  }
}

void write_final_pass_csv(const std::string& path, const std::vector<StepRecord>& rows) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write csv: " + path);
  out << "workload,query_id,latency,chosen_path\n";
  char buf[200];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%s\n", r.episode, r.query_id, r.latency,
                  r.chosen_path.c_str());
    out << buf;
  }
}

}  // namespace

void write_run_artifacts(const RunResult& result, const std::string& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir + "/config.json");
    if (!out) throw SchemaError("cannot write " + dir + "/config.json");
    out << result.config.to_json().dump(2) << "\n";
  }
  write_step_records_csv(dir + "/step_records.csv", result.train_records);
  write_curves_csv(dir + "/curves.csv", result.curves);
  write_training_log_csv(dir + "/training_log.csv", result.training_log);
  if (result.config.agent == AgentKind::kSearch)
    write_search_log_csv(dir + "/search_log.csv", result.search.log);
  write_step_records_csv(dir + "/eval_build_records.csv", result.eval.build_records);
  write_final_pass_csv(dir + "/eval_latencies.csv", result.eval.final_pass_records);
  {
    std::ofstream out(dir + "/summary.json");
    json j = result.eval.summary.to_json();
    j["agent"] = agent_kind_name(result.config.agent);
    j["seed"] = result.config.seed;
    out << j.dump(2) << "\n";
  }
  {
    std::ofstream out(dir + "/checkpoint.json");
    out << result.checkpoint.dump() << "\n";
  }
  save_workloads_file(dir + "/test_workloads.json", result.test_workloads);
}

RunResult run_and_save(const RunConfig& cfg) {
  RunResult result = run_training(cfg);
  write_run_artifacts(result, cfg.resolved_out_dir());
  return result;
}

EvalSummary evaluate_checkpoint(const std::string& checkpoint_path,
                                const std::string& workloads_path, const std::string& out_dir) {
  std::ifstream in(checkpoint_path);
  if (!in) throw SchemaError("cannot open checkpoint: " + checkpoint_path);
  json ckpt;
  in >> ckpt;

  RunConfig cfg = RunConfig::from_json(ckpt.at("config"));
  const TableSchema schema = schema_from_json(ckpt.at("schema"));
  ConverterConfig conv_cfg = cfg.converter;
  conv_cfg.n_max = cfg.workloads.n_max;
  Converter converter(schema, conv_cfg);
  RewardParams reward = default_reward_params(schema, cfg.cost_model, cfg.pointer_width);
  reward.w_size = cfg.w_size;
  reward.w_latency = cfg.w_latency;
  EnvContext env{schema, converter, cfg.cost_model, reward, cfg.pointer_width};

  const auto workloads = load_workloads_file(workloads_path);

  auto policy = make_policy(cfg.agent, cfg, schema, converter);
  policy->restore_params(ckpt.at("params"));

  const IndexSet* preinstalled = nullptr;
  IndexSet searched_set;
  if (cfg.agent == AgentKind::kSearch) {
    searched_set.table = schema.name;
    for (const auto& idx : ckpt.at("search_set"))
      searched_set.indices.push_back(
          Index{idx.at("table").get<std::string>(), idx.at("keys").get<std::vector<std::string>>()});
    preinstalled = &searched_set;
  }

  EvalOutcome outcome = evaluate_policy(*policy, workloads, env, preinstalled);

  fs::create_directories(out_dir);
  write_step_records_csv(out_dir + "/eval_build_records.csv", outcome.build_records);
  write_final_pass_csv(out_dir + "/eval_latencies.csv", outcome.final_pass_records);
  std::ofstream out(out_dir + "/summary.json");
  json j = outcome.summary.to_json();
  j["agent"] = agent_kind_name(cfg.agent);
  j["seed"] = cfg.seed;
  out << j.dump(2) << "\n";
  return outcome.summary;
}

void write_report(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
  std::map<std::string, std::vector<json>> by_agent;
  for (const auto& dir : run_dirs) {
    std::ifstream in(dir + "/summary.json");
    if (!in) throw SchemaError("no summary.json under " + dir);
    json j;
    in >> j;
    by_agent[j.at("agent").get<std::string>()].push_back(std::move(j));
  }

  json aggregate = json::object();
  std::ostringstream csv;
  csv << "agent,metric,mean,min,max,runs\n";
  for (const auto& [agent, summaries] : by_agent) {
    json entry = json::object();
    entry["runs"] = summaries.size();
    for (const auto& [key, value] : summaries.front().items()) {
      if (!value.is_number()) continue;
      double sum = 0.0, lo = 0.0, hi = 0.0;
      bool first = true;
      for (const auto& s : summaries) {
        const double v = s.at(key).get<double>();
        sum += v;
        lo = first ? v : std::min(lo, v);
        hi = first ? v : std::max(hi, v);
        first = false;
      }
      const double mean = sum / static_cast<double>(summaries.size());
      entry[key] = {{"mean", mean}, {"min", lo}, {"max", hi}};
      char buf[200];
      std::snprintf(buf, sizeof(buf), "%s,%s,%.17g,%.17g,%.17g,%zu\n", agent.c_str(), key.c_str(),
                    mean, lo, hi, summaries.size());
      csv << buf;
    }
    aggregate[agent] = std::move(entry);
  }

  fs::create_directories(out_dir);
  std::ofstream ja(out_dir + "/aggregate.json");
  ja << aggregate.dump(2) << "\n";
  std::ofstream ca(out_dir + "/aggregate.csv");
  ca << csv.str();
}

}  // namespace idxlab

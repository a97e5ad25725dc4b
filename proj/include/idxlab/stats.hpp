#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "idxlab/dbsim.hpp"
#include "idxlab/schema.hpp"

namespace idxlab {

/// One row per environment step; CSV columns follow field order exactly.
struct StepRecord {
  int episode = 0;
  int step = 0;
  int query_id = 0;
  std::string action;  // "k1+k2" (";"-joined when several), or "NOOP"
  double reward = 0.0;
  double latency = 0.0;
  int64_t delta_size = 0;
  std::string chosen_path;
  bool intersection_opportunity = false;
  bool intersection_taken = false;
  std::optional<double> selectivity_ratio;  // present iff an index was built
};

std::string step_record_csv_header();
std::string step_record_csv_row(const StepRecord& r);
std::vector<StepRecord> parse_step_records_csv(const std::string& path);
void write_step_records_csv(const std::string& path, const std::vector<StepRecord>& records);

/// Aggregated test-workload metrics. Latency statistics come from the second
/// pass (final index set), action statistics from the build pass.
struct EvalSummary {
  double mean_latency = 0.0;
  double p80_latency = 0.0;  // nearest-rank over all test query latencies
  int64_t total_index_bytes = 0;  // final sets, default index included
  int64_t built_index_bytes = 0;  // agent-built only
  double build_phase_mean_latency = 0.0;
  double noop_rate = 0.0;
  double mean_index_key_count = 0.0;
  int indices_built = 0;
  int steps = 0;
  double intersection_opportunity_rate = 0.0;  // opportunities / steps
  double intersection_taken_rate = 0.0;        // taken / opportunities
  double noop_rate_range_queries = 0.0;
  double noop_rate_eq_queries = 0.0;
  double noop_share_range = 0.0;  // fraction of no-ops falling on range queries

  nlohmann::json to_json() const;
  static EvalSummary from_json(const nlohmann::json& j);
};

/// Derives an EvalSummary from build-pass records and final-pass latencies.
EvalSummary summarize_eval(const std::vector<StepRecord>& build_records,
                           const std::vector<bool>& build_query_has_range,
                           const std::vector<double>& final_latencies,
                           int64_t total_index_bytes, int64_t built_index_bytes);

/// Nearest-rank percentile: sorted[ceil(p/100 * n) - 1].
double percentile_nearest_rank(std::vector<double> values, double pct);

/// Mean key selectivity of the index over mean attribute selectivity of the query.
double selectivity_ratio(const Index& index, const Query& query, const TableSchema& schema);

// A step offers an intersection when some nonempty prefix of a permutation of
// the query's attributes equals a prefix of a pre-existing index; it is taken
// when the agent no-ops and the optimizer picks such a candidate index.
std::pair<bool, bool> intersection_stats(const Query& query, bool action_was_noop,
                                         const IndexSet& set_before,
                                         const ExecutionReport& report);

/// Per-episode training curves (window-smoothed); NaN marks absent values.
struct CurvePoint {
  int episode = 0;
  double selectivity_ratio_raw = 0.0;
  double selectivity_ratio_smooth = 0.0;
  int opportunities = 0;
  int taken = 0;
  double taken_rate_raw = 0.0;
  double taken_rate_smooth = 0.0;
  double noop_rate = 0.0;
  double mean_reward = 0.0;
};

std::vector<CurvePoint> build_curves(const std::vector<StepRecord>& records, int window);
void write_curves_csv(const std::string& path, const std::vector<CurvePoint>& curves);

struct TrendReport {
  double slope = 0.0;
  double std_err = 0.0;
  double t_stat = 0.0;
  double p_one_sided = 1.0;  // P(slope <= 0) rejected when small
  int n = 0;
};

/// Ordinary least squares y ~ a + b x; NaN ys are skipped.
TrendReport least_squares_trend(const std::vector<double>& ys);

}  // namespace idxlab

#include "idxlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace idxlab {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) { return std::stod(s); }

}  // namespace

std::string step_record_csv_header() {
  return "episode,step,query_id,action,reward,latency,delta_size,chosen_path,"
         "intersection_opportunity,intersection_taken,selectivity_ratio";
}

std::string step_record_csv_row(const StepRecord& r) {
  std::ostringstream out;
  out << r.episode << ',' << r.step << ',' << r.query_id << ',' << r.action << ','
      << format_double(r.reward) << ',' << format_double(r.latency) << ',' << r.delta_size << ','
      << r.chosen_path << ',' << (r.intersection_opportunity ? 1 : 0) << ','
      << (r.intersection_taken ? 1 : 0) << ','
      << (r.selectivity_ratio ? format_double(*r.selectivity_ratio) : "");
  return out.str();
}

void write_step_records_csv(const std::string& path, const std::vector<StepRecord>& records) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write csv: " + path);
  out << step_record_csv_header() << "\n";
  for (const auto& r : records) out << step_record_csv_row(r) << "\n";
}

std::vector<StepRecord> parse_step_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open csv: " + path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<StepRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    cells.resize(11);
    StepRecord r;
    r.episode = std::stoi(cells[0]);
    r.step = std::stoi(cells[1]);
    r.query_id = std::stoi(cells[2]);
    r.action = cells[3];
    r.reward = parse_double(cells[4]);
    r.latency = parse_double(cells[5]);
    r.delta_size = std::stoll(cells[6]);
    r.chosen_path = cells[7];
    r.intersection_opportunity = cells[8] == "1";
    r.intersection_taken = cells[9] == "1";
    if (!cells[10].empty()) r.selectivity_ratio = parse_double(cells[10]);
    out.push_back(std::move(r));
  }
  return out;
}

nlohmann::json EvalSummary::to_json() const {
  return nlohmann::json{
      {"mean_latency", mean_latency},
      {"p80_latency", p80_latency},
      {"total_index_bytes", total_index_bytes},
      {"built_index_bytes", built_index_bytes},
      {"build_phase_mean_latency", build_phase_mean_latency},
      {"noop_rate", noop_rate},
      {"mean_index_key_count", mean_index_key_count},
      {"indices_built", indices_built},
      {"steps", steps},
      {"intersection_opportunity_rate", intersection_opportunity_rate},
      {"intersection_taken_rate", intersection_taken_rate},
      {"noop_rate_range_queries", noop_rate_range_queries},
      {"noop_rate_eq_queries", noop_rate_eq_queries},
      {"noop_share_range", noop_share_range}};
}

EvalSummary EvalSummary::from_json(const nlohmann::json& j) {
  EvalSummary s;
  s.mean_latency = j.at("mean_latency").get<double>();
  s.p80_latency = j.at("p80_latency").get<double>();
  s.total_index_bytes = j.at("total_index_bytes").get<int64_t>();
  s.built_index_bytes = j.at("built_index_bytes").get<int64_t>();
  s.build_phase_mean_latency = j.at("build_phase_mean_latency").get<double>();
  s.noop_rate = j.at("noop_rate").get<double>();
  s.mean_index_key_count = j.at("mean_index_key_count").get<double>();
  s.indices_built = j.at("indices_built").get<int>();
  s.steps = j.at("steps").get<int>();
  s.intersection_opportunity_rate = j.at("intersection_opportunity_rate").get<double>();
  s.intersection_taken_rate = j.at("intersection_taken_rate").get<double>();
  s.noop_rate_range_queries = j.at("noop_rate_range_queries").get<double>();
  s.noop_rate_eq_queries = j.at("noop_rate_eq_queries").get<double>();
  s.noop_share_range = j.at("noop_share_range").get<double>();
  return s;
}

double percentile_nearest_rank(std::vector<double> values, double pct) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const size_t rank = static_cast<size_t>(
      std::ceil(pct / 100.0 * static_cast<double>(values.size())));
  return values[std::max<size_t>(rank, 1) - 1];
}

EvalSummary summarize_eval(const std::vector<StepRecord>& build_records,
                           const std::vector<bool>& build_query_has_range,
                           const std::vector<double>& final_latencies,
                           int64_t total_index_bytes, int64_t built_index_bytes) {
  EvalSummary s;
  s.total_index_bytes = total_index_bytes;
  s.built_index_bytes = built_index_bytes;
  s.steps = static_cast<int>(build_records.size());

  double lat_sum = 0.0;
  for (double l : final_latencies) lat_sum += l;
  s.mean_latency = final_latencies.empty() ? 0.0 : lat_sum / final_latencies.size();
  s.p80_latency = percentile_nearest_rank(final_latencies, 80.0);

  int noops = 0, opportunities = 0, taken = 0;
  int range_steps = 0, range_noops = 0, eq_steps = 0, eq_noops = 0;
  double build_lat_sum = 0.0, ratio_key_sum = 0.0;
  for (size_t i = 0; i < build_records.size(); ++i) {
    const StepRecord& r = build_records[i];
    build_lat_sum += r.latency;
    const bool noop = r.action == "NOOP";
    if (noop) ++noops;
    if (r.intersection_opportunity) ++opportunities;
    if (r.intersection_taken) ++taken;
    const bool has_range = i < build_query_has_range.size() && build_query_has_range[i];
    if (has_range) {
      ++range_steps;
      if (noop) ++range_noops;
    } else {
      ++eq_steps;
      if (noop) ++eq_noops;
    }
    if (r.delta_size > 0) {
      ++s.indices_built;
      // count "+"-joined keys of each ";"-separated index in the action cell
      std::istringstream actions(r.action);
      std::string one;
      while (std::getline(actions, one, ';')) {
        ratio_key_sum += 1.0 + std::count(one.begin(), one.end(), '+');
      }
    }
  }
  if (s.steps > 0) {
    s.noop_rate = static_cast<double>(noops) / s.steps;
    s.build_phase_mean_latency = build_lat_sum / s.steps;
    s.intersection_opportunity_rate = static_cast<double>(opportunities) / s.steps;
  }
  if (opportunities > 0) s.intersection_taken_rate = static_cast<double>(taken) / opportunities;
  if (s.indices_built > 0) s.mean_index_key_count = ratio_key_sum / s.indices_built;
  if (range_steps > 0) s.noop_rate_range_queries = static_cast<double>(range_noops) / range_steps;
  if (eq_steps > 0) s.noop_rate_eq_queries = static_cast<double>(eq_noops) / eq_steps;
  if (noops > 0) s.noop_share_range = static_cast<double>(range_noops) / noops;
  return s;
}

double selectivity_ratio(const Index& index, const Query& query, const TableSchema& schema) {
  if (index.keys.empty()) throw SchemaError("selectivity_ratio: empty index");
  double key_sum = 0.0;
  for (const auto& k : index.keys) key_sum += selectivity(schema, k);
  double attr_sum = 0.0;
  for (const auto& p : query.predicates) attr_sum += selectivity(schema, p.attribute);
  const double key_mean = key_sum / static_cast<double>(index.keys.size());
  const double attr_mean = attr_sum / static_cast<double>(query.predicates.size());
  return key_mean / attr_mean;
}

std::pair<bool, bool> intersection_stats(const Query& query, bool action_was_noop,
                                         const IndexSet& set_before,
                                         const ExecutionReport& report) {
  const auto attrs = query.attribute_names();
  // A candidate exists iff some index's leading keys are all query attributes;
  // any such key run is a prefix of some permutation of the query's attributes.
  std::vector<std::string> candidates;
  for (const auto& idx : set_before.indices) {
    if (idx.keys.empty()) continue;
    if (std::find(attrs.begin(), attrs.end(), idx.keys.front()) != attrs.end())
      candidates.push_back(idx.display_name());
  }
  const bool opportunity = !candidates.empty();
  const bool taken = opportunity && action_was_noop &&
                     std::find(candidates.begin(), candidates.end(), report.chosen_path) !=
                         candidates.end();
  return {opportunity, taken};
}

std::vector<CurvePoint> build_curves(const std::vector<StepRecord>& records, int window) {
  int max_episode = -1;
  for (const auto& r : records) max_episode = std::max(max_episode, r.episode);
  if (max_episode < 0) return {};

  const double nan = std::nan("");
  std::vector<CurvePoint> curves(max_episode + 1);
  std::vector<double> ratio_sum(max_episode + 1, 0.0), reward_sum(max_episode + 1, 0.0);
  std::vector<int> ratio_n(max_episode + 1, 0), steps(max_episode + 1, 0), noops(max_episode + 1, 0);

  for (const auto& r : records) {
    CurvePoint& c = curves[r.episode];
    c.episode = r.episode;
    ++steps[r.episode];
    reward_sum[r.episode] += r.reward;
    if (r.action == "NOOP") ++noops[r.episode];
    if (r.intersection_opportunity) ++c.opportunities;
    if (r.intersection_taken) ++c.taken;
    if (r.selectivity_ratio) {
      ratio_sum[r.episode] += *r.selectivity_ratio;
      ++ratio_n[r.episode];
    }
  }
  for (int e = 0; e <= max_episode; ++e) {
    CurvePoint& c = curves[e];
    c.episode = e;
    c.selectivity_ratio_raw = ratio_n[e] > 0 ? ratio_sum[e] / ratio_n[e] : nan;
    c.taken_rate_raw =
        c.opportunities > 0 ? static_cast<double>(c.taken) / c.opportunities : nan;
    c.noop_rate = steps[e] > 0 ? static_cast<double>(noops[e]) / steps[e] : nan;
    c.mean_reward = steps[e] > 0 ? reward_sum[e] / steps[e] : nan;
  }

  // trailing-window means over present values
  auto smooth = [&](auto raw_of) {
    std::vector<double> out(curves.size(), nan);
    for (size_t e = 0; e < curves.size(); ++e) {
      double sum = 0.0;
      int n = 0;
      for (size_t k = e >= static_cast<size_t>(window) - 1 ? e - window + 1 : 0; k <= e; ++k) {
        const double v = raw_of(curves[k]);
        if (!std::isnan(v)) {
          sum += v;
          ++n;
        }
      }
      if (n > 0) out[e] = sum / n;
    }
    return out;
  };
  auto ratio_smooth = smooth([](const CurvePoint& c) { return c.selectivity_ratio_raw; });
  auto taken_smooth = smooth([](const CurvePoint& c) { return c.taken_rate_raw; });
  for (size_t e = 0; e < curves.size(); ++e) {
    curves[e].selectivity_ratio_smooth = ratio_smooth[e];
    curves[e].taken_rate_smooth = taken_smooth[e];
  }
  return curves;
}

void write_curves_csv(const std::string& path, const std::vector<CurvePoint>& curves) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write csv: " + path);
  out << "episode,selectivity_ratio,selectivity_ratio_smoothed,intersection_opportunities,"
         "intersection_taken,intersection_taken_rate,intersection_taken_rate_smoothed,"
         "noop_rate,mean_reward\n";
  auto cell = [](double v) { return std::isnan(v) ? std::string() : format_double(v); };
  for (const auto& c : curves) {
    out << c.episode << ',' << cell(c.selectivity_ratio_raw) << ','
        << cell(c.selectivity_ratio_smooth) << ',' << c.opportunities << ',' << c.taken << ','
        << cell(c.taken_rate_raw) << ',' << cell(c.taken_rate_smooth) << ',' << cell(c.noop_rate)
        << ',' << cell(c.mean_reward) << "\n";
  }
}

TrendReport least_squares_trend(const std::vector<double>& ys) {
  TrendReport report;
  std::vector<std::pair<double, double>> points;
  for (size_t i = 0; i < ys.size(); ++i) {
    if (!std::isnan(ys[i])) points.emplace_back(static_cast<double>(i), ys[i]);
  }
  report.n = static_cast<int>(points.size());
  if (report.n < 3) return report;

  double sx = 0, sy = 0;
  for (auto& [x, y] : points) {
    sx += x;
    sy += y;
  }
  const double mx = sx / report.n, my = sy / report.n;
  double sxx = 0, sxy = 0;
  for (auto& [x, y] : points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx == 0.0) return report;
  report.slope = sxy / sxx;

  double sse = 0.0;
  const double intercept = my - report.slope * mx;
  for (auto& [x, y] : points) {
    const double resid = y - (intercept + report.slope * x);
    sse += resid * resid;
  }
  const double var = sse / (report.n - 2);
  report.std_err = std::sqrt(var / sxx);
  if (report.std_err == 0.0) {
    report.p_one_sided = report.slope > 0 ? 0.0 : 1.0;
    return report;
  }
  report.t_stat = report.slope / report.std_err;
  // normal approximation of the t distribution; fine for n ~ 100 episodes
  report.p_one_sided = 0.5 * std::erfc(report.t_stat / std::sqrt(2.0));
  return report;
}

}  // namespace idxlab

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace idxlab {

class SchemaError : public std::runtime_error {
 public:
  explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

/// Comparison operator of a query predicate.
enum class Op { kEq, kLt, kGt };

const char* op_name(Op op);
Op op_from_name(const std::string& name);

/// Per-attribute statistics the cost model and the workload sampler consume.
struct AttributeStats {
  std::string name;
  int64_t distinct_count = 1;
  bool ordered_domain = false;  // range-comparable values
  int width_bytes = 4;
};

struct TableSchema {
  std::string name;
  int64_t row_count = 0;
  std::vector<AttributeStats> attributes;
  std::vector<std::string> default_index_keys;  // primary-key index, present before any action

  const AttributeStats& attribute(const std::string& attr_name) const;
  bool has_attribute(const std::string& attr_name) const;
  int attribute_position(const std::string& attr_name) const;  // -1 if absent
  void validate() const;
};

struct Predicate {
  std::string attribute;
  Op op = Op::kEq;
  int64_t value = 0;  // integer code into [0, distinct_count)
};

/// One sampled SELECT COUNT(*) query: table plus an ordered predicate list.
struct Query {
  std::string table;
  int id = 0;  // position within its workload
  std::vector<Predicate> predicates;

  bool has_range_predicate() const;
  std::vector<std::string> attribute_names() const;
};

struct Workload {
  std::vector<Query> queries;
  uint64_t seed = 0;
};

/// distinct_count / row_count, in (0, 1]. Throws SchemaError on unknown attribute.
double selectivity(const TableSchema& table, const std::string& attr_name);

// JSON (de)serialization. Schema statistics file layout:
//   {table, row_count, attributes: [{name, distinct_count, ordered, width_bytes}],
//    default_index: [names]}
nlohmann::json schema_to_json(const TableSchema& schema);
TableSchema schema_from_json(const nlohmann::json& j);
TableSchema load_schema_file(const std::string& path);

nlohmann::json query_to_json(const Query& q);
Query query_from_json(const nlohmann::json& j);
nlohmann::json workloads_to_json(const std::vector<Workload>& workloads);
std::vector<Workload> workloads_from_json(const nlohmann::json& j);
std::vector<Workload> load_workloads_file(const std::string& path);
void save_workloads_file(const std::string& path, const std::vector<Workload>& workloads);

}  // namespace idxlab

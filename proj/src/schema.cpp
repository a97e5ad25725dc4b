#include "idxlab/schema.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace idxlab {

using nlohmann::json;

const char* op_name(Op op) {
  switch (op) {
    case Op::kEq: return "EQ";
    case Op::kLt: return "LT";
    case Op::kGt: return "GT";
  }
  return "?";
}

Op op_from_name(const std::string& name) {
  if (name == "EQ") return Op::kEq;
  if (name == "LT") return Op::kLt;
  if (name == "GT") return Op::kGt;
  throw SchemaError("unknown operator name: " + name);
}

const AttributeStats& TableSchema::attribute(const std::string& attr_name) const {
  for (const auto& a : attributes) {
    if (a.name == attr_name) return a;
  }
  throw SchemaError("unknown attribute '" + attr_name + "' in table " + name);
}

bool TableSchema::has_attribute(const std::string& attr_name) const {
  return std::any_of(attributes.begin(), attributes.end(),
                     [&](const AttributeStats& a) { return a.name == attr_name; });
}

int TableSchema::attribute_position(const std::string& attr_name) const {
  for (size_t i = 0; i < attributes.size(); ++i) {
    if (attributes[i].name == attr_name) return static_cast<int>(i);
  }
  return -1;
}

void TableSchema::validate() const {
  if (name.empty()) throw SchemaError("table name empty");
  if (row_count < 1) throw SchemaError("row_count must be positive");
  if (attributes.empty()) throw SchemaError("table has no attributes");
  std::unordered_set<std::string> seen;
  for (const auto& a : attributes) {
    if (a.name.empty()) throw SchemaError("attribute name empty");
    if (!seen.insert(a.name).second) throw SchemaError("duplicate attribute " + a.name);
    if (a.distinct_count < 1) throw SchemaError(a.name + ": distinct_count must be >= 1");
    if (a.distinct_count > row_count)
      throw SchemaError(a.name + ": distinct_count exceeds row_count");
    if (a.width_bytes < 1) throw SchemaError(a.name + ": width_bytes must be >= 1");
  }
  if (default_index_keys.empty()) throw SchemaError("default index must have at least one key");
  std::unordered_set<std::string> key_seen;
  for (const auto& k : default_index_keys) {
    if (!has_attribute(k)) throw SchemaError("default index key " + k + " not in schema");
    if (!key_seen.insert(k).second) throw SchemaError("duplicate default index key " + k);
  }
}

bool Query::has_range_predicate() const {
  return std::any_of(predicates.begin(), predicates.end(),
                     [](const Predicate& p) { return p.op != Op::kEq; });
}

std::vector<std::string> Query::attribute_names() const {
  std::vector<std::string> names;
  names.reserve(predicates.size());
  for (const auto& p : predicates) names.push_back(p.attribute);
  return names;
}

double selectivity(const TableSchema& table, const std::string& attr_name) {
  const AttributeStats& a = table.attribute(attr_name);
  return static_cast<double>(a.distinct_count) / static_cast<double>(table.row_count);
}

json schema_to_json(const TableSchema& schema) {
  json attrs = json::array();
  for (const auto& a : schema.attributes) {
    attrs.push_back({{"name", a.name},
                     {"distinct_count", a.distinct_count},
                     {"ordered", a.ordered_domain},
                     {"width_bytes", a.width_bytes}});
  }
  return json{{"table", schema.name},
              {"row_count", schema.row_count},
              {"attributes", attrs},
              {"default_index", schema.default_index_keys}};
}

TableSchema schema_from_json(const json& j) {
  TableSchema s;
  s.name = j.at("table").get<std::string>();
  s.row_count = j.at("row_count").get<int64_t>();
  for (const auto& a : j.at("attributes")) {
    AttributeStats st;
    st.name = a.at("name").get<std::string>();
    st.distinct_count = a.at("distinct_count").get<int64_t>();
    st.ordered_domain = a.at("ordered").get<bool>();
    st.width_bytes = a.at("width_bytes").get<int>();
    s.attributes.push_back(std::move(st));
  }
  s.default_index_keys = j.at("default_index").get<std::vector<std::string>>();
  s.validate();
  return s;
}

TableSchema load_schema_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open schema file: " + path);
  json j;
  in >> j;
  return schema_from_json(j);
}

json query_to_json(const Query& q) {
  json preds = json::array();
  for (const auto& p : q.predicates) {
    preds.push_back({{"attribute", p.attribute}, {"op", op_name(p.op)}, {"value", p.value}});
  }
  return json{{"table", q.table}, {"id", q.id}, {"predicates", preds}};
}

Query query_from_json(const json& j) {
  Query q;
  q.table = j.at("table").get<std::string>();
  q.id = j.at("id").get<int>();
  for (const auto& p : j.at("predicates")) {
    Predicate pr;
    pr.attribute = p.at("attribute").get<std::string>();
    pr.op = op_from_name(p.at("op").get<std::string>());
    pr.value = p.at("value").get<int64_t>();
    q.predicates.push_back(std::move(pr));
  }
  return q;
}

json workloads_to_json(const std::vector<Workload>& workloads) {
  json arr = json::array();
  for (const auto& w : workloads) {
    json queries = json::array();
    for (const auto& q : w.queries) queries.push_back(query_to_json(q));
    arr.push_back({{"seed", w.seed}, {"queries", queries}});
  }
  return json{{"workloads", arr}};
}

std::vector<Workload> workloads_from_json(const json& j) {
  std::vector<Workload> out;
  for (const auto& wj : j.at("workloads")) {
    Workload w;
    w.seed = wj.at("seed").get<uint64_t>();
    for (const auto& qj : wj.at("queries")) w.queries.push_back(query_from_json(qj));
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<Workload> load_workloads_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open workloads file: " + path);
  json j;
  in >> j;
  return workloads_from_json(j);
}

void save_workloads_file(const std::string& path, const std::vector<Workload>& workloads) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write workloads file: " + path);
  out << workloads_to_json(workloads).dump(2) << "\n";
}

}  // namespace idxlab

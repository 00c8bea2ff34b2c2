#include "fedql/relation.hpp"

#include <set>
#include <stdexcept>

namespace fedql {

bool value_matches_kind(const Value &v, ColumnKind kind) {
  if (kind == ColumnKind::String) return std::holds_alternative<std::string>(v);
  return std::holds_alternative<int64_t>(v);
}

std::string value_to_string(const Value &v) {
  if (const auto *s = std::get_if<std::string>(&v)) return *s;
  return std::to_string(std::get<int64_t>(v));
}

Value dummy_value(ColumnKind kind) {
  if (kind == ColumnKind::String) return std::string();
  return int64_t{0};
}

Schema::Schema(std::vector<Column> cols) : columns(std::move(cols)) { validate(); }

void Schema::validate() const {
  std::set<std::string_view> seen;
  for (const auto &c : columns) {
    if (c.name.empty()) throw std::invalid_argument("schema: empty column name");
    if (!seen.insert(c.name).second)
      throw std::invalid_argument("schema: duplicate column name '" + c.name + "'");
    if (c.distinct_hint && *c.distinct_hint < 1)
      throw std::invalid_argument("schema: distinct-value estimate for '" + c.name +
                                  "' must be >= 1");
  }
}

bool Schema::same_layout(const Schema &other) const {
  if (columns.size() != other.columns.size()) return false;
  for (size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name != other.columns[i].name) return false;
    if (columns[i].kind != other.columns[i].kind) return false;
  }
  return true;
}

namespace {
std::string_view base_name(std::string_view full) {
  auto pos = full.rfind('.');
  return pos == std::string_view::npos ? full : full.substr(pos + 1);
}
}  // namespace

size_t Schema::resolve(std::string_view ref) const {
  // Exact match first, then unique base-name match.
  for (size_t i = 0; i < columns.size(); ++i)
    if (columns[i].name == ref) return i;
  size_t found = columns.size();
  for (size_t i = 0; i < columns.size(); ++i) {
    if (base_name(columns[i].name) == ref) {
      if (found != columns.size())
        throw std::invalid_argument("ambiguous column reference '" + std::string(ref) + "'");
      found = i;
    }
  }
  if (found == columns.size())
    throw std::invalid_argument("unknown column '" + std::string(ref) + "'");
  return found;
}

std::vector<Tuple> PaddedTable::materialize() const {
  std::vector<Tuple> out = real_rows;
  out.reserve(capacity);
  Tuple filler;
  filler.dummy = true;
  for (const auto &c : schema.columns) filler.values.push_back(dummy_value(c.kind));
  while (out.size() < capacity) out.push_back(filler);
  return out;
}

void PaddedTable::validate() const {
  schema.validate();
  if (true_cardinality() > capacity)
    throw std::logic_error("padded table: true cardinality exceeds capacity");
  for (const auto &r : real_rows) {
    if (r.dummy) throw std::logic_error("padded table: dummy row stored as real");
    if (r.values.size() != schema.arity())
      throw std::logic_error("padded table: tuple arity mismatch");
    for (size_t i = 0; i < r.values.size(); ++i)
      if (!value_matches_kind(r.values[i], schema.columns[i].kind))
        throw std::logic_error("padded table: value kind mismatch in column " +
                               schema.columns[i].name);
  }
}

PaddedTable union_partitions(const std::vector<Partition> &parts) {
  if (parts.empty()) throw std::invalid_argument("union_partitions: no partitions");
  std::set<int> owners;
  for (const auto &p : parts) {
    if (p.table_name != parts.front().table_name)
      throw std::invalid_argument("union_partitions: mixed table names");
    if (!p.schema.same_layout(parts.front().schema))
      throw std::invalid_argument("union_partitions: schema mismatch between owners of '" +
                                  p.table_name + "'");
    if (!owners.insert(p.owner_id).second)
      throw std::invalid_argument("union_partitions: duplicate owner id");
  }
  PaddedTable t;
  t.schema = parts.front().schema;
  for (const auto &p : parts) {
    for (const auto &r : p.rows) {
      if (r.dummy) throw std::invalid_argument("union_partitions: dummy row in base data");
      t.real_rows.push_back(r);
    }
  }
  t.capacity = t.real_rows.size();
  t.validate();
  return t;
}

const TableDef &Catalog::table(const std::string &name) const {
  auto it = tables.find(name);
  if (it == tables.end()) throw std::invalid_argument("unknown table '" + name + "'");
  return it->second;
}

void Catalog::add(TableDef def) {
  def.schema.validate();
  tables[def.name] = std::move(def);
}

}  // namespace fedql

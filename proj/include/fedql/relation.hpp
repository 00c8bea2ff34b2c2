#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace fedql {

/// Cell value. Dates are stored as integer epoch days, so they share the
/// int64 representation.
using Value = std::variant<int64_t, std::string>;

enum class ColumnKind { Int64, String, Date };

bool value_matches_kind(const Value &v, ColumnKind kind);
std::string value_to_string(const Value &v);
Value dummy_value(ColumnKind kind);

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::Int64;
  /// Estimated number of distinct values, used for cardinality estimation.
  /// Filled with max(10, table_size / 10) at scan time when absent.
  std::optional<int64_t> distinct_hint;
};

/// Ordered list of columns. Names must be unique within a schema; qualified
/// names ("alias.col") are produced by scans so joins stay unambiguous.
struct Schema {
  std::vector<Column> columns;

  Schema() = default;
  explicit Schema(std::vector<Column> cols);

  size_t arity() const { return columns.size(); }
  bool same_layout(const Schema &other) const;

  /// Resolves a column reference. Accepts the full name or, when unique, the
  /// base name after the qualifier dot. Throws on unknown or ambiguous refs.
  size_t resolve(std::string_view ref) const;
  const Column &column(std::string_view ref) const { return columns[resolve(ref)]; }

  void validate() const;
};

struct Tuple {
  std::vector<Value> values;
  bool dummy = false;
};

/// Fixed-capacity array of real + dummy rows standing in for a secure array.
///
/// Dummy slots are represented implicitly: only real rows are stored, and the
/// capacity records the padded length. Exhaustive padding grows capacities as
/// products of input sizes (billions of slots at bench scale), so dummies are
/// materialized on demand rather than held in memory. All observable
/// quantities (capacity, cardinality, I/O counts, results) are unaffected.
struct PaddedTable {
  Schema schema;
  std::vector<Tuple> real_rows;  // every stored row is non-dummy
  uint64_t capacity = 0;
  int io_counter_id = -1;

  uint64_t true_cardinality() const { return real_rows.size(); }

  /// Full capacity-length row vector, dummies included. Small tables only.
  std::vector<Tuple> materialize() const;

  void validate() const;
};

/// One owner's horizontal slice of a base table.
struct Partition {
  int owner_id = 0;  // in [1, m]
  std::string table_name;
  Schema schema;
  std::vector<Tuple> rows;  // all non-dummy
};

/// Concatenates the partitions of one table into its base secure array.
/// Capacity equals the total ingested row count, which is public knowledge.
PaddedTable union_partitions(const std::vector<Partition> &parts);

/// Public information about a base table: schema plus ingested size.
struct TableDef {
  std::string name;
  Schema schema;
  uint64_t size = 0;
};

struct Catalog {
  std::map<std::string, TableDef> tables;

  bool has(const std::string &name) const { return tables.count(name) > 0; }
  const TableDef &table(const std::string &name) const;
  void add(TableDef def);
};

}  // namespace fedql

#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fedql/relation.hpp"

namespace fedql {

enum class OpKind {
  Scan,
  Filter,
  Project,
  EquiJoin,
  CrossProduct,
  Distinct,
  Sort,
  Limit,
  CountAggregate,
  GroupByCount,
};

std::string op_kind_name(OpKind k);

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };

/// Filter condition: column <cmp> literal, or column <cmp> column.
struct Predicate {
  std::string column;
  CmpOp cmp = CmpOp::Eq;
  std::optional<Value> literal;
  std::optional<std::string> rhs_column;
};

struct OperatorNode {
  OpKind kind = OpKind::Scan;

  // Scan
  std::string table;
  std::string alias;  // column qualifier, defaults to table name
  // Filter
  Predicate predicate;
  // Project / Distinct keys / Sort keys / GroupByCount keys
  std::vector<std::string> columns;
  bool sort_descending = false;
  // Limit
  uint64_t limit_k = 0;
  // EquiJoin
  std::string left_key;
  std::string right_key;
  std::optional<uint64_t> multiplicity;  // declared max join-key multiplicity

  std::vector<int> children;  // indices into QueryDag::ops, always < own index

  // Privacy annotations, filled by planning / sensitivity passes.
  double epsilon_share = 0.0;
  double delta_share = 0.0;
  uint64_t sensitivity = 0;  // Δc, 0 until propagated

  // Derived at build time.
  Schema output_schema;
  uint64_t padded_capacity = 0;  // exhaustive capacity from base sizes (public K)
};

/// Operator tree in bottom-up order (children always precede parents, root
/// last). Structurally a tree: every node has exactly one parent.
struct QueryDag {
  std::string name;
  std::vector<OperatorNode> ops;
  std::set<std::string> referenced_tables;

  size_t size() const { return ops.size(); }
  int root_index() const { return static_cast<int>(ops.size()) - 1; }
  const OperatorNode &root() const { return ops.back(); }
};

/// Builder-facing query description. Children are shared pointers so that a
/// malformed description sharing one node between two parents is detectable.
struct PlanNode {
  OpKind kind = OpKind::Scan;
  std::string table;
  std::string alias;
  Predicate predicate;
  std::vector<std::string> columns;
  bool sort_descending = false;
  uint64_t limit_k = 0;
  std::string left_key;
  std::string right_key;
  std::optional<uint64_t> multiplicity;
  std::vector<std::shared_ptr<PlanNode>> children;
};

using PlanNodePtr = std::shared_ptr<PlanNode>;

// Convenience constructors for programmatic query building.
PlanNodePtr scan(std::string table, std::string alias = "");
PlanNodePtr filter_eq(PlanNodePtr in, std::string column, Value literal);
PlanNodePtr filter_cmp(PlanNodePtr in, std::string column, CmpOp cmp, Value literal);
PlanNodePtr filter_cols(PlanNodePtr in, std::string column, CmpOp cmp, std::string rhs);
PlanNodePtr project(PlanNodePtr in, std::vector<std::string> columns);
PlanNodePtr equi_join(PlanNodePtr l, PlanNodePtr r, std::string left_key, std::string right_key,
                      uint64_t multiplicity);
PlanNodePtr cross_product(PlanNodePtr l, PlanNodePtr r);
PlanNodePtr distinct(PlanNodePtr in, std::vector<std::string> columns = {});
PlanNodePtr sort_by(PlanNodePtr in, std::vector<std::string> columns, bool descending = false);
PlanNodePtr limit(PlanNodePtr in, uint64_t k);
PlanNodePtr count_aggregate(PlanNodePtr in);
PlanNodePtr group_by_count(PlanNodePtr in, std::vector<std::string> keys);

/// Validates the description against the catalog and flattens it into
/// bottom-up order. Sensitivities and budget shares are left unset.
QueryDag build_dag(const PlanNodePtr &root, const Catalog &catalog, std::string name = "query");

/// Exhaustive padded output size for one operator given its input capacities.
uint64_t padded_size(OpKind kind, const std::vector<uint64_t> &input_caps, uint64_t limit_k = 0);

/// Base tables referenced under the root (deduplicated).
std::set<std::string> tables_touched(const QueryDag &dag);

}  // namespace fedql

#include "fedql/dag.hpp"

#include <limits>
#include <map>
#include <stdexcept>

namespace fedql {

std::string op_kind_name(OpKind k) {
  switch (k) {
    case OpKind::Scan: return "scan";
    case OpKind::Filter: return "filter";
    case OpKind::Project: return "project";
    case OpKind::EquiJoin: return "join";
    case OpKind::CrossProduct: return "cross";
    case OpKind::Distinct: return "distinct";
    case OpKind::Sort: return "sort";
    case OpKind::Limit: return "limit";
    case OpKind::CountAggregate: return "count";
    case OpKind::GroupByCount: return "group_count";
  }
  return "?";
}

PlanNodePtr scan(std::string table, std::string alias) {
  auto n = std::make_shared<PlanNode>();
  n->kind = OpKind::Scan;
  n->table = std::move(table);
  n->alias = alias.empty() ? n->table : std::move(alias);
  return n;
}

PlanNodePtr filter_eq(PlanNodePtr in, std::string column, Value literal) {
  return filter_cmp(std::move(in), std::move(column), CmpOp::Eq, std::move(literal));
}

PlanNodePtr filter_cmp(PlanNodePtr in, std::string column, CmpOp cmp, Value literal) {
  auto n = std::make_shared<PlanNode>();
  n->kind = OpKind::Filter;
  n->predicate = Predicate{std::move(column), cmp, std::move(literal), std::nullopt};
  n->children = {std::move(in)};
  return n;
}

PlanNodePtr filter_cols(PlanNodePtr in, std::string column, CmpOp cmp, std::string rhs) {
  auto n = std::make_shared<PlanNode>();
  n->kind = OpKind::Filter;
  n->predicate = Predicate{std::move(column), cmp, std::nullopt, std::move(rhs)};
  n->children = {std::move(in)};
  return n;
}

PlanNodePtr project(PlanNodePtr in, std::vector<std::string> columns) {
  auto n = std::make_shared<PlanNode>();
  n->kind = OpKind::Project;
  n->columns = std::move(columns);
  n->children = {std::move(in)};
  return n;
}

PlanNodePtr equi_join(PlanNodePtr l, PlanNodePtr r, std::string left_key, std::string right_key,
                      uint64_t multiplicity) {
  auto n = std::make_shared<PlanNode>();
  n->kind = OpKind::EquiJoin;
  n->left_key = std::move(left_key);
  n->right_key = std::move(right_key);
  n->multiplicity = multiplicity;
  n->children = {std::move(l), std::move(r)};
  return n;
}

PlanNodePtr cross_product(PlanNodePtr l, PlanNodePtr r) {
  auto n = std::make_shared<PlanNode>();
  n->kind = OpKind::CrossProduct;
  n->children = {std::move(l), std::move(r)};
  return n;
}

PlanNodePtr distinct(PlanNodePtr in, std::vector<std::string> columns) {
  auto n = std::make_shared<PlanNode>();
  n->kind = OpKind::Distinct;
  n->columns = std::move(columns);
  n->children = {std::move(in)};
  return n;
}

PlanNodePtr sort_by(PlanNodePtr in, std::vector<std::string> columns, bool descending) {
  auto n = std::make_shared<PlanNode>();
  n->kind = OpKind::Sort;
  n->columns = std::move(columns);
  n->sort_descending = descending;
  n->children = {std::move(in)};
  return n;
}

PlanNodePtr limit(PlanNodePtr in, uint64_t k) {
  auto n = std::make_shared<PlanNode>();
  n->kind = OpKind::Limit;
  n->limit_k = k;
  n->children = {std::move(in)};
  return n;
}

PlanNodePtr count_aggregate(PlanNodePtr in) {
  auto n = std::make_shared<PlanNode>();
  n->kind = OpKind::CountAggregate;
  n->children = {std::move(in)};
  return n;
}

PlanNodePtr group_by_count(PlanNodePtr in, std::vector<std::string> keys) {
  auto n = std::make_shared<PlanNode>();
  n->kind = OpKind::GroupByCount;
  n->columns = std::move(keys);
  n->children = {std::move(in)};
  return n;
}

namespace {

constexpr uint64_t kCapacityGuard = uint64_t{1} << 62;

uint64_t checked_mul(uint64_t a, uint64_t b) {
  if (a != 0 && b > kCapacityGuard / a)
    throw std::overflow_error("padded capacity exceeds overflow guard");
  return a * b;
}

size_t expected_children(OpKind k) {
  switch (k) {
    case OpKind::Scan: return 0;
    case OpKind::EquiJoin:
    case OpKind::CrossProduct: return 2;
    default: return 1;
  }
}

int64_t default_distinct(uint64_t table_size) {
  int64_t v = static_cast<int64_t>(table_size / 10);
  return v < 10 ? 10 : v;
}

Schema derive_schema(const OperatorNode &op, const std::vector<const Schema *> &in,
                     const Catalog &catalog, uint64_t scan_size) {
  switch (op.kind) {
    case OpKind::Scan: {
      const TableDef &def = catalog.table(op.table);
      Schema out;
      for (const auto &c : def.schema.columns) {
        Column qc = c;
        qc.name = op.alias + "." + c.name;
        if (!qc.distinct_hint) qc.distinct_hint = default_distinct(scan_size);
        out.columns.push_back(std::move(qc));
      }
      out.validate();
      return out;
    }
    case OpKind::Filter: {
      const Schema &s = *in[0];
      size_t lhs = s.resolve(op.predicate.column);
      if (op.predicate.rhs_column) {
        size_t rhs = s.resolve(*op.predicate.rhs_column);
        if (s.columns[lhs].kind == ColumnKind::String ||
            s.columns[rhs].kind == ColumnKind::String) {
          if (s.columns[lhs].kind != s.columns[rhs].kind)
            throw std::invalid_argument("filter: comparing string and integer columns");
        }
      } else if (op.predicate.literal) {
        if (!value_matches_kind(*op.predicate.literal, s.columns[lhs].kind))
          throw std::invalid_argument("filter: literal kind does not match column '" +
                                      op.predicate.column + "'");
      } else {
        throw std::invalid_argument("filter: predicate needs a literal or a rhs column");
      }
      return s;
    }
    case OpKind::Project:
    case OpKind::Distinct: {
      const Schema &s = *in[0];
      if (op.kind == OpKind::Distinct && op.columns.empty()) return s;
      if (op.columns.empty()) throw std::invalid_argument("project: empty column list");
      Schema out;
      for (const auto &ref : op.columns) out.columns.push_back(s.columns[s.resolve(ref)]);
      out.validate();
      return out;
    }
    case OpKind::Sort: {
      const Schema &s = *in[0];
      if (op.columns.empty()) throw std::invalid_argument("sort: empty key list");
      for (const auto &ref : op.columns) s.resolve(ref);
      return s;
    }
    case OpKind::Limit: return *in[0];
    case OpKind::EquiJoin:
    case OpKind::CrossProduct: {
      Schema out;
      out.columns = in[0]->columns;
      for (const auto &c : in[1]->columns) out.columns.push_back(c);
      out.validate();  // rejects self-joins without distinct aliases
      if (op.kind == OpKind::EquiJoin) {
        size_t l = in[0]->resolve(op.left_key);
        size_t r = in[1]->resolve(op.right_key);
        if ((in[0]->columns[l].kind == ColumnKind::String) !=
            (in[1]->columns[r].kind == ColumnKind::String))
          throw std::invalid_argument("join: key kinds differ");
      }
      return out;
    }
    case OpKind::CountAggregate: {
      Schema out;
      out.columns.push_back(Column{"count", ColumnKind::Int64, std::nullopt});
      return out;
    }
    case OpKind::GroupByCount: {
      const Schema &s = *in[0];
      if (op.columns.empty()) throw std::invalid_argument("group_count: empty key list");
      Schema out;
      for (const auto &ref : op.columns) out.columns.push_back(s.columns[s.resolve(ref)]);
      out.columns.push_back(Column{"count", ColumnKind::Int64, std::nullopt});
      out.validate();
      return out;
    }
  }
  throw std::invalid_argument("unsupported operator kind");
}

void flatten(const PlanNodePtr &node, const Catalog &catalog, QueryDag &dag,
             std::map<const PlanNode *, int> &seen) {
  if (!node) throw std::invalid_argument("build_dag: null node");
  if (seen.count(node.get()))
    throw std::invalid_argument("build_dag: operator node referenced by two parents");
  if (node->children.size() != expected_children(node->kind))
    throw std::invalid_argument("build_dag: " + op_kind_name(node->kind) + " expects " +
                                std::to_string(expected_children(node->kind)) + " child(ren)");
  std::vector<int> child_ids;
  for (const auto &c : node->children) {
    flatten(c, catalog, dag, seen);
    child_ids.push_back(static_cast<int>(dag.ops.size()) - 1);
  }

  OperatorNode op;
  op.kind = node->kind;
  op.table = node->table;
  op.alias = node->alias;
  op.predicate = node->predicate;
  op.columns = node->columns;
  op.sort_descending = node->sort_descending;
  op.limit_k = node->limit_k;
  op.left_key = node->left_key;
  op.right_key = node->right_key;
  op.multiplicity = node->multiplicity;
  op.children = child_ids;

  uint64_t scan_size = 0;
  std::vector<const Schema *> in;
  std::vector<uint64_t> in_caps;
  if (op.kind == OpKind::Scan) {
    if (!catalog.has(op.table))
      throw std::invalid_argument("build_dag: unknown table '" + op.table + "'");
    scan_size = catalog.table(op.table).size;
    dag.referenced_tables.insert(op.table);
  } else {
    for (int c : child_ids) {
      in.push_back(&dag.ops[c].output_schema);
      in_caps.push_back(dag.ops[c].padded_capacity);
    }
  }
  if (op.kind == OpKind::Limit && op.limit_k == 0)
    throw std::invalid_argument("build_dag: limit needs k >= 1");

  op.output_schema = derive_schema(op, in, catalog, scan_size);
  op.padded_capacity =
      op.kind == OpKind::Scan ? scan_size : padded_size(op.kind, in_caps, op.limit_k);

  seen[node.get()] = static_cast<int>(dag.ops.size());
  dag.ops.push_back(std::move(op));
}

}  // namespace

uint64_t padded_size(OpKind kind, const std::vector<uint64_t> &caps, uint64_t limit_k) {
  switch (kind) {
    case OpKind::Scan:
      throw std::invalid_argument("padded_size: scan capacity comes from the catalog");
    case OpKind::Filter:
    case OpKind::Project:
    case OpKind::Distinct:
    case OpKind::Sort:
    case OpKind::GroupByCount: return caps.at(0);
    case OpKind::EquiJoin:
    case OpKind::CrossProduct: return checked_mul(caps.at(0), caps.at(1));
    case OpKind::CountAggregate: return 1;
    case OpKind::Limit: return std::min(limit_k, caps.at(0));
  }
  throw std::invalid_argument("padded_size: unknown operator kind");
}

QueryDag build_dag(const PlanNodePtr &root, const Catalog &catalog, std::string name) {
  QueryDag dag;
  dag.name = std::move(name);
  std::map<const PlanNode *, int> seen;
  flatten(root, catalog, dag, seen);
  if (dag.ops.empty()) throw std::invalid_argument("build_dag: empty plan");
  return dag;
}

std::set<std::string> tables_touched(const QueryDag &dag) { return dag.referenced_tables; }

}  // namespace fedql

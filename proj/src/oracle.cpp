#include "fedql/oracle.hpp"

#include <algorithm>
#include <stdexcept>

namespace fedql {

namespace {

using Row = std::vector<Value>;
using Rows = std::vector<Row>;

int cmp_values(const Value &a, const Value &b) {
  if (a.index() != b.index()) throw std::invalid_argument("oracle: kind mismatch");
  if (const auto *ia = std::get_if<int64_t>(&a)) {
    int64_t ib = std::get<int64_t>(b);
    return *ia < ib ? -1 : (*ia > ib ? 1 : 0);
  }
  const auto &sa = std::get<std::string>(a);
  const auto &sb = std::get<std::string>(b);
  return sa < sb ? -1 : (sa > sb ? 1 : 0);
}

bool predicate_holds(CmpOp op, const Value &lhs, const Value &rhs) {
  switch (op) {
    case CmpOp::Eq: return lhs == rhs;
    case CmpOp::Ne: return !(lhs == rhs);
    case CmpOp::Lt: return cmp_values(lhs, rhs) < 0;
    case CmpOp::Le: return cmp_values(lhs, rhs) <= 0;
    case CmpOp::Gt: return cmp_values(lhs, rhs) > 0;
    case CmpOp::Ge: return cmp_values(lhs, rhs) >= 0;
  }
  return false;
}

Rows eval_op(const QueryDag &dag, size_t index, const std::vector<Rows> &computed,
             const PlainDatabase &db) {
  const OperatorNode &op = dag.ops[index];
  auto child = [&](int which) -> const Rows & { return computed[op.children[which]]; };

  switch (op.kind) {
    case OpKind::Scan: {
      auto it = db.find(op.table);
      if (it == db.end()) throw std::invalid_argument("oracle: no data for '" + op.table + "'");
      return it->second;
    }
    case OpKind::Filter: {
      const Schema &s = dag.ops[op.children[0]].output_schema;
      size_t lhs = s.resolve(op.predicate.column);
      size_t rhs = op.predicate.rhs_column ? s.resolve(*op.predicate.rhs_column) : 0;
      Rows out;
      for (const auto &row : child(0)) {
        const Value &rv = op.predicate.rhs_column ? row[rhs] : *op.predicate.literal;
        if (predicate_holds(op.predicate.cmp, row[lhs], rv)) out.push_back(row);
      }
      return out;
    }
    case OpKind::Project: {
      const Schema &s = dag.ops[op.children[0]].output_schema;
      std::vector<size_t> idx;
      for (const auto &ref : op.columns) idx.push_back(s.resolve(ref));
      Rows out;
      for (const auto &row : child(0)) {
        Row r;
        for (size_t i : idx) r.push_back(row[i]);
        out.push_back(std::move(r));
      }
      return out;
    }
    case OpKind::EquiJoin:
    case OpKind::CrossProduct: {
      const Schema &ls = dag.ops[op.children[0]].output_schema;
      const Schema &rs = dag.ops[op.children[1]].output_schema;
      size_t lk = 0, rk = 0;
      if (op.kind == OpKind::EquiJoin) {
        lk = ls.resolve(op.left_key);
        rk = rs.resolve(op.right_key);
      }
      Rows out;
      for (const auto &lrow : child(0)) {
        for (const auto &rrow : child(1)) {
          if (op.kind == OpKind::EquiJoin && !(lrow[lk] == rrow[rk])) continue;
          Row r = lrow;
          r.insert(r.end(), rrow.begin(), rrow.end());
          out.push_back(std::move(r));
        }
      }
      return out;
    }
    case OpKind::Distinct: {
      const Schema &s = dag.ops[op.children[0]].output_schema;
      std::vector<size_t> idx;
      if (op.columns.empty()) {
        for (size_t i = 0; i < s.arity(); ++i) idx.push_back(i);
      } else {
        for (const auto &ref : op.columns) idx.push_back(s.resolve(ref));
      }
      Rows out;
      std::vector<Row> seen;
      for (const auto &row : child(0)) {
        Row key;
        for (size_t i : idx) key.push_back(row[i]);
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
        seen.push_back(key);
        out.push_back(op.columns.empty() ? row : key);
      }
      return out;
    }
    case OpKind::Sort: {
      const Schema &s = dag.ops[op.children[0]].output_schema;
      std::vector<size_t> idx;
      for (const auto &ref : op.columns) idx.push_back(s.resolve(ref));
      Rows out = child(0);
      std::stable_sort(out.begin(), out.end(), [&](const Row &a, const Row &b) {
        for (size_t i : idx) {
          int c = cmp_values(a[i], b[i]);
          if (c != 0) return op.sort_descending ? c > 0 : c < 0;
        }
        return false;
      });
      return out;
    }
    case OpKind::Limit: {
      Rows out;
      for (const auto &row : child(0)) {
        if (out.size() >= op.limit_k) break;
        out.push_back(row);
      }
      return out;
    }
    case OpKind::CountAggregate: {
      return Rows{{static_cast<int64_t>(child(0).size())}};
    }
    case OpKind::GroupByCount: {
      const Schema &s = dag.ops[op.children[0]].output_schema;
      std::vector<size_t> idx;
      for (const auto &ref : op.columns) idx.push_back(s.resolve(ref));
      std::vector<Row> order;
      Rows out;
      std::vector<int64_t> counts;
      for (const auto &row : child(0)) {
        Row key;
        for (size_t i : idx) key.push_back(row[i]);
        auto it = std::find(order.begin(), order.end(), key);
        if (it == order.end()) {
          order.push_back(key);
          counts.push_back(1);
        } else {
          ++counts[it - order.begin()];
        }
      }
      for (size_t g = 0; g < order.size(); ++g) {
        Row r = order[g];
        r.push_back(counts[g]);
        out.push_back(std::move(r));
      }
      return out;
    }
  }
  throw std::invalid_argument("oracle: unsupported operator kind");
}

std::vector<Rows> eval_all(const QueryDag &dag, const PlainDatabase &db) {
  std::vector<Rows> computed(dag.ops.size());
  for (size_t i = 0; i < dag.ops.size(); ++i) computed[i] = eval_op(dag, i, computed, db);
  return computed;
}

}  // namespace

std::vector<std::vector<Value>> oracle_eval(const QueryDag &dag, const PlainDatabase &db) {
  return eval_all(dag, db).back();
}

std::vector<uint64_t> oracle_cardinalities(const QueryDag &dag, const PlainDatabase &db) {
  auto computed = eval_all(dag, db);
  std::vector<uint64_t> cards;
  cards.reserve(computed.size());
  for (const auto &rows : computed) cards.push_back(rows.size());
  return cards;
}

bool same_bag(std::vector<std::vector<Value>> a, std::vector<std::vector<Value>> b) {
  if (a.size() != b.size()) return false;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

}  // namespace fedql

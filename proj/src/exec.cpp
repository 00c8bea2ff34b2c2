#include "fedql/exec.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "fedql/noise.hpp"

namespace fedql {

// ---------------------------------------------------------------------------
// IoTrace
// ---------------------------------------------------------------------------

void IoTrace::charge(int op_id, const AccessPattern &pattern) {
  if (op_id < 0) throw std::logic_error("io trace: missing operator id");
  if (per_op.size() <= static_cast<size_t>(op_id)) per_op.resize(op_id + 1);
  OpIo &io = per_op[op_id];
  for (const auto &e : pattern.reads) {
    io.reads += e.count;
    io.read_detail.push_back(e);
  }
  for (const auto &e : pattern.writes) {
    io.writes += e.count;
    io.write_detail.push_back(e);
  }
  io.sort_comparisons += pattern.sort_comparisons;
}

double IoTrace::total_ops() const {
  double t = 0;
  for (const auto &io : per_op) t += io.reads + io.writes;
  return t;
}

double IoTrace::op_weighted_cost(int op_id, const CostProfile &profile) const {
  const OpIo &io = per_op.at(op_id);
  double c = 0;
  for (const auto &e : io.read_detail) c += e.count * unit_cost(profile.read_curve, e.array_size);
  for (const auto &e : io.write_detail)
    c += e.count * unit_cost(profile.write_curve, e.array_size);
  return c;
}

double IoTrace::weighted_cost(const CostProfile &profile) const {
  double c = 0;
  for (size_t i = 0; i < per_op.size(); ++i) c += op_weighted_cost(static_cast<int>(i), profile);
  return c;
}

// ---------------------------------------------------------------------------
// Row helpers
// ---------------------------------------------------------------------------

namespace {

bool value_eq(const Value &a, const Value &b) { return a == b; }

int value_cmp(const Value &a, const Value &b) {
  if (a.index() != b.index())
    throw std::invalid_argument("comparing values of different kinds");
  if (const auto *ia = std::get_if<int64_t>(&a)) {
    int64_t ib = std::get<int64_t>(b);
    return *ia < ib ? -1 : (*ia > ib ? 1 : 0);
  }
  const auto &sa = std::get<std::string>(a);
  const auto &sb = std::get<std::string>(b);
  return sa < sb ? -1 : (sa > sb ? 1 : 0);
}

bool apply_cmp(CmpOp op, const Value &lhs, const Value &rhs) {
  switch (op) {
    case CmpOp::Eq: return value_eq(lhs, rhs);
    case CmpOp::Ne: return !value_eq(lhs, rhs);
    case CmpOp::Lt: return value_cmp(lhs, rhs) < 0;
    case CmpOp::Le: return value_cmp(lhs, rhs) <= 0;
    case CmpOp::Gt: return value_cmp(lhs, rhs) > 0;
    case CmpOp::Ge: return value_cmp(lhs, rhs) >= 0;
  }
  return false;
}

std::vector<double> capacities_of(const std::vector<const PaddedTable *> &inputs) {
  std::vector<double> out;
  for (const auto *t : inputs) out.push_back(static_cast<double>(t->capacity));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Operator evaluation
// ---------------------------------------------------------------------------

PaddedTable exec_operator(const OperatorNode &op, const std::vector<const PaddedTable *> &inputs,
                          int op_id, IoTrace &trace) {
  PaddedTable out;
  out.schema = op.output_schema;
  out.io_counter_id = op_id;

  if (op.kind == OpKind::Scan) {
    // Base arrays carry unqualified column names; relabel to the scan alias.
    const PaddedTable &base = *inputs.at(0);
    if (base.schema.arity() != op.output_schema.arity())
      throw std::invalid_argument("scan: base table does not match the catalog schema");
    out.real_rows = base.real_rows;
    out.capacity = base.capacity;
    out.validate();
    return out;
  }

  std::vector<double> caps = capacities_of(inputs);
  std::vector<uint64_t> caps_u;
  for (const auto *t : inputs) caps_u.push_back(t->capacity);
  out.capacity = padded_size(op.kind, caps_u, op.limit_k);
  trace.charge(op_id, operator_access(op.kind, caps, op.limit_k));

  switch (op.kind) {
    case OpKind::Filter: {
      const PaddedTable &in = *inputs[0];
      size_t lhs = in.schema.resolve(op.predicate.column);
      size_t rhs = op.predicate.rhs_column ? in.schema.resolve(*op.predicate.rhs_column) : 0;
      for (const auto &row : in.real_rows) {
        const Value &rv = op.predicate.rhs_column ? row.values[rhs] : *op.predicate.literal;
        if (apply_cmp(op.predicate.cmp, row.values[lhs], rv)) out.real_rows.push_back(row);
      }
      break;
    }
    case OpKind::Project: {
      const PaddedTable &in = *inputs[0];
      std::vector<size_t> idx;
      for (const auto &ref : op.columns) idx.push_back(in.schema.resolve(ref));
      for (const auto &row : in.real_rows) {
        Tuple t;
        for (size_t i : idx) t.values.push_back(row.values[i]);
        out.real_rows.push_back(std::move(t));
      }
      break;
    }
    case OpKind::EquiJoin:
    case OpKind::CrossProduct: {
      const PaddedTable &l = *inputs[0];
      const PaddedTable &r = *inputs[1];
      size_t lk = 0, rk = 0;
      if (op.kind == OpKind::EquiJoin) {
        lk = l.schema.resolve(op.left_key);
        rk = r.schema.resolve(op.right_key);
      }
      for (const auto &lrow : l.real_rows) {
        for (const auto &rrow : r.real_rows) {
          if (op.kind == OpKind::EquiJoin && !value_eq(lrow.values[lk], rrow.values[rk]))
            continue;
          Tuple t;
          t.values = lrow.values;
          t.values.insert(t.values.end(), rrow.values.begin(), rrow.values.end());
          out.real_rows.push_back(std::move(t));
        }
      }
      break;
    }
    case OpKind::Distinct: {
      const PaddedTable &in = *inputs[0];
      std::vector<size_t> idx;
      if (op.columns.empty()) {
        for (size_t i = 0; i < in.schema.arity(); ++i) idx.push_back(i);
      } else {
        for (const auto &ref : op.columns) idx.push_back(in.schema.resolve(ref));
      }
      std::map<std::vector<Value>, bool> seen;
      for (const auto &row : in.real_rows) {
        std::vector<Value> key;
        for (size_t i : idx) key.push_back(row.values[i]);
        if (seen.emplace(key, true).second) {
          Tuple t;
          if (op.columns.empty()) {
            t = row;
          } else {
            t.values = std::move(key);
          }
          out.real_rows.push_back(std::move(t));
        }
      }
      break;
    }
    case OpKind::Sort: {
      const PaddedTable &in = *inputs[0];
      std::vector<size_t> idx;
      for (const auto &ref : op.columns) idx.push_back(in.schema.resolve(ref));
      out.real_rows = in.real_rows;
      std::stable_sort(out.real_rows.begin(), out.real_rows.end(),
                       [&](const Tuple &a, const Tuple &b) {
                         for (size_t i : idx) {
                           int c = value_cmp(a.values[i], b.values[i]);
                           if (c != 0) return op.sort_descending ? c > 0 : c < 0;
                         }
                         return false;
                       });
      break;
    }
    case OpKind::Limit: {
      const PaddedTable &in = *inputs[0];
      for (const auto &row : in.real_rows) {
        if (out.real_rows.size() >= op.limit_k) break;
        out.real_rows.push_back(row);
      }
      break;
    }
    case OpKind::CountAggregate: {
      Tuple t;
      t.values.push_back(static_cast<int64_t>(inputs[0]->true_cardinality()));
      out.real_rows.push_back(std::move(t));
      break;
    }
    case OpKind::GroupByCount: {
      const PaddedTable &in = *inputs[0];
      std::vector<size_t> idx;
      for (const auto &ref : op.columns) idx.push_back(in.schema.resolve(ref));
      std::vector<std::vector<Value>> order;
      std::map<std::vector<Value>, int64_t> counts;
      for (const auto &row : in.real_rows) {
        std::vector<Value> key;
        for (size_t i : idx) key.push_back(row.values[i]);
        auto [it, inserted] = counts.emplace(key, 0);
        if (inserted) order.push_back(key);
        ++it->second;
      }
      for (auto &key : order) {
        Tuple t;
        t.values = key;
        t.values.push_back(counts[key]);
        out.real_rows.push_back(std::move(t));
      }
      break;
    }
    default: throw std::invalid_argument("exec: unsupported operator kind");
  }

  if (out.true_cardinality() > out.capacity)
    throw std::logic_error("exec: output exceeds padded capacity");
  out.validate();
  return out;
}

// ---------------------------------------------------------------------------
// Resize
// ---------------------------------------------------------------------------

PaddedTable resize_with_noise(const PaddedTable &table, uint64_t noise, int op_id, IoTrace &trace,
                              ResizeOutcome &outcome) {
  uint64_t true_c = table.true_cardinality();
  uint64_t target = true_c + noise;
  bool clamped = target > table.capacity;
  uint64_t noisy_c = clamped ? table.capacity : target;

  // Oblivious sort pushing dummies to the end, then a bulk copy of the first
  // noisy_c slots. Real rows are already stored front-first, so only the cost
  // is charged; the observable outcome is identical.
  trace.charge(op_id, sort_access(static_cast<double>(table.capacity)));
  trace.charge(op_id, copy_access(static_cast<double>(table.capacity),
                                  static_cast<double>(noisy_c)));

  PaddedTable out;
  out.schema = table.schema;
  out.real_rows = table.real_rows;
  out.capacity = noisy_c;
  out.io_counter_id = op_id;
  out.validate();

  outcome = ResizeOutcome{op_id, true_c, noise, noisy_c, clamped, noisy_c};
  return out;
}

PaddedTable resize(const PaddedTable &table, double epsilon, double delta, uint64_t sensitivity,
                   RngStream &rng, int op_id, IoTrace &trace, ResizeOutcome &outcome) {
  if (epsilon == 0.0) {
    outcome = ResizeOutcome{op_id, table.true_cardinality(), 0, table.capacity, false,
                            table.capacity};
    return table;  // fully oblivious path, no resize I/O
  }
  if (epsilon < 0) throw std::invalid_argument("resize: negative epsilon");
  if (delta <= 0.0)
    throw std::invalid_argument("resize: truncated Laplace needs delta > 0 when epsilon > 0");
  TruncLaplace dist(epsilon, delta, sensitivity);
  uint64_t noise = dist.sample(rng);
  return resize_with_noise(table, noise, op_id, trace, outcome);
}

// ---------------------------------------------------------------------------
// Whole-DAG execution
// ---------------------------------------------------------------------------

namespace {
constexpr uint64_t kOutputNoiseStream = uint64_t{1} << 40;
}

ExecResult execute_dag(const QueryDag &dag, const std::map<std::string, PaddedTable> &base,
                       const BudgetPlan &plan, OutputPolicy policy, const CostProfile &profile,
                       uint64_t seed) {
  plan.validate(dag);
  if (policy == OutputPolicy::NoisyAnswer) {
    OpKind root = dag.root().kind;
    if (root != OpKind::CountAggregate && root != OpKind::GroupByCount)
      throw std::invalid_argument("noisy output policy needs an aggregate root");
    if (!(plan.epsilon_out > 0.0))
      throw std::invalid_argument("noisy output policy needs a positive epsilon remainder");
  }

  ExecResult res;
  res.trace.per_op.resize(dag.ops.size());
  res.realized_capacity.assign(dag.ops.size(), 0);
  res.true_cardinality.assign(dag.ops.size(), 0);

  std::vector<PaddedTable> outputs(dag.ops.size());
  for (size_t i = 0; i < dag.ops.size(); ++i) {
    const OperatorNode &op = dag.ops[i];
    std::vector<const PaddedTable *> inputs;
    if (op.kind == OpKind::Scan) {
      auto it = base.find(op.table);
      if (it == base.end())
        throw std::invalid_argument("execute: no data for table '" + op.table + "'");
      inputs.push_back(&it->second);
    } else {
      for (int c : op.children) inputs.push_back(&outputs[c]);
    }
    PaddedTable result = exec_operator(op, inputs, static_cast<int>(i), res.trace);
    res.true_cardinality[i] = result.true_cardinality();

    if (plan.epsilon[i] > 0.0) {
      if (op.sensitivity < 1)
        throw std::invalid_argument("execute: sensitivity not propagated before resizing");
      RngStream stream(seed, i);
      ResizeOutcome outcome;
      result = resize(result, plan.epsilon[i], plan.delta[i], op.sensitivity, stream,
                      static_cast<int>(i), res.trace, outcome);
      res.resizes.push_back(outcome);
    }
    res.realized_capacity[i] = result.capacity;
    outputs[i] = std::move(result);
  }

  res.result = std::move(outputs.back());
  if (policy == OutputPolicy::NoisyAnswer) {
    RngStream stream(seed, kOutputNoiseStream + dag.ops.size());
    uint64_t sens = dag.root().sensitivity;
    if (sens < 1) throw std::invalid_argument("execute: root sensitivity not propagated");
    size_t count_col = res.result.schema.arity() - 1;
    for (const auto &row : res.result.real_rows) {
      double value = static_cast<double>(std::get<int64_t>(row.values[count_col]));
      res.noisy_counts.push_back(laplace_output(value, plan.epsilon_out, sens, stream));
    }
  }
  res.io_cost = res.trace.weighted_cost(profile);
  return res;
}

// ---------------------------------------------------------------------------
// m-party decomposition
// ---------------------------------------------------------------------------

std::vector<PairwiseJoinTask> mparty_join_plan(int owners) {
  if (owners < 2) throw std::invalid_argument("m-party decomposition needs at least 2 owners");
  std::vector<PairwiseJoinTask> tasks;
  tasks.reserve(static_cast<size_t>(owners) * owners);
  for (int i = 0; i < owners; ++i)
    for (int j = 0; j < owners; ++j) tasks.push_back(PairwiseJoinTask{i, j});
  return tasks;
}

PaddedTable execute_mparty_join(const OperatorNode &join,
                                const std::vector<Partition> &left_parts,
                                const std::vector<Partition> &right_parts, const Catalog &catalog,
                                IoTrace &trace) {
  (void)catalog;
  if (join.kind != OpKind::EquiJoin && join.kind != OpKind::CrossProduct)
    throw std::invalid_argument("m-party decomposition applies to join operators");
  if (left_parts.size() != right_parts.size())
    throw std::invalid_argument("m-party decomposition: owner counts differ");
  int owners = static_cast<int>(left_parts.size());

  size_t left_arity = left_parts.front().schema.arity();
  auto as_padded = [&](const Partition &p, bool left) {
    PaddedTable t;
    // relabel to the join's qualified child schema
    size_t offset = left ? 0 : left_arity;
    for (size_t i = 0; i < p.schema.arity(); ++i)
      t.schema.columns.push_back(join.output_schema.columns[offset + i]);
    t.real_rows = p.rows;
    t.capacity = p.rows.size();
    t.validate();
    return t;
  };

  PaddedTable unioned;
  unioned.schema = join.output_schema;
  uint64_t capacity = 0;
  for (const PairwiseJoinTask &task : mparty_join_plan(owners)) {
    PaddedTable l = as_padded(left_parts[task.left_owner], true);
    PaddedTable r = as_padded(right_parts[task.right_owner], false);
    PaddedTable piece = exec_operator(join, {&l, &r}, 0, trace);
    capacity += piece.capacity;
    for (auto &row : piece.real_rows) unioned.real_rows.push_back(std::move(row));
  }
  unioned.capacity = capacity;
  unioned.validate();
  return unioned;
}

}  // namespace fedql

#include "fedql/planner.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "fedql/noise.hpp"

namespace fedql {

// ---------------------------------------------------------------------------
// Unit costs and access patterns
// ---------------------------------------------------------------------------

namespace {

// log2 floored at 1 (log2 of 0 and 1 count as 1) so no access is free.
double lg(double n) {
  if (n <= 2.0) return 1.0;
  return std::log2(n);
}

double lg_squared(double n) {
  double l = lg(n);
  return l * l;
}

}  // namespace

CostCurve cost_curve_from_name(const std::string &name) {
  if (name == "constant") return CostCurve::Constant;
  if (name == "log2") return CostCurve::Log2;
  if (name == "linear_log2_squared") return CostCurve::LinearLog2Squared;
  throw std::invalid_argument("unknown cost curve '" + name + "'");
}

std::string cost_curve_name(CostCurve c) {
  switch (c) {
    case CostCurve::Constant: return "constant";
    case CostCurve::Log2: return "log2";
    case CostCurve::LinearLog2Squared: return "linear_log2_squared";
  }
  return "?";
}

double unit_cost(CostCurve curve, double n) {
  switch (curve) {
    case CostCurve::Constant: return 1.0;
    case CostCurve::Log2: return std::max(1.0, lg(n));
    case CostCurve::LinearLog2Squared: return std::max(1.0, n * lg_squared(n));
  }
  return 1.0;
}

double AccessPattern::read_count() const {
  double c = 0;
  for (const auto &e : reads) c += e.count;
  return c;
}

double AccessPattern::write_count() const {
  double c = 0;
  for (const auto &e : writes) c += e.count;
  return c;
}

double AccessPattern::ram_cost(const CostProfile &p) const {
  double c = 0;
  for (const auto &e : reads) c += e.count * unit_cost(p.read_curve, e.array_size);
  for (const auto &e : writes) c += e.count * unit_cost(p.write_curve, e.array_size);
  return c;
}

AccessPattern operator_access(OpKind kind, std::span<const double> n, uint64_t limit_k) {
  AccessPattern a;
  switch (kind) {
    case OpKind::Scan: return a;  // local plaintext ingest, nothing secure yet
    case OpKind::Filter:
    case OpKind::Project:
    case OpKind::Distinct:
    case OpKind::GroupByCount:
      a.reads = {{n[0], n[0]}};
      a.writes = {{n[0], n[0]}};
      return a;
    case OpKind::EquiJoin:
    case OpKind::CrossProduct: {
      double out = n[0] * n[1];
      a.reads = {{n[0], n[0]}, {out, n[1]}};
      a.writes = {{out, out}};
      return a;
    }
    case OpKind::CountAggregate:
      a.reads = {{n[0], n[0]}};
      a.writes = {{1.0, n[0]}};
      return a;
    case OpKind::Sort: {
      double comps = n[0] * lg_squared(n[0]);
      a.reads = {{comps, n[0]}};
      a.writes = {{comps, n[0]}};
      a.sort_comparisons = comps;
      return a;
    }
    case OpKind::Limit: {
      double out = std::min(static_cast<double>(limit_k), n[0]);
      a.reads = {{n[0], n[0]}};
      a.writes = {{out, out}};
      return a;
    }
  }
  throw std::invalid_argument("unknown operator kind");
}

AccessPattern sort_access(double n) {
  AccessPattern a;
  double comps = n * lg_squared(n);
  a.reads = {{comps, n}};
  a.writes = {{comps, n}};
  a.sort_comparisons = comps;
  return a;
}

AccessPattern copy_access(double n_from, double n_to) {
  AccessPattern a;
  a.reads = {{n_to, n_from}};
  a.writes = {{n_to, n_to}};
  return a;
}

namespace {

double circuit_cost(const CostProfile &p, double n_in, double gates, double depth, double n_out) {
  return p.c_in * n_in + p.c_g * gates + p.c_d * depth + p.c_out * n_out;
}

double pattern_cost(const AccessPattern &a, const CostProfile &p, double n_in, double n_out) {
  if (p.mode == CostProfile::Mode::Ram) return a.ram_cost(p);
  double gates = a.read_count() + a.write_count();
  double depth = std::ceil(lg(n_out));
  return circuit_cost(p, n_in, gates, depth, n_out);
}

double product(std::span<const double> v) {
  double r = 1.0;
  for (double x : v) r *= x;
  return r;
}

double sum(std::span<const double> v) {
  double r = 0.0;
  for (double x : v) r += x;
  return r;
}

}  // namespace

double model_operator_cost(OpKind kind, std::span<const double> n, const CostProfile &profile,
                           uint64_t limit_k) {
  if (kind == OpKind::Scan) return 0.0;
  AccessPattern a = operator_access(kind, n, limit_k);
  return pattern_cost(a, profile, sum(n), product(n));
}

// ---------------------------------------------------------------------------
// Budget plans
// ---------------------------------------------------------------------------

Strategy strategy_from_name(const std::string &name) {
  if (name == "baseline") return Strategy::Baseline;
  if (name == "eager") return Strategy::Eager;
  if (name == "uniform") return Strategy::Uniform;
  if (name == "optimal") return Strategy::Optimal;
  if (name == "oracle") return Strategy::Oracle;
  throw std::invalid_argument("unknown strategy '" + name + "'");
}

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Baseline: return "baseline";
    case Strategy::Eager: return "eager";
    case Strategy::Uniform: return "uniform";
    case Strategy::Optimal: return "optimal";
    case Strategy::Oracle: return "oracle";
  }
  return "?";
}

bool resize_eligible(OpKind kind) { return kind != OpKind::Scan; }

size_t count_eligible(const QueryDag &dag) {
  size_t n = 0;
  for (const auto &op : dag.ops) n += resize_eligible(op.kind) ? 1 : 0;
  return n;
}

void BudgetPlan::validate(const QueryDag &dag) const {
  if (epsilon.size() != dag.ops.size() || delta.size() != dag.ops.size())
    throw std::invalid_argument("budget plan does not align with the query");
  double eps_sum = 0, delta_sum = 0;
  for (size_t i = 0; i < epsilon.size(); ++i) {
    if (epsilon[i] < 0 || delta[i] < 0)
      throw std::invalid_argument("budget plan has a negative share");
    if (!resize_eligible(dag.ops[i].kind) && (epsilon[i] > 0 || delta[i] > 0))
      throw std::invalid_argument("budget plan assigns a share to a scan");
    eps_sum += epsilon[i];
    delta_sum += delta[i];
  }
  if (eps_sum > epsilon_perf + 1e-9)
    throw std::invalid_argument("epsilon shares exceed the performance budget");
  if (delta_sum > delta_perf + 1e-15)
    throw std::invalid_argument("delta shares exceed the performance budget");
  if (epsilon_out < 0 || delta_out < 0)
    throw std::invalid_argument("negative output-policy remainder");
}

BudgetPlan plan_baseline(const QueryDag &dag) {
  BudgetPlan p;
  p.epsilon.assign(dag.ops.size(), 0.0);
  p.delta.assign(dag.ops.size(), 0.0);
  p.strategy = Strategy::Baseline;
  return p;
}

BudgetPlan plan_eager(const QueryDag &dag, double epsilon_perf, double delta_perf) {
  size_t eligible = count_eligible(dag);
  if (eligible == 0) throw std::invalid_argument("eager: no resize-eligible operator");
  BudgetPlan p = plan_baseline(dag);
  p.strategy = Strategy::Eager;
  p.epsilon_perf = epsilon_perf;
  p.delta_perf = delta_perf;
  if (epsilon_perf <= 0.0) return p;
  for (size_t i = 0; i < dag.ops.size(); ++i) {
    if (resize_eligible(dag.ops[i].kind)) {
      p.epsilon[i] = epsilon_perf;
      p.delta[i] = delta_perf;
      break;
    }
  }
  return p;
}

BudgetPlan plan_uniform(const QueryDag &dag, double epsilon_perf, double delta_perf) {
  BudgetPlan p = plan_baseline(dag);
  p.strategy = Strategy::Uniform;
  p.epsilon_perf = epsilon_perf;
  p.delta_perf = delta_perf;
  size_t eligible = count_eligible(dag);
  if (eligible == 0) {
    if (epsilon_perf > 0)
      throw std::invalid_argument("uniform: no resize-eligible operator to receive budget");
    return p;
  }
  if (epsilon_perf <= 0.0) return p;
  double eps_each = epsilon_perf / static_cast<double>(eligible);
  double delta_each = delta_perf / static_cast<double>(eligible);
  for (size_t i = 0; i < dag.ops.size(); ++i) {
    if (resize_eligible(dag.ops[i].kind)) {
      p.epsilon[i] = eps_each;
      p.delta[i] = delta_each;
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Cardinality estimation
// ---------------------------------------------------------------------------

namespace {

double distinct_of(const Schema &schema, const std::string &ref) {
  const Column &c = schema.column(ref);
  // Base columns always carry a hint (filled at scan time); derived columns
  // such as group counts fall back to the floor of the default rule.
  return static_cast<double>(c.distinct_hint.value_or(10));
}

}  // namespace

double estimate_cardinality(const OperatorNode &op, const QueryDag &dag,
                            std::span<const double> child, const Catalog &catalog) {
  switch (op.kind) {
    case OpKind::Scan: return static_cast<double>(catalog.table(op.table).size);
    case OpKind::Filter: {
      const Schema &s = dag.ops[op.children[0]].output_schema;
      if (op.predicate.cmp == CmpOp::Eq) {
        double v = distinct_of(s, op.predicate.column);
        if (op.predicate.rhs_column) v = std::max(v, distinct_of(s, *op.predicate.rhs_column));
        return child[0] / v;
      }
      return child[0] / 3.0;
    }
    case OpKind::Project:
    case OpKind::Sort: return child[0];
    case OpKind::EquiJoin: {
      const Schema &ls = dag.ops[op.children[0]].output_schema;
      const Schema &rs = dag.ops[op.children[1]].output_schema;
      double v = std::max(distinct_of(ls, op.left_key), distinct_of(rs, op.right_key));
      return child[0] * child[1] / v;
    }
    case OpKind::CrossProduct: return child[0] * child[1];
    case OpKind::Distinct: {
      const Schema &s = dag.ops[op.children[0]].output_schema;
      double v = 1.0;
      if (op.columns.empty()) {
        for (const auto &c : s.columns) v *= static_cast<double>(c.distinct_hint.value_or(10));
      } else {
        for (const auto &ref : op.columns) v *= distinct_of(s, ref);
      }
      return std::min(child[0], v);
    }
    case OpKind::GroupByCount: {
      const Schema &s = dag.ops[op.children[0]].output_schema;
      double v = 1.0;
      for (const auto &ref : op.columns) v *= distinct_of(s, ref);
      return v;
    }
    case OpKind::CountAggregate: return 1.0;
    case OpKind::Limit: return std::min(static_cast<double>(op.limit_k), child[0]);
  }
  throw std::invalid_argument("unknown operator kind");
}

// ---------------------------------------------------------------------------
// Plan cost
// ---------------------------------------------------------------------------

namespace {

double padded_size_real(OpKind kind, std::span<const double> in, uint64_t limit_k) {
  switch (kind) {
    case OpKind::Scan: throw std::invalid_argument("scan has no padded-size rule");
    case OpKind::Filter:
    case OpKind::Project:
    case OpKind::Distinct:
    case OpKind::Sort:
    case OpKind::GroupByCount: return in[0];
    case OpKind::EquiJoin:
    case OpKind::CrossProduct: return in[0] * in[1];
    case OpKind::CountAggregate: return 1.0;
    case OpKind::Limit: return std::min(static_cast<double>(limit_k), in[0]);
  }
  throw std::invalid_argument("unknown operator kind");
}

std::vector<double> estimate_all(const QueryDag &dag, const Catalog &catalog) {
  std::vector<double> est(dag.ops.size(), 0.0);
  for (size_t i = 0; i < dag.ops.size(); ++i) {
    std::vector<double> child;
    for (int c : dag.ops[i].children) child.push_back(est[c]);
    est[i] = estimate_cardinality(dag.ops[i], dag, child, catalog);
  }
  return est;
}

PlanCost plan_cost_core(const QueryDag &dag, const BudgetPlan &plan, const CostProfile &profile,
                        std::span<const double> est_true) {
  plan.validate(dag);
  PlanCost out;
  size_t l = dag.ops.size();
  out.op_cost.assign(l, 0.0);
  out.resize_cost.assign(l, 0.0);
  out.estimated_true.assign(est_true.begin(), est_true.end());
  out.noisy_size.assign(l, 0.0);
  out.flow_size.assign(l, 0.0);

  for (size_t i = 0; i < l; ++i) {
    const OperatorNode &op = dag.ops[i];
    if (op.kind == OpKind::Scan) {
      out.flow_size[i] = est_true[i];  // base size, public knowledge
      out.noisy_size[i] = est_true[i];
      continue;
    }
    std::vector<double> in;
    for (int c : op.children) in.push_back(out.flow_size[c]);
    out.op_cost[i] = model_operator_cost(op.kind, in, profile, op.limit_k);
    double padded = padded_size_real(op.kind, in, op.limit_k);

    if (plan.epsilon[i] > 0.0) {
      if (op.sensitivity < 1)
        throw std::invalid_argument("plan cost: sensitivity not propagated");
      TruncLaplace noise(plan.epsilon[i], plan.delta[i], op.sensitivity);
      double noisy = std::min(padded, est_true[i] + noise.mean());
      out.noisy_size[i] = noisy;
      out.resize_cost[i] = pattern_cost(sort_access(padded), profile, padded, padded) +
                           pattern_cost(copy_access(padded, noisy), profile, noisy, noisy);
      out.flow_size[i] = noisy;
    } else {
      out.noisy_size[i] = padded;
      out.flow_size[i] = padded;
    }
    out.total += out.op_cost[i] + out.resize_cost[i];
  }
  return out;
}

}  // namespace

PlanCost model_plan_cost(const QueryDag &dag, const BudgetPlan &plan, const CostProfile &profile,
                         const Catalog &catalog) {
  return plan_cost_core(dag, plan, profile, estimate_all(dag, catalog));
}

PlanCost model_plan_cost_with_truth(const QueryDag &dag, const BudgetPlan &plan,
                                    const CostProfile &profile,
                                    std::span<const double> true_cardinalities) {
  if (true_cardinalities.size() != dag.ops.size())
    throw std::invalid_argument("true cardinalities do not align with the query");
  return plan_cost_core(dag, plan, profile, true_cardinalities);
}

// ---------------------------------------------------------------------------
// Optimal search
// ---------------------------------------------------------------------------

namespace {

// Number of lattice points: C(steps + l - 1, l - 1), saturating.
double composition_count(int steps, int vars) {
  double c = 1.0;
  for (int i = 1; i < vars; ++i) c = c * (steps + i) / i;
  return c;
}

constexpr double kMaxLatticePoints = 1.5e6;

// Allocation-free mirror of plan_cost_core for the lattice sweep. The
// arithmetic follows the access-pattern fold order exactly, so a lattice
// point re-evaluated through plan_cost_core gives the same double.
struct FastModel {
  const QueryDag &dag;
  const CostProfile &profile;
  std::span<const double> est_true;
  std::vector<double> flow;  // scratch

  double read(double n) const { return unit_cost(profile.read_curve, n); }
  double write(double n) const { return unit_cost(profile.write_curve, n); }

  double op_cost(const OperatorNode &op, double n0, double n1) const {
    double out;
    double reads, writes, gates_in;
    switch (op.kind) {
      case OpKind::Filter:
      case OpKind::Project:
      case OpKind::Distinct:
      case OpKind::GroupByCount:
        if (profile.mode == CostProfile::Mode::Ram)
          return n0 * read(n0) + n0 * write(n0);
        reads = n0, writes = n0, gates_in = n0, out = n0;
        break;
      case OpKind::EquiJoin:
      case OpKind::CrossProduct:
        out = n0 * n1;
        if (profile.mode == CostProfile::Mode::Ram)
          return n0 * read(n0) + out * read(n1) + out * write(out);
        reads = n0 + out, writes = out, gates_in = n0 + n1;
        break;
      case OpKind::CountAggregate:
        if (profile.mode == CostProfile::Mode::Ram) return n0 * read(n0) + write(n0);
        reads = n0, writes = 1.0, gates_in = n0, out = n0;
        break;
      case OpKind::Sort: {
        double comps = n0 * lg_squared(n0);
        if (profile.mode == CostProfile::Mode::Ram)
          return comps * read(n0) + comps * write(n0);
        reads = comps, writes = comps, gates_in = n0, out = n0;
        break;
      }
      case OpKind::Limit: {
        double k = std::min(static_cast<double>(op.limit_k), n0);
        if (profile.mode == CostProfile::Mode::Ram) return n0 * read(n0) + k * write(k);
        reads = n0, writes = k, gates_in = n0, out = n0;  // n_out is the input product
        break;
      }
      default: throw std::invalid_argument("unknown operator kind");
    }
    return circuit_cost(profile, gates_in, reads + writes, std::ceil(lg(out)), out);
  }

  double resize_cost(double padded, double noisy) const {
    double comps = padded * lg_squared(padded);
    double sort_part, copy_part;
    if (profile.mode == CostProfile::Mode::Ram) {
      sort_part = comps * read(padded) + comps * write(padded);
      copy_part = noisy * read(padded) + noisy * write(noisy);
    } else {
      sort_part = circuit_cost(profile, padded, comps + comps, std::ceil(lg(padded)), padded);
      copy_part = circuit_cost(profile, noisy, noisy + noisy, std::ceil(lg(noisy)), noisy);
    }
    return sort_part + copy_part;
  }

  // noise_mean[i] is E[TLap] for the candidate share at op i, or NaN when the
  // operator keeps epsilon 0.
  double total(std::span<const double> noise_mean) {
    flow.assign(dag.ops.size(), 0.0);
    double total_cost = 0.0;
    for (size_t i = 0; i < dag.ops.size(); ++i) {
      const OperatorNode &op = dag.ops[i];
      if (op.kind == OpKind::Scan) {
        flow[i] = est_true[i];
        continue;
      }
      double n0 = flow[op.children[0]];
      double n1 = op.children.size() > 1 ? flow[op.children[1]] : 0.0;
      total_cost += op_cost(op, n0, n1);
      double padded;
      switch (op.kind) {
        case OpKind::EquiJoin:
        case OpKind::CrossProduct: padded = n0 * n1; break;
        case OpKind::CountAggregate: padded = 1.0; break;
        case OpKind::Limit: padded = std::min(static_cast<double>(op.limit_k), n0); break;
        default: padded = n0; break;
      }
      if (!std::isnan(noise_mean[i])) {
        double noisy = std::min(padded, est_true[i] + noise_mean[i]);
        total_cost += resize_cost(padded, noisy);
        flow[i] = noisy;
      } else {
        flow[i] = padded;
      }
    }
    return total_cost;
  }
};

BudgetPlan search_optimal(const QueryDag &dag, double epsilon_perf, double delta_perf,
                          const CostProfile &profile, std::span<const double> est_true,
                          Strategy tag) {
  std::vector<size_t> eligible;
  for (size_t i = 0; i < dag.ops.size(); ++i)
    if (resize_eligible(dag.ops[i].kind)) eligible.push_back(i);
  if (eligible.empty())
    throw std::invalid_argument("optimal: no resize-eligible operator");

  BudgetPlan uniform = plan_uniform(dag, epsilon_perf, delta_perf);
  uniform.strategy = tag;
  if (epsilon_perf <= 0.0) return uniform;

  int l = static_cast<int>(eligible.size());
  int steps = 20;
  while (steps > 1 && composition_count(steps, l) > kMaxLatticePoints) --steps;
  double eps_step = epsilon_perf / static_cast<double>(steps);
  double delta_each = delta_perf / static_cast<double>(l);

  // E[TLap] depends only on (operator, unit count); precompute the table.
  std::vector<std::vector<double>> noise_table(eligible.size());
  for (size_t j = 0; j < eligible.size(); ++j) {
    noise_table[j].assign(steps + 1, std::numeric_limits<double>::quiet_NaN());
    uint64_t sens = dag.ops[eligible[j]].sensitivity;
    if (sens < 1) throw std::invalid_argument("optimal: sensitivity not propagated");
    for (int u = 1; u <= steps; ++u) {
      try {
        noise_table[j][u] = TruncLaplace(u * eps_step, delta_each, sens).mean();
      } catch (const std::exception &) {
        noise_table[j][u] = std::numeric_limits<double>::infinity();
      }
    }
  }

  FastModel model{dag, profile, est_true, {}};
  std::vector<double> noise_mean(dag.ops.size(),
                                 std::numeric_limits<double>::quiet_NaN());

  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<int> best_units;
  std::vector<int> units(eligible.size(), 0);

  // Enumerate every split of `steps` grid units over the eligible operators,
  // lexicographically, so the search is reproducible.
  std::function<void(size_t, int)> recurse = [&](size_t pos, int remaining) {
    if (pos + 1 == units.size()) {
      units[pos] = remaining;
      for (size_t j = 0; j < eligible.size(); ++j)
        noise_mean[eligible[j]] = noise_table[j][units[j]];
      double cost = model.total(noise_mean);
      if (cost < best_cost) {
        best_cost = cost;
        best_units = units;
      }
      return;
    }
    for (int u = 0; u <= remaining; ++u) {
      units[pos] = u;
      recurse(pos + 1, remaining - u);
    }
  };
  recurse(0, steps);

  BudgetPlan lattice = plan_baseline(dag);
  lattice.strategy = tag;
  lattice.epsilon_perf = epsilon_perf;
  lattice.delta_perf = delta_perf;
  for (size_t j = 0; j < eligible.size(); ++j) {
    lattice.epsilon[eligible[j]] = best_units[j] * eps_step;
    lattice.delta[eligible[j]] = delta_each;
  }

  // Final ranking through the reference objective. The all-zero plan is a
  // candidate because the budget constraint is an inequality: spending
  // nothing wins when no resize amortizes its oblivious sort.
  BudgetPlan eager = plan_eager(dag, epsilon_perf, delta_perf);
  eager.strategy = tag;
  BudgetPlan zero = plan_baseline(dag);
  zero.strategy = tag;
  zero.epsilon_perf = epsilon_perf;
  zero.delta_perf = delta_perf;

  BudgetPlan best = uniform;
  double best_ref = plan_cost_core(dag, uniform, profile, est_true).total;
  for (const BudgetPlan *cand : {&eager, &zero, &lattice}) {
    double cost = plan_cost_core(dag, *cand, profile, est_true).total;
    if (cost < best_ref) {
      best_ref = cost;
      best = *cand;
    }
  }
  return best;
}

}  // namespace

BudgetPlan plan_optimal(const QueryDag &dag, double epsilon_perf, double delta_perf,
                        const CostProfile &profile, const Catalog &catalog) {
  std::vector<double> est = estimate_all(dag, catalog);
  return search_optimal(dag, epsilon_perf, delta_perf, profile, est, Strategy::Optimal);
}

BudgetPlan plan_oracle(const QueryDag &dag, double epsilon_perf, double delta_perf,
                       const CostProfile &profile,
                       std::span<const double> true_cardinalities, bool debug_mode) {
  if (!debug_mode)
    throw std::invalid_argument("oracle planning needs debug mode (uses true cardinalities)");
  if (true_cardinalities.size() != dag.ops.size())
    throw std::invalid_argument("true cardinalities do not align with the query");
  return search_optimal(dag, epsilon_perf, delta_perf, profile, true_cardinalities,
                        Strategy::Oracle);
}

// ---------------------------------------------------------------------------
// Budget ledger
// ---------------------------------------------------------------------------

void BudgetLedger::set_budget(const std::string &table, double epsilon, double delta) {
  if (epsilon < 0 || delta < 0) throw std::invalid_argument("ledger: negative budget");
  std::lock_guard<std::mutex> lock(*mu_);
  remaining_[table] = {epsilon, delta};
}

bool BudgetLedger::has_table(const std::string &table) const {
  std::lock_guard<std::mutex> lock(*mu_);
  return remaining_.count(table) > 0;
}

std::pair<double, double> BudgetLedger::remaining(const std::string &table) const {
  std::lock_guard<std::mutex> lock(*mu_);
  auto it = remaining_.find(table);
  if (it == remaining_.end()) throw std::invalid_argument("ledger: unknown table '" + table + "'");
  return it->second;
}

std::map<std::string, std::pair<double, double>> BudgetLedger::snapshot() const {
  std::lock_guard<std::mutex> lock(*mu_);
  return remaining_;
}

bool BudgetLedger::try_charge(const std::string &query_id, const std::set<std::string> &tables,
                              double epsilon, double delta) {
  if (epsilon < 0 || delta < 0) throw std::invalid_argument("ledger: negative charge");
  std::lock_guard<std::mutex> lock(*mu_);
  for (const auto &t : tables) {
    auto it = remaining_.find(t);
    if (it == remaining_.end())
      throw std::invalid_argument("ledger: no budget registered for table '" + t + "'");
    if (it->second.first < epsilon || it->second.second < delta) return false;
  }
  for (const auto &t : tables) {
    auto &r = remaining_[t];
    r.first -= epsilon;
    r.second -= delta;
    log_.push_back(ChargeRecord{query_id, t, epsilon, delta});
  }
  return true;
}

BudgetLedger BudgetLedger::replay(const std::map<std::string, std::pair<double, double>> &initial,
                                  const std::vector<ChargeRecord> &log) {
  BudgetLedger ledger;
  for (const auto &[table, budget] : initial)
    ledger.set_budget(table, budget.first, budget.second);
  for (const auto &rec : log) {
    if (!ledger.try_charge(rec.query_id, {rec.table}, rec.epsilon, rec.delta))
      throw std::runtime_error("ledger replay: charge log exceeds recorded budgets");
  }
  return ledger;
}

}  // namespace fedql

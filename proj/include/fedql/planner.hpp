#pragma once

#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "fedql/dag.hpp"

namespace fedql {

// ---------------------------------------------------------------------------
// Cost model
// ---------------------------------------------------------------------------

/// Unit-cost curve for one secure-array access. Oblivious stores range from
/// O(log n) to O(n log^2 n) per access depending on the implementation.
enum class CostCurve { Constant, Log2, LinearLog2Squared };

CostCurve cost_curve_from_name(const std::string &name);
std::string cost_curve_name(CostCurve c);

/// Per-access unit cost; log2 of sizes <= 1 counts as 1 so no access is free.
double unit_cost(CostCurve curve, double array_size);

struct CostProfile {
  enum class Mode { Ram, Circuit };
  Mode mode = Mode::Ram;
  // RAM model
  CostCurve read_curve = CostCurve::Log2;
  CostCurve write_curve = CostCurve::Log2;
  // Circuit model coefficients: input encoding, gates, depth, output decoding
  double c_in = 1.0, c_g = 1.0, c_d = 1.0, c_out = 1.0;
};

/// One class of array accesses: `count` touches of an array of `array_size`.
struct AccessEntry {
  double count = 0;
  double array_size = 0;
};

/// Read/write pattern of one operator evaluation. The executor instruments
/// exactly this pattern and the cost model prices exactly this pattern, so
/// modeled and realized I/O agree by construction.
struct AccessPattern {
  std::vector<AccessEntry> reads;
  std::vector<AccessEntry> writes;
  double sort_comparisons = 0;

  double read_count() const;
  double write_count() const;
  double ram_cost(const CostProfile &p) const;
};

/// Access pattern of one operator on the given input sizes:
///   Filter/Project/Distinct/GroupByCount  n reads + n writes
///   Join/Cross       n1 reads of left, n1*n2 reads of right, n1*n2 writes
///   CountAggregate   n reads + 1 write
///   Sort             n log2^2(n) reads and writes
///   Limit            n reads + min(k, n) writes
AccessPattern operator_access(OpKind kind, std::span<const double> input_sizes,
                              uint64_t limit_k = 0);

/// Bitonic-style oblivious sort of an array of size n: n log2^2(n) compare
/// swaps, each a read and a write.
AccessPattern sort_access(double n);

/// Bulk copy of n_to tuples out of an array of size n_from into a fresh array
/// of size n_to.
AccessPattern copy_access(double n_from, double n_to);

/// cost_o(N) for one operator: RAM mode prices the access pattern with the
/// unit-cost curves; circuit mode is c_in*sum(N) + c_g*gates + c_d*depth +
/// c_out*prod(N) with gates = total access count of the RAM pattern and
/// depth = ceil(log2(prod(N))).
double model_operator_cost(OpKind kind, std::span<const double> input_sizes,
                           const CostProfile &profile, uint64_t limit_k = 0);

// ---------------------------------------------------------------------------
// Budget plans
// ---------------------------------------------------------------------------

enum class Strategy { Baseline, Eager, Uniform, Optimal, Oracle };

Strategy strategy_from_name(const std::string &name);
std::string strategy_name(Strategy s);

/// Per-operator (epsilon_i, delta_i) assignment plus the output-policy
/// remainder (epsilon0, delta0).
struct BudgetPlan {
  std::vector<double> epsilon;  // aligned with QueryDag::ops
  std::vector<double> delta;
  double epsilon_perf = 0.0;  // budget spent on intermediate cardinalities
  double delta_perf = 0.0;
  double epsilon_out = 0.0;  // remainder spent on the output mechanism
  double delta_out = 0.0;
  Strategy strategy = Strategy::Baseline;

  void validate(const QueryDag &dag) const;
};

/// Scans are never resized (their sizes are public); everything else is.
bool resize_eligible(OpKind kind);
size_t count_eligible(const QueryDag &dag);

// ---------------------------------------------------------------------------
// Cardinality estimation (Selinger-style naive reduction factors)
// ---------------------------------------------------------------------------

/// Estimated true output size of one operator from its children's estimates:
///   Scan            table size
///   Filter =        child / V(col)          Filter <,<=,...   child / 3
///   EquiJoin        n1*n2 / max(V(lk), V(rk))
///   CrossProduct    n1*n2
///   Distinct        min(child, prod V(keys))
///   GroupByCount    prod V(keys)
///   CountAggregate  1
///   Limit k         min(k, child)
double estimate_cardinality(const OperatorNode &op, const QueryDag &dag,
                            std::span<const double> child_estimates, const Catalog &catalog);

/// Per-operator modeled quantities for one (dag, plan) pair.
struct PlanCost {
  double total = 0.0;
  std::vector<double> op_cost;        // secure evaluation of the operator
  std::vector<double> resize_cost;    // oblivious sort + copy when resized
  std::vector<double> estimated_true; // Selinger estimate of the true size
  std::vector<double> noisy_size;     // estimate + E[TLap], clamped at padded
  std::vector<double> flow_size;      // array size flowing to the parent
};

/// C(P, K): sum over operators of evaluation cost plus, for resized
/// operators, the oblivious sort of the exhaustively padded result and the
/// copy into the noisy-sized array. Downstream input sizes use the noisy
/// estimates. Operators with epsilon 0 contribute no sort/copy and propagate
/// padded sizes.
PlanCost model_plan_cost(const QueryDag &dag, const BudgetPlan &plan, const CostProfile &profile,
                         const Catalog &catalog);

/// Same objective evaluated with externally supplied true cardinalities
/// instead of estimates (the non-private oracle planner uses this).
PlanCost model_plan_cost_with_truth(const QueryDag &dag, const BudgetPlan &plan,
                                    const CostProfile &profile,
                                    std::span<const double> true_cardinalities);

// ---------------------------------------------------------------------------
// Allocation strategies
// ---------------------------------------------------------------------------

BudgetPlan plan_baseline(const QueryDag &dag);

/// Entire performance budget on the first resize-eligible operator.
BudgetPlan plan_eager(const QueryDag &dag, double epsilon_perf, double delta_perf);

/// Budget split evenly over all resize-eligible operators.
BudgetPlan plan_uniform(const QueryDag &dag, double epsilon_perf, double delta_perf);

/// Exhaustive search of the discretized epsilon simplex (default 20 grid
/// steps, coarsened when the lattice would exceed ~1.5M points). The eager,
/// uniform and all-zero plans are always included as candidates, so the
/// result never models worse than any of them. Deltas split uniformly over
/// eligible operators.
BudgetPlan plan_optimal(const QueryDag &dag, double epsilon_perf, double delta_perf,
                        const CostProfile &profile, const Catalog &catalog);

/// plan_optimal with true cardinalities in the objective. Debug only: the
/// resulting plan is tagged non-private.
BudgetPlan plan_oracle(const QueryDag &dag, double epsilon_perf, double delta_perf,
                       const CostProfile &profile,
                       std::span<const double> true_cardinalities, bool debug_mode);

// ---------------------------------------------------------------------------
// Per-table budget ledger (sequential composition)
// ---------------------------------------------------------------------------

struct ChargeRecord {
  std::string query_id;
  std::string table;
  double epsilon = 0.0;
  double delta = 0.0;
};

/// Tracks the remaining (epsilon, delta) of every base table. A query
/// charges its full budget against each table it touches; charging is
/// all-or-nothing so a refusal leaves the ledger untouched.
class BudgetLedger {
 public:
  BudgetLedger() = default;

  void set_budget(const std::string &table, double epsilon, double delta);
  bool has_table(const std::string &table) const;
  std::pair<double, double> remaining(const std::string &table) const;
  std::map<std::string, std::pair<double, double>> snapshot() const;
  const std::vector<ChargeRecord> &log() const { return log_; }

  /// Atomically checks every table and deducts on success. Returns false
  /// (and changes nothing) if any table lacks budget.
  bool try_charge(const std::string &query_id, const std::set<std::string> &tables,
                  double epsilon, double delta);

  /// Rebuilds a ledger from initial budgets plus a charge log.
  static BudgetLedger replay(const std::map<std::string, std::pair<double, double>> &initial,
                             const std::vector<ChargeRecord> &log);

 private:
  std::map<std::string, std::pair<double, double>> remaining_;
  std::vector<ChargeRecord> log_;
  // behind a pointer so the ledger stays movable
  mutable std::unique_ptr<std::mutex> mu_ = std::make_unique<std::mutex>();
};

}  // namespace fedql

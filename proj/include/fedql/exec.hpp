#pragma once

#include <map>
#include <string>
#include <vector>

#include "fedql/dag.hpp"
#include "fedql/noise.hpp"
#include "fedql/planner.hpp"

namespace fedql {

/// Simulated secure-array I/O, one slot per operator. Counters only grow
/// while the execution that owns the trace is running.
struct IoTrace {
  struct OpIo {
    double reads = 0;
    double writes = 0;
    double sort_comparisons = 0;
    std::vector<AccessEntry> read_detail;
    std::vector<AccessEntry> write_detail;
  };
  std::vector<OpIo> per_op;

  void charge(int op_id, const AccessPattern &pattern);
  double total_ops() const;
  /// Realized I/O cost: every recorded access weighted by the profile's
  /// unit-cost curves.
  double weighted_cost(const CostProfile &profile) const;
  double op_weighted_cost(int op_id, const CostProfile &profile) const;
};

struct ResizeOutcome {
  int op_id = -1;
  uint64_t true_c = 0;
  uint64_t noise = 0;
  uint64_t noisy_c = 0;  // min(true_c + noise, capacity)
  bool clamped = false;
  uint64_t new_capacity = 0;  // == noisy_c
};

/// Evaluates one operator over exhaustively padded inputs. Dummy inputs never
/// contribute to real outputs; the output capacity follows the padded-size
/// rule on the input capacities; the access pattern of the cost table is
/// recorded against `op_id`.
PaddedTable exec_operator(const OperatorNode &op, const std::vector<const PaddedTable *> &inputs,
                          int op_id, IoTrace &trace);

/// DP shrink of an intermediate result: draws eta from TLap(epsilon, delta,
/// sensitivity), obliviously sorts dummies to the end (charged at the cost
/// table's sort row), and copies the first min(true_c + max(eta,0), capacity)
/// slots into a fresh array. epsilon == 0 returns the input unchanged with no
/// extra I/O.
PaddedTable resize(const PaddedTable &table, double epsilon, double delta, uint64_t sensitivity,
                   RngStream &rng, int op_id, IoTrace &trace, ResizeOutcome &outcome);

/// resize with an externally chosen noise value (tests force eta with this).
PaddedTable resize_with_noise(const PaddedTable &table, uint64_t noise, int op_id, IoTrace &trace,
                              ResizeOutcome &outcome);

enum class OutputPolicy { TrueAnswer, NoisyAnswer };

struct ExecResult {
  PaddedTable result;                 // final secure array S_l
  std::vector<double> noisy_counts;   // policy-2 outputs, one per result row
  IoTrace trace;
  std::vector<ResizeOutcome> resizes;
  std::vector<uint64_t> realized_capacity;  // per-op flowing capacity after resize
  std::vector<uint64_t> true_cardinality;   // per-op, debug reporting only
  double io_cost = 0;                 // trace weighted by the run's cost profile
};

/// Bottom-up execution of the whole DAG with a resize after every operator
/// holding a nonzero share. Policy 1 returns the real rows of the final
/// array; policy 2 applies the Laplace mechanism to the final count(s) with
/// the remainder budget and needs an aggregate root.
ExecResult execute_dag(const QueryDag &dag, const std::map<std::string, PaddedTable> &base,
                       const BudgetPlan &plan, OutputPolicy policy, const CostProfile &profile,
                       uint64_t seed);

/// Pairwise decomposition of an m-owner join: one task per (left owner,
/// right owner) pair, m^2 in total, whose union equals the direct join on
/// the unioned partitions.
struct PairwiseJoinTask {
  int left_owner = 0;
  int right_owner = 0;
};

std::vector<PairwiseJoinTask> mparty_join_plan(int owners);

/// Executes the pairwise decomposition of `join` over per-owner partitions
/// and unions the task outputs (deterministically, by task index).
PaddedTable execute_mparty_join(const OperatorNode &join,
                                const std::vector<Partition> &left_parts,
                                const std::vector<Partition> &right_parts, const Catalog &catalog,
                                IoTrace &trace);

}  // namespace fedql

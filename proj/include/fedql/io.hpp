#pragma once

#include <json.hpp>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fedql/dag.hpp"
#include "fedql/exec.hpp"
#include "fedql/planner.hpp"
#include "fedql/synth.hpp"

namespace fedql {

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct RunConfig {
  double epsilon = 0.0;
  double delta = 0.0;
  double epsilon_perf = 0.0;  // budget for intermediate cardinalities
  double delta_perf = 0.0;
  Strategy strategy = Strategy::Optimal;
  OutputPolicy policy = OutputPolicy::TrueAnswer;
  CostProfile profile;
  uint64_t seed = 0;
  bool debug = false;
  bool mparty = false;
  std::string ledger_path = "ledger.jsonl";
  // distinct-value overrides: table -> column -> count
  std::map<std::string, std::map<std::string, int64_t>> stats;
  std::pair<double, double> default_budget{1e6, 1.0};
  std::map<std::string, std::pair<double, double>> table_budgets;

  double epsilon_out() const { return epsilon - epsilon_perf; }
  double delta_out() const { return delta - delta_perf; }
  void validate() const;
};

RunConfig parse_config(const nlohmann::json &j);
RunConfig load_config(const std::string &path);

// ---------------------------------------------------------------------------
// Query documents
// ---------------------------------------------------------------------------

/// Parses a {op, params, children} operator document.
PlanNodePtr parse_query(const nlohmann::json &j);
/// Reads {"name": ..., "root": {...}} and validates against the catalog.
QueryDag load_query(const std::string &path, const Catalog &catalog);

// ---------------------------------------------------------------------------
// CSV partitions
// ---------------------------------------------------------------------------

/// Loads every "<table>.owner<k>.csv" (or "<table>.csv") under `dir`. Column
/// kinds are inferred: int64 when every value over all partitions parses as
/// an integer, string otherwise.
std::map<std::string, std::vector<Partition>> load_data_dir(const std::string &dir);

void write_partition_csv(const std::string &path, const Partition &part);
void write_data_dir(const std::string &dir,
                    const std::map<std::string, std::vector<Partition>> &data);

/// Catalog from loaded partitions; distinct-value hints from config stats.
Catalog build_catalog(const std::map<std::string, std::vector<Partition>> &data,
                      const RunConfig &cfg);

/// Base secure arrays, one per table.
std::map<std::string, PaddedTable> assemble_base_tables(
    const std::map<std::string, std::vector<Partition>> &data);

// ---------------------------------------------------------------------------
// Synthetic-data spec documents
// ---------------------------------------------------------------------------

SynthSpec parse_synth_spec(const nlohmann::json &j);
SynthSpec load_synth_spec(const std::string &path);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct RunReportInputs {
  const QueryDag &dag;
  const BudgetPlan &plan;
  const PlanCost &modeled;
  const ExecResult &exec;
  const ExecResult &baseline;
  const RunConfig &config;
  std::vector<ChargeRecord> charges;
  std::map<std::string, std::pair<double, double>> remaining;
};

/// Stable-key-ordered run report. True cardinalities appear only in debug
/// mode; default reports carry padded and noisy sizes only.
nlohmann::ordered_json run_report(const RunReportInputs &in);

// ---------------------------------------------------------------------------
// Ledger persistence (JSON lines, append-only)
// ---------------------------------------------------------------------------

class LedgerStore {
 public:
  explicit LedgerStore(std::string path) : path_(std::move(path)) {}

  /// Loads the ledger, creating the file with a snapshot header when absent.
  /// Tables seen in the data but missing from the file get budget lines
  /// appended from the config.
  BudgetLedger load_or_init(const RunConfig &cfg, const std::set<std::string> &tables);

  /// Appends freshly made charges.
  void append_charges(const std::vector<ChargeRecord> &records);

  const std::string &path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace fedql

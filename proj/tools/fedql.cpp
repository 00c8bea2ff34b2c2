#include <CLI11.hpp>
#include <filesystem>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "fedql/io.hpp"
#include "fedql/oracle.hpp"
#include "fedql/sensitivity.hpp"

namespace {

using namespace fedql;
using nlohmann::ordered_json;

struct LoadedWorkspace {
  RunConfig config;
  std::map<std::string, std::vector<Partition>> data;
  Catalog catalog;
  std::map<std::string, PaddedTable> base;
  PlainDatabase plain;
};

LoadedWorkspace load_workspace(const std::string &config_path, const std::string &data_dir,
                               bool debug_flag) {
  LoadedWorkspace ws;
  ws.config = load_config(config_path);
  if (debug_flag) ws.config.debug = true;
  ws.data = load_data_dir(data_dir);
  ws.catalog = build_catalog(ws.data, ws.config);
  ws.base = assemble_base_tables(ws.data);
  for (const auto &[table, padded] : ws.base) {
    auto &rows = ws.plain[table];
    for (const auto &r : padded.real_rows) rows.push_back(r.values);
  }
  return ws;
}

BudgetPlan make_plan(const RunConfig &cfg, const QueryDag &dag, const Catalog &catalog,
                     const PlainDatabase &plain) {
  BudgetPlan plan;
  switch (cfg.strategy) {
    case Strategy::Baseline: plan = plan_baseline(dag); break;
    case Strategy::Eager: plan = plan_eager(dag, cfg.epsilon_perf, cfg.delta_perf); break;
    case Strategy::Uniform: plan = plan_uniform(dag, cfg.epsilon_perf, cfg.delta_perf); break;
    case Strategy::Optimal:
      plan = plan_optimal(dag, cfg.epsilon_perf, cfg.delta_perf, cfg.profile, catalog);
      break;
    case Strategy::Oracle: {
      auto cards = oracle_cardinalities(dag, plain);
      std::vector<double> truth(cards.begin(), cards.end());
      plan = plan_oracle(dag, cfg.epsilon_perf, cfg.delta_perf, cfg.profile, truth, cfg.debug);
      break;
    }
  }
  plan.epsilon_out = cfg.epsilon_out();
  plan.delta_out = cfg.delta_out();
  return plan;
}

/// Privacy actually spent by the run: the nominal performance budget when any
/// intermediate is resized, plus the output remainder under the noisy policy.
std::pair<double, double> charge_of(const RunConfig &cfg, const BudgetPlan &plan) {
  bool spends = false;
  for (double e : plan.epsilon) spends = spends || e > 0;
  for (double d : plan.delta) spends = spends || d > 0;
  double eps = spends ? cfg.epsilon_perf : 0.0;
  double del = spends ? cfg.delta_perf : 0.0;
  if (cfg.policy == OutputPolicy::NoisyAnswer) {
    eps += cfg.epsilon_out();
    del += cfg.delta_out();
  }
  return {eps, del};
}

void emit(const ordered_json &j, const std::string &out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
    out << j.dump(2) << "\n";
  }
}

int cmd_plan(const std::string &config_path, const std::string &query_path,
             const std::string &data_dir, const std::string &out_path, bool debug) {
  LoadedWorkspace ws = load_workspace(config_path, data_dir, debug);
  QueryDag dag = load_query(query_path, ws.catalog);
  propagate_sensitivity(dag);
  BudgetPlan plan = make_plan(ws.config, dag, ws.catalog, ws.plain);
  PlanCost cost = model_plan_cost(dag, plan, ws.config.profile, ws.catalog);

  std::printf("query %s, strategy %s, epsilon_perf %.6g, delta_perf %.6g\n", dag.name.c_str(),
              strategy_name(plan.strategy).c_str(), ws.config.epsilon_perf,
              ws.config.delta_perf);
  std::printf("%-4s %-12s %-10s %-12s %-12s %-14s %-14s\n", "id", "kind", "eps_i", "delta_i",
              "dc_i", "est_size", "modeled_cost");
  for (size_t i = 0; i < dag.ops.size(); ++i) {
    std::printf("%-4zu %-12s %-10.4g %-12.4g %-12llu %-14.6g %-14.6g\n", i,
                op_kind_name(dag.ops[i].kind).c_str(), plan.epsilon[i], plan.delta[i],
                static_cast<unsigned long long>(dag.ops[i].sensitivity), cost.noisy_size[i],
                cost.op_cost[i] + cost.resize_cost[i]);
  }
  std::printf("total modeled cost %.6g\n", cost.total);

  if (!out_path.empty()) {
    ordered_json j;
    j["query"] = dag.name;
    j["strategy"] = strategy_name(plan.strategy);
    ordered_json ops = ordered_json::array();
    for (size_t i = 0; i < dag.ops.size(); ++i) {
      ops.push_back({{"id", i},
                     {"kind", op_kind_name(dag.ops[i].kind)},
                     {"epsilon_share", plan.epsilon[i]},
                     {"delta_share", plan.delta[i]},
                     {"sensitivity", dag.ops[i].sensitivity},
                     {"estimated_size", cost.noisy_size[i]},
                     {"modeled_cost", cost.op_cost[i] + cost.resize_cost[i]}});
    }
    j["operators"] = std::move(ops);
    j["total_modeled_cost"] = cost.total;
    emit(j, out_path);
  }
  return 0;
}

int cmd_run(const std::string &config_path, const std::string &query_path,
            const std::string &data_dir, const std::string &out_path, bool debug) {
  LoadedWorkspace ws = load_workspace(config_path, data_dir, debug);
  QueryDag dag = load_query(query_path, ws.catalog);
  propagate_sensitivity(dag);
  BudgetPlan plan = make_plan(ws.config, dag, ws.catalog, ws.plain);
  PlanCost modeled = model_plan_cost(dag, plan, ws.config.profile, ws.catalog);

  LedgerStore store(ws.config.ledger_path);
  BudgetLedger ledger = store.load_or_init(ws.config, tables_touched(dag));
  auto [charge_eps, charge_del] = charge_of(ws.config, plan);
  size_t log_before = ledger.log().size();
  if (!ledger.try_charge(dag.name, tables_touched(dag), charge_eps, charge_del)) {
    std::fprintf(stderr,
                 "refused: insufficient privacy budget for query '%s' (charge %.6g, %.6g)\n",
                 dag.name.c_str(), charge_eps, charge_del);
    return 2;
  }
  std::vector<ChargeRecord> new_charges(ledger.log().begin() + log_before, ledger.log().end());
  store.append_charges(new_charges);

  ExecResult exec = execute_dag(dag, ws.base, plan, ws.config.policy, ws.config.profile,
                                ws.config.seed);
  ExecResult baseline = execute_dag(dag, ws.base, plan_baseline(dag), OutputPolicy::TrueAnswer,
                                    ws.config.profile, ws.config.seed);

  RunReportInputs inputs{dag,      plan,        modeled, exec, baseline,
                         ws.config, new_charges, {}};
  for (const auto &t : tables_touched(dag)) inputs.remaining[t] = ledger.remaining(t);
  ordered_json report = run_report(inputs);

  if (ws.config.mparty) {
    // Exercise the pairwise decomposition on every scan-scan join and check
    // it against the direct result.
    ordered_json mparty = ordered_json::array();
    for (const auto &op : dag.ops) {
      if (op.kind != OpKind::EquiJoin && op.kind != OpKind::CrossProduct) continue;
      const OperatorNode &lc = dag.ops[op.children[0]];
      const OperatorNode &rc = dag.ops[op.children[1]];
      if (lc.kind != OpKind::Scan || rc.kind != OpKind::Scan) continue;
      const auto &lparts = ws.data.at(lc.table);
      const auto &rparts = ws.data.at(rc.table);
      if (lparts.size() < 2 || lparts.size() != rparts.size()) continue;
      IoTrace scratch;
      scratch.per_op.resize(1);
      PaddedTable pairwise = execute_mparty_join(op, lparts, rparts, ws.catalog, scratch);
      IoTrace scratch2;
      scratch2.per_op.resize(1);
      PaddedTable l = exec_operator(lc, {&ws.base.at(lc.table)}, 0, scratch2);
      PaddedTable r = exec_operator(rc, {&ws.base.at(rc.table)}, 0, scratch2);
      PaddedTable direct = exec_operator(op, {&l, &r}, 0, scratch2);
      auto rows_of = [](const PaddedTable &t) {
        std::vector<std::vector<Value>> rows;
        for (const auto &x : t.real_rows) rows.push_back(x.values);
        return rows;
      };
      mparty.push_back({{"owners", lparts.size()},
                        {"tasks", lparts.size() * rparts.size()},
                        {"union_matches_direct",
                         same_bag(rows_of(pairwise), rows_of(direct)) &&
                             pairwise.capacity == direct.capacity}});
    }
    report["mparty"] = std::move(mparty);
  }

  emit(report, out_path);
  return 0;
}

int cmd_bench(const std::string &config_path, const std::string &bench_path,
              const std::string &data_dir, const std::string &out_path, bool debug) {
  LoadedWorkspace ws = load_workspace(config_path, data_dir, debug);
  nlohmann::json spec;
  {
    std::ifstream in(bench_path);
    if (!in) throw std::runtime_error("cannot open '" + bench_path + "'");
    in >> spec;
  }
  std::vector<std::string> strategies =
      spec.value("strategies", std::vector<std::string>{"eager", "uniform", "optimal"});

  ordered_json cells = ordered_json::array();
  std::printf("%-24s %-10s %14s %14s %10s\n", "query", "strategy", "io_cost", "baseline",
              "speedup");
  for (const auto &qp : spec.at("queries")) {
    // relative query paths resolve against the bench document
    std::filesystem::path qfile(qp.get<std::string>());
    if (qfile.is_relative())
      qfile = std::filesystem::path(bench_path).parent_path() / qfile;
    std::string qpath = qfile.string();
    QueryDag dag = load_query(qpath, ws.catalog);
    propagate_sensitivity(dag);
    ExecResult baseline = execute_dag(dag, ws.base, plan_baseline(dag), OutputPolicy::TrueAnswer,
                                      ws.config.profile, ws.config.seed);
    double base_cost = baseline.trace.weighted_cost(ws.config.profile);
    for (const auto &sname : strategies) {
      RunConfig cell_cfg = ws.config;
      cell_cfg.strategy = strategy_from_name(sname);
      BudgetPlan plan = make_plan(cell_cfg, dag, ws.catalog, ws.plain);
      ExecResult exec = execute_dag(dag, ws.base, plan, OutputPolicy::TrueAnswer,
                                    cell_cfg.profile, cell_cfg.seed);
      double cost = exec.trace.weighted_cost(cell_cfg.profile);
      double speedup = cost > 0 ? base_cost / cost : 1.0;
      std::printf("%-24s %-10s %14.6g %14.6g %10.3f\n", dag.name.c_str(), sname.c_str(), cost,
                  base_cost, speedup);
      cells.push_back({{"query", dag.name},
                       {"strategy", sname},
                       {"io_ops", exec.trace.total_ops()},
                       {"io_cost", cost},
                       {"baseline_io_ops", baseline.trace.total_ops()},
                       {"baseline_io_cost", base_cost},
                       {"speedup", speedup}});
    }
  }

  ordered_json out;
  out["cells"] = std::move(cells);

  if (spec.contains("join_series")) {
    const auto &js = spec["join_series"];
    uint64_t n = js.value("n", uint64_t{64});
    double sel = js.value("selectivity", 0.1);
    uint64_t mult = js.value("multiplicity", uint64_t{2});
    int max_tables = js.value("max_tables", 3);
    ordered_json series = ordered_json::array();
    for (int k = 1; k <= max_tables; ++k) {
      SynthSpec sspec;
      sspec.seed = ws.config.seed;
      sspec.owners = 2;
      for (int t = 0; t < k; ++t) {
        SynthTable st;
        st.name = "t" + std::to_string(t);
        st.rows = n;
        st.columns.push_back(SynthColumn{"k", ColumnKind::Int64, SynthColumn::Role::Key, 0,
                                         mult, Value{int64_t{0}}, 0.0, 1000});
        if (t == 0)
          st.columns.push_back(SynthColumn{"f", ColumnKind::Int64, SynthColumn::Role::Filter, 0,
                                           1, Value{int64_t{1}}, sel, 1000});
        sspec.tables.push_back(std::move(st));
      }
      auto data = gen_synthetic(sspec);
      Catalog catalog = build_catalog(data, ws.config);
      auto base = assemble_base_tables(data);
      PlanNodePtr node = filter_eq(scan("t0"), "t0.f", int64_t{1});
      for (int t = 1; t < k; ++t)
        node = equi_join(node, scan("t" + std::to_string(t)), "t0.k",
                         "t" + std::to_string(t) + ".k", mult);
      QueryDag dag = build_dag(node, catalog, "chain_" + std::to_string(k));
      propagate_sensitivity(dag);
      ExecResult baseline = execute_dag(dag, base, plan_baseline(dag), OutputPolicy::TrueAnswer,
                                        ws.config.profile, ws.config.seed);
      BudgetPlan plan =
          plan_optimal(dag, ws.config.epsilon_perf, ws.config.delta_perf, ws.config.profile,
                       catalog);
      plan.epsilon_out = ws.config.epsilon_out();
      plan.delta_out = ws.config.delta_out();
      ExecResult exec = execute_dag(dag, base, plan, OutputPolicy::TrueAnswer, ws.config.profile,
                                    ws.config.seed);
      double base_cost = baseline.trace.weighted_cost(ws.config.profile);
      double cost = exec.trace.weighted_cost(ws.config.profile);
      series.push_back({{"tables", k},
                        {"joins", k - 1},
                        {"baseline_root_capacity", baseline.realized_capacity.back()},
                        {"io_cost", cost},
                        {"baseline_io_cost", base_cost},
                        {"speedup", cost > 0 ? base_cost / cost : 1.0}});
      std::printf("%-24s %-10s %14.6g %14.6g %10.3f\n",
                  ("chain_" + std::to_string(k)).c_str(), "optimal", cost, base_cost,
                  cost > 0 ? base_cost / cost : 1.0);
    }
    out["join_series"] = std::move(series);
  }

  if (!out_path.empty()) emit(out, out_path);
  return 0;
}

int cmd_gen(const std::string &spec_path, const std::string &out_dir) {
  SynthSpec spec = load_synth_spec(spec_path);
  auto data = gen_synthetic(spec);
  write_data_dir(out_dir, data);
  size_t files = 0;
  for (const auto &[table, parts] : data) files += parts.size();
  std::printf("wrote %zu partition file(s) for %zu table(s) under %s\n", files, data.size(),
              out_dir.c_str());
  return 0;
}

int cmd_ledger_show(const std::string &config_path) {
  RunConfig cfg = load_config(config_path);
  LedgerStore store(cfg.ledger_path);
  BudgetLedger ledger = store.load_or_init(cfg, {});
  std::printf("%-24s %-14s %-14s\n", "table", "epsilon_left", "delta_left");
  for (const auto &[table, r] : ledger.snapshot())
    std::printf("%-24s %-14.6g %-14.6g\n", table.c_str(), r.first, r.second);
  std::printf("%zu charge(s) on record\n", ledger.log().size());
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"fedql: simulated private data federation with DP-resized intermediates"};
  app.require_subcommand(1);

  std::string config_path, query_path, data_dir, out_path;
  bool debug = false;

  auto add_common = [&](CLI::App *cmd, bool need_query, bool need_data) {
    cmd->add_option("--config", config_path, "run configuration (JSON)")->required();
    if (need_query)
      cmd->add_option("--query", query_path, "query or bench document (JSON)")->required();
    if (need_data)
      cmd->add_option("--data", data_dir, "directory of CSV partitions")->required();
    cmd->add_option("--out", out_path, "output path (default: stdout)");
    cmd->add_flag("--debug", debug, "include true cardinalities in reports");
  };

  CLI::App *plan_cmd = app.add_subcommand("plan", "print the budget plan and modeled costs");
  add_common(plan_cmd, true, true);
  CLI::App *run_cmd = app.add_subcommand("run", "execute a query end to end");
  add_common(run_cmd, true, true);
  CLI::App *bench_cmd = app.add_subcommand("bench", "strategy/query comparison matrix");
  add_common(bench_cmd, true, true);

  CLI::App *gen_cmd = app.add_subcommand("gen", "generate synthetic CSV partitions");
  gen_cmd->add_option("--config", config_path, "generator spec (JSON)")->required();
  gen_cmd->add_option("--out", out_path, "output directory")->required();

  CLI::App *ledger_cmd = app.add_subcommand("ledger", "privacy ledger utilities");
  CLI::App *show_cmd = ledger_cmd->add_subcommand("show", "print remaining budgets");
  show_cmd->add_option("--config", config_path, "run configuration (JSON)")->required();
  ledger_cmd->require_subcommand(1);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(plan_cmd))
      return cmd_plan(config_path, query_path, data_dir, out_path, debug);
    if (app.got_subcommand(run_cmd))
      return cmd_run(config_path, query_path, data_dir, out_path, debug);
    if (app.got_subcommand(bench_cmd))
      return cmd_bench(config_path, query_path, data_dir, out_path, debug);
    if (app.got_subcommand(gen_cmd)) return cmd_gen(config_path, out_path);
    if (app.got_subcommand(ledger_cmd)) return cmd_ledger_show(config_path);
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

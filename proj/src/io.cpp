#include "fedql/io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace fedql {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

void RunConfig::validate() const {
  if (epsilon < 0 || delta < 0) throw std::invalid_argument("config: negative privacy budget");
  if (epsilon_perf < 0 || epsilon_perf > epsilon)
    throw std::invalid_argument("config: epsilon_perf must lie in [0, epsilon]");
  if (delta_perf < 0 || delta_perf > delta)
    throw std::invalid_argument("config: delta_perf must lie in [0, delta]");
  if (policy == OutputPolicy::TrueAnswer &&
      (epsilon_perf != epsilon || delta_perf != delta))
    throw std::invalid_argument(
        "config: true-answer policy spends the whole budget on execution "
        "(epsilon_perf == epsilon, delta_perf == delta)");
  if (policy == OutputPolicy::NoisyAnswer && !(epsilon_out() > 0))
    throw std::invalid_argument("config: noisy policy needs epsilon_perf < epsilon");
}

namespace {

CostProfile parse_profile(const json &j) {
  CostProfile p;
  if (j.is_null()) return p;
  std::string mode = j.value("mode", "ram");
  if (mode == "ram") {
    p.mode = CostProfile::Mode::Ram;
    p.read_curve = cost_curve_from_name(j.value("read", "log2"));
    p.write_curve = cost_curve_from_name(j.value("write", "log2"));
  } else if (mode == "circuit") {
    p.mode = CostProfile::Mode::Circuit;
    p.c_in = j.value("c_in", 1.0);
    p.c_g = j.value("c_g", 1.0);
    p.c_d = j.value("c_d", 1.0);
    p.c_out = j.value("c_out", 1.0);
    if (p.c_in < 0 || p.c_g < 0 || p.c_d < 0 || p.c_out < 0)
      throw std::invalid_argument("config: negative circuit coefficient");
  } else {
    throw std::invalid_argument("config: unknown profile mode '" + mode + "'");
  }
  return p;
}

json read_json_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  json j;
  in >> j;
  return j;
}

}  // namespace

RunConfig parse_config(const json &j) {
  RunConfig cfg;
  cfg.epsilon = j.value("epsilon", 0.0);
  cfg.delta = j.value("delta", 0.0);
  cfg.epsilon_perf = j.value("epsilon_perf", cfg.epsilon);
  cfg.delta_perf = j.value("delta_perf", cfg.delta);
  cfg.strategy = strategy_from_name(j.value("strategy", "optimal"));
  std::string policy = j.value("policy", "true");
  if (policy == "true") {
    cfg.policy = OutputPolicy::TrueAnswer;
  } else if (policy == "noisy") {
    cfg.policy = OutputPolicy::NoisyAnswer;
  } else {
    throw std::invalid_argument("config: unknown policy '" + policy + "'");
  }
  cfg.profile = parse_profile(j.contains("profile") ? j["profile"] : json());
  cfg.seed = j.value("seed", uint64_t{0});
  cfg.debug = j.value("debug", false);
  cfg.mparty = j.value("mparty", false);
  cfg.ledger_path = j.value("ledger", "ledger.jsonl");
  if (j.contains("stats")) {
    for (auto &[table, cols] : j["stats"].items())
      for (auto &[col, v] : cols.items()) cfg.stats[table][col] = v.get<int64_t>();
  }
  if (j.contains("table_budgets")) {
    for (auto &[table, b] : j["table_budgets"].items()) {
      std::pair<double, double> budget{b.value("epsilon", 0.0), b.value("delta", 0.0)};
      if (table == "default") {
        cfg.default_budget = budget;
      } else {
        cfg.table_budgets[table] = budget;
      }
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string &path) { return parse_config(read_json_file(path)); }

// ---------------------------------------------------------------------------
// Query documents
// ---------------------------------------------------------------------------

namespace {

Value parse_literal(const json &j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer() || j.is_number_unsigned()) return j.get<int64_t>();
  throw std::invalid_argument("query: literal must be a string or an integer");
}

CmpOp cmp_from_name(const std::string &name) {
  if (name == "eq" || name == "==") return CmpOp::Eq;
  if (name == "ne" || name == "!=") return CmpOp::Ne;
  if (name == "lt" || name == "<") return CmpOp::Lt;
  if (name == "le" || name == "<=") return CmpOp::Le;
  if (name == "gt" || name == ">") return CmpOp::Gt;
  if (name == "ge" || name == ">=") return CmpOp::Ge;
  throw std::invalid_argument("query: unknown comparison '" + name + "'");
}

}  // namespace

PlanNodePtr parse_query(const json &j) {
  if (!j.is_object() || !j.contains("op"))
    throw std::invalid_argument("query: operator node needs an 'op' field");
  std::string op = j["op"].get<std::string>();
  json params = j.value("params", json::object());
  std::vector<PlanNodePtr> children;
  if (j.contains("children"))
    for (const auto &c : j["children"]) children.push_back(parse_query(c));

  auto need_children = [&](size_t n) {
    if (children.size() != n)
      throw std::invalid_argument("query: '" + op + "' needs " + std::to_string(n) +
                                  " child(ren)");
  };

  if (op == "scan") {
    need_children(0);
    return scan(params.at("table").get<std::string>(), params.value("alias", ""));
  }
  if (op == "filter") {
    need_children(1);
    std::string column = params.at("column").get<std::string>();
    CmpOp cmp = cmp_from_name(params.value("cmp", "eq"));
    if (params.contains("column2"))
      return filter_cols(children[0], column, cmp, params["column2"].get<std::string>());
    return filter_cmp(children[0], column, cmp, parse_literal(params.at("value")));
  }
  if (op == "project") {
    need_children(1);
    return project(children[0], params.at("columns").get<std::vector<std::string>>());
  }
  if (op == "join") {
    need_children(2);
    if (!params.contains("multiplicity"))
      throw std::invalid_argument("query: join needs a declared multiplicity bound");
    return equi_join(children[0], children[1], params.at("left_key").get<std::string>(),
                     params.at("right_key").get<std::string>(),
                     params["multiplicity"].get<uint64_t>());
  }
  if (op == "cross") {
    need_children(2);
    return cross_product(children[0], children[1]);
  }
  if (op == "distinct") {
    need_children(1);
    std::vector<std::string> cols;
    if (params.contains("columns")) cols = params["columns"].get<std::vector<std::string>>();
    return distinct(children[0], cols);
  }
  if (op == "sort") {
    need_children(1);
    return sort_by(children[0], params.at("columns").get<std::vector<std::string>>(),
                   params.value("descending", false));
  }
  if (op == "limit") {
    need_children(1);
    return limit(children[0], params.at("k").get<uint64_t>());
  }
  if (op == "count") {
    need_children(1);
    return count_aggregate(children[0]);
  }
  if (op == "group_count") {
    need_children(1);
    return group_by_count(children[0], params.at("columns").get<std::vector<std::string>>());
  }
  throw std::invalid_argument("query: unsupported operator kind '" + op + "'");
}

QueryDag load_query(const std::string &path, const Catalog &catalog) {
  json j = read_json_file(path);
  PlanNodePtr root = parse_query(j.at("root"));
  return build_dag(root, catalog, j.value("name", fs::path(path).stem().string()));
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string &line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  out.push_back(field);
  return out;
}

bool parse_int(const std::string &s, int64_t &out) {
  if (s.empty()) return false;
  size_t i = s[0] == '-' ? 1 : 0;
  if (i == s.size()) return false;
  for (size_t k = i; k < s.size(); ++k)
    if (!std::isdigit(static_cast<unsigned char>(s[k]))) return false;
  try {
    out = std::stoll(s);
  } catch (const std::exception &) {
    return false;
  }
  return true;
}

struct RawPartition {
  int owner = 0;
  std::vector<std::vector<std::string>> rows;
};

}  // namespace

std::map<std::string, std::vector<Partition>> load_data_dir(const std::string &dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("data directory '" + dir + "' not found");

  struct RawTable {
    std::vector<std::string> header;
    std::vector<RawPartition> parts;
  };
  std::map<std::string, RawTable> raw;

  std::vector<fs::path> files;
  for (const auto &entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".csv") files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  for (const auto &path : files) {
    std::string stem = path.stem().string();  // "<table>.owner<k>" or "<table>"
    std::string table = stem;
    int owner = 1;
    auto pos = stem.rfind(".owner");
    if (pos != std::string::npos) {
      table = stem.substr(0, pos);
      owner = std::stoi(stem.substr(pos + 6));
    }
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line))
      throw std::runtime_error("'" + path.string() + "': missing header row");
    auto header = split_csv_line(line);
    auto &t = raw[table];
    if (t.header.empty()) {
      t.header = header;
    } else if (t.header != header) {
      throw std::runtime_error("'" + path.string() + "': header differs between owners");
    }
    RawPartition part;
    part.owner = owner;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto fields = split_csv_line(line);
      if (fields.size() != header.size())
        throw std::runtime_error("'" + path.string() + "': row arity mismatch");
      part.rows.push_back(std::move(fields));
    }
    t.parts.push_back(std::move(part));
  }

  std::map<std::string, std::vector<Partition>> out;
  for (auto &[table, rawTable] : raw) {
    size_t arity = rawTable.header.size();
    std::vector<ColumnKind> kinds(arity, ColumnKind::Int64);
    for (size_t c = 0; c < arity; ++c) {
      int64_t tmp;
      for (const auto &part : rawTable.parts)
        for (const auto &row : part.rows)
          if (!parse_int(row[c], tmp)) {
            kinds[c] = ColumnKind::String;
            goto next_column;
          }
    next_column:;
    }
    Schema schema;
    for (size_t c = 0; c < arity; ++c)
      schema.columns.push_back(Column{rawTable.header[c], kinds[c], std::nullopt});
    schema.validate();

    for (const auto &part : rawTable.parts) {
      Partition p;
      p.owner_id = part.owner;
      p.table_name = table;
      p.schema = schema;
      for (const auto &row : part.rows) {
        Tuple t;
        for (size_t c = 0; c < arity; ++c) {
          if (kinds[c] == ColumnKind::String) {
            t.values.push_back(row[c]);
          } else {
            int64_t v = 0;
            parse_int(row[c], v);
            t.values.push_back(v);
          }
        }
        p.rows.push_back(std::move(t));
      }
      out[table].push_back(std::move(p));
    }
  }
  return out;
}

void write_partition_csv(const std::string &path, const Partition &part) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  for (size_t c = 0; c < part.schema.arity(); ++c)
    out << (c ? "," : "") << part.schema.columns[c].name;
  out << "\n";
  for (const auto &row : part.rows) {
    for (size_t c = 0; c < row.values.size(); ++c) {
      std::string field = value_to_string(row.values[c]);
      if (field.find_first_of(",\"\n") != std::string::npos)
        throw std::invalid_argument("csv: field needs quoting, which is not supported: " + field);
      out << (c ? "," : "") << field;
    }
    out << "\n";
  }
}

void write_data_dir(const std::string &dir,
                    const std::map<std::string, std::vector<Partition>> &data) {
  fs::create_directories(dir);
  for (const auto &[table, parts] : data)
    for (const auto &p : parts)
      write_partition_csv(dir + "/" + table + ".owner" + std::to_string(p.owner_id) + ".csv", p);
}

Catalog build_catalog(const std::map<std::string, std::vector<Partition>> &data,
                      const RunConfig &cfg) {
  Catalog catalog;
  for (const auto &[table, parts] : data) {
    TableDef def;
    def.name = table;
    def.schema = parts.front().schema;
    for (const auto &p : parts) def.size += p.rows.size();
    auto st = cfg.stats.find(table);
    if (st != cfg.stats.end()) {
      for (auto &col : def.schema.columns) {
        auto v = st->second.find(col.name);
        if (v != st->second.end()) col.distinct_hint = v->second;
      }
    }
    catalog.add(std::move(def));
  }
  return catalog;
}

std::map<std::string, PaddedTable> assemble_base_tables(
    const std::map<std::string, std::vector<Partition>> &data) {
  std::map<std::string, PaddedTable> base;
  for (const auto &[table, parts] : data) base[table] = union_partitions(parts);
  return base;
}

// ---------------------------------------------------------------------------
// Synth specs
// ---------------------------------------------------------------------------

SynthSpec parse_synth_spec(const json &j) {
  SynthSpec spec;
  spec.seed = j.value("seed", uint64_t{0});
  spec.owners = j.value("owners", 2);
  for (const auto &tj : j.at("tables")) {
    SynthTable t;
    t.name = tj.at("name").get<std::string>();
    t.rows = tj.at("rows").get<uint64_t>();
    for (const auto &cj : tj.at("columns")) {
      SynthColumn c;
      c.name = cj.at("name").get<std::string>();
      std::string kind = cj.value("kind", "int");
      c.kind = kind == "string" ? ColumnKind::String : ColumnKind::Int64;
      std::string role = cj.value("role", "payload");
      if (role == "key") {
        c.role = SynthColumn::Role::Key;
        c.distinct = cj.value("distinct", uint64_t{0});
        c.multiplicity = cj.value("multiplicity", uint64_t{1});
      } else if (role == "filter") {
        c.role = SynthColumn::Role::Filter;
        c.selectivity = cj.at("selectivity").get<double>();
        c.match_value = parse_literal(cj.at("match_value"));
      } else if (role == "payload") {
        c.role = SynthColumn::Role::Payload;
        c.payload_max = cj.value("payload_max", int64_t{1000});
      } else {
        throw std::invalid_argument("gen spec: unknown column role '" + role + "'");
      }
      t.columns.push_back(std::move(c));
    }
    spec.tables.push_back(std::move(t));
  }
  return spec;
}

SynthSpec load_synth_spec(const std::string &path) {
  return parse_synth_spec(read_json_file(path));
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

ordered_json run_report(const RunReportInputs &in) {
  const RunConfig &cfg = in.config;
  ordered_json rep;
  rep["query"] = in.dag.name;
  rep["strategy"] = strategy_name(in.plan.strategy);
  rep["policy"] = cfg.policy == OutputPolicy::TrueAnswer ? "true" : "noisy";
  rep["epsilon"] = cfg.epsilon;
  rep["delta"] = cfg.delta;
  rep["epsilon_perf"] = cfg.epsilon_perf;
  rep["delta_perf"] = cfg.delta_perf;
  rep["epsilon_output"] = cfg.epsilon_out();
  rep["delta_output"] = cfg.delta_out();
  rep["seed"] = cfg.seed;
  rep["debug"] = cfg.debug;

  std::map<int, const ResizeOutcome *> resized;
  for (const auto &r : in.exec.resizes) resized[r.op_id] = &r;

  ordered_json ops = ordered_json::array();
  for (size_t i = 0; i < in.dag.ops.size(); ++i) {
    const OperatorNode &op = in.dag.ops[i];
    ordered_json oj;
    oj["id"] = i;
    oj["kind"] = op_kind_name(op.kind);
    if (op.kind == OpKind::Scan) oj["table"] = op.table;
    oj["epsilon_share"] = in.plan.epsilon[i];
    oj["delta_share"] = in.plan.delta[i];
    oj["sensitivity"] = op.sensitivity;
    ordered_json caps_in = ordered_json::array();
    for (int c : op.children) caps_in.push_back(in.exec.realized_capacity[c]);
    oj["capacity_in"] = caps_in;
    oj["capacity_out"] = in.exec.realized_capacity[i];
    if (auto it = resized.find(static_cast<int>(i)); it != resized.end()) {
      oj["noisy_size"] = it->second->noisy_c;
      oj["clamped"] = it->second->clamped;
      // the raw draw eta together with the noisy size reveals the true
      // cardinality, so it is debug-only like true_cardinality itself
      if (cfg.debug) oj["noise"] = it->second->noise;
    }
    if (cfg.debug) oj["true_cardinality"] = in.exec.true_cardinality[i];
    const auto &io = in.exec.trace.per_op[i];
    oj["reads"] = io.reads;
    oj["writes"] = io.writes;
    oj["sort_comparisons"] = io.sort_comparisons;
    oj["io_cost"] = in.exec.trace.op_weighted_cost(static_cast<int>(i), cfg.profile);
    oj["modeled_cost"] = in.modeled.op_cost[i] + in.modeled.resize_cost[i];
    ops.push_back(std::move(oj));
  }
  rep["operators"] = std::move(ops);

  double io_cost = in.exec.trace.weighted_cost(cfg.profile);
  double base_cost = in.baseline.trace.weighted_cost(cfg.profile);
  rep["totals"] = {{"io_ops", in.exec.trace.total_ops()},
                   {"io_cost", io_cost},
                   {"modeled_cost", in.modeled.total}};
  rep["baseline"] = {{"io_ops", in.baseline.trace.total_ops()}, {"io_cost", base_cost}};
  rep["speedup"] = {
      {"io_ops", in.exec.trace.total_ops() > 0
                     ? in.baseline.trace.total_ops() / in.exec.trace.total_ops()
                     : 1.0},
      {"io_cost", io_cost > 0 ? base_cost / io_cost : 1.0}};

  ordered_json output;
  if (cfg.policy == OutputPolicy::NoisyAnswer) {
    uint64_t sens = in.dag.root().sensitivity;
    output["noise_source"] = "simulated joint noise";
    output["noise_scale"] = static_cast<double>(sens) / cfg.epsilon_out();
    if (in.exec.noisy_counts.size() == 1) {
      output["noisy_count"] = in.exec.noisy_counts[0];
      output["noisy_count_rounded"] =
          static_cast<int64_t>(std::llround(in.exec.noisy_counts[0]));
    } else {
      output["noisy_counts"] = in.exec.noisy_counts;
    }
  } else {
    ordered_json rows = ordered_json::array();
    for (const auto &row : in.exec.result.real_rows) {
      ordered_json r = ordered_json::array();
      for (const auto &v : row.values) {
        if (const auto *s = std::get_if<std::string>(&v)) {
          r.push_back(*s);
        } else {
          r.push_back(std::get<int64_t>(v));
        }
      }
      rows.push_back(std::move(r));
    }
    ordered_json cols = ordered_json::array();
    for (const auto &c : in.exec.result.schema.columns) cols.push_back(c.name);
    output["columns"] = std::move(cols);
    output["rows"] = std::move(rows);
  }
  rep["output"] = std::move(output);

  ordered_json charges = ordered_json::array();
  for (const auto &c : in.charges)
    charges.push_back({{"table", c.table}, {"epsilon", c.epsilon}, {"delta", c.delta}});
  ordered_json remaining;
  for (const auto &[table, r] : in.remaining)
    remaining[table] = {{"epsilon", r.first}, {"delta", r.second}};
  rep["ledger"] = {{"charges", std::move(charges)}, {"remaining", std::move(remaining)}};
  return rep;
}

// ---------------------------------------------------------------------------
// Ledger store
// ---------------------------------------------------------------------------

BudgetLedger LedgerStore::load_or_init(const RunConfig &cfg,
                                       const std::set<std::string> &tables) {
  auto budget_for = [&](const std::string &table) {
    auto it = cfg.table_budgets.find(table);
    return it != cfg.table_budgets.end() ? it->second : cfg.default_budget;
  };

  BudgetLedger ledger;
  std::set<std::string> known;
  if (fs::exists(path_)) {
    std::ifstream in(path_);
    if (!in) throw std::runtime_error("cannot open ledger '" + path_ + "'");
    // Budget and charge lines replay strictly in file order.
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line);
      std::string type = j.at("type").get<std::string>();
      if (type == "snapshot") {
        for (auto &[table, b] : j.at("budgets").items()) {
          ledger.set_budget(table, b.at("epsilon").get<double>(), b.at("delta").get<double>());
          known.insert(table);
        }
      } else if (type == "budget") {
        std::string table = j.at("table").get<std::string>();
        ledger.set_budget(table, j.at("epsilon").get<double>(), j.at("delta").get<double>());
        known.insert(table);
      } else if (type == "charge") {
        if (!ledger.try_charge(j.at("query").get<std::string>(),
                               {j.at("table").get<std::string>()},
                               j.at("epsilon").get<double>(), j.at("delta").get<double>()))
          throw std::runtime_error("ledger '" + path_ + "': recorded charge exceeds budget");
      } else {
        throw std::runtime_error("ledger '" + path_ + "': unknown record type '" + type + "'");
      }
    }
  } else {
    ordered_json budgets;
    for (const auto &t : tables) {
      auto b = budget_for(t);
      ledger.set_budget(t, b.first, b.second);
      known.insert(t);
      budgets[t] = {{"epsilon", b.first}, {"delta", b.second}};
    }
    ordered_json snapshot = {{"type", "snapshot"}, {"budgets", std::move(budgets)}};
    std::ofstream out(path_);
    if (!out) throw std::runtime_error("cannot create ledger '" + path_ + "'");
    out << snapshot.dump() << "\n";
    return ledger;
  }

  // Register tables that joined the federation after the snapshot.
  std::ofstream out(path_, std::ios::app);
  for (const auto &t : tables) {
    if (known.count(t)) continue;
    auto b = budget_for(t);
    ledger.set_budget(t, b.first, b.second);
    ordered_json line = {
        {"type", "budget"}, {"table", t}, {"epsilon", b.first}, {"delta", b.second}};
    out << line.dump() << "\n";
  }
  return ledger;
}

void LedgerStore::append_charges(const std::vector<ChargeRecord> &records) {
  std::ofstream out(path_, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to ledger '" + path_ + "'");
  for (const auto &c : records) {
    ordered_json line = {{"type", "charge"},
                         {"query", c.query_id},
                         {"table", c.table},
                         {"epsilon", c.epsilon},
                         {"delta", c.delta}};
    out << line.dump() << "\n";
  }
}

}  // namespace fedql

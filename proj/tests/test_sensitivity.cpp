#include <doctest.h>

#include <algorithm>

#include "fedql/oracle.hpp"
#include "fedql/sensitivity.hpp"

using namespace fedql;

namespace {

Catalog three_table_catalog(uint64_t n = 50) {
  Catalog c;
  c.add(TableDef{"diagnosis",
                 Schema{{Column{"pid", ColumnKind::Int64, {}},
                         Column{"code", ColumnKind::Int64, {}},
                         Column{"diag", ColumnKind::String, {}}}},
                 n});
  c.add(TableDef{"medication",
                 Schema{{Column{"pid", ColumnKind::Int64, {}},
                         Column{"code", ColumnKind::Int64, {}},
                         Column{"med", ColumnKind::String, {}}}},
                 n});
  c.add(TableDef{"demographics", Schema{{Column{"pid", ColumnKind::Int64, {}}}}, n});
  return c;
}

QueryDag running_example(uint64_t m, const Catalog &c) {
  auto d = filter_eq(scan("diagnosis", "d"), "d.diag", std::string("hd"));
  auto md = filter_eq(scan("medication", "m"), "m.med", std::string("aspirin"));
  auto j1 = equi_join(d, md, "d.code", "m.code", m);
  auto j2 = equi_join(j1, scan("demographics", "de"), "m.pid", "de.pid", m);
  QueryDag dag = build_dag(distinct(j2, {"m.pid"}), c);
  propagate_sensitivity(dag);
  return dag;
}

}  // namespace

TEST_CASE("unary operators are 1-stable, joins use the declared multiplicity") {
  Catalog c = three_table_catalog();
  QueryDag dag = running_example(4, c);
  for (const auto &op : dag.ops) {
    switch (op.kind) {
      case OpKind::Filter:
      case OpKind::Distinct: CHECK(operator_stability(op, dag) == 1); break;
      case OpKind::EquiJoin: CHECK(operator_stability(op, dag) == 4); break;
      default: break;
    }
  }
}

TEST_CASE("join without a declared multiplicity is rejected") {
  Catalog c = three_table_catalog();
  QueryDag dag = running_example(4, c);
  OperatorNode join = dag.ops[4];
  join.multiplicity.reset();
  CHECK_THROWS(operator_stability(join, dag));
}

TEST_CASE("cross product stability is the opposite input capacity") {
  Catalog c = three_table_catalog(50);
  QueryDag dag = build_dag(cross_product(scan("diagnosis"), scan("demographics")), c);
  propagate_sensitivity(dag);
  CHECK(operator_stability(dag.root(), dag) == 50);
  CHECK(dag.root().sensitivity == 50);
}

TEST_CASE("running example reproduces the 1, 1, m, m^2, m^2 pattern") {
  Catalog c = three_table_catalog();
  for (uint64_t m : {uint64_t{1}, uint64_t{2}, uint64_t{3}}) {
    QueryDag dag = running_example(m, c);
    // order: scan, filter, scan, filter, join1, scan, join2, distinct
    CHECK(dag.ops[1].sensitivity == 1);
    CHECK(dag.ops[3].sensitivity == 1);
    CHECK(dag.ops[4].sensitivity == m);
    CHECK(dag.ops[6].sensitivity == m * m);
    CHECK(dag.ops[7].sensitivity == m * m);
  }
}

TEST_CASE("chain of three joins doubles sensitivity at each step") {
  Catalog c;
  for (int t = 0; t < 4; ++t)
    c.add(TableDef{"t" + std::to_string(t),
                   Schema{{Column{"k", ColumnKind::Int64, {}}}}, 10});
  auto node = scan("t0");
  for (int t = 1; t < 4; ++t)
    node = equi_join(node, scan("t" + std::to_string(t)), "t0.k",
                     "t" + std::to_string(t) + ".k", 2);
  QueryDag dag = build_dag(node, c);
  propagate_sensitivity(dag);
  std::vector<uint64_t> joins;
  for (const auto &op : dag.ops)
    if (op.kind == OpKind::EquiJoin) joins.push_back(op.sensitivity);
  CHECK(joins == std::vector<uint64_t>{2, 4, 8});
}

TEST_CASE("single-table aggregate keeps sensitivity one") {
  Catalog c = three_table_catalog();
  QueryDag dag = build_dag(count_aggregate(scan("diagnosis")), c);
  propagate_sensitivity(dag);
  for (const auto &op : dag.ops) CHECK(op.sensitivity == 1);
}

TEST_CASE("sensitivity is monotone in the declared multiplicity") {
  Catalog c = three_table_catalog();
  QueryDag a = running_example(2, c);
  QueryDag b = running_example(3, c);
  for (size_t i = 0; i < a.size(); ++i) CHECK(b.ops[i].sensitivity >= a.ops[i].sensitivity);
}

TEST_CASE("sibling order does not change sensitivities") {
  Catalog c = three_table_catalog();
  auto build = [&](bool swapped) {
    auto d = filter_eq(scan("diagnosis", "d"), "d.diag", std::string("hd"));
    auto m = filter_eq(scan("medication", "m"), "m.med", std::string("aspirin"));
    auto j1 = swapped ? equi_join(m, d, "m.code", "d.code", 3)
                      : equi_join(d, m, "d.code", "m.code", 3);
    QueryDag dag = build_dag(distinct(j1, {"m.pid"}), c);
    propagate_sensitivity(dag);
    return dag;
  };
  QueryDag a = build(false), b = build(true);
  CHECK(a.root().sensitivity == b.root().sensitivity);
  CHECK(a.ops[4].sensitivity == b.ops[4].sensitivity);
}

TEST_CASE("overflow guard trips on absurd multiplicities") {
  Catalog c = three_table_catalog();
  auto d = scan("diagnosis", "d");
  auto m = scan("medication", "m");
  auto j1 = equi_join(d, m, "d.code", "m.code", uint64_t{1} << 40);
  auto j2 = equi_join(j1, scan("demographics", "de"), "m.pid", "de.pid", uint64_t{1} << 40);
  QueryDag dag = build_dag(j2, c);
  CHECK_THROWS(propagate_sensitivity(dag));
}

// Brute-force neighboring-database oracle on tiny instances: removing or
// adding one row anywhere must never change any operator's cardinality by
// more than its computed sensitivity.
TEST_CASE("neighboring databases respect the propagated bounds") {
  Catalog c = three_table_catalog(8);
  const uint64_t m = 2;
  QueryDag dag = running_example(m, c);

  PlainDatabase db;
  // keys chosen so every join key appears at most m=2 times per table
  db["diagnosis"] = {{int64_t{1}, int64_t{10}, std::string("hd")},
                     {int64_t{2}, int64_t{10}, std::string("hd")},
                     {int64_t{3}, int64_t{11}, std::string("flu")},
                     {int64_t{4}, int64_t{12}, std::string("hd")}};
  db["medication"] = {{int64_t{1}, int64_t{10}, std::string("aspirin")},
                      {int64_t{2}, int64_t{11}, std::string("aspirin")},
                      {int64_t{3}, int64_t{12}, std::string("statin")},
                      {int64_t{4}, int64_t{12}, std::string("aspirin")}};
  db["demographics"] = {{int64_t{1}}, {int64_t{2}}, {int64_t{3}}, {int64_t{4}}};

  auto base = oracle_cardinalities(dag, db);

  auto check_neighbor = [&](const PlainDatabase &neighbor) {
    auto cards = oracle_cardinalities(dag, neighbor);
    for (size_t i = 0; i < dag.size(); ++i) {
      int64_t diff = static_cast<int64_t>(cards[i]) - static_cast<int64_t>(base[i]);
      CHECK(static_cast<uint64_t>(std::abs(diff)) <= dag.ops[i].sensitivity);
    }
  };

  // removals: every row of every table
  for (const auto &[table, rows] : db) {
    for (size_t r = 0; r < rows.size(); ++r) {
      PlainDatabase neighbor = db;
      neighbor[table].erase(neighbor[table].begin() + r);
      check_neighbor(neighbor);
    }
  }
  // additions respecting the declared multiplicity: fresh keys only
  {
    PlainDatabase neighbor = db;
    neighbor["diagnosis"].push_back({int64_t{9}, int64_t{13}, std::string("hd")});
    check_neighbor(neighbor);
    neighbor = db;
    neighbor["medication"].push_back({int64_t{9}, int64_t{13}, std::string("aspirin")});
    check_neighbor(neighbor);
    neighbor = db;
    neighbor["demographics"].push_back({int64_t{9}});
    check_neighbor(neighbor);
  }
}

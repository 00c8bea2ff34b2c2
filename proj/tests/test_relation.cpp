#include <doctest.h>

#include "fedql/dag.hpp"
#include "fedql/relation.hpp"

using namespace fedql;

namespace {

Partition make_partition(int owner, const std::string &table, const Schema &schema,
                         std::vector<std::vector<Value>> rows) {
  Partition p;
  p.owner_id = owner;
  p.table_name = table;
  p.schema = schema;
  for (auto &r : rows) p.rows.push_back(Tuple{std::move(r), false});
  return p;
}

Schema two_col_schema() {
  return Schema{{Column{"pid", ColumnKind::Int64, std::nullopt},
                 Column{"diag", ColumnKind::String, std::nullopt}}};
}

Catalog running_example_catalog() {
  Catalog c;
  c.add(TableDef{"diagnosis",
                 Schema{{Column{"pid", ColumnKind::Int64, {}},
                         Column{"code", ColumnKind::Int64, {}},
                         Column{"diag", ColumnKind::String, {}}}},
                 100});
  c.add(TableDef{"medication",
                 Schema{{Column{"pid", ColumnKind::Int64, {}},
                         Column{"code", ColumnKind::Int64, {}},
                         Column{"med", ColumnKind::String, {}}}},
                 100});
  c.add(TableDef{"demographics",
                 Schema{{Column{"pid", ColumnKind::Int64, {}}}}, 100});
  return c;
}

PlanNodePtr running_example_plan(uint64_t m = 2) {
  auto d = filter_eq(scan("diagnosis", "d"), "d.diag", std::string("hd"));
  auto md = filter_eq(scan("medication", "m"), "m.med", std::string("aspirin"));
  auto j1 = equi_join(d, md, "d.code", "m.code", m);
  auto j2 = equi_join(j1, scan("demographics", "de"), "m.pid", "de.pid", m);
  return distinct(j2, {"m.pid"});
}

}  // namespace

TEST_CASE("schema rejects duplicates and bad hints") {
  CHECK_THROWS(Schema{{Column{"a", ColumnKind::Int64, {}}, Column{"a", ColumnKind::Int64, {}}}});
  CHECK_THROWS(Schema{{Column{"", ColumnKind::Int64, {}}}});
  CHECK_THROWS(Schema{{Column{"a", ColumnKind::Int64, 0}}});
  CHECK_NOTHROW(Schema{{Column{"a", ColumnKind::Int64, 1}}});
}

TEST_CASE("dates share the integer representation") {
  // epoch-day dates need no calendar logic anywhere in the engine
  CHECK(value_matches_kind(Value{int64_t{19000}}, ColumnKind::Date));
  CHECK_FALSE(value_matches_kind(Value{std::string("2022-01-01")}, ColumnKind::Date));
  CHECK(std::get<int64_t>(dummy_value(ColumnKind::Date)) == 0);
}

TEST_CASE("schema resolution handles qualified and base names") {
  Schema s{{Column{"d.pid", ColumnKind::Int64, {}}, Column{"m.pid", ColumnKind::Int64, {}},
            Column{"m.med", ColumnKind::String, {}}}};
  CHECK(s.resolve("d.pid") == 0);
  CHECK(s.resolve("m.pid") == 1);
  CHECK(s.resolve("med") == 2);
  CHECK_THROWS(s.resolve("pid"));      // ambiguous
  CHECK_THROWS(s.resolve("missing"));  // unknown
}

TEST_CASE("union_partitions concatenates owners") {
  Schema s = two_col_schema();
  auto p1 = make_partition(1, "diagnosis", s,
                           {{int64_t{1}, std::string("hd")},
                            {int64_t{2}, std::string("flu")},
                            {int64_t{3}, std::string("hd")}});
  auto p2 = make_partition(2, "diagnosis", s,
                           {{int64_t{4}, std::string("hd")},
                            {int64_t{5}, std::string("flu")},
                            {int64_t{6}, std::string("hd")},
                            {int64_t{7}, std::string("flu")},
                            {int64_t{8}, std::string("hd")}});
  PaddedTable t = union_partitions({p1, p2});
  CHECK(t.capacity == 8);
  CHECK(t.true_cardinality() == 8);
  CHECK(t.materialize().size() == 8);

  // order-insensitive up to multiset equality
  PaddedTable t2 = union_partitions({p2, p1});
  auto key = [](const PaddedTable &x) {
    std::vector<std::vector<Value>> rows;
    for (const auto &r : x.real_rows) rows.push_back(r.values);
    std::sort(rows.begin(), rows.end());
    return rows;
  };
  CHECK(key(t) == key(t2));
}

TEST_CASE("union_partitions edge cases") {
  Schema s = two_col_schema();
  auto empty = make_partition(1, "diagnosis", s, {});
  PaddedTable t = union_partitions({empty});
  CHECK(t.capacity == 0);
  CHECK(t.true_cardinality() == 0);

  Schema other{{Column{"pid", ColumnKind::Int64, {}}}};
  auto bad = make_partition(2, "diagnosis", other, {});
  CHECK_THROWS(union_partitions({empty, bad}));

  auto dup = make_partition(1, "diagnosis", s, {});
  CHECK_THROWS(union_partitions({empty, dup}));
}

TEST_CASE("padded table invariants") {
  PaddedTable t;
  t.schema = two_col_schema();
  t.capacity = 4;
  t.real_rows.push_back(Tuple{{int64_t{1}, std::string("hd")}, false});
  CHECK_NOTHROW(t.validate());

  auto rows = t.materialize();
  CHECK(rows.size() == 4);
  CHECK_FALSE(rows[0].dummy);
  for (size_t i = 1; i < 4; ++i) {
    CHECK(rows[i].dummy);
    CHECK(std::get<int64_t>(rows[i].values[0]) == 0);
    CHECK(std::get<std::string>(rows[i].values[1]).empty());
  }

  t.capacity = 0;  // fewer slots than real rows
  CHECK_THROWS(t.validate());
}

TEST_CASE("build_dag single chain") {
  Catalog c = running_example_catalog();
  QueryDag dag = build_dag(filter_eq(scan("diagnosis"), "diag", std::string("hd")), c);
  REQUIRE(dag.size() == 2);
  CHECK(dag.ops[0].kind == OpKind::Scan);
  CHECK(dag.ops[1].kind == OpKind::Filter);
  CHECK(dag.ops[1].children == std::vector<int>{0});
}

TEST_CASE("build_dag running example is a valid bottom-up tree") {
  Catalog c = running_example_catalog();
  QueryDag dag = build_dag(running_example_plan(), c);
  // three scans, two filters, two joins, one distinct
  REQUIRE(dag.size() == 8);
  CHECK(dag.root().kind == OpKind::Distinct);
  for (size_t i = 0; i < dag.size(); ++i)
    for (int child : dag.ops[i].children) CHECK(child < static_cast<int>(i));
  CHECK(tables_touched(dag) ==
        std::set<std::string>{"diagnosis", "medication", "demographics"});
  // shares and sensitivities start unset
  for (const auto &op : dag.ops) {
    CHECK(op.epsilon_share == 0.0);
    CHECK(op.sensitivity == 0);
  }
}

TEST_CASE("build_dag rejects a node shared by two parents") {
  Catalog c = running_example_catalog();
  auto shared = filter_eq(scan("diagnosis"), "diag", std::string("hd"));
  auto join = equi_join(shared, shared, "diagnosis.code", "diagnosis.code", 1);
  CHECK_THROWS_WITH_AS(build_dag(join, c), doctest::Contains("two parents"),
                       std::invalid_argument);
}

TEST_CASE("build_dag validates tables, columns and literals") {
  Catalog c = running_example_catalog();
  CHECK_THROWS(build_dag(scan("nonexistent"), c));
  CHECK_THROWS(build_dag(filter_eq(scan("diagnosis"), "bogus", int64_t{1}), c));
  // literal kind must match the column
  CHECK_THROWS(build_dag(filter_eq(scan("diagnosis"), "diag", int64_t{1}), c));
  CHECK_THROWS(build_dag(limit(scan("diagnosis"), 0), c));
  // self-join without distinct aliases collides on column names
  CHECK_THROWS(
      build_dag(equi_join(scan("diagnosis"), scan("diagnosis"), "pid", "pid", 1), c));
  CHECK_NOTHROW(build_dag(
      equi_join(scan("diagnosis", "a"), scan("diagnosis", "b"), "a.pid", "b.pid", 1), c));
}

TEST_CASE("tables_touched deduplicates self-joins") {
  Catalog c = running_example_catalog();
  QueryDag dag = build_dag(
      equi_join(scan("diagnosis", "a"), scan("diagnosis", "b"), "a.pid", "b.pid", 1), c);
  CHECK(tables_touched(dag) == std::set<std::string>{"diagnosis"});
}

TEST_CASE("padded size rules") {
  CHECK(padded_size(OpKind::Filter, {7}) == 7);
  CHECK(padded_size(OpKind::EquiJoin, {4, 4}) == 16);
  CHECK(padded_size(OpKind::CrossProduct, {3, 5}) == 15);
  CHECK(padded_size(OpKind::CountAggregate, {9}) == 1);
  CHECK(padded_size(OpKind::Limit, {9}, 4) == 4);
  CHECK(padded_size(OpKind::Limit, {2}, 4) == 2);
  CHECK(padded_size(OpKind::GroupByCount, {9}) == 9);
  CHECK_THROWS(padded_size(OpKind::EquiJoin, {uint64_t{1} << 40, uint64_t{1} << 40}));
}

TEST_CASE("exhaustive capacities propagate through the running example") {
  Catalog c = running_example_catalog();
  QueryDag dag = build_dag(running_example_plan(), c);
  for (size_t i = 0; i < 4; ++i) CHECK(dag.ops[i].padded_capacity == 100);  // scans, filters
  CHECK(dag.ops[4].padded_capacity == 10000);    // join1: n^2
  CHECK(dag.ops[6].padded_capacity == 1000000);  // join2: n^3
  CHECK(dag.root().padded_capacity == 1000000);  // distinct keeps n^3
}

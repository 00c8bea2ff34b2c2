#pragma once

#include <map>
#include <string>
#include <vector>

#include "fedql/dag.hpp"

namespace fedql {

/// Plain row set keyed by table name, no padding and no dummies.
using PlainDatabase = std::map<std::string, std::vector<std::vector<Value>>>;

/// Straightforward non-private evaluation of the query, bag semantics.
/// Ground-truth reference the padded engine is checked against; kept fully
/// independent of the oblivious execution path.
std::vector<std::vector<Value>> oracle_eval(const QueryDag &dag, const PlainDatabase &db);

/// True output cardinality of every operator in the DAG (bottom-up order).
std::vector<uint64_t> oracle_cardinalities(const QueryDag &dag, const PlainDatabase &db);

/// Multiset equality of row bags, order-insensitive.
bool same_bag(std::vector<std::vector<Value>> a, std::vector<std::vector<Value>> b);

}  // namespace fedql

#pragma once

#include "fedql/dag.hpp"

namespace fedql {

/// Stability bound s of one operator: how many output rows can change per
/// changed input row. Unary operators are 1-stable; equi-joins are bounded by
/// the declared join-key multiplicity; cross products by the opposite input's
/// capacity bound.
uint64_t operator_stability(const OperatorNode &op, const QueryDag &dag);

/// Fills every operator's cardinality-query sensitivity bottom-up:
///   leaf 1, unary s * child, binary s * max(children).
/// Throws if a propagated value exceeds the 2^62 overflow guard.
void propagate_sensitivity(QueryDag &dag);

}  // namespace fedql

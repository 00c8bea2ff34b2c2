#include "fedql/sensitivity.hpp"

#include <algorithm>
#include <stdexcept>

namespace fedql {

namespace {
constexpr uint64_t kSensitivityGuard = uint64_t{1} << 62;

uint64_t checked_mul(uint64_t a, uint64_t b) {
  if (a != 0 && b > kSensitivityGuard / a)
    throw std::overflow_error("sensitivity exceeds overflow guard (unusable analysis)");
  return a * b;
}
}  // namespace

uint64_t operator_stability(const OperatorNode &op, const QueryDag &dag) {
  switch (op.kind) {
    case OpKind::Scan:
    case OpKind::Filter:
    case OpKind::Project:
    case OpKind::Distinct:
    case OpKind::Sort:
    case OpKind::Limit:
    case OpKind::CountAggregate:
    case OpKind::GroupByCount: return 1;
    case OpKind::EquiJoin:
      if (!op.multiplicity || *op.multiplicity < 1)
        throw std::invalid_argument("equi-join needs a declared multiplicity bound");
      return *op.multiplicity;
    case OpKind::CrossProduct: {
      // One changed row on either side creates up to |other side| new rows.
      uint64_t left = dag.ops[op.children[0]].padded_capacity;
      uint64_t right = dag.ops[op.children[1]].padded_capacity;
      return std::max<uint64_t>(1, std::max(left, right));
    }
  }
  throw std::invalid_argument("unknown operator kind");
}

void propagate_sensitivity(QueryDag &dag) {
  for (auto &op : dag.ops) {
    uint64_t s = operator_stability(op, dag);
    if (op.children.empty()) {
      op.sensitivity = 1;
      continue;
    }
    uint64_t child_max = 0;
    for (int c : op.children) child_max = std::max(child_max, dag.ops[c].sensitivity);
    op.sensitivity = checked_mul(s, child_max);
  }
}

}  // namespace fedql

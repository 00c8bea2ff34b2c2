#pragma once

#include <map>
#include <string>
#include <vector>

#include "fedql/relation.hpp"

namespace fedql {

/// Column recipe for generated data.
///
/// Key columns cycle through 1..distinct so every value repeats at most
/// `multiplicity` times (exactly that often when rows divide evenly). Filter
/// columns give `match_value` to exactly llround(rows * selectivity) rows.
/// Payload columns carry seeded pseudo-random values.
struct SynthColumn {
  enum class Role { Key, Filter, Payload };
  std::string name;
  ColumnKind kind = ColumnKind::Int64;
  Role role = Role::Payload;
  uint64_t distinct = 0;      // key role; 0 derives ceil(rows / multiplicity)
  uint64_t multiplicity = 1;  // key role: max repetitions per value
  Value match_value;          // filter role
  double selectivity = 0.0;   // filter role
  int64_t payload_max = 1000; // payload role
};

struct SynthTable {
  std::string name;
  uint64_t rows = 0;
  std::vector<SynthColumn> columns;
};

struct SynthSpec {
  uint64_t seed = 0;
  int owners = 2;
  std::vector<SynthTable> tables;
};

/// Deterministically generates per-owner partitions for every table in the
/// spec. Throws on infeasible key specs (multiplicity * distinct < rows).
std::map<std::string, std::vector<Partition>> gen_synthetic(const SynthSpec &spec);

}  // namespace fedql

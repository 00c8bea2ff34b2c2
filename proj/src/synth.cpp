#include "fedql/synth.hpp"

#include <cmath>
#include <stdexcept>

namespace fedql {

namespace {

uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t column_hash(uint64_t seed, const std::string &table, size_t col, uint64_t row) {
  uint64_t h = seed;
  for (char c : table) h = mix64(h ^ static_cast<uint64_t>(static_cast<unsigned char>(c)));
  return mix64(h ^ (col * 0x100000001b3ULL) ^ row);
}

Value make_value(const SynthColumn &col, const SynthTable &table, uint64_t row, uint64_t seed,
                 size_t col_index, uint64_t match_rows) {
  switch (col.role) {
    case SynthColumn::Role::Key: {
      uint64_t distinct = col.distinct;
      if (distinct == 0)
        distinct = (table.rows + col.multiplicity - 1) / std::max<uint64_t>(1, col.multiplicity);
      if (distinct == 0) distinct = 1;
      int64_t key = static_cast<int64_t>(row % distinct) + 1;
      if (col.kind == ColumnKind::String) return "k" + std::to_string(key);
      return key;
    }
    case SynthColumn::Role::Filter: {
      if (row < match_rows) return col.match_value;
      uint64_t alt = row % 7;
      if (col.kind == ColumnKind::String)
        return "other_" + std::to_string(alt);
      // any integer distinct from the match value
      int64_t base = std::get<int64_t>(col.match_value);
      return base + 1 + static_cast<int64_t>(alt);
    }
    case SynthColumn::Role::Payload: {
      uint64_t h = column_hash(seed, table.name, col_index, row);
      int64_t v = static_cast<int64_t>(h % static_cast<uint64_t>(std::max<int64_t>(1, col.payload_max)));
      if (col.kind == ColumnKind::String) return "v" + std::to_string(v);
      return v;
    }
  }
  throw std::logic_error("unknown synth column role");
}

}  // namespace

std::map<std::string, std::vector<Partition>> gen_synthetic(const SynthSpec &spec) {
  if (spec.owners < 1) throw std::invalid_argument("gen: owners must be >= 1");
  std::map<std::string, std::vector<Partition>> out;

  for (const auto &table : spec.tables) {
    Schema schema;
    for (const auto &col : table.columns) {
      Column c;
      c.name = col.name;
      c.kind = col.kind;
      if (col.role == SynthColumn::Role::Key) {
        uint64_t distinct = col.distinct;
        if (distinct == 0)
          distinct = (table.rows + col.multiplicity - 1) / std::max<uint64_t>(1, col.multiplicity);
        if (col.multiplicity >= 1 && distinct * col.multiplicity < table.rows)
          throw std::invalid_argument("gen: infeasible key spec for '" + table.name + "." +
                                      col.name + "' (multiplicity * distinct < rows)");
        c.distinct_hint = static_cast<int64_t>(std::max<uint64_t>(1, distinct));
      }
      if (col.role == SynthColumn::Role::Filter && !value_matches_kind(col.match_value, col.kind))
        throw std::invalid_argument("gen: filter match value kind mismatch for '" + col.name +
                                    "'");
      schema.columns.push_back(std::move(c));
    }
    schema.validate();

    std::vector<Partition> parts(static_cast<size_t>(spec.owners));
    for (int o = 0; o < spec.owners; ++o) {
      parts[o].owner_id = o + 1;
      parts[o].table_name = table.name;
      parts[o].schema = schema;
    }

    for (size_t ci = 0; ci < table.columns.size(); ++ci) {
      const auto &col = table.columns[ci];
      if (col.role == SynthColumn::Role::Filter && (col.selectivity < 0 || col.selectivity > 1))
        throw std::invalid_argument("gen: selectivity outside [0, 1]");
    }

    for (uint64_t row = 0; row < table.rows; ++row) {
      Tuple t;
      for (size_t ci = 0; ci < table.columns.size(); ++ci) {
        const auto &col = table.columns[ci];
        uint64_t match_rows = 0;
        if (col.role == SynthColumn::Role::Filter)
          match_rows = static_cast<uint64_t>(
              std::llround(static_cast<double>(table.rows) * col.selectivity));
        t.values.push_back(make_value(col, table, row, spec.seed, ci, match_rows));
      }
      parts[row % spec.owners].rows.push_back(std::move(t));
    }
    out[table.name] = std::move(parts);
  }
  return out;
}

}  // namespace fedql

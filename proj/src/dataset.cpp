#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "exspn/dataset.hpp"
#include "exspn/error.hpp"

namespace exspn {

DatasetTable::DatasetTable(VariableSchema schema, RowMatrix values, std::vector<long> row_ids)
    : schema_(std::move(schema)), values_(std::move(values)), row_ids_(std::move(row_ids)) {
  if (values_.rows() < 1) throw InputError("dataset: table has no rows");
  if (static_cast<std::size_t>(values_.cols()) != schema_.size())
    throw InputError("dataset: table has " + std::to_string(values_.cols()) + " columns, schema has " +
                     std::to_string(schema_.size()));
  if (!row_ids_.empty() && row_ids_.size() != rows()) throw InputError("dataset: row id count mismatch");
  for (std::size_t j = 0; j < cols(); ++j) {
    const auto& c = schema_[j];
    for (std::size_t i = 0; i < rows(); ++i) {
      const double v = values_(i, j);
      if (!std::isfinite(v))
        throw InputError("dataset: non-finite value at row " + std::to_string(i + 1) + ", column '" + c.name + "'");
      if (c.discrete() && (v != std::floor(v) || v < 0 || v >= c.cardinality))
        throw InputError("dataset: invalid code at row " + std::to_string(i + 1) + ", column '" + c.name + "'");
    }
  }
}

DatasetTable DatasetTable::select_rows(std::span<const std::size_t> rows) const {
  RowMatrix out(static_cast<Eigen::Index>(rows.size()), values_.cols());
  std::vector<long> ids;
  ids.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = values_.row(static_cast<Eigen::Index>(rows[i]));
    ids.push_back(row_ids_.empty() ? static_cast<long>(rows[i]) : row_ids_[rows[i]]);
  }
  DatasetTable t(schema_, std::move(out), std::move(ids));
  t.set_target(target_);
  return t;
}

SplitPair split_train_test(const DatasetTable& table, double fraction, std::optional<std::string> stratify,
                           std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw InputError("split: fraction must lie in (0, 1)");
  const std::size_t n = table.rows();
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> train, test;

  auto take = [&](std::vector<std::size_t> idx, std::size_t n_train) {
    std::shuffle(idx.begin(), idx.end(), rng);
    train.insert(train.end(), idx.begin(), idx.begin() + static_cast<long>(n_train));
    test.insert(test.end(), idx.begin() + static_cast<long>(n_train), idx.end());
  };

  const auto total_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (!stratify) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    take(std::move(all), total_train);
  } else {
    const auto col = table.schema().index_of(*stratify);
    if (!col) throw InputError("split: unknown stratify column '" + *stratify + "'");
    const auto& column = table.schema()[*col];
    if (!column.discrete()) throw InputError("split: stratify column '" + *stratify + "' is not discrete");
    std::vector<std::vector<std::size_t>> groups(column.cardinality);
    for (std::size_t i = 0; i < n; ++i) groups[static_cast<std::size_t>(table.at(i, *col))].push_back(i);

    // Largest-remainder allocation keeps the total at round(fraction * n)
    // and every class within one row of its proportional share.
    std::vector<std::size_t> alloc(groups.size(), 0);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < groups.size(); ++c) {
      if (groups[c].empty()) continue;
      if (groups[c].size() < 2)
        throw InputError("split: class '" + table.schema().category_label(*col, static_cast<int>(c)) +
                         "' of column '" + *stratify + "' has fewer than 2 rows");
      const double share = fraction * static_cast<double>(groups[c].size());
      alloc[c] = static_cast<std::size_t>(std::floor(share));
      assigned += alloc[c];
      remainders.emplace_back(share - std::floor(share), c);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < total_train && k < remainders.size(); ++k, ++assigned)
      ++alloc[remainders[k].second];
    for (std::size_t c = 0; c < groups.size(); ++c)
      if (!groups[c].empty()) take(std::move(groups[c]), alloc[c]);
  }

  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  if (train.empty() || test.empty()) throw InputError("split: table too small for the requested fraction");
  SplitPair out{table.select_rows(train), table.select_rows(test), std::move(train), std::move(test),
                fraction, std::move(stratify), seed};
  return out;
}

}  // namespace exspn

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "exspn/dataset.hpp"

namespace exspn {

enum class Binning { kEqualFrequency, kEqualWidth };

// How a discretized continuous column becomes items: one item per bin, or a
// single item "code != 0" (the ordinal code read as a boolean flag).
enum class BinEncoding { kOneHot, kOrdinalNonzero };

struct AprioriConfig {
  double min_support = 0.5;
  double min_confidence = 0.7;
  int n_bins = 5;
  Binning binning = Binning::kEqualWidth;
  BinEncoding encoding = BinEncoding::kOrdinalNonzero;

  void check() const;
};

struct Item {
  int column = 0;
  int code = 0;  // category code or bin index; for kOrdinalNonzero the item is "code != 0"
  bool nonzero = false;
  std::string name;
};

// Row-major boolean transactions over a fixed item vocabulary; each item
// keeps a bitset of the rows that contain it.
class Transactions {
 public:
  Transactions(std::vector<Item> items, std::size_t n_rows);

  const std::vector<Item>& items() const { return items_; }
  std::size_t rows() const { return n_rows_; }
  void set(std::size_t row, std::size_t item);
  bool has(std::size_t row, std::size_t item) const;
  // Rows containing every item of `itemset`.
  std::size_t count(const std::vector<int>& itemset) const;
  double support(const std::vector<int>& itemset) const;

  static Transactions from_rows(const std::vector<std::vector<bool>>& rows, std::vector<std::string> names = {});

 private:
  std::vector<Item> items_;
  std::size_t n_rows_;
  std::size_t words_;
  std::vector<std::vector<std::uint64_t>> bits_;  // per item
};

// Bin edges fitted on one table and applied to others with the same schema.
class Binarizer {
 public:
  Binarizer(const DatasetTable& fit_table, const AprioriConfig& config);

  const std::vector<Item>& items() const { return items_; }
  // Interior edges of a continuous column; a value v falls in bin
  // #{edges e : v > e} (equal width) or #{edges e : v >= e} (equal frequency).
  const std::vector<double>& edges(std::size_t column) const { return edges_[column]; }
  int bin(std::size_t column, double value) const;

  Transactions transform(const DatasetTable& table) const;

 private:
  VariableSchema schema_;
  Binning binning_;
  BinEncoding encoding_;
  std::vector<std::vector<double>> edges_;
  std::vector<Item> items_;
  std::vector<std::vector<int>> item_of_;  // column -> code -> item index, -1 when absent
};

Transactions binarize(const DatasetTable& table, const AprioriConfig& config);

using Itemset = std::vector<int>;  // sorted item indices

// Every itemset with support >= min_support (level-wise, with subset pruning),
// keyed in lexicographic order.
std::map<Itemset, double> apriori(const Transactions& t, double min_support);

struct AssocRule {
  Itemset antecedent;
  Itemset consequent;
  double support = 0.0;
  double confidence = 0.0;
};

// Rules A -> C for every frequent itemset split into non-empty disjoint A, C
// with confidence >= min_confidence, ordered by (antecedent, consequent).
std::vector<AssocRule> generate_rules(const std::map<Itemset, double>& itemsets, double min_confidence);

// Confidence of `rule` on `t`; 0 when no row contains the antecedent.
double test_confidence(const AssocRule& rule, const Transactions& t);

struct RuleStats {
  std::size_t nr = 0;
  double mean_antecedent = 0.0;
  double mean_consequent = 0.0;
  double mean_test_confidence = 0.0;  // averaged over rules
};

RuleStats rule_stats(const std::vector<AssocRule>& rules, const Transactions& test);

std::string render_itemset(const Transactions& t, const Itemset& s);

}  // namespace exspn

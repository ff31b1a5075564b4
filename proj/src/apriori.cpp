#include <algorithm>
#include <bit>
#include <cmath>
#include <set>
#include <tuple>

#include "exspn/apriori.hpp"
#include "exspn/error.hpp"

namespace exspn {

namespace {

constexpr double kEps = 1e-12;

bool frequent(std::size_t count, std::size_t n, double min_support) {
  return static_cast<double>(count) / static_cast<double>(n) >= min_support - kEps;
}

}  // namespace

void AprioriConfig::check() const {
  if (!(min_support > 0.0 && min_support <= 1.0)) throw InputError("min_support must lie in (0, 1]");
  if (!(min_confidence > 0.0 && min_confidence <= 1.0)) throw InputError("min_confidence must lie in (0, 1]");
  if (n_bins < 1) throw InputError("n_bins must be >= 1");
}

Transactions::Transactions(std::vector<Item> items, std::size_t n_rows)
    : items_(std::move(items)),
      n_rows_(n_rows),
      words_((n_rows + 63) / 64),
      bits_(items_.size(), std::vector<std::uint64_t>(words_, 0)) {}

void Transactions::set(std::size_t row, std::size_t item) { bits_[item][row / 64] |= std::uint64_t{1} << (row % 64); }

bool Transactions::has(std::size_t row, std::size_t item) const {
  return (bits_[item][row / 64] >> (row % 64)) & 1u;
}

std::size_t Transactions::count(const std::vector<int>& itemset) const {
  if (itemset.empty()) return n_rows_;
  std::size_t total = 0;
  for (std::size_t w = 0; w < words_; ++w) {
    std::uint64_t acc = ~std::uint64_t{0};
    for (int i : itemset) acc &= bits_[static_cast<std::size_t>(i)][w];
    total += static_cast<std::size_t>(std::popcount(acc));
  }
  return total;
}

double Transactions::support(const std::vector<int>& itemset) const {
  return n_rows_ ? static_cast<double>(count(itemset)) / static_cast<double>(n_rows_) : 0.0;
}

Transactions Transactions::from_rows(const std::vector<std::vector<bool>>& rows, std::vector<std::string> names) {
  const std::size_t m = rows.empty() ? names.size() : rows.front().size();
  std::vector<Item> items(m);
  for (std::size_t j = 0; j < m; ++j) {
    items[j].column = static_cast<int>(j);
    items[j].name = j < names.size() ? names[j] : "i" + std::to_string(j);
  }
  Transactions t(std::move(items), rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m) throw InputError("transactions: ragged rows");
    for (std::size_t j = 0; j < m; ++j)
      if (rows[r][j]) t.set(r, j);
  }
  return t;
}

Binarizer::Binarizer(const DatasetTable& fit_table, const AprioriConfig& config)
    : schema_(fit_table.schema()), binning_(config.binning), encoding_(config.encoding) {
  config.check();
  edges_.resize(schema_.size());
  item_of_.resize(schema_.size());
  for (std::size_t j = 0; j < schema_.size(); ++j) {
    const auto& col = schema_[j];
    if (col.discrete()) {
      for (int c = 0; c < col.cardinality; ++c) {
        item_of_[j].push_back(static_cast<int>(items_.size()));
        items_.push_back(Item{static_cast<int>(j), c, false, col.name + "=" + schema_.category_label(static_cast<int>(j), c)});
      }
      continue;
    }
    std::vector<double> v(fit_table.rows());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = fit_table.at(i, j);
    std::sort(v.begin(), v.end());
    auto& e = edges_[j];
    const int b = config.n_bins;
    if (binning_ == Binning::kEqualWidth) {
      const double lo = v.front(), hi = v.back();
      if (hi > lo)
        for (int k = 1; k < b; ++k) e.push_back(lo + (hi - lo) * k / b);
    } else {
      const std::size_t n = v.size();
      for (int k = 1; k < b; ++k) {
        const double edge = v[std::min(n - 1, static_cast<std::size_t>(k) * n / static_cast<std::size_t>(b))];
        if (edge > v.front() && (e.empty() || edge > e.back())) e.push_back(edge);
      }
    }
    const int n_bins = static_cast<int>(e.size()) + 1;
    if (encoding_ == BinEncoding::kOneHot) {
      for (int k = 0; k < n_bins; ++k) {
        item_of_[j].push_back(static_cast<int>(items_.size()));
        items_.push_back(Item{static_cast<int>(j), k, false, col.name + "=bin" + std::to_string(k)});
      }
    } else if (n_bins > 1) {
      item_of_[j].push_back(static_cast<int>(items_.size()));
      items_.push_back(Item{static_cast<int>(j), 0, true, col.name + "!=bin0"});
    }
  }
}

int Binarizer::bin(std::size_t column, double value) const {
  const auto& e = edges_[column];
  if (binning_ == Binning::kEqualWidth)
    return static_cast<int>(std::lower_bound(e.begin(), e.end(), value) - e.begin());
  return static_cast<int>(std::upper_bound(e.begin(), e.end(), value) - e.begin());
}

Transactions Binarizer::transform(const DatasetTable& table) const {
  if (!(table.schema() == schema_)) throw InputError("binarize: table schema differs from the fitted schema");
  Transactions t(items_, table.rows());
  for (std::size_t i = 0; i < table.rows(); ++i) {
    for (std::size_t j = 0; j < schema_.size(); ++j) {
      const double v = table.at(i, j);
      if (schema_[j].discrete()) {
        t.set(i, static_cast<std::size_t>(item_of_[j][static_cast<std::size_t>(v)]));
      } else if (encoding_ == BinEncoding::kOneHot) {
        t.set(i, static_cast<std::size_t>(item_of_[j][static_cast<std::size_t>(bin(j, v))]));
      } else if (!item_of_[j].empty() && bin(j, v) != 0) {
        t.set(i, static_cast<std::size_t>(item_of_[j].front()));
      }
    }
  }
  return t;
}

Transactions binarize(const DatasetTable& table, const AprioriConfig& config) {
  return Binarizer(table, config).transform(table);
}

std::map<Itemset, double> apriori(const Transactions& t, double min_support) {
  if (!(min_support > 0.0 && min_support <= 1.0)) throw InputError("apriori: min_support must lie in (0, 1]");
  std::map<Itemset, double> out;
  if (t.rows() == 0) return out;
  std::vector<Itemset> level;
  for (std::size_t i = 0; i < t.items().size(); ++i) {
    Itemset s{static_cast<int>(i)};
    const auto c = t.count(s);
    if (frequent(c, t.rows(), min_support)) {
      out[s] = static_cast<double>(c) / static_cast<double>(t.rows());
      level.push_back(std::move(s));
    }
  }
  while (level.size() > 1) {
    const std::set<Itemset> prev(level.begin(), level.end());
    std::vector<Itemset> next;
    for (std::size_t a = 0; a < level.size(); ++a) {
      for (std::size_t b = a + 1; b < level.size(); ++b) {
        if (!std::equal(level[a].begin(), level[a].end() - 1, level[b].begin())) break;
        Itemset cand = level[a];
        cand.push_back(level[b].back());
        bool pruned = false;
        for (std::size_t drop = 0; drop + 2 < cand.size() && !pruned; ++drop) {
          Itemset sub;
          for (std::size_t k = 0; k < cand.size(); ++k)
            if (k != drop) sub.push_back(cand[k]);
          pruned = !prev.count(sub);
        }
        if (pruned) continue;
        const auto c = t.count(cand);
        if (frequent(c, t.rows(), min_support)) {
          out[cand] = static_cast<double>(c) / static_cast<double>(t.rows());
          next.push_back(std::move(cand));
        }
      }
    }
    level = std::move(next);
  }
  return out;
}

std::vector<AssocRule> generate_rules(const std::map<Itemset, double>& itemsets, double min_confidence) {
  std::vector<AssocRule> rules;
  for (const auto& [items, supp] : itemsets) {
    const std::size_t m = items.size();
    if (m < 2 || m > 30) continue;
    for (std::uint32_t mask = 1; mask + 1 < (1u << m); ++mask) {
      AssocRule r;
      for (std::size_t k = 0; k < m; ++k) ((mask >> k) & 1u ? r.antecedent : r.consequent).push_back(items[k]);
      const auto it = itemsets.find(r.antecedent);
      if (it == itemsets.end() || it->second <= 0) continue;
      r.support = supp;
      r.confidence = supp / it->second;
      if (r.confidence >= min_confidence - kEps) rules.push_back(std::move(r));
    }
  }
  std::sort(rules.begin(), rules.end(), [](const AssocRule& a, const AssocRule& b) {
    return std::tie(a.antecedent, a.consequent) < std::tie(b.antecedent, b.consequent);
  });
  return rules;
}

double test_confidence(const AssocRule& rule, const Transactions& t) {
  const auto a = t.count(rule.antecedent);
  if (a == 0) return 0.0;
  Itemset all = rule.antecedent;
  all.insert(all.end(), rule.consequent.begin(), rule.consequent.end());
  std::sort(all.begin(), all.end());
  return static_cast<double>(t.count(all)) / static_cast<double>(a);
}

RuleStats rule_stats(const std::vector<AssocRule>& rules, const Transactions& test) {
  RuleStats s;
  s.nr = rules.size();
  if (rules.empty()) return s;
  for (const auto& r : rules) {
    s.mean_antecedent += static_cast<double>(r.antecedent.size());
    s.mean_consequent += static_cast<double>(r.consequent.size());
    s.mean_test_confidence += test_confidence(r, test);
  }
  const double n = static_cast<double>(rules.size());
  s.mean_antecedent /= n;
  s.mean_consequent /= n;
  s.mean_test_confidence /= n;
  return s;
}

std::string render_itemset(const Transactions& t, const Itemset& s) {
  std::string out;
  for (int i : s) out += (out.empty() ? "" : " & ") + t.items()[static_cast<std::size_t>(i)].name;
  return out;
}

}  // namespace exspn

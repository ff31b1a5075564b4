#pragma once

#include <span>
#include <string>
#include <vector>

#include "exspn/dataset.hpp"
#include "exspn/spn.hpp"

namespace exspn {

enum class ClassWeight { kBalanced, kUniform };

struct CartParams {
  int max_depth = 2;
  double min_impurity_decrease = 0.1;
  ClassWeight class_weight = ClassWeight::kBalanced;

  void check() const;
};

enum class Relation { kLe, kGt, kEq, kNe };

struct Literal {
  int variable = 0;
  Relation relation = Relation::kLe;
  double value = 0.0;  // threshold, or category code for = / ≠

  bool holds(std::span<const double> row) const;
  bool operator==(const Literal&) const = default;
};

// Conjunction of literals; the empty conjunction is always true.
struct ContextPredicate {
  std::vector<Literal> literals;

  bool holds(std::span<const double> row) const;
  // Literals joined by " ∧ "; `name ≤ v` / `name > v` with 6 significant
  // digits, `name = cat` / `name ≠ cat`; empty renders as "⊤".
  std::string render(const VariableSchema& schema) const;
  bool operator==(const ContextPredicate&) const = default;
};

struct CartNode {
  bool leaf = true;
  int feature = -1;        // schema column index
  bool discrete = false;
  double threshold = 0.0;  // continuous: left is x <= threshold; discrete: left is x == threshold
  int left = -1;
  int right = -1;
  int depth = 0;
  double mass[2] = {0.0, 0.0};  // weighted class mass reaching the node
  double impurity = 0.0;
  std::size_t samples = 0;

  int prediction() const { return mass[1] > mass[0] ? 1 : 0; }
};

// Binary classification tree over schema columns; node 0 is the root.
class CartTree {
 public:
  CartTree(std::vector<CartNode> nodes, std::vector<int> features);

  const std::vector<CartNode>& nodes() const { return nodes_; }
  const std::vector<int>& features() const { return features_; }
  int depth() const;
  std::size_t split_count() const;

  int predict(std::span<const double> row) const;
  // Class-1 probability at the leaf reached by `row`.
  double predict_proba(std::span<const double> row) const;

  // Mean decrease in impurity per entry of features(); sums to 1 when any
  // split reduced impurity, all zero otherwise.
  std::vector<double> feature_importances() const;

 private:
  std::vector<CartNode> nodes_;
  std::vector<int> features_;
};

// Gini CART on `rows` of `data` restricted to `features`; y[i] in {0, 1} is
// the label of rows[i]. `sample_weight` (optional, parallel to rows)
// multiplies the class weights.
CartTree fit_cart(const DatasetTable& data, std::span<const std::size_t> rows, std::span<const int> features,
                  std::span<const int> y, const CartParams& params, std::span<const double> sample_weight = {});

// Conjunction of the split literals on the path to the leaf holding the most
// positive-class weight, keeping splits whose feature importance exceeds
// `lambda`.
ContextPredicate extract_context(const CartTree& tree, double lambda = 0.0);

struct PrecisionRecall {
  double precision = 1.0;
  double recall = 1.0;
};

PrecisionRecall rule_precision_recall(const ContextPredicate& pred, const DatasetTable& data,
                                      std::span<const std::size_t> rows, std::span<const int> y);

}  // namespace exspn

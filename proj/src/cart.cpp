#include <algorithm>
#include <cstdio>
#include <numeric>

#include "exspn/cart.hpp"
#include "exspn/error.hpp"

namespace exspn {

namespace {

constexpr double kTieEps = 1e-12;

double gini(const double m[2]) {
  const double w = m[0] + m[1];
  if (w <= 0) return 0.0;
  const double p = m[1] / w;
  return 2.0 * p * (1.0 - p);
}

double weight_of(const double m[2]) { return m[0] + m[1]; }

struct Candidate {
  bool found = false;
  double gain = 0.0;
  int feature = -1;
  bool discrete = false;
  double threshold = 0.0;
};

class Builder {
 public:
  Builder(const DatasetTable& data, std::span<const std::size_t> rows, std::span<const int> y,
          std::vector<double> weights, std::vector<int> features, const CartParams& params)
      : data_(data), rows_(rows), y_(y), w_(std::move(weights)), features_(std::move(features)), params_(params) {}

  std::vector<CartNode> run() {
    std::vector<std::size_t> all(rows_.size());
    std::iota(all.begin(), all.end(), 0);
    double m[2] = {0, 0};
    for (std::size_t i : all) m[y_[i]] += w_[i];
    total_ = weight_of(m);
    build(all, 0);
    return std::move(nodes_);
  }

 private:
  double x(std::size_t i, int f) const { return data_.at(rows_[i], static_cast<std::size_t>(f)); }

  double gain(const double parent[2], const double left[2], const double right[2]) const {
    const double wt = weight_of(parent);
    if (wt <= 0 || total_ <= 0) return 0.0;
    const double child = (weight_of(left) * gini(left) + weight_of(right) * gini(right)) / wt;
    return wt / total_ * (gini(parent) - child);
  }

  void consider(Candidate& best, double g, int feature, bool discrete, double threshold) const {
    if (!best.found || g > best.gain + kTieEps) best = Candidate{true, g, feature, discrete, threshold};
  }

  Candidate best_split(const std::vector<std::size_t>& idx, const double m[2]) const {
    Candidate best;
    for (int f : features_) {
      const auto& column = data_.schema()[static_cast<std::size_t>(f)];
      if (column.discrete()) {
        std::vector<double> cm(static_cast<std::size_t>(2 * column.cardinality), 0.0);
        std::vector<std::size_t> cnt(static_cast<std::size_t>(column.cardinality), 0);
        for (std::size_t i : idx) {
          const auto c = static_cast<std::size_t>(x(i, f));
          cm[2 * c + static_cast<std::size_t>(y_[i])] += w_[i];
          ++cnt[c];
        }
        for (int c = 0; c < column.cardinality; ++c) {
          const auto cc = static_cast<std::size_t>(c);
          if (cnt[cc] == 0 || cnt[cc] == idx.size()) continue;
          const double left[2] = {cm[2 * cc], cm[2 * cc + 1]};
          const double right[2] = {m[0] - left[0], m[1] - left[1]};
          consider(best, gain(m, left, right), f, true, c);
        }
      } else {
        std::vector<std::size_t> order = idx;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x(a, f) < x(b, f); });
        double left[2] = {0, 0};
        for (std::size_t k = 0; k + 1 < order.size(); ++k) {
          left[y_[order[k]]] += w_[order[k]];
          const double lo = x(order[k], f), hi = x(order[k + 1], f);
          if (!(lo < hi)) continue;
          double t = lo + (hi - lo) / 2.0;
          if (t >= hi) t = lo;
          const double right[2] = {m[0] - left[0], m[1] - left[1]};
          consider(best, gain(m, left, right), f, false, t);
        }
      }
    }
    return best;
  }

  int build(const std::vector<std::size_t>& idx, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    CartNode node;
    node.depth = depth;
    node.samples = idx.size();
    for (std::size_t i : idx) node.mass[y_[i]] += w_[i];
    node.impurity = gini(node.mass);

    if (depth < params_.max_depth && idx.size() >= 2 && node.impurity > 0) {
      const Candidate c = best_split(idx, node.mass);
      if (c.found && c.gain >= params_.min_impurity_decrease - kTieEps) {
        std::vector<std::size_t> l, r;
        for (std::size_t i : idx) {
          const double v = x(i, c.feature);
          (c.discrete ? v == c.threshold : v <= c.threshold) ? l.push_back(i) : r.push_back(i);
        }
        node.leaf = false;
        node.feature = c.feature;
        node.discrete = c.discrete;
        node.threshold = c.threshold;
        node.left = build(l, depth + 1);
        node.right = build(r, depth + 1);
      }
    }
    nodes_[static_cast<std::size_t>(id)] = node;
    return id;
  }

  const DatasetTable& data_;
  std::span<const std::size_t> rows_;
  std::span<const int> y_;
  std::vector<double> w_;
  std::vector<int> features_;
  const CartParams& params_;
  double total_ = 0.0;
  std::vector<CartNode> nodes_;
};

std::string format_g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

void CartParams::check() const {
  if (max_depth < 1) throw InputError("max_depth must be >= 1");
  if (!(min_impurity_decrease >= 0.0)) throw InputError("min_impurity_decrease must be >= 0");
}

bool Literal::holds(std::span<const double> row) const {
  const double v = row[static_cast<std::size_t>(variable)];
  switch (relation) {
    case Relation::kLe: return v <= value;
    case Relation::kGt: return v > value;
    case Relation::kEq: return v == value;
    case Relation::kNe: return v != value;
  }
  return false;
}

bool ContextPredicate::holds(std::span<const double> row) const {
  return std::all_of(literals.begin(), literals.end(), [&](const Literal& l) { return l.holds(row); });
}

std::string ContextPredicate::render(const VariableSchema& schema) const {
  if (literals.empty()) return "⊤";
  std::string out;
  for (const auto& l : literals) {
    if (!out.empty()) out += " ∧ ";
    out += schema[static_cast<std::size_t>(l.variable)].name;
    switch (l.relation) {
      case Relation::kLe: out += " ≤ " + format_g6(l.value); break;
      case Relation::kGt: out += " > " + format_g6(l.value); break;
      case Relation::kEq: out += " = " + schema.category_label(l.variable, static_cast<int>(l.value)); break;
      case Relation::kNe: out += " ≠ " + schema.category_label(l.variable, static_cast<int>(l.value)); break;
    }
  }
  return out;
}

CartTree::CartTree(std::vector<CartNode> nodes, std::vector<int> features)
    : nodes_(std::move(nodes)), features_(std::move(features)) {}

int CartTree::depth() const {
  int d = 0;
  for (const auto& n : nodes_) d = std::max(d, n.depth);
  return d;
}

std::size_t CartTree::split_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const CartNode& n) { return !n.leaf; }));
}

int CartTree::predict(std::span<const double> row) const { return predict_proba(row) > 0.5 ? 1 : 0; }

double CartTree::predict_proba(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes_[i].leaf) {
    const auto& n = nodes_[i];
    const double v = row[static_cast<std::size_t>(n.feature)];
    i = static_cast<std::size_t>((n.discrete ? v == n.threshold : v <= n.threshold) ? n.left : n.right);
  }
  const double w = weight_of(nodes_[i].mass);
  return w > 0 ? nodes_[i].mass[1] / w : 0.0;
}

std::vector<double> CartTree::feature_importances() const {
  std::vector<double> imp(features_.size(), 0.0);
  const double total = nodes_.empty() ? 0.0 : weight_of(nodes_[0].mass);
  if (total <= 0) return imp;
  for (const auto& n : nodes_) {
    if (n.leaf) continue;
    const auto& l = nodes_[static_cast<std::size_t>(n.left)];
    const auto& r = nodes_[static_cast<std::size_t>(n.right)];
    const double wt = weight_of(n.mass);
    const double dec = wt * n.impurity - weight_of(l.mass) * l.impurity - weight_of(r.mass) * r.impurity;
    const auto slot = std::find(features_.begin(), features_.end(), n.feature) - features_.begin();
    imp[static_cast<std::size_t>(slot)] += dec / total;
  }
  double sum = 0.0;
  for (double& v : imp) {
    v = std::max(v, 0.0);
    sum += v;
  }
  if (sum <= 0) return std::vector<double>(features_.size(), 0.0);
  for (double& v : imp) v /= sum;
  return imp;
}

CartTree fit_cart(const DatasetTable& data, std::span<const std::size_t> rows, std::span<const int> features,
                  std::span<const int> y, const CartParams& params, std::span<const double> sample_weight) {
  params.check();
  if (y.size() != rows.size()) throw InputError("fit_cart: label count differs from row count");
  if (!sample_weight.empty() && sample_weight.size() != rows.size())
    throw InputError("fit_cart: sample weight count differs from row count");
  std::vector<int> feats(features.begin(), features.end());
  std::sort(feats.begin(), feats.end());
  feats.erase(std::unique(feats.begin(), feats.end()), feats.end());

  std::size_t count[2] = {0, 0};
  for (int label : y) {
    if (label != 0 && label != 1) throw InputError("fit_cart: labels must be 0 or 1");
    ++count[label];
  }
  const double n = static_cast<double>(rows.size());
  double cw[2] = {1.0, 1.0};
  if (params.class_weight == ClassWeight::kBalanced)
    for (int c = 0; c < 2; ++c) cw[c] = count[c] ? n / (2.0 * static_cast<double>(count[c])) : 0.0;
  std::vector<double> w(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) w[i] = cw[y[i]] * (sample_weight.empty() ? 1.0 : sample_weight[i]);

  if (rows.size() < 2 || count[0] == 0 || count[1] == 0) {
    CartNode leaf;
    leaf.samples = rows.size();
    for (std::size_t i = 0; i < rows.size(); ++i) leaf.mass[y[i]] += w[i];
    leaf.impurity = gini(leaf.mass);
    return CartTree({leaf}, std::move(feats));
  }
  auto nodes = Builder(data, rows, y, std::move(w), feats, params).run();
  return CartTree(std::move(nodes), std::move(feats));
}

ContextPredicate extract_context(const CartTree& tree, double lambda) {
  const auto& nodes = tree.nodes();
  const auto imp = tree.feature_importances();
  auto important = [&](int feature) {
    const auto it = std::find(tree.features().begin(), tree.features().end(), feature);
    return imp[static_cast<std::size_t>(it - tree.features().begin())] > lambda;
  };

  // Preorder walk; the first leaf with the largest positive mass wins.
  std::vector<Literal> path, best_path;
  double best = -1.0;
  auto walk = [&](auto&& self, int i) -> void {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    if (n.leaf) {
      if (n.mass[1] > best) {
        best = n.mass[1];
        best_path = path;
      }
      return;
    }
    const bool keep = important(n.feature);
    const Relation left_rel = n.discrete ? Relation::kEq : Relation::kLe;
    const Relation right_rel = n.discrete ? Relation::kNe : Relation::kGt;
    if (keep) path.push_back(Literal{n.feature, left_rel, n.threshold});
    self(self, n.left);
    if (keep) path.back().relation = right_rel;
    self(self, n.right);
    if (keep) path.pop_back();
  };
  walk(walk, 0);
  return ContextPredicate{best_path};
}

PrecisionRecall rule_precision_recall(const ContextPredicate& pred, const DatasetTable& data,
                                      std::span<const std::size_t> rows, std::span<const int> y) {
  if (y.size() != rows.size()) throw InputError("rule_precision_recall: label count differs from row count");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const bool hit = pred.holds(data.row(rows[i]));
    if (hit && y[i]) ++tp;
    else if (hit) ++fp;
    else if (y[i]) ++fn;
  }
  PrecisionRecall pr;
  if (tp + fp > 0) pr.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) pr.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return pr;
}

}  // namespace exspn

#include "exspn/spn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <unordered_set>

#include "exspn/error.hpp"

namespace exspn {

// ---------------------------------------------------------------------------
// Schema

VariableSchema::VariableSchema(std::vector<Column> columns) : columns_(std::move(columns)) {
  std::unordered_set<std::string> seen;
  for (auto& c : columns_) {
    if (c.name.empty()) throw InputError("schema: column names must be non-empty");
    if (!seen.insert(c.name).second) throw InputError("schema: duplicate column name '" + c.name + "'");
    if (c.discrete()) {
      if (!c.categories.empty() && c.cardinality == 0) c.cardinality = static_cast<int>(c.categories.size());
      if (c.cardinality < 2)
        throw InputError("schema: discrete column '" + c.name + "' needs cardinality >= 2");
      if (!c.categories.empty() && static_cast<int>(c.categories.size()) != c.cardinality)
        throw InputError("schema: column '" + c.name + "' lists " + std::to_string(c.categories.size()) +
                         " categories but declares cardinality " + std::to_string(c.cardinality));
    } else {
      c.cardinality = 0;
      c.categories.clear();
    }
  }
}

VariableSchema VariableSchema::binary(int n_vars) {
  std::vector<Column> cols;
  cols.reserve(n_vars);
  for (int i = 0; i < n_vars; ++i) cols.push_back({"X" + std::to_string(i), ColumnKind::kDiscrete, 2, {}});
  return VariableSchema(std::move(cols));
}

std::optional<int> VariableSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (columns_[i].name == name) return static_cast<int>(i);
  return std::nullopt;
}

std::string VariableSchema::category_label(int var, int code) const {
  const auto& c = columns_.at(var);
  if (code >= 0 && code < static_cast<int>(c.categories.size())) return c.categories[code];
  return std::to_string(code);
}

// ---------------------------------------------------------------------------
// Leaves and nodes

double log_density(const LeafDistribution& dist, double value) {
  if (const auto* cat = std::get_if<Categorical>(&dist)) {
    const auto code = static_cast<long>(value);
    if (code < 0 || code >= static_cast<long>(cat->probs.size()))
      return -std::numeric_limits<double>::infinity();
    return std::log(cat->probs[code]);
  }
  if (const auto* g = std::get_if<Gaussian>(&dist)) {
    const double z = (value - g->mean) / g->stddev;
    return -0.5 * std::log(2.0 * std::numbers::pi) - std::log(g->stddev) - 0.5 * z * z;
  }
  return 0.0;
}

SpnNode SpnNode::sum(int id, std::vector<int> children, std::vector<double> weights) {
  SpnNode n;
  n.id = id;
  n.type = NodeType::kSum;
  n.children = std::move(children);
  n.weights = std::move(weights);
  return n;
}

SpnNode SpnNode::product(int id, std::vector<int> children) {
  SpnNode n;
  n.id = id;
  n.type = NodeType::kProduct;
  n.children = std::move(children);
  return n;
}

SpnNode SpnNode::leaf(int id, int variable, LeafDistribution distribution) {
  SpnNode n;
  n.id = id;
  n.type = NodeType::kLeaf;
  n.variable = variable;
  n.distribution = std::move(distribution);
  return n;
}

// ---------------------------------------------------------------------------
// Graph

namespace {

std::vector<int> merge_sorted(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace

SpnGraph::SpnGraph(VariableSchema schema, std::vector<SpnNode> nodes, int root, bool structure_only)
    : schema_(std::move(schema)), nodes_(std::move(nodes)), root_(root), structure_only_(structure_only) {
  if (nodes_.empty()) throw ValidationError("spn: graph has no nodes");
  int max_id = -1;
  for (const auto& n : nodes_) {
    if (n.id < 0) throw ValidationError("spn: negative node id " + std::to_string(n.id));
    max_id = std::max(max_id, n.id);
  }
  slot_.assign(static_cast<std::size_t>(max_id) + 1, -1);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    auto& s = slot_[nodes_[i].id];
    if (s != -1) throw ValidationError("spn: duplicate node id " + std::to_string(nodes_[i].id));
    s = static_cast<int>(i);
  }
  if (!contains(root_)) throw ValidationError("spn: root id " + std::to_string(root_) + " not present");

  for (const auto& n : nodes_) {
    if (n.type == NodeType::kLeaf) {
      if (n.variable < 0 || n.variable >= static_cast<int>(schema_.size()))
        throw ValidationError("spn: leaf " + std::to_string(n.id) + " references variable " +
                              std::to_string(n.variable) + " outside the schema");
      if (!n.children.empty()) throw ValidationError("spn: leaf " + std::to_string(n.id) + " has children");
      continue;
    }
    if (n.type == NodeType::kSum && n.weights.size() != n.children.size())
      throw ValidationError("spn: sum node " + std::to_string(n.id) + " has " +
                            std::to_string(n.children.size()) + " children but " +
                            std::to_string(n.weights.size()) + " weights");
    if (n.children.empty())
      throw ValidationError("spn: internal node " + std::to_string(n.id) + " has no children");
    for (int c : n.children)
      if (!contains(c))
        throw ValidationError("spn: node " + std::to_string(n.id) + " references missing child " +
                              std::to_string(c));
  }

  // Iterative post-order over every node: detects cycles and fills scopes.
  enum : char { kWhite, kGrey, kBlack };
  std::vector<char> colour(nodes_.size(), kWhite);
  scopes_.assign(nodes_.size(), {});
  auto visit = [&](std::size_t start, std::vector<std::size_t>* order) {
    std::vector<std::pair<std::size_t, std::size_t>> stack{{start, 0}};
    colour[start] = kGrey;
    while (!stack.empty()) {
      auto& [idx, next] = stack.back();
      const auto& n = nodes_[idx];
      if (next < n.children.size()) {
        const auto child = static_cast<std::size_t>(slot_[n.children[next++]]);
        if (colour[child] == kGrey)
          throw ValidationError("spn: cycle through node " + std::to_string(nodes_[child].id));
        if (colour[child] == kWhite) {
          colour[child] = kGrey;
          stack.emplace_back(child, 0);
        }
        continue;
      }
      if (n.type == NodeType::kLeaf) {
        scopes_[idx] = {n.variable};
      } else {
        std::vector<int> s;
        for (int c : n.children) s = merge_sorted(s, scopes_[slot_[c]]);
        scopes_[idx] = std::move(s);
      }
      colour[idx] = kBlack;
      if (order) order->push_back(idx);
      stack.pop_back();
    }
  };
  visit(index_of(root_), &order_);
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (colour[i] == kWhite) visit(i, nullptr);
}

bool SpnGraph::contains(int id) const {
  return id >= 0 && id < static_cast<int>(slot_.size()) && slot_[id] >= 0;
}

std::size_t SpnGraph::index_of(int id) const {
  if (!contains(id)) throw ContractError("spn: unknown node id " + std::to_string(id));
  return static_cast<std::size_t>(slot_[id]);
}

std::size_t SpnGraph::count(NodeType type) const {
  std::size_t n = 0;
  for (auto idx : order_)
    if (nodes_[idx].type == type) ++n;
  return n;
}

std::size_t SpnGraph::edge_count() const {
  std::size_t n = 0;
  for (auto idx : order_) n += nodes_[idx].children.size();
  return n;
}

bool SpnGraph::operator==(const SpnGraph& other) const {
  return root_ == other.root_ && structure_only_ == other.structure_only_ && schema_ == other.schema_ &&
         nodes_ == other.nodes_;
}

// ---------------------------------------------------------------------------
// Validation

std::size_t ValidationReport::count(ViolationKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(violations.begin(), violations.end(), [&](const auto& v) { return v.kind == kind; }));
}

std::string ValidationReport::describe() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) os << "; ";
    os << "node " << violations[i].node_id << ": " << violations[i].message;
  }
  return os.str();
}

namespace {

void check_leaf(const SpnGraph& spn, const SpnNode& n, std::vector<Violation>& out) {
  const auto& col = spn.schema()[n.variable];
  auto fail = [&](std::string msg) { out.push_back({ViolationKind::kLeaf, n.id, std::move(msg)}); };
  if (std::holds_alternative<UnitLeaf>(n.distribution)) {
    if (!spn.structure_only()) fail("placeholder leaf in a parameterized network");
    return;
  }
  if (col.discrete()) {
    const auto* cat = std::get_if<Categorical>(&n.distribution);
    if (!cat) return fail("discrete variable '" + col.name + "' needs a categorical leaf");
    if (static_cast<int>(cat->probs.size()) != col.cardinality)
      return fail("categorical leaf has " + std::to_string(cat->probs.size()) + " probabilities, column '" +
                  col.name + "' has cardinality " + std::to_string(col.cardinality));
    double total = 0.0;
    for (double p : cat->probs) {
      if (!(p > 0.0) || !std::isfinite(p)) return fail("categorical probabilities must be positive");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) fail("categorical probabilities sum to " + std::to_string(total));
  } else {
    const auto* g = std::get_if<Gaussian>(&n.distribution);
    if (!g) return fail("continuous variable '" + col.name + "' needs a gaussian leaf");
    if (!std::isfinite(g->mean)) fail("gaussian mean is not finite");
    if (!std::isfinite(g->stddev) || g->stddev < kGaussianStddevFloor * (1.0 - 1e-12))
      fail("gaussian stddev below floor");
  }
}

}  // namespace

ValidationReport validate(const SpnGraph& spn) {
  ValidationReport report;
  auto& out = report.violations;
  std::vector<char> reachable(spn.nodes().size(), 0);
  for (auto idx : spn.bottom_up_order()) reachable[idx] = 1;

  for (std::size_t i = 0; i < spn.nodes().size(); ++i) {
    const auto& n = spn.nodes()[i];
    if (!reachable[i]) {
      out.push_back({ViolationKind::kUnreachable, n.id, "not reachable from the root"});
      continue;
    }
    switch (n.type) {
      case NodeType::kLeaf:
        check_leaf(spn, n, out);
        break;
      case NodeType::kSum: {
        if (n.children.size() < 2)
          out.push_back({ViolationKind::kArity, n.id, "sum node needs at least two children"});
        for (double w : n.weights)
          if (!(w > 0.0) || !std::isfinite(w)) {
            out.push_back({ViolationKind::kWeight, n.id, "sum weights must be positive and finite"});
            break;
          }
        const auto& first = spn.scope(n.children.front());
        for (int c : n.children)
          if (spn.scope(c) != first) {
            out.push_back({ViolationKind::kCompleteness, n.id, "children of sum node have different scopes"});
            break;
          }
        break;
      }
      case NodeType::kProduct: {
        if (n.children.size() < 2)
          out.push_back({ViolationKind::kArity, n.id, "product node needs at least two children"});
        std::size_t total = 0;
        for (int c : n.children) total += spn.scope(c).size();
        if (total != spn.scope(n.id).size())
          out.push_back({ViolationKind::kDecomposability, n.id, "children of product node share variables"});
        break;
      }
    }
  }
  return report;
}

bool is_normal(const SpnGraph& spn, double tol) {
  if (!validate(spn).ok()) return false;
  for (auto idx : spn.bottom_up_order()) {
    const auto& n = spn.nodes()[idx];
    if (n.type == NodeType::kLeaf) continue;
    if (n.type == NodeType::kSum) {
      double total = 0.0;
      for (double w : n.weights) total += w;
      if (std::abs(total - 1.0) > tol) return false;
    }
    for (int c : n.children)
      if (spn.node(c).type == n.type) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Evaluation

void check_row(const VariableSchema& schema, std::span<const double> row) {
  if (row.size() != schema.size())
    throw InputError("row has " + std::to_string(row.size()) + " values, schema has " +
                     std::to_string(schema.size()) + " columns");
  for (std::size_t j = 0; j < row.size(); ++j) {
    const double v = row[j];
    if (!std::isfinite(v)) throw InputError("row value for column '" + schema[j].name + "' is not finite");
    if (schema[j].discrete()) {
      if (v != std::floor(v) || v < 0 || v >= schema[j].cardinality)
        throw InputError("row value " + std::to_string(v) + " is not a valid code for column '" +
                         schema[j].name + "'");
    }
  }
}

double log_likelihood(const SpnGraph& spn, std::span<const double> row) {
  check_row(spn.schema(), row);
  std::vector<double> value(spn.nodes().size(), 0.0);
  for (auto idx : spn.bottom_up_order()) {
    const auto& n = spn.nodes()[idx];
    switch (n.type) {
      case NodeType::kLeaf:
        value[idx] = log_density(n.distribution, row[n.variable]);
        break;
      case NodeType::kProduct: {
        double acc = 0.0;
        for (int c : n.children) acc += value[spn.index_of(c)];
        value[idx] = acc;
        break;
      }
      case NodeType::kSum: {
        double hi = -std::numeric_limits<double>::infinity();
        std::vector<double> terms(n.children.size());
        for (std::size_t k = 0; k < n.children.size(); ++k) {
          terms[k] = std::log(n.weights[k]) + value[spn.index_of(n.children[k])];
          hi = std::max(hi, terms[k]);
        }
        if (!std::isfinite(hi)) {
          value[idx] = hi;
          break;
        }
        double acc = 0.0;
        for (double t : terms) acc += std::exp(t - hi);
        value[idx] = hi + std::log(acc);
        break;
      }
    }
  }
  return value[spn.index_of(spn.root())];
}

// ---------------------------------------------------------------------------
// Comparison

namespace {

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

bool distributions_close(const LeafDistribution& a, const LeafDistribution& b, double tol) {
  if (a.index() != b.index()) return false;
  if (const auto* ca = std::get_if<Categorical>(&a)) {
    const auto& cb = std::get<Categorical>(b);
    if (ca->probs.size() != cb.probs.size()) return false;
    for (std::size_t i = 0; i < ca->probs.size(); ++i)
      if (!close(ca->probs[i], cb.probs[i], tol)) return false;
    return true;
  }
  if (const auto* ga = std::get_if<Gaussian>(&a)) {
    const auto& gb = std::get<Gaussian>(b);
    return close(ga->mean, gb.mean, tol) && close(ga->stddev, gb.stddev, tol);
  }
  return true;
}

}  // namespace

bool structurally_equal(const SpnGraph& a, const SpnGraph& b, double tol) {
  if (a.root() != b.root() || !(a.schema() == b.schema()) || a.structure_only() != b.structure_only())
    return false;
  if (a.bottom_up_order().size() != b.bottom_up_order().size()) return false;
  for (auto idx : a.bottom_up_order()) {
    const auto& na = a.nodes()[idx];
    if (!b.contains(na.id)) return false;
    const auto& nb = b.node(na.id);
    if (na.type != nb.type || na.children != nb.children || na.variable != nb.variable) return false;
    if (na.weights.size() != nb.weights.size()) return false;
    for (std::size_t k = 0; k < na.weights.size(); ++k)
      if (!close(na.weights[k], nb.weights[k], tol)) return false;
    if (!distributions_close(na.distribution, nb.distribution, tol)) return false;
  }
  return true;
}

}  // namespace exspn

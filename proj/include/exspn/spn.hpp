#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace exspn {

enum class ColumnKind { kDiscrete, kContinuous };

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::kContinuous;
  int cardinality = 0;                  // discrete only, >= 2
  std::vector<std::string> categories;  // optional labels for discrete codes

  bool discrete() const { return kind == ColumnKind::kDiscrete; }
  bool operator==(const Column&) const = default;
};

// Ordered list of named columns. Names are unique and non-empty; every
// discrete column has cardinality >= 2.
class VariableSchema {
 public:
  VariableSchema() = default;
  explicit VariableSchema(std::vector<Column> columns);

  static VariableSchema binary(int n_vars);

  std::size_t size() const { return columns_.size(); }
  const Column& operator[](std::size_t i) const { return columns_[i]; }
  const std::vector<Column>& columns() const { return columns_; }
  std::optional<int> index_of(std::string_view name) const;

  // Label used when printing discrete code `code` of column `var`.
  std::string category_label(int var, int code) const;

  bool operator==(const VariableSchema&) const = default;

 private:
  std::vector<Column> columns_;
};

inline constexpr double kGaussianStddevFloor = 1e-3;

struct Categorical {
  std::vector<double> probs;
  bool operator==(const Categorical&) const = default;
};

struct Gaussian {
  double mean = 0.0;
  double stddev = 1.0;
  bool operator==(const Gaussian&) const = default;
};

// Parameter-free placeholder used by structure-only graphs; evaluates to 1.
struct UnitLeaf {
  bool operator==(const UnitLeaf&) const = default;
};

using LeafDistribution = std::variant<Categorical, Gaussian, UnitLeaf>;

double log_density(const LeafDistribution& dist, double value);

enum class NodeType { kSum, kProduct, kLeaf };

struct SpnNode {
  int id = 0;
  NodeType type = NodeType::kLeaf;
  std::vector<int> children;
  std::vector<double> weights;  // sum nodes, parallel to children
  int variable = -1;            // leaf nodes
  LeafDistribution distribution = UnitLeaf{};

  static SpnNode sum(int id, std::vector<int> children, std::vector<double> weights);
  static SpnNode product(int id, std::vector<int> children);
  static SpnNode leaf(int id, int variable, LeafDistribution distribution);

  bool operator==(const SpnNode&) const = default;
};

// Rooted DAG of sum/product/leaf nodes over a schema. Immutable once built.
//
// Construction rejects graphs that cannot be interpreted at all (duplicate or
// dangling ids, cycles, leaf variables outside the schema). Semantic
// conditions such as completeness and decomposability are reported by
// validate() instead, so that invalid models can be inspected.
class SpnGraph {
 public:
  SpnGraph() = default;
  SpnGraph(VariableSchema schema, std::vector<SpnNode> nodes, int root,
           bool structure_only = false);

  const VariableSchema& schema() const { return schema_; }
  int root() const { return root_; }
  bool structure_only() const { return structure_only_; }

  const std::vector<SpnNode>& nodes() const { return nodes_; }
  bool contains(int id) const;
  const SpnNode& node(int id) const { return nodes_[index_of(id)]; }
  std::size_t index_of(int id) const;

  // Sorted variable indices of the sub-network rooted at `id`.
  const std::vector<int>& scope(int id) const { return scopes_[index_of(id)]; }

  // Node indices reachable from the root, children before parents.
  const std::vector<std::size_t>& bottom_up_order() const { return order_; }

  std::size_t count(NodeType type) const;
  std::size_t edge_count() const;

  bool operator==(const SpnGraph& other) const;

 private:
  VariableSchema schema_;
  std::vector<SpnNode> nodes_;
  int root_ = 0;
  bool structure_only_ = false;
  std::vector<int> slot_;  // id -> index into nodes_, -1 when absent
  std::vector<std::vector<int>> scopes_;
  std::vector<std::size_t> order_;
};

enum class ViolationKind {
  kCompleteness,
  kDecomposability,
  kWeight,
  kArity,
  kLeaf,
  kUnreachable,
};

struct Violation {
  ViolationKind kind;
  int node_id;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  std::size_t count(ViolationKind kind) const;
  std::string describe() const;
};

ValidationReport validate(const SpnGraph& spn);

// Normal form check: valid, every sum's weights sum to one (within `tol`), no
// sum has a sum child and no product has a product child, every internal node
// has at least two children.
bool is_normal(const SpnGraph& spn, double tol = 1e-9);

// Throws InputError unless `row` is a complete assignment over the schema.
void check_row(const VariableSchema& schema, std::span<const double> row);

double log_likelihood(const SpnGraph& spn, std::span<const double> row);

// Converts to normal form: weights normalized, same-kind parent/child chains
// collapsed, single-child internal nodes spliced out, duplicate sum children
// merged. Retained nodes keep their ids, so per-node annotations (such as an
// instance function) made on the input remain addressable. Output size
// satisfies nodes + edges <= 2 * |input nodes|^2.
SpnGraph to_normal(const SpnGraph& spn);

// Topology plus weights/parameters compared within `tol`.
bool structurally_equal(const SpnGraph& a, const SpnGraph& b, double tol = 1e-12);

enum class LoadMode { kStrict, kLenient };

inline constexpr int kSpnFormatVersion = 1;

std::string serialize(const SpnGraph& spn);
// Strict mode rejects sum weights that do not sum to one; lenient mode
// renormalizes them on load.
SpnGraph deserialize(std::string_view text, LoadMode mode = LoadMode::kStrict);

SpnGraph load_spn(const std::string& path, LoadMode mode = LoadMode::kStrict);
void save_spn(const SpnGraph& spn, const std::string& path);

// Random normal, tree-shaped SPN over `n_vars` binary variables with
// alternating sum/product levels and at most `max_depth` internal levels.
SpnGraph random_spn(std::uint64_t seed, int n_vars, int max_depth);

}  // namespace exspn

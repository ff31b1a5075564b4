#pragma once

#include <limits>
#include <string>
#include <vector>

#include "exspn/cart.hpp"
#include "exspn/dataset.hpp"
#include "exspn/instance_fn.hpp"
#include "exspn/spn.hpp"

namespace exspn {

// Origin of a root that stands above a product-rooted SPN.
inline constexpr int kVirtualOrigin = -1;

struct CsiNode {
  int id = 0;
  int parent = -1;
  std::vector<int> children;
  std::vector<int> scope;                   // sorted
  std::vector<std::vector<int>> partition;  // disjoint sorted blocks, union = scope
  int origin = kVirtualOrigin;              // SPN node id
  std::vector<std::size_t> rows;            // φ(origin) ∩ rows of the parent
  std::size_t n_instances = 0;

  // Label of the edge from `parent`.
  ContextPredicate label;
  double precision = 1.0;
  double recall = 1.0;
};

// Strict tree of partition nodes. nodes()[i].id == i and parents precede
// children. A product-rooted SPN gets a root with origin kVirtualOrigin and
// a single block, so a tree-shaped SPN always yields (product nodes) + 1
// tree nodes.
struct CsiTree {
  VariableSchema schema;
  std::vector<CsiNode> nodes;
  bool has_instances = false;  // rows / n_instances populated from φ
  bool labeled = false;

  const CsiNode& root() const { return nodes.front(); }
};

// Sum nodes are dissolved into their parent's partition, leaves add
// singleton blocks, products become tree nodes; DAG-shared nodes are copied
// once per path. Without `phi`, rows are left empty and counts zero.
CsiTree build_unlabeled_tree(const SpnGraph& spn_normal, const InstanceFunction* phi = nullptr);

// Recomputes rows and n_instances from φ along every root path.
void populate_instances(CsiTree& tree, const InstanceFunction& phi);

// Fits one CART per edge: rows of the parent, y = membership in the child's
// rows, features = parent scope.
void compute_labels(CsiTree& tree, const DatasetTable& data, double lambda, const CartParams& params);

// Drops every non-root node with fewer than `min_instances` rows, together
// with its subtree. Ids are reassigned in preorder.
CsiTree compress(const CsiTree& tree, std::size_t min_instances);

struct CsiRule {
  int node_id = 0;
  ContextPredicate context;
  std::vector<std::vector<int>> blocks;
  double mp = 1.0;
  double mr = 1.0;
  std::size_t ni = 0;

  std::size_t antecedent_length() const { return context.literals.size(); }
  std::size_t consequent_length() const { return blocks.size(); }
};

// One rule per non-root node (skipping nodes that φ leaves empty), plus the
// root when its partition has two or more blocks. Context literals
// concatenate the edge labels from the root; mp / mr are path minima.
std::vector<CsiRule> enumerate_rules(const CsiTree& tree);

inline constexpr double kInfiniteRatio = std::numeric_limits<double>::infinity();

struct Reduction {
  std::vector<CsiRule> kept;
  std::vector<bool> mask;  // parallel to the input rules
  double compression_ratio = kInfiniteRatio;
};

Reduction reduce_rules(const std::vector<CsiRule>& rules, double mp_min, double mr_min, std::size_t ni_min);

struct RuleSummary {
  std::size_t np = 0;
  std::size_t nr_all = 0;
  double ma_all = 0.0;
  double mc_all = 0.0;
  std::size_t nr_reduced = 0;
  double ma_reduced = 0.0;
  double mc_reduced = 0.0;
  double cr = kInfiniteRatio;
};

RuleSummary summarize(std::size_t n_products, const std::vector<CsiRule>& all, const Reduction& reduced);

std::string render_blocks(const VariableSchema& schema, const std::vector<std::vector<int>>& blocks);
std::string export_dot(const CsiTree& tree);
// Header: node_id,context,blocks,antecedent_len,consequent_len,mp,mr,ni,kept
std::string rules_csv(const CsiTree& tree, const std::vector<CsiRule>& rules, const std::vector<bool>& kept);

}  // namespace exspn

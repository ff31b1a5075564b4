#include <algorithm>
#include <map>

#include "exspn/error.hpp"
#include "exspn/retrieve.hpp"

namespace exspn {

namespace {

class Retriever {
 public:
  explicit Retriever(const CsiTree& tree) : tree_(tree) {}

  SpnGraph run() {
    if (tree_.nodes.empty()) throw ValidationError("retrieve_spn: empty tree");
    const CsiNode& root = tree_.root();
    int top;
    if (root.partition.size() == 1) {
      if (root.scope.size() == 1)
        top = leaf(root.scope.front());
      else
        top = mixture(root, root.scope);
    } else {
      top = convert(root);
    }
    std::sort(nodes_.begin(), nodes_.end(), [](const SpnNode& a, const SpnNode& b) { return a.id < b.id; });
    return SpnGraph(tree_.schema, std::move(nodes_), top, true);
  }

  std::size_t ops() const { return ops_; }

 private:
  int leaf(int var) {
    ++ops_;
    const int id = next_id_++;
    nodes_.push_back(SpnNode::leaf(id, var, UnitLeaf{}));
    return id;
  }

  // Sum over the children of `n` whose scope equals `block`; a single match
  // is returned directly.
  int mixture(const CsiNode& n, const std::vector<int>& block) {
    std::vector<int> matches;
    for (int c : n.children) {
      ++ops_;
      if (tree_.nodes[static_cast<std::size_t>(c)].scope == block) matches.push_back(c);
    }
    if (matches.empty())
      throw ValidationError("retrieve_spn: node " + std::to_string(n.id) + " has a block with no matching child");
    if (matches.size() == 1) return convert(tree_.nodes[static_cast<std::size_t>(matches.front())]);
    const int id = next_id_++;
    std::vector<int> children;
    for (int c : matches) children.push_back(convert(tree_.nodes[static_cast<std::size_t>(c)]));
    ++ops_;
    nodes_.push_back(SpnNode::sum(id, std::move(children),
                                  std::vector<double>(matches.size(), 1.0 / static_cast<double>(matches.size()))));
    return id;
  }

  int convert(const CsiNode& n) {
    ++ops_;
    if (n.partition.size() < 2)
      throw ValidationError("retrieve_spn: node " + std::to_string(n.id) + " has fewer than two blocks");
    const int id = next_id_++;
    std::vector<int> children;
    const bool all_singletons = n.partition.size() == n.scope.size();
    if (all_singletons) {
      for (const auto& b : n.partition) children.push_back(leaf(b.front()));
    } else {
      // Group children by scope once so each block lookup is constant time.
      std::map<std::vector<int>, std::vector<int>> by_scope;
      for (int c : n.children) {
        ++ops_;
        by_scope[tree_.nodes[static_cast<std::size_t>(c)].scope].push_back(c);
      }
      for (const auto& b : n.partition) {
        if (b.size() == 1) {
          children.push_back(leaf(b.front()));
          continue;
        }
        const auto it = by_scope.find(b);
        if (it == by_scope.end())
          throw ValidationError("retrieve_spn: node " + std::to_string(n.id) + " has a block with no matching child");
        const auto& matches = it->second;
        if (matches.size() == 1) {
          children.push_back(convert(tree_.nodes[static_cast<std::size_t>(matches.front())]));
          continue;
        }
        const int sum = next_id_++;
        std::vector<int> sum_children;
        for (int c : matches) sum_children.push_back(convert(tree_.nodes[static_cast<std::size_t>(c)]));
        ++ops_;
        nodes_.push_back(SpnNode::sum(sum, std::move(sum_children),
                                      std::vector<double>(matches.size(), 1.0 / static_cast<double>(matches.size()))));
        children.push_back(sum);
      }
    }
    nodes_.push_back(SpnNode::product(id, std::move(children)));
    return id;
  }

  const CsiTree& tree_;
  std::vector<SpnNode> nodes_;
  int next_id_ = 0;
  std::size_t ops_ = 0;
};

std::string scope_key(const std::vector<int>& scope) {
  std::string s = "{";
  for (std::size_t i = 0; i < scope.size(); ++i) s += (i ? "," : "") + std::to_string(scope[i]);
  return s + "}";
}

class Signer {
 public:
  explicit Signer(const SpnGraph& spn) : spn_(spn) {}

  std::string top() {
    const SpnNode& r = spn_.node(spn_.root());
    if (spn_.scope(r.id).size() == 1) return "L" + scope_key(spn_.scope(r.id));
    if (r.type == NodeType::kProduct) return product(r.id);
    return "S" + mixture(r.id);
  }

 private:
  // Product: its blocks in canonical order, each with the sorted multiset of
  // products that realize it.
  std::string product(int id) {
    if (auto it = memo_.find(id); it != memo_.end()) return it->second;
    std::vector<std::pair<std::vector<int>, std::string>> blocks;
    for (int c : spn_.node(id).children) {
      const auto& scope = spn_.scope(c);
      const SpnNode& cn = spn_.node(c);
      if (scope.size() == 1) {
        blocks.emplace_back(scope, scope_key(scope));
      } else if (cn.type == NodeType::kProduct) {
        // A product directly under a product is a one-way mixture.
        blocks.emplace_back(scope, scope_key(scope) + ":[" + product(c) + "]");
      } else {
        blocks.emplace_back(scope, scope_key(scope) + ":" + mixture(c));
      }
    }
    std::sort(blocks.begin(), blocks.end());
    std::string s = "P(";
    for (const auto& b : blocks) s += b.second + ";";
    s += ")";
    return memo_[id] = s;
  }

  // Sorted signatures of the products reachable through chains of sums.
  std::string mixture(int id) {
    std::vector<std::string> parts;
    collect(id, parts);
    std::sort(parts.begin(), parts.end());
    std::string s = "[";
    for (const auto& p : parts) s += p + ",";
    return s + "]";
  }

  void collect(int id, std::vector<std::string>& parts) {
    const SpnNode& n = spn_.node(id);
    if (n.type == NodeType::kSum) {
      for (int c : n.children) collect(c, parts);
    } else if (n.type == NodeType::kProduct) {
      parts.push_back(product(id));
    } else {
      parts.push_back("L" + std::to_string(n.variable));
    }
  }

  const SpnGraph& spn_;
  std::map<int, std::string> memo_;
};

}  // namespace

SpnGraph retrieve_spn(const CsiTree& tree, std::size_t* ops) {
  Retriever r(tree);
  SpnGraph out = r.run();
  if (ops) *ops = r.ops();
  return out;
}

bool csi_equivalent(const SpnGraph& a, const SpnGraph& b) {
  if (a.schema().size() != b.schema().size()) return false;
  if (a.scope(a.root()) != b.scope(b.root())) return false;
  return Signer(a).top() == Signer(b).top();
}

}  // namespace exspn

#include <unordered_map>

#include "exspn/error.hpp"
#include "exspn/spn.hpp"

namespace exspn {

namespace {

class Normalizer {
 public:
  explicit Normalizer(const SpnGraph& spn) : spn_(spn) {}

  SpnGraph run() {
    const int root = convert(spn_.root());
    // Keep only what the new root reaches, in the input's node order.
    std::unordered_map<int, bool> reachable;
    std::vector<int> stack{root};
    while (!stack.empty()) {
      const int id = stack.back();
      stack.pop_back();
      if (reachable[id]) continue;
      reachable[id] = true;
      for (int c : out_.at(id).children) stack.push_back(c);
    }
    std::vector<SpnNode> nodes;
    for (const auto& n : spn_.nodes())
      if (reachable.count(n.id) && reachable[n.id]) nodes.push_back(std::move(out_.at(n.id)));
    return SpnGraph(spn_.schema(), std::move(nodes), root, spn_.structure_only());
  }

 private:
  // Returns the id of the node that represents `id` in normal form: either
  // `id` itself or, when `id` collapses to a single child, that child.
  int convert(int id) {
    if (auto it = memo_.find(id); it != memo_.end()) return it->second;
    const SpnNode& n = spn_.node(id);
    int result = id;
    switch (n.type) {
      case NodeType::kLeaf:
        out_[id] = n;
        break;
      case NodeType::kProduct: {
        std::vector<int> children;
        for (int c : n.children) {
          const int r = convert(c);
          const auto& rn = out_.at(r);
          if (rn.type == NodeType::kProduct)
            children.insert(children.end(), rn.children.begin(), rn.children.end());
          else
            children.push_back(r);
        }
        if (children.size() == 1)
          result = children.front();
        else
          out_[id] = SpnNode::product(id, std::move(children));
        break;
      }
      case NodeType::kSum: {
        double total = 0.0;
        for (double w : n.weights) total += w;
        std::vector<int> children;
        std::vector<double> weights;
        auto add = [&](int child, double w) {
          for (std::size_t k = 0; k < children.size(); ++k)
            if (children[k] == child) {
              weights[k] += w;
              return;
            }
          children.push_back(child);
          weights.push_back(w);
        };
        for (std::size_t k = 0; k < n.children.size(); ++k) {
          const double w = n.weights[k] / total;
          const int r = convert(n.children[k]);
          const auto& rn = out_.at(r);
          if (rn.type == NodeType::kSum) {
            for (std::size_t j = 0; j < rn.children.size(); ++j) add(rn.children[j], w * rn.weights[j]);
          } else {
            add(r, w);
          }
        }
        if (children.size() == 1)
          result = children.front();
        else
          out_[id] = SpnNode::sum(id, std::move(children), std::move(weights));
        break;
      }
    }
    memo_[id] = result;
    return result;
  }

  const SpnGraph& spn_;
  std::unordered_map<int, int> memo_;
  std::unordered_map<int, SpnNode> out_;
};

}  // namespace

SpnGraph to_normal(const SpnGraph& spn) {
  auto report = validate(spn);
  // Single-child internal nodes are exactly what this conversion removes.
  for (const auto& v : report.violations)
    if (v.kind != ViolationKind::kArity)
      throw ValidationError("to_normal: input is not a valid SPN: " + report.describe());
  return Normalizer(spn).run();
}

}  // namespace exspn

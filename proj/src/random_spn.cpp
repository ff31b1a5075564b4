#include <algorithm>
#include <random>

#include "exspn/error.hpp"
#include "exspn/spn.hpp"

namespace exspn {

namespace {

class RandomBuilder {
 public:
  explicit RandomBuilder(std::uint64_t seed) : rng_(seed) {}

  // `levels` is the number of internal levels still allowed at this node.
  int build(std::vector<int> scope, int levels, bool want_sum) {
    if (scope.size() == 1) {
      if (want_sum && levels >= 2 && coin()) return sum_of_leaves(scope.front());
      return leaf(scope.front());
    }
    if (want_sum && levels >= 2) {
      const int id = next_id_++;
      const int arity = uniform_int(2, 3);
      std::vector<int> children;
      std::vector<double> weights;
      for (int k = 0; k < arity; ++k) {
        children.push_back(build(scope, levels - 1, false));
        weights.push_back(uniform(0.1, 1.0));
      }
      normalize(weights);
      nodes_.push_back(SpnNode::sum(id, std::move(children), std::move(weights)));
      return id;
    }
    const int id = next_id_++;
    std::vector<int> children;
    // A multi-variable block below a product must be a sum, which needs two
    // more levels; otherwise factorize completely.
    if (levels < 3) {
      for (int v : scope) children.push_back(leaf(v));
    } else {
      for (auto& block : random_partition(std::move(scope))) children.push_back(build(std::move(block), levels - 1, true));
    }
    nodes_.push_back(SpnNode::product(id, std::move(children)));
    return id;
  }

  std::vector<SpnNode> take_nodes() {
    std::sort(nodes_.begin(), nodes_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return std::move(nodes_);
  }

  bool coin() { return std::bernoulli_distribution(0.5)(rng_); }

 private:
  int leaf(int var) {
    const int id = next_id_++;
    const double p = uniform(0.05, 0.95);
    nodes_.push_back(SpnNode::leaf(id, var, Categorical{{p, 1.0 - p}}));
    return id;
  }

  int sum_of_leaves(int var) {
    const int id = next_id_++;
    const int arity = uniform_int(2, 3);
    std::vector<int> children;
    std::vector<double> weights;
    for (int k = 0; k < arity; ++k) {
      children.push_back(leaf(var));
      weights.push_back(uniform(0.1, 1.0));
    }
    normalize(weights);
    nodes_.push_back(SpnNode::sum(id, std::move(children), std::move(weights)));
    return id;
  }

  std::vector<std::vector<int>> random_partition(std::vector<int> scope) {
    std::shuffle(scope.begin(), scope.end(), rng_);
    const int n = static_cast<int>(scope.size());
    const int blocks = uniform_int(2, std::min(3, n));
    // Choose blocks-1 distinct cut points in [1, n-1].
    std::vector<int> cuts(n - 1);
    for (int i = 0; i < n - 1; ++i) cuts[i] = i + 1;
    std::shuffle(cuts.begin(), cuts.end(), rng_);
    cuts.resize(blocks - 1);
    std::sort(cuts.begin(), cuts.end());
    cuts.push_back(n);
    std::vector<std::vector<int>> out;
    int start = 0;
    for (int cut : cuts) {
      std::vector<int> block(scope.begin() + start, scope.begin() + cut);
      std::sort(block.begin(), block.end());
      out.push_back(std::move(block));
      start = cut;
    }
    return out;
  }

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  static void normalize(std::vector<double>& w) {
    double total = 0.0;
    for (double x : w) total += x;
    for (double& x : w) x /= total;
  }

  std::mt19937_64 rng_;
  int next_id_ = 0;
  std::vector<SpnNode> nodes_;
};

}  // namespace

SpnGraph random_spn(std::uint64_t seed, int n_vars, int max_depth) {
  if (n_vars < 1 || max_depth < 1) throw InputError("random_spn: n_vars and max_depth must be >= 1");
  RandomBuilder builder(seed);
  std::vector<int> scope(n_vars);
  for (int i = 0; i < n_vars; ++i) scope[i] = i;
  const bool root_sum = builder.coin();
  const int root = builder.build(std::move(scope), max_depth, root_sum);
  return SpnGraph(VariableSchema::binary(n_vars), builder.take_nodes(), root);
}

}  // namespace exspn

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "exspn/csi_tree.hpp"
#include "exspn/error.hpp"

namespace exspn {

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const SpnGraph& spn, CsiTree& tree) : spn_(spn), tree_(tree) {}

  void run() {
    const SpnNode& root = spn_.node(spn_.root());
    if (root.type == NodeType::kProduct) {
      const int top = add(-1, kVirtualOrigin, spn_.scope(root.id));
      tree_.nodes[static_cast<std::size_t>(top)].partition.push_back(spn_.scope(root.id));
      collect(top, root.id, false);
    } else {
      const int top = add(-1, root.id, spn_.scope(root.id));
      tree_.nodes[static_cast<std::size_t>(top)].partition.push_back(spn_.scope(root.id));
      if (root.type == NodeType::kSum)
        for (int c : root.children) collect(top, c, false);
    }
  }

 private:
  int add(int parent, int origin, const std::vector<int>& scope) {
    CsiNode n;
    n.id = static_cast<int>(tree_.nodes.size());
    n.parent = parent;
    n.origin = origin;
    n.scope = scope;
    tree_.nodes.push_back(std::move(n));
    if (parent >= 0) tree_.nodes[static_cast<std::size_t>(parent)].children.push_back(tree_.nodes.back().id);
    return tree_.nodes.back().id;
  }

  // `add_block`: whether `id`'s scope forms a block of `csi`'s partition
  // (true directly below a product, false below a dissolved sum).
  void collect(int csi, int id, bool add_block) {
    const SpnNode& n = spn_.node(id);
    switch (n.type) {
      case NodeType::kLeaf:
        if (add_block) tree_.nodes[static_cast<std::size_t>(csi)].partition.push_back({n.variable});
        break;
      case NodeType::kSum:
        if (add_block) tree_.nodes[static_cast<std::size_t>(csi)].partition.push_back(spn_.scope(id));
        for (int c : n.children) collect(csi, c, false);
        break;
      case NodeType::kProduct: {
        const int child = add(csi, id, spn_.scope(id));
        for (int c : n.children) collect(child, c, true);
        auto& blocks = tree_.nodes[static_cast<std::size_t>(child)].partition;
        std::sort(blocks.begin(), blocks.end());
        break;
      }
    }
  }

  const SpnGraph& spn_;
  CsiTree& tree_;
};

std::vector<std::size_t> intersect(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  std::vector<std::size_t> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::string fmt(double v) {
  if (std::isinf(v)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

CsiTree build_unlabeled_tree(const SpnGraph& spn_normal, const InstanceFunction* phi) {
  const auto report = validate(spn_normal);
  if (!report.ok()) throw ValidationError("build_unlabeled_tree: invalid SPN: " + report.describe());
  CsiTree tree;
  tree.schema = spn_normal.schema();
  TreeBuilder(spn_normal, tree).run();
  if (phi) populate_instances(tree, *phi);
  return tree;
}

void populate_instances(CsiTree& tree, const InstanceFunction& phi) {
  for (auto& n : tree.nodes) {
    std::vector<std::size_t> own;
    if (n.origin == kVirtualOrigin) {
      own.resize(phi.n_rows);
      for (std::size_t i = 0; i < phi.n_rows; ++i) own[i] = i;
    } else {
      own = phi.at(n.origin);
    }
    n.rows = n.parent < 0 ? std::move(own) : intersect(own, tree.nodes[static_cast<std::size_t>(n.parent)].rows);
    n.n_instances = n.rows.size();
  }
  tree.has_instances = true;
}

void compute_labels(CsiTree& tree, const DatasetTable& data, double lambda, const CartParams& params) {
  if (!tree.has_instances) throw ContractError("compute_labels: tree has no instance rows");
  if (!(data.schema() == tree.schema)) throw InputError("compute_labels: data schema differs from the tree schema");
  for (auto& n : tree.nodes) {
    if (n.parent < 0) continue;
    const CsiNode& parent = tree.nodes[static_cast<std::size_t>(n.parent)];
    std::vector<int> y(parent.rows.size());
    for (std::size_t i = 0; i < parent.rows.size(); ++i)
      y[i] = std::binary_search(n.rows.begin(), n.rows.end(), parent.rows[i]) ? 1 : 0;
    const CartTree cart = fit_cart(data, parent.rows, parent.scope, y, params);
    n.label = extract_context(cart, lambda);
    const auto pr = rule_precision_recall(n.label, data, parent.rows, y);
    n.precision = pr.precision;
    n.recall = pr.recall;
  }
  tree.labeled = true;
}

CsiTree compress(const CsiTree& tree, std::size_t min_instances) {
  CsiTree out;
  out.schema = tree.schema;
  out.has_instances = tree.has_instances;
  out.labeled = tree.labeled;
  std::function<void(int, int)> copy = [&](int old_id, int new_parent) {
    CsiNode n = tree.nodes[static_cast<std::size_t>(old_id)];
    n.id = static_cast<int>(out.nodes.size());
    n.parent = new_parent;
    n.children.clear();
    const auto old_children = tree.nodes[static_cast<std::size_t>(old_id)].children;
    out.nodes.push_back(std::move(n));
    const int self = out.nodes.back().id;
    if (new_parent >= 0) out.nodes[static_cast<std::size_t>(new_parent)].children.push_back(self);
    for (int c : old_children)
      if (tree.nodes[static_cast<std::size_t>(c)].n_instances >= min_instances) copy(c, self);
  };
  if (!tree.nodes.empty()) copy(0, -1);
  return out;
}

std::vector<CsiRule> enumerate_rules(const CsiTree& tree) {
  std::vector<CsiRule> rules;
  for (const auto& n : tree.nodes) {
    if (n.parent < 0 && n.partition.size() < 2) continue;
    if (n.parent >= 0 && tree.has_instances && n.n_instances == 0) continue;
    CsiRule r;
    r.node_id = n.id;
    r.blocks = n.partition;
    r.ni = n.n_instances;
    std::vector<const CsiNode*> path;
    for (const CsiNode* p = &n; p->parent >= 0; p = &tree.nodes[static_cast<std::size_t>(p->parent)]) path.push_back(p);
    std::reverse(path.begin(), path.end());
    for (const CsiNode* p : path) {
      r.context.literals.insert(r.context.literals.end(), p->label.literals.begin(), p->label.literals.end());
      r.mp = std::min(r.mp, p->precision);
      r.mr = std::min(r.mr, p->recall);
    }
    rules.push_back(std::move(r));
  }
  return rules;
}

Reduction reduce_rules(const std::vector<CsiRule>& rules, double mp_min, double mr_min, std::size_t ni_min) {
  Reduction out;
  for (const auto& r : rules) {
    const bool keep = r.mp >= mp_min && r.mr >= mr_min && r.ni >= ni_min;
    out.mask.push_back(keep);
    if (keep) out.kept.push_back(r);
  }
  if (!out.kept.empty())
    out.compression_ratio = static_cast<double>(rules.size()) / static_cast<double>(out.kept.size());
  return out;
}

RuleSummary summarize(std::size_t n_products, const std::vector<CsiRule>& all, const Reduction& reduced) {
  auto means = [](const std::vector<CsiRule>& rules, double& ma, double& mc) {
    ma = mc = 0.0;
    if (rules.empty()) return;
    for (const auto& r : rules) {
      ma += static_cast<double>(r.antecedent_length());
      mc += static_cast<double>(r.consequent_length());
    }
    ma /= static_cast<double>(rules.size());
    mc /= static_cast<double>(rules.size());
  };
  RuleSummary s;
  s.np = n_products;
  s.nr_all = all.size();
  means(all, s.ma_all, s.mc_all);
  s.nr_reduced = reduced.kept.size();
  means(reduced.kept, s.ma_reduced, s.mc_reduced);
  s.cr = reduced.compression_ratio;
  return s;
}

std::string render_blocks(const VariableSchema& schema, const std::vector<std::vector<int>>& blocks) {
  std::string out;
  for (const auto& b : blocks) {
    if (!out.empty()) out += " | ";
    for (std::size_t i = 0; i < b.size(); ++i) out += (i ? ", " : "") + schema[static_cast<std::size_t>(b[i])].name;
  }
  return out;
}

std::string export_dot(const CsiTree& tree) {
  std::ostringstream os;
  os << "digraph csi_tree {\n  node [shape=box];\n";
  for (const auto& n : tree.nodes)
    os << "  n" << n.id << " [label=\"" << dot_escape(render_blocks(tree.schema, n.partition)) << "\"];\n";
  for (const auto& n : tree.nodes)
    if (n.parent >= 0)
      os << "  n" << n.parent << " -> n" << n.id << " [label=\"" << dot_escape(n.label.render(tree.schema))
         << "\"];\n";
  os << "}\n";
  return os.str();
}

std::string rules_csv(const CsiTree& tree, const std::vector<CsiRule>& rules, const std::vector<bool>& kept) {
  std::ostringstream os;
  os << "node_id,context,blocks,antecedent_len,consequent_len,mp,mr,ni,kept\n";
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const auto& r = rules[i];
    os << r.node_id << "," << csv_quote(r.context.render(tree.schema)) << ","
       << csv_quote(render_blocks(tree.schema, r.blocks)) << "," << r.antecedent_length() << ","
       << r.consequent_length() << "," << fmt(r.mp) << "," << fmt(r.mr) << "," << r.ni << ","
       << (i < kept.size() && kept[i] ? 1 : 0) << "\n";
  }
  return os.str();
}

}  // namespace exspn

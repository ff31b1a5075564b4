#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "exspn/error.hpp"
#include "exspn/instance_fn.hpp"

namespace exspn {

const std::vector<std::size_t>& InstanceFunction::at(int id) const {
  const auto it = rows.find(id);
  if (it == rows.end()) throw ContractError("instance function has no entry for node " + std::to_string(id));
  return it->second;
}

std::vector<double> max_upward(const SpnGraph& spn, std::span<const double> row) {
  check_row(spn.schema(), row);
  std::vector<double> value(spn.nodes().size(), -std::numeric_limits<double>::infinity());
  for (std::size_t idx : spn.bottom_up_order()) {
    const SpnNode& n = spn.nodes()[idx];
    switch (n.type) {
      case NodeType::kLeaf:
        value[idx] = log_density(n.distribution, row[static_cast<std::size_t>(n.variable)]);
        break;
      case NodeType::kProduct: {
        double s = 0.0;
        for (int c : n.children) s += value[spn.index_of(c)];
        value[idx] = s;
        break;
      }
      case NodeType::kSum: {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < n.children.size(); ++k)
          best = std::max(best, std::log(n.weights[k]) + value[spn.index_of(n.children[k])]);
        value[idx] = best;
        break;
      }
    }
  }
  return value;
}

InstanceFunction infer_instance_function(const SpnGraph& spn, const DatasetTable& data) {
  if (!(data.schema() == spn.schema())) throw InputError("infer_instance_function: data schema differs from the SPN schema");
  InstanceFunction phi;
  phi.n_rows = data.rows();
  for (std::size_t idx : spn.bottom_up_order()) phi.rows[spn.nodes()[idx].id];
  std::vector<std::size_t> stamp(spn.nodes().size(), std::numeric_limits<std::size_t>::max());
  std::vector<int> stack;
  for (std::size_t r = 0; r < data.rows(); ++r) {
    const auto value = max_upward(spn, data.row(r));
    stack.assign(1, spn.root());
    while (!stack.empty()) {
      const int id = stack.back();
      stack.pop_back();
      const std::size_t idx = spn.index_of(id);
      if (stamp[idx] == r) continue;
      stamp[idx] = r;
      phi.rows[id].push_back(r);
      const SpnNode& n = spn.nodes()[idx];
      if (n.type == NodeType::kProduct) {
        stack.insert(stack.end(), n.children.begin(), n.children.end());
      } else if (n.type == NodeType::kSum) {
        int pick = -1;
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < n.children.size(); ++k) {
          const double v = std::log(n.weights[k]) + value[spn.index_of(n.children[k])];
          if (pick < 0 || v > best || (v == best && n.children[k] < pick)) {
            best = v;
            pick = n.children[k];
          }
        }
        stack.push_back(pick);
      }
    }
  }
  return phi;
}

InstanceFunction restrict_to(const InstanceFunction& phi, const SpnGraph& spn) {
  InstanceFunction out;
  out.n_rows = phi.n_rows;
  for (const auto& [id, rows] : phi.rows)
    if (spn.contains(id)) out.rows[id] = rows;
  return out;
}

std::vector<std::string> check_instance_function(const SpnGraph& spn, const InstanceFunction& phi) {
  std::vector<std::string> issues;
  auto missing = [&](int id) {
    if (phi.contains(id)) return false;
    issues.push_back("node " + std::to_string(id) + " has no entry");
    return true;
  };
  if (!missing(spn.root())) {
    const auto& root = phi.at(spn.root());
    bool all = root.size() == phi.n_rows;
    for (std::size_t i = 0; all && i < root.size(); ++i) all = root[i] == i;
    if (!all) issues.push_back("root set is not every row");
  }
  for (std::size_t idx : spn.bottom_up_order()) {
    const SpnNode& n = spn.nodes()[idx];
    if (n.type == NodeType::kLeaf || missing(n.id)) continue;
    const auto& parent = phi.at(n.id);
    if (!std::is_sorted(parent.begin(), parent.end()))
      issues.push_back("node " + std::to_string(n.id) + " set is not sorted");
    if (n.type == NodeType::kSum) {
      std::vector<std::size_t> merged;
      for (int c : n.children) {
        if (missing(c)) continue;
        merged.insert(merged.end(), phi.at(c).begin(), phi.at(c).end());
      }
      std::sort(merged.begin(), merged.end());
      if (std::adjacent_find(merged.begin(), merged.end()) != merged.end())
        issues.push_back("children of sum node " + std::to_string(n.id) + " overlap");
      merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
      if (merged != parent) issues.push_back("children of sum node " + std::to_string(n.id) + " do not cover it");
    } else {
      for (int c : n.children)
        if (!missing(c) && phi.at(c) != parent)
          issues.push_back("child " + std::to_string(c) + " of product node " + std::to_string(n.id) +
                           " does not carry the product's set");
    }
  }
  return issues;
}

std::string serialize(const InstanceFunction& phi) {
  nlohmann::json doc;
  doc["n_rows"] = phi.n_rows;
  doc["nodes"] = nlohmann::json::object();
  for (const auto& [id, rows] : phi.rows) doc["nodes"][std::to_string(id)] = rows;
  return doc.dump() + "\n";
}

InstanceFunction deserialize_instance_function(std::string_view text) {
  InstanceFunction phi;
  try {
    const auto doc = nlohmann::json::parse(text.begin(), text.end());
    phi.n_rows = doc.at("n_rows").get<std::size_t>();
    for (const auto& [key, rows] : doc.at("nodes").items()) {
      std::size_t used = 0;
      const int id = std::stoi(key, &used);
      if (used != key.size()) throw ParseError("instance function: bad node id '" + key + "'");
      auto v = rows.get<std::vector<std::size_t>>();
      for (std::size_t r : v)
        if (r >= phi.n_rows) throw ParseError("instance function: row index out of range at node " + key);
      phi.rows[id] = std::move(v);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("instance function: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw ParseError("instance function: bad node id");
  }
  return phi;
}

void save_instance_function(const InstanceFunction& phi, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write instance function '" + path + "'");
  out << serialize(phi);
}

InstanceFunction load_instance_function(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open instance function '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_instance_function(buf.str());
}

}  // namespace exspn

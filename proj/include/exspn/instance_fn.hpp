#pragma once

#include <map>
#include <string>
#include <vector>

#include "exspn/dataset.hpp"
#include "exspn/spn.hpp"

namespace exspn {

// φ: SPN node id -> sorted indices of the data rows that reach the node.
struct InstanceFunction {
  std::size_t n_rows = 0;
  std::map<int, std::vector<std::size_t>> rows;

  bool contains(int id) const { return rows.count(id) != 0; }
  // Throws ContractError when `id` has no entry.
  const std::vector<std::size_t>& at(int id) const;

  bool operator==(const InstanceFunction&) const = default;
};

// Per-node log S^max values, indexed like spn.nodes().
std::vector<double> max_upward(const SpnGraph& spn, std::span<const double> row);

// Max-product upward pass then argmax downward pass per row. Ties at a sum
// node go to the child with the smallest id. Every node on the selected
// sub-network receives the row.
InstanceFunction infer_instance_function(const SpnGraph& spn, const DatasetTable& data);

// Restricts `phi` to the nodes that exist in `spn`.
InstanceFunction restrict_to(const InstanceFunction& phi, const SpnGraph& spn);

// Checks φ(root) = all rows, that children of every sum node partition its
// set, and that children of every product node carry its set. Intended for
// tree-shaped SPNs; returns human-readable violations, empty when sound.
std::vector<std::string> check_instance_function(const SpnGraph& spn, const InstanceFunction& phi);

// {"n_rows": n, "nodes": {"<id>": [rows...]}}
std::string serialize(const InstanceFunction& phi);
InstanceFunction deserialize_instance_function(std::string_view text);
void save_instance_function(const InstanceFunction& phi, const std::string& path);
InstanceFunction load_instance_function(const std::string& path);

}  // namespace exspn

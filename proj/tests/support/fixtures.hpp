// Hand-built models and tables shared by several test files.
#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "exspn/dataset.hpp"
#include "exspn/instance_fn.hpp"
#include "exspn/spn.hpp"

namespace fixture {

using exspn::Column;
using exspn::ColumnKind;
using exspn::SpnNode;

inline exspn::VariableSchema continuous_schema(int n) {
  std::vector<Column> cols;
  for (int i = 0; i < n; ++i) cols.push_back(Column{"V" + std::to_string(i), ColumnKind::kContinuous, 0, {}});
  return exspn::VariableSchema(std::move(cols));
}

inline exspn::Gaussian g(double mean) { return exspn::Gaussian{mean, 0.1}; }

// The SPN drawn for the synthetic data: a root mixture of a V0-factorized
// product over the correlated components and one fully factorized product.
// Seven product nodes; the sum chain under node 2 is not collapsed here.
inline exspn::SpnGraph synthetic_seven_product_spn() {
  std::vector<SpnNode> n;
  n.push_back(SpnNode::sum(0, {1, 30}, {0.67, 0.33}));
  n.push_back(SpnNode::product(1, {2, 3}));
  n.push_back(SpnNode::leaf(2, 0, g(0.0)));
  n.push_back(SpnNode::sum(3, {4, 20}, {0.5, 0.5}));
  n.push_back(SpnNode::sum(4, {5, 9}, {0.49, 0.51}));
  n.push_back(SpnNode::product(5, {6, 7, 8}));
  n.push_back(SpnNode::leaf(6, 1, g(3.9)));
  n.push_back(SpnNode::leaf(7, 2, g(3.9)));
  n.push_back(SpnNode::leaf(8, 3, g(3.9)));
  n.push_back(SpnNode::product(9, {10, 11, 12}));
  n.push_back(SpnNode::leaf(10, 1, g(4.1)));
  n.push_back(SpnNode::leaf(11, 2, g(4.1)));
  n.push_back(SpnNode::leaf(12, 3, g(4.1)));
  n.push_back(SpnNode::product(20, {21, 22}));
  n.push_back(SpnNode::leaf(21, 1, g(8.0)));
  n.push_back(SpnNode::sum(22, {23, 26}, {0.52, 0.48}));
  n.push_back(SpnNode::product(23, {24, 25}));
  n.push_back(SpnNode::leaf(24, 2, g(7.9)));
  n.push_back(SpnNode::leaf(25, 3, g(7.9)));
  n.push_back(SpnNode::product(26, {27, 28}));
  n.push_back(SpnNode::leaf(27, 2, g(8.1)));
  n.push_back(SpnNode::leaf(28, 3, g(8.1)));
  n.push_back(SpnNode::product(30, {31, 32, 33, 34}));
  n.push_back(SpnNode::leaf(31, 0, g(2.0)));
  n.push_back(SpnNode::leaf(32, 1, g(2.0)));
  n.push_back(SpnNode::leaf(33, 2, g(2.0)));
  n.push_back(SpnNode::leaf(34, 3, g(2.0)));
  return exspn::SpnGraph(continuous_schema(4), std::move(n), 0);
}

inline exspn::VariableSchema write_study_pass_schema() {
  return exspn::VariableSchema({Column{"Write", ColumnKind::kDiscrete, 2, {"false", "true"}},
                                Column{"Study", ColumnKind::kDiscrete, 2, {"false", "true"}},
                                Column{"Pass", ColumnKind::kDiscrete, 2, {"false", "true"}}});
}

inline exspn::Categorical cat(double p1) { return exspn::Categorical{{1.0 - p1, p1}}; }

// Root mixture: product 1 holds the ¬Write rows with everything independent;
// product 5 holds the Write rows, where Study and Pass form one block that
// splits again by Study.
inline exspn::SpnGraph write_study_pass_spn() {
  std::vector<SpnNode> n;
  n.push_back(SpnNode::sum(0, {1, 5}, {0.5, 0.5}));
  n.push_back(SpnNode::product(1, {2, 3, 4}));
  n.push_back(SpnNode::leaf(2, 0, cat(0.05)));
  n.push_back(SpnNode::leaf(3, 1, cat(0.5)));
  n.push_back(SpnNode::leaf(4, 2, cat(0.5)));
  n.push_back(SpnNode::product(5, {6, 7}));
  n.push_back(SpnNode::leaf(6, 0, cat(0.95)));
  n.push_back(SpnNode::sum(7, {8, 11}, {0.5, 0.5}));
  n.push_back(SpnNode::product(8, {9, 10}));
  n.push_back(SpnNode::leaf(9, 1, cat(0.05)));
  n.push_back(SpnNode::leaf(10, 2, cat(0.2)));
  n.push_back(SpnNode::product(11, {12, 13}));
  n.push_back(SpnNode::leaf(12, 1, cat(0.95)));
  n.push_back(SpnNode::leaf(13, 2, cat(0.9)));
  return exspn::SpnGraph(write_study_pass_schema(), std::move(n), 0);
}

// Every (Write, Study, Pass) combination repeated `reps` times.
inline exspn::DatasetTable write_study_pass_data(int reps = 10) {
  exspn::RowMatrix m(8 * reps, 3);
  int r = 0;
  for (int k = 0; k < reps; ++k)
    for (int w = 0; w < 2; ++w)
      for (int s = 0; s < 2; ++s)
        for (int p = 0; p < 2; ++p, ++r) m.row(r) << w, s, p;
  return exspn::DatasetTable(write_study_pass_schema(), std::move(m));
}

// φ that sends ¬Write rows to product 1 and Write rows to product 5, then
// splits those by Study.
inline exspn::InstanceFunction write_study_pass_phi(const exspn::DatasetTable& data) {
  exspn::InstanceFunction phi;
  phi.n_rows = data.rows();
  for (int id : {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13}) phi.rows[id];
  for (std::size_t i = 0; i < data.rows(); ++i) {
    phi.rows[0].push_back(i);
    const bool w = data.at(i, 0) == 1.0, s = data.at(i, 1) == 1.0;
    for (int id : w ? std::vector<int>{5, 6, 7} : std::vector<int>{1, 2, 3, 4}) phi.rows[id].push_back(i);
    if (w)
      for (int id : s ? std::vector<int>{11, 12, 13} : std::vector<int>{8, 9, 10}) phi.rows[id].push_back(i);
  }
  return phi;
}

inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  auto dir = std::filesystem::temp_directory_path() / ("exspn_" + tag + "_" + std::to_string(rng()));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixture

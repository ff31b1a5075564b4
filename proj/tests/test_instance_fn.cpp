#include <cmath>
#include <random>

#include "doctest.h"
#include "exspn/error.hpp"
#include "exspn/instance_fn.hpp"
#include "exspn/learn.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace exspn;

TEST_CASE("max_upward: a single leaf carries its own log density") {
  SpnGraph spn(VariableSchema::binary(1), {SpnNode::leaf(0, 0, Categorical{{0.3, 0.7}})}, 0);
  CHECK(max_upward(spn, std::vector<double>{1.0})[0] == doctest::Approx(std::log(0.7)));
}

TEST_CASE("max_upward: the heavier child dominates a sum") {
  SpnGraph spn(VariableSchema::binary(1),
               {SpnNode::sum(0, {1, 2}, {0.9, 0.1}), SpnNode::leaf(1, 0, Categorical{{0.5, 0.5}}),
                SpnNode::leaf(2, 0, Categorical{{0.5, 0.5}})},
               0);
  const auto v = max_upward(spn, std::vector<double>{0.0});
  CHECK(std::exp(v[spn.index_of(0)]) == doctest::Approx(0.45));
}

TEST_CASE("max_upward never exceeds the sum-product value") {
  std::mt19937_64 rng(1);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto spn = random_spn(seed, 6, 4);
    std::vector<double> row(6);
    for (auto& x : row) x = static_cast<double>(rng() & 1);
    const double m = max_upward(spn, row)[spn.index_of(spn.root())];
    CHECK(m <= log_likelihood(spn, row) + 1e-12);
  }
}

TEST_CASE("infer: a product of leaves receives every row") {
  SpnGraph spn(VariableSchema::binary(2),
               {SpnNode::product(0, {1, 2}), SpnNode::leaf(1, 0, Categorical{{0.5, 0.5}}),
                SpnNode::leaf(2, 1, Categorical{{0.5, 0.5}})},
               0);
  RowMatrix m(4, 2);
  m << 0, 0, 0, 1, 1, 0, 1, 1;
  const auto phi = infer_instance_function(spn, DatasetTable(spn.schema(), m));
  CHECK(phi.at(0) == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(check_instance_function(spn, phi).empty());
}

TEST_CASE("infer: rows go to the nearer mixture component") {
  SpnGraph spn(fixture::continuous_schema(1),
               {SpnNode::sum(0, {1, 2}, {0.5, 0.5}), SpnNode::leaf(1, 0, Gaussian{-10, 1}),
                SpnNode::leaf(2, 0, Gaussian{10, 1})},
               0);
  RowMatrix m(3, 1);
  m << -10, 10, -9;
  const auto phi = infer_instance_function(spn, DatasetTable(spn.schema(), m));
  CHECK(phi.at(1) == std::vector<std::size_t>{0, 2});
  CHECK(phi.at(2) == std::vector<std::size_t>{1});
}

TEST_CASE("infer: ties go to the lowest child id") {
  SpnGraph spn(VariableSchema::binary(1),
               {SpnNode::sum(0, {5, 3}, {0.5, 0.5}), SpnNode::leaf(3, 0, Categorical{{0.5, 0.5}}),
                SpnNode::leaf(5, 0, Categorical{{0.5, 0.5}})},
               0);
  RowMatrix m(2, 1);
  m << 0, 1;
  const auto phi = infer_instance_function(spn, DatasetTable(spn.schema(), m));
  CHECK(phi.at(3) == std::vector<std::size_t>{0, 1});
  CHECK(phi.at(5).empty());
  CHECK(infer_instance_function(spn, DatasetTable(spn.schema(), m)) == phi);
}

TEST_CASE("infer: partition invariant on random SPNs") {
  std::mt19937_64 rng(2);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto spn = random_spn(seed, 5, 4);
    RowMatrix m(40, 5);
    for (int i = 0; i < 40; ++i)
      for (int j = 0; j < 5; ++j) m(i, j) = static_cast<double>(rng() & 1);
    const auto phi = infer_instance_function(spn, DatasetTable(spn.schema(), m));
    CHECK(check_instance_function(spn, phi).empty());
  }
}

TEST_CASE("infer vs recorded on the synthetic SPN: root proportions within 10%") {
  const auto split = split_train_test(generate_synthetic(0), 0.75, std::nullopt, 0);
  LearnParams p;
  p.min_instances_slice = 1125;
  const auto r = learn_spn(split.train, p);
  const auto inferred = infer_instance_function(r.spn, split.train);
  CHECK(check_instance_function(r.spn, inferred).empty());
  const auto& root = r.spn.node(r.spn.root());
  REQUIRE(root.type == NodeType::kSum);
  const double n = static_cast<double>(split.train.rows());
  for (int c : root.children) {
    const double rec = static_cast<double>(r.phi.at(c).size()) / n;
    const double inf = static_cast<double>(inferred.at(c).size()) / n;
    CHECK(std::fabs(rec - inf) <= 0.10);
  }
}

TEST_CASE("check_instance_function reports broken partitions") {
  const auto spn = fixture::write_study_pass_spn();
  const auto data = fixture::write_study_pass_data(2);
  auto phi = fixture::write_study_pass_phi(data);
  CHECK(check_instance_function(spn, phi).empty());
  phi.rows[1].push_back(phi.rows[5].front());  // one row in both sum children
  std::sort(phi.rows[1].begin(), phi.rows[1].end());
  CHECK_FALSE(check_instance_function(spn, phi).empty());
  phi = fixture::write_study_pass_phi(data);
  phi.rows[0].pop_back();
  CHECK_FALSE(check_instance_function(spn, phi).empty());
}

TEST_CASE("phi serialization round-trips and rejects bad documents") {
  const auto data = fixture::write_study_pass_data(2);
  const auto phi = fixture::write_study_pass_phi(data);
  CHECK(deserialize_instance_function(serialize(phi)) == phi);
  CHECK_THROWS_AS(deserialize_instance_function("{"), ParseError);
  CHECK_THROWS_AS(deserialize_instance_function(R"({"n_rows": 2, "nodes": {"0": [0, 5]}})"), ParseError);
  CHECK_THROWS_AS(deserialize_instance_function(R"({"n_rows": 2, "nodes": {"x": [0]}})"), ParseError);
  const auto dir = fixture::temp_dir("phi");
  save_instance_function(phi, (dir / "phi.json").string());
  CHECK(load_instance_function((dir / "phi.json").string()) == phi);
  CHECK_THROWS_AS(load_instance_function((dir / "none.json").string()), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("restrict_to keeps only nodes of the target SPN; at() throws for absent ids") {
  const auto data = fixture::write_study_pass_data(1);
  const auto phi = fixture::write_study_pass_phi(data);
  SpnGraph small(fixture::write_study_pass_schema(), {SpnNode::leaf(2, 0, Categorical{{0.5, 0.5}})}, 2);
  const auto r = restrict_to(phi, small);
  CHECK(r.rows.size() == 1);
  CHECK(r.contains(2));
  CHECK_THROWS_AS(r.at(0), ContractError);
}

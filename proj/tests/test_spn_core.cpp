#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "exspn/error.hpp"
#include "exspn/spn.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace exspn;

namespace {

double total_mass(const SpnGraph& spn) {
  double total = 0.0;
  for (const auto& row : oracle::all_assignments(spn.schema())) total += std::exp(log_likelihood(spn, row));
  return total;
}

SpnGraph two_leaf_sum(std::vector<int> scope_a, std::vector<int> scope_b) {
  // Children built as products (or leaves) over the given scopes.
  std::vector<SpnNode> nodes;
  int next = 1;
  auto build = [&](const std::vector<int>& scope) {
    if (scope.size() == 1) {
      nodes.push_back(SpnNode::leaf(next, scope[0], Categorical{{0.5, 0.5}}));
      return next++;
    }
    const int id = next++;
    std::vector<int> kids;
    for (int v : scope) {
      nodes.push_back(SpnNode::leaf(next, v, Categorical{{0.5, 0.5}}));
      kids.push_back(next++);
    }
    nodes.push_back(SpnNode::product(id, kids));
    return id;
  };
  const int a = build(scope_a);
  const int b = build(scope_b);
  nodes.push_back(SpnNode::sum(0, {a, b}, {0.5, 0.5}));
  return SpnGraph(VariableSchema::binary(2), std::move(nodes), 0);
}

}  // namespace

TEST_CASE("schema rejects duplicate names and low cardinality") {
  CHECK_THROWS_AS(VariableSchema({Column{"a", ColumnKind::kContinuous, 0, {}}, Column{"a", ColumnKind::kContinuous, 0, {}}}),
                  InputError);
  CHECK_THROWS_AS(VariableSchema({Column{"a", ColumnKind::kDiscrete, 1, {}}}), InputError);
  CHECK_THROWS_AS(VariableSchema({Column{"", ColumnKind::kContinuous, 0, {}}}), InputError);
}

TEST_CASE("validate: a single Gaussian leaf is valid") {
  SpnGraph spn(fixture::continuous_schema(1), {SpnNode::leaf(0, 0, Gaussian{0.0, 1.0})}, 0);
  CHECK(validate(spn).ok());
}

TEST_CASE("validate: sum over scopes {0} and {0,1} is one completeness violation") {
  const auto report = validate(two_leaf_sum({0}, {0, 1}));
  CHECK(report.count(ViolationKind::kCompleteness) == 1);
  CHECK(report.count(ViolationKind::kDecomposability) == 0);
}

TEST_CASE("validate: product over overlapping scopes is one decomposability violation") {
  SpnGraph spn(VariableSchema::binary(1),
               {SpnNode::product(0, {1, 2}), SpnNode::leaf(1, 0, Categorical{{0.5, 0.5}}),
                SpnNode::leaf(2, 0, Categorical{{0.5, 0.5}})},
               0);
  const auto report = validate(spn);
  CHECK(report.violations.size() == 1);
  CHECK(report.count(ViolationKind::kDecomposability) == 1);
  CHECK(report.violations.front().node_id == 0);
}

TEST_CASE("graph construction rejects cycles and dangling children") {
  auto schema = VariableSchema::binary(1);
  CHECK_THROWS_AS(SpnGraph(schema, {SpnNode::product(0, {1, 2}), SpnNode::leaf(1, 0, Categorical{{0.5, 0.5}})}, 0),
                  ValidationError);
  CHECK_THROWS_AS(SpnGraph(schema,
                           {SpnNode::product(0, {1, 2}), SpnNode::product(1, {0, 2}),
                            SpnNode::leaf(2, 0, Categorical{{0.5, 0.5}})},
                           0),
                  ValidationError);
}

TEST_CASE("log_likelihood of a single categorical leaf") {
  SpnGraph spn(VariableSchema::binary(1), {SpnNode::leaf(0, 0, Categorical{{0.25, 0.75}})}, 0);
  CHECK(log_likelihood(spn, std::vector<double>{1.0}) == doctest::Approx(std::log(0.75)).epsilon(1e-15));
}

TEST_CASE("log_likelihood of independent fair coins is log 0.25 everywhere") {
  SpnGraph spn(VariableSchema::binary(2),
               {SpnNode::product(0, {1, 2}), SpnNode::leaf(1, 0, Categorical{{0.5, 0.5}}),
                SpnNode::leaf(2, 1, Categorical{{0.5, 0.5}})},
               0);
  for (const auto& row : oracle::all_assignments(spn.schema()))
    CHECK(log_likelihood(spn, row) == doctest::Approx(std::log(0.25)));
}

TEST_CASE("log_likelihood of a Gaussian mixture matches the closed form") {
  const double s = 0.01;
  SpnGraph spn(fixture::continuous_schema(1),
               {SpnNode::sum(0, {1, 2}, {0.5, 0.5}), SpnNode::leaf(1, 0, Gaussian{-1.0, s}),
                SpnNode::leaf(2, 0, Gaussian{1.0, s})},
               0);
  auto pdf = [](double x, double m, double sd) {
    return std::exp(-0.5 * ((x - m) / sd) * ((x - m) / sd)) / (sd * std::sqrt(2 * M_PI));
  };
  for (double x : {-1.0, 1.0, 0.0, -0.995}) {
    const double expected = 0.5 * pdf(x, -1.0, s) + 0.5 * pdf(x, 1.0, s);
    const double got = log_likelihood(spn, std::vector<double>{x});
    if (expected > 0)
      CHECK(got == doctest::Approx(std::log(expected)).epsilon(1e-12));
    else
      CHECK(got < -1000.0);  // log-domain keeps underflowing densities finite
  }
}

TEST_CASE("log_likelihood rejects rows that do not fit the schema") {
  SpnGraph spn(VariableSchema::binary(1), {SpnNode::leaf(0, 0, Categorical{{0.5, 0.5}})}, 0);
  CHECK_THROWS_AS(log_likelihood(spn, std::vector<double>{0.0, 1.0}), InputError);
  CHECK_THROWS_AS(log_likelihood(spn, std::vector<double>{2.0}), InputError);
  CHECK_THROWS_AS(log_likelihood(spn, std::vector<double>{NAN}), InputError);
}

TEST_CASE("to_normal normalizes weights without touching structure") {
  SpnGraph spn(VariableSchema::binary(1),
               {SpnNode::sum(0, {1, 2}, {2.0, 2.0}), SpnNode::leaf(1, 0, Categorical{{0.2, 0.8}}),
                SpnNode::leaf(2, 0, Categorical{{0.7, 0.3}})},
               0);
  const auto n = to_normal(spn);
  CHECK(n.nodes().size() == 3);
  CHECK(n.node(0).weights == std::vector<double>{0.5, 0.5});
  CHECK(is_normal(n));
}

TEST_CASE("to_normal collapses product(product(A,B),C)") {
  auto leaf = [](int id, int v) { return SpnNode::leaf(id, v, Categorical{{0.3, 0.7}}); };
  SpnGraph spn(VariableSchema::binary(3),
               {SpnNode::product(0, {1, 4}), SpnNode::product(1, {2, 3}), leaf(2, 0), leaf(3, 1), leaf(4, 2)}, 0);
  const auto n = to_normal(spn);
  CHECK(n.count(NodeType::kProduct) == 1);
  CHECK(n.node(n.root()).children.size() == 3);
  CHECK(is_normal(n));
}

TEST_CASE("to_normal splices single-child nodes and keeps ids") {
  auto leaf = [](int id, int v) { return SpnNode::leaf(id, v, Categorical{{0.3, 0.7}}); };
  SpnGraph spn(VariableSchema::binary(2),
               {SpnNode::product(0, {1, 3}), SpnNode::sum(1, {2}, {1.0}), leaf(2, 0), leaf(3, 1)}, 0);
  const auto n = to_normal(spn);
  CHECK_FALSE(n.contains(1));
  CHECK(n.contains(2));
  CHECK(n.contains(3));
  CHECK(is_normal(n));
}

TEST_CASE("to_normal preserves the joint of random binary SPNs (brute force)") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto spn = random_spn(seed, 4, 4);
    const auto n = to_normal(spn);
    for (const auto& row : oracle::all_assignments(spn.schema()))
      CHECK(std::fabs(oracle::probability(spn, row) - std::exp(log_likelihood(n, row))) <= 1e-9);
    CHECK(total_mass(n) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("to_normal is idempotent and normalizes every sum to 1 +- 1e-12") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto n = to_normal(random_spn(seed, 5, 4));
    CHECK(structurally_equal(to_normal(n), n));
    for (const auto& node : n.nodes()) {
      if (node.type != NodeType::kSum) continue;
      double s = 0.0;
      for (double w : node.weights) s += w;
      CHECK(std::fabs(s - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("to_normal stays within the quadratic size bound") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto spn = random_spn(seed, 6, 4);
    const auto n = to_normal(spn);
    const std::size_t s = spn.nodes().size();
    CHECK(n.nodes().size() + n.edge_count() <= 2 * s * s);
  }
}

TEST_CASE("to_normal rejects invalid input") {
  CHECK_THROWS_AS(to_normal(two_leaf_sum({0}, {0, 1})), ValidationError);
}

TEST_CASE("serialize round-trip is exact, including the seven-product synthetic SPN") {
  const auto fig = fixture::synthetic_seven_product_spn();
  CHECK(validate(fig).ok());
  CHECK(deserialize(serialize(fig)) == fig);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto spn = random_spn(seed, 6, 4);
    CHECK(deserialize(serialize(spn)) == spn);
  }
  // Weights that need all 17 significant digits.
  SpnGraph odd(VariableSchema::binary(1),
               {SpnNode::sum(0, {1, 2}, {1.0 / 3.0, 2.0 / 3.0}), SpnNode::leaf(1, 0, Categorical{{0.1, 0.9}}),
                SpnNode::leaf(2, 0, Categorical{{1.0 / 7.0, 6.0 / 7.0}})},
               0);
  CHECK(deserialize(serialize(odd)) == odd);
}

TEST_CASE("deserialize: empty or truncated text is a parse error") {
  const auto text = serialize(fixture::synthetic_seven_product_spn());
  CHECK_THROWS_AS(deserialize(""), ParseError);
  CHECK_THROWS_AS(deserialize(text.substr(0, text.size() / 2)), ParseError);
  std::string bumped = text;
  const auto pos = bumped.find("\"version\": 1");
  REQUIRE(pos != std::string::npos);
  bumped.replace(pos, 12, "\"version\": 9");
  CHECK_THROWS_AS(deserialize(bumped), ParseError);
}

TEST_CASE("deserialize: weights 0.5/0.6 fail strict and renormalize lenient") {
  SpnGraph spn(VariableSchema::binary(1),
               {SpnNode::sum(0, {1, 2}, {0.5, 0.6}), SpnNode::leaf(1, 0, Categorical{{0.5, 0.5}}),
                SpnNode::leaf(2, 0, Categorical{{0.2, 0.8}})},
               0);
  const auto text = serialize(spn);
  CHECK_THROWS_AS(deserialize(text, LoadMode::kStrict), ValidationError);
  const auto loaded = deserialize(text, LoadMode::kLenient);
  CHECK(loaded.node(0).weights[0] == doctest::Approx(0.5 / 1.1));
  CHECK(loaded.node(0).weights[1] == doctest::Approx(0.6 / 1.1));
}

TEST_CASE("save_spn/load_spn round-trip and missing files") {
  const auto dir = fixture::temp_dir("spn");
  const auto path = (dir / "m.json").string();
  const auto spn = random_spn(3, 5, 3);
  save_spn(spn, path);
  CHECK(load_spn(path) == spn);
  CHECK_THROWS_AS(load_spn((dir / "absent.json").string()), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("random_spn: single leaf, determinism, validity") {
  const auto one = random_spn(7, 1, 1);
  CHECK(one.nodes().size() == 1);
  CHECK(one.node(one.root()).type == NodeType::kLeaf);
  CHECK(random_spn(11, 5, 3) == random_spn(11, 5, 3));
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto spn = random_spn(seed, 1 + static_cast<int>(seed % 6), 1 + static_cast<int>(seed % 4));
    CHECK(validate(spn).ok());
    CHECK(is_normal(spn));
  }
}

TEST_CASE("every valid SPN has total mass 1 over complete assignments") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto spn = random_spn(seed, 1 + static_cast<int>(seed % 8), 4);
    CHECK(total_mass(spn) == doctest::Approx(1.0).epsilon(1e-9));
    for (const auto& row : oracle::all_assignments(spn.schema())) {
      const double p = std::exp(log_likelihood(spn, row));
      CHECK(p > 0.0);
      CHECK(std::isfinite(p));
    }
  }
}

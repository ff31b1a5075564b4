#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "exspn/error.hpp"
#include "exspn/learn.hpp"
#include "fixtures.hpp"

using namespace exspn;

namespace {

std::vector<double> uniform(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

DatasetTable binary_table(const std::vector<std::vector<int>>& cols) {
  RowMatrix m(static_cast<Eigen::Index>(cols[0].size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < cols[j].size(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cols[j][i];
  return DatasetTable(VariableSchema::binary(static_cast<int>(cols.size())), std::move(m));
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = i;
  return r;
}

}  // namespace

TEST_CASE("params validation") {
  LearnParams p;
  CHECK_NOTHROW(p.check());
  p.rdc_threshold = 1.0;
  CHECK_THROWS_AS(p.check(), InputError);
  p = LearnParams{};
  p.n_row_clusters = 1;
  CHECK_THROWS_AS(p.check(), InputError);
  p = LearnParams{};
  p.min_instances_slice = 0;
  CHECK_THROWS_AS(p.check(), InputError);
  CHECK(default_min_instances_slice(22500) == 225);
  CHECK(default_min_instances_slice(10) == 1);
}

TEST_CASE("rdc: monotone transform scores near 1, constant scores 0") {
  const auto x = uniform(2000, 1);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::exp(3 * x[i]);
  CHECK(rdc(x, y) >= 0.99);
  CHECK(rdc(x, x) >= 0.99);
  std::vector<double> c(x.size(), 4.2);
  CHECK(rdc(x, c) == 0.0);
  CHECK_THROWS_AS(rdc(std::vector<double>(10, 1.0), std::vector<double>(10, 2.0)), InputError);
}

TEST_CASE("rdc: independent uniforms at n=5000 stay below 0.3 (simulation)") {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const double r = rdc(uniform(5000, 100 + s), uniform(5000, 900 + s), 20, 1.0 / 6.0, s);
    CHECK(r >= 0.0);
    worst = std::max(worst, r);
  }
  CHECK(worst < 0.3);
}

TEST_CASE("rdc: detects a non-monotone dependence") {
  const auto x = uniform(3000, 5);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = (x[i] - 0.5) * (x[i] - 0.5);
  CHECK(rdc(x, y) > 0.5);
}

TEST_CASE("canonical_correlation of single columns is |pearson|") {
  const auto a = uniform(500, 2), noise = uniform(500, 3);
  Eigen::MatrixXd fx(500, 1), fy(500, 1);
  for (int i = 0; i < 500; ++i) {
    fx(i, 0) = a[static_cast<std::size_t>(i)];
    fy(i, 0) = -a[static_cast<std::size_t>(i)] + noise[static_cast<std::size_t>(i)];
  }
  const double mx = fx.mean(), my = fy.mean();
  double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 500; ++i) {
    sxy += (fx(i, 0) - mx) * (fy(i, 0) - my);
    sxx += (fx(i, 0) - mx) * (fx(i, 0) - mx);
    syy += (fy(i, 0) - my) * (fy(i, 0) - my);
  }
  CHECK(canonical_correlation(fx, fy) == doctest::Approx(std::fabs(sxy / std::sqrt(sxx * syy))).epsilon(1e-9));
}

TEST_CASE("rdc_features shape and the empty constant case") {
  const auto x = uniform(100, 8);
  const auto f = rdc_features(x, 20, 1.0 / 6.0, 1);
  CHECK(f.rows() == 100);
  CHECK(f.cols() == 20);
  CHECK(rdc_features(std::vector<double>(100, 1.0), 20, 1.0 / 6.0, 1).size() == 0);
}

TEST_CASE("split_columns_rdc: x and y = x form one component") {
  const auto x = uniform(500, 4);
  RowMatrix m(500, 2);
  for (int i = 0; i < 500; ++i) m.row(i) << x[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(i)];
  DatasetTable t(fixture::continuous_schema(2), m);
  const auto comps = split_columns_rdc(t, all_rows(500), std::vector<int>{0, 1}, 0.3);
  CHECK(comps.size() == 1);
}

TEST_CASE("split_columns_rdc: third synthetic component groups V2,V3 only") {
  const auto syn = generate_synthetic(2);
  std::vector<std::size_t> rows;
  for (std::size_t i = 2 * kSyntheticRowsPerComponent; i < 3 * kSyntheticRowsPerComponent; ++i) rows.push_back(i);
  const auto comps = split_columns_rdc(syn, rows, std::vector<int>{0, 1, 2, 3}, 0.3);
  CHECK(comps == std::vector<std::vector<int>>{{0}, {1}, {2, 3}});
}

TEST_CASE("split_rows: separates two far clusters, all clusters non-empty") {
  RowMatrix m(200, 2);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 0.1);
  for (int i = 0; i < 200; ++i) m.row(i) << (i < 100 ? -5 : 5) + n(rng), (i < 100 ? -5 : 5) + n(rng);
  DatasetTable t(fixture::continuous_schema(2), m);
  const auto labels = split_rows(t, all_rows(200), std::vector<int>{0, 1}, 2, 1);
  for (int i = 1; i < 100; ++i) CHECK(labels[static_cast<std::size_t>(i)] == labels[0]);
  for (int i = 101; i < 200; ++i) CHECK(labels[static_cast<std::size_t>(i)] == labels[100]);
  CHECK(labels[0] != labels[100]);

  // Identical rows still yield non-empty clusters.
  RowMatrix same = RowMatrix::Constant(30, 2, 1.0);
  const auto l2 = split_rows(DatasetTable(fixture::continuous_schema(2), same), all_rows(30), std::vector<int>{0, 1}, 3, 0);
  std::set<int> used(l2.begin(), l2.end());
  CHECK(used.size() == 3);
}

TEST_CASE("fit_leaf: Laplace smoothing and the Gaussian floor") {
  const Column d{"d", ColumnKind::kDiscrete, 3, {}};
  const auto c = std::get<Categorical>(fit_leaf(std::vector<double>{0, 0, 1}, d));
  CHECK(c.probs[0] == doctest::Approx(3.0 / 6.0));
  CHECK(c.probs[1] == doctest::Approx(2.0 / 6.0));
  CHECK(c.probs[2] == doctest::Approx(1.0 / 6.0));
  const Column x{"x", ColumnKind::kContinuous, 0, {}};
  const auto g = std::get<Gaussian>(fit_leaf(std::vector<double>{1, 1, 1}, x));
  CHECK(g.mean == 1.0);
  CHECK(g.stddev == kGaussianStddevFloor);
  const auto g2 = std::get<Gaussian>(fit_leaf(std::vector<double>{0, 2}, x));
  CHECK(g2.stddev == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("learn_spn: one variable gives a single leaf with phi(root) = all rows") {
  RowMatrix m(50, 1);
  for (int i = 0; i < 50; ++i) m(i, 0) = i % 2;
  const auto r = learn_spn(DatasetTable(VariableSchema::binary(1), m), LearnParams{});
  CHECK(r.spn.nodes().size() == 1);
  CHECK(r.phi.at(r.spn.root()) == all_rows(50));
}

TEST_CASE("learn_spn: two independent binary columns give a product of leaves") {
  std::mt19937_64 rng(4);
  std::vector<int> a(2000), b(2000);
  for (int i = 0; i < 2000; ++i) {
    a[static_cast<std::size_t>(i)] = static_cast<int>(rng() & 1);
    b[static_cast<std::size_t>(i)] = static_cast<int>((rng() >> 7) & 1);
  }
  const auto r = learn_spn(binary_table({a, b}), LearnParams{20});
  const auto& root = r.spn.node(r.spn.root());
  CHECK(root.type == NodeType::kProduct);
  CHECK(root.children.size() == 2);
  CHECK(r.spn.count(NodeType::kSum) == 0);
}

TEST_CASE("learn_spn: output is normal, phi is sound, and learning is deterministic") {
  const auto data = load_csv(std::string(EXSPN_TEST_DATA_DIR) + "/iris.csv",
                             std::string(EXSPN_TEST_DATA_DIR) + "/iris.schema.json");
  LearnParams p;
  p.min_instances_slice = 15;
  p.seed = 3;
  const auto a = learn_spn(data, p);
  CHECK(is_normal(a.spn));
  CHECK(check_instance_function(a.spn, a.phi).empty());
  for (const auto& n : a.spn.nodes()) CHECK(a.phi.contains(n.id));
  const auto b = learn_spn(data, p);
  CHECK(serialize(a.spn) == serialize(b.spn));
  CHECK(a.phi == b.phi);
}

TEST_CASE("learn_spn: sum weights equal the recorded cluster proportions") {
  const auto syn = generate_synthetic(0).select_rows(all_rows(30000));
  LearnParams p;
  p.min_instances_slice = 1500;
  const auto r = learn_spn(syn, p);
  for (const auto& n : r.spn.nodes()) {
    if (n.type != NodeType::kSum) continue;
    const double parent = static_cast<double>(r.phi.at(n.id).size());
    for (std::size_t k = 0; k < n.children.size(); ++k)
      CHECK(n.weights[k] == doctest::Approx(static_cast<double>(r.phi.at(n.children[k]).size()) / parent));
  }
}

TEST_CASE("learn_spn: synthetic at mis = 5% separates the components") {
  const auto split = split_train_test(generate_synthetic(0), 0.75, std::nullopt, 0);
  LearnParams p;
  p.min_instances_slice = 1125;
  const auto r = learn_spn(split.train, p);
  CHECK(is_normal(r.spn));
  CHECK(r.spn.count(NodeType::kProduct) >= 3);
  // Some product separates V0 from the rest, as the first covariance block allows.
  bool v0_alone = false;
  for (const auto& n : r.spn.nodes()) {
    if (n.type != NodeType::kProduct || r.spn.scope(n.id).size() != 4) continue;
    for (int c : n.children) v0_alone = v0_alone || r.spn.scope(c) == std::vector<int>{0};
  }
  CHECK(v0_alone);
}

TEST_CASE("learn_spn: errors on too little data") {
  RowMatrix m(5, 2);
  m.setZero();
  LearnParams p;
  p.min_instances_slice = 10;
  CHECK_THROWS_AS(learn_spn(DatasetTable(VariableSchema::binary(2), m), p), InputError);
}

TEST_CASE("learn_spn: constant columns never abort") {
  RowMatrix m(200, 3);
  for (int i = 0; i < 200; ++i) m.row(i) << 1.0, i % 2, (i / 2) % 2;
  const auto r = learn_spn(DatasetTable(VariableSchema::binary(3), m), LearnParams{});
  CHECK(validate(r.spn).ok());
}

#include <algorithm>
#include <numeric>
#include <random>

#include "exspn/error.hpp"
#include "exspn/learn.hpp"

namespace exspn {

namespace {

constexpr double kRankThreshold = 1e-7;

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Orthonormal basis of the centered column space of `m`, rank-revealing.
Eigen::MatrixXd basis(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd centered = m.rowwise() - m.colwise().mean();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(centered.rows(), centered.cols());
  qr.setThreshold(kRankThreshold);
  qr.compute(centered);
  const auto r = qr.rank();
  if (r == 0) return {};
  return qr.householderQ() * Eigen::MatrixXd::Identity(centered.rows(), r);
}

}  // namespace

Eigen::MatrixXd rdc_features(std::span<const double> x, int k, double scale, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(x.size());
  if (n == 0 || std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); })) return {};

  // Empirical CDF: share of values <= x_i, so ties share one copula value.
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  Eigen::VectorXd u(n);
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && x[order[j]] == x[order[i]]) ++j;
    for (std::size_t t = i; t < j; ++t) u(static_cast<Eigen::Index>(order[t])) = static_cast<double>(j) / n;
    i = j;
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::MatrixXd w(2, k);
  for (int j = 0; j < k; ++j) {
    w(0, j) = normal(rng);
    w(1, j) = normal(rng);
  }
  Eigen::MatrixXd aug(n, 2);
  aug.col(0) = u;
  aug.col(1).setOnes();
  return (aug * w).array().sin().matrix();
}

double canonical_correlation(const Eigen::MatrixXd& fx, const Eigen::MatrixXd& fy) {
  if (fx.size() == 0 || fy.size() == 0) return 0.0;
  if (fx.rows() != fy.rows()) throw InputError("canonical_correlation: row count mismatch");
  const Eigen::MatrixXd qx = basis(fx);
  const Eigen::MatrixXd qy = basis(fy);
  if (qx.size() == 0 || qy.size() == 0) return 0.0;
  const Eigen::MatrixXd c = qx.transpose() * qy;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(c);
  return std::clamp(svd.singularValues()(0), 0.0, 1.0);
}

double rdc(std::span<const double> x, std::span<const double> y, int k, double scale, std::uint64_t seed) {
  if (x.size() != y.size()) throw InputError("rdc: columns differ in length");
  if (x.size() < kRdcMinRows) throw InputError("rdc: needs at least 20 rows");
  return canonical_correlation(rdc_features(x, k, scale, mix(seed, 0)), rdc_features(y, k, scale, mix(seed, 1)));
}

std::vector<std::vector<int>> split_columns_rdc(const DatasetTable& data, std::span<const std::size_t> rows,
                                                std::span<const int> vars, double threshold, int k,
                                                double scale, std::uint64_t seed) {
  const std::size_t m = vars.size();
  std::vector<Eigen::MatrixXd> feats(m);
  std::vector<double> col(rows.size());
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t i = 0; i < rows.size(); ++i) col[i] = data.at(rows[i], static_cast<std::size_t>(vars[a]));
    feats[a] = rdc_features(col, k, scale, mix(seed, static_cast<std::uint64_t>(vars[a])));
  }

  std::vector<std::size_t> parent(m);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b) {
      if (find(a) == find(b)) continue;
      if (canonical_correlation(feats[a], feats[b]) > threshold) parent[find(a)] = find(b);
    }

  std::vector<std::vector<int>> comps;
  std::vector<int> slot(m, -1);
  std::vector<std::size_t> by_var(m);
  std::iota(by_var.begin(), by_var.end(), 0);
  std::sort(by_var.begin(), by_var.end(), [&](std::size_t a, std::size_t b) { return vars[a] < vars[b]; });
  for (std::size_t a : by_var) {
    const std::size_t r = find(a);
    if (slot[r] < 0) {
      slot[r] = static_cast<int>(comps.size());
      comps.emplace_back();
    }
    comps[static_cast<std::size_t>(slot[r])].push_back(vars[a]);
  }
  return comps;
}

}  // namespace exspn

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "exspn/error.hpp"
#include "exspn/learn.hpp"

namespace exspn {

namespace {

constexpr int kKmeansRestarts = 5;
constexpr int kKmeansIterations = 50;
constexpr int kEmIterations = 100;
constexpr double kEmTolerance = 1e-3;
constexpr double kVarianceReg = 1e-6;

// Standardized continuous columns and one-hot discrete columns.
Eigen::MatrixXd cluster_features(const DatasetTable& data, std::span<const std::size_t> rows,
                                 std::span<const int> vars) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  std::vector<Eigen::VectorXd> cols;
  for (int v : vars) {
    const auto& column = data.schema()[static_cast<std::size_t>(v)];
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = data.at(rows[static_cast<std::size_t>(i)], static_cast<std::size_t>(v));
    if (column.discrete()) {
      for (int c = 0; c < column.cardinality; ++c) cols.push_back((x.array() == c).cast<double>().matrix());
    } else {
      const double mean = x.mean();
      const double sd = std::sqrt((x.array() - mean).square().mean());
      cols.push_back(sd > 0 ? Eigen::VectorXd((x.array() - mean) / sd) : Eigen::VectorXd::Zero(n));
    }
  }
  Eigen::MatrixXd f(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) f.col(static_cast<Eigen::Index>(j)) = cols[j];
  return f;
}

struct KMeans {
  Eigen::MatrixXd centers;
  std::vector<int> labels;
  double inertia = std::numeric_limits<double>::infinity();
};

KMeans kmeans(const Eigen::MatrixXd& f, int k, std::mt19937_64& rng) {
  const auto n = f.rows();
  KMeans best;
  for (int restart = 0; restart < kKmeansRestarts; ++restart) {
    // k-means++ seeding.
    Eigen::MatrixXd centers(k, f.cols());
    centers.row(0) = f.row(std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng));
    Eigen::VectorXd d2 = (f.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
      const double total = d2.sum();
      Eigen::Index pick = 0;
      if (total > 0) {
        double r = std::uniform_real_distribution<double>(0.0, total)(rng);
        for (pick = 0; pick < n - 1; ++pick) {
          r -= d2(pick);
          if (r <= 0) break;
        }
      } else {
        pick = std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng);
      }
      centers.row(c) = f.row(pick);
      d2 = d2.cwiseMin((f.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }

    std::vector<int> labels(static_cast<std::size_t>(n), -1);
    double inertia = 0.0;
    for (int it = 0; it < kKmeansIterations; ++it) {
      bool changed = false;
      inertia = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index c;
        inertia += (centers.rowwise() - f.row(i)).rowwise().squaredNorm().minCoeff(&c);
        if (labels[static_cast<std::size_t>(i)] != c) {
          labels[static_cast<std::size_t>(i)] = static_cast<int>(c);
          changed = true;
        }
      }
      if (!changed) break;
      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, f.cols());
      Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
      for (Eigen::Index i = 0; i < n; ++i) {
        sums.row(labels[static_cast<std::size_t>(i)]) += f.row(i);
        counts(labels[static_cast<std::size_t>(i)]) += 1;
      }
      for (int c = 0; c < k; ++c)
        if (counts(c) > 0) centers.row(c) = sums.row(c) / counts(c);
    }
    if (inertia < best.inertia) best = KMeans{centers, labels, inertia};
  }
  return best;
}

// Diagonal-covariance EM from the k-means partition; returns hard assignments.
std::vector<int> gmm_em(const Eigen::MatrixXd& f, const KMeans& init, int k) {
  const auto n = f.rows();
  const auto p = f.cols();
  Eigen::MatrixXd means = init.centers;
  Eigen::MatrixXd vars = Eigen::MatrixXd::Constant(k, p, kVarianceReg);
  Eigen::VectorXd weights = Eigen::VectorXd::Constant(k, 1.0 / k);
  {
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(k, p);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = init.labels[static_cast<std::size_t>(i)];
      counts(c) += 1;
      sq.row(c) += (f.row(i) - means.row(c)).array().square().matrix();
    }
    for (int c = 0; c < k; ++c) {
      if (counts(c) > 0) vars.row(c) = sq.row(c) / counts(c);
      weights(c) = std::max(counts(c), 1.0) / static_cast<double>(n);
    }
    weights /= weights.sum();
    vars.array() += kVarianceReg;
  }

  constexpr double kLog2Pi = 1.8378770664093453;
  Eigen::MatrixXd logr(n, k);
  double prev = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < kEmIterations; ++it) {
    for (int c = 0; c < k; ++c) {
      const double norm = std::log(weights(c)) - 0.5 * (p * kLog2Pi + vars.row(c).array().log().sum());
      const Eigen::RowVectorXd inv = vars.row(c).cwiseInverse();
      for (Eigen::Index i = 0; i < n; ++i)
        logr(i, c) = norm - 0.5 * ((f.row(i) - means.row(c)).array().square() * inv.array()).sum();
    }
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double m = logr.row(i).maxCoeff();
      const double lse = m + std::log((logr.row(i).array() - m).exp().sum());
      logr.row(i).array() -= lse;
      ll += lse;
    }
    ll /= static_cast<double>(n);
    const Eigen::MatrixXd r = logr.array().exp();
    const Eigen::VectorXd nk = r.colwise().sum().transpose();
    for (int c = 0; c < k; ++c) {
      if (nk(c) <= 0) continue;
      means.row(c) = (r.col(c).transpose() * f) / nk(c);
      vars.row(c) = (r.col(c).transpose() * (f.rowwise() - means.row(c)).array().square().matrix()) / nk(c);
      vars.row(c).array() += kVarianceReg;
      weights(c) = nk(c) / static_cast<double>(n);
    }
    weights = weights.cwiseMax(1e-300);
    if (std::abs(ll - prev) < kEmTolerance) break;
    prev = ll;
  }

  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index c;
    logr.row(i).maxCoeff(&c);
    labels[static_cast<std::size_t>(i)] = static_cast<int>(c);
  }
  return labels;
}

// Moves the point farthest from the largest cluster's mean into each empty
// cluster until all clusters are occupied.
void repair_empty(const Eigen::MatrixXd& f, std::vector<int>& labels, int k) {
  for (;;) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++counts[static_cast<std::size_t>(l)];
    const auto empty = std::find(counts.begin(), counts.end(), 0u);
    if (empty == counts.end()) return;
    const int largest = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(f.cols());
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == largest) mean += f.row(static_cast<Eigen::Index>(i));
    mean /= static_cast<double>(counts[static_cast<std::size_t>(largest)]);
    std::size_t far = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] != largest) continue;
      const double d = (f.row(static_cast<Eigen::Index>(i)) - mean).squaredNorm();
      if (d > best) {
        best = d;
        far = i;
      }
    }
    labels[far] = static_cast<int>(empty - counts.begin());
  }
}

}  // namespace

std::vector<int> split_rows(const DatasetTable& data, std::span<const std::size_t> rows, std::span<const int> vars,
                            int n_clusters, std::uint64_t seed) {
  if (n_clusters < 2) throw InputError("split_rows: n_clusters must be >= 2");
  if (rows.size() < static_cast<std::size_t>(n_clusters))
    throw InputError("split_rows: fewer rows than clusters");
  const Eigen::MatrixXd f = cluster_features(data, rows, vars);
  std::mt19937_64 rng(seed);
  const KMeans init = kmeans(f, n_clusters, rng);
  std::vector<int> labels = gmm_em(f, init, n_clusters);
  repair_empty(f, labels, n_clusters);
  return labels;
}

}  // namespace exspn

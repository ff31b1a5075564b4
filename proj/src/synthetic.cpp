#include <array>
#include <random>

#include <Eigen/Eigenvalues>

#include "exspn/dataset.hpp"

namespace exspn {

namespace {

struct Component {
  std::array<double, 4> mean;
  std::array<std::array<double, 4>, 4> cov;  // before the 0.01 scaling
};

const std::array<Component, 3> kComponents = {{
    {{2, 2, 2, 2}, {{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}}},
    {{-8, 4, 4, 4}, {{{1, 0, 0, 0}, {0, 1, 1, 1}, {0, 1, 1, 1}, {0, 1, 1, 1}}}},
    {{8, 8, 8, 8}, {{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 1}, {0, 0, 1, 1}}}},
}};

// Factor A with A * A^T = cov. Cholesky when cov is positive definite; the
// rank-deficient matrices go through an eigendecomposition with negative
// eigenvalues clamped to zero.
Eigen::Matrix4d factor(const Eigen::Matrix4d& cov) {
  Eigen::LLT<Eigen::Matrix4d> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(cov);
  const Eigen::Vector4d root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

}  // namespace

DatasetTable generate_synthetic(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  RowMatrix values(static_cast<Eigen::Index>(3 * kSyntheticRowsPerComponent), 4);
  Eigen::Index r = 0;
  for (const auto& comp : kComponents) {
    Eigen::Matrix4d cov;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) cov(i, j) = 0.01 * comp.cov[i][j];
    const Eigen::Matrix4d a = factor(cov);
    const Eigen::Vector4d mean(comp.mean[0], comp.mean[1], comp.mean[2], comp.mean[3]);
    for (std::size_t k = 0; k < kSyntheticRowsPerComponent; ++k, ++r) {
      Eigen::Vector4d z;
      for (int i = 0; i < 4; ++i) z(i) = normal(rng);
      values.row(r) = (mean + a * z).transpose();
    }
  }
  std::vector<Column> cols;
  for (int i = 0; i < 4; ++i) cols.push_back(Column{"V" + std::to_string(i), ColumnKind::kContinuous, 0, {}});
  return DatasetTable(VariableSchema(std::move(cols)), std::move(values));
}

std::vector<int> synthetic_labels() {
  std::vector<int> labels(3 * kSyntheticRowsPerComponent);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i / kSyntheticRowsPerComponent);
  return labels;
}

}  // namespace exspn

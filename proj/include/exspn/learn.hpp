#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "exspn/dataset.hpp"
#include "exspn/instance_fn.hpp"
#include "exspn/spn.hpp"

namespace exspn {

// Fewest rows the RDC estimate is defined for.
inline constexpr std::size_t kRdcMinRows = 20;

struct LearnParams {
  std::size_t min_instances_slice = 1;
  double rdc_threshold = 0.3;
  int n_row_clusters = 2;
  int rdc_features = 20;
  double rdc_scale = 1.0 / 6.0;
  std::uint64_t seed = 0;

  // Throws InputError when a field is out of range.
  void check() const;
};

// 1% of the training rows, at least one.
std::size_t default_min_instances_slice(std::size_t n_train);

struct LearnResult {
  SpnGraph spn;          // normal form
  InstanceFunction phi;  // recorded slices, restricted to nodes of `spn`
};

// LearnSPN: split columns by RDC connected components when possible, else
// split rows with a diagonal GMM; slices below min_instances_slice (or below
// kRdcMinRows) factorize into univariate leaves.
LearnResult learn_spn(const DatasetTable& train, const LearnParams& params);

// Random sinusoidal features of one column: sin([copula(x), 1] * W) with W
// drawn N(0, scale^2), shape n x k. A constant column yields an empty matrix.
Eigen::MatrixXd rdc_features(std::span<const double> x, int k, double scale, std::uint64_t seed);

// Largest canonical correlation between two feature blocks, in [0, 1].
double canonical_correlation(const Eigen::MatrixXd& fx, const Eigen::MatrixXd& fy);

double rdc(std::span<const double> x, std::span<const double> y, int k = 20, double scale = 1.0 / 6.0,
           std::uint64_t seed = 0);

// Connected components of the graph with an edge (i, j) iff rdc > threshold,
// over the columns `vars` of `rows`. Components are sorted by smallest member.
std::vector<std::vector<int>> split_columns_rdc(const DatasetTable& data, std::span<const std::size_t> rows,
                                                std::span<const int> vars, double threshold, int k = 20,
                                                double scale = 1.0 / 6.0, std::uint64_t seed = 0);

// Cluster index per row in [0, n_clusters); every cluster is non-empty.
std::vector<int> split_rows(const DatasetTable& data, std::span<const std::size_t> rows,
                            std::span<const int> vars, int n_clusters, std::uint64_t seed);

LeafDistribution fit_leaf(std::span<const double> values, const Column& column);

}  // namespace exspn

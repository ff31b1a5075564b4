#include <algorithm>
#include <cmath>

#include "exspn/error.hpp"
#include "exspn/learn.hpp"

namespace exspn {

namespace {

class Learner {
 public:
  Learner(const DatasetTable& data, const LearnParams& params) : data_(data), params_(params) {}

  int build(std::vector<std::size_t> rows, std::vector<int> vars) {
    const int id = next_id_++;
    if (vars.size() == 1) {
      emit_leaf(id, rows, vars.front());
    } else if (rows.size() < params_.min_instances_slice || rows.size() < kRdcMinRows) {
      factorize(id, rows, vars);
    } else {
      auto comps = split_columns_rdc(data_, rows, vars, params_.rdc_threshold, params_.rdc_features,
                                     params_.rdc_scale, next_seed());
      if (comps.size() > 1) {
        std::vector<int> children;
        for (auto& comp : comps) children.push_back(build(rows, std::move(comp)));
        nodes_.push_back(SpnNode::product(id, std::move(children)));
      } else {
        const int k = params_.n_row_clusters;
        if (rows.size() < static_cast<std::size_t>(k)) {
          factorize(id, rows, vars);
        } else {
          const auto labels = split_rows(data_, rows, vars, k, next_seed());
          std::vector<std::vector<std::size_t>> clusters(static_cast<std::size_t>(k));
          for (std::size_t i = 0; i < rows.size(); ++i) clusters[static_cast<std::size_t>(labels[i])].push_back(rows[i]);
          std::vector<int> children;
          std::vector<double> weights;
          for (auto& c : clusters) {
            weights.push_back(static_cast<double>(c.size()) / static_cast<double>(rows.size()));
            children.push_back(build(std::move(c), vars));
          }
          nodes_.push_back(SpnNode::sum(id, std::move(children), std::move(weights)));
        }
      }
    }
    phi_.rows[id] = std::move(rows);
    return id;
  }

  std::vector<SpnNode> take_nodes() { return std::move(nodes_); }
  InstanceFunction take_phi() { return std::move(phi_); }

 private:
  std::uint64_t next_seed() { return params_.seed * 0x9E3779B97F4A7C15ull + ++splits_; }

  void emit_leaf(int id, const std::vector<std::size_t>& rows, int var) {
    std::vector<double> values(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) values[i] = data_.at(rows[i], static_cast<std::size_t>(var));
    nodes_.push_back(SpnNode::leaf(id, var, fit_leaf(values, data_.schema()[static_cast<std::size_t>(var)])));
  }

  void factorize(int id, const std::vector<std::size_t>& rows, const std::vector<int>& vars) {
    std::vector<int> children;
    for (int v : vars) {
      const int leaf = next_id_++;
      emit_leaf(leaf, rows, v);
      phi_.rows[leaf] = rows;
      children.push_back(leaf);
    }
    nodes_.push_back(SpnNode::product(id, std::move(children)));
  }

  const DatasetTable& data_;
  const LearnParams& params_;
  int next_id_ = 0;
  std::uint64_t splits_ = 0;
  std::vector<SpnNode> nodes_;
  InstanceFunction phi_;
};

}  // namespace

void LearnParams::check() const {
  if (min_instances_slice < 1) throw InputError("min_instances_slice must be >= 1");
  if (!(rdc_threshold > 0.0 && rdc_threshold < 1.0)) throw InputError("rdc_threshold must lie in (0, 1)");
  if (n_row_clusters < 2) throw InputError("n_row_clusters must be >= 2");
  if (rdc_features < 1) throw InputError("rdc_features must be >= 1");
  if (!(rdc_scale > 0.0)) throw InputError("rdc_scale must be > 0");
}

std::size_t default_min_instances_slice(std::size_t n_train) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.01 * static_cast<double>(n_train))));
}

LeafDistribution fit_leaf(std::span<const double> values, const Column& column) {
  if (values.empty()) throw InputError("fit_leaf: no values");
  const double n = static_cast<double>(values.size());
  if (column.discrete()) {
    std::vector<double> counts(static_cast<std::size_t>(column.cardinality), 1.0);
    for (double v : values) counts[static_cast<std::size_t>(v)] += 1.0;
    for (double& c : counts) c /= n + column.cardinality;
    return Categorical{std::move(counts)};
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return Gaussian{mean, std::max(sd, kGaussianStddevFloor)};
}

LearnResult learn_spn(const DatasetTable& train, const LearnParams& params) {
  params.check();
  if (train.rows() == 0 || train.cols() == 0) throw InputError("learn_spn: empty training data");
  if (train.rows() < params.min_instances_slice)
    throw InputError("learn_spn: fewer training rows than min_instances_slice");
  Learner learner(train, params);
  std::vector<std::size_t> rows(train.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  std::vector<int> vars(train.cols());
  for (std::size_t j = 0; j < vars.size(); ++j) vars[j] = static_cast<int>(j);
  const int root = learner.build(std::move(rows), std::move(vars));
  auto nodes = learner.take_nodes();
  std::sort(nodes.begin(), nodes.end(), [](const SpnNode& a, const SpnNode& b) { return a.id < b.id; });
  SpnGraph raw(train.schema(), std::move(nodes), root);
  InstanceFunction phi = learner.take_phi();
  phi.n_rows = train.rows();
  SpnGraph normal = to_normal(raw);
  return LearnResult{normal, restrict_to(phi, normal)};
}

}  // namespace exspn

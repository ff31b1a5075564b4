#pragma once

#include <optional>
#include <string>
#include <vector>

#include "exspn/apriori.hpp"
#include "exspn/cart.hpp"
#include "exspn/csi_tree.hpp"
#include "exspn/dataset.hpp"
#include "exspn/instance_fn.hpp"
#include "exspn/learn.hpp"
#include "exspn/spn.hpp"

namespace exspn {

double mean_log_likelihood(const SpnGraph& spn, const DatasetTable& data);

// Where a named dataset comes from: "synthetic", a bundled table under
// `data_dir` (<name>.csv + <name>.schema.json), a registry entry fetched into
// `cache_dir` and read with data_dir/uci/<name>.schema.json, or an explicit
// csv + sidecar pair.
struct DatasetSource {
  std::string name;
  std::string csv_path;
  std::string schema_path;
  std::string data_dir;
  std::string cache_dir;
  std::uint64_t seed = 0;
};

DatasetTable load_dataset(const DatasetSource& source);

// 75/25 split, stratified on the table's target when it has one.
SplitPair split_dataset(const DatasetTable& table, std::uint64_t seed, double fraction = 0.75);

enum class InstanceMode { kRecorded, kInferred };

struct ExplainParams {
  InstanceMode mode = InstanceMode::kRecorded;
  double lambda = 0.0;
  CartParams cart;
  double min_precision = 0.7;
  double min_recall = 0.7;
  std::size_t min_rule_instances = 0;
  // Subtrees below this many rows are dropped before rules are enumerated.
  std::size_t compress_min_instances = 0;
};

struct Explanation {
  SpnGraph normal;
  InstanceFunction phi;
  CsiTree tree;
  std::vector<CsiRule> rules;
  Reduction reduced;
  RuleSummary summary;
};

// to_normal -> φ (recorded or inferred on `data`) -> tree -> labels ->
// compress -> rules -> reduction. Recorded mode needs `recorded` indexed by
// the rows of `data`.
Explanation explain(const SpnGraph& spn, const DatasetTable& data, const InstanceFunction* recorded,
                    const ExplainParams& params);

// dataset,mode,NP,NR_all,MA_all,MC_all,NR_reduced,MA_reduced,MC_reduced,CR
std::string explain_summary_csv(const std::string& dataset, InstanceMode mode, const RuleSummary& s);

struct BaselineResult {
  std::vector<AssocRule> rules;
  std::vector<double> test_confidence;  // parallel to rules
  RuleStats stats;
  std::string rules_csv;  // antecedent,consequent,support,confidence,test_confidence
};

BaselineResult run_baseline(const DatasetTable& train, const DatasetTable& test, const AprioriConfig& config);

// dataset,NR,MA,MC,TC,min_support,min_confidence
std::string baseline_summary_csv(const std::string& dataset, const RuleStats& s, const AprioriConfig& config);

inline const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols = {"dataset",    "NP",          "NR_all",      "MA_all",
                                                "MC_all",     "NR_reduced",  "MA_reduced",  "MC_reduced",
                                                "CR",         "NR_assoc",    "MA_assoc",    "MC_assoc"};
  return cols;
}

struct Report {
  std::vector<std::vector<std::string>> rows;  // cells in report_columns() order

  std::string csv() const;
  std::string table() const;  // aligned text for terminals
};

// Merges every summary.csv and baseline_summary.csv found under `dir`, one
// row per dataset; association columns stay blank without a baseline.
Report build_report(const std::string& dir);

std::string format_number(double v);

}  // namespace exspn

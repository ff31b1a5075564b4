#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "exspn/spn.hpp"

namespace exspn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Columnar table with a schema. Discrete cells hold integer codes in [0, k).
class DatasetTable {
 public:
  DatasetTable() = default;
  DatasetTable(VariableSchema schema, RowMatrix values, std::vector<long> row_ids = {});

  const VariableSchema& schema() const { return schema_; }
  const RowMatrix& values() const { return values_; }
  std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values_.cols()); }

  std::span<const double> row(std::size_t i) const { return {values_.row(i).data(), cols()}; }
  double at(std::size_t r, std::size_t c) const { return values_(r, c); }
  Eigen::VectorXd column(std::size_t c) const { return values_.col(c); }

  // Original row identifiers (e.g. line numbers of the source file).
  const std::vector<long>& row_ids() const { return row_ids_; }

  DatasetTable select_rows(std::span<const std::size_t> rows) const;

  // Name of the column designated as the classification target, if any.
  const std::optional<std::string>& target() const { return target_; }
  void set_target(std::optional<std::string> name) { target_ = std::move(name); }

 private:
  VariableSchema schema_;
  RowMatrix values_;
  std::vector<long> row_ids_;
  std::optional<std::string> target_;
};

// Three 4-D Gaussians, 10,000 rows each, stored component by component
// (rows [0, 10000) come from the first component, and so on).
inline constexpr std::size_t kSyntheticRowsPerComponent = 10000;
DatasetTable generate_synthetic(std::uint64_t seed);
// Generating component of every synthetic row, in table order.
std::vector<int> synthetic_labels();

// Schema sidecar document (JSON):
//   {"columns": [{"name": ..., "kind": "discrete"|"continuous",
//                 "categories": [...], "infer_categories": bool}],
//    "target": "<column>", "header": true, "delimiter": ",",
//    "missing": ["?", ""], "skip_columns": [...]}
struct CsvSchema {
  std::vector<Column> columns;
  std::vector<bool> infer_categories;
  std::optional<std::string> target;
  bool header = true;
  std::string delimiter = ",";  // "whitespace" splits on runs of blanks
  std::vector<std::string> missing = {"?", ""};
  std::vector<std::string> skip_columns;  // header-less files: positional names to drop
};

CsvSchema load_csv_schema(const std::string& sidecar_path);
DatasetTable load_csv(const std::string& csv_path, const std::string& sidecar_path);
// Rows in which any cell matches a missing-value marker are dropped and
// counted in `dropped_rows`.
DatasetTable load_csv(const std::string& csv_path, const CsvSchema& schema,
                      std::size_t* dropped_rows = nullptr);

// Writes the table as CSV (category labels for discrete cells) plus a sidecar
// that load_csv reads back to an identical table.
void save_csv(const DatasetTable& table, const std::string& csv_path, const std::string& sidecar_path);

struct UciDataset {
  std::string name;
  std::vector<std::string> urls;  // concatenated in order
  std::string extension;
  bool skip_header_after_first = false;
  std::string sha256;  // pinned digest of the assembled file; empty = record on first download
};

const std::vector<UciDataset>& uci_registry();

// Downloads (or reuses) `<cache>/<name>/raw.<ext>`, recording its length and
// SHA-256 in `<cache>/<name>/meta` and verifying them on every later call.
// The base URL can be redirected with the EXSPN_UCI_MIRROR environment
// variable (a prefix replacing the UCI archive root, e.g. file:///mirror).
std::string fetch_uci(const std::string& name, const std::string& cache_dir);

std::string sha256_file(const std::string& path);

struct SplitPair {
  DatasetTable train;
  DatasetTable test;
  std::vector<std::size_t> train_rows;  // indices into the source table
  std::vector<std::size_t> test_rows;
  double fraction = 0.75;
  std::optional<std::string> stratify;
  std::uint64_t seed = 0;
};

SplitPair split_train_test(const DatasetTable& table, double fraction = 0.75,
                           std::optional<std::string> stratify = std::nullopt, std::uint64_t seed = 0);

}  // namespace exspn

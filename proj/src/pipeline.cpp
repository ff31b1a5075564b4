#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "exspn/error.hpp"
#include "exspn/pipeline.hpp"

namespace exspn {

namespace fs = std::filesystem;

namespace {

const char* mode_name(InstanceMode m) { return m == InstanceMode::kRecorded ? "recorded" : "inferred"; }

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else if (c != '\r') {
      out.back() += c;
    }
  }
  return out;
}

// Header-keyed rows of a small CSV file.
std::vector<std::map<std::string, std::string>> read_keyed_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) return {};
  const auto header = split_csv(line);
  std::vector<std::map<std::string, std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i) row[header[i]] = cells[i];
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string format_number(double v) {
  if (std::isinf(v)) return "inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double mean_log_likelihood(const SpnGraph& spn, const DatasetTable& data) {
  if (!(data.schema() == spn.schema())) throw InputError("data schema differs from the SPN schema");
  double total = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) total += log_likelihood(spn, data.row(i));
  return total / static_cast<double>(data.rows());
}

DatasetTable load_dataset(const DatasetSource& source) {
  if (!source.csv_path.empty()) {
    std::string sidecar = source.schema_path;
    if (sidecar.empty()) {
      fs::path p(source.csv_path);
      sidecar = (p.parent_path() / (p.stem().string() + ".schema.json")).string();
    }
    if (!fs::exists(source.csv_path)) throw IoError("data file '" + source.csv_path + "' does not exist");
    if (!fs::exists(sidecar)) throw IoError("schema sidecar '" + sidecar + "' does not exist");
    return load_csv(source.csv_path, sidecar);
  }
  if (source.name == "synthetic") return generate_synthetic(source.seed);
  const fs::path dir(source.data_dir);
  const fs::path bundled = dir / (source.name + ".csv");
  if (!source.data_dir.empty() && fs::exists(bundled))
    return load_csv(bundled.string(), (dir / (source.name + ".schema.json")).string());
  for (const auto& d : uci_registry()) {
    if (d.name != source.name) continue;
    if (source.cache_dir.empty()) throw InputError("dataset '" + source.name + "' needs a cache directory");
    const std::string raw = fetch_uci(d.name, source.cache_dir);
    return load_csv(raw, (dir / "uci" / (d.name + ".schema.json")).string());
  }
  std::string names = "synthetic";
  if (!source.data_dir.empty() && fs::is_directory(dir))
    for (const auto& e : fs::directory_iterator(dir))
      if (e.path().extension() == ".csv") names += ", " + e.path().stem().string();
  for (const auto& d : uci_registry()) names += ", " + d.name;
  throw InputError("unknown dataset '" + source.name + "'; available: " + names);
}

SplitPair split_dataset(const DatasetTable& table, std::uint64_t seed, double fraction) {
  return split_train_test(table, fraction, table.target(), seed);
}

Explanation explain(const SpnGraph& spn, const DatasetTable& data, const InstanceFunction* recorded,
                    const ExplainParams& params) {
  params.cart.check();
  if (!(data.schema() == spn.schema())) throw InputError("explain: data schema differs from the SPN schema");
  Explanation out;
  out.normal = to_normal(spn);
  if (params.mode == InstanceMode::kRecorded) {
    if (!recorded) throw ContractError("explain: recorded mode needs the instance function saved at learning time");
    if (recorded->n_rows != data.rows())
      throw InputError("explain: instance function covers " + std::to_string(recorded->n_rows) +
                       " rows but the data has " + std::to_string(data.rows()));
    out.phi = restrict_to(*recorded, out.normal);
  } else {
    out.phi = infer_instance_function(out.normal, data);
  }
  CsiTree full = build_unlabeled_tree(out.normal, &out.phi);
  compute_labels(full, data, params.lambda, params.cart);
  out.tree = compress(full, params.compress_min_instances);
  out.rules = enumerate_rules(out.tree);
  out.reduced = reduce_rules(out.rules, params.min_precision, params.min_recall, params.min_rule_instances);
  out.summary = summarize(out.normal.count(NodeType::kProduct), out.rules, out.reduced);
  return out;
}

std::string explain_summary_csv(const std::string& dataset, InstanceMode mode, const RuleSummary& s) {
  std::ostringstream os;
  os << "dataset,mode,NP,NR_all,MA_all,MC_all,NR_reduced,MA_reduced,MC_reduced,CR\n"
     << csv_cell(dataset) << "," << mode_name(mode) << "," << s.np << "," << s.nr_all << ","
     << format_number(s.ma_all) << "," << format_number(s.mc_all) << "," << s.nr_reduced << ","
     << format_number(s.ma_reduced) << "," << format_number(s.mc_reduced) << "," << format_number(s.cr) << "\n";
  return os.str();
}

BaselineResult run_baseline(const DatasetTable& train, const DatasetTable& test, const AprioriConfig& config) {
  config.check();
  const Binarizer bin(train, config);
  const Transactions tt = bin.transform(train);
  const Transactions te = bin.transform(test);
  BaselineResult out;
  out.rules = generate_rules(apriori(tt, config.min_support), config.min_confidence);
  out.stats = rule_stats(out.rules, te);
  std::ostringstream os;
  os << "antecedent,consequent,support,confidence,test_confidence\n";
  for (const auto& r : out.rules) {
    out.test_confidence.push_back(test_confidence(r, te));
    os << csv_cell(render_itemset(tt, r.antecedent)) << "," << csv_cell(render_itemset(tt, r.consequent)) << ","
       << format_number(r.support) << "," << format_number(r.confidence) << ","
       << format_number(out.test_confidence.back()) << "\n";
  }
  out.rules_csv = os.str();
  return out;
}

std::string baseline_summary_csv(const std::string& dataset, const RuleStats& s, const AprioriConfig& config) {
  std::ostringstream os;
  os << "dataset,NR,MA,MC,TC,min_support,min_confidence\n"
     << csv_cell(dataset) << "," << s.nr << "," << format_number(s.mean_antecedent) << ","
     << format_number(s.mean_consequent) << "," << format_number(s.mean_test_confidence) << ","
     << format_number(config.min_support) << "," << format_number(config.min_confidence) << "\n";
  return os.str();
}

Report build_report(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("results directory '" + dir + "' does not exist");
  std::map<std::string, std::vector<std::string>> rows;
  const auto& cols = report_columns();
  auto row_for = [&](const std::string& name) -> std::vector<std::string>& {
    auto& r = rows[name];
    if (r.empty()) {
      r.assign(cols.size(), "");
      r[0] = name;
    }
    return r;
  };
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const auto fname = f.filename().string();
    if (fname == "summary.csv") {
      for (const auto& r : read_keyed_csv(f)) {
        auto& out = row_for(r.count("dataset") ? r.at("dataset") : f.parent_path().filename().string());
        for (std::size_t c = 1; c <= 8; ++c)
          if (r.count(cols[c])) out[c] = r.at(cols[c]);
      }
    } else if (fname == "baseline_summary.csv") {
      for (const auto& r : read_keyed_csv(f)) {
        auto& out = row_for(r.count("dataset") ? r.at("dataset") : f.parent_path().filename().string());
        if (r.count("NR")) out[9] = r.at("NR");
        if (r.count("MA")) out[10] = r.at("MA");
        if (r.count("MC")) out[11] = r.at("MC");
      }
    }
  }
  if (rows.empty()) throw InputError("results directory '" + dir + "' holds no explain or baseline outputs");
  Report report;
  for (auto& [name, r] : rows) report.rows.push_back(std::move(r));
  return report;
}

std::string Report::csv() const {
  std::ostringstream os;
  const auto& cols = report_columns();
  for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c];
  os << "\n";
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << csv_cell(r[c]);
    os << "\n";
  }
  return os.str();
}

std::string Report::table() const {
  const auto& cols = report_columns();
  std::vector<std::size_t> width(cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    width[c] = cols[c].size();
    for (const auto& r : rows) width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string pad(width[c] - cells[c].size(), ' ');
      os << (c ? "  " : "") << (c ? pad + cells[c] : cells[c] + pad);
    }
    os << "\n";
  };
  line(cols);
  for (const auto& r : rows) line(r);
  return os.str();
}

}  // namespace exspn

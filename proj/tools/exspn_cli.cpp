// exspn command-line tool. Talks to the library only through exspn.h.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "exspn/exspn.h"
#include "json.hpp"

#ifndef EXSPN_DATA_DIR
#define EXSPN_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Failure {
  int code;
  std::string message;
};

int exit_code(exspn_status s) {
  switch (s) {
    case EXSPN_OK: return 0;
    case EXSPN_ERR_INPUT:
    case EXSPN_ERR_PARSE:
    case EXSPN_ERR_IO:
    case EXSPN_ERR_NETWORK:
    case EXSPN_ERR_CHECKSUM: return 2;
    default: return 1;
  }
}

void check(exspn_status s) {
  if (s != EXSPN_OK) throw Failure{exit_code(s), exspn_last_error()};
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Dataset = std::unique_ptr<exspn_dataset, Deleter<exspn_dataset, exspn_dataset_free>>;
using Spn = std::unique_ptr<exspn_spn, Deleter<exspn_spn, exspn_spn_free>>;
using Phi = std::unique_ptr<exspn_phi, Deleter<exspn_phi, exspn_phi_free>>;
using Explanation = std::unique_ptr<exspn_explanation, Deleter<exspn_explanation, exspn_explanation_free>>;
using Baseline = std::unique_ptr<exspn_baseline, Deleter<exspn_baseline, exspn_baseline_free>>;

std::string take(char* s) {
  std::string out = s ? s : "";
  exspn_string_free(s);
  return out;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw Failure{2, "cannot write '" + path.string() + "'"};
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Failure{2, "cannot create directory '" + dir + "': " + ec.message()};
}

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

struct DatasetArgs {
  std::string name;
  std::string csv;
  std::string schema;
  std::string data_dir = EXSPN_DATA_DIR;
  std::string cache_dir = ".exspn_cache";

  void add(CLI::App* cmd) {
    cmd->add_option("--dataset", name, "synthetic, a bundled table, or a registry name");
    cmd->add_option("--csv", csv, "explicit data file (overrides --dataset)");
    cmd->add_option("--schema", schema, "schema sidecar for --csv");
    cmd->add_option("--data-dir", data_dir, "directory of bundled tables and sidecars");
    cmd->add_option("--cache", cache_dir, "download cache for registry datasets");
  }

  std::string label() const {
    if (!name.empty()) return name;
    return fs::path(csv).stem().string();
  }

  bool synthetic() const { return csv.empty() && name == "synthetic"; }

  Dataset load(std::uint64_t seed) const {
    if (name.empty() && csv.empty()) throw Failure{2, "one of --dataset or --csv is required"};
    exspn_dataset* d = nullptr;
    check(exspn_dataset_load(opt(name), opt(csv), opt(schema), opt(data_dir), opt(cache_dir), seed, &d));
    return Dataset(d);
  }
};

std::pair<Dataset, Dataset> split(const exspn_dataset* data, std::uint64_t seed) {
  exspn_dataset *tr = nullptr, *te = nullptr;
  check(exspn_dataset_split(data, 0.75, seed, &tr, &te));
  return {Dataset(tr), Dataset(te)};
}

// Row threshold defaults: 1% of the training rows, 5% for synthetic.
std::size_t default_mis(std::size_t n_train, bool synthetic) {
  const double f = synthetic ? 0.05 : 0.01;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(f * static_cast<double>(n_train))));
}

json read_meta(const fs::path& run_dir) {
  const fs::path p = run_dir / "meta.json";
  std::ifstream in(p);
  if (!in) return json::object();
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Failure{2, "cannot parse '" + p.string() + "': " + e.what()};
  }
}

Dataset load_run_table(const fs::path& run_dir, const std::string& stem) {
  const auto csv = (run_dir / (stem + ".csv")).string();
  const auto schema = (run_dir / (stem + ".schema.json")).string();
  exspn_dataset* d = nullptr;
  check(exspn_dataset_load(nullptr, csv.c_str(), schema.c_str(), nullptr, nullptr, 0, &d));
  return Dataset(d);
}

// ---------------------------------------------------------------- learn

struct LearnArgs {
  DatasetArgs data;
  std::string out_dir = "run";
  std::uint64_t seed = 0;
  std::optional<std::size_t> mis;
  double rdc_threshold = 0.3;
  int n_row_clusters = 2;
};

void cmd_learn(const LearnArgs& a) {
  Dataset all = a.data.load(a.seed);
  auto [train, test] = split(all.get(), a.seed);
  exspn_learn_params p;
  exspn_learn_params_default(&p, exspn_dataset_rows(train.get()));
  p.min_instances_slice = a.mis.value_or(default_mis(exspn_dataset_rows(train.get()), a.data.synthetic()));
  p.rdc_threshold = a.rdc_threshold;
  p.n_row_clusters = a.n_row_clusters;
  p.seed = a.seed;

  exspn_spn* s = nullptr;
  exspn_phi* f = nullptr;
  check(exspn_learn(train.get(), &p, &s, &f));
  Spn spn(s);
  Phi phi(f);
  double ll = 0.0;
  check(exspn_spn_mean_log_likelihood(spn.get(), test.get(), &ll));

  ensure_dir(a.out_dir);
  const fs::path dir(a.out_dir);
  check(exspn_spn_save(spn.get(), (dir / "spn.json").c_str()));
  check(exspn_phi_save(phi.get(), (dir / "phi.json").c_str()));
  check(exspn_dataset_save(train.get(), (dir / "train.csv").c_str(), (dir / "train.schema.json").c_str()));
  check(exspn_dataset_save(test.get(), (dir / "test.csv").c_str(), (dir / "test.schema.json").c_str()));
  const json meta = {{"dataset", a.data.label()},
                     {"synthetic", a.data.synthetic()},
                     {"seed", a.seed},
                     {"min_instances_slice", p.min_instances_slice},
                     {"rdc_threshold", p.rdc_threshold},
                     {"n_row_clusters", p.n_row_clusters},
                     {"train_rows", exspn_dataset_rows(train.get())},
                     {"test_rows", exspn_dataset_rows(test.get())},
                     {"test_ll", ll}};
  write_file(dir / "meta.json", meta.dump(2) + "\n");

  std::printf("dataset %s: %zu train rows, %zu test rows, min_instances_slice %zu\n", a.data.label().c_str(),
              exspn_dataset_rows(train.get()), exspn_dataset_rows(test.get()), p.min_instances_slice);
  std::printf("nodes: %zu sum, %zu product, %zu leaf\n", exspn_spn_count(spn.get(), EXSPN_NODE_SUM),
              exspn_spn_count(spn.get(), EXSPN_NODE_PRODUCT), exspn_spn_count(spn.get(), EXSPN_NODE_LEAF));
  std::printf("LL %.6f\n", ll);
}

// ---------------------------------------------------------------- explain

struct ExplainArgs {
  std::string run_dir;
  std::string spn_path;
  std::string phi_path;
  std::string data_csv;
  std::string data_schema;
  std::string name;
  std::string out_dir;
  std::string mode = "recorded";
  double lambda = 0.0;
  int max_depth = 2;
  double min_impurity_decrease = 0.1;
  std::string class_weight = "balanced";
  double min_precision = 0.7;
  double min_recall = 0.7;
  std::optional<std::size_t> min_rule_instances;
  std::size_t compress_min_instances = 0;
};

void cmd_explain(const ExplainArgs& a) {
  const fs::path run(a.run_dir);
  if (a.run_dir.empty() && a.spn_path.empty()) throw Failure{2, "one of --run-dir or --spn is required"};
  if (!a.run_dir.empty() && !fs::is_directory(run)) throw Failure{2, "run directory '" + a.run_dir + "' does not exist"};
  const json meta = a.run_dir.empty() ? json::object() : read_meta(run);

  const std::string spn_path = !a.spn_path.empty() ? a.spn_path : (run / "spn.json").string();
  if (!fs::exists(spn_path)) throw Failure{2, "SPN file '" + spn_path + "' does not exist"};
  exspn_spn* s = nullptr;
  check(exspn_spn_load(spn_path.c_str(), 0, &s));
  Spn spn(s);

  Dataset data;
  if (!a.data_csv.empty()) {
    exspn_dataset* d = nullptr;
    check(exspn_dataset_load(nullptr, a.data_csv.c_str(), opt(a.data_schema), nullptr, nullptr, 0, &d));
    data.reset(d);
  } else if (!a.run_dir.empty()) {
    data = load_run_table(run, "train");
  } else {
    throw Failure{2, "--data is required without --run-dir"};
  }

  exspn_explain_params p;
  exspn_explain_params_default(&p);
  if (a.mode == "recorded") p.mode = EXSPN_MODE_RECORDED;
  else if (a.mode == "inferred") p.mode = EXSPN_MODE_INFERRED;
  else throw Failure{2, "--mode must be recorded or inferred"};
  if (a.class_weight != "balanced" && a.class_weight != "none")
    throw Failure{2, "--class-weight must be balanced or none"};
  p.lambda = a.lambda;
  p.max_depth = a.max_depth;
  p.min_impurity_decrease = a.min_impurity_decrease;
  p.class_weight_balanced = a.class_weight == "balanced";
  p.min_precision = a.min_precision;
  p.min_recall = a.min_recall;
  p.compress_min_instances = a.compress_min_instances;
  if (a.min_rule_instances) {
    p.min_rule_instances = *a.min_rule_instances;
  } else {
    const bool synthetic = meta.value("synthetic", false);
    const std::size_t mis = meta.contains("min_instances_slice")
                                ? meta["min_instances_slice"].get<std::size_t>()
                                : default_mis(exspn_dataset_rows(data.get()), synthetic);
    p.min_rule_instances = synthetic ? mis : 5 * mis;
  }

  Phi phi;
  if (p.mode == EXSPN_MODE_RECORDED) {
    const std::string phi_path = !a.phi_path.empty() ? a.phi_path : (a.run_dir.empty() ? "" : (run / "phi.json").string());
    if (phi_path.empty() || !fs::exists(phi_path))
      throw Failure{2, "recorded mode needs an instance function file" +
                           (phi_path.empty() ? std::string(" (--phi)") : " ('" + phi_path + "' does not exist)")};
    exspn_phi* f = nullptr;
    check(exspn_phi_load(phi_path.c_str(), &f));
    phi.reset(f);
  }

  exspn_explanation* e = nullptr;
  check(exspn_explain(spn.get(), data.get(), phi.get(), &p, &e));
  Explanation ex(e);

  const std::string name = !a.name.empty() ? a.name : meta.value("dataset", fs::path(spn_path).parent_path().filename().string());
  const std::string out_dir = !a.out_dir.empty() ? a.out_dir : (a.run_dir.empty() ? "." : a.run_dir);
  ensure_dir(out_dir);
  const fs::path out(out_dir);
  char* text = nullptr;
  check(exspn_explanation_dot(ex.get(), &text));
  write_file(out / "csi_tree.dot", take(text));
  check(exspn_explanation_rules_csv(ex.get(), &text));
  write_file(out / "rules.csv", take(text));
  check(exspn_explanation_summary_csv(ex.get(), name.c_str(), &text));
  write_file(out / "summary.csv", take(text));

  exspn_summary sum;
  check(exspn_explanation_summary(ex.get(), &sum));
  std::printf("%-12s %6s %6s %7s %7s %6s %7s %7s %7s\n", "dataset", "NP", "NR", "MA", "MC", "NR_red", "MA_red",
              "MC_red", "CR");
  std::printf("%-12s %6zu %6zu %7.3g %7.3g %6zu %7.3g %7.3g %7.3g\n", name.c_str(), sum.np, sum.nr_all, sum.ma_all,
              sum.mc_all, sum.nr_reduced, sum.ma_reduced, sum.mc_reduced, sum.cr);
  std::printf("CSI-tree nodes %zu, min_rule_instances %zu, mode %s\n", sum.tree_nodes, p.min_rule_instances,
              a.mode.c_str());
}

// ---------------------------------------------------------------- baseline

struct BaselineArgs {
  DatasetArgs data;
  std::string run_dir;
  std::string out_dir;
  std::uint64_t seed = 0;
  double min_support = 0.5;
  double min_confidence = 0.7;
  int n_bins = 5;
  std::string binning = "width";
  std::string encoding = "nonzero";
};

void cmd_baseline(const BaselineArgs& a) {
  Dataset train, test;
  std::string name = a.data.label();
  if (!a.run_dir.empty()) {
    const fs::path run(a.run_dir);
    if (!fs::is_directory(run)) throw Failure{2, "run directory '" + a.run_dir + "' does not exist"};
    train = load_run_table(run, "train");
    test = load_run_table(run, "test");
    if (name.empty()) name = read_meta(run).value("dataset", run.filename().string());
  } else {
    Dataset all = a.data.load(a.seed);
    std::tie(train, test) = split(all.get(), a.seed);
  }
  exspn_apriori_config c;
  exspn_apriori_config_default(&c);
  c.min_support = a.min_support;
  c.min_confidence = a.min_confidence;
  c.n_bins = a.n_bins;
  if (a.binning != "width" && a.binning != "frequency") throw Failure{2, "--binning must be width or frequency"};
  if (a.encoding != "nonzero" && a.encoding != "onehot") throw Failure{2, "--encoding must be nonzero or onehot"};
  c.equal_frequency = a.binning == "frequency";
  c.one_hot_bins = a.encoding == "onehot";

  exspn_baseline* b = nullptr;
  check(exspn_baseline_run(train.get(), test.get(), &c, &b));
  Baseline base(b);
  const std::string out_dir = !a.out_dir.empty() ? a.out_dir : (a.run_dir.empty() ? "." : a.run_dir);
  ensure_dir(out_dir);
  const fs::path out(out_dir);
  char* text = nullptr;
  check(exspn_baseline_rules_csv(base.get(), &text));
  write_file(out / "baseline_rules.csv", take(text));
  check(exspn_baseline_summary_csv(base.get(), name.c_str(), &text));
  write_file(out / "baseline_summary.csv", take(text));

  exspn_baseline_stats st;
  check(exspn_baseline_stats_get(base.get(), &st));
  std::printf("%-12s %6s %7s %7s %7s\n", "dataset", "NR", "MA", "MC", "TC");
  std::printf("%-12s %6zu %7.3g %7.3g %7.3g\n", name.c_str(), st.nr, st.mean_antecedent, st.mean_consequent,
              st.mean_test_confidence);
}

// ---------------------------------------------------------------- report

void cmd_report(const std::string& dir, const std::string& csv_out) {
  char *csv = nullptr, *table = nullptr;
  check(exspn_report(dir.c_str(), &csv, &table));
  const std::string c = take(csv);
  std::fputs(take(table).c_str(), stdout);
  write_file(csv_out.empty() ? fs::path(dir) / "report.csv" : fs::path(csv_out), c);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explain sum-product networks through context-specific independencies"};
  app.set_version_flag("--version", std::string(exspn_version()));
  app.set_config("--config", "", "TOML/INI file whose keys mirror the command flags");
  app.require_subcommand(1);

  LearnArgs la;
  auto* learn = app.add_subcommand("learn", "learn an SPN and record its instance function");
  la.data.add(learn);
  learn->add_option("--out-dir", la.out_dir, "run directory for spn.json, phi.json, train/test tables");
  learn->add_option("--seed", la.seed);
  learn->add_option("--min-instances-slice", la.mis, "default 1% of training rows (5% for synthetic)");
  learn->add_option("--rdc-threshold", la.rdc_threshold);
  learn->add_option("--n-row-clusters", la.n_row_clusters);

  ExplainArgs ea;
  auto* explain = app.add_subcommand("explain", "extract the CSI-tree and rules of a learned SPN");
  explain->add_option("--run-dir", ea.run_dir, "directory written by `learn`");
  explain->add_option("--spn", ea.spn_path);
  explain->add_option("--phi", ea.phi_path, "instance function for recorded mode");
  explain->add_option("--data", ea.data_csv, "training table the SPN was learned on");
  explain->add_option("--data-schema", ea.data_schema);
  explain->add_option("--name", ea.name, "dataset name in the summary");
  explain->add_option("--out-dir", ea.out_dir);
  explain->add_option("--mode", ea.mode, "recorded|inferred");
  explain->add_option("--lambda", ea.lambda, "importance cutoff for context literals");
  explain->add_option("--max-depth", ea.max_depth);
  explain->add_option("--min-impurity-decrease", ea.min_impurity_decrease);
  explain->add_option("--class-weight", ea.class_weight, "balanced|none");
  explain->add_option("--min-precision", ea.min_precision);
  explain->add_option("--min-recall", ea.min_recall);
  explain->add_option("--min-rule-instances", ea.min_rule_instances, "default 5 x mis (1 x mis for synthetic)");
  explain->add_option("--compress-min-instances", ea.compress_min_instances);

  BaselineArgs ba;
  auto* baseline = app.add_subcommand("baseline", "Apriori association rules on the binarized table");
  ba.data.add(baseline);
  baseline->add_option("--run-dir", ba.run_dir, "reuse the train/test split of a `learn` run");
  baseline->add_option("--out-dir", ba.out_dir);
  baseline->add_option("--seed", ba.seed);
  baseline->add_option("--min-support", ba.min_support);
  baseline->add_option("--min-confidence", ba.min_confidence);
  baseline->add_option("--n-bins", ba.n_bins);
  baseline->add_option("--binning", ba.binning, "width|frequency");
  baseline->add_option("--encoding", ba.encoding, "nonzero|onehot");

  std::string report_dir, report_csv;
  auto* report = app.add_subcommand("report", "merge summaries under a results directory");
  report->add_option("dir", report_dir)->required();
  report->add_option("--csv", report_csv, "CSV destination (default <dir>/report.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*learn) cmd_learn(la);
    else if (*explain) cmd_explain(ea);
    else if (*baseline) cmd_baseline(ba);
    else if (*report) cmd_report(report_dir, report_csv);
  } catch (const Failure& f) {
    std::fprintf(stderr, "exspn: %s\n", f.message.c_str());
    return f.code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "exspn: internal error: %s\n", e.what());
    return 1;
  }
  return 0;
}

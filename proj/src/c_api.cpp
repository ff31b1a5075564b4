#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "exspn/error.hpp"
#include "exspn/exspn.h"
#include "exspn/pipeline.hpp"
#include "exspn/retrieve.hpp"

struct exspn_dataset {
  exspn::DatasetTable table;
};
struct exspn_spn {
  exspn::SpnGraph graph;
};
struct exspn_phi {
  exspn::InstanceFunction phi;
};
struct exspn_explanation {
  exspn::Explanation e;
  exspn::InstanceMode mode;
};
struct exspn_baseline {
  exspn::BaselineResult result;
  exspn::AprioriConfig config;
};

namespace {

thread_local std::string g_last_error;

template <class Fn>
exspn_status guard(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return EXSPN_OK;
  } catch (const exspn::InputError& e) {
    g_last_error = e.what();
    return EXSPN_ERR_INPUT;
  } catch (const exspn::ParseError& e) {
    g_last_error = e.what();
    return EXSPN_ERR_PARSE;
  } catch (const exspn::ValidationError& e) {
    g_last_error = e.what();
    return EXSPN_ERR_VALIDATION;
  } catch (const exspn::IoError& e) {
    g_last_error = e.what();
    return EXSPN_ERR_IO;
  } catch (const exspn::NetworkError& e) {
    g_last_error = e.what();
    return EXSPN_ERR_NETWORK;
  } catch (const exspn::ChecksumError& e) {
    g_last_error = e.what();
    return EXSPN_ERR_CHECKSUM;
  } catch (const exspn::ContractError& e) {
    g_last_error = e.what();
    return EXSPN_ERR_CONTRACT;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return EXSPN_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return EXSPN_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return EXSPN_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw exspn::InputError(std::string(what) + " must not be NULL");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string str(const char* s) { return s ? s : ""; }

exspn::AprioriConfig to_config(const exspn_apriori_config& c) {
  exspn::AprioriConfig out;
  out.min_support = c.min_support;
  out.min_confidence = c.min_confidence;
  out.n_bins = c.n_bins;
  out.binning = c.equal_frequency ? exspn::Binning::kEqualFrequency : exspn::Binning::kEqualWidth;
  out.encoding = c.one_hot_bins ? exspn::BinEncoding::kOneHot : exspn::BinEncoding::kOrdinalNonzero;
  return out;
}

}  // namespace

extern "C" {

const char* exspn_last_error(void) { return g_last_error.c_str(); }
const char* exspn_version(void) { return "1.0.0"; }
void exspn_string_free(char* s) { std::free(s); }

exspn_status exspn_dataset_load(const char* name, const char* csv_path, const char* schema_path, const char* data_dir,
                                const char* cache_dir, uint64_t seed, exspn_dataset** out) {
  return guard([&] {
    require(out, "out");
    *out = nullptr;
    exspn::DatasetSource src{str(name), str(csv_path), str(schema_path), str(data_dir), str(cache_dir), seed};
    if (src.name.empty() && src.csv_path.empty()) throw exspn::InputError("a dataset name or csv path is required");
    *out = new exspn_dataset{exspn::load_dataset(src)};
  });
}

exspn_status exspn_dataset_split(const exspn_dataset* data, double fraction, uint64_t seed, exspn_dataset** train,
                                 exspn_dataset** test) {
  return guard([&] {
    require(data, "data");
    require(train, "train");
    require(test, "test");
    *train = *test = nullptr;
    auto split = exspn::split_dataset(data->table, seed, fraction);
    auto* tr = new exspn_dataset{std::move(split.train)};
    try {
      *test = new exspn_dataset{std::move(split.test)};
    } catch (...) {
      delete tr;
      throw;
    }
    *train = tr;
  });
}

exspn_status exspn_dataset_save(const exspn_dataset* data, const char* csv_path, const char* schema_path) {
  return guard([&] {
    require(data, "data");
    require(csv_path, "csv_path");
    require(schema_path, "schema_path");
    exspn::save_csv(data->table, csv_path, schema_path);
  });
}

size_t exspn_dataset_rows(const exspn_dataset* data) { return data ? data->table.rows() : 0; }
size_t exspn_dataset_cols(const exspn_dataset* data) { return data ? data->table.cols() : 0; }
void exspn_dataset_free(exspn_dataset* data) { delete data; }

void exspn_learn_params_default(exspn_learn_params* params, size_t n_train) {
  if (!params) return;
  const exspn::LearnParams d;
  params->min_instances_slice = exspn::default_min_instances_slice(n_train);
  params->rdc_threshold = d.rdc_threshold;
  params->n_row_clusters = d.n_row_clusters;
  params->rdc_features = d.rdc_features;
  params->rdc_scale = d.rdc_scale;
  params->seed = d.seed;
}

exspn_status exspn_learn(const exspn_dataset* train, const exspn_learn_params* params, exspn_spn** spn,
                         exspn_phi** phi) {
  return guard([&] {
    require(train, "train");
    require(params, "params");
    require(spn, "spn");
    *spn = nullptr;
    if (phi) *phi = nullptr;
    exspn::LearnParams p;
    p.min_instances_slice = params->min_instances_slice;
    p.rdc_threshold = params->rdc_threshold;
    p.n_row_clusters = params->n_row_clusters;
    p.rdc_features = params->rdc_features;
    p.rdc_scale = params->rdc_scale;
    p.seed = params->seed;
    auto result = exspn::learn_spn(train->table, p);
    auto* s = new exspn_spn{std::move(result.spn)};
    if (phi) {
      try {
        *phi = new exspn_phi{std::move(result.phi)};
      } catch (...) {
        delete s;
        throw;
      }
    }
    *spn = s;
  });
}

exspn_status exspn_spn_load(const char* path, int lenient, exspn_spn** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    *out = new exspn_spn{exspn::load_spn(path, lenient ? exspn::LoadMode::kLenient : exspn::LoadMode::kStrict)};
  });
}

exspn_status exspn_spn_parse(const char* text, int lenient, exspn_spn** out) {
  return guard([&] {
    require(text, "text");
    require(out, "out");
    *out = nullptr;
    *out = new exspn_spn{exspn::deserialize(text, lenient ? exspn::LoadMode::kLenient : exspn::LoadMode::kStrict)};
  });
}

exspn_status exspn_spn_save(const exspn_spn* spn, const char* path) {
  return guard([&] {
    require(spn, "spn");
    require(path, "path");
    exspn::save_spn(spn->graph, path);
  });
}

exspn_status exspn_spn_serialize(const exspn_spn* spn, char** text) {
  return guard([&] {
    require(spn, "spn");
    require(text, "text");
    *text = dup(exspn::serialize(spn->graph));
  });
}

exspn_status exspn_spn_random(uint64_t seed, int n_vars, int max_depth, exspn_spn** out) {
  return guard([&] {
    require(out, "out");
    *out = nullptr;
    *out = new exspn_spn{exspn::random_spn(seed, n_vars, max_depth)};
  });
}

exspn_status exspn_spn_to_normal(const exspn_spn* spn, exspn_spn** out) {
  return guard([&] {
    require(spn, "spn");
    require(out, "out");
    *out = nullptr;
    *out = new exspn_spn{exspn::to_normal(spn->graph)};
  });
}

exspn_status exspn_spn_validate(const exspn_spn* spn, size_t* violations) {
  return guard([&] {
    require(spn, "spn");
    require(violations, "violations");
    *violations = exspn::validate(spn->graph).violations.size();
  });
}

exspn_status exspn_spn_log_likelihood(const exspn_spn* spn, const double* row, size_t n, double* out) {
  return guard([&] {
    require(spn, "spn");
    require(row, "row");
    require(out, "out");
    *out = exspn::log_likelihood(spn->graph, std::span<const double>(row, n));
  });
}

exspn_status exspn_spn_mean_log_likelihood(const exspn_spn* spn, const exspn_dataset* data, double* out) {
  return guard([&] {
    require(spn, "spn");
    require(data, "data");
    require(out, "out");
    *out = exspn::mean_log_likelihood(spn->graph, data->table);
  });
}

size_t exspn_spn_count(const exspn_spn* spn, exspn_node_kind kind) {
  if (!spn) return 0;
  switch (kind) {
    case EXSPN_NODE_SUM: return spn->graph.count(exspn::NodeType::kSum);
    case EXSPN_NODE_PRODUCT: return spn->graph.count(exspn::NodeType::kProduct);
    case EXSPN_NODE_LEAF: return spn->graph.count(exspn::NodeType::kLeaf);
  }
  return 0;
}

exspn_status exspn_csi_equivalent(const exspn_spn* a, const exspn_spn* b, int* out) {
  return guard([&] {
    require(a, "a");
    require(b, "b");
    require(out, "out");
    *out = exspn::csi_equivalent(a->graph, b->graph) ? 1 : 0;
  });
}

void exspn_spn_free(exspn_spn* spn) { delete spn; }

exspn_status exspn_phi_load(const char* path, exspn_phi** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    *out = new exspn_phi{exspn::load_instance_function(path)};
  });
}

exspn_status exspn_phi_save(const exspn_phi* phi, const char* path) {
  return guard([&] {
    require(phi, "phi");
    require(path, "path");
    exspn::save_instance_function(phi->phi, path);
  });
}

exspn_status exspn_phi_infer(const exspn_spn* spn, const exspn_dataset* data, exspn_phi** out) {
  return guard([&] {
    require(spn, "spn");
    require(data, "data");
    require(out, "out");
    *out = nullptr;
    *out = new exspn_phi{exspn::infer_instance_function(spn->graph, data->table)};
  });
}

exspn_status exspn_phi_check(const exspn_spn* spn, const exspn_phi* phi, size_t* violations) {
  return guard([&] {
    require(spn, "spn");
    require(phi, "phi");
    require(violations, "violations");
    *violations = exspn::check_instance_function(spn->graph, phi->phi).size();
  });
}

void exspn_phi_free(exspn_phi* phi) { delete phi; }

void exspn_explain_params_default(exspn_explain_params* params) {
  if (!params) return;
  const exspn::ExplainParams d;
  params->mode = EXSPN_MODE_RECORDED;
  params->lambda = d.lambda;
  params->max_depth = d.cart.max_depth;
  params->min_impurity_decrease = d.cart.min_impurity_decrease;
  params->class_weight_balanced = 1;
  params->min_precision = d.min_precision;
  params->min_recall = d.min_recall;
  params->min_rule_instances = d.min_rule_instances;
  params->compress_min_instances = d.compress_min_instances;
}

exspn_status exspn_explain(const exspn_spn* spn, const exspn_dataset* data, const exspn_phi* phi,
                           const exspn_explain_params* params, exspn_explanation** out) {
  return guard([&] {
    require(spn, "spn");
    require(data, "data");
    require(params, "params");
    require(out, "out");
    *out = nullptr;
    exspn::ExplainParams p;
    p.mode = params->mode == EXSPN_MODE_INFERRED ? exspn::InstanceMode::kInferred : exspn::InstanceMode::kRecorded;
    p.lambda = params->lambda;
    p.cart.max_depth = params->max_depth;
    p.cart.min_impurity_decrease = params->min_impurity_decrease;
    p.cart.class_weight = params->class_weight_balanced ? exspn::ClassWeight::kBalanced : exspn::ClassWeight::kUniform;
    p.min_precision = params->min_precision;
    p.min_recall = params->min_recall;
    p.min_rule_instances = params->min_rule_instances;
    p.compress_min_instances = params->compress_min_instances;
    *out = new exspn_explanation{exspn::explain(spn->graph, data->table, phi ? &phi->phi : nullptr, p), p.mode};
  });
}

exspn_status exspn_explanation_summary(const exspn_explanation* e, exspn_summary* out) {
  return guard([&] {
    require(e, "explanation");
    require(out, "out");
    const auto& s = e->e.summary;
    *out = exspn_summary{s.np,         s.nr_all,     s.ma_all, s.mc_all, s.nr_reduced,
                         s.ma_reduced, s.mc_reduced, s.cr,     e->e.tree.nodes.size()};
  });
}

exspn_status exspn_explanation_dot(const exspn_explanation* e, char** text) {
  return guard([&] {
    require(e, "explanation");
    require(text, "text");
    *text = dup(exspn::export_dot(e->e.tree));
  });
}

exspn_status exspn_explanation_rules_csv(const exspn_explanation* e, char** text) {
  return guard([&] {
    require(e, "explanation");
    require(text, "text");
    *text = dup(exspn::rules_csv(e->e.tree, e->e.rules, e->e.reduced.mask));
  });
}

exspn_status exspn_explanation_summary_csv(const exspn_explanation* e, const char* dataset, char** text) {
  return guard([&] {
    require(e, "explanation");
    require(text, "text");
    *text = dup(exspn::explain_summary_csv(str(dataset), e->mode, e->e.summary));
  });
}

exspn_status exspn_explanation_retrieve(const exspn_explanation* e, exspn_spn** out) {
  return guard([&] {
    require(e, "explanation");
    require(out, "out");
    *out = nullptr;
    *out = new exspn_spn{exspn::retrieve_spn(e->e.tree)};
  });
}

void exspn_explanation_free(exspn_explanation* e) { delete e; }

void exspn_apriori_config_default(exspn_apriori_config* config) {
  if (!config) return;
  const exspn::AprioriConfig d;
  config->min_support = d.min_support;
  config->min_confidence = d.min_confidence;
  config->n_bins = d.n_bins;
  config->equal_frequency = d.binning == exspn::Binning::kEqualFrequency;
  config->one_hot_bins = d.encoding == exspn::BinEncoding::kOneHot;
}

exspn_status exspn_baseline_run(const exspn_dataset* train, const exspn_dataset* test,
                                const exspn_apriori_config* config, exspn_baseline** out) {
  return guard([&] {
    require(train, "train");
    require(test, "test");
    require(config, "config");
    require(out, "out");
    *out = nullptr;
    const auto c = to_config(*config);
    *out = new exspn_baseline{exspn::run_baseline(train->table, test->table, c), c};
  });
}

exspn_status exspn_baseline_stats_get(const exspn_baseline* b, exspn_baseline_stats* out) {
  return guard([&] {
    require(b, "baseline");
    require(out, "out");
    const auto& s = b->result.stats;
    *out = exspn_baseline_stats{s.nr, s.mean_antecedent, s.mean_consequent, s.mean_test_confidence};
  });
}

exspn_status exspn_baseline_rules_csv(const exspn_baseline* b, char** text) {
  return guard([&] {
    require(b, "baseline");
    require(text, "text");
    *text = dup(b->result.rules_csv);
  });
}

exspn_status exspn_baseline_summary_csv(const exspn_baseline* b, const char* dataset, char** text) {
  return guard([&] {
    require(b, "baseline");
    require(text, "text");
    *text = dup(exspn::baseline_summary_csv(str(dataset), b->result.stats, b->config));
  });
}

void exspn_baseline_free(exspn_baseline* b) { delete b; }

exspn_status exspn_report(const char* dir, char** csv, char** table) {
  return guard([&] {
    require(dir, "dir");
    if (csv) *csv = nullptr;
    if (table) *table = nullptr;
    const auto report = exspn::build_report(dir);
    char* c = csv ? dup(report.csv()) : nullptr;
    try {
      if (table) *table = dup(report.table());
    } catch (...) {
      std::free(c);
      throw;
    }
    if (csv) *csv = c;
  });
}

}  // extern "C"

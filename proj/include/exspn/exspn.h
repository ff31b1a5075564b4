/* C interface to the exspn library.
 *
 * Every object is an opaque handle released with its *_free function.
 * Functions return an exspn_status; on failure exspn_last_error() describes
 * the problem (thread-local, valid until the next call on the same thread).
 * Strings returned through char** are owned by the caller and released with
 * exspn_string_free.
 */
#ifndef EXSPN_EXSPN_H
#define EXSPN_EXSPN_H

#include <stddef.h>
#include <stdint.h>

#if defined(EXSPN_BUILDING_LIBRARY)
#define EXSPN_API __attribute__((visibility("default")))
#else
#define EXSPN_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum exspn_status {
  EXSPN_OK = 0,
  EXSPN_ERR_INPUT = 1,
  EXSPN_ERR_PARSE = 2,
  EXSPN_ERR_VALIDATION = 3,
  EXSPN_ERR_IO = 4,
  EXSPN_ERR_NETWORK = 5,
  EXSPN_ERR_CHECKSUM = 6,
  EXSPN_ERR_CONTRACT = 7,
  EXSPN_ERR_INTERNAL = 8
} exspn_status;

typedef enum exspn_node_kind { EXSPN_NODE_SUM = 0, EXSPN_NODE_PRODUCT = 1, EXSPN_NODE_LEAF = 2 } exspn_node_kind;

typedef enum exspn_instance_mode { EXSPN_MODE_RECORDED = 0, EXSPN_MODE_INFERRED = 1 } exspn_instance_mode;

typedef struct exspn_dataset exspn_dataset;
typedef struct exspn_spn exspn_spn;
typedef struct exspn_phi exspn_phi;
typedef struct exspn_explanation exspn_explanation;
typedef struct exspn_baseline exspn_baseline;

EXSPN_API const char* exspn_last_error(void);
EXSPN_API const char* exspn_version(void);
EXSPN_API void exspn_string_free(char* s);

/* Datasets. `name` may be "synthetic", a bundled table under data_dir, or a
 * registry name fetched into cache_dir; when csv_path is non-NULL it wins and
 * schema_path (or <csv stem>.schema.json) describes its columns. */
EXSPN_API exspn_status exspn_dataset_load(const char* name, const char* csv_path, const char* schema_path,
                                          const char* data_dir, const char* cache_dir, uint64_t seed,
                                          exspn_dataset** out);
/* Stratified on the dataset's target column when it has one. */
EXSPN_API exspn_status exspn_dataset_split(const exspn_dataset* data, double fraction, uint64_t seed,
                                           exspn_dataset** train, exspn_dataset** test);
EXSPN_API exspn_status exspn_dataset_save(const exspn_dataset* data, const char* csv_path, const char* schema_path);
EXSPN_API size_t exspn_dataset_rows(const exspn_dataset* data);
EXSPN_API size_t exspn_dataset_cols(const exspn_dataset* data);
EXSPN_API void exspn_dataset_free(exspn_dataset* data);

/* Structure learning. */
typedef struct exspn_learn_params {
  size_t min_instances_slice;
  double rdc_threshold;
  int n_row_clusters;
  int rdc_features;
  double rdc_scale;
  uint64_t seed;
} exspn_learn_params;

/* Defaults with min_instances_slice = 1% of n_train. */
EXSPN_API void exspn_learn_params_default(exspn_learn_params* params, size_t n_train);
EXSPN_API exspn_status exspn_learn(const exspn_dataset* train, const exspn_learn_params* params, exspn_spn** spn,
                                   exspn_phi** phi);

/* SPNs. */
EXSPN_API exspn_status exspn_spn_load(const char* path, int lenient, exspn_spn** out);
EXSPN_API exspn_status exspn_spn_parse(const char* text, int lenient, exspn_spn** out);
EXSPN_API exspn_status exspn_spn_save(const exspn_spn* spn, const char* path);
EXSPN_API exspn_status exspn_spn_serialize(const exspn_spn* spn, char** text);
EXSPN_API exspn_status exspn_spn_random(uint64_t seed, int n_vars, int max_depth, exspn_spn** out);
EXSPN_API exspn_status exspn_spn_to_normal(const exspn_spn* spn, exspn_spn** out);
/* Number of invariant violations (0 = valid). */
EXSPN_API exspn_status exspn_spn_validate(const exspn_spn* spn, size_t* violations);
EXSPN_API exspn_status exspn_spn_log_likelihood(const exspn_spn* spn, const double* row, size_t n, double* out);
EXSPN_API exspn_status exspn_spn_mean_log_likelihood(const exspn_spn* spn, const exspn_dataset* data, double* out);
EXSPN_API size_t exspn_spn_count(const exspn_spn* spn, exspn_node_kind kind);
/* 1 when both encode the same product-node decompositions, else 0. */
EXSPN_API exspn_status exspn_csi_equivalent(const exspn_spn* a, const exspn_spn* b, int* out);
EXSPN_API void exspn_spn_free(exspn_spn* spn);

/* Instance functions. */
EXSPN_API exspn_status exspn_phi_load(const char* path, exspn_phi** out);
EXSPN_API exspn_status exspn_phi_save(const exspn_phi* phi, const char* path);
EXSPN_API exspn_status exspn_phi_infer(const exspn_spn* spn, const exspn_dataset* data, exspn_phi** out);
/* Number of violated instance-function invariants on `spn` (0 = sound). */
EXSPN_API exspn_status exspn_phi_check(const exspn_spn* spn, const exspn_phi* phi, size_t* violations);
EXSPN_API void exspn_phi_free(exspn_phi* phi);

/* Explanation. */
typedef struct exspn_explain_params {
  exspn_instance_mode mode;
  double lambda;
  int max_depth;
  double min_impurity_decrease;
  int class_weight_balanced;
  double min_precision;
  double min_recall;
  size_t min_rule_instances;
  size_t compress_min_instances;
} exspn_explain_params;

typedef struct exspn_summary {
  size_t np;
  size_t nr_all;
  double ma_all;
  double mc_all;
  size_t nr_reduced;
  double ma_reduced;
  double mc_reduced;
  double cr; /* +inf when no rule survives the reduction */
  size_t tree_nodes;
} exspn_summary;

EXSPN_API void exspn_explain_params_default(exspn_explain_params* params);
/* `phi` is required in recorded mode and ignored in inferred mode. */
EXSPN_API exspn_status exspn_explain(const exspn_spn* spn, const exspn_dataset* data, const exspn_phi* phi,
                                     const exspn_explain_params* params, exspn_explanation** out);
EXSPN_API exspn_status exspn_explanation_summary(const exspn_explanation* e, exspn_summary* out);
EXSPN_API exspn_status exspn_explanation_dot(const exspn_explanation* e, char** text);
EXSPN_API exspn_status exspn_explanation_rules_csv(const exspn_explanation* e, char** text);
EXSPN_API exspn_status exspn_explanation_summary_csv(const exspn_explanation* e, const char* dataset, char** text);
/* Structure-only SPN rebuilt from the explanation's CSI-tree. */
EXSPN_API exspn_status exspn_explanation_retrieve(const exspn_explanation* e, exspn_spn** out);
EXSPN_API void exspn_explanation_free(exspn_explanation* e);

/* Apriori baseline. */
typedef struct exspn_apriori_config {
  double min_support;
  double min_confidence;
  int n_bins;
  int equal_frequency; /* 0: equal-width bins */
  int one_hot_bins;    /* 0: one "bin != 0" item per continuous column */
} exspn_apriori_config;

typedef struct exspn_baseline_stats {
  size_t nr;
  double mean_antecedent;
  double mean_consequent;
  double mean_test_confidence;
} exspn_baseline_stats;

EXSPN_API void exspn_apriori_config_default(exspn_apriori_config* config);
EXSPN_API exspn_status exspn_baseline_run(const exspn_dataset* train, const exspn_dataset* test,
                                          const exspn_apriori_config* config, exspn_baseline** out);
EXSPN_API exspn_status exspn_baseline_stats_get(const exspn_baseline* b, exspn_baseline_stats* out);
EXSPN_API exspn_status exspn_baseline_rules_csv(const exspn_baseline* b, char** text);
EXSPN_API exspn_status exspn_baseline_summary_csv(const exspn_baseline* b, const char* dataset, char** text);
EXSPN_API void exspn_baseline_free(exspn_baseline* b);

/* Table-style merge of every summary under `dir`. Either output may be NULL. */
EXSPN_API exspn_status exspn_report(const char* dir, char** csv, char** table);

#ifdef __cplusplus
}
#endif

#endif /* EXSPN_EXSPN_H */

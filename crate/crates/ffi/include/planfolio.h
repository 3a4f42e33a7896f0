#ifndef PLANFOLIO_H
#define PLANFOLIO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define PF_ABI_VERSION 1

typedef enum PfOutcome {
  PF_OUTCOME_SOLVED = 0,
  PF_OUTCOME_TIMEOUT = 1,
} PfOutcome;

/**
 * Planner identifiers (stable ABI values).
 */
typedef enum PfPlanner {
  PF_PLANNER_RRT = 0,
  PF_PLANNER_RRT_CONNECT = 1,
  PF_PLANNER_TRRT = 2,
  PF_PLANNER_LAZY_RRT = 3,
} PfPlanner;

/**
 * Status codes returned by every fallible function.
 */
typedef enum PfStatus {
  PF_STATUS_OK = 0,
  PF_STATUS_INVALID_ARGUMENT = 1,
  PF_STATUS_MISSING_ARTIFACT = 2,
  PF_STATUS_RUNTIME_ERROR = 3,
  PF_STATUS_NULL_POINTER = 4,
} PfStatus;

/**
 * Opaque predictor handle (a loaded checkpoint).
 */
typedef struct PfModel PfModel;

/**
 * Opaque motion-planning problem handle.
 */
typedef struct PfProblem PfProblem;

/**
 * Planner parameters; obtain defaults from `pf_planner_params_default`.
 */
typedef struct PfPlannerParams {
  double step_size;
  double goal_bias;
  double timeout_s;
  double resolution;
  double trrt_temp_init;
  double trrt_temp_rate;
  uint64_t rng_seed;
} PfPlannerParams;

typedef struct PfPlanResult {
  enum PfOutcome outcome;
  double wall_time_s;
  uint64_t iterations;
  /**
   * Deterministic work measure (box-pair collision tests).
   */
  uint64_t checks;
} PfPlanResult;

typedef struct PfRuntimeSummary {
  /**
   * Mean completion time; timeouts contribute the timeout value.
   */
  double expected_time_s;
  uint64_t timeout_count;
  uint64_t trials;
} PfRuntimeSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

uint32_t pf_abi_version(void);

/**
 * Message for the most recent error on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *pf_last_error(void);

struct PfPlannerParams pf_planner_params_default(void);

/**
 * Generates a seeded narrow-gap navigation problem.
 *
 * # Safety
 * `out` must be a valid pointer; on success it receives a handle that must
 * be released with `pf_problem_free`.
 */
enum PfStatus pf_problem_generate_nav(uint64_t seed, struct PfProblem **out);

/**
 * Generates a seeded planar-arm problem.
 *
 * # Safety
 * As `pf_problem_generate_nav`; `n_links` must be at least 2.
 */
enum PfStatus pf_problem_generate_arm(uint64_t seed, uintptr_t n_links, struct PfProblem **out);

/**
 * Parses a problem from its JSON form (one `problems.jsonl` line).
 *
 * # Safety
 * `json` must be a valid NUL-terminated string; `out` as above.
 */
enum PfStatus pf_problem_from_json(const char *json, struct PfProblem **out);

/**
 * Serializes a problem to JSON; free the string with `pf_string_free`.
 *
 * # Safety
 * `problem` must be a live handle from this library; `out_json` valid.
 */
enum PfStatus pf_problem_to_json(const struct PfProblem *problem, char **out_json);

/**
 * # Safety
 * `problem` must come from this library and not already be freed.
 */
void pf_problem_free(struct PfProblem *problem);

/**
 * Runs one planner once. Deterministic given `params->rng_seed`
 * (`wall_time_s` is measured).
 *
 * # Safety
 * All pointers must be valid; `problem` a live handle.
 */
enum PfStatus pf_plan(const struct PfProblem *problem,
                      enum PfPlanner planner,
                      const struct PfPlannerParams *params,
                      struct PfPlanResult *out);

/**
 * Runs seeded repeated trials and aggregates the expected completion time.
 *
 * # Safety
 * As `pf_plan`; `trials` must be at least 1.
 */
enum PfStatus pf_measure(const struct PfProblem *problem,
                         enum PfPlanner planner,
                         uintptr_t trials,
                         const struct PfPlannerParams *params,
                         struct PfRuntimeSummary *out);

/**
 * Encodes a problem's workspace graph as JSON (nodes, features, edges);
 * free with `pf_string_free`.
 *
 * # Safety
 * `problem` a live handle; `out_json` valid.
 */
enum PfStatus pf_encode_graph_json(const struct PfProblem *problem, char **out_json);

/**
 * Loads a model checkpoint written by `planfolio train`.
 *
 * # Safety
 * `path` a valid NUL-terminated string; `out` receives a handle to free
 * with `pf_model_free`.
 */
enum PfStatus pf_model_load(const char *path, struct PfModel **out);

/**
 * Predicted runtime in seconds (nonnegative); needs a regressor checkpoint.
 *
 * # Safety
 * All pointers must be live handles/valid destinations.
 */
enum PfStatus pf_model_predict_runtime(const struct PfModel *model,
                                       const struct PfProblem *problem,
                                       double *out_seconds);

/**
 * Portfolio selection: classifier argmax; needs a classifier checkpoint.
 *
 * # Safety
 * All pointers must be live handles/valid destinations.
 */
enum PfStatus pf_model_select_planner(const struct PfModel *model,
                                      const struct PfProblem *problem,
                                      enum PfPlanner *out_planner);

/**
 * Model task: 0 = classify4 (portfolio), 1 = regress1 (runtime), -1 on null.
 *
 * # Safety
 * `model` must be a live handle.
 */
int32_t pf_model_task(const struct PfModel *model);

/**
 * # Safety
 * `model` must come from `pf_model_load` and not already be freed.
 */
void pf_model_free(struct PfModel *model);

/**
 * # Safety
 * `s` must be a string returned by this library, freed at most once.
 */
void pf_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* PLANFOLIO_H */

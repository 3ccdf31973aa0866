#ifndef COPLAN_COPLAN_H
#define COPLAN_COPLAN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define COPLAN_API __declspec(dllexport)
#else
#define COPLAN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum coplan_status {
  COPLAN_OK = 0,
  COPLAN_ERR_INVALID_ARGUMENT = 1,
  COPLAN_ERR_MODEL = 2,
  COPLAN_ERR_IO = 3,
  COPLAN_ERR_NOT_FOUND = 4,
  COPLAN_ERR_INSTANCE_TOO_LARGE = 5,
  COPLAN_ERR_ZERO_PROBABILITY = 6,
  COPLAN_ERR_ALL_ACTIONS_PRUNED = 7,
  COPLAN_ERR_STATE = 8,
  COPLAN_ERR_INTERNAL = 99
} coplan_status;

/* Opaque handles. Every *_free accepts NULL. */
typedef struct coplan_model coplan_model;                /* two-agent Dec-POMDP */
typedef struct coplan_policy coplan_policy;              /* alpha vectors of an MPOMDP */
typedef struct coplan_fsc coplan_fsc;                    /* finite-state controller */
typedef struct coplan_robot_pomdp coplan_robot_pomdp;    /* compiled robot POMDP */
typedef struct coplan_robot_policy coplan_robot_policy;  /* solved robot POMDP */
typedef struct coplan_executor coplan_executor;          /* online robot */
typedef struct coplan_server coplan_server;              /* live game server */

/* Message of the last failed call on this thread; "" after a success. */
COPLAN_API const char* coplan_last_error(void);
COPLAN_API const char* coplan_status_name(coplan_status status);
COPLAN_API const char* coplan_version(void);
/* Releases strings returned through char** out-parameters. */
COPLAN_API void coplan_string_free(char* s);

/* Models. config_json may be NULL for the default layout. */
COPLAN_API coplan_status coplan_model_build_grid(const char* config_json, coplan_model** out);
COPLAN_API coplan_status coplan_model_load(const char* path, coplan_model** out);
COPLAN_API coplan_status coplan_model_save(const coplan_model* model, const char* path);
/* {states, joint_actions, human_actions, robot_actions, human_observations,
   robot_observations, objectives:[{id,name}], discount} */
COPLAN_API coplan_status coplan_model_info(const coplan_model* model, char** json_out);
COPLAN_API void coplan_model_free(coplan_model* model);

/* MPOMDP of one objective. params_json: PBVI knobs (belief_points,
   iterations, epsilon, seed, schedule, ...); NULL for defaults. */
COPLAN_API coplan_status coplan_solve_pbvi(const coplan_model* model, int objective,
                                           const char* params_json, coplan_policy** out);
/* Q estimates of the MPOMDP at a belief ([[state, p], ...], NULL for b0).
   Output: {q:[], visits:[], std_error:[]}. */
COPLAN_API coplan_status coplan_mcts_estimate(const coplan_model* model, int objective,
                                              const char* belief_json, const char* params_json,
                                              char** json_out);
COPLAN_API coplan_status coplan_policy_load(const char* path, coplan_policy** out);
COPLAN_API coplan_status coplan_policy_save(const coplan_policy* policy, const char* path);
/* Greedy value and action at a belief (NULL: the belief is required). */
COPLAN_API coplan_status coplan_policy_value(const coplan_policy* policy, const char* belief_json,
                                             double* value, int* action);
COPLAN_API size_t coplan_policy_size(const coplan_policy* policy);
COPLAN_API void coplan_policy_free(coplan_policy* policy);

/* Human controllers. params_json: {temperature, max_nodes, epsilon,
   action_threshold, estimator:"pbvi"|"mcts", mcts:{...}}. values may be NULL
   only with the mcts estimator. */
COPLAN_API coplan_status coplan_fsc_extract(const coplan_model* model, const coplan_policy* values,
                                            int objective, const char* params_json,
                                            coplan_fsc** out);
COPLAN_API coplan_status coplan_fsc_sample_deterministic(const coplan_model* model,
                                                         const coplan_policy* values, int objective,
                                                         const char* params_json, uint64_t seed,
                                                         coplan_fsc** out);
/* weights NULL: uniform. */
COPLAN_API coplan_status coplan_fsc_union(const coplan_fsc* const* fscs, const double* weights,
                                          size_t count, coplan_fsc** out);
/* {nodes, depth, initial:[...], objectives:[...]} */
COPLAN_API coplan_status coplan_fsc_stats(const coplan_fsc* fsc, char** json_out);
COPLAN_API coplan_status coplan_fsc_load(const char* path, coplan_fsc** out);
COPLAN_API coplan_status coplan_fsc_save(const coplan_fsc* fsc, const char* path);
COPLAN_API void coplan_fsc_free(coplan_fsc* fsc);

/* Robot side. state_cap 0 selects the default cap. */
COPLAN_API coplan_status coplan_compile(const coplan_model* model, const coplan_fsc* human_union,
                                        size_t state_cap, coplan_robot_pomdp** out);
COPLAN_API size_t coplan_robot_pomdp_states(const coplan_robot_pomdp* pomdp);
COPLAN_API coplan_status coplan_robot_pomdp_load(const char* path, coplan_robot_pomdp** out);
COPLAN_API coplan_status coplan_robot_pomdp_save(const coplan_robot_pomdp* pomdp, const char* path);
COPLAN_API void coplan_robot_pomdp_free(coplan_robot_pomdp* pomdp);

COPLAN_API coplan_status coplan_robot_solve(const coplan_robot_pomdp* pomdp, const char* params_json,
                                            coplan_robot_policy** out);
COPLAN_API coplan_status coplan_robot_policy_load(const char* path, coplan_robot_policy** out);
COPLAN_API coplan_status coplan_robot_policy_save(const coplan_robot_policy* policy,
                                                  const char* path);
/* {extended_states, alpha_vectors, initial_value, residual} */
COPLAN_API coplan_status coplan_robot_policy_info(const coplan_robot_policy* policy,
                                                  char** json_out);
COPLAN_API void coplan_robot_policy_free(coplan_robot_policy* policy);

/* recovery: "reset" (default when NULL) or "none". */
COPLAN_API coplan_status coplan_executor_new(const coplan_robot_policy* policy,
                                             const char* recovery, coplan_executor** out);
/* has_observation = 0 on the first step of an episode. */
COPLAN_API coplan_status coplan_executor_step(coplan_executor* executor, int has_observation,
                                              int observation, int* action);
COPLAN_API coplan_status coplan_executor_reset(coplan_executor* executor);
COPLAN_API void coplan_executor_free(coplan_executor* executor);

/* Synthetic-human campaign; writes report.csv, timings.csv, report.json and
   traces.json under out_dir (NULL: no files). summary_json_out may be NULL. */
COPLAN_API coplan_status coplan_bench_run(const char* spec_json, const char* out_dir,
                                          char** summary_json_out);

/* Live game server over every robot policy in policies_dir. port 0 picks a
   free port; static_dir may be NULL. */
COPLAN_API coplan_status coplan_server_start(const char* policies_dir, const char* address,
                                             unsigned port, const char* static_dir,
                                             coplan_server** out);
COPLAN_API unsigned coplan_server_port(const coplan_server* server);
COPLAN_API void coplan_server_stop(coplan_server* server);
COPLAN_API void coplan_server_free(coplan_server* server);

#ifdef __cplusplus
}
#endif

#endif

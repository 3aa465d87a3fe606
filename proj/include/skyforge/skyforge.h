/* skyforge C API: language-conditioned drone-flight demonstration synthesis.
 *
 * The core is a C++ library; this header is the stable ABI surface. All
 * functions return a skyforge_status; on failure a thread-local message is
 * available from skyforge_last_error(). Handles are opaque and must be
 * released with their matching *_free function.
 */
#ifndef SKYFORGE_H
#define SKYFORGE_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum skyforge_status {
  SKYFORGE_OK = 0,
  SKYFORGE_ERR_INVALID_ARGUMENT = 1,
  SKYFORGE_ERR_IO = 2,
  SKYFORGE_ERR_PARSE = 3,
  SKYFORGE_ERR_UNKNOWN_OBJECT = 4,
  SKYFORGE_ERR_PLANNING = 5,
  SKYFORGE_ERR_SYNTHESIS = 6,
  SKYFORGE_ERR_VERIFY = 7,
  SKYFORGE_ERR_INTERNAL = 8
} skyforge_status;

typedef struct skyforge_scene skyforge_scene;
typedef struct skyforge_tree skyforge_tree;

const char* skyforge_version(void);

/* Message for the most recent failure on this thread; never NULL. */
const char* skyforge_last_error(void);

/* ---- scenes ---- */

skyforge_status skyforge_scene_load(const char* path, skyforge_scene** out_scene);
void skyforge_scene_free(skyforge_scene* scene);

int skyforge_scene_object_count(const skyforge_scene* scene);
skyforge_status skyforge_scene_object_name(const skyforge_scene* scene, int index, char* buf,
                                           size_t buflen);

/* ---- planning ---- */

/* planner_json (optional, may be NULL): {"eta":double, "iterations":int,
 * "alpha":double, "dimension":2|3, "seed":uint64, "planning_altitude":double}.
 */
skyforge_status skyforge_plan(const skyforge_scene* scene, const char* object_name,
                              const char* planner_json, skyforge_tree** out_tree);
void skyforge_tree_free(skyforge_tree* tree);

int skyforge_tree_size(const skyforge_tree* tree);
/* out_xyzc = {x, y, z, cost}; returns parent id through out_parent (-1 root). */
skyforge_status skyforge_tree_node(const skyforge_tree* tree, int id, double out_xyzc[4],
                                   int* out_parent);
skyforge_status skyforge_tree_save_json(const skyforge_tree* tree, const char* path);
/* Summary JSON: node count, max depth, coverage bounding box. */
skyforge_status skyforge_tree_summary_json(const skyforge_tree* tree, char* buf, size_t buflen);

/* ---- synthesis / datasets ---- */

/* config_json uses the documented run-config schema. On success a report JSON
 * is copied into report_buf (when non-NULL). */
skyforge_status skyforge_synthesize(const char* config_json, char* report_buf, size_t buflen);

/* Renders one ego-view heatmap to a binary PPM. state10 (optional, may be
 * NULL for a default vantage) is {p(3), v(3), q_xyzw(4)}. */
skyforge_status skyforge_render_frame(const skyforge_scene* scene, const char* object_name,
                                      const double state10[10], const char* out_ppm_path);

skyforge_status skyforge_dataset_stats(const char* dataset_path, char* report_buf, size_t buflen);
skyforge_status skyforge_dataset_verify(const char* dataset_path, char* report_buf, size_t buflen);

#ifdef __cplusplus
}
#endif

#endif /* SKYFORGE_H */

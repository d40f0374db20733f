#ifndef NEUROMORPH_H
#define NEUROMORPH_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result of every fallible call.
 */
typedef enum NmStatus {
  NM_STATUS_OK = 0,
  /*
   Null pointer, short buffer or malformed string argument.
   */
  NM_STATUS_INVALID_ARGUMENT = 1,
  /*
   Invalid parameter value.
   */
  NM_STATUS_CONFIG = 2,
  /*
   Unreadable, malformed or unsuitable input data.
   */
  NM_STATUS_INPUT = 3,
  /*
   Training diverged or produced non-finite values.
   */
  NM_STATUS_NUMERIC = 4,
  /*
   Path search ran out of budget.
   */
  NM_STATUS_BUDGET = 5,
  /*
   Internal panic caught at the boundary.
   */
  NM_STATUS_PANIC = 6,
} NmStatus;

/*
 Text formats accepted by [`nm_cloud_parse`].
 */
typedef enum NmCloudFormat {
  NM_CLOUD_FORMAT_XYZ = 0,
  NM_CLOUD_FORMAT_PLY_ASCII = 1,
  NM_CLOUD_FORMAT_OFF = 2,
} NmCloudFormat;

/*
 Weighted skeleton graph.
 */
typedef struct NmGraph NmGraph;

/*
 Surface samples with optional unit normals.
 */
typedef struct NmPointCloud NmPointCloud;

/*
 Skeleton balls without connectivity.
 */
typedef struct NmSkeleton NmSkeleton;

/*
 Skeleton optimization settings. Start from
 [`nm_skeleton_config_default`].
 */
typedef struct NmSkeletonConfig {
  size_t n_skeleton_points;
  size_t iterations;
  double learning_rate;
  double lambda_r;
  double lambda_n;
  size_t sphere_samples;
  size_t input_samples;
  double init_bandwidth;
  double init_noise;
  uint64_t seed;
} NmSkeletonConfig;

/*
 Link prediction settings. Start from [`nm_link_config_default`].
 */
typedef struct NmLinkConfig {
  size_t k;
  size_t hidden1;
  size_t hidden2;
  size_t epochs;
  double learning_rate;
  uint64_t seed;
  double threshold;
  bool ensure_connected;
} NmLinkConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *nm_version(void);

/*
 Message of the most recent failure on this thread, or null if none.
 Valid until the next failing call on the same thread.
 */
const char *nm_last_error(void);

/*
 Builds a cloud from `n` xyz triples. `normals` may be null.

 # Safety
 `points` (and `normals` when non-null) must point to `3 * n` doubles.
 */
enum NmStatus nm_cloud_new(const double *points,
                           const double *normals,
                           size_t n,
                           struct NmPointCloud **out);

/*
 Parses xyz, ASCII PLY or OFF text.

 # Safety
 `text` must be a NUL-terminated string; `out` must be writable.
 */
enum NmStatus nm_cloud_parse(const char *text,
                             enum NmCloudFormat format,
                             struct NmPointCloud **out);

/*
 Samples `count` points with normals from a synthetic shape at its
 default dimensions: sphere, capsule, ellipsoid, torus, ybranch or
 crescent.

 # Safety
 `kind` must be a NUL-terminated string; `out` must be writable.
 */
enum NmStatus nm_cloud_synth(const char *kind,
                             size_t count,
                             uint64_t seed,
                             struct NmPointCloud **out);

/*
 Number of points, 0 for a null handle.

 # Safety
 `cloud` must be null or a live handle.
 */
size_t nm_cloud_len(const struct NmPointCloud *cloud);

/*
 Whether the cloud carries normals.

 # Safety
 `cloud` must be null or a live handle.
 */
bool nm_cloud_has_normals(const struct NmPointCloud *cloud);

/*
 Copies `3 * len` coordinates into `out`, which holds `cap` doubles.

 # Safety
 `cloud` must be a live handle and `out` must hold `cap` doubles.
 */
enum NmStatus nm_cloud_points(const struct NmPointCloud *cloud, double *out, size_t cap);

/*
 New cloud with normals estimated from `k` nearest neighbors.

 # Safety
 `cloud` must be a live handle; `out` must be writable.
 */
enum NmStatus nm_cloud_estimate_normals(const struct NmPointCloud *cloud,
                                        size_t k,
                                        struct NmPointCloud **out);

/*
 # Safety
 `cloud` must be null or a handle not yet freed.
 */
void nm_cloud_free(struct NmPointCloud *cloud);

struct NmSkeletonConfig nm_skeleton_config_default(void);

/*
 Fits skeleton balls to a cloud with normals. Balls are returned in the
 cloud's coordinate frame.

 # Safety
 `cloud` must be a live handle, `config` null or valid, `out` writable.
 */
enum NmStatus nm_skeletonize(const struct NmPointCloud *cloud,
                             const struct NmSkeletonConfig *config,
                             struct NmSkeleton **out);

/*
 Builds a skeleton from `n` `x y z r` quadruples.

 # Safety
 `balls` must point to `4 * n` doubles; `out` must be writable.
 */
enum NmStatus nm_skeleton_new(const double *balls, size_t n, struct NmSkeleton **out);

/*
 Number of balls, 0 for a null handle.

 # Safety
 `skeleton` must be null or a live handle.
 */
size_t nm_skeleton_len(const struct NmSkeleton *skeleton);

/*
 Copies `4 * len` values (`x y z r` per ball) into `out`.

 # Safety
 `skeleton` must be a live handle and `out` must hold `cap` doubles.
 */
enum NmStatus nm_skeleton_balls(const struct NmSkeleton *skeleton, double *out, size_t cap);

/*
 Mean Chamfer distance between the ball centers of two skeletons.

 # Safety
 Both handles must be live; `out` must be writable.
 */
enum NmStatus nm_skeleton_chamfer(const struct NmSkeleton *a,
                                  const struct NmSkeleton *b,
                                  double *out);

/*
 Hausdorff distance between the ball centers of two skeletons.

 # Safety
 Both handles must be live; `out` must be writable.
 */
enum NmStatus nm_skeleton_hausdorff(const struct NmSkeleton *a,
                                    const struct NmSkeleton *b,
                                    double *out);

/*
 # Safety
 `skeleton` must be null or a handle not yet freed.
 */
void nm_skeleton_free(struct NmSkeleton *skeleton);

struct NmLinkConfig nm_link_config_default(void);

/*
 Connects skeleton balls into a graph. `surface` may be null.

 # Safety
 `skeleton` must be a live handle, `surface` and `config` null or valid,
 `out` writable.
 */
enum NmStatus nm_link(const struct NmSkeleton *skeleton,
                      const struct NmPointCloud *surface,
                      const struct NmLinkConfig *config,
                      struct NmGraph **out);

/*
 Parses SWC text.

 # Safety
 `text` must be a NUL-terminated string; `out` must be writable.
 */
enum NmStatus nm_graph_parse_swc(const char *text, struct NmGraph **out);

/*
 Parses skeleton-mesh text: `n m`, then `x y z r` per ball, then `i j`
 per edge.

 # Safety
 `text` must be a NUL-terminated string; `out` must be writable.
 */
enum NmStatus nm_graph_parse_mesh(const char *text, struct NmGraph **out);

/*
 Number of nodes, 0 for a null handle.

 # Safety
 `graph` must be null or a live handle.
 */
size_t nm_graph_node_count(const struct NmGraph *graph);

/*
 Number of edges, 0 for a null handle.

 # Safety
 `graph` must be null or a live handle.
 */
size_t nm_graph_edge_count(const struct NmGraph *graph);

/*
 Longest simple path length. When the search budget runs out the call
 returns [`NmStatus::Budget`] and still writes the best length found.

 # Safety
 `graph` must be a live handle; `out` must be writable.
 */
enum NmStatus nm_graph_neuron_length(const struct NmGraph *graph, uint64_t budget, double *out);

/*
 Number of branches off the trunk. A negative `min_branch_len` selects
 twice the median edge weight.

 # Safety
 `graph` must be a live handle; `out` must be writable.
 */
enum NmStatus nm_graph_branch_count(const struct NmGraph *graph,
                                    double min_branch_len,
                                    uint64_t budget,
                                    size_t *out);

/*
 Writes the `d` largest weighted-adjacency eigenvalues in descending
 order, zero padded.

 # Safety
 `graph` must be a live handle; `out` must hold `d` doubles.
 */
enum NmStatus nm_graph_spectrum(const struct NmGraph *graph, size_t d, double *out);

/*
 # Safety
 `graph` must be null or a handle not yet freed.
 */
void nm_graph_free(struct NmGraph *graph);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NEUROMORPH_H */

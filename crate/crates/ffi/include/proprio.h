/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef PROPRIO_H
#define PROPRIO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ProprioStatus {
  PROPRIO_STATUS_OK = 0,
  PROPRIO_STATUS_NULL_POINTER = 1,
  PROPRIO_STATUS_INVALID_ARGUMENT = 2,
  // Input outside a joint range or function domain.
  PROPRIO_STATUS_DOMAIN = 3,
  PROPRIO_STATUS_UNDECODABLE = 4,
  PROPRIO_STATUS_WIDTH_MISMATCH = 5,
  PROPRIO_STATUS_IO = 6,
  PROPRIO_STATUS_FORMAT = 7,
  // Output buffer shorter than required.
  PROPRIO_STATUS_BUFFER_TOO_SMALL = 8,
  PROPRIO_STATUS_PANIC = 9,
  PROPRIO_STATUS_OTHER = 10,
} ProprioStatus;

typedef enum ProprioFamily {
  PROPRIO_FAMILY_NORMALIZED = 0,
  PROPRIO_FAMILY_LINEAR = 1,
  PROPRIO_FAMILY_SIGMOID = 2,
  PROPRIO_FAMILY_GAUSSIAN = 3,
} ProprioFamily;

// Tuning-curve codec bound to a joint set.
typedef struct ProprioCodec ProprioCodec;

// Joint-angle dataset.
typedef struct ProprioDataset ProprioDataset;

// Trained or initialized map.
typedef struct ProprioMap ProprioMap;

// Decoder settings. A bandwidth of zero or less selects Silverman's rule.
typedef struct ProprioKdeParams {
  double bandwidth;
  double grid_resolution;
  double activation_floor;
} ProprioKdeParams;

typedef struct ProprioMetrics {
  double qe_encoded;
  double qe_angle;
  double topographic_error;
  // NaN when undefined.
  double neighbor_coherence_ratio;
  size_t undecodable_units;
  size_t excluded_samples;
} ProprioMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer
// stays valid until the next call into the library on the same thread.
const char *proprio_last_error(void);

// Library version as a static NUL-terminated string.
const char *proprio_version(void);

struct ProprioKdeParams proprio_kde_params_default(void);

// Generates `duration_s` seconds of babbling with the shipped arm and head.
//
// # Safety
// `out` must be a valid pointer to a handle slot.
enum ProprioStatus proprio_babble(uint64_t seed, double duration_s, struct ProprioDataset **out);

// Loads a dataset CSV. `joints_path` may be NULL for the shipped joint set.
//
// # Safety
// Paths must be NUL-terminated strings; `out` a valid handle slot.
enum ProprioStatus proprio_dataset_load(const char *path,
                                        const char *joints_path,
                                        struct ProprioDataset **out);

// # Safety
// `ds` must be a live dataset handle and `path` a NUL-terminated string.
enum ProprioStatus proprio_dataset_save(const struct ProprioDataset *ds, const char *path);

// Number of samples, 0 for NULL.
//
// # Safety
// `ds` must be NULL or a live dataset handle.
size_t proprio_dataset_len(const struct ProprioDataset *ds);

// Joints per sample, 0 for NULL.
//
// # Safety
// `ds` must be NULL or a live dataset handle.
size_t proprio_dataset_dim(const struct ProprioDataset *ds);

// Copies sample `t` into `out`, which holds `len` values.
//
// # Safety
// `ds` must be a live dataset handle and `out` valid for `len` writes.
enum ProprioStatus proprio_dataset_row(const struct ProprioDataset *ds,
                                       size_t t,
                                       double *out,
                                       size_t len);

// # Safety
// `ds` must be NULL or a handle not yet freed.
void proprio_dataset_free(struct ProprioDataset *ds);

// Codec for the joints of `ds`; `curves` is ignored for the normalized family.
//
// # Safety
// `ds` must be a live dataset handle and `out` a valid handle slot.
enum ProprioStatus proprio_codec_for_dataset(const struct ProprioDataset *ds,
                                             enum ProprioFamily family,
                                             size_t curves,
                                             struct ProprioCodec **out);

// Codec for a single joint spanning `[min_deg, max_deg]`.
//
// # Safety
// `out` must be a valid handle slot.
enum ProprioStatus proprio_codec_single(enum ProprioFamily family,
                                        size_t curves,
                                        double min_deg,
                                        double max_deg,
                                        struct ProprioCodec **out);

// # Safety
// `path` must be a NUL-terminated string and `out` a valid handle slot.
enum ProprioStatus proprio_codec_load(const char *path, struct ProprioCodec **out);

// # Safety
// `codec` must be a live codec handle and `path` a NUL-terminated string.
enum ProprioStatus proprio_codec_save(const struct ProprioCodec *codec, const char *path);

// Encoded vector length, 0 for NULL.
//
// # Safety
// `codec` must be NULL or a live codec handle.
size_t proprio_codec_width(const struct ProprioCodec *codec);

// Joints covered, 0 for NULL.
//
// # Safety
// `codec` must be NULL or a live codec handle.
size_t proprio_codec_dof(const struct ProprioCodec *codec);

// Encodes one posture of `dof` angles into `out` of capacity `len`.
//
// # Safety
// `posture` must be valid for `dof` reads and `out` for `len` writes.
enum ProprioStatus proprio_codec_encode(const struct ProprioCodec *codec,
                                        const double *posture,
                                        size_t dof,
                                        double *out,
                                        size_t len);

// Decodes an encoded vector of `width` values into `out` of capacity `len`.
//
// # Safety
// `code` must be valid for `width` reads and `out` for `len` writes.
enum ProprioStatus proprio_codec_decode(const struct ProprioCodec *codec,
                                        const double *code,
                                        size_t width,
                                        struct ProprioKdeParams params,
                                        double *out,
                                        size_t len);

// # Safety
// `codec` must be NULL or a handle not yet freed.
void proprio_codec_free(struct ProprioCodec *codec);

// Consistent initialization followed by training with default rates.
//
// # Safety
// `codec` and `ds` must be live handles and `out` a valid handle slot.
enum ProprioStatus proprio_map_train(const struct ProprioCodec *codec,
                                     const struct ProprioDataset *ds,
                                     size_t rows,
                                     size_t cols,
                                     size_t cycles,
                                     bool shuffle,
                                     uint64_t seed,
                                     struct ProprioMap **out);

// # Safety
// `path` must be a NUL-terminated string and `out` a valid handle slot.
enum ProprioStatus proprio_map_load(const char *path, struct ProprioMap **out);

// # Safety
// `map` must be a live map handle and `path` a NUL-terminated string.
enum ProprioStatus proprio_map_save(const struct ProprioMap *map, const char *path);

// Number of units, 0 for NULL.
//
// # Safety
// `map` must be NULL or a live map handle.
size_t proprio_map_units(const struct ProprioMap *map);

// Weight vector length, 0 for NULL.
//
// # Safety
// `map` must be NULL or a live map handle.
size_t proprio_map_width(const struct ProprioMap *map);

// Copies the weights of unit `k` into `out` of capacity `len`.
//
// # Safety
// `map` must be a live map handle and `out` valid for `len` writes.
enum ProprioStatus proprio_map_unit(const struct ProprioMap *map,
                                    size_t k,
                                    double *out,
                                    size_t len);

// Scores a map on a dataset using the codec stored in the map.
//
// # Safety
// `map` and `ds` must be live handles and `out` valid for one write.
enum ProprioStatus proprio_map_evaluate(const struct ProprioMap *map,
                                        const struct ProprioDataset *ds,
                                        struct ProprioKdeParams params,
                                        struct ProprioMetrics *out);

// # Safety
// `map` must be NULL or a handle not yet freed.
void proprio_map_free(struct ProprioMap *map);

// Distance to the nearest valid code after moving the code of `from_deg`
// toward the code of `to_deg` by `alpha`, on one joint.
//
// # Safety
// `out` must be valid for one write.
enum ProprioStatus proprio_inconsistency_drift(enum ProprioFamily family,
                                               size_t curves,
                                               double min_deg,
                                               double max_deg,
                                               double from_deg,
                                               double to_deg,
                                               double alpha,
                                               double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROPRIO_H */

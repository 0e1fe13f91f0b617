#ifndef OTDRIMG_H
#define OTDRIMG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum OtdrStatus {
  OTDR_STATUS_OK = 0,
  OTDR_STATUS_NULL_POINTER = 1,
  OTDR_STATUS_INVALID_ARGUMENT = 2,
  OTDR_STATUS_ENCODING_FAILED = 3,
  OTDR_STATUS_IMAGING_FAILED = 4,
  OTDR_STATUS_IO_FAILED = 5,
  OTDR_STATUS_BUFFER_TOO_SMALL = 6,
  OTDR_STATUS_PANIC = 99,
} OtdrStatus;

typedef enum OtdrEncoding {
  OTDR_ENCODING_GASF = 0,
  OTDR_ENCODING_GADF = 1,
  OTDR_ENCODING_RP = 2,
} OtdrEncoding;

/**
 * RGB image, kept planar internally.
 */
typedef struct OtdrImage OtdrImage;

/**
 * Square encoding matrix, row-major.
 */
typedef struct OtdrMatrix OtdrMatrix;

/**
 * Options for [`otdr_encode`].
 */
typedef struct OtdrEncodeOptions {
  /**
   * Reduce the normalized series to this many points first; 0 keeps the
   * full length.
   */
  size_t paa_length;
  /**
   * Recurrence threshold percentile, used when `rp_epsilon` is 0.
   */
  double rp_percentile;
  /**
   * Fixed recurrence threshold; 0 selects the percentile rule.
   */
  double rp_epsilon;
} OtdrEncodeOptions;

/**
 * Options for [`otdr_transform_sample`].
 */
typedef struct OtdrTransformOptions {
  size_t paa_length;
  double rp_percentile;
  double rp_epsilon;
  size_t output_height;
  size_t output_width;
} OtdrTransformOptions;

/**
 * Classification scores over the classes present in the true labels.
 */
typedef struct OtdrMetrics {
  uint64_t samples;
  double accuracy;
  double macro_precision;
  double macro_recall;
  double macro_f1;
  double weighted_f1;
  double class_f1[6];
  uint64_t class_support[6];
} OtdrMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *otdr_version(void);

/**
 * Message for the last failed call on this thread, or NULL. Valid until
 * the next `otdr_*` call on the same thread.
 */
const char *otdr_last_error(void);

struct OtdrEncodeOptions otdr_encode_options_default(void);

struct OtdrTransformOptions otdr_transform_options_default(void);

/**
 * Rescales `values` to [-1, 1], optionally reduces it with PAA and
 * computes one encoding.
 *
 * # Safety
 * `values` must point to `len` readable doubles, `options` may be NULL
 * (defaults) or point to a valid struct, and `out` must be writable.
 */
enum OtdrStatus otdr_encode(enum OtdrEncoding kind,
                            const double *values,
                            size_t len,
                            const struct OtdrEncodeOptions *options,
                            struct OtdrMatrix **out);

/**
 * Edge length of the matrix, 0 for NULL.
 *
 * # Safety
 * `matrix` must be NULL or a live handle.
 */
size_t otdr_matrix_size(const struct OtdrMatrix *matrix);

/**
 * Row-major entries (`size * size` doubles), owned by the handle.
 *
 * # Safety
 * `matrix` must be NULL or a live handle.
 */
const double *otdr_matrix_data(const struct OtdrMatrix *matrix);

/**
 * # Safety
 * `matrix` must be NULL or a handle not yet freed.
 */
void otdr_matrix_free(struct OtdrMatrix *matrix);

/**
 * Turns one 12 x 10,000 measurement (row `r` is region `r`, row-major)
 * into a fused RGB image.
 *
 * # Safety
 * `values` must point to `len` readable doubles, `options` may be NULL or
 * point to a valid struct, and `out` must be writable.
 */
enum OtdrStatus otdr_transform_sample(const double *values,
                                      size_t len,
                                      const struct OtdrTransformOptions *options,
                                      struct OtdrImage **out);

/**
 * # Safety
 * `image` must be NULL or a live handle.
 */
size_t otdr_image_height(const struct OtdrImage *image);

/**
 * # Safety
 * `image` must be NULL or a live handle.
 */
size_t otdr_image_width(const struct OtdrImage *image);

/**
 * Copies interleaved RGB bytes (`height * width * 3`) into `buf`.
 *
 * # Safety
 * `image` must be a live handle and `buf` must have `len` writable bytes.
 */
enum OtdrStatus otdr_image_copy_rgb(const struct OtdrImage *image, uint8_t *buf, size_t len);

/**
 * Writes the image as PNG. `checksum` (nullable) receives the content
 * hash recorded in manifests.
 *
 * # Safety
 * `image` must be a live handle, `path` a NUL-terminated UTF-8 string, and
 * `checksum` NULL or writable.
 */
enum OtdrStatus otdr_image_write_png(const struct OtdrImage *image,
                                     const char *path,
                                     uint64_t *checksum);

/**
 * # Safety
 * `image` must be NULL or a handle not yet freed.
 */
void otdr_image_free(struct OtdrImage *image);

/**
 * Scores `n` predictions; labels must be in 0..6.
 *
 * # Safety
 * `truth` and `pred` must point to `n` readable bytes, `out` must be
 * writable.
 */
enum OtdrStatus otdr_compute_metrics(const uint8_t *truth,
                                     const uint8_t *pred,
                                     size_t n,
                                     struct OtdrMetrics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OTDRIMG_H */

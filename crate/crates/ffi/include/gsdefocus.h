/* Generated by cbindgen; do not edit. */

#ifndef GSDEFOCUS_H
#define GSDEFOCUS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GsdStatus {
  GSD_OK = 0,
  GSD_ERR_NULL = 1,
  GSD_ERR_DOMAIN = 2,
  GSD_ERR_PARSE = 3,
  GSD_ERR_FORMAT = 4,
  GSD_ERR_IO = 5,
  GSD_ERR_EXISTS = 6,
  GSD_ERR_NONFINITE = 7,
  GSD_ERR_PANIC = 8,
  GSD_ERR_UTF8 = 9,
} GsdStatus;

typedef struct GsdDefocusMap GsdDefocusMap;

typedef struct GsdDepthMap GsdDepthMap;

typedef struct GsdImage GsdImage;

typedef struct GsdLens GsdLens;

typedef struct GsdScene GsdScene;

typedef struct GsdDepthMetrics {
  double rmse;
  double absrel;
  double delta1;
  double delta2;
  double delta3;
  uintptr_t valid_pixels;
} GsdDepthMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on this thread.
 */
const char *gsd_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gsd_version(void);

enum GsdStatus gsd_lens_new(double focal_length_m,
                            double f_number,
                            double focus_distance_m,
                            double pixel_pitch_m,
                            struct GsdLens **lens_out);

void gsd_lens_free(struct GsdLens *lens);

enum GsdStatus gsd_lens_coc_radius(const struct GsdLens *lens,
                                   double depth_m,
                                   double *sigma_px_out);

/**
 * Writes both depth solutions for `sigma_px`; `has_far_out` is set to 0 when
 * only the near one exists (and `far_out` is then left untouched).
 */
enum GsdStatus gsd_lens_invert_coc(const struct GsdLens *lens,
                                   double sigma_px,
                                   double *near_out,
                                   double *far_out,
                                   int32_t *has_far_out);

/**
 * Copies `width*height*channels` row-major interleaved samples in `[0, 1]`.
 */
enum GsdStatus gsd_image_new(uintptr_t width,
                             uintptr_t height,
                             uintptr_t channels,
                             const double *data,
                             struct GsdImage **image_out);

void gsd_image_free(struct GsdImage *image);

uintptr_t gsd_image_width(const struct GsdImage *image);

uintptr_t gsd_image_height(const struct GsdImage *image);

uintptr_t gsd_image_channels(const struct GsdImage *image);

/**
 * Borrowed pointer to the samples; valid while the image lives.
 */
const double *gsd_image_data(const struct GsdImage *image);

enum GsdStatus gsd_image_read_png(const char *path_utf8, struct GsdImage **image_out);

enum GsdStatus gsd_image_write_png(const struct GsdImage *image, const char *path_utf8, bool force);

/**
 * Copies `width*height` row-major values.
 */
enum GsdStatus gsd_depth_new(uintptr_t width,
                             uintptr_t height,
                             const double *data,
                             struct GsdDepthMap **map_out);

void gsd_depth_free(struct GsdDepthMap *map);

uintptr_t gsd_depth_width(const struct GsdDepthMap *map);

uintptr_t gsd_depth_height(const struct GsdDepthMap *map);

/**
 * Borrowed pointer to the values; valid while the map lives.
 */
const double *gsd_depth_data(const struct GsdDepthMap *map);

enum GsdStatus gsd_depth_read_pfm(const char *path_utf8, struct GsdDepthMap **map_out);

enum GsdStatus gsd_depth_write_pfm(const struct GsdDepthMap *map,
                                   const char *path_utf8,
                                   bool force);

/**
 * Copies `width*height` row-major values.
 */
enum GsdStatus gsd_defocus_new(uintptr_t width,
                               uintptr_t height,
                               const double *data,
                               struct GsdDefocusMap **map_out);

void gsd_defocus_free(struct GsdDefocusMap *map);

uintptr_t gsd_defocus_width(const struct GsdDefocusMap *map);

uintptr_t gsd_defocus_height(const struct GsdDefocusMap *map);

/**
 * Borrowed pointer to the values; valid while the map lives.
 */
const double *gsd_defocus_data(const struct GsdDefocusMap *map);

enum GsdStatus gsd_defocus_read_pfm(const char *path_utf8, struct GsdDefocusMap **map_out);

enum GsdStatus gsd_defocus_write_pfm(const struct GsdDefocusMap *map,
                                     const char *path_utf8,
                                     bool force);

enum GsdStatus gsd_defocus_from_depth(const struct GsdDepthMap *depth,
                                      const struct GsdLens *lens,
                                      struct GsdDefocusMap **defocus_out);

enum GsdStatus gsd_render_defocus(const struct GsdImage *image,
                                  const struct GsdDefocusMap *defocus,
                                  uintptr_t window,
                                  struct GsdImage **image_out);

enum GsdStatus gsd_invert_defocus(const struct GsdDefocusMap *defocus,
                                  const struct GsdLens *lens,
                                  const struct GsdDepthMap *prior,
                                  struct GsdDepthMap **depth_out);

enum GsdStatus gsd_depth_metrics(const struct GsdDepthMap *pred,
                                 const struct GsdDepthMap *gt,
                                 struct GsdDepthMetrics *metrics_out);

enum GsdStatus gsd_scene_load(const char *path_utf8, struct GsdScene **scene_out);

enum GsdStatus gsd_scene_save(const struct GsdScene *scene, const char *path_utf8, bool force);

void gsd_scene_free(struct GsdScene *scene);

uintptr_t gsd_scene_gaussian_count(const struct GsdScene *scene);

uintptr_t gsd_scene_view_count(const struct GsdScene *scene);

/**
 * Renders view `view` of the scene. Either output may be null to skip it.
 */
enum GsdStatus gsd_scene_render(const struct GsdScene *scene,
                                uintptr_t view,
                                bool enable_dof,
                                struct GsdImage **color_out,
                                struct GsdDepthMap **depth_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GSDEFOCUS_H */

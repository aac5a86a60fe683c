/* voxray C API: 3D probabilistic segmentation and volumetry from single
 * 2D projection images.
 *
 * All entry points return a voxray_status; on failure voxray_last_error()
 * holds a thread-local description. Handles are opaque and must be released
 * with their _destroy function. Configuration crosses the boundary as JSON
 * strings (schemas documented in README.md).
 */
#ifndef VOXRAY_H
#define VOXRAY_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum voxray_status {
  VOXRAY_OK = 0,
  VOXRAY_ERR_ARGUMENT = 1,
  VOXRAY_ERR_IO = 2,
  VOXRAY_ERR_RUNTIME = 3
} voxray_status;

const char* voxray_version(void);
const char* voxray_last_error(void);

/* Worker cap for internal parallel loops. Results are bit-identical at any
 * worker count. n <= 0 selects the hardware concurrency. */
void voxray_set_workers(int n);
int voxray_get_workers(void);

/* Progress callback: receives single-line JSON events. */
typedef void (*voxray_progress_fn)(const char* json_line, void* user);

/* ------------------------------------------------------------------ */
/* Volumes (f32 HU fields or u8 masks).                                */
/* ------------------------------------------------------------------ */
typedef struct voxray_volume_s voxray_volume;

/* spec_json: {"kind":"thorax"|"ribcage","dims":32,
 *             "shift":{...}? (see README)} */
voxray_status voxray_phantom_generate(const char* spec_json, uint64_t seed,
                                      voxray_volume** volume_out,
                                      voxray_volume** mask_out);
voxray_status voxray_volume_read(const char* path, voxray_volume** out);
voxray_status voxray_volume_write(const voxray_volume* vol, const char* path);
voxray_status voxray_volume_dims(const voxray_volume* vol, uint32_t dims_out[3]);
voxray_status voxray_volume_spacing(const voxray_volume* vol, float spacing_out[3]);
/* 0 = f32, 1 = u8 (mask). */
voxray_status voxray_volume_dtype(const voxray_volume* vol, uint8_t* dtype_out);
/* Borrowed pointer valid until the handle is destroyed; u8 masks are exposed
 * as 0/1 floats. */
voxray_status voxray_volume_data(const voxray_volume* vol, const float** data_out,
                                 size_t* count_out);
voxray_status voxray_volume_apply_shift(const voxray_volume* vol,
                                        const char* shift_json, uint64_t seed,
                                        voxray_volume** out);
void voxray_volume_destroy(voxray_volume* vol);

/* ------------------------------------------------------------------ */
/* DRR images.                                                         */
/* ------------------------------------------------------------------ */
typedef struct voxray_image_s voxray_image;

/* geometry_json: {"mode":"cone"|"parallel","source_to_isocenter_mm":2000,
 *                 "isocenter_to_detector_mm":0,"detector_rows":128,
 *                 "detector_cols":128,"pixel_mm":0.51} */
voxray_status voxray_render(const voxray_volume* vol, const char* geometry_json,
                            voxray_image** out);
voxray_status voxray_image_read(const char* path, voxray_image** out);
voxray_status voxray_image_write(const voxray_image* img, const char* path);
voxray_status voxray_image_write_pgm(const voxray_image* img, const char* path);
voxray_status voxray_image_dims(const voxray_image* img, uint32_t dims_out[2]);
voxray_status voxray_image_data(const voxray_image* img, const float** data_out,
                                size_t* count_out);
voxray_status voxray_image_downsample(const voxray_image* img, uint32_t rows,
                                      uint32_t cols, voxray_image** out);
void voxray_image_destroy(voxray_image* img);

/* ------------------------------------------------------------------ */
/* Pipeline drivers (JSON config in, artifacts on disk).               */
/* ------------------------------------------------------------------ */
voxray_status voxray_dataset_build(const char* config_json,
                                   voxray_progress_fn progress, void* user);
voxray_status voxray_train(const char* config_json, voxray_progress_fn progress,
                           void* user);
voxray_status voxray_train_uda(const char* config_json,
                               voxray_progress_fn progress, void* user);
/* On success *report_json_out (if non-NULL) receives a malloc'd copy of the
 * metrics report; release with voxray_string_destroy. */
voxray_status voxray_evaluate(const char* config_json,
                              voxray_progress_fn progress, void* user,
                              char** report_json_out);
void voxray_string_destroy(char* s);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* VOXRAY_H */

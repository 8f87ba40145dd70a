/*
 * C interface to the progdf engine.
 *
 * Every object is an opaque handle created by a *_load / *_open / *_parse
 * call and released with the matching *_free. Functions return a
 * pgdf_status; on failure pgdf_last_error() describes the problem (the
 * message is per thread and valid until the next call on that thread).
 * Strings and byte buffers handed out by the library are released with
 * pgdf_string_free / pgdf_bytes_free.
 */
#ifndef PROGDF_H
#define PROGDF_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PGDF_API __declspec(dllexport)
#else
#define PGDF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pgdf_status {
  PGDF_OK = 0,
  PGDF_ERR_INVALID_ARGUMENT = 1,
  PGDF_ERR_IO = 2,
  PGDF_ERR_FORMAT = 3,
  PGDF_ERR_NOT_FOUND = 4,
  PGDF_ERR_NUMERIC = 5,
  PGDF_ERR_INTERNAL = 6
} pgdf_status;

typedef struct pgdf_scene pgdf_scene;
typedef struct pgdf_model pgdf_model;
typedef struct pgdf_session pgdf_session;

typedef struct pgdf_bytes {
  uint8_t* data;
  size_t size;
} pgdf_bytes;

/* Orbit camera looking at `target`; angles in degrees, fov is vertical. */
typedef struct pgdf_orbit {
  double azimuth;
  double elevation;
  double radius;
  double fov;
  int width;
  int height;
  double target[3];
} pgdf_orbit;

typedef struct pgdf_render_timing {
  double compose_ms;
  double render_ms;
} pgdf_render_timing;

typedef void (*pgdf_log_fn)(const char* message, void* user);

PGDF_API const char* pgdf_version(void);
PGDF_API const char* pgdf_last_error(void);
PGDF_API const char* pgdf_status_name(pgdf_status status);
PGDF_API void pgdf_string_free(char* s);
PGDF_API void pgdf_bytes_free(pgdf_bytes* b);

/* Scenes */
PGDF_API pgdf_status pgdf_scene_load(const char* path, pgdf_scene** out);
PGDF_API pgdf_status pgdf_scene_parse(const char* json_text, pgdf_scene** out);
PGDF_API pgdf_status pgdf_scene_save(const pgdf_scene* scene, const char* path);
PGDF_API size_t pgdf_scene_count(const pgdf_scene* scene);
PGDF_API void pgdf_scene_free(pgdf_scene* scene);
PGDF_API pgdf_status pgdf_scene_render_png(const pgdf_scene* scene, const pgdf_orbit* camera, pgdf_bytes* png);

/* GDF models */
PGDF_API pgdf_status pgdf_model_load(const char* path, pgdf_model** out);
PGDF_API void pgdf_model_free(pgdf_model* model);
PGDF_API int pgdf_model_bins(const pgdf_model* model);
/* positions: count x 3; offsets: count x 14 (raw-space offsets). */
PGDF_API pgdf_status pgdf_model_forward(const pgdf_model* model, const double* positions, size_t count, double u,
                                        double* offsets);
/* mask: one byte per Gaussian, non-zero = in region. */
PGDF_API pgdf_status pgdf_predict_scene(const pgdf_scene* original, const pgdf_model* model, const uint8_t* mask,
                                        size_t mask_len, double u, pgdf_scene** out);

/* Pipeline and evaluation */
typedef struct pgdf_pipeline_options {
  const char* scene_path;
  const char* edit_path;
  const char* config_path; /* may be NULL */
  const char* out_dir;
  uint64_t seed;
  int override_seed; /* non-zero: `seed` replaces the config's seed */
  pgdf_log_fn log;   /* may be NULL */
  void* log_user;
} pgdf_pipeline_options;

PGDF_API pgdf_status pgdf_pipeline(const pgdf_pipeline_options* options);
PGDF_API pgdf_status pgdf_eval(const char* session_dir, const char* out_csv);
/* Writes scene.json, edit.json and config.json for the two-blob recolor
 * scenario into out_dir. */
PGDF_API pgdf_status pgdf_scenario_write(uint64_t seed, int gaussians_per_blob, int steps, const char* out_dir);

/* Sessions (read-only once opened; safe to use from several threads) */
PGDF_API pgdf_status pgdf_session_open(const char* dir, pgdf_session** out);
PGDF_API void pgdf_session_free(pgdf_session* session);
PGDF_API size_t pgdf_session_edit_count(const pgdf_session* session);
PGDF_API pgdf_status pgdf_session_meta(const pgdf_session* session, char** json_out);
/* request_json: {"camera": {...}, "controls": [{"edit": "edit-0", "u": 0.5}]}.
 * Unknown edit ids give PGDF_ERR_NOT_FOUND, malformed bodies PGDF_ERR_FORMAT.
 * timing may be NULL. */
PGDF_API pgdf_status pgdf_session_render(const pgdf_session* session, const char* request_json, pgdf_bytes* png,
                                         pgdf_render_timing* timing);

#ifdef __cplusplus
}
#endif

#endif

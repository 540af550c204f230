#ifndef ORCHARD_ORCHARD_H
#define ORCHARD_ORCHARD_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define ORCHARD_API __declspec(dllexport)
#else
#define ORCHARD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as CLI exit codes. */
typedef enum orchard_status {
  ORCHARD_OK = 0,
  ORCHARD_ERR_USAGE = 1,    /* bad arguments to the API itself */
  ORCHARD_ERR_IO = 2,       /* missing, unreadable, malformed or unwritable files */
  ORCHARD_ERR_PIPELINE = 3  /* validation and processing failures */
} orchard_status;

/* Message of the last failure on the calling thread; empty if none. */
ORCHARD_API const char* orchard_last_error(void);
ORCHARD_API const char* orchard_version(void);

/* Strings returned through char** out-parameters are owned by the caller. */
ORCHARD_API void orchard_string_free(char* s);

enum { ORCHARD_VARIETY_RED = 0, ORCHARD_VARIETY_GOLDEN = 1 };
enum { ORCHARD_SKY_BLUE = 0, ORCHARD_SKY_CLOUDY = 1 };
enum { ORCHARD_EQUALIZE_AUTO = 0, ORCHARD_EQUALIZE_ON = 1, ORCHARD_EQUALIZE_OFF = 2 };
enum { ORCHARD_CLASS_APPLE = 0, ORCHARD_CLASS_LEAVES = 1, ORCHARD_CLASS_SKY = 2, ORCHARD_CLASS_TRUNK = 3 };

/* ---- images ---- */

typedef struct orchard_image orchard_image;

/* Reads a binary PPM (P6) or PGM (P5, replicated to RGB), maxval 255. */
ORCHARD_API orchard_status orchard_image_load(const char* path, orchard_image** out);
ORCHARD_API void orchard_image_free(orchard_image* img);
ORCHARD_API orchard_status orchard_image_size(const orchard_image* img, int* width, int* height);
/* CSV `x,R,G,B` for one row. */
ORCHARD_API orchard_status orchard_image_row_profile(const orchard_image* img, int row, char** csv);

/* ---- segmentation ---- */

typedef struct orchard_segment_options {
  int variety;
  int sky;
  int equalize;
  double equalize_mean_threshold;
  double blur_sigma;
  int blur_passes;
  int sky_blur_passes;
} orchard_segment_options;

ORCHARD_API void orchard_segment_options_init(orchard_segment_options* opts);

typedef struct orchard_segmentation orchard_segmentation;

ORCHARD_API orchard_status orchard_segment(const orchard_image* img,
                                           const orchard_segment_options* opts,
                                           orchard_segmentation** out);
ORCHARD_API void orchard_segmentation_free(orchard_segmentation* seg);

/* Compares against a truth class map and adds a confusion section to the report. */
ORCHARD_API orchard_status orchard_segmentation_compare(orchard_segmentation* seg,
                                                        const char* truth_path);
/* Per-class F1 against the compared truth. */
ORCHARD_API orchard_status orchard_segmentation_f1(const orchard_segmentation* seg, int cls,
                                                   double* f1);
ORCHARD_API orchard_status orchard_segmentation_report(const orchard_segmentation* seg,
                                                       char** text);
/* Writes <stem>.classmap.pgm, four <stem>.<class>.pgm masks and <stem>.report.txt. */
ORCHARD_API orchard_status orchard_segmentation_save(const orchard_segmentation* seg,
                                                     const char* out_dir, const char* stem);

/* Segments every scene of a dataset directory, using each scene's variety and
 * sky mode from the manifest and the remaining settings from opts. With
 * use_truth set, reports include confusion sections and the summary the
 * summed confusion matrix. */
ORCHARD_API orchard_status orchard_segment_batch(const char* dataset_dir,
                                                 const orchard_segment_options* opts,
                                                 const char* out_dir, int use_truth, int threads,
                                                 char** summary);

/* ---- synthetic datasets ---- */

enum { ORCHARD_MIX_RED = 0, ORCHARD_MIX_GOLDEN = 1, ORCHARD_MIX_ALTERNATE = 2 };
enum { ORCHARD_SKYMIX_BLUE = 0, ORCHARD_SKYMIX_CLOUDY = 1, ORCHARD_SKYMIX_ALTERNATE = 2 };

typedef struct orchard_synth_options {
  int count;
  uint64_t seed;
  int width;
  int height;
  int varieties;  /* ORCHARD_MIX_* */
  int skies;      /* ORCHARD_SKYMIX_* */
  int min_apples;
  int max_apples;
  double dark_fraction;
  double glare_probability;
  double noise_sigma;
  double sky_fraction;
  double sky_fraction_jitter;
  int bottom_up;
} orchard_synth_options;

ORCHARD_API void orchard_synth_options_init(orchard_synth_options* opts);
ORCHARD_API orchard_status orchard_synth(const orchard_synth_options* opts, const char* out_dir,
                                         int threads);

/* ---- features ---- */

enum { ORCHARD_SOURCE_SEGMENTED = 0, ORCHARD_SOURCE_TRUTH = 1 };

/* Feature CSV for a dataset directory, 4 rows per scene. */
ORCHARD_API orchard_status orchard_features(const char* dataset_dir, int source,
                                            const orchard_segment_options* opts, int threads,
                                            const char* csv_path);

/* ---- classifier ---- */

enum { ORCHARD_RULE_GD = 0, ORCHARD_RULE_MOMENTUM = 1 };

typedef struct orchard_train_options {
  int hidden[2];
  int hidden_layers;  /* 1 or 2 */
  int rule;
  double momentum;
  double learning_rate;
  int max_epochs;
  double goal_mse;
  uint64_t seed;
  double split[3];
} orchard_train_options;

ORCHARD_API void orchard_train_options_init(orchard_train_options* opts);

typedef struct orchard_model orchard_model;

ORCHARD_API orchard_status orchard_train(const char* features_csv,
                                         const orchard_train_options* opts, orchard_model** out);
/* Writes the network to path and the feature scaling to path + ".scale". */
ORCHARD_API orchard_status orchard_model_save(const orchard_model* model, const char* path);
ORCHARD_API orchard_status orchard_model_load(const char* path, orchard_model** out);
ORCHARD_API void orchard_model_free(orchard_model* model);

/* Training report of a model produced by orchard_train. */
ORCHARD_API orchard_status orchard_model_report(const orchard_model* model, int include_timing,
                                                char** text);
/* CSV `epoch,mse`. */
ORCHARD_API orchard_status orchard_model_training_log(const orchard_model* model, char** csv);
ORCHARD_API orchard_status orchard_model_predict(const orchard_model* model,
                                                 const double features[3], double* score);

/* Segment, extract the four class descriptors and score each one. */
ORCHARD_API orchard_status orchard_classify(const orchard_model* model, const orchard_image* img,
                                            const orchard_segment_options* opts, char** report);

/* Accuracy, MSE and R of the model over a feature CSV. */
ORCHARD_API orchard_status orchard_eval(const orchard_model* model, const char* features_csv,
                                        char** report);

#ifdef __cplusplus
}
#endif

#endif

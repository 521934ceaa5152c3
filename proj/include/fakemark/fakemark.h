/* Copyright 2026 The FakeMark Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C API of the fakemark watermarking library.
 *
 * All entry points return FM_OK (0) on success or a negative error code; a
 * human-readable message is written to the caller-provided (err, err_len)
 * buffer when one is given. Handles are opaque and freed with their matching
 * *_free function.
 */

#ifndef FAKEMARK_FAKEMARK_H_
#define FAKEMARK_FAKEMARK_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum fm_status {
  FM_OK = 0,
  FM_ERR_INVALID_ARGUMENT = -1,
  FM_ERR_IO = -2,
  FM_ERR_RUNTIME = -3,
};

const char* fm_version(void);

/* ---- corpus ------------------------------------------------------------ */

/* Generates the synthetic artifact corpus described by spec_json into
 * out_dir (WAV files plus out_dir/manifest.tsv). Keys (all optional):
 *   num_classes, train_per_class, val_per_class, test_per_class,
 *   duration_lo_s, duration_hi_s, seed, level_db, gain_db, artifact_jitter
 */
int fm_corpus_synth(const char* spec_json, const char* out_dir, char* err, size_t err_len);

/* ---- training ----------------------------------------------------------- */

/* Runs a training job described by config_json (the TrainConfig key set; see
 * the README). Blocks until the run finishes; checkpoints land in
 * <run_dir>/ckpt/{best,last}. progress may be NULL; returning nonzero from it
 * aborts the run. */
typedef int (*fm_progress_fn)(int64_t step, double total_loss, void* user);
int fm_train(const char* config_json, fm_progress_fn progress, void* user, char* err,
             size_t err_len);

/* ---- models -------------------------------------------------------------- */

typedef struct fm_model fm_model;

fm_model* fm_model_load(const char* checkpoint_path, char* err, size_t err_len);
void fm_model_free(fm_model* model);
int fm_model_num_classes(const fm_model* model);
/* Name of the system registered for a class id, or NULL. The pointer stays
 * valid until the model is freed. */
const char* fm_model_class_name(const fm_model* model, int class_id);

/* Watermarks in_wav with the given message class. Writes the watermarked
 * signal to out_wav and, when delta_wav is non-NULL, the watermark signal
 * alone. si_snr_out (optional) receives SI-SNR(in, out) in dB. */
int fm_embed_file(fm_model* model, const char* in_wav, int message_class, const char* out_wav,
                  const char* delta_wav, double* si_snr_out, char* err, size_t err_len);

/* Class probabilities for in_wav. probs must hold fm_model_num_classes()
 * doubles; argmax_out (optional) receives the decoded class. */
int fm_detect_file(fm_model* model, const char* in_wav, double* probs, int probs_len,
                   int* argmax_out, char* err, size_t err_len);

/* ---- bench ---------------------------------------------------------------- */

/* Runs the (model x distortion) evaluation grid described by config_json:
 *   {"models": [{"name": "...", "checkpoint": "..."}],
 *    "manifest": "...", "distortions": ["none","speed",...] or "all",
 *    "policy": "none|random|matching", "seed": N,
 *    "adapters": "adapters.json" (optional), "out": "report.txt"}
 * Writes the machine-readable report to `out` and an aligned table to
 * `out`.txt. */
int fm_bench(const char* config_json, char* err, size_t err_len);

/* ---- visualization -------------------------------------------------------- */

/* Three-panel PNG: waveform overlay, clean spectrogram, difference
 * spectrogram. */
int fm_viz(const char* clean_wav, const char* wm_wav, const char* out_png, char* err,
           size_t err_len);

/* ---- metrics ---------------------------------------------------------------- */

/* SI-SNR between two WAV files of equal length (dB, capped at +100). */
int fm_si_snr_files(const char* reference_wav, const char* estimate_wav, double* out, char* err,
                    size_t err_len);

#ifdef __cplusplus
}
#endif

#endif /* FAKEMARK_FAKEMARK_H_ */

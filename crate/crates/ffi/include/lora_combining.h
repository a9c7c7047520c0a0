#ifndef LORA_COMBINING_H
#define LORA_COMBINING_H

/* Generated by cbindgen from crates/ffi. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LcStatus {
  LC_STATUS_OK = 0,
  LC_STATUS_NULL_POINTER = 1,
  LC_STATUS_INVALID_ARGUMENT = 2,
  LC_STATUS_SYMBOL_OUT_OF_RANGE = 3,
  LC_STATUS_DIMENSION_MISMATCH = 4,
  LC_STATUS_NOT_BRACKETED = 5,
  LC_STATUS_PANIC = 6,
} LcStatus;

/**
 * Values accepted by the `detector` argument of the theory functions.
 */
typedef enum LcTheoryDetector {
  LC_THEORY_DETECTOR_COHERENT_AWGN = 0,
  LC_THEORY_DETECTOR_NONCOHERENT_RAYLEIGH = 1,
} LcTheoryDetector;

/**
 * Values accepted by the `detector` argument of [`lc_sim_config_new`].
 */
typedef enum LcDetectorKind {
  LC_DETECTOR_KIND_COHERENT = 0,
  LC_DETECTOR_KIND_NONCOHERENT = 1,
  LC_DETECTOR_KIND_SEMICOHERENT = 2,
} LcDetectorKind;

/**
 * Values accepted by the `channel` argument of [`lc_sim_config_new`].
 */
typedef enum LcChannelModel {
  LC_CHANNEL_MODEL_AWGN = 0,
  LC_CHANNEL_MODEL_RAYLEIGH = 1,
} LcChannelModel;

/**
 * Opaque demodulator and detector state for one spreading factor.
 */
typedef struct LcReceiver LcReceiver;

/**
 * Opaque Monte Carlo configuration.
 */
typedef struct LcSimConfig LcSimConfig;

/**
 * Same layout as `double _Complex` and `std::complex<double>`.
 */
typedef struct LcComplex {
  double re;
  double im;
} LcComplex;

/**
 * One simulated SNR point. `mean_iterations` is NaN unless the detector is
 * semi-coherent.
 */
typedef struct LcBerPoint {
  double snr_db;
  uint64_t symbols_tested;
  uint64_t symbol_errors;
  uint64_t bit_errors;
  double ser;
  double ber;
  double ci95_low;
  double ci95_high;
  double mean_iterations;
} LcBerPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *lc_version(void);

/**
 * Copy the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len` bytes). Returns the full message length without the
 * terminator, or 0 if the last call succeeded. `buf` may be null to query
 * the length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t lc_last_error_message(char *buf, size_t len);

/**
 * Symbol error probability for alphabet size `m`, `l` antennas and
 * `es_over_n0` = M·SNR (linear). `detector` is an [`LcTheoryDetector`].
 *
 * # Safety
 * `out_ser` must be a valid pointer.
 */
enum LcStatus lc_theory_ser(uint32_t detector,
                            size_t m,
                            size_t l,
                            double es_over_n0,
                            double *out_ser);

/**
 * Bit error probability at a per-antenna SNR in dB for spreading factor `sf`.
 *
 * # Safety
 * `out_ber` must be a valid pointer.
 */
enum LcStatus lc_theory_ber(uint32_t detector,
                            uint32_t sf,
                            size_t l,
                            double snr_db,
                            double *out_ber);

/**
 * Distance multiplier bought by `gain_db` under a log-distance path loss
 * with the given exponent.
 *
 * # Safety
 * `out_factor` must be a valid pointer.
 */
enum LcStatus lc_range_factor(double gain_db, double exponent, double *out_factor);

/**
 * SNR gap `a − b` in dB at `target_ber` between two sampled BER curves.
 * Fails with `LC_STATUS_NOT_BRACKETED` if either curve misses the target.
 *
 * # Safety
 * Each array must hold the stated number of doubles; `out_gap_db` must be valid.
 */
enum LcStatus lc_snr_gap_at_ber(const double *snr_a,
                                const double *ber_a,
                                size_t len_a,
                                const double *snr_b,
                                const double *ber_b,
                                size_t len_b,
                                double target_ber,
                                double *out_gap_db);

/**
 * Create a receiver for spreading factor `sf` (7..=12) and amplitude `amplitude`.
 *
 * # Safety
 * `out_receiver` must be a valid pointer; release the handle with [`lc_receiver_free`].
 */
enum LcStatus lc_receiver_new(uint32_t sf, double amplitude, struct LcReceiver **out_receiver);

/**
 * # Safety
 * `receiver` must be null or a handle from [`lc_receiver_new`] not yet freed.
 */
void lc_receiver_free(struct LcReceiver *receiver);

/**
 * Samples per symbol (`M = 2^SF`), or 0 for a null handle.
 *
 * # Safety
 * `receiver` must be null or a live handle.
 */
size_t lc_receiver_samples_per_symbol(const struct LcReceiver *receiver);

/**
 * Write the `M` samples of chirp `symbol` into `out_samples`.
 *
 * # Safety
 * `receiver` must be live; `out_samples` must hold `out_len` elements.
 */
enum LcStatus lc_modulate(const struct LcReceiver *receiver,
                          size_t symbol,
                          struct LcComplex *out_samples,
                          size_t out_len);

/**
 * Coherent MRC decision for one symbol (`num_antennas × M` samples) with
 * known channel coefficients.
 *
 * # Safety
 * Pointers must be valid for the stated sizes.
 */
enum LcStatus lc_detect_coherent(struct LcReceiver *receiver,
                                 const struct LcComplex *samples,
                                 size_t num_antennas,
                                 const struct LcComplex *channel,
                                 size_t *out_symbol);

/**
 * Square-law (non-coherent) decision for one symbol.
 *
 * # Safety
 * Pointers must be valid for the stated sizes.
 */
enum LcStatus lc_detect_noncoherent(struct LcReceiver *receiver,
                                    const struct LcComplex *samples,
                                    size_t num_antennas,
                                    size_t *out_symbol);

/**
 * Iterative semi-coherent decisions for a coherence frame of `num_symbols`
 * symbols (`num_symbols × num_antennas × M` samples). Writes `num_symbols`
 * decisions and the number of refinement passes used.
 *
 * # Safety
 * Pointers must be valid for the stated sizes.
 */
enum LcStatus lc_detect_semicoherent(struct LcReceiver *receiver,
                                     const struct LcComplex *samples,
                                     size_t num_symbols,
                                     size_t num_antennas,
                                     size_t n_max,
                                     size_t *out_symbols,
                                     size_t *out_iterations);

/**
 * New simulation config with default trial counts (10^5 symbols, 100 target
 * bit errors, τ_c = 10, N_max = 50, seed 0).
 *
 * # Safety
 * `out_config` must be valid; release with [`lc_sim_config_free`].
 */
enum LcStatus lc_sim_config_new(uint32_t detector,
                                uint32_t channel,
                                uint32_t sf,
                                size_t num_antennas,
                                struct LcSimConfig **out_config);

/**
 * # Safety
 * `config` must be null or a live handle from [`lc_sim_config_new`].
 */
void lc_sim_config_free(struct LcSimConfig *config);

/**
 * Set the sample-size controls: minimum symbols, bit-error target and
 * symbol cap. Rejected combinations leave the config unchanged.
 *
 * # Safety
 * `config` must be a live handle.
 */
enum LcStatus lc_sim_config_set_budget(struct LcSimConfig *config,
                                       uint64_t trials,
                                       uint64_t target_errors,
                                       uint64_t max_symbols);

/**
 * Set the coherence frame length and semi-coherent iteration cap.
 *
 * # Safety
 * `config` must be a live handle.
 */
enum LcStatus lc_sim_config_set_coherence(struct LcSimConfig *config, size_t tau_c, size_t n_max);

/**
 * # Safety
 * `config` must be a live handle.
 */
enum LcStatus lc_sim_config_set_seed(struct LcSimConfig *config, uint64_t seed);

/**
 * Simulate one SNR point. Uses the random streams of the first point of a
 * sweep, so the result matches row 0 of the CLI for the same seed.
 * `snr_db` may be `INFINITY` for a noiseless run.
 *
 * # Safety
 * `config` must be a live handle and `out_point` valid.
 */
enum LcStatus lc_run_point(const struct LcSimConfig *config,
                           double snr_db,
                           struct LcBerPoint *out_point);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LORA_COMBINING_H */

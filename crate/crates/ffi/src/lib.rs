//! C ABI over `lora_combining`.
//!
//! Conventions:
//! - every fallible function returns an [`LcStatus`] and writes results through
//!   out-pointers, which are left untouched on failure;
//! - the message of the most recent failure on the calling thread is available
//!   from [`lc_last_error_message`];
//! - handles are created by `*_new` and released by the matching `*_free`;
//! - sample buffers are row-major: antenna-major within a symbol, and symbols
//!   one after another for frame-level calls;
//! - panics never cross the boundary; they surface as `LC_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lora_combining::channel::ChannelModel;
use lora_combining::chirp::{modulate, DemodGrid, Demodulator, ModulationParams};
use lora_combining::detectors::{ChannelEstimate, SemiCoherentConfig, SymbolDetector};
use lora_combining::linkbudget::{range_factor, snr_gap_at_ber, CurvePoint, LabeledCurve, PathLossModel};
use lora_combining::montecarlo::{run_point, DetectorKind, SimConfig};
use lora_combining::theory::{self, TheoryDetector};
use lora_combining::{Complex64, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SymbolOutOfRange = 3,
    DimensionMismatch = 4,
    NotBracketed = 5,
    Panic = 6,
}

/// Values accepted by the `detector` argument of the theory functions.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LcTheoryDetector {
    CoherentAwgn = 0,
    NoncoherentRayleigh = 1,
}

/// Values accepted by the `detector` argument of [`lc_sim_config_new`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LcDetectorKind {
    Coherent = 0,
    Noncoherent = 1,
    Semicoherent = 2,
}

/// Values accepted by the `channel` argument of [`lc_sim_config_new`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LcChannelModel {
    Awgn = 0,
    Rayleigh = 1,
}

/// Same layout as `double _Complex` and `std::complex<double>`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LcComplex {
    pub re: f64,
    pub im: f64,
}

/// One simulated SNR point. `mean_iterations` is NaN unless the detector is
/// semi-coherent.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LcBerPoint {
    pub snr_db: f64,
    pub symbols_tested: u64,
    pub symbol_errors: u64,
    pub bit_errors: u64,
    pub ser: f64,
    pub ber: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub mean_iterations: f64,
}

/// Opaque demodulator and detector state for one spreading factor.
pub struct LcReceiver {
    params: ModulationParams,
    demod: Demodulator,
    detector: SymbolDetector,
}

/// Opaque Monte Carlo configuration.
pub struct LcSimConfig {
    inner: SimConfig,
}

struct Failure {
    status: LcStatus,
    message: String,
}

impl Failure {
    fn new(status: LcStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn null(what: &str) -> Self {
        Self::new(LcStatus::NullPointer, format!("`{what}` is null"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::SymbolOutOfRange { .. } => LcStatus::SymbolOutOfRange,
            Error::DimensionMismatch { .. } | Error::EmptyInput(_) => LcStatus::DimensionMismatch,
            Error::NotBracketed { .. } => LcStatus::NotBracketed,
            _ => LcStatus::InvalidArgument,
        };
        Self::new(status, e.to_string())
    }
}

type FfiResult<T = ()> = Result<T, Failure>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> FfiResult) -> LcStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LcStatus::Ok,
        Ok(Err(fail)) => {
            set_last_error(&fail.message);
            fail.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            LcStatus::Panic
        }
    }
}

fn out<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    // SAFETY: caller guarantees a valid, aligned, writable pointer when non-null.
    unsafe { p.as_mut() }.ok_or_else(|| Failure::null(what))
}

fn complex_slice<'a>(p: *const LcComplex, len: usize, what: &str) -> FfiResult<&'a [Complex64]> {
    if p.is_null() {
        return Err(Failure::null(what));
    }
    // SAFETY: LcComplex and Complex64 are both #[repr(C)] pairs of f64, and the
    // caller guarantees `len` readable elements.
    Ok(unsafe { std::slice::from_raw_parts(p.cast::<Complex64>(), len) })
}

fn theory_detector(v: u32) -> FfiResult<TheoryDetector> {
    match v {
        0 => Ok(TheoryDetector::CoherentAwgn),
        1 => Ok(TheoryDetector::NoncoherentRayleigh),
        _ => Err(Failure::new(LcStatus::InvalidArgument, format!("unknown theory detector {v}"))),
    }
}

fn check_antennas(n: usize) -> FfiResult {
    if n == 0 {
        return Err(Failure::new(LcStatus::DimensionMismatch, "at least one antenna is required"));
    }
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len` bytes). Returns the full message length without the
/// terminator, or 0 if the last call succeeded. `buf` may be null to query
/// the length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn lc_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Symbol error probability for alphabet size `m`, `l` antennas and
/// `es_over_n0` = M·SNR (linear). `detector` is an [`LcTheoryDetector`].
///
/// # Safety
/// `out_ser` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lc_theory_ser(detector: u32, m: usize, l: usize, es_over_n0: f64, out_ser: *mut f64) -> LcStatus {
    guard(|| {
        let det = theory_detector(detector)?;
        let dst = out(out_ser, "out_ser")?;
        *dst = theory::ser(det, m, l, es_over_n0)?;
        Ok(())
    })
}

/// Bit error probability at a per-antenna SNR in dB for spreading factor `sf`.
///
/// # Safety
/// `out_ber` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lc_theory_ber(detector: u32, sf: u32, l: usize, snr_db: f64, out_ber: *mut f64) -> LcStatus {
    guard(|| {
        let det = theory_detector(detector)?;
        let dst = out(out_ber, "out_ber")?;
        let params = ModulationParams::relaxed(sf, 1.0)?;
        if snr_db.is_nan() {
            return Err(Failure::new(LcStatus::InvalidArgument, "SNR is NaN"));
        }
        *dst = theory::theory_point(det, params.m(), l, snr_db)?.ber;
        Ok(())
    })
}

/// Distance multiplier bought by `gain_db` under a log-distance path loss
/// with the given exponent.
///
/// # Safety
/// `out_factor` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lc_range_factor(gain_db: f64, exponent: f64, out_factor: *mut f64) -> LcStatus {
    guard(|| {
        let dst = out(out_factor, "out_factor")?;
        let model = PathLossModel::new(PathLossModel::default().reference_loss_db, exponent, 1.0)?;
        *dst = range_factor(gain_db, &model);
        Ok(())
    })
}

/// SNR gap `a − b` in dB at `target_ber` between two sampled BER curves.
/// Fails with `LC_STATUS_NOT_BRACKETED` if either curve misses the target.
///
/// # Safety
/// Each array must hold the stated number of doubles; `out_gap_db` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lc_snr_gap_at_ber(
    snr_a: *const f64,
    ber_a: *const f64,
    len_a: usize,
    snr_b: *const f64,
    ber_b: *const f64,
    len_b: usize,
    target_ber: f64,
    out_gap_db: *mut f64,
) -> LcStatus {
    guard(|| {
        let curve = |name: &str, s: *const f64, b: *const f64, n: usize| -> FfiResult<LabeledCurve> {
            if s.is_null() || b.is_null() {
                return Err(Failure::null(name));
            }
            let (s, b) = (std::slice::from_raw_parts(s, n), std::slice::from_raw_parts(b, n));
            Ok(LabeledCurve::new(
                name,
                s.iter().zip(b).map(|(&snr_db, &ber)| CurvePoint { snr_db, ber }).collect(),
            ))
        };
        let a = curve("a", snr_a, ber_a, len_a)?;
        let b = curve("b", snr_b, ber_b, len_b)?;
        let dst = out(out_gap_db, "out_gap_db")?;
        *dst = snr_gap_at_ber(&a, &b, target_ber)?;
        Ok(())
    })
}

/// Create a receiver for spreading factor `sf` (7..=12) and amplitude `amplitude`.
///
/// # Safety
/// `out_receiver` must be a valid pointer; release the handle with [`lc_receiver_free`].
#[no_mangle]
pub unsafe extern "C" fn lc_receiver_new(sf: u32, amplitude: f64, out_receiver: *mut *mut LcReceiver) -> LcStatus {
    guard(|| {
        let dst = out(out_receiver, "out_receiver")?;
        let params = ModulationParams::new(sf, amplitude)?;
        *dst = Box::into_raw(Box::new(LcReceiver {
            params,
            demod: Demodulator::new(params),
            detector: SymbolDetector::new(params),
        }));
        Ok(())
    })
}

/// # Safety
/// `receiver` must be null or a handle from [`lc_receiver_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lc_receiver_free(receiver: *mut LcReceiver) {
    if !receiver.is_null() {
        drop(Box::from_raw(receiver));
    }
}

/// Samples per symbol (`M = 2^SF`), or 0 for a null handle.
///
/// # Safety
/// `receiver` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lc_receiver_samples_per_symbol(receiver: *const LcReceiver) -> usize {
    receiver.as_ref().map_or(0, |r| r.params.m())
}

/// Write the `M` samples of chirp `symbol` into `out_samples`.
///
/// # Safety
/// `receiver` must be live; `out_samples` must hold `out_len` elements.
#[no_mangle]
pub unsafe extern "C" fn lc_modulate(
    receiver: *const LcReceiver,
    symbol: usize,
    out_samples: *mut LcComplex,
    out_len: usize,
) -> LcStatus {
    guard(|| {
        let r = receiver.as_ref().ok_or_else(|| Failure::null("receiver"))?;
        if out_samples.is_null() {
            return Err(Failure::null("out_samples"));
        }
        let x = modulate(symbol, &r.params)?;
        if out_len != x.samples.len() {
            return Err(Error::DimensionMismatch {
                what: "output buffer",
                expected: x.samples.len(),
                found: out_len,
            }
            .into());
        }
        let dst = std::slice::from_raw_parts_mut(out_samples, out_len);
        for (d, s) in dst.iter_mut().zip(&x.samples) {
            *d = LcComplex { re: s.re, im: s.im };
        }
        Ok(())
    })
}

impl LcReceiver {
    fn grid(&mut self, samples: *const LcComplex, num_antennas: usize) -> FfiResult<DemodGrid> {
        check_antennas(num_antennas)?;
        let m = self.params.m();
        let all = complex_slice(samples, m * num_antennas, "samples")?;
        let rows: Vec<&[Complex64]> = all.chunks_exact(m).collect();
        Ok(self.demod.demodulate(&rows)?)
    }
}

/// Coherent MRC decision for one symbol (`num_antennas × M` samples) with
/// known channel coefficients.
///
/// # Safety
/// Pointers must be valid for the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn lc_detect_coherent(
    receiver: *mut LcReceiver,
    samples: *const LcComplex,
    num_antennas: usize,
    channel: *const LcComplex,
    out_symbol: *mut usize,
) -> LcStatus {
    guard(|| {
        let r = receiver.as_mut().ok_or_else(|| Failure::null("receiver"))?;
        let grid = r.grid(samples, num_antennas)?;
        let h = complex_slice(channel, num_antennas, "channel")?;
        let dst = out(out_symbol, "out_symbol")?;
        let est = ChannelEstimate {
            per_antenna: h.to_vec(),
        };
        *dst = r.detector.with_estimate(&grid, &est)?.symbol;
        Ok(())
    })
}

/// Square-law (non-coherent) decision for one symbol.
///
/// # Safety
/// Pointers must be valid for the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn lc_detect_noncoherent(
    receiver: *mut LcReceiver,
    samples: *const LcComplex,
    num_antennas: usize,
    out_symbol: *mut usize,
) -> LcStatus {
    guard(|| {
        let r = receiver.as_mut().ok_or_else(|| Failure::null("receiver"))?;
        let grid = r.grid(samples, num_antennas)?;
        let dst = out(out_symbol, "out_symbol")?;
        *dst = r.detector.noncoherent(&grid)?.symbol;
        Ok(())
    })
}

/// Iterative semi-coherent decisions for a coherence frame of `num_symbols`
/// symbols (`num_symbols × num_antennas × M` samples). Writes `num_symbols`
/// decisions and the number of refinement passes used.
///
/// # Safety
/// Pointers must be valid for the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn lc_detect_semicoherent(
    receiver: *mut LcReceiver,
    samples: *const LcComplex,
    num_symbols: usize,
    num_antennas: usize,
    n_max: usize,
    out_symbols: *mut usize,
    out_iterations: *mut usize,
) -> LcStatus {
    guard(|| {
        let r = receiver.as_mut().ok_or_else(|| Failure::null("receiver"))?;
        check_antennas(num_antennas)?;
        if num_symbols == 0 {
            return Err(Failure::new(LcStatus::DimensionMismatch, "empty coherence frame"));
        }
        if out_symbols.is_null() {
            return Err(Failure::null("out_symbols"));
        }
        let iters = out(out_iterations, "out_iterations")?;
        let cfg = SemiCoherentConfig::new(num_symbols, n_max)?;
        let per_symbol = r.params.m() * num_antennas;
        let all = complex_slice(samples, per_symbol * num_symbols, "samples")?;
        let grids = all
            .chunks_exact(per_symbol)
            .map(|s| r.grid(s.as_ptr().cast(), num_antennas))
            .collect::<FfiResult<Vec<_>>>()?;
        let results = r.detector.semicoherent_frame(&grids, &cfg)?;
        let dst = std::slice::from_raw_parts_mut(out_symbols, num_symbols);
        for (d, res) in dst.iter_mut().zip(&results) {
            *d = res.symbol;
        }
        *iters = results.first().map_or(0, |r| r.iterations_used);
        Ok(())
    })
}

/// New simulation config with default trial counts (10^5 symbols, 100 target
/// bit errors, τ_c = 10, N_max = 50, seed 0).
///
/// # Safety
/// `out_config` must be valid; release with [`lc_sim_config_free`].
#[no_mangle]
pub unsafe extern "C" fn lc_sim_config_new(
    detector: u32,
    channel: u32,
    sf: u32,
    num_antennas: usize,
    out_config: *mut *mut LcSimConfig,
) -> LcStatus {
    guard(|| {
        let dst = out(out_config, "out_config")?;
        let detector = match detector {
            0 => DetectorKind::Coherent,
            1 => DetectorKind::Noncoherent,
            2 => DetectorKind::Semicoherent,
            v => return Err(Failure::new(LcStatus::InvalidArgument, format!("unknown detector {v}"))),
        };
        let channel = match channel {
            0 => ChannelModel::Awgn,
            1 => ChannelModel::Rayleigh,
            v => return Err(Failure::new(LcStatus::InvalidArgument, format!("unknown channel {v}"))),
        };
        let inner = SimConfig::new(sf, num_antennas, detector, channel);
        inner.validate()?;
        *dst = Box::into_raw(Box::new(LcSimConfig { inner }));
        Ok(())
    })
}

/// # Safety
/// `config` must be null or a live handle from [`lc_sim_config_new`].
#[no_mangle]
pub unsafe extern "C" fn lc_sim_config_free(config: *mut LcSimConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Set the sample-size controls: minimum symbols, bit-error target and
/// symbol cap. Rejected combinations leave the config unchanged.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lc_sim_config_set_budget(
    config: *mut LcSimConfig,
    trials: u64,
    target_errors: u64,
    max_symbols: u64,
) -> LcStatus {
    update(config, |c| {
        c.trials = trials;
        c.target_errors = target_errors;
        c.max_symbols = max_symbols;
    })
}

/// Set the coherence frame length and semi-coherent iteration cap.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lc_sim_config_set_coherence(config: *mut LcSimConfig, tau_c: usize, n_max: usize) -> LcStatus {
    update(config, |c| {
        c.tau_c = tau_c;
        c.n_max = n_max;
    })
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lc_sim_config_set_seed(config: *mut LcSimConfig, seed: u64) -> LcStatus {
    update(config, |c| c.seed = seed)
}

unsafe fn update(config: *mut LcSimConfig, f: impl FnOnce(&mut SimConfig)) -> LcStatus {
    guard(|| {
        let c = config.as_mut().ok_or_else(|| Failure::null("config"))?;
        let mut next = c.inner.clone();
        f(&mut next);
        next.validate()?;
        c.inner = next;
        Ok(())
    })
}

/// Simulate one SNR point. Uses the random streams of the first point of a
/// sweep, so the result matches row 0 of the CLI for the same seed.
/// `snr_db` may be `INFINITY` for a noiseless run.
///
/// # Safety
/// `config` must be a live handle and `out_point` valid.
#[no_mangle]
pub unsafe extern "C" fn lc_run_point(config: *const LcSimConfig, snr_db: f64, out_point: *mut LcBerPoint) -> LcStatus {
    guard(|| {
        let c = config.as_ref().ok_or_else(|| Failure::null("config"))?;
        let dst = out(out_point, "out_point")?;
        let p = run_point(&c.inner, snr_db)?;
        *dst = LcBerPoint {
            snr_db: p.snr_db,
            symbols_tested: p.symbols_tested,
            symbol_errors: p.symbol_errors,
            bit_errors: p.bit_errors,
            ser: p.ser,
            ber: p.ber,
            ci95_low: p.ci95_low,
            ci95_high: p.ci95_high,
            mean_iterations: p.mean_iterations.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_layouts_agree() {
        assert_eq!(std::mem::size_of::<LcComplex>(), std::mem::size_of::<Complex64>());
        assert_eq!(std::mem::align_of::<LcComplex>(), std::mem::align_of::<Complex64>());
    }

    #[test]
    fn error_mapping() {
        let f: Failure = Error::SymbolOutOfRange { symbol: 9, m: 8 }.into();
        assert_eq!(f.status, LcStatus::SymbolOutOfRange);
        let f: Failure = Error::InvalidSpreadingFactor(3).into();
        assert_eq!(f.status, LcStatus::InvalidArgument);
        let f: Failure = Error::NotBracketed { curve: "a".into(), target: 1e-3 }.into();
        assert_eq!(f.status, LcStatus::NotBracketed);
    }

    #[test]
    fn panics_are_contained() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, LcStatus::Panic);
        let mut buf = [0 as c_char; 64];
        let n = unsafe { lc_last_error_message(buf.as_mut_ptr(), buf.len()) };
        assert_eq!(n, "panic: boom".len());
    }
}

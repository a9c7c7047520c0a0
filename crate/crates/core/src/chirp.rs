//! Chirp synthesis and the dechirp + FFT front end shared by every detector.
//!
//! Symbols are cyclic shifts of a single up-chirp of `M = 2^SF` samples.
//! Dechirping a received symbol turns shift `m` into a tone at FFT bin `m`
//! carrying the constant phase `Ψ_m`, which the coherent detectors undo.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spreading factors accepted outside of tests.
pub const SPREADING_FACTORS: std::ops::RangeInclusive<u32> = 7..=12;

/// Largest spreading factor accepted by [`ModulationParams::relaxed`].
const MAX_RELAXED_SF: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationParams {
    spreading_factor: u32,
    m: usize,
    amplitude: f64,
}

impl ModulationParams {
    /// Parameters for a LoRa spreading factor in 7..=12.
    pub fn new(spreading_factor: u32, amplitude: f64) -> Result<Self> {
        if !SPREADING_FACTORS.contains(&spreading_factor) {
            return Err(Error::InvalidSpreadingFactor(spreading_factor));
        }
        Self::relaxed(spreading_factor, amplitude)
    }

    /// Like [`ModulationParams::new`] but admits any `M = 2^k` with
    /// `2 <= k <= 16`, so small alphabets can be checked exhaustively.
    pub fn relaxed(spreading_factor: u32, amplitude: f64) -> Result<Self> {
        if !(2..=MAX_RELAXED_SF).contains(&spreading_factor) {
            return Err(Error::InvalidSpreadingFactor(spreading_factor));
        }
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(Error::InvalidAmplitude(amplitude));
        }
        Ok(Self {
            spreading_factor,
            m: 1 << spreading_factor,
            amplitude,
        })
    }

    pub fn spreading_factor(&self) -> u32 {
        self.spreading_factor
    }

    /// Samples per symbol, which is also the alphabet size.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Symbol energy `A²·M` with time measured in samples.
    pub fn symbol_energy(&self) -> f64 {
        self.amplitude * self.amplitude * self.m as f64
    }

    /// Noiseless magnitude of the signal bin after the unitary FFT, `A·√M`.
    pub fn bin_amplitude(&self) -> f64 {
        self.amplitude * (self.m as f64).sqrt()
    }

    fn check_symbol(&self, symbol: usize) -> Result<()> {
        if symbol < self.m {
            Ok(())
        } else {
            Err(Error::SymbolOutOfRange {
                symbol,
                m: self.m,
            })
        }
    }
}

/// One symbol worth of baseband samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ChirpWaveform {
    pub samples: Vec<Complex64>,
    pub params: ModulationParams,
    /// Cyclic shift this waveform encodes.
    pub symbol: usize,
}

/// Post-FFT bin values `V_ℓ[k]`, one row of `M` bins per antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct DemodGrid {
    bins: Vec<Complex64>,
    num_antennas: usize,
    params: ModulationParams,
}

impl DemodGrid {
    pub fn from_rows(rows: Vec<Vec<Complex64>>, params: ModulationParams) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput("demod grid needs at least one antenna"));
        }
        let num_antennas = rows.len();
        let mut bins = Vec::with_capacity(num_antennas * params.m());
        for row in rows {
            if row.len() != params.m() {
                return Err(Error::DimensionMismatch {
                    what: "demod grid row",
                    expected: params.m(),
                    found: row.len(),
                });
            }
            bins.extend(row);
        }
        Ok(Self {
            bins,
            num_antennas,
            params,
        })
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn params(&self) -> &ModulationParams {
        &self.params
    }

    pub fn antenna(&self, l: usize) -> &[Complex64] {
        let m = self.params.m();
        &self.bins[l * m..(l + 1) * m]
    }

    pub fn bin(&self, l: usize, k: usize) -> Complex64 {
        self.bins[l * self.params.m() + k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex64]> {
        self.bins.chunks_exact(self.params.m())
    }
}

/// Phase of `x_0[n]` reduced exactly: `n(n − M)/(2M)` cycles, taken mod 1.
fn base_chirp_phase(n: usize, m: usize) -> f64 {
    let two_m = 2 * m as i128;
    let n = n as i128;
    let cycles = (n * (n - m as i128)).rem_euclid(two_m);
    PI * cycles as f64 / m as f64
}

pub fn make_base_chirp(params: &ModulationParams) -> ChirpWaveform {
    let m = params.m();
    let a = params.amplitude();
    let samples = (0..m)
        .map(|n| Complex64::from_polar(a, base_chirp_phase(n, m)))
        .collect();
    ChirpWaveform {
        samples,
        params: *params,
        symbol: 0,
    }
}

/// `x_m[n] = x_0[(n + m) mod M]`.
pub fn modulate(symbol: usize, params: &ModulationParams) -> Result<ChirpWaveform> {
    params.check_symbol(symbol)?;
    let m = params.m();
    let a = params.amplitude();
    let samples = (0..m)
        .map(|n| Complex64::from_polar(a, base_chirp_phase((n + symbol) % m, m)))
        .collect();
    Ok(ChirpWaveform {
        samples,
        params: *params,
        symbol,
    })
}

/// Constant phase `Ψ_m = 2π(m²/(2M) − m/2)` left on bin `m` after dechirping.
pub fn symbol_phase(symbol: usize, params: &ModulationParams) -> Result<f64> {
    params.check_symbol(symbol)?;
    let m = params.m() as f64;
    let s = symbol as f64;
    Ok(2.0 * PI * (s * s / (2.0 * m) - s / 2.0))
}

/// `exp(−jΨ_k)` for every bin `k`, reduced exactly before evaluation.
pub fn derotation_table(params: &ModulationParams) -> Vec<Complex64> {
    let m = params.m();
    (0..m)
        .map(|k| Complex64::from_polar(1.0, -base_chirp_phase(k, m)))
        .collect()
}

pub fn dechirp(received: &[Complex64], params: &ModulationParams) -> Result<Vec<Complex64>> {
    if received.len() != params.m() {
        return Err(Error::DimensionMismatch {
            what: "dechirp input",
            expected: params.m(),
            found: received.len(),
        });
    }
    let base = make_base_chirp(params);
    let inv_a = 1.0 / params.amplitude();
    Ok(received
        .iter()
        .zip(&base.samples)
        .map(|(y, x)| y * x.conj() * inv_a)
        .collect())
}

/// Unitary (1/√M) DFT of each antenna's dechirped sequence.
pub fn demod_fft(dechirped: &[Vec<Complex64>], params: &ModulationParams) -> Result<DemodGrid> {
    if dechirped.is_empty() {
        return Err(Error::EmptyInput("demod_fft needs at least one antenna"));
    }
    let fft = FftPlanner::new().plan_fft_forward(params.m());
    let scale = 1.0 / (params.m() as f64).sqrt();
    let mut rows = Vec::with_capacity(dechirped.len());
    for seq in dechirped {
        if seq.len() != params.m() {
            return Err(Error::DimensionMismatch {
                what: "demod_fft input",
                expected: params.m(),
                found: seq.len(),
            });
        }
        let mut row = seq.clone();
        fft.process(&mut row);
        row.iter_mut().for_each(|v| *v *= scale);
        rows.push(row);
    }
    DemodGrid::from_rows(rows, *params)
}

/// Reusable dechirp + FFT front end with a cached plan and reference chirp.
#[derive(Clone)]
pub struct Demodulator {
    params: ModulationParams,
    /// `x_0*[n] / A`
    reference: Vec<Complex64>,
    fft: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for Demodulator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Demodulator")
            .field("params", &self.params)
            .finish_non_exhaustive()
    }
}

impl Demodulator {
    pub fn new(params: ModulationParams) -> Self {
        let inv_a = 1.0 / params.amplitude();
        let reference = make_base_chirp(&params)
            .samples
            .iter()
            .map(|x| x.conj() * inv_a)
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(params.m());
        let scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        Self {
            params,
            reference,
            fft,
            scratch,
        }
    }

    pub fn params(&self) -> &ModulationParams {
        &self.params
    }

    /// Dechirp and transform `L` antenna sequences of `M` samples each.
    pub fn demodulate<S: AsRef<[Complex64]>>(&mut self, per_antenna: &[S]) -> Result<DemodGrid> {
        if per_antenna.is_empty() {
            return Err(Error::EmptyInput("demodulate needs at least one antenna"));
        }
        let m = self.params.m();
        let scale = 1.0 / (m as f64).sqrt();
        let mut bins = Vec::with_capacity(per_antenna.len() * m);
        for seq in per_antenna {
            let seq = seq.as_ref();
            if seq.len() != m {
                return Err(Error::DimensionMismatch {
                    what: "received samples",
                    expected: m,
                    found: seq.len(),
                });
            }
            let start = bins.len();
            bins.extend(seq.iter().zip(&self.reference).map(|(y, r)| y * r));
            let row = &mut bins[start..];
            self.fft.process_with_scratch(row, &mut self.scratch);
            row.iter_mut().for_each(|v| *v *= scale);
        }
        Ok(DemodGrid {
            bins,
            num_antennas: per_antenna.len(),
            params: self.params,
        })
    }
}

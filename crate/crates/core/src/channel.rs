//! Flat block-fading channel and additive noise.
//!
//! Received samples follow `y_ℓ[n] = h_ℓ·x[n] + w_ℓ[n]` with `w_ℓ[n] ~ CN(0, σ²)`
//! and `σ² = A²/SNR`, where SNR is the average per-antenna ratio in dB.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::chirp::{ChirpWaveform, ModulationParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelModel {
    Awgn,
    Rayleigh,
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelModel::Awgn => "awgn",
            ChannelModel::Rayleigh => "rayleigh",
        })
    }
}

impl FromStr for ChannelModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "awgn" => Ok(ChannelModel::Awgn),
            "rayleigh" => Ok(ChannelModel::Rayleigh),
            other => Err(Error::InvalidParameter(format!(
                "unknown channel model `{other}`"
            ))),
        }
    }
}

/// Per-antenna average SNR. `+∞` dB is the noiseless sentinel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrSpec {
    snr_db: f64,
}

impl SnrSpec {
    pub fn from_db(snr_db: f64) -> Result<Self> {
        if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
            return Err(Error::InvalidParameter(format!("SNR of {snr_db} dB")));
        }
        Ok(Self { snr_db })
    }

    pub fn noiseless() -> Self {
        Self {
            snr_db: f64::INFINITY,
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.snr_db == f64::INFINITY
    }

    pub fn snr_db(&self) -> f64 {
        self.snr_db
    }

    pub fn snr_linear(&self) -> f64 {
        10f64.powf(self.snr_db / 10.0)
    }

    /// `σ² = A²/SNR`; zero for the noiseless sentinel.
    pub fn noise_variance(&self, params: &ModulationParams) -> f64 {
        if self.is_noiseless() {
            0.0
        } else {
            params.amplitude().powi(2) / self.snr_linear()
        }
    }

    /// `γ̄_c = E_s/N_0 = M·SNR`.
    pub fn es_over_n0(&self, params: &ModulationParams) -> f64 {
        crate::theory::es_over_n0(params.m(), self.snr_db)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub coefficients: Vec<Complex64>,
    pub model: ChannelModel,
}

impl ChannelRealization {
    pub fn num_antennas(&self) -> usize {
        self.coefficients.len()
    }

    /// Same coefficients multiplied by a real factor.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            coefficients: self.coefficients.iter().map(|h| h * factor).collect(),
            model: self.model,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedSymbol {
    pub per_antenna: Vec<Vec<Complex64>>,
    /// Transmitted symbol; only used for scoring.
    pub truth: usize,
}

/// Draw from `CN(0, variance)`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

pub fn sample_channel<R: Rng + ?Sized>(
    model: ChannelModel,
    num_antennas: usize,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if num_antennas < 1 {
        return Err(Error::InvalidParameter(
            "at least one antenna is required".into(),
        ));
    }
    let coefficients = match model {
        ChannelModel::Awgn => vec![Complex64::new(1.0, 0.0); num_antennas],
        ChannelModel::Rayleigh => (0..num_antennas)
            .map(|_| complex_gaussian(rng, 1.0))
            .collect(),
    };
    Ok(ChannelRealization {
        coefficients,
        model,
    })
}

pub fn propagate<R: Rng + ?Sized>(
    waveform: &ChirpWaveform,
    channel: &ChannelRealization,
    snr: SnrSpec,
    rng: &mut R,
) -> Result<ReceivedSymbol> {
    let m = waveform.params.m();
    if waveform.samples.len() != m {
        return Err(Error::DimensionMismatch {
            what: "waveform length",
            expected: m,
            found: waveform.samples.len(),
        });
    }
    if channel.coefficients.is_empty() {
        return Err(Error::EmptyInput("channel has no antennas"));
    }
    let variance = snr.noise_variance(&waveform.params);
    let per_antenna = channel
        .coefficients
        .iter()
        .map(|h| {
            if variance == 0.0 {
                waveform.samples.iter().map(|x| h * x).collect()
            } else {
                waveform
                    .samples
                    .iter()
                    .map(|x| h * x + complex_gaussian(rng, variance))
                    .collect()
            }
        })
        .collect();
    Ok(ReceivedSymbol {
        per_antenna,
        truth: waveform.symbol,
    })
}

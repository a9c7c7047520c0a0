//! Monte Carlo error-rate estimation.
//!
//! Trials are grouped into coherence frames of `tau_c` symbols sharing one
//! channel draw. Each frame owns a ChaCha8 stream keyed by
//! `(seed, point index)` with the frame index as stream id, so results do
//! not depend on scheduling or on the number of worker threads.

use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{propagate, sample_channel, ChannelModel, SnrSpec};
use crate::chirp::{modulate, DemodGrid, Demodulator, ModulationParams};
use crate::detectors::{SemiCoherentConfig, SymbolDetector};
use crate::error::{Error, Result};
use crate::theory::{self, TheoryDetector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DetectorKind {
    #[serde(rename = "coh")]
    Coherent,
    #[serde(rename = "noncoh")]
    Noncoherent,
    #[serde(rename = "semicoh")]
    Semicoherent,
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DetectorKind::Coherent => "coh",
            DetectorKind::Noncoherent => "noncoh",
            DetectorKind::Semicoherent => "semicoh",
        })
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coh" | "coherent" => Ok(DetectorKind::Coherent),
            "noncoh" | "noncoherent" => Ok(DetectorKind::Noncoherent),
            "semicoh" | "semicoherent" => Ok(DetectorKind::Semicoherent),
            other => Err(Error::InvalidParameter(format!("unknown detector `{other}`"))),
        }
    }
}

/// Bit labels assigned to symbol indices when counting bit errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BitMapping {
    #[default]
    Natural,
    Gray,
}

impl BitMapping {
    pub fn label(self, symbol: usize) -> usize {
        match self {
            BitMapping::Natural => symbol,
            BitMapping::Gray => symbol ^ (symbol >> 1),
        }
    }

    pub fn bit_errors(self, sent: usize, decided: usize) -> u32 {
        (self.label(sent) ^ self.label(decided)).count_ones()
    }
}

mod snr_grid_serde {
    //! SNR grids as JSON numbers, with the noiseless sentinel spelled "inf".
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Entry {
        Db(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(grid: &[f64], s: S) -> Result<S::Ok, S::Error> {
        grid.iter()
            .map(|&v| {
                if v == f64::INFINITY {
                    Entry::Text("inf".into())
                } else {
                    Entry::Db(v)
                }
            })
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Entry>::deserialize(d)?
            .into_iter()
            .map(|e| match e {
                Entry::Db(v) => Ok(v),
                Entry::Text(t) if t == "inf" => Ok(f64::INFINITY),
                Entry::Text(t) => Err(D::Error::custom(format!("bad SNR entry `{t}`"))),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub spreading_factor: u32,
    pub num_antennas: usize,
    pub detector: DetectorKind,
    pub channel: ChannelModel,
    /// Per-antenna SNR points in dB; `f64::INFINITY` means noiseless.
    #[serde(with = "snr_grid_serde")]
    pub snr_db: Vec<f64>,
    /// Minimum symbols per point.
    pub trials: u64,
    /// Keep simulating until this many bit errors have been seen.
    pub target_errors: u64,
    /// Hard cap on symbols per point.
    pub max_symbols: u64,
    pub tau_c: usize,
    pub n_max: usize,
    pub seed: u64,
    #[serde(default)]
    pub bit_mapping: BitMapping,
    #[serde(default)]
    pub with_theory: bool,
}

impl SimConfig {
    pub fn new(spreading_factor: u32, num_antennas: usize, detector: DetectorKind, channel: ChannelModel) -> Self {
        Self {
            spreading_factor,
            num_antennas,
            detector,
            channel,
            snr_db: Vec::new(),
            trials: 100_000,
            target_errors: 100,
            max_symbols: 10_000_000,
            tau_c: 10,
            n_max: 50,
            seed: 0,
            bit_mapping: BitMapping::Natural,
            with_theory: false,
        }
    }

    pub fn params(&self) -> Result<ModulationParams> {
        ModulationParams::new(self.spreading_factor, 1.0)
    }

    pub fn semicoherent(&self) -> Result<SemiCoherentConfig> {
        SemiCoherentConfig::new(self.tau_c, self.n_max)
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        self.semicoherent()?;
        if self.num_antennas < 1 || self.num_antennas > theory::MAX_ANTENNAS {
            return Err(Error::InvalidParameter(format!(
                "antenna count {} outside 1..={}",
                self.num_antennas,
                theory::MAX_ANTENNAS
            )));
        }
        if self.trials < self.tau_c as u64 {
            return Err(Error::InvalidParameter(format!(
                "trials ({}) must cover at least one coherence frame of {} symbols",
                self.trials, self.tau_c
            )));
        }
        if self.max_symbols < self.trials {
            return Err(Error::InvalidParameter(format!(
                "max_symbols ({}) is below trials ({})",
                self.max_symbols, self.trials
            )));
        }
        for &s in &self.snr_db {
            SnrSpec::from_db(s)?;
        }
        Ok(())
    }

    /// Closed-form reference available for this detector/channel pair.
    pub fn theory_detector(&self) -> Option<TheoryDetector> {
        match (self.detector, self.channel) {
            (DetectorKind::Coherent, ChannelModel::Awgn) => Some(TheoryDetector::CoherentAwgn),
            (DetectorKind::Noncoherent, ChannelModel::Rayleigh) => Some(TheoryDetector::NoncoherentRayleigh),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub snr_db: f64,
    pub symbols_tested: u64,
    pub symbol_errors: u64,
    pub bit_errors: u64,
    pub ser: f64,
    pub ber: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    /// Measured SER mapped through `M/(2(M−1))`.
    pub ber_from_ser: f64,
    pub theory_ber: Option<f64>,
    pub mean_iterations: Option<f64>,
}

impl BerPoint {
    /// Standard error of the bit-error-rate estimate, treating each symbol
    /// as one trial that contributes `0..=SF` bit errors.
    pub fn ber_std_error(&self, spreading_factor: u32) -> f64 {
        ber_std_error(self.ser, self.symbols_tested, spreading_factor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerCurve {
    pub config: SimConfig,
    pub points: Vec<BerPoint>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// Standard error of a BER estimate from `symbols` independent symbols when
/// symbol errors happen with probability `ser` and land uniformly on the
/// other `M − 1` symbols.
pub fn ber_std_error(ser: f64, symbols: u64, spreading_factor: u32) -> f64 {
    let k = spreading_factor as f64;
    let m = (1u64 << spreading_factor) as f64;
    // Hamming weight w of a uniform nonzero k-bit word:
    // E[w] = k·M/(2(M−1)), E[w²] = (k + k²)·M/(4(M−1))
    let ew = k * m / (2.0 * (m - 1.0));
    let ew2 = (k + k * k) * m / (4.0 * (m - 1.0));
    let var_bits = ser * ew2 - (ser * ew).powi(2);
    (var_bits.max(0.0) / symbols as f64).sqrt() / k
}

/// Wilson score interval at 95 % for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n = n as f64;
    let p = k as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k as f64 == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Random stream for one coherence frame.
///
/// The key embeds `seed` and `point` verbatim and the frame index selects the
/// ChaCha stream, so distinct `(point, frame)` pairs never share keystream.
pub fn frame_rng(seed: u64, point: u64, frame: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&point.to_le_bytes());
    key[16..].copy_from_slice(b"lora-combining/f");
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(frame);
    rng
}

/// Error counts accumulated over frames.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub frames: u64,
    pub symbols: u64,
    pub symbol_errors: u64,
    pub bit_errors: u64,
    pub iterations: u64,
}

impl Add for Tally {
    type Output = Tally;

    fn add(self, o: Tally) -> Tally {
        Tally {
            frames: self.frames + o.frames,
            symbols: self.symbols + o.symbols,
            symbol_errors: self.symbol_errors + o.symbol_errors,
            bit_errors: self.bit_errors + o.bit_errors,
            iterations: self.iterations + o.iterations,
        }
    }
}

impl Tally {
    /// Score a batch of decisions against the transmitted symbols.
    pub fn score(sent: &[usize], decided: &[usize], mapping: BitMapping) -> Tally {
        let mut t = Tally {
            frames: 1,
            ..Tally::default()
        };
        for (&s, &d) in sent.iter().zip(decided) {
            t.symbols += 1;
            if s != d {
                t.symbol_errors += 1;
                t.bit_errors += mapping.bit_errors(s, d) as u64;
            }
        }
        t
    }

    pub fn into_point(self, snr_db: f64, cfg: &SimConfig) -> BerPoint {
        let m = 1usize << cfg.spreading_factor;
        let n = self.symbols.max(1);
        let bits = n * cfg.spreading_factor as u64;
        let ser = self.symbol_errors as f64 / n as f64;
        let (lo, hi) = wilson_interval(self.bit_errors, bits);
        BerPoint {
            snr_db,
            symbols_tested: self.symbols,
            symbol_errors: self.symbol_errors,
            bit_errors: self.bit_errors,
            ser,
            ber: self.bit_errors as f64 / bits as f64,
            ci95_low: lo,
            ci95_high: hi,
            ber_from_ser: theory::ber_from_ser(ser, m),
            theory_ber: None,
            mean_iterations: (cfg.detector == DetectorKind::Semicoherent)
                .then(|| self.iterations as f64 / self.frames.max(1) as f64),
        }
    }
}

struct Workspace {
    demod: Demodulator,
    detector: SymbolDetector,
}

impl Workspace {
    fn new(params: ModulationParams) -> Self {
        Self {
            demod: Demodulator::new(params),
            detector: SymbolDetector::new(params),
        }
    }
}

fn simulate_frame(
    cfg: &SimConfig,
    semi: &SemiCoherentConfig,
    snr: SnrSpec,
    ws: &mut Workspace,
    point: u64,
    frame: u64,
) -> Result<Tally> {
    let params = *ws.demod.params();
    let mut rng = frame_rng(cfg.seed, point, frame);
    let channel = sample_channel(cfg.channel, cfg.num_antennas, &mut rng)?;
    let mut sent = Vec::with_capacity(cfg.tau_c);
    let mut grids: Vec<DemodGrid> = Vec::with_capacity(cfg.tau_c);
    for _ in 0..cfg.tau_c {
        let symbol = rng.random_range(0..params.m());
        let rx = propagate(&modulate(symbol, &params)?, &channel, snr, &mut rng)?;
        grids.push(ws.demod.demodulate(&rx.per_antenna)?);
        sent.push(symbol);
    }
    let (decided, iterations) = match cfg.detector {
        DetectorKind::Coherent => (
            grids
                .iter()
                .map(|g| ws.detector.coherent(g, &channel).map(|r| r.symbol))
                .collect::<Result<Vec<_>>>()?,
            0,
        ),
        DetectorKind::Noncoherent => (
            grids
                .iter()
                .map(|g| ws.detector.noncoherent(g).map(|r| r.symbol))
                .collect::<Result<Vec<_>>>()?,
            0,
        ),
        DetectorKind::Semicoherent => {
            let out = ws.detector.semicoherent_frame(&grids, semi)?;
            let iters = out.first().map_or(0, |r| r.iterations_used as u64);
            (out.into_iter().map(|r| r.symbol).collect(), iters)
        }
    };
    let mut t = Tally::score(&sent, &decided, cfg.bit_mapping);
    t.iterations = iterations;
    Ok(t)
}

fn run_frames(
    cfg: &SimConfig,
    semi: &SemiCoherentConfig,
    params: ModulationParams,
    snr: SnrSpec,
    point: u64,
    frames: std::ops::Range<u64>,
) -> Result<Tally> {
    frames
        .into_par_iter()
        .map_init(
            || Workspace::new(params),
            |ws, f| simulate_frame(cfg, semi, snr, ws, point, f),
        )
        .try_reduce(Tally::default, |a, b| Ok(a + b))
}

/// Simulate one SNR point using the random streams of grid position `point`.
pub fn run_point_at(cfg: &SimConfig, point: u64, snr_db: f64) -> Result<BerPoint> {
    cfg.validate()?;
    let params = cfg.params()?;
    let semi = cfg.semicoherent()?;
    let snr = SnrSpec::from_db(snr_db)?;
    let tau = cfg.tau_c as u64;
    let batch = cfg.trials.div_ceil(tau);
    let max_frames = cfg.max_symbols / tau;

    let mut tally = Tally::default();
    let mut next = 0u64;
    loop {
        let end = (next + batch).min(max_frames.max(batch));
        tally = tally + run_frames(cfg, &semi, params, snr, point, next..end)?;
        next = end;
        let enough_trials = tally.symbols >= cfg.trials;
        let enough_errors = tally.bit_errors >= cfg.target_errors;
        // a noiseless point can never reach the error target
        if (enough_trials && (enough_errors || snr.is_noiseless())) || next >= max_frames {
            break;
        }
    }

    let mut point = tally.into_point(snr_db, cfg);
    if cfg.with_theory {
        if let Some(det) = cfg.theory_detector() {
            point.theory_ber = Some(theory::theory_point(det, params.m(), cfg.num_antennas, snr_db)?.ber);
        }
    }
    Ok(point)
}

/// Simulate a single SNR point (identical to the first point of a sweep).
pub fn run_point(cfg: &SimConfig, snr_db: f64) -> Result<BerPoint> {
    run_point_at(cfg, 0, snr_db)
}

pub fn run_sweep(cfg: &SimConfig) -> Result<BerCurve> {
    if cfg.snr_db.is_empty() {
        return Err(Error::EmptyInput("SNR grid"));
    }
    cfg.validate()?;
    let mut warnings = Vec::new();
    if cfg.with_theory && cfg.theory_detector().is_none() {
        warnings.push(format!(
            "no analytical BER for detector `{}` over `{}`; theory column left empty",
            cfg.detector, cfg.channel
        ));
    }
    let points = cfg
        .snr_db
        .iter()
        .enumerate()
        .map(|(i, &s)| run_point_at(cfg, i as u64, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(BerCurve {
        config: cfg.clone(),
        points,
        warnings,
    })
}

/// [`run_sweep`] on a dedicated pool of `jobs` worker threads.
pub fn run_sweep_with_jobs(cfg: &SimConfig, jobs: usize) -> Result<BerCurve> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| run_sweep(cfg))
}

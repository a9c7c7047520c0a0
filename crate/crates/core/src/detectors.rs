//! Symbol decision rules operating on [`DemodGrid`]s.
//!
//! * coherent: maximal ratio combining with known channel, then the real part
//!   of each bin after removing its chirp phase `Ψ_k`;
//! * non-coherent: square-law combining `Σ_ℓ |V_ℓ[k]|²`;
//! * semi-coherent: decision-directed channel estimation averaged over a
//!   coherence frame, alternated with coherent re-detection until the
//!   decisions stop changing.
//!
//! Ties are broken toward the lowest bin index.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::chirp::{derotation_table, DemodGrid, ModulationParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionResult {
    pub symbol: usize,
    /// Decision statistic of the winning bin.
    pub decision_metric: f64,
    /// Refinement passes spent (semi-coherent only).
    pub iterations_used: usize,
}

/// Averaged per-antenna channel estimate `ĥ_ℓ^(ave)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub per_antenna: Vec<Complex64>,
}

impl ChannelEstimate {
    fn is_zero(&self) -> bool {
        self.per_antenna.iter().all(|h| *h == Complex64::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemiCoherentConfig {
    tau_c: usize,
    n_max: usize,
}

impl SemiCoherentConfig {
    pub fn new(tau_c: usize, n_max: usize) -> Result<Self> {
        if tau_c < 1 {
            return Err(Error::InvalidParameter("tau_c must be at least 1".into()));
        }
        if n_max < 1 {
            return Err(Error::InvalidParameter("n_max must be at least 1".into()));
        }
        Ok(Self { tau_c, n_max })
    }

    pub fn tau_c(&self) -> usize {
        self.tau_c
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }
}

impl Default for SemiCoherentConfig {
    fn default() -> Self {
        Self {
            tau_c: 10,
            n_max: 50,
        }
    }
}

/// First index of the maximum; NaN never wins.
fn argmax(values: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (k, v) in values.enumerate() {
        if v > best.1 {
            best = (k, v);
        }
    }
    best
}

/// Detector state that depends only on the modulation parameters.
///
/// Holds the `exp(−jΨ_k)` table so repeated coherent decisions do not
/// recompute it. The free functions in this module build one on demand.
#[derive(Debug, Clone)]
pub struct SymbolDetector {
    params: ModulationParams,
    derotation: Vec<Complex64>,
}

impl SymbolDetector {
    pub fn new(params: ModulationParams) -> Self {
        Self {
            derotation: derotation_table(&params),
            params,
        }
    }

    pub fn params(&self) -> &ModulationParams {
        &self.params
    }

    fn check_grid(&self, grid: &DemodGrid) -> Result<()> {
        if grid.params().m() != self.params.m() {
            return Err(Error::DimensionMismatch {
                what: "grid bins",
                expected: self.params.m(),
                found: grid.params().m(),
            });
        }
        Ok(())
    }

    /// `argmax_k Re{ Σ_ℓ w_ℓ*·V_ℓ[k]·exp(−jΨ_k) }`.
    fn combine_coherent(&self, grid: &DemodGrid, weights: &[Complex64]) -> Result<DetectionResult> {
        self.check_grid(grid)?;
        if weights.len() != grid.num_antennas() {
            return Err(Error::DimensionMismatch {
                what: "channel antennas",
                expected: grid.num_antennas(),
                found: weights.len(),
            });
        }
        let m = self.params.m();
        let mut combined = vec![Complex64::default(); m];
        for (row, w) in grid.rows().zip(weights) {
            let wc = w.conj();
            for (acc, v) in combined.iter_mut().zip(row) {
                *acc += wc * v;
            }
        }
        let (symbol, metric) = argmax(
            combined
                .iter()
                .zip(&self.derotation)
                .map(|(z, r)| (z * r).re),
        );
        Ok(DetectionResult {
            symbol,
            decision_metric: metric,
            iterations_used: 0,
        })
    }

    pub fn coherent(&self, grid: &DemodGrid, channel: &ChannelRealization) -> Result<DetectionResult> {
        self.combine_coherent(grid, &channel.coefficients)
    }

    pub fn noncoherent(&self, grid: &DemodGrid) -> Result<DetectionResult> {
        self.check_grid(grid)?;
        let m = self.params.m();
        let mut energy = vec![0.0; m];
        for row in grid.rows() {
            for (acc, v) in energy.iter_mut().zip(row) {
                *acc += v.norm_sqr();
            }
        }
        let (symbol, metric) = argmax(energy.into_iter());
        Ok(DetectionResult {
            symbol,
            decision_metric: metric,
            iterations_used: 0,
        })
    }

    /// Least-squares channel from the detected bin, in units where the
    /// noiseless estimate equals `h_ℓ`.
    pub fn estimate_channel_single(&self, grid: &DemodGrid, symbol: usize) -> Result<Vec<Complex64>> {
        self.check_grid(grid)?;
        if symbol >= self.params.m() {
            return Err(Error::SymbolOutOfRange {
                symbol,
                m: self.params.m(),
            });
        }
        let scale = self.derotation[symbol] / self.params.bin_amplitude();
        Ok(grid.rows().map(|row| row[symbol] * scale).collect())
    }

    fn estimate_from_decisions(&self, grids: &[DemodGrid], decisions: &[usize]) -> Result<ChannelEstimate> {
        let estimates = grids
            .iter()
            .zip(decisions)
            .map(|(g, &s)| self.estimate_channel_single(g, s))
            .collect::<Result<Vec<_>>>()?;
        average_channel(&estimates)
    }

    /// Iterative semi-coherent detection of one coherence frame.
    ///
    /// Every returned result carries the frame's `iterations_used`. If the
    /// averaged estimate vanishes exactly the non-coherent decisions are
    /// returned.
    pub fn semicoherent_frame(
        &self,
        grids: &[DemodGrid],
        cfg: &SemiCoherentConfig,
    ) -> Result<Vec<DetectionResult>> {
        let first = grids.first().ok_or(Error::EmptyInput("empty coherence frame"))?;
        for g in grids {
            self.check_grid(g)?;
            if g.num_antennas() != first.num_antennas() {
                return Err(Error::DimensionMismatch {
                    what: "frame antennas",
                    expected: first.num_antennas(),
                    found: g.num_antennas(),
                });
            }
        }

        let mut results = grids
            .iter()
            .map(|g| self.noncoherent(g))
            .collect::<Result<Vec<_>>>()?;
        let mut decisions: Vec<usize> = results.iter().map(|r| r.symbol).collect();
        let mut estimate = self.estimate_from_decisions(grids, &decisions)?;

        let mut iterations = 0;
        while iterations < cfg.n_max() && !estimate.is_zero() {
            iterations += 1;
            let refined = grids
                .iter()
                .map(|g| self.combine_coherent(g, &estimate.per_antenna))
                .collect::<Result<Vec<_>>>()?;
            let new_decisions: Vec<usize> = refined.iter().map(|r| r.symbol).collect();
            estimate = self.estimate_from_decisions(grids, &new_decisions)?;
            results = refined;
            let converged = new_decisions == decisions;
            decisions = new_decisions;
            if converged {
                break;
            }
        }

        for r in &mut results {
            r.iterations_used = iterations;
        }
        Ok(results)
    }

    /// Coherent re-detection with a given estimate, exposed for scale checks.
    pub fn with_estimate(&self, grid: &DemodGrid, estimate: &ChannelEstimate) -> Result<DetectionResult> {
        self.combine_coherent(grid, &estimate.per_antenna)
    }
}

pub fn detect_coherent(grid: &DemodGrid, channel: &ChannelRealization) -> Result<DetectionResult> {
    SymbolDetector::new(*grid.params()).coherent(grid, channel)
}

pub fn detect_noncoherent(grid: &DemodGrid) -> Result<DetectionResult> {
    SymbolDetector::new(*grid.params()).noncoherent(grid)
}

pub fn estimate_channel_single(
    grid: &DemodGrid,
    symbol: usize,
    params: &ModulationParams,
) -> Result<Vec<Complex64>> {
    SymbolDetector::new(*params).estimate_channel_single(grid, symbol)
}

/// Per-antenna arithmetic mean of `τ_c` single-symbol estimates.
pub fn average_channel<E: AsRef<[Complex64]>>(estimates: &[E]) -> Result<ChannelEstimate> {
    let first = estimates
        .first()
        .ok_or(Error::EmptyInput("no channel estimates to average"))?
        .as_ref();
    let mut sum = vec![Complex64::default(); first.len()];
    for e in estimates {
        let e = e.as_ref();
        if e.len() != sum.len() {
            return Err(Error::DimensionMismatch {
                what: "channel estimate antennas",
                expected: sum.len(),
                found: e.len(),
            });
        }
        for (acc, v) in sum.iter_mut().zip(e) {
            *acc += v;
        }
    }
    let n = estimates.len() as f64;
    Ok(ChannelEstimate {
        per_antenna: sum.into_iter().map(|s| s / n).collect(),
    })
}

pub fn detect_semicoherent_frame(
    grids: &[DemodGrid],
    cfg: &SemiCoherentConfig,
) -> Result<Vec<DetectionResult>> {
    let first = grids.first().ok_or(Error::EmptyInput("empty coherence frame"))?;
    SymbolDetector::new(*first.params()).semicoherent_frame(grids, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{propagate, sample_channel, ChannelModel, SnrSpec};
    use crate::chirp::{modulate, Demodulator};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> ModulationParams {
        ModulationParams::new(7, 1.0).unwrap()
    }

    fn receive(
        symbol: usize,
        h: &ChannelRealization,
        snr: SnrSpec,
        rng: &mut ChaCha8Rng,
    ) -> DemodGrid {
        let p = params();
        let rx = propagate(&modulate(symbol, &p).unwrap(), h, snr, rng).unwrap();
        Demodulator::new(p).demodulate(&rx.per_antenna).unwrap()
    }

    #[test]
    fn coherent_noiseless_awgn() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = sample_channel(ChannelModel::Awgn, 1, &mut rng).unwrap();
        for m in [0, 1, 63, 127] {
            let g = receive(m, &h, SnrSpec::noiseless(), &mut rng);
            let r = detect_coherent(&g, &h).unwrap();
            assert_eq!(r.symbol, m);
            assert!((r.decision_metric - 128f64.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn coherent_noiseless_rayleigh_metric() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = sample_channel(ChannelModel::Rayleigh, 4, &mut rng).unwrap();
        let gain: f64 = h.coefficients.iter().map(|c| c.norm_sqr()).sum();
        let g = receive(77, &h, SnrSpec::noiseless(), &mut rng);
        let r = detect_coherent(&g, &h).unwrap();
        assert_eq!(r.symbol, 77);
        assert!((r.decision_metric - gain * 128f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn noncoherent_noiseless_any_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for l in 1..=4 {
            let h = sample_channel(ChannelModel::Rayleigh, l, &mut rng).unwrap();
            let m = rng.random_range(0..128);
            let g = receive(m, &h, SnrSpec::noiseless(), &mut rng);
            assert_eq!(detect_noncoherent(&g).unwrap().symbol, m);
        }
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let p = params();
        let g = DemodGrid::from_rows(vec![vec![Complex64::new(1.0, 0.0); 128]], p).unwrap();
        assert_eq!(detect_noncoherent(&g).unwrap().symbol, 0);
        assert_eq!(argmax([1.0, 3.0, 3.0, 2.0].into_iter()), (1, 3.0));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h1 = sample_channel(ChannelModel::Awgn, 1, &mut rng).unwrap();
        let h2 = sample_channel(ChannelModel::Awgn, 2, &mut rng).unwrap();
        let g = receive(0, &h1, SnrSpec::noiseless(), &mut rng);
        assert!(matches!(
            detect_coherent(&g, &h2),
            Err(Error::DimensionMismatch { .. })
        ));
        let other = ModulationParams::new(8, 1.0).unwrap();
        assert!(SymbolDetector::new(other).noncoherent(&g).is_err());
    }

    #[test]
    fn single_estimate_noiseless() {
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = sample_channel(ChannelModel::Rayleigh, 3, &mut rng).unwrap();
        let g = receive(31, &h, SnrSpec::noiseless(), &mut rng);
        let est = estimate_channel_single(&g, 31, &p).unwrap();
        for (e, hl) in est.iter().zip(&h.coefficients) {
            assert!((e - hl).norm() < 1e-9);
        }
        let wrong = estimate_channel_single(&g, 32, &p).unwrap();
        assert!(wrong.iter().all(|e| e.norm() < 1e-9));
        assert!(matches!(
            estimate_channel_single(&g, 128, &p),
            Err(Error::SymbolOutOfRange { .. })
        ));
    }

    #[test]
    fn single_estimate_is_unbiased() {
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = ChannelRealization {
            coefficients: vec![Complex64::new(0.6, -0.8)],
            model: ChannelModel::Rayleigh,
        };
        let snr = SnrSpec::from_db(-10.0).unwrap();
        let n = 10_000;
        let mut errs = Vec::with_capacity(n);
        for _ in 0..n {
            let m = rng.random_range(0..128);
            let g = receive(m, &h, snr, &mut rng);
            errs.push(estimate_channel_single(&g, m, &p).unwrap()[0] - h.coefficients[0]);
        }
        let mean: Complex64 = errs.iter().sum::<Complex64>() / n as f64;
        // per-component variance of the estimation error is σ²/(2·A²M)
        let se = (10.0 / (2.0 * 128.0) / n as f64).sqrt();
        assert!(mean.re.abs() < 3.0 * se, "{mean} vs {se}");
        assert!(mean.im.abs() < 3.0 * se, "{mean} vs {se}");
    }

    #[test]
    fn averaging() {
        let c = Complex64::new;
        let est = average_channel(&[vec![c(1.0, 0.0), c(2.0, 2.0)], vec![c(0.0, 1.0), c(2.0, 2.0)]]).unwrap();
        assert_eq!(est.per_antenna, vec![c(0.5, 0.5), c(2.0, 2.0)]);
        let same = average_channel(&vec![vec![c(0.3, -0.1)]; 7]).unwrap();
        assert!((same.per_antenna[0] - c(0.3, -0.1)).norm() < 1e-15);
        assert!(average_channel::<Vec<Complex64>>(&[]).is_err());
        assert!(average_channel(&[vec![c(1.0, 0.0)], vec![]]).is_err());
    }

    #[test]
    fn semicoherent_noiseless_frame_converges_at_once() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = sample_channel(ChannelModel::Rayleigh, 4, &mut rng).unwrap();
        let symbols: Vec<usize> = (0..10).map(|_| rng.random_range(0..128)).collect();
        let grids: Vec<DemodGrid> = symbols
            .iter()
            .map(|&m| receive(m, &h, SnrSpec::noiseless(), &mut rng))
            .collect();
        let out = detect_semicoherent_frame(&grids, &SemiCoherentConfig::default()).unwrap();
        assert_eq!(out.iter().map(|r| r.symbol).collect::<Vec<_>>(), symbols);
        assert!(out.iter().all(|r| r.iterations_used == 1));
    }

    #[test]
    fn semicoherent_respects_iteration_cap() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = sample_channel(ChannelModel::Rayleigh, 2, &mut rng).unwrap();
        let snr = SnrSpec::from_db(-22.0).unwrap();
        let cfg = SemiCoherentConfig::new(10, 3).unwrap();
        for _ in 0..50 {
            let grids: Vec<DemodGrid> = (0..10)
                .map(|_| receive(rng.random_range(0..128), &h, snr, &mut rng))
                .collect();
            let out = detect_semicoherent_frame(&grids, &cfg).unwrap();
            assert!(out.iter().all(|r| r.iterations_used >= 1 && r.iterations_used <= 3));
            assert_eq!(out, detect_semicoherent_frame(&grids, &cfg).unwrap());
        }
    }

    #[test]
    fn semicoherent_zero_estimate_falls_back() {
        let p = params();
        let zero = DemodGrid::from_rows(vec![vec![Complex64::default(); 128]; 2], p).unwrap();
        let out = detect_semicoherent_frame(&[zero.clone(), zero], &SemiCoherentConfig::default()).unwrap();
        assert!(out.iter().all(|r| r.symbol == 0 && r.iterations_used == 0));
    }

    #[test]
    fn semicoherent_rejects_mixed_frames() {
        let p = params();
        let a = DemodGrid::from_rows(vec![vec![Complex64::default(); 128]; 2], p).unwrap();
        let b = DemodGrid::from_rows(vec![vec![Complex64::default(); 128]; 3], p).unwrap();
        assert!(detect_semicoherent_frame(&[a, b], &SemiCoherentConfig::default()).is_err());
        assert!(detect_semicoherent_frame(&[], &SemiCoherentConfig::default()).is_err());
        assert!(SemiCoherentConfig::new(0, 5).is_err());
        assert!(SemiCoherentConfig::new(5, 0).is_err());
    }

    #[test]
    fn pure_noise_decisions_are_uniform() {
        let p = ModulationParams::new(7, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let det = SymbolDetector::new(p);
        let n = 100_000;
        let mut counts = vec![0u64; 128];
        for _ in 0..n {
            let rows = vec![(0..128)
                .map(|_| crate::channel::complex_gaussian(&mut rng, 1.0))
                .collect::<Vec<_>>()];
            let g = DemodGrid::from_rows(rows, p).unwrap();
            counts[det.noncoherent(&g).unwrap().symbol] += 1;
        }
        let expected = n as f64 / 128.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // chi-square with 127 dof: the 0.999 quantile is about 181.99
        assert!(chi2 < 181.99, "chi2 = {chi2}");
    }
}

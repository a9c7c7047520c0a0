//! Cross-module properties exercised through the public API.

use lora_combining::channel::{propagate, sample_channel, ChannelModel, ChannelRealization, SnrSpec};
use lora_combining::chirp::{modulate, DemodGrid, Demodulator, ModulationParams};
use lora_combining::detectors::{ChannelEstimate, SemiCoherentConfig, SymbolDetector};
use lora_combining::montecarlo::{run_point, DetectorKind, SimConfig};
use lora_combining::theory::{ser_coherent_awgn, ser_noncoherent_rayleigh};
use lora_combining::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

#[test]
fn chirps_are_orthogonal_exhaustively_at_m128() {
    let p = ModulationParams::new(7, 1.0).unwrap();
    let all: Vec<_> = (0..p.m()).map(|s| modulate(s, &p).unwrap().samples).collect();
    for i in 0..p.m() {
        let self_ip = inner(&all[i], &all[i]);
        assert!((self_ip - Complex64::new(p.m() as f64, 0.0)).norm() < 1e-9);
        for j in i + 1..p.m() {
            let ip = inner(&all[i], &all[j]);
            assert!(ip.norm() < 1e-9, "<x_{i}, x_{j}> = {ip}");
        }
    }
}

fn noiseless_grids(
    p: ModulationParams,
    symbols: &[usize],
    h: &ChannelRealization,
) -> Vec<DemodGrid> {
    let mut demod = Demodulator::new(p);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    symbols
        .iter()
        .map(|&s| {
            let rx = propagate(&modulate(s, &p).unwrap(), h, SnrSpec::noiseless(), &mut rng).unwrap();
            demod.demodulate(&rx.per_antenna).unwrap()
        })
        .collect()
}

#[test]
fn noiseless_round_trip_every_symbol() {
    for sf in [7, 8, 9] {
        for l in [1, 2, 4] {
            let p = ModulationParams::new(sf, 1.3).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(sf as u64 * 31 + l as u64);
            let h = sample_channel(ChannelModel::Rayleigh, l, &mut rng).unwrap();
            let symbols: Vec<usize> = (0..p.m()).collect();
            let grids = noiseless_grids(p, &symbols, &h);
            let det = SymbolDetector::new(p);
            for (g, &s) in grids.iter().zip(&symbols) {
                assert_eq!(det.coherent(g, &h).unwrap().symbol, s);
                assert_eq!(det.noncoherent(g).unwrap().symbol, s);
            }
            for frame in grids.chunks(10) {
                let out = det.semicoherent_frame(frame, &SemiCoherentConfig::default()).unwrap();
                assert!(out.iter().all(|r| r.iterations_used == 1));
            }
            let decided: Vec<usize> = grids
                .chunks(10)
                .flat_map(|f| det.semicoherent_frame(f, &SemiCoherentConfig::default()).unwrap())
                .map(|r| r.symbol)
                .collect();
            assert_eq!(decided, symbols);
        }
    }
}

fn noisy_grid(p: ModulationParams, l: usize, seed: u64) -> (DemodGrid, ChannelRealization) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = sample_channel(ChannelModel::Rayleigh, l, &mut rng).unwrap();
    let x = modulate(seed as usize % p.m(), &p).unwrap();
    let rx = propagate(&x, &h, SnrSpec::from_db(-12.0).unwrap(), &mut rng).unwrap();
    (Demodulator::new(p).demodulate(&rx.per_antenna).unwrap(), h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn noiseless_round_trip_any_gain(
        sf in 7u32..=10, l in 1usize..=6, amp in 0.01f64..100.0, seed in any::<u64>(), symbol in 0usize..1024,
    ) {
        let p = ModulationParams::new(sf, amp).unwrap();
        let symbol = symbol % p.m();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = sample_channel(ChannelModel::Rayleigh, l, &mut rng).unwrap();
        let grids = noiseless_grids(p, &[symbol], &h);
        let det = SymbolDetector::new(p);
        prop_assert_eq!(det.coherent(&grids[0], &h).unwrap().symbol, symbol);
        prop_assert_eq!(det.noncoherent(&grids[0]).unwrap().symbol, symbol);
        let semi = det.semicoherent_frame(&grids, &SemiCoherentConfig::new(1, 50).unwrap()).unwrap();
        prop_assert_eq!(semi[0].symbol, symbol);
    }

    #[test]
    fn coherent_argmax_is_scale_invariant(l in 1usize..=4, seed in any::<u64>(), c in 1e-6f64..1e6) {
        let p = ModulationParams::new(7, 1.0).unwrap();
        let (grid, h) = noisy_grid(p, l, seed);
        let det = SymbolDetector::new(p);
        prop_assert_eq!(
            det.coherent(&grid, &h).unwrap().symbol,
            det.coherent(&grid, &h.scaled(c)).unwrap().symbol
        );
        let est = ChannelEstimate { per_antenna: h.coefficients.clone() };
        let scaled = ChannelEstimate { per_antenna: h.coefficients.iter().map(|v| v * c).collect() };
        prop_assert_eq!(
            det.with_estimate(&grid, &est).unwrap().symbol,
            det.with_estimate(&grid, &scaled).unwrap().symbol
        );
    }

    #[test]
    fn coherent_l_collapse(m_log in 2u32..=12, l in 1usize..=8, x_db in -20.0f64..12.0) {
        let m = 1usize << m_log;
        let x = 10f64.powf(x_db / 10.0);
        let a = ser_coherent_awgn(m, l, x).unwrap();
        let b = ser_coherent_awgn(m, 1, l as f64 * x).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.max(b) + 1e-300, "{} vs {}", a, b);
    }

    #[test]
    fn theory_is_bounded_and_monotone(m_log in 2u32..=12, l in 1usize..=8, x_db in -30.0f64..20.0) {
        let m = 1usize << m_log;
        let cap = (m - 1) as f64 / m as f64;
        let x = 10f64.powf(x_db / 10.0);
        for f in [ser_coherent_awgn, ser_noncoherent_rayleigh] {
            let here = f(m, l, x).unwrap();
            prop_assert!((0.0..=cap).contains(&here));
            prop_assert!(f(m, l, 1.2 * x).unwrap() <= here * (1.0 + 1e-9));
            prop_assert!(f(m, l + 1, x).unwrap() <= here * (1.0 + 1e-9));
        }
    }
}

fn sim(detector: DetectorKind, l: usize, snr: f64) -> (f64, f64) {
    let mut c = SimConfig::new(7, l, detector, ChannelModel::Rayleigh);
    c.trials = 20_000;
    c.target_errors = 0;
    c.seed = 5;
    let p = run_point(&c, snr).unwrap();
    (p.ber, p.ber_std_error(7))
}

#[test]
fn more_antennas_never_hurt() {
    for det in [DetectorKind::Coherent, DetectorKind::Noncoherent, DetectorKind::Semicoherent] {
        let mut prev = sim(det, 1, -12.0);
        for l in 2..=4 {
            let cur = sim(det, l, -12.0);
            assert!(cur.0 <= prev.0 + 3.0 * (cur.1.hypot(prev.1)), "{det} L={l}: {cur:?} vs {prev:?}");
            prev = cur;
        }
    }
}

#[test]
fn perfect_csi_beats_square_law() {
    for l in [1, 2, 4] {
        for snr in [-16.0, -12.0, -8.0] {
            let coh = sim(DetectorKind::Coherent, l, snr);
            let non = sim(DetectorKind::Noncoherent, l, snr);
            assert!(coh.0 <= non.0 + 3.0 * coh.1.hypot(non.1), "L={l} {snr} dB");
        }
    }
}

//! SNR savings expressed as coverage extension under a log-distance path loss.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `PL(d) = reference_loss_db + 10·n·log10(d/d0)` dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel {
    pub reference_loss_db: f64,
    pub exponent: f64,
    pub reference_distance_km: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        Self {
            reference_loss_db: 91.22,
            exponent: 2.0,
            reference_distance_km: 1.0,
        }
    }
}

impl PathLossModel {
    pub fn new(reference_loss_db: f64, exponent: f64, reference_distance_km: f64) -> Result<Self> {
        if !(exponent.is_finite() && exponent > 0.0) {
            return Err(Error::InvalidParameter(format!("path-loss exponent {exponent}")));
        }
        if !(reference_distance_km.is_finite() && reference_distance_km > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "reference distance {reference_distance_km} km"
            )));
        }
        Ok(Self {
            reference_loss_db,
            exponent,
            reference_distance_km,
        })
    }

    pub fn path_loss_db(&self, distance_km: f64) -> f64 {
        self.reference_loss_db
            + 10.0 * self.exponent * (distance_km / self.reference_distance_km).log10()
    }
}

/// Distance multiplier bought by `snr_gain_db` at equal transmit power.
pub fn range_factor(snr_gain_db: f64, model: &PathLossModel) -> f64 {
    10f64.powf(snr_gain_db / (10.0 * model.exponent))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub snr_db: f64,
    pub ber: f64,
}

/// A BER curve with a name used in error messages.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCurve {
    pub label: String,
    pub points: Vec<CurvePoint>,
}

impl LabeledCurve {
    pub fn new(label: impl Into<String>, points: Vec<CurvePoint>) -> Self {
        Self {
            label: label.into(),
            points,
        }
    }

    /// SNR at which the curve first falls to `target`, interpolating
    /// linearly in `(SNR dB, log10 BER)`. Zero-BER points are skipped.
    pub fn snr_at_ber(&self, target: f64) -> Result<f64> {
        let not_bracketed = || Error::NotBracketed {
            curve: self.label.clone(),
            target,
        };
        if !(target > 0.0) {
            return Err(not_bracketed());
        }
        let mut pts: Vec<CurvePoint> = self
            .points
            .iter()
            .copied()
            .filter(|p| p.ber > 0.0 && p.snr_db.is_finite())
            .collect();
        pts.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
        let log_t = target.log10();
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a.ber >= target && b.ber <= target {
                let (la, lb) = (a.ber.log10(), b.ber.log10());
                if la == lb {
                    return Ok(a.snr_db);
                }
                return Ok(a.snr_db + (b.snr_db - a.snr_db) * (la - log_t) / (la - lb));
            }
        }
        Err(not_bracketed())
    }
}

/// `SNR_a − SNR_b` at `target_ber`: positive when curve `a` needs more SNR.
pub fn snr_gap_at_ber(a: &LabeledCurve, b: &LabeledCurve, target_ber: f64) -> Result<f64> {
    Ok(a.snr_at_ber(target_ber)? - b.snr_at_ber(target_ber)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn curve(label: &str, pts: &[(f64, f64)]) -> LabeledCurve {
        LabeledCurve::new(
            label,
            pts.iter()
                .map(|&(snr_db, ber)| CurvePoint { snr_db, ber })
                .collect(),
        )
    }

    #[test]
    fn range_factor_values() {
        let m = PathLossModel::default();
        assert_eq!(range_factor(0.0, &m), 1.0);
        assert!((range_factor(8.0, &m) - 2.511_886_431_509_58).abs() < 1e-12);
        let f29 = range_factor(29.0, &m);
        assert!((f29 - 28.183_829_312_644_54).abs() < 1e-9);
        let m3 = PathLossModel::new(91.22, 3.0, 1.0).unwrap();
        assert!((range_factor(30.0, &m3) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn path_loss_model() {
        let m = PathLossModel::default();
        assert!((m.path_loss_db(1.0) - 91.22).abs() < 1e-12);
        assert!((m.path_loss_db(10.0) - 111.22).abs() < 1e-12);
        // the extra loss at the extended range equals the SNR gain
        let d = range_factor(8.0, &m);
        assert!((m.path_loss_db(d) - m.path_loss_db(1.0) - 8.0).abs() < 1e-12);
        assert!(PathLossModel::new(91.22, 0.0, 1.0).is_err());
        assert!(PathLossModel::new(91.22, 2.0, -1.0).is_err());
    }

    #[test]
    fn interpolation_in_log_domain() {
        let c = curve("c", &[(0.0, 1e-2), (2.0, 1e-4)]);
        assert!((c.snr_at_ber(1e-3).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(c.snr_at_ber(1e-2).unwrap(), 0.0);
        assert_eq!(c.snr_at_ber(1e-4).unwrap(), 2.0);
    }

    #[test]
    fn identical_curves_have_zero_gap() {
        let c = curve("c", &[(-4.0, 0.2), (-2.0, 3e-3), (0.0, 1e-5)]);
        assert_eq!(snr_gap_at_ber(&c, &c, 1e-4).unwrap(), 0.0);
    }

    #[test]
    fn unbracketed_target_names_the_curve() {
        let a = curve("first", &[(0.0, 1e-1), (1.0, 1e-2)]);
        let b = curve("second", &[(0.0, 1e-3), (1.0, 1e-6)]);
        match snr_gap_at_ber(&b, &a, 1e-4) {
            Err(Error::NotBracketed { curve, .. }) => assert_eq!(curve, "first"),
            other => panic!("{other:?}"),
        }
        assert!(a.snr_at_ber(0.0).is_err());
    }

    #[test]
    fn zero_ber_points_are_skipped() {
        let c = curve("sim", &[(0.0, 1e-2), (1.0, 1e-3), (2.0, 0.0)]);
        assert!(c.snr_at_ber(1e-4).is_err());
        assert!((c.snr_at_ber(1e-3).unwrap() - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn range_factor_is_multiplicative(a in -40.0f64..40.0, b in -40.0f64..40.0, n in 1.5f64..4.0) {
            let m = PathLossModel::new(91.22, n, 1.0).unwrap();
            let lhs = range_factor(a + b, &m);
            let rhs = range_factor(a, &m) * range_factor(b, &m);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs);
        }

        #[test]
        fn gap_is_antisymmetric(shift in -10.0f64..10.0, slope in 0.5f64..2.0, target_exp in -4.5f64..-1.0) {
            let pts = |off: f64| -> Vec<(f64, f64)> {
                (0..40).map(|i| {
                    let s = -20.0 + i as f64;
                    (s + off, 10f64.powf(-slope * (s + 20.0) / 4.0))
                }).collect()
            };
            let a = curve("a", &pts(0.0));
            let b = curve("b", &pts(shift));
            let target = 10f64.powf(target_exp);
            let ab = snr_gap_at_ber(&a, &b, target).unwrap();
            let ba = snr_gap_at_ber(&b, &a, target).unwrap();
            prop_assert!((ab + ba).abs() < 1e-9);
            prop_assert!((ab + shift).abs() < 1e-9);
        }
    }
}

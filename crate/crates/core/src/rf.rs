//! Phase-shifter network modeling: phase quantization, per-element
//! Gaussian gain/phase impairments, and the DFT training pilot matrices.
//!
//! An error profile is drawn once per coherence block and reused by every
//! operation inside that block; the equivalent-channel estimation stage
//! depends on the training and data transmissions seeing the same
//! distorted network.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

/// Phase-shifter resolution: continuous or B-bit discrete.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseResolution {
    Continuous,
    Bits(u8),
}

impl Serialize for PhaseResolution {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PhaseResolution::Continuous => s.serialize_str("continuous"),
            PhaseResolution::Bits(b) => s.serialize_u64(u64::from(*b)),
        }
    }
}

impl<'de> Deserialize<'de> for PhaseResolution {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = PhaseResolution;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                write!(f, "\"continuous\" or a bit count between 1 and 32")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Self::Value, E> {
                if (1..=32).contains(&v) {
                    Ok(PhaseResolution::Bits(v as u8))
                } else {
                    Err(E::custom(format!("phase bits out of range: {v}")))
                }
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Self::Value, E> {
                if v >= 0 {
                    self.visit_u64(v as u64)
                } else {
                    Err(E::custom(format!("phase bits out of range: {v}")))
                }
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Self::Value, E> {
                if v == "continuous" {
                    Ok(PhaseResolution::Continuous)
                } else {
                    Err(E::custom(format!("unknown phase resolution {v:?}")))
                }
            }
        }
        d.deserialize_any(V)
    }
}

fn wrap_tau(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid can round up to the modulus itself for tiny negatives
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Snap a phase to the nearest grid point of {0, 2pi/2^B, ...} under
/// circular distance. Exact ties break toward the smaller grid phase;
/// continuous mode just reduces to [0, 2*pi).
pub fn quantize_phase(theta: f64, res: PhaseResolution) -> f64 {
    let theta = wrap_tau(theta);
    match res {
        PhaseResolution::Continuous => theta,
        PhaseResolution::Bits(b) => {
            let levels = 1u64 << b;
            let step = TAU / levels as f64;
            let r = theta / step;
            let down = r.floor();
            let frac = r - down;
            let down_idx = (down as u64).min(levels - 1);
            let up_idx = (down_idx + 1) % levels;
            let idx = if frac > 0.5 {
                up_idx
            } else if frac < 0.5 {
                down_idx
            } else {
                down_idx.min(up_idx)
            };
            idx as f64 * step
        }
    }
}

/// Per-element gain and phase error draws for one analog network, frozen
/// for the coherence block that drew them. Gains are N(1, sigma_alpha^2)
/// kept untruncated (negative draws stay negative); phase offsets are
/// N(0, sigma_delta^2).
#[derive(Debug, Clone)]
pub struct PhaseErrorProfile {
    rows: usize,
    cols: usize,
    pub gain: Vec<f64>,
    pub phase: Vec<f64>,
}

impl PhaseErrorProfile {
    /// Multiplicative distortion alpha * e^{j delta} of element (r, c).
    #[inline]
    pub fn factor(&self, r: usize, c: usize) -> C64 {
        debug_assert!(r < self.rows && c < self.cols);
        let i = r * self.cols + c;
        C64::from_polar(self.gain[i], self.phase[i])
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
}

/// Draw a fresh error profile for an `rows x cols` analog network.
pub fn draw_error_profile<R: Rng>(
    rows: usize,
    cols: usize,
    sigma_delta: f64,
    sigma_alpha: f64,
    rng: &mut R,
) -> PhaseErrorProfile {
    let gain_dist = Normal::new(1.0, sigma_alpha).expect("sigma_alpha must be finite");
    let phase_dist = Normal::new(0.0, sigma_delta).expect("sigma_delta must be finite");
    let n = rows * cols;
    let mut gain = Vec::with_capacity(n);
    let mut phase = Vec::with_capacity(n);
    for _ in 0..n {
        gain.push(gain_dist.sample(rng));
        phase.push(phase_dist.sample(rng));
    }
    PhaseErrorProfile {
        rows,
        cols,
        gain,
        phase,
    }
}

/// Analog beamforming matrix with constant-modulus entries and a
/// per-column silence mask. Entries carry the 1/sqrt(N) element scaling;
/// masked columns and switched-off rows are exactly zero and stay zero
/// under impairment.
#[derive(Debug, Clone)]
pub struct AnalogMatrix {
    mat: CMat,
    col_active: Vec<bool>,
    impaired: bool,
}

impl AnalogMatrix {
    /// Build an N x columns matrix from per-column phase vectors; `None`
    /// marks a silent (all-zero) column.
    pub fn from_phase_columns(n: usize, columns: &[Option<Vec<f64>>]) -> AnalogMatrix {
        let scale = 1.0 / (n as f64).sqrt();
        let mat = CMat::from_fn(n, columns.len(), |r, c| match &columns[c] {
            Some(phases) => C64::from_polar(scale, phases[r]),
            None => C64::ZERO,
        });
        AnalogMatrix {
            mat,
            col_active: columns.iter().map(Option::is_some).collect(),
            impaired: false,
        }
    }

    fn from_parts(mat: CMat, col_active: Vec<bool>, impaired: bool) -> AnalogMatrix {
        AnalogMatrix {
            mat,
            col_active,
            impaired,
        }
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn is_impaired(&self) -> bool {
        self.impaired
    }

    pub fn col_active(&self) -> &[bool] {
        &self.col_active
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        self.mat.col(c)
    }

    pub fn rows(&self) -> usize {
        self.mat.rows()
    }

    pub fn cols(&self) -> usize {
        self.mat.cols()
    }
}

/// Distort a matrix with a previously drawn error profile. Every nonzero
/// entry is multiplied by its element's alpha * e^{j delta}; zero entries
/// (masked columns, switched-off rows) are preserved.
pub fn apply_error_profile(ideal: &AnalogMatrix, profile: &PhaseErrorProfile) -> AnalogMatrix {
    assert_eq!(
        profile.shape(),
        (ideal.rows(), ideal.cols()),
        "error profile shape mismatch"
    );
    let mat = CMat::from_fn(ideal.rows(), ideal.cols(), |r, c| {
        let e = ideal.mat.at(r, c);
        if e == C64::ZERO {
            C64::ZERO
        } else {
            e * profile.factor(r, c)
        }
    });
    AnalogMatrix::from_parts(mat, ideal.col_active.clone(), true)
}

/// Draw fresh per-element errors, distort the matrix, and hand back the
/// profile so the rest of the coherence block can reuse the same draws.
pub fn apply_impairments<R: Rng>(
    ideal: &AnalogMatrix,
    sigma_delta: f64,
    sigma_alpha: f64,
    rng: &mut R,
) -> (AnalogMatrix, PhaseErrorProfile) {
    let profile = draw_error_profile(ideal.rows(), ideal.cols(), sigma_delta, sigma_alpha, rng);
    (apply_error_profile(ideal, &profile), profile)
}

/// Padding of the rows below the DFT block of the training pilot matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PilotVariant {
    /// Padded rows transmit at the constant-modulus magnitude 1/sqrt(N_BS)
    /// with phase zero.
    #[default]
    OnesPadded,
    /// Padded rows are switched off entirely.
    ZeroPadded,
    /// Padded rows carry literal unit entries, ignoring the constant
    /// modulus constraint. Exposed for sensitivity studies only.
    LiteralOnes,
}

/// Training pilot analog matrix: the top P*K rows are the scaled P*K-point
/// unitary DFT matrix, the remaining rows are padded per the variant.
/// Cycle p transmits columns p*K .. (p+1)*K - 1.
pub fn pilot_matrix(
    n_bs: usize,
    users: usize,
    cycles: usize,
    variant: PilotVariant,
) -> Result<AnalogMatrix> {
    if users == 0 || cycles == 0 {
        return Err(Error::InvalidArgument(
            "pilot_matrix: user count and cycle count must be at least 1".into(),
        ));
    }
    let pk = users * cycles;
    if pk > n_bs {
        return Err(Error::InvalidArgument(format!(
            "pilot_matrix: P*K = {pk} exceeds N_BS = {n_bs}"
        )));
    }
    let scale = 1.0 / (n_bs as f64).sqrt();
    let mat = CMat::from_fn(n_bs, pk, |r, c| {
        if r < pk {
            // sqrt(PK/N_BS) times the unitary DFT entry e^{j 2 pi r c / PK} / sqrt(PK)
            C64::from_polar(scale, TAU * (r as f64) * (c as f64) / pk as f64)
        } else {
            match variant {
                PilotVariant::OnesPadded => C64::new(scale, 0.0),
                PilotVariant::ZeroPadded => C64::ZERO,
                PilotVariant::LiteralOnes => C64::ONE,
            }
        }
    });
    Ok(AnalogMatrix::from_parts(mat, vec![true; pk], false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, StreamRole};
    use crate::stats::KahanSum;
    use std::f64::consts::PI;

    #[test]
    fn continuous_quantization_is_identity() {
        assert!((quantize_phase(0.1, PhaseResolution::Continuous) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn two_bit_grid_snaps_to_nearest() {
        // Grid {0, pi/2, pi, 3pi/2}: pi/3 is 1.047 from 0 but 0.524 from pi/2.
        let q = quantize_phase(PI / 3.0, PhaseResolution::Bits(2));
        assert!((q - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn quantization_wraps_circularly() {
        let q = quantize_phase(TAU - 0.01, PhaseResolution::Bits(1));
        assert_eq!(q, 0.0);
    }

    #[test]
    fn quantization_ties_break_to_smaller_phase() {
        let q = quantize_phase(PI / 4.0, PhaseResolution::Bits(2));
        assert_eq!(q, 0.0);
        // Wrap-around tie between the last grid point and 0 picks 0 too.
        let q = quantize_phase(TAU - PI / 4.0, PhaseResolution::Bits(2));
        assert_eq!(q, 0.0);
    }

    #[test]
    fn quantization_is_idempotent() {
        let mut rng = substream(11, 0, StreamRole::Impairment);
        for _ in 0..1000 {
            let theta = rng.random_range(-10.0..10.0);
            let b = PhaseResolution::Bits(rng.random_range(1..=8));
            let q = quantize_phase(theta, b);
            assert_eq!(quantize_phase(q, b), q);
        }
    }

    #[test]
    fn zero_sigma_impairment_is_identity() {
        let ideal = AnalogMatrix::from_phase_columns(4, &[Some(vec![0.1, 0.2, 0.3, 0.4]), None]);
        let mut rng = substream(12, 0, StreamRole::Impairment);
        let (imp, _) = apply_impairments(&ideal, 0.0, 0.0, &mut rng);
        for r in 0..4 {
            for c in 0..2 {
                assert!((imp.matrix().at(r, c) - ideal.matrix().at(r, c)).norm() < 1e-15);
            }
        }
        assert!(imp.is_impaired());
    }

    #[test]
    fn masked_entries_stay_zero_under_impairment() {
        let ideal = AnalogMatrix::from_phase_columns(3, &[None, Some(vec![0.0, 1.0, 2.0])]);
        let mut rng = substream(13, 0, StreamRole::Impairment);
        let (imp, _) = apply_impairments(&ideal, 0.3, 0.3, &mut rng);
        for r in 0..3 {
            assert_eq!(imp.matrix().at(r, 0), C64::ZERO);
        }
        assert_eq!(imp.col_active(), &[false, true]);
    }

    #[test]
    fn impairment_redraw_is_seed_reproducible() {
        let ideal = AnalogMatrix::from_phase_columns(8, &[Some(vec![0.5; 8]), Some(vec![1.5; 8])]);
        let (a, _) = apply_impairments(
            &ideal,
            0.1,
            0.1,
            &mut substream(9, 3, StreamRole::Impairment),
        );
        let (b, _) = apply_impairments(
            &ideal,
            0.1,
            0.1,
            &mut substream(9, 3, StreamRole::Impairment),
        );
        assert_eq!(a.matrix(), b.matrix());
    }

    #[test]
    fn ideal_entries_have_constant_modulus() {
        let mut rng = substream(14, 0, StreamRole::Impairment);
        for _ in 0..50 {
            let n = rng.random_range(1..=64);
            let phases: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
            let m = AnalogMatrix::from_phase_columns(n, &[Some(phases)]);
            let want = 1.0 / (n as f64).sqrt();
            for r in 0..n {
                assert!((m.matrix().at(r, 0).norm() - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn impaired_entry_moments_match_gaussian_characteristic_function() {
        // E[alpha e^{j delta}] = e^{-sigma_delta^2/2} and
        // E[|alpha e^{j delta}|^2] = 1 + sigma_alpha^2.
        let (sd, sa) = (0.3, 0.2);
        let mut rng = substream(15, 0, StreamRole::Impairment);
        let profile = draw_error_profile(1000, 1000, sd, sa, &mut rng);
        let mut mean = KahanSum::default();
        let mut mean_im = KahanSum::default();
        let mut power = KahanSum::default();
        let mut var_a = KahanSum::default();
        let mut var_d = KahanSum::default();
        let n = 1_000_000;
        for i in 0..n {
            let f = C64::from_polar(profile.gain[i], profile.phase[i]);
            mean.add(f.re);
            mean_im.add(f.im);
            power.add(f.norm_sqr());
            var_a.add((profile.gain[i] - 1.0).powi(2));
            var_d.add(profile.phase[i].powi(2));
        }
        let nf = n as f64;
        let want_mean = (-sd * sd / 2.0).exp();
        assert!((mean.value() / nf - want_mean).abs() < 3e-3);
        assert!((mean_im.value() / nf).abs() < 3e-3);
        let want_power = 1.0 + sa * sa;
        assert!((power.value() / nf - want_power).abs() / want_power < 0.01);
        assert!((var_a.value() / nf - sa * sa).abs() / (sa * sa) < 0.02);
        assert!((var_d.value() / nf - sd * sd).abs() / (sd * sd) < 0.02);
    }

    #[test]
    fn square_pilot_is_the_unitary_dft() {
        let p = pilot_matrix(4, 4, 1, PilotVariant::ZeroPadded).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let want = C64::from_polar(0.5, TAU * (r * c) as f64 / 4.0);
                assert!((p.matrix().at(r, c) - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_padded_pilot_switches_rows_off() {
        let p = pilot_matrix(8, 4, 1, PilotVariant::ZeroPadded).unwrap();
        for r in 4..8 {
            for c in 0..4 {
                assert_eq!(p.matrix().at(r, c), C64::ZERO);
            }
        }
    }

    #[test]
    fn pilot_dft_columns_have_expected_norm() {
        for (n_bs, k, cycles) in [(16, 4, 1), (64, 4, 2), (128, 10, 1)] {
            let p = pilot_matrix(n_bs, k, cycles, PilotVariant::ZeroPadded).unwrap();
            let pk = k * cycles;
            let want = (pk as f64 / n_bs as f64).sqrt();
            for c in 0..pk {
                let norm: f64 = (0..n_bs)
                    .map(|r| p.matrix().at(r, c).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                assert!((norm - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn oversized_pilot_is_rejected() {
        assert!(pilot_matrix(8, 4, 3, PilotVariant::OnesPadded).is_err());
    }

    #[test]
    fn phase_resolution_serde_round_trip() {
        let c: PhaseResolution = serde_json::from_str("\"continuous\"").unwrap();
        assert_eq!(c, PhaseResolution::Continuous);
        let b: PhaseResolution = serde_json::from_str("3").unwrap();
        assert_eq!(b, PhaseResolution::Bits(3));
        assert!(serde_json::from_str::<PhaseResolution>("0").is_err());
        assert_eq!(
            serde_json::to_string(&PhaseResolution::Bits(3)).unwrap(),
            "3"
        );
    }
}

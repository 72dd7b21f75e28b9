//! Analog beamformer design from channel SVDs, user scheduling,
//! equivalent-channel construction, and ZF/RZF digital precoding.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{svd, CMat, C64};
use crate::rf::{quantize_phase, AnalogMatrix, PhaseResolution};

/// Condition number above which the equivalent channel is treated as
/// rank deficient.
const MAX_CONDITION: f64 = 1e12;

/// Per-user analog design extracted from the channel's top singular pair.
#[derive(Debug, Clone)]
pub struct AbfDesign {
    /// Quantized phases for the BS precoding column.
    pub bs_phases: Vec<f64>,
    /// Quantized phases for the UE combining vector.
    pub ue_phases: Vec<f64>,
    /// Largest singular value of the channel.
    pub top_singular_value: f64,
}

fn phase_fix(mut v: Vec<C64>) -> Vec<C64> {
    // Singular vectors are unique only up to a global phase; pin the first
    // entry to phase zero so results are deterministic across backends.
    let ph = v[0].arg();
    if ph != 0.0 {
        let rot = C64::from_polar(1.0, -ph);
        for x in &mut v {
            *x *= rot;
        }
    }
    v
}

/// Extract quantized phases of the top left/right singular vectors of a
/// user channel. The BS side follows the right singular vector, the UE
/// side the left one.
pub fn design_svd_abf(
    h: &CMat,
    bits_bs: PhaseResolution,
    bits_ue: PhaseResolution,
) -> Result<AbfDesign> {
    if h.frobenius_norm_sq() <= 0.0 {
        return Err(Error::DegenerateInput(
            "design_svd_abf: all-zero channel matrix".into(),
        ));
    }
    let f = svd(h);
    let s1 = f.sigma[0];
    if s1 <= 0.0 {
        return Err(Error::DegenerateInput(
            "design_svd_abf: channel has no nonzero singular value".into(),
        ));
    }
    let u1 = phase_fix(f.u.col(0));
    let v1 = phase_fix(f.v.col(0));
    Ok(AbfDesign {
        bs_phases: v1
            .iter()
            .map(|x| quantize_phase(x.arg(), bits_bs))
            .collect(),
        ue_phases: u1
            .iter()
            .map(|x| quantize_phase(x.arg(), bits_ue))
            .collect(),
        top_singular_value: s1,
    })
}

/// Which user of an angular cluster stays active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchedulePolicy {
    /// Sort by angle, chain users whose consecutive gaps are below the
    /// threshold into clusters, keep the lowest-index member of each.
    #[default]
    ClusterLowestIndex,
    /// Same clustering, keep the member with the largest strength metric.
    ClusterStrongest,
    /// Greedy scan in user-index order: keep a user iff it is at least the
    /// threshold away (circularly) from every previously kept user.
    GreedyScan,
}

#[inline]
fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Pick the non-silent user index set for a set of beam angles.
///
/// `threshold` is the beam width (2*pi / N_BS). `strength` is consulted
/// only by the strongest-member policy and must then match `angles` in
/// length. The returned indices are ascending.
pub fn schedule_users(
    angles: &[f64],
    threshold: f64,
    policy: SchedulePolicy,
    strength: &[f64],
) -> Vec<usize> {
    let k = angles.len();
    if k == 0 {
        return Vec::new();
    }
    if policy == SchedulePolicy::ClusterStrongest {
        assert_eq!(
            strength.len(),
            k,
            "strongest-member scheduling needs one strength per user"
        );
    }

    match policy {
        SchedulePolicy::GreedyScan => {
            let mut kept: Vec<usize> = Vec::new();
            for i in 0..k {
                if kept
                    .iter()
                    .all(|&j| circular_distance(angles[i], angles[j]) >= threshold)
                {
                    kept.push(i);
                }
            }
            kept
        }
        SchedulePolicy::ClusterLowestIndex | SchedulePolicy::ClusterStrongest => {
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&i, &j| {
                angles[i]
                    .rem_euclid(TAU)
                    .partial_cmp(&angles[j].rem_euclid(TAU))
                    .unwrap()
                    .then(i.cmp(&j))
            });
            // Gap after sorted position i (circular).
            let gap_after = |i: usize| -> f64 {
                let a = angles[order[i]].rem_euclid(TAU);
                let b = angles[order[(i + 1) % k]].rem_euclid(TAU);
                (b - a).rem_euclid(TAU)
            };
            let breaks: Vec<usize> = (0..k).filter(|&i| gap_after(i) >= threshold).collect();
            let mut clusters: Vec<Vec<usize>> = Vec::new();
            if breaks.is_empty() {
                // Every gap is small: one wrap-around cluster.
                clusters.push(order.clone());
            } else {
                for w in 0..breaks.len() {
                    let start = (breaks[w] + 1) % k;
                    let end = breaks[(w + 1) % breaks.len()];
                    let mut members = Vec::new();
                    let mut i = start;
                    loop {
                        members.push(order[i]);
                        if i == end {
                            break;
                        }
                        i = (i + 1) % k;
                    }
                    clusters.push(members);
                }
            }
            let mut kept: Vec<usize> = clusters
                .iter()
                .map(|members| match policy {
                    SchedulePolicy::ClusterStrongest => *members
                        .iter()
                        .max_by(|&&a, &&b| {
                            strength[a]
                                .partial_cmp(&strength[b])
                                .unwrap()
                                .then(b.cmp(&a))
                        })
                        .unwrap(),
                    _ => *members.iter().min().unwrap(),
                })
                .collect();
            kept.sort_unstable();
            kept
        }
    }
}

/// Ideal and impaired equivalent channels of the kept users, plus their
/// difference.
#[derive(Debug, Clone)]
pub struct EquivalentChannel {
    pub ideal: CMat,
    pub impaired: CMat,
    pub delta: CMat,
}

fn heq_rows(
    combiners: &[Vec<C64>],
    channels: &[CMat],
    analog: &AnalogMatrix,
    kept: &[usize],
) -> CMat {
    let mut rows = Vec::with_capacity(kept.len());
    for &user in kept {
        let wh: Vec<C64> = {
            // w^H H, length N_BS
            let h = &channels[user];
            let w = &combiners[user];
            (0..h.cols())
                .map(|c| (0..h.rows()).map(|r| w[r].conj() * h.at(r, c)).sum::<C64>())
                .collect()
        };
        let row: Vec<C64> = kept
            .iter()
            .map(|&col| {
                (0..analog.rows())
                    .map(|r| wh[r] * analog.matrix().at(r, col))
                    .sum::<C64>()
            })
            .collect();
        rows.push(row);
    }
    CMat::from_rows(&rows)
}

/// Build the K_I x K_I equivalent channel seen after analog combining and
/// precoding, restricted to the non-silent columns, for both the ideal and
/// the impaired analog networks.
pub fn equivalent_channel(
    combiners_ideal: &[Vec<C64>],
    combiners_impaired: &[Vec<C64>],
    channels: &[CMat],
    f_ideal: &AnalogMatrix,
    f_impaired: &AnalogMatrix,
    kept: &[usize],
) -> Result<EquivalentChannel> {
    let k = channels.len();
    if combiners_ideal.len() != k || combiners_impaired.len() != k {
        return Err(Error::InvalidArgument(
            "equivalent_channel: combiner count does not match user count".into(),
        ));
    }
    if f_ideal.cols() != k || f_impaired.cols() != k {
        return Err(Error::InvalidArgument(
            "equivalent_channel: analog matrix column count does not match user count".into(),
        ));
    }
    for (i, h) in channels.iter().enumerate() {
        if h.cols() != f_ideal.rows() || combiners_ideal[i].len() != h.rows() {
            return Err(Error::InvalidArgument(format!(
                "equivalent_channel: dimension mismatch for user {i}"
            )));
        }
    }
    if kept.iter().any(|&i| i >= k) {
        return Err(Error::InvalidArgument(
            "equivalent_channel: kept index out of range".into(),
        ));
    }
    let ideal = heq_rows(combiners_ideal, channels, f_ideal, kept);
    let impaired = heq_rows(combiners_impaired, channels, f_impaired, kept);
    let delta = impaired.sub(&ideal);
    Ok(EquivalentChannel {
        ideal,
        impaired,
        delta,
    })
}

/// Zero-forcing precoder F = H^H (H H^H)^{-1}, i.e. the inverse for the
/// square full-rank equivalent channels used here.
pub fn zf_precoder(h_eq: &CMat) -> Result<CMat> {
    if h_eq.rows() != h_eq.cols() {
        return Err(Error::InvalidArgument(format!(
            "zf_precoder: equivalent channel must be square, got {}x{}",
            h_eq.rows(),
            h_eq.cols()
        )));
    }
    let f = svd(h_eq);
    let smin = *f.sigma.last().unwrap();
    let smax = f.sigma[0];
    if smin <= 0.0 || smax / smin > MAX_CONDITION {
        return Err(Error::SingularMatrix(format!(
            "zf_precoder: condition number {:.3e} exceeds {MAX_CONDITION:.0e}",
            if smin > 0.0 {
                smax / smin
            } else {
                f64::INFINITY
            }
        )));
    }
    // V diag(1/sigma) U^H
    let n = h_eq.rows();
    let mut vs = CMat::zeros(n, n);
    for c in 0..n {
        let inv = 1.0 / f.sigma[c];
        for r in 0..n {
            *vs.at_mut(r, c) = f.v.at(r, c) * inv;
        }
    }
    Ok(vs.matmul(&f.u.hermitian()))
}

/// Regularized zero-forcing precoder
/// F = H^H (H H^H + K_I (sigma_z^2 / rho) I)^{-1}.
pub fn rzf_precoder(h_eq: &CMat, rho: f64, sigma_z2: f64, k_i: usize) -> Result<CMat> {
    if rho.is_nan() || rho <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "rzf_precoder: transmit power must be positive, got {rho}"
        )));
    }
    let load = k_i as f64 * sigma_z2 / rho;
    let f = svd(h_eq);
    let n = h_eq.rows();
    let mut vs = CMat::zeros(n, n);
    for c in 0..n {
        let s = f.sigma[c];
        let g = s / (s * s + load);
        for r in 0..n {
            *vs.at_mut(r, c) = f.v.at(r, c) * g;
        }
    }
    Ok(vs.matmul(&f.u.hermitian()))
}

/// Transmit power normalization eta = 1 / sqrt(tr(F F^H)).
pub fn power_factor(f_bb: &CMat) -> Result<f64> {
    let t = f_bb.frobenius_norm_sq();
    if t <= 0.0 {
        return Err(Error::InvalidArgument(
            "power_factor: zero precoding matrix".into(),
        ));
    }
    Ok(1.0 / t.sqrt())
}

/// Everything the BS and users need for one coherence block of data
/// transmission.
#[derive(Debug, Clone)]
pub struct HybridBeamformer {
    /// N_BS x K analog precoder, silent columns zero.
    pub f_rf_ideal: AnalogMatrix,
    /// The same network as realized by the impaired phase shifters.
    pub f_rf_impaired: AnalogMatrix,
    /// Per-user UE combiners (full K list, silent users keep a default).
    pub combiners_ideal: Vec<Vec<C64>>,
    pub combiners_impaired: Vec<Vec<C64>>,
    /// K_I x K_I digital precoder.
    pub f_bb: CMat,
    pub eta: f64,
    /// Ascending indices of the non-silent users.
    pub non_silent: Vec<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{channel_from_paths, draw_paths};
    use crate::rng::{substream, StreamRole};
    use rand::Rng;
    use rand_distr::StandardNormal;
    use std::f64::consts::PI;

    fn random_square(n: usize, seed: u64) -> CMat {
        let mut rng = substream(seed, 0, StreamRole::Channel);
        CMat::from_fn(n, n, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    }

    fn steering_gain(h: &CMat, d: &AbfDesign) -> f64 {
        let n_ue = h.rows();
        let n_bs = h.cols();
        let w: Vec<C64> = d
            .ue_phases
            .iter()
            .map(|&p| C64::from_polar(1.0 / (n_ue as f64).sqrt(), p))
            .collect();
        let f: Vec<C64> = d
            .bs_phases
            .iter()
            .map(|&p| C64::from_polar(1.0 / (n_bs as f64).sqrt(), p))
            .collect();
        let hf = h.mul_vec(&f);
        w.iter()
            .zip(&hf)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            .norm()
    }

    #[test]
    fn pure_los_continuous_design_reaches_full_array_gain() {
        let mut rng = substream(41, 0, StreamRole::Channel);
        for _ in 0..10 {
            let paths = draw_paths(1, 1, &mut rng);
            let ch = channel_from_paths(&paths, 64, 4, 0.0, true).unwrap();
            let d = design_svd_abf(
                &ch.matrices[0],
                PhaseResolution::Continuous,
                PhaseResolution::Continuous,
            )
            .unwrap();
            let gain = steering_gain(&ch.matrices[0], &d);
            assert!(((64.0 * 4.0_f64).sqrt() - gain).abs() < 1e-9, "gain {gain}");
        }
    }

    #[test]
    fn quantized_design_loses_little_gain_on_los_channel() {
        // Fixed angles; the brute-force gain evaluation is the oracle.
        let paths = crate::geometry::PathSet {
            users: vec![crate::geometry::UserPaths {
                aod_los: 1.0,
                aoa_los: 2.0,
                scatter: vec![],
            }],
        };
        let ch = channel_from_paths(&paths, 128, 4, 0.0, true).unwrap();
        let d = design_svd_abf(
            &ch.matrices[0],
            PhaseResolution::Bits(3),
            PhaseResolution::Bits(3),
        )
        .unwrap();
        let gain = steering_gain(&ch.matrices[0], &d);
        let full = (128.0 * 4.0_f64).sqrt();
        assert!(gain >= 0.95 * full, "gain {gain} vs {}", 0.95 * full);
    }

    #[test]
    fn design_is_scale_invariant() {
        let mut rng = substream(43, 0, StreamRole::Channel);
        let h = CMat::from_fn(4, 16, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let d1 = design_svd_abf(&h, PhaseResolution::Bits(4), PhaseResolution::Bits(4)).unwrap();
        let d2 = design_svd_abf(
            &h.scale(C64::new(7.25, 0.0)),
            PhaseResolution::Bits(4),
            PhaseResolution::Bits(4),
        )
        .unwrap();
        for (a, b) in d1.bs_phases.iter().zip(&d2.bs_phases) {
            assert!((a - b).abs() < 1e-9);
        }
        for (a, b) in d1.ue_phases.iter().zip(&d2.ue_phases) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!((d2.top_singular_value / d1.top_singular_value - 7.25).abs() < 1e-9);
    }

    #[test]
    fn all_zero_channel_is_degenerate() {
        assert!(matches!(
            design_svd_abf(
                &CMat::zeros(2, 4),
                PhaseResolution::Continuous,
                PhaseResolution::Continuous
            ),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn identical_angles_keep_only_the_lowest_index() {
        let kept = schedule_users(
            &[1.0, 1.0],
            TAU / 128.0,
            SchedulePolicy::ClusterLowestIndex,
            &[],
        );
        assert_eq!(kept, vec![0]);
    }

    #[test]
    fn well_separated_users_all_stay() {
        let kept = schedule_users(
            &[0.0, PI / 2.0, PI],
            TAU / 128.0,
            SchedulePolicy::ClusterLowestIndex,
            &[],
        );
        assert_eq!(kept, vec![0, 1, 2]);
    }

    #[test]
    fn chained_cluster_collapses_to_one_user() {
        // Three users whose consecutive gaps are below the threshold form
        // one cluster even though the extremes are farther apart.
        let t = TAU / 128.0;
        let kept = schedule_users(
            &[1.0, 1.0 + 0.8 * t, 1.0 + 1.6 * t],
            t,
            SchedulePolicy::ClusterLowestIndex,
            &[],
        );
        assert_eq!(kept, vec![0]);
        // The greedy variant keeps the extremes instead.
        let kept = schedule_users(
            &[1.0, 1.0 + 0.8 * t, 1.0 + 1.6 * t],
            t,
            SchedulePolicy::GreedyScan,
            &[],
        );
        assert_eq!(kept, vec![0, 2]);
    }

    #[test]
    fn strongest_policy_keeps_the_loudest_member() {
        let t = 0.1;
        let kept = schedule_users(
            &[1.0, 1.05, 3.0],
            t,
            SchedulePolicy::ClusterStrongest,
            &[0.5, 2.0, 1.0],
        );
        assert_eq!(kept, vec![1, 2]);
    }

    #[test]
    fn wraparound_cluster_is_detected() {
        // Users on both sides of 0 belong to the same cluster.
        let t = 0.2;
        let kept = schedule_users(
            &[0.05, TAU - 0.05, 3.0],
            t,
            SchedulePolicy::ClusterLowestIndex,
            &[],
        );
        assert_eq!(kept, vec![0, 2]);
    }

    #[test]
    fn schedule_count_is_permutation_invariant() {
        let mut rng = substream(44, 0, StreamRole::Scheduling);
        for _ in 0..200 {
            let k = rng.random_range(2..20);
            let angles: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..TAU)).collect();
            let t = TAU / 64.0;
            let baseline =
                schedule_users(&angles, t, SchedulePolicy::ClusterLowestIndex, &[]).len();
            let mut perm: Vec<usize> = (0..k).collect();
            // simple deterministic shuffle
            for i in (1..k).rev() {
                let j = rng.random_range(0..=i);
                perm.swap(i, j);
            }
            let shuffled: Vec<f64> = perm.iter().map(|&i| angles[i]).collect();
            let count = schedule_users(&shuffled, t, SchedulePolicy::ClusterLowestIndex, &[]).len();
            assert_eq!(baseline, count);
        }
    }

    #[test]
    fn zf_inverts_the_equivalent_channel() {
        for seed in 0..20 {
            let h = random_square(4, 100 + seed);
            let f = zf_precoder(&h).unwrap();
            let res = h.matmul(&f).sub(&CMat::identity(4)).frobenius_norm();
            assert!(res < 1e-9, "residual {res}");
        }
    }

    #[test]
    fn zf_of_identity_and_diagonal() {
        let f = zf_precoder(&CMat::identity(3)).unwrap();
        assert!(f.sub(&CMat::identity(3)).frobenius_norm() < 1e-12);

        let d = CMat::from_fn(3, 3, |r, c| {
            if r == c {
                C64::new([2.0, 4.0, 8.0][r], 0.0)
            } else {
                C64::ZERO
            }
        });
        let f = zf_precoder(&d).unwrap();
        for (i, want) in [0.5, 0.25, 0.125].iter().enumerate() {
            assert!((f.at(i, i) - C64::new(*want, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn rank_deficient_channel_is_rejected() {
        let mut h = random_square(4, 7);
        let row: Vec<C64> = h.row(0).to_vec();
        for (c, v) in row.iter().enumerate() {
            *h.at_mut(3, c) = *v;
        }
        assert!(matches!(zf_precoder(&h), Err(Error::SingularMatrix(_))));
    }

    #[test]
    fn rzf_converges_to_zf_as_loading_vanishes() {
        let h = random_square(4, 9);
        let zf = zf_precoder(&h).unwrap();
        let rzf = rzf_precoder(&h, 1e12, 1.0, 4).unwrap();
        assert!(zf.sub(&rzf).frobenius_norm() < 1e-6);
    }

    #[test]
    fn rzf_of_identity_with_unit_loading() {
        // (I I + 2 I)^{-1} = I/3 for K_I = 2.
        let f = rzf_precoder(&CMat::identity(2), 1.0, 1.0, 2).unwrap();
        assert!(
            f.sub(&CMat::identity(2).scale(C64::new(1.0 / 3.0, 0.0)))
                .frobenius_norm()
                < 1e-12
        );
    }

    #[test]
    fn rzf_never_needs_less_power_than_zf() {
        for seed in 0..50 {
            let h = random_square(4, 200 + seed);
            let ezf = power_factor(&zf_precoder(&h).unwrap()).unwrap();
            let erzf = power_factor(&rzf_precoder(&h, 10.0, 1.0, 4).unwrap()).unwrap();
            assert!(erzf >= ezf - 1e-12, "eta_rzf {erzf} < eta_zf {ezf}");
        }
    }

    #[test]
    fn power_factor_matches_hand_values() {
        assert!((power_factor(&CMat::identity(4)).unwrap() - 0.5).abs() < 1e-12);
        let d = CMat::from_fn(2, 2, |r, c| {
            if r == c {
                C64::new([0.5, 0.25][r], 0.0)
            } else {
                C64::ZERO
            }
        });
        let want = 1.0 / (0.25 + 0.0625_f64).sqrt();
        assert!((power_factor(&d).unwrap() - want).abs() < 1e-12);
        assert!(power_factor(&CMat::zeros(2, 2)).is_err());
    }

    #[test]
    fn power_factor_is_inverse_homogeneous() {
        let mut rng = substream(45, 0, StreamRole::Channel);
        for _ in 0..1000 {
            let f = CMat::from_fn(3, 3, |_, _| {
                C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
            let c: f64 = rng.random_range(0.1..10.0);
            let a = power_factor(&f).unwrap();
            let b = power_factor(&f.scale(C64::new(c, 0.0))).unwrap();
            assert!((b * c - a).abs() / a < 1e-12);
        }
    }

    #[test]
    fn equivalent_channel_difference_vanishes_without_impairment() {
        let mut rng = substream(46, 0, StreamRole::Channel);
        let paths = draw_paths(3, 2, &mut rng);
        let ch = channel_from_paths(&paths, 16, 2, 10.0, false).unwrap();
        let cols: Vec<Option<Vec<f64>>> = (0..3).map(|c| Some(vec![c as f64 * 0.2; 16])).collect();
        let f = AnalogMatrix::from_phase_columns(16, &cols);
        let w: Vec<Vec<C64>> = (0..3)
            .map(|_| vec![C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0); 2])
            .collect();
        let eq = equivalent_channel(&w, &w, &ch.matrices, &f, &f, &[0, 1, 2]).unwrap();
        assert_eq!(eq.delta.frobenius_norm(), 0.0);
    }

    #[test]
    fn single_user_equivalent_channel_is_the_scalar_gain() {
        let mut rng = substream(47, 0, StreamRole::Channel);
        let paths = draw_paths(1, 1, &mut rng);
        let ch = channel_from_paths(&paths, 8, 2, 0.0, true).unwrap();
        let f = AnalogMatrix::from_phase_columns(8, &[Some(vec![0.0; 8])]);
        let w = vec![vec![C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0); 2]];
        let eq = equivalent_channel(&w, &w, &ch.matrices, &f, &f, &[0]).unwrap();
        // Direct scalar w^H H f.
        let hf = ch.matrices[0].mul_vec(&f.column(0));
        let want: C64 = w[0].iter().zip(&hf).map(|(a, b)| a.conj() * b).sum();
        assert!((eq.ideal.at(0, 0) - want).norm() < 1e-12);
    }

    #[test]
    fn orthogonal_steering_users_diagonalize_the_equivalent_channel() {
        // Users on distinct DFT directions with matched steering columns:
        // the equivalent channel collapses to diag of the channel gains.
        let n_bs = 32;
        let psis = [0.0, TAU * 4.0 / 32.0, TAU * 9.0 / 32.0];
        let mut channels = Vec::new();
        let mut cols = Vec::new();
        for &psi in &psis {
            // 1 x N_BS channel row: conj of the steering column times sqrt(N_BS)
            let h = CMat::from_fn(1, n_bs, |_, c| {
                C64::from_polar(1.0, -(psi * c as f64)) * (n_bs as f64).sqrt()
                    / (n_bs as f64).sqrt()
            });
            channels.push(h);
            cols.push(Some((0..n_bs).map(|i| psi * i as f64).collect::<Vec<_>>()));
        }
        let f = AnalogMatrix::from_phase_columns(n_bs, &cols);
        let w = vec![vec![C64::ONE]; 3];
        let eq = equivalent_channel(&w, &w, &channels, &f, &f, &[0, 1, 2]).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                if r != c {
                    assert!(eq.ideal.at(r, c).norm() < 1e-10);
                }
            }
        }
    }
}

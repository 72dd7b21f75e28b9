//! Four-stage downlink channel estimation and hybrid beamformer design.
//!
//! Stage 1 estimates each user's LOS departure direction from DFT-column
//! pilots via three-bin complex interpolation; stage 2 schedules users and
//! steers the BS columns at the estimates; stage 3 searches the UE
//! beamsteering codebook; stage 4 estimates the distorted equivalent
//! channel from orthogonal pilots and zero-forces it. Because the digital
//! precoder is matched to the channel the impaired hardware actually
//! realizes, the high-SNR interference ceiling of CSI-based designs
//! disappears.
//!
//! The estimated quantity is the spatial frequency psi = pi cos(phi)
//! reduced mod 2*pi: the interpolator output feeds element phases
//! directly and never passes through an arccos.

use std::f64::consts::TAU;

use rand::Rng;

use crate::beamforming::{
    equivalent_channel, power_factor, schedule_users, zf_precoder, HybridBeamformer,
};
use crate::config::{Method, ScenarioConfig};
use crate::error::{Error, Result};
use crate::geometry::{draw_channel, ChannelRealization};
use crate::linalg::{CMat, C64};
use crate::rate::RateResult;
use crate::rf::{
    apply_error_profile, apply_impairments, pilot_matrix, quantize_phase, AnalogMatrix,
    PhaseErrorProfile, PhaseResolution,
};
use crate::rng::{complex_gaussian, substream, StreamRole};

/// Pilot symbols one user received across all training cycles. Bin m is
/// the response of DFT column m; the DFT size is the symbol count P*K.
#[derive(Debug, Clone)]
pub struct Stage1Observation {
    pub symbols: Vec<C64>,
    /// Variance of the additive noise per symbol after the single-antenna
    /// combiner.
    pub noise_var: f64,
}

/// Receive the training pilots at one user. The user listens with the
/// single omni element w = e_1 / sqrt(N_UE); scattering-path energy and
/// thermal noise together form the effective disturbance on the tone.
pub fn simulate_stage1<R: Rng>(
    h_k: &CMat,
    pilot_impaired: &AnalogMatrix,
    rho: f64,
    sigma_z2: f64,
    rng: &mut R,
) -> Stage1Observation {
    let n_ue = h_k.rows();
    let scale = 1.0 / (n_ue as f64).sqrt();
    let amp = rho.sqrt();
    let bins = pilot_impaired.cols();
    let mut symbols = Vec::with_capacity(bins);
    for m in 0..bins {
        let mut tone = C64::ZERO;
        for n in 0..h_k.cols() {
            tone += h_k.at(0, n) * pilot_impaired.matrix().at(n, m);
        }
        let noise = complex_gaussian(rng) * sigma_z2.sqrt();
        symbols.push(amp * scale * tone + scale * noise);
    }
    Stage1Observation {
        symbols,
        noise_var: sigma_z2 * scale * scale,
    }
}

/// A spatial-frequency estimate from three-bin DFT interpolation.
#[derive(Debug, Clone, Copy)]
pub struct AodEstimate {
    /// Estimated per-element phase increment in [0, 2*pi).
    pub spatial_freq: f64,
    /// Bin of the magnitude peak.
    pub peak_bin: usize,
    /// Fractional-bin correction applied to the peak.
    pub correction: f64,
    /// Peak magnitude, usable as a crude LOS strength metric.
    pub peak_magnitude: f64,
}

/// Three-bin complex DFT interpolation around the magnitude peak, with
/// circular neighbor indexing. A vanishing denominator falls back to the
/// bin center.
pub fn jacobsen_estimate(symbols: &[C64]) -> Result<AodEstimate> {
    let n = symbols.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "jacobsen_estimate: need at least 3 bins, got {n}"
        )));
    }
    let mut peak = 0usize;
    let mut best = symbols[0].norm();
    for (i, s) in symbols.iter().enumerate().skip(1) {
        let v = s.norm();
        if v > best {
            best = v;
            peak = i;
        }
    }
    let prev = symbols[(peak + n - 1) % n];
    let next = symbols[(peak + 1) % n];
    let center = symbols[peak];
    let den = 2.0 * center - next - prev;
    let correction = if den.norm() < 1e-15 {
        0.0
    } else {
        ((prev - next) / den).re
    };
    let spatial_freq = (TAU * (peak as f64 + correction) / n as f64).rem_euclid(TAU);
    Ok(AodEstimate {
        spatial_freq: if spatial_freq >= TAU {
            0.0
        } else {
            spatial_freq
        },
        peak_bin: peak,
        correction,
        peak_magnitude: best,
    })
}

/// Element phases of the BS steering column for an estimated spatial
/// frequency: entry n carries Q(n * psi_hat).
pub fn design_abf_from_aod(psi_hat: f64, n_bs: usize, bits: PhaseResolution) -> Vec<f64> {
    (0..n_bs)
        .map(|i| quantize_phase(psi_hat * i as f64, bits))
        .collect()
}

/// Exhaustive beamsteering-codebook search for the UE combiner. The
/// codebook holds the N_UE steering vectors at spatial frequencies
/// 2*pi*i/N_UE; both the candidate and the BS column are evaluated through
/// the user's frozen error profile. Returns the ideal phases of the best
/// candidate and its codebook index.
pub fn ue_combiner_search(
    h_k: &CMat,
    f_col_impaired: &[C64],
    bits_ue: PhaseResolution,
    ue_profile: &PhaseErrorProfile,
) -> (Vec<f64>, usize) {
    let n_ue = h_k.rows();
    let hf = h_k.mul_vec(f_col_impaired);
    let scale = 1.0 / (n_ue as f64).sqrt();
    let mut best = (Vec::new(), 0usize);
    let mut best_metric = f64::NEG_INFINITY;
    for i in 0..n_ue {
        let psi = TAU * i as f64 / n_ue as f64;
        let phases: Vec<f64> = (0..n_ue)
            .map(|n| quantize_phase(psi * n as f64, bits_ue))
            .collect();
        let metric = (0..n_ue)
            .map(|n| {
                let w = C64::from_polar(scale, phases[n]) * ue_profile.factor(n, 0);
                w.conj() * hf[n]
            })
            .sum::<C64>()
            .norm();
        if metric > best_metric {
            best_metric = metric;
            best = (phases, i);
        }
    }
    best
}

/// Estimate the distorted equivalent channel from orthogonal sqrt(rho)
/// pilots: the estimate equals the impaired equivalent channel plus
/// additive noise of per-entry variance sigma_z^2 ||w_E||^2 / rho.
pub fn estimate_heq<R: Rng>(
    h_eq_impaired: &CMat,
    combiners_impaired: &[Vec<C64>],
    rho: f64,
    sigma_z2: f64,
    rng: &mut R,
) -> CMat {
    assert_eq!(combiners_impaired.len(), h_eq_impaired.rows());
    CMat::from_fn(h_eq_impaired.rows(), h_eq_impaired.cols(), |r, c| {
        let wnorm2: f64 = combiners_impaired[r].iter().map(|w| w.norm_sqr()).sum();
        let sd = (sigma_z2 * wnorm2 / rho).sqrt();
        h_eq_impaired.at(r, c) + complex_gaussian(rng) * sd
    })
}

/// Everything one run of the estimation pipeline produced.
#[derive(Debug, Clone)]
pub struct Algorithm1Output {
    pub beamformer: HybridBeamformer,
    /// Per-user spatial-frequency estimates (all K users).
    pub aod_estimates: Vec<AodEstimate>,
    pub estimated_heq: CMat,
    /// Residual interference power per kept user under the designed
    /// precoder: ||row_k(H_eq_E F_BB) - e_k||^2.
    pub per_user_interference: Vec<f64>,
    /// Pilot slots consumed: P*K + N_UE + K_I.
    pub training_slots: usize,
}

fn combiner_entries(phases: &[f64]) -> Vec<C64> {
    let scale = 1.0 / (phases.len() as f64).sqrt();
    phases.iter().map(|&p| C64::from_polar(scale, p)).collect()
}

fn impaired_combiner(ideal: &[C64], profile: &PhaseErrorProfile) -> Vec<C64> {
    ideal
        .iter()
        .enumerate()
        .map(|(n, w)| w * profile.factor(n, 0))
        .collect()
}

/// Residual interference rows ||row_k(H_E F) - e_k||^2.
pub(crate) fn residual_interference(h_e: &CMat, f_bb: &CMat) -> Vec<f64> {
    let m = h_e.matmul(f_bb);
    (0..m.rows())
        .map(|r| {
            (0..m.cols())
                .map(|c| {
                    let want = if r == c { C64::ONE } else { C64::ZERO };
                    (m.at(r, c) - want).norm_sqr()
                })
                .sum()
        })
        .collect()
}

/// Run the full pipeline for one coherence block. The same impairment
/// draws distort training and the data transmission the returned
/// beamformer will serve, which is what makes the stage-3 estimate
/// meaningful.
pub fn run_algorithm1_trial<R1: Rng, R2: Rng>(
    cfg: &ScenarioConfig,
    channel: &ChannelRealization,
    rho: f64,
    sigma_z2: f64,
    rng_impair: &mut R1,
    rng_noise: &mut R2,
) -> Result<Algorithm1Output> {
    let n_bs = cfg.n_bs;
    let n_ue = cfg.n_ue;
    let k = cfg.k;

    // Stage 1: pilot broadcast and per-user interpolation.
    let pilot = pilot_matrix(n_bs, k, cfg.pilot_cycles, cfg.pilot_variant)?;
    let (pilot_impaired, _) =
        apply_impairments(&pilot, cfg.sigma_delta, cfg.sigma_alpha, rng_impair);
    let bs_profile =
        crate::rf::draw_error_profile(n_bs, k, cfg.sigma_delta, cfg.sigma_alpha, rng_impair);
    let ue_profiles: Vec<PhaseErrorProfile> = (0..k)
        .map(|_| {
            crate::rf::draw_error_profile(n_ue, 1, cfg.sigma_delta, cfg.sigma_alpha, rng_impair)
        })
        .collect();

    let mut estimates = Vec::with_capacity(k);
    for h_k in &channel.matrices {
        let mut obs = simulate_stage1(h_k, &pilot_impaired, rho, sigma_z2, rng_noise);
        if cfg.mean_removal {
            let mean = obs.symbols.iter().sum::<C64>() / obs.symbols.len() as f64;
            for s in &mut obs.symbols {
                *s -= mean;
            }
        }
        estimates.push(jacobsen_estimate(&obs.symbols)?);
    }

    // Stage 2: scheduling on the estimates, then steering columns.
    let psi: Vec<f64> = estimates.iter().map(|e| e.spatial_freq).collect();
    let strength: Vec<f64> = estimates.iter().map(|e| e.peak_magnitude).collect();
    let kept = schedule_users(&psi, TAU / n_bs as f64, cfg.schedule, &strength);

    let columns: Vec<Option<Vec<f64>>> = (0..k)
        .map(|i| {
            kept.binary_search(&i)
                .ok()
                .map(|_| design_abf_from_aod(psi[i], n_bs, cfg.phase_bits_bs))
        })
        .collect();
    let f_rf_ideal = AnalogMatrix::from_phase_columns(n_bs, &columns);
    let f_rf_impaired = apply_error_profile(&f_rf_ideal, &bs_profile);

    // Stage 2b: UE combiner search against the distorted BS column.
    let mut combiners_ideal = Vec::with_capacity(k);
    let mut combiners_impaired = Vec::with_capacity(k);
    for (i, profile) in ue_profiles.iter().enumerate() {
        let phases = if kept.binary_search(&i).is_ok() {
            let (phases, _) = ue_combiner_search(
                &channel.matrices[i],
                &f_rf_impaired.column(i),
                cfg.bits_ue(),
                profile,
            );
            phases
        } else {
            vec![0.0; n_ue]
        };
        let ideal = combiner_entries(&phases);
        let impaired = impaired_combiner(&ideal, profile);
        combiners_ideal.push(ideal);
        combiners_impaired.push(impaired);
    }

    // Stage 3: estimate the equivalent channel the hardware realizes.
    let eq = equivalent_channel(
        &combiners_ideal,
        &combiners_impaired,
        &channel.matrices,
        &f_rf_ideal,
        &f_rf_impaired,
        &kept,
    )?;
    let kept_combiners: Vec<Vec<C64>> = kept
        .iter()
        .map(|&i| combiners_impaired[i].clone())
        .collect();
    let estimated = estimate_heq(&eq.impaired, &kept_combiners, rho, sigma_z2, rng_noise);

    // Stage 4: zero-force the estimate.
    let f_bb = zf_precoder(&estimated)?;
    let eta = power_factor(&f_bb)?;
    let per_user_interference = residual_interference(&eq.impaired, &f_bb);
    let training_slots = cfg.pilot_cycles * k + n_ue + kept.len();

    Ok(Algorithm1Output {
        beamformer: HybridBeamformer {
            f_rf_ideal,
            f_rf_impaired,
            combiners_ideal,
            combiners_impaired,
            f_bb,
            eta,
            non_silent: kept,
        },
        aod_estimates: estimates,
        estimated_heq: estimated,
        per_user_interference,
        training_slots,
    })
}

/// Convenience wrapper: Monte-Carlo sum rate of the estimation pipeline at
/// one SNR point plus the beamformer of the first trial.
pub fn run_algorithm1(
    cfg: &ScenarioConfig,
    snr_db: f64,
    trials: usize,
) -> Result<(HybridBeamformer, RateResult)> {
    let mut cfg = cfg.clone();
    cfg.method = Method::Algorithm1;
    cfg.validate()?;
    let result = crate::rate::sum_rate_error_mc(&cfg, snr_db, trials, 0)?;
    let rho = crate::trial::snr_to_linear(snr_db);
    let mut rng_ch = substream(cfg.seed, 0, StreamRole::Channel);
    let mut rng_imp = substream(cfg.seed, 0, StreamRole::Impairment);
    let mut rng_noise = substream(cfg.seed, 0, StreamRole::Noise);
    let channel = draw_channel(&cfg, &mut rng_ch)?;
    let out = run_algorithm1_trial(&cfg, &channel, rho, 1.0, &mut rng_imp, &mut rng_noise)?;
    Ok((out.beamformer, result))
}

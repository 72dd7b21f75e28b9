//! Per-trial simulation pipeline shared by the Monte-Carlo drivers.
//!
//! One trial is one coherence block: a channel draw, one impairment draw
//! for every analog network touched in the block, beamformer design per
//! the scenario's method, and the resulting sum-rate sample.

use std::f64::consts::TAU;

use rand::Rng;

use crate::beamforming::{
    design_svd_abf, equivalent_channel, power_factor, rzf_precoder, schedule_users, zf_precoder,
    HybridBeamformer, SchedulePolicy,
};
use crate::config::{Method, NoiseConvention, Precoder, ScenarioConfig};
use crate::error::Result;
use crate::estimation::{
    design_abf_from_aod, estimate_heq, residual_interference, run_algorithm1_trial,
    ue_combiner_search,
};
use crate::geometry::{draw_channel, spatial_frequency, ChannelRealization};
use crate::linalg::{CMat, C64};
use crate::rate::{interference_sample, sum_rate_samples};
use crate::rf::{apply_error_profile, draw_error_profile, AnalogMatrix, PhaseErrorProfile};
use crate::rng::{substream, StreamRole};

/// Transmit SNR in dB to the linear power ratio rho / sigma_z^2 (noise
/// power is normalized to 1).
pub fn snr_to_linear(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 10.0)
}

/// What one trial of one method produced.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub sum_rate: f64,
    pub k_i: usize,
    pub eta: f64,
    /// Residual interference power per kept user (empty for the
    /// perfect-hardware method).
    pub interference: Vec<f64>,
    /// Training slots consumed, when the method trains.
    pub training_slots: Option<usize>,
}

fn combiner_from_phases(phases: &[f64]) -> Vec<C64> {
    let scale = 1.0 / (phases.len() as f64).sqrt();
    phases.iter().map(|&p| C64::from_polar(scale, p)).collect()
}

fn apply_profile_to_combiner(ideal: &[C64], profile: &PhaseErrorProfile) -> Vec<C64> {
    ideal
        .iter()
        .enumerate()
        .map(|(n, w)| w * profile.factor(n, 0))
        .collect()
}

fn noise_variances(
    convention: NoiseConvention,
    combiners: &[Vec<C64>],
    kept: &[usize],
    sigma_z2: f64,
) -> Vec<f64> {
    match convention {
        NoiseConvention::Fixed => vec![sigma_z2; kept.len()],
        NoiseConvention::ImpairedCombiner => kept
            .iter()
            .map(|&i| sigma_z2 * combiners[i].iter().map(|w| w.norm_sqr()).sum::<f64>())
            .collect(),
    }
}

fn digital_precoder(cfg: &ScenarioConfig, h_eq: &CMat, rho: f64, sigma_z2: f64) -> Result<CMat> {
    match cfg.precoder {
        Precoder::Zf => zf_precoder(h_eq),
        Precoder::Rzf => rzf_precoder(h_eq, rho, sigma_z2, h_eq.rows()),
    }
}

/// SVD-designed hybrid beamforming, with or without hardware impairments.
/// The digital precoder always comes from the ideal equivalent channel;
/// under impairments the mismatch shows up as residual interference.
fn run_svd_trial<R: Rng>(
    cfg: &ScenarioConfig,
    channel: &ChannelRealization,
    rho: f64,
    sigma_z2: f64,
    rng_impair: &mut R,
) -> Result<TrialRecord> {
    let impaired = cfg.method == Method::SvdImpaired;
    let designs: Vec<_> = channel
        .matrices
        .iter()
        .map(|h| design_svd_abf(h, cfg.phase_bits_bs, cfg.bits_ue()))
        .collect::<Result<_>>()?;

    // Beam separation lives in spatial-frequency space: mirror angles
    // (cos phi1 = cos phi2) steer the same ULA beam and must collide.
    let angles: Vec<f64> = channel
        .paths
        .users
        .iter()
        .map(|u| spatial_frequency(u.aod_los))
        .collect();
    let strength: Vec<f64> = designs.iter().map(|d| d.top_singular_value).collect();
    let kept = schedule_users(&angles, TAU / cfg.n_bs as f64, cfg.schedule, &strength);

    let columns: Vec<Option<Vec<f64>>> = (0..cfg.k)
        .map(|i| {
            kept.binary_search(&i)
                .ok()
                .map(|_| designs[i].bs_phases.clone())
        })
        .collect();
    let f_rf_ideal = AnalogMatrix::from_phase_columns(cfg.n_bs, &columns);
    let combiners_ideal: Vec<Vec<C64>> = designs
        .iter()
        .map(|d| combiner_from_phases(&d.ue_phases))
        .collect();

    let (f_rf_impaired, combiners_impaired) = if impaired {
        let bs_profile = draw_error_profile(
            cfg.n_bs,
            cfg.k,
            cfg.sigma_delta,
            cfg.sigma_alpha,
            rng_impair,
        );
        let f_e = apply_error_profile(&f_rf_ideal, &bs_profile);
        let w_e = combiners_ideal
            .iter()
            .map(|w| {
                let p =
                    draw_error_profile(cfg.n_ue, 1, cfg.sigma_delta, cfg.sigma_alpha, rng_impair);
                apply_profile_to_combiner(w, &p)
            })
            .collect();
        (f_e, w_e)
    } else {
        (f_rf_ideal.clone(), combiners_ideal.clone())
    };

    let eq = equivalent_channel(
        &combiners_ideal,
        &combiners_impaired,
        &channel.matrices,
        &f_rf_ideal,
        &f_rf_impaired,
        &kept,
    )?;
    let f_bb = digital_precoder(cfg, &eq.ideal, rho, sigma_z2)?;
    let eta = power_factor(&f_bb)?;

    let x: Vec<f64> = if impaired {
        (0..kept.len())
            .map(|r| interference_sample(&eq.delta, &f_bb, r))
            .collect()
    } else {
        vec![0.0; kept.len()]
    };
    let sigma_ue2 = noise_variances(cfg.noise_convention, &combiners_impaired, &kept, sigma_z2);
    let sum_rate = sum_rate_samples(eta, rho, &x, &sigma_ue2);
    Ok(TrialRecord {
        sum_rate,
        k_i: kept.len(),
        eta,
        interference: if impaired { x } else { Vec::new() },
        training_slots: None,
    })
}

/// Exhaustive beamsteering training at the BS: every user picks its best
/// codebook beam through the distorted hardware, colliding picks are
/// silenced, the UE searches its own codebook, and the digital precoder
/// zero-forces the estimated equivalent channel.
fn run_codebook_trial<R1: Rng, R2: Rng>(
    cfg: &ScenarioConfig,
    channel: &ChannelRealization,
    rho: f64,
    sigma_z2: f64,
    rng_impair: &mut R1,
    rng_noise: &mut R2,
) -> Result<TrialRecord> {
    let n_bs = cfg.n_bs;
    let n_ue = cfg.n_ue;
    let bs_profile = draw_error_profile(n_bs, cfg.k, cfg.sigma_delta, cfg.sigma_alpha, rng_impair);
    let ue_profiles: Vec<PhaseErrorProfile> = (0..cfg.k)
        .map(|_| draw_error_profile(n_ue, 1, cfg.sigma_delta, cfg.sigma_alpha, rng_impair))
        .collect();

    // Beam sweep: user k listens on its single omni element while its RF
    // chain's column realizes each candidate steering vector.
    let scale_bs = 1.0 / (n_bs as f64).sqrt();
    let mut picks = Vec::with_capacity(cfg.k);
    let mut pick_metric = Vec::with_capacity(cfg.k);
    for (k_idx, h) in channel.matrices.iter().enumerate() {
        let w_scale = 1.0 / (n_ue as f64).sqrt();
        let mut best = (0usize, f64::NEG_INFINITY);
        for cand in 0..n_bs {
            let psi = TAU * cand as f64 / n_bs as f64;
            let metric = (0..n_bs)
                .map(|n| {
                    let phase = crate::rf::quantize_phase(psi * n as f64, cfg.phase_bits_bs);
                    let f = C64::from_polar(scale_bs, phase) * bs_profile.factor(n, k_idx);
                    w_scale * h.at(0, n) * f
                })
                .sum::<C64>()
                .norm();
            if metric > best.1 {
                best = (cand, metric);
            }
        }
        picks.push(best.0);
        pick_metric.push(best.1);
    }

    // Users sharing a codebook beam are silenced except one.
    let mut kept: Vec<usize> = Vec::new();
    for i in 0..cfg.k {
        let winner = (0..cfg.k)
            .filter(|&j| picks[j] == picks[i])
            .min_by(|&a, &b| match cfg.schedule {
                SchedulePolicy::ClusterStrongest => pick_metric[b]
                    .partial_cmp(&pick_metric[a])
                    .unwrap()
                    .then(a.cmp(&b)),
                _ => a.cmp(&b),
            })
            .unwrap();
        if winner == i {
            kept.push(i);
        }
    }

    let columns: Vec<Option<Vec<f64>>> = (0..cfg.k)
        .map(|i| {
            kept.binary_search(&i).ok().map(|_| {
                design_abf_from_aod(TAU * picks[i] as f64 / n_bs as f64, n_bs, cfg.phase_bits_bs)
            })
        })
        .collect();
    let f_rf_ideal = AnalogMatrix::from_phase_columns(n_bs, &columns);
    let f_rf_impaired = apply_error_profile(&f_rf_ideal, &bs_profile);

    let mut combiners_ideal = Vec::with_capacity(cfg.k);
    let mut combiners_impaired = Vec::with_capacity(cfg.k);
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
        let ideal = combiner_from_phases(&phases);
        let impaired = apply_profile_to_combiner(&ideal, profile);
        combiners_ideal.push(ideal);
        combiners_impaired.push(impaired);
    }

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
    let f_bb = zf_precoder(&estimated)?;
    let eta = power_factor(&f_bb)?;
    let x = residual_interference(&eq.impaired, &f_bb);
    let sigma_ue2 = noise_variances(cfg.noise_convention, &combiners_impaired, &kept, sigma_z2);
    let sum_rate = sum_rate_samples(eta, rho, &x, &sigma_ue2);
    Ok(TrialRecord {
        sum_rate,
        k_i: kept.len(),
        eta,
        interference: x,
        training_slots: Some(n_bs + n_ue),
    })
}

/// Run one trial of the scenario's method at the given SNR. `trial_id`
/// keys the RNG substreams; the global id must differ across SNR points.
pub fn run_trial(cfg: &ScenarioConfig, snr_db: f64, trial_id: u64) -> Result<TrialRecord> {
    let rho = snr_to_linear(snr_db);
    let sigma_z2 = 1.0;
    let mut rng_channel = substream(cfg.seed, trial_id, StreamRole::Channel);
    let mut rng_impair = substream(cfg.seed, trial_id, StreamRole::Impairment);
    let mut rng_noise = substream(cfg.seed, trial_id, StreamRole::Noise);
    let channel = draw_channel(cfg, &mut rng_channel)?;

    match cfg.method {
        Method::SvdPerfectPs | Method::SvdImpaired => {
            run_svd_trial(cfg, &channel, rho, sigma_z2, &mut rng_impair)
        }
        Method::CodebookBaseline => run_codebook_trial(
            cfg,
            &channel,
            rho,
            sigma_z2,
            &mut rng_impair,
            &mut rng_noise,
        ),
        Method::Algorithm1 => {
            let out = run_algorithm1_trial(
                cfg,
                &channel,
                rho,
                sigma_z2,
                &mut rng_impair,
                &mut rng_noise,
            )?;
            let kept = &out.beamformer.non_silent;
            let sigma_ue2 = noise_variances(
                cfg.noise_convention,
                &out.beamformer.combiners_impaired,
                kept,
                sigma_z2,
            );
            let sum_rate = sum_rate_samples(
                out.beamformer.eta,
                rho,
                &out.per_user_interference,
                &sigma_ue2,
            );
            Ok(TrialRecord {
                sum_rate,
                k_i: kept.len(),
                eta: out.beamformer.eta,
                interference: out.per_user_interference,
                training_slots: Some(out.training_slots),
            })
        }
    }
}

/// Rebuild the full hybrid beamformer of one SVD-method trial (used by
/// diagnostics and tests; `run_trial` only keeps the scalar outcome).
pub fn svd_beamformer(
    cfg: &ScenarioConfig,
    channel: &ChannelRealization,
    rho: f64,
    sigma_z2: f64,
    trial_id: u64,
) -> Result<HybridBeamformer> {
    let mut rng_impair = substream(cfg.seed, trial_id, StreamRole::Impairment);
    let impaired = cfg.method == Method::SvdImpaired;
    let designs: Vec<_> = channel
        .matrices
        .iter()
        .map(|h| design_svd_abf(h, cfg.phase_bits_bs, cfg.bits_ue()))
        .collect::<Result<_>>()?;
    let angles: Vec<f64> = channel
        .paths
        .users
        .iter()
        .map(|u| spatial_frequency(u.aod_los))
        .collect();
    let strength: Vec<f64> = designs.iter().map(|d| d.top_singular_value).collect();
    let kept = schedule_users(&angles, TAU / cfg.n_bs as f64, cfg.schedule, &strength);
    let columns: Vec<Option<Vec<f64>>> = (0..cfg.k)
        .map(|i| {
            kept.binary_search(&i)
                .ok()
                .map(|_| designs[i].bs_phases.clone())
        })
        .collect();
    let f_rf_ideal = AnalogMatrix::from_phase_columns(cfg.n_bs, &columns);
    let combiners_ideal: Vec<Vec<C64>> = designs
        .iter()
        .map(|d| combiner_from_phases(&d.ue_phases))
        .collect();
    let (f_rf_impaired, combiners_impaired) = if impaired {
        let bs_profile = draw_error_profile(
            cfg.n_bs,
            cfg.k,
            cfg.sigma_delta,
            cfg.sigma_alpha,
            &mut rng_impair,
        );
        let f_e = apply_error_profile(&f_rf_ideal, &bs_profile);
        let w_e = combiners_ideal
            .iter()
            .map(|w| {
                let p = draw_error_profile(
                    cfg.n_ue,
                    1,
                    cfg.sigma_delta,
                    cfg.sigma_alpha,
                    &mut rng_impair,
                );
                apply_profile_to_combiner(w, &p)
            })
            .collect();
        (f_e, w_e)
    } else {
        (f_rf_ideal.clone(), combiners_ideal.clone())
    };
    let eq = equivalent_channel(
        &combiners_ideal,
        &combiners_impaired,
        &channel.matrices,
        &f_rf_ideal,
        &f_rf_impaired,
        &kept,
    )?;
    let f_bb = digital_precoder(cfg, &eq.ideal, rho, sigma_z2)?;
    let eta = power_factor(&f_bb)?;
    Ok(HybridBeamformer {
        f_rf_ideal,
        f_rf_impaired,
        combiners_ideal,
        combiners_impaired,
        f_bb,
        eta,
        non_silent: kept,
    })
}

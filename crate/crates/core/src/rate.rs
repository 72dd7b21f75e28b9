//! SINR and sum-rate computation: exact Monte-Carlo, the Jensen-style
//! closed-form approximation, the interference expectation (exact and
//! simplified), rate loss, the high-SNR ceiling, and non-silent-user
//! statistics.

use std::collections::BTreeMap;

use rand::Rng;

use crate::beamforming::{schedule_users, SchedulePolicy};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::stats::{mean_ci95, KahanSum};
use crate::trial::run_trial;

/// Sum rate with ideal phase shifters: K_I log2(1 + eta^2 rho / sigma^2).
pub fn sum_rate_perfect(eta: f64, rho: f64, sigma_ue2: f64, k_i: usize) -> f64 {
    k_i as f64 * (1.0 + eta * eta * rho / sigma_ue2).log2()
}

/// Residual multiuser interference power of one user: the quadratic form
/// x = delta_row F_BB F_BB^H delta_row^H, evaluated as ||delta_row F_BB||^2.
pub fn interference_sample(delta: &CMat, f_bb: &CMat, user: usize) -> f64 {
    assert_eq!(delta.cols(), f_bb.rows(), "interference_sample shapes");
    let row = delta.row(user);
    (0..f_bb.cols())
        .map(|c| {
            row.iter()
                .enumerate()
                .map(|(r, d)| d * f_bb.at(r, c))
                .sum::<crate::linalg::C64>()
                .norm_sqr()
        })
        .sum()
}

/// Sum rate of one error draw given the per-user interference powers and
/// noise variances.
pub fn sum_rate_samples(eta: f64, rho: f64, x: &[f64], sigma_ue2: &[f64]) -> f64 {
    let e2r = eta * eta * rho;
    x.iter()
        .zip(sigma_ue2)
        .map(|(&xi, &s2)| (1.0 + e2r / (e2r * xi + s2)).log2())
        .sum()
}

/// Closed-form second moments of the impairment couplings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpairmentMoments {
    /// E|eps_UE|^2: combiner-side self coupling.
    pub eps_ue_sq: f64,
    /// E|eps_BS|^2: precoder-side self coupling.
    pub eps_bs_sq: f64,
    /// E[Re(eps_UE eps_BS)]: cross term of the two sides.
    pub cross_re: f64,
    /// E|xi|^2: leakage onto an orthogonal steering direction.
    pub xi_sq: f64,
}

/// The four closed-form moments as functions of the error variances and
/// array sizes.
pub fn impairment_moments(
    sigma_delta: f64,
    sigma_alpha: f64,
    n_bs: usize,
    n_ue: usize,
) -> ImpairmentMoments {
    let e = (-sigma_delta * sigma_delta).exp();
    let c = 1.0 + sigma_alpha * sigma_alpha - e;
    ImpairmentMoments {
        eps_ue_sq: c / n_ue as f64 + e,
        eps_bs_sq: c / n_bs as f64 + e,
        cross_re: e,
        xi_sq: c / n_bs as f64,
    }
}

/// Which expression evaluates E[x].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterferenceForm {
    /// Product form assembled from the exact moments.
    Exact,
    /// Small-phase-variance simplification (the bound used for the
    /// rate-loss and ceiling expressions).
    Simplified,
}

/// Expected residual interference power per user under the orthogonal-user
/// model.
pub fn expected_interference(
    sigma_delta: f64,
    sigma_alpha: f64,
    n_bs: usize,
    n_ue: usize,
    k_i: usize,
    form: InterferenceForm,
) -> f64 {
    let sd2 = sigma_delta * sigma_delta;
    let sa2 = sigma_alpha * sigma_alpha;
    let e = (-sd2).exp();
    match form {
        InterferenceForm::Exact => {
            let c = 1.0 + sa2 - e;
            (k_i as f64 * c / n_bs as f64 + e) * (c / n_ue as f64 + e) - 2.0 * e + 1.0
        }
        InterferenceForm::Simplified => {
            sd2 * sd2
                + k_i as f64 * (sd2 + sa2) * (sd2 + sa2) / (n_bs * n_ue) as f64
                + (sd2 + sa2) * e * (k_i as f64 / n_bs as f64 + 1.0 / n_ue as f64)
        }
    }
}

/// Sum-rate approximation with the interference replaced by its mean:
/// K_I log2(1 + eta^2 rho / (eta^2 rho Ex + sigma^2)).
pub fn sum_rate_error_approx(eta: f64, rho: f64, sigma_ue2: f64, k_i: usize, ex: f64) -> f64 {
    let e2r = eta * eta * rho;
    k_i as f64 * (1.0 + e2r / (e2r * ex + sigma_ue2)).log2()
}

/// Sum-rate loss implied by a mean interference power Ex:
/// K_I log2(1 + eta^2 rho Ex / sigma^2).
pub fn rate_loss(eta: f64, rho: f64, sigma_ue2: f64, k_i: usize, ex: f64) -> f64 {
    k_i as f64 * (1.0 + eta * eta * rho * ex / sigma_ue2).log2()
}

/// High-SNR sum-rate ceiling: sum over K_I of
/// p(K_I) K_I log2(1 + 1/LB(K_I)).
pub fn ceiling(p: &BTreeMap<usize, f64>, lb: impl Fn(usize) -> f64) -> Result<f64> {
    let total: f64 = p.values().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "ceiling: probabilities sum to {total}, expected 1"
        )));
    }
    Ok(p.iter()
        .map(|(&k, &prob)| {
            let bound = lb(k);
            if bound <= 0.0 {
                f64::INFINITY
            } else {
                prob * k as f64 * (1.0 + 1.0 / bound).log2()
            }
        })
        .sum())
}

/// Empirical distribution of the non-silent user count.
#[derive(Debug, Clone)]
pub struct PkiEstimate {
    pub probs: BTreeMap<usize, f64>,
    pub mean: f64,
}

/// Estimate p(K_I) by scheduling i.i.d. uniform angles.
pub fn estimate_pki<R: Rng>(
    n_bs: usize,
    k: usize,
    draws: usize,
    policy: SchedulePolicy,
    rng: &mut R,
) -> Result<PkiEstimate> {
    if draws == 0 {
        return Err(Error::InvalidArgument(
            "estimate_pki: need at least one draw".into(),
        ));
    }
    let threshold = std::f64::consts::TAU / n_bs as f64;
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    let mut sum = KahanSum::default();
    for _ in 0..draws {
        let angles: Vec<f64> = (0..k)
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        let k_i = schedule_users(&angles, threshold, policy, &[]).len();
        *hist.entry(k_i).or_insert(0) += 1;
        sum.add(k_i as f64);
    }
    let probs = hist
        .into_iter()
        .map(|(k_i, n)| (k_i, n as f64 / draws as f64))
        .collect();
    Ok(PkiEstimate {
        probs,
        mean: sum.value() / draws as f64,
    })
}

/// Per-SNR-point Monte-Carlo statistics of one method.
#[derive(Debug, Clone)]
pub struct RateResult {
    pub method: String,
    pub snr_db: f64,
    pub mean: f64,
    pub ci95: f64,
    pub trials: usize,
    pub ki_histogram: BTreeMap<usize, usize>,
}

/// Monte-Carlo sum rate of a scenario's method at one SNR point,
/// averaging over channel, impairment, and noise draws. `trial_offset`
/// keys the RNG substreams so distinct SNR points use independent draws.
pub fn sum_rate_error_mc(
    cfg: &ScenarioConfig,
    snr_db: f64,
    trials: usize,
    trial_offset: u64,
) -> Result<RateResult> {
    let mut rates = Vec::with_capacity(trials);
    let mut hist = BTreeMap::new();
    for t in 0..trials {
        let rec = run_trial(cfg, snr_db, trial_offset + t as u64)?;
        rates.push(rec.sum_rate);
        *hist.entry(rec.k_i).or_insert(0) += 1;
    }
    let (mean, ci95) = mean_ci95(&rates);
    Ok(RateResult {
        method: cfg.method.as_str().to_string(),
        snr_db,
        mean,
        ci95,
        trials,
        ki_histogram: hist,
    })
}

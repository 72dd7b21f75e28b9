//! Scenario orchestration: deterministic parallel Monte-Carlo, the figure
//! presets behind the reference experiments, and CSV emission.
//!
//! Trials are keyed by (seed, global trial index, stream role), so a run
//! is bit-reproducible regardless of worker count: the parallel map
//! collects per-trial records in index order and all aggregation is
//! Kahan-compensated over that fixed order.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::config::{Method, Precoder, ScenarioConfig};
use crate::error::{Error, Result};
use crate::rate::{expected_interference, sum_rate_error_approx, InterferenceForm};
use crate::rf::{PhaseResolution, PilotVariant};
use crate::stats::{mean_ci95, KahanSum};
use crate::trial::{run_trial, snr_to_linear, TrialRecord};

/// One CSV record: a single metric of one method at one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scenario: String,
    pub method: String,
    pub snr_db: f64,
    pub sigma_delta: f64,
    pub sigma_alpha: f64,
    pub k: usize,
    pub n_bs: usize,
    pub metric: String,
    pub value: f64,
    pub ci95: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Run every SNR point of a scenario on the current rayon pool.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Vec<ResultRow>> {
    run_scenario_with_threads(cfg, None)
}

/// Run a scenario on a bounded worker pool (`None` uses the rayon
/// default). Output is independent of the thread count.
pub fn run_scenario_with_threads(
    cfg: &ScenarioConfig,
    threads: Option<usize>,
) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;

    let trials = cfg.trials;
    let points = cfg.snr_db.len();
    let records: Vec<Vec<TrialRecord>> = pool.install(|| {
        (0..points)
            .map(|p| {
                (0..trials)
                    .into_par_iter()
                    .map(|t| run_trial(cfg, cfg.snr_db[p], (p * trials + t) as u64))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut rows = Vec::new();
    let row = |snr: f64, metric: &str, value: f64, ci: f64, n: usize| ResultRow {
        scenario: cfg.id.clone(),
        method: cfg.method.as_str().to_string(),
        snr_db: snr,
        sigma_delta: cfg.sigma_delta,
        sigma_alpha: cfg.sigma_alpha,
        k: cfg.k,
        n_bs: cfg.n_bs,
        metric: metric.to_string(),
        value,
        ci95: ci,
        trials: n,
        seed: cfg.seed,
    };

    for (p, recs) in records.iter().enumerate() {
        let snr = cfg.snr_db[p];
        let rates: Vec<f64> = recs.iter().map(|r| r.sum_rate).collect();
        let (mean, ci) = mean_ci95(&rates);
        rows.push(row(snr, "sum_rate", mean, ci, trials));

        if cfg.method == Method::SvdImpaired {
            // Empirical mean interference and the two closed-form views of
            // the same SNR point.
            let mut xs = KahanSum::default();
            let mut xn = 0usize;
            let mut x_samples = Vec::new();
            for r in recs {
                for &x in &r.interference {
                    xs.add(x);
                    xn += 1;
                    x_samples.push(x);
                }
            }
            if xn > 0 {
                let (x_mean, x_ci) = mean_ci95(&x_samples);
                rows.push(row(snr, "interference_mean", x_mean, x_ci, xn));

                let rho = snr_to_linear(snr);
                let approx: Vec<f64> = recs
                    .iter()
                    .map(|r| sum_rate_error_approx(r.eta, rho, 1.0, r.k_i, xs.value() / xn as f64))
                    .collect();
                let (a_mean, a_ci) = mean_ci95(&approx);
                rows.push(row(snr, "sum_rate_approx", a_mean, a_ci, trials));

                let bound: Vec<f64> = recs
                    .iter()
                    .map(|r| {
                        let lb = expected_interference(
                            cfg.sigma_delta,
                            cfg.sigma_alpha,
                            cfg.n_bs,
                            cfg.n_ue,
                            r.k_i,
                            InterferenceForm::Simplified,
                        );
                        sum_rate_error_approx(r.eta, rho, 1.0, r.k_i, lb)
                    })
                    .collect();
                let (b_mean, b_ci) = mean_ci95(&bound);
                rows.push(row(snr, "sum_rate_bound", b_mean, b_ci, trials));
            }
        }
    }

    // SNR-independent rows are tagged with an infinite SNR.
    match cfg.method {
        Method::SvdImpaired => {
            let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
            for recs in &records {
                for r in recs {
                    *hist.entry(r.k_i).or_insert(0) += 1;
                }
            }
            let total: usize = hist.values().sum();
            let probs: BTreeMap<usize, f64> = hist
                .iter()
                .map(|(&k_i, &n)| (k_i, n as f64 / total as f64))
                .collect();
            let lb = |k_i: usize| {
                expected_interference(
                    cfg.sigma_delta,
                    cfg.sigma_alpha,
                    cfg.n_bs,
                    cfg.n_ue,
                    k_i,
                    InterferenceForm::Simplified,
                )
            };
            let ceiling = crate::rate::ceiling(&probs, lb)?;
            rows.push(row(f64::INFINITY, "sum_rate_ceiling", ceiling, 0.0, total));
        }
        Method::Algorithm1 | Method::CodebookBaseline => {
            let slots: Vec<f64> = records
                .iter()
                .flatten()
                .filter_map(|r| r.training_slots.map(|s| s as f64))
                .collect();
            let (mean, ci) = mean_ci95(&slots);
            rows.push(row(f64::INFINITY, "training_slots", mean, ci, slots.len()));
        }
        Method::SvdPerfectPs => {}
    }

    Ok(rows)
}

fn preset_base(id: &str, method: Method) -> ScenarioConfig {
    ScenarioConfig {
        id: id.to_string(),
        n_bs: 128,
        n_ue: 4,
        k: 10,
        phase_bits_bs: PhaseResolution::Bits(3),
        phase_bits_ue: None,
        rician_factor: 30.0,
        los_only: false,
        paths: 4,
        sigma_delta: 0.1,
        sigma_alpha: 0.1,
        snr_db: Vec::new(),
        trials: 500,
        pilot_cycles: 1,
        pilot_variant: PilotVariant::OnesPadded,
        method,
        precoder: Precoder::Zf,
        seed: 0x5EED,
        schedule: Default::default(),
        noise_convention: Default::default(),
        mean_removal: false,
    }
}

fn snr_grid(lo: i32, hi: i32, step: i32) -> Vec<f64> {
    (lo..=hi).step_by(step as usize).map(f64::from).collect()
}

/// Scenario lists reproducing the reference experiments. Presets pin the
/// parameter sets described with each figure; trial counts and SNR grids
/// not stated there are fixed here so runs stay reproducible.
pub fn figure_preset(name: &str) -> Result<Vec<ScenarioConfig>> {
    let mut out = Vec::new();
    match name {
        // Monte-Carlo sum rate under errors vs its mean-interference
        // approximation, two error magnitudes.
        "fig1" => {
            for sigma in [0.01, 0.1] {
                let mut c = preset_base(&format!("fig1-sigma-{sigma}"), Method::SvdImpaired);
                c.sigma_delta = sigma;
                c.sigma_alpha = sigma;
                c.snr_db = snr_grid(-10, 30, 5);
                out.push(c);
            }
        }
        // Sum rate vs SNR: perfect hardware, impaired ZF at two error
        // magnitudes, impaired RZF, plus bound/ceiling rows.
        "fig2" => {
            let grid = snr_grid(-10, 60, 5);
            let mut c = preset_base("fig2-perfect", Method::SvdPerfectPs);
            c.snr_db = grid.clone();
            out.push(c);
            for sigma in [0.01, 0.1] {
                let mut c = preset_base(&format!("fig2-zf-sigma-{sigma}"), Method::SvdImpaired);
                c.sigma_delta = sigma;
                c.sigma_alpha = sigma;
                c.snr_db = grid.clone();
                out.push(c);
            }
            let mut c = preset_base("fig2-rzf-sigma-0.1", Method::SvdImpaired);
            c.precoder = Precoder::Rzf;
            c.snr_db = grid;
            out.push(c);
        }
        // Sum rate vs user count at 20 dB.
        "fig3" => {
            for k in (4..=16).step_by(2) {
                let mut c = preset_base(&format!("fig3-perfect-k{k}"), Method::SvdPerfectPs);
                c.k = k;
                c.snr_db = vec![20.0];
                out.push(c);
                for sigma in [0.01, 0.1] {
                    let mut c = preset_base(
                        &format!("fig3-impaired-k{k}-sigma-{sigma}"),
                        Method::SvdImpaired,
                    );
                    c.k = k;
                    c.sigma_delta = sigma;
                    c.sigma_alpha = sigma;
                    c.snr_db = vec![20.0];
                    out.push(c);
                }
            }
        }
        // Array size / user count sweep with all four methods, sigma 0.01,
        // two paths. BS resolution tracks log2(N_BS), UE resolution
        // log2(N_UE).
        "fig4" => {
            for (k, n_bs) in [(16usize, 128usize), (16, 256), (32, 128)] {
                for method in [
                    Method::SvdPerfectPs,
                    Method::SvdImpaired,
                    Method::CodebookBaseline,
                    Method::Algorithm1,
                ] {
                    let mut c =
                        preset_base(&format!("fig4-{}-k{k}-nbs{n_bs}", method.as_str()), method);
                    c.k = k;
                    c.n_bs = n_bs;
                    c.paths = 2;
                    c.sigma_delta = 0.01;
                    c.sigma_alpha = 0.01;
                    c.phase_bits_bs = PhaseResolution::Bits(if n_bs == 256 { 8 } else { 7 });
                    c.phase_bits_ue = Some(PhaseResolution::Bits(2));
                    c.snr_db = snr_grid(0, 40, 5);
                    out.push(c);
                }
            }
        }
        // Ceiling removal: 16 users, two paths, both error magnitudes,
        // multi-cycle variants for the strong-error case.
        "fig5" => {
            let tune = |c: &mut ScenarioConfig| {
                c.k = 16;
                c.paths = 2;
                c.phase_bits_bs = PhaseResolution::Bits(7);
                c.phase_bits_ue = Some(PhaseResolution::Bits(2));
                c.snr_db = snr_grid(0, 40, 5);
            };
            let mut c = preset_base("fig5-perfect", Method::SvdPerfectPs);
            tune(&mut c);
            out.push(c);
            for sigma in [0.01, 0.1] {
                for method in [Method::SvdImpaired, Method::CodebookBaseline] {
                    let mut c =
                        preset_base(&format!("fig5-{}-sigma-{sigma}", method.as_str()), method);
                    tune(&mut c);
                    c.sigma_delta = sigma;
                    c.sigma_alpha = sigma;
                    out.push(c);
                }
            }
            let mut c = preset_base("fig5-algorithm1-sigma-0.01-p1", Method::Algorithm1);
            tune(&mut c);
            c.sigma_delta = 0.01;
            c.sigma_alpha = 0.01;
            out.push(c);
            for p in [1usize, 2, 8] {
                let mut c = preset_base(
                    &format!("fig5-algorithm1-sigma-0.1-p{p}"),
                    Method::Algorithm1,
                );
                tune(&mut c);
                c.pilot_cycles = p;
                out.push(c);
            }
        }
        // Rician-factor sweep at 15 dB for both path counts.
        "fig6" => {
            for l in [2usize, 4] {
                for v in [1.0, 2.0, 5.0, 10.0, 20.0, 30.0, 50.0, 100.0] {
                    let tune = |c: &mut ScenarioConfig| {
                        c.k = 16;
                        c.paths = l;
                        c.rician_factor = v;
                        c.phase_bits_bs = PhaseResolution::Bits(7);
                        c.phase_bits_ue = Some(PhaseResolution::Bits(2));
                        c.snr_db = vec![15.0];
                    };
                    let mut c = preset_base(
                        &format!("fig6-codebook-l{l}-v{v}"),
                        Method::CodebookBaseline,
                    );
                    tune(&mut c);
                    out.push(c);
                    for p in [1usize, 2, 8] {
                        let mut c = preset_base(
                            &format!("fig6-algorithm1-l{l}-v{v}-p{p}"),
                            Method::Algorithm1,
                        );
                        tune(&mut c);
                        c.pilot_cycles = p;
                        out.push(c);
                    }
                }
            }
        }
        other => {
            return Err(Error::Config(format!(
                "unknown figure preset {other:?} (expected fig1..fig6)"
            )))
        }
    }
    for c in &out {
        c.validate()?;
    }
    Ok(out)
}

/// Fixed-decimal formatting with six significant digits.
pub fn format_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0.000000".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    let scale = 10f64.powi(exp - 5);
    let rounded = (v / scale).round() * scale;
    // Rounding can push the magnitude into the next decade.
    let exp = rounded.abs().log10().floor() as i32;
    let decimals = (5 - exp).max(0) as usize;
    format!("{rounded:.decimals$}")
}

/// CSV header shared by every emitted file.
pub const CSV_HEADER: &str =
    "scenario,method,snr_db,sigma_delta,sigma_alpha,K,N_BS,metric,value,ci95,trials,seed";

/// Write rows as UTF-8 CSV with newline-terminated records.
pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    let mut text = String::with_capacity(64 * (rows.len() + 1));
    text.push_str(CSV_HEADER);
    text.push('\n');
    for r in rows {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.scenario,
            r.method,
            r.snr_db,
            r.sigma_delta,
            r.sigma_alpha,
            r.k,
            r.n_bs,
            r.metric,
            format_sig6(r.value),
            format_sig6(r.ci95),
            r.trials,
            r.seed
        ));
    }
    file.write_all(text.as_bytes()).map_err(io_err)?;
    Ok(())
}

//! Antenna array responses and Rician multiuser channel generation.
//!
//! Arrays are half-wavelength ULAs, so the per-element phase increment of
//! a steering vector at physical angle `phi` is the spatial frequency
//! `psi = pi * cos(phi)`. Angles are stored as physical angles; spatial
//! frequencies are computed on demand.

use std::f64::consts::{PI, TAU};

use rand::Rng;

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::rng::complex_gaussian;

/// Unit-norm ULA response vector at a physical angle.
#[derive(Debug, Clone)]
pub struct ArrayResponse {
    pub angle: f64,
    pub entries: Vec<C64>,
}

/// Spatial frequency of a half-wavelength ULA at `angle`, reduced to
/// [0, 2*pi).
pub fn spatial_frequency(angle: f64) -> f64 {
    let psi = (PI * angle.cos()).rem_euclid(TAU);
    if psi >= TAU {
        0.0
    } else {
        psi
    }
}

/// Physical angle in [0, pi] whose spatial frequency is `psi` (given in
/// [0, 2*pi)). Inverse of [`spatial_frequency`] on the front half-space.
pub fn angle_from_spatial_frequency(psi: f64) -> f64 {
    let x = if psi <= PI { psi } else { psi - TAU };
    (x / PI).acos()
}

/// N-element ULA response: entry n is exp(j*pi*cos(angle)*n) / sqrt(N).
pub fn array_response(angle: f64, n: usize) -> Result<ArrayResponse> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "array_response: element count must be at least 1".into(),
        ));
    }
    let psi = PI * angle.cos();
    let scale = 1.0 / (n as f64).sqrt();
    let entries = (0..n)
        .map(|i| C64::from_polar(scale, psi * i as f64))
        .collect();
    Ok(ArrayResponse { angle, entries })
}

/// One scattering path of one user.
#[derive(Debug, Clone)]
pub struct ScatterPath {
    pub aod: f64,
    pub aoa: f64,
    pub gain: C64,
}

/// LOS and scattering geometry of one user.
#[derive(Debug, Clone)]
pub struct UserPaths {
    pub aod_los: f64,
    pub aoa_los: f64,
    pub scatter: Vec<ScatterPath>,
}

/// Path geometry for every user in the cell.
#[derive(Debug, Clone)]
pub struct PathSet {
    pub users: Vec<UserPaths>,
}

/// Draw one coherence block of path geometry. The LOS departure
/// direction is uniform in spatial frequency (the beam coordinate the
/// scheduler and the non-silent-user statistics live in), which places
/// the physical LOS AOD on the front half-space [0, pi]; every other
/// angle is i.i.d. uniform on [0, 2*pi). Scattering gains are CN(0, 1)
/// and all draws are mutually independent.
pub fn draw_paths<R: Rng>(users: usize, paths_per_user: usize, rng: &mut R) -> PathSet {
    let users = (0..users)
        .map(|_| UserPaths {
            aod_los: angle_from_spatial_frequency(rng.random_range(0.0..TAU)),
            aoa_los: rng.random_range(0.0..TAU),
            scatter: (0..paths_per_user)
                .map(|_| ScatterPath {
                    aod: rng.random_range(0.0..TAU),
                    aoa: rng.random_range(0.0..TAU),
                    gain: complex_gaussian(rng),
                })
                .collect(),
        })
        .collect();
    PathSet { users }
}

/// One draw of all K user channels together with the paths behind them.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// Per-user N_UE x N_BS channel matrix.
    pub matrices: Vec<CMat>,
    pub paths: PathSet,
    pub rician_factor: f64,
    pub los_only: bool,
}

fn steering_outer(aoa: f64, aod: f64, n_ue: usize, n_bs: usize) -> Result<CMat> {
    let a_ue = array_response(aoa, n_ue)?;
    let a_bs = array_response(aod, n_bs)?;
    Ok(CMat::from_fn(n_ue, n_bs, |r, c| {
        a_ue.entries[r] * a_bs.entries[c].conj()
    }))
}

/// Assemble Rician channel matrices from explicit path geometry.
///
/// `los_only` realizes the pure-LOS limit as the exact weight pair (1, 0)
/// instead of a huge Rician factor.
pub fn channel_from_paths(
    paths: &PathSet,
    n_bs: usize,
    n_ue: usize,
    rician_factor: f64,
    los_only: bool,
) -> Result<ChannelRealization> {
    if n_bs == 0 || n_ue == 0 {
        return Err(Error::InvalidArgument(
            "channel_from_paths: array sizes must be at least 1".into(),
        ));
    }
    if !los_only {
        if rician_factor.is_nan() || rician_factor < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "channel_from_paths: Rician factor must be nonnegative, got {rician_factor}"
            )));
        }
        if paths.users.iter().any(|u| u.scatter.is_empty()) {
            return Err(Error::InvalidArgument(
                "channel_from_paths: zero scattering paths with a finite Rician factor leaves \
                 the NLOS term undefined"
                    .into(),
            ));
        }
    }
    let (w_los, w_nlos) = if los_only {
        (1.0, 0.0)
    } else {
        (
            (rician_factor / (rician_factor + 1.0)).sqrt(),
            (1.0 / (rician_factor + 1.0)).sqrt(),
        )
    };
    let amp = ((n_bs * n_ue) as f64).sqrt();

    let mut matrices = Vec::with_capacity(paths.users.len());
    for user in &paths.users {
        let mut h = steering_outer(user.aoa_los, user.aod_los, n_ue, n_bs)?
            .scale(C64::new(w_los * amp, 0.0));
        if w_nlos > 0.0 {
            let l = user.scatter.len() as f64;
            let s_amp = amp / l.sqrt();
            for p in &user.scatter {
                let outer = steering_outer(p.aoa, p.aod, n_ue, n_bs)?;
                h = h.add(&outer.scale(p.gain * C64::new(w_nlos * s_amp, 0.0)));
            }
        }
        matrices.push(h);
    }
    Ok(ChannelRealization {
        matrices,
        paths: paths.clone(),
        rician_factor,
        los_only,
    })
}

/// Draw the channels of one coherence block for a scenario.
pub fn draw_channel<R: Rng>(cfg: &ScenarioConfig, rng: &mut R) -> Result<ChannelRealization> {
    let paths = draw_paths(cfg.k, cfg.paths, rng);
    channel_from_paths(&paths, cfg.n_bs, cfg.n_ue, cfg.rician_factor, cfg.los_only)
}

//! WebAssembly bindings behind `www/index.html`.
//!
//! Each exported function returns a flat `Float64Array`; the layout is
//! given in its doc comment.

use subdiff_core::ctrw::{msd, simulate_particles, CtrwConfig};
use subdiff_core::fracpde::{mittag_leffler, modal_diffusion, modal_subdiffusion, PeriodicGrid, SubdiffusionParams};
use subdiff_core::harness::log_times;
use subdiff_core::model::{AgeProfile, HazardModel, InitialAgeData, JumpKernel, SpatialProfile};
use subdiff_core::Result;
use wasm_bindgen::prelude::*;

/// Initial density of the demo profiles.
const BUMP: SpatialProfile = SpatialProfile::Gaussian { center: std::f64::consts::PI, width: 0.4 };

fn js(e: subdiff_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

pub fn relaxation(alpha: f64, lambda: f64, t_max: f64, points: usize) -> Result<Vec<f64>> {
    (0..points)
        .map(|i| {
            let t = t_max * i as f64 / (points.max(2) - 1) as f64;
            mittag_leffler(alpha, -lambda * t.powf(alpha))
        })
        .collect()
}

pub fn profiles(alpha: f64, t: f64, cells: usize) -> Result<Vec<f64>> {
    let grid = PeriodicGrid::new(cells)?;
    let params = SubdiffusionParams { alpha, a_coef: 1.0 / 6.0, moment_factor: 0.5 };
    let mut out = grid.cell_averages(&BUMP);
    out.extend(modal_subdiffusion(&params, &BUMP, &grid, t)?);
    out.extend(modal_diffusion(params.effective(), &BUMP, &grid, t)?);
    Ok(out)
}

pub fn particle_msd(alpha: f64, epsilon: f64, particles: usize, seed: u64) -> Result<Vec<f64>> {
    let times = log_times((10.0, 1000.0), 9);
    let cfg = CtrwConfig {
        model: HazardModel::power_law(alpha)?,
        kernel: JumpKernel::triangular(epsilon)?,
        beta: 2.0 / alpha,
        particles,
        snapshot_times: times.clone(),
        initial: InitialAgeData::new(BUMP, AgeProfile::default()),
        seed,
        enforce_scaling: true,
    };
    let report = msd(&simulate_particles(&cfg)?, (10.0, 1000.0))?;
    let mut out = times;
    out.extend(report.msd);
    out.push(report.slope);
    Ok(out)
}

/// `E_α(-λ t^α)` at `points` equally spaced times on `[0, t_max]`.
#[wasm_bindgen(js_name = relaxationCurve)]
pub fn relaxation_curve(alpha: f64, lambda: f64, t_max: f64, points: usize) -> std::result::Result<Vec<f64>, JsError> {
    relaxation(alpha, lambda, t_max, points).map_err(js)
}

/// Cell averages on `[0, 2π)`: initial bump, fractional limit at `t`,
/// diffusion limit at `t`, each `cells` long.
#[wasm_bindgen(js_name = limitProfiles)]
pub fn limit_profiles(alpha: f64, t: f64, cells: usize) -> std::result::Result<Vec<f64>, JsError> {
    profiles(alpha, t, cells).map_err(js)
}

/// Nine log-spaced times in `[10, 1000]`, the nine MSD values, then the fitted slope.
#[wasm_bindgen(js_name = msdCurve)]
pub fn msd_curve(alpha: f64, epsilon: f64, particles: usize, seed: u64) -> std::result::Result<Vec<f64>, JsError> {
    particle_msd(alpha, epsilon, particles, seed).map_err(js)
}

//! Browser bindings for a few quick frontlab computations.
//!
//! Sizes are kept small so each call finishes in well under a second or two
//! in the browser.

use frontlab_core::evolution::{evolve, WindowPolicy};
use frontlab_core::grid::{step_profile, Field};
use frontlab_core::kernel::{make_kernel, Kernel, KernelFamily};
use frontlab_core::nonlinearity::make_default_model;
use frontlab_core::waves::{solve_wave, WaveKind, WaveOptions};
use frontlab_core::{Error, Result};
use wasm_bindgen::prelude::*;

const SPACING: f64 = 0.1;
/// Start of the saturating part of the reaction; `theta` must stay below it.
const THETA_TILDE: f64 = 0.8;

fn js_err(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

fn kernel(sigma: f64) -> Result<Kernel> {
    make_kernel(KernelFamily::Gaussian { sigma }, SPACING, 1e-10)
}

/// A travelling wave of the slowest admissible reaction.
#[wasm_bindgen]
pub struct Wave {
    speed: f64,
    x: Vec<f64>,
    phi: Vec<f64>,
}

#[wasm_bindgen]
impl Wave {
    #[wasm_bindgen(getter)]
    pub fn speed(&self) -> f64 {
        self.speed
    }

    #[wasm_bindgen(getter)]
    pub fn x(&self) -> Vec<f64> {
        self.x.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn phi(&self) -> Vec<f64> {
        self.phi.clone()
    }
}

/// Solves for the wave of `f_min` with ignition level `theta` and
/// reaction amplitude `a_min`, returning the profile on `[-15, 15]`.
pub fn solve_demo_wave(sigma: f64, theta: f64, a_min: f64) -> Result<Wave> {
    let k = kernel(sigma)?;
    let model = make_default_model(theta, THETA_TILDE, a_min, 2.0 * a_min, 1.0)?;
    let opts = WaveOptions {
        half_width: 500,
        max_horizon: 200.0,
        tolerance: 5e-3,
        residual_tol: 1e-2,
        tail_tol: 1.0,
        ..Default::default()
    };
    let w = solve_wave(&model.lower_envelope(), theta, WaveKind::Ignition, &k, &opts)?;
    let x: Vec<f64> = (-150..=150).map(|i| i as f64 * SPACING).collect();
    let phi = x.iter().map(|&x| w.phi(x)).collect();
    Ok(Wave { speed: w.speed, x, phi })
}

#[wasm_bindgen]
pub fn wave_profile(sigma: f64, theta: f64, a_min: f64) -> std::result::Result<Wave, JsError> {
    solve_demo_wave(sigma, theta, a_min).map_err(js_err)
}

/// Kappa-speeds `min_l (M(l) - 1 + kappa)/l` for each kappa.
pub fn kappa_speed_curve(sigma: f64, kappas: &[f64]) -> Result<Vec<f64>> {
    let k = kernel(sigma)?;
    kappas.iter().map(|&kappa| k.kappa_speed(kappa).map(|s| s.speed)).collect()
}

#[wasm_bindgen]
pub fn kappa_speeds(sigma: f64, kappas: Vec<f64>) -> std::result::Result<Vec<f64>, JsError> {
    kappa_speed_curve(sigma, &kappas).map_err(js_err)
}

/// Level crossings of a front started from a step under the time-modulated
/// reaction, sampled once per unit time.
#[wasm_bindgen]
pub struct FrontPaths {
    times: Vec<f64>,
    levels: Vec<f64>,
    /// Row-major, one row per level.
    positions: Vec<f64>,
    final_x: Vec<f64>,
    final_u: Vec<f64>,
}

#[wasm_bindgen]
impl FrontPaths {
    #[wasm_bindgen(getter)]
    pub fn times(&self) -> Vec<f64> {
        self.times.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn levels(&self) -> Vec<f64> {
        self.levels.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn positions(&self) -> Vec<f64> {
        self.positions.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn final_x(&self) -> Vec<f64> {
        self.final_x.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn final_u(&self) -> Vec<f64> {
        self.final_u.clone()
    }
}

pub fn run_demo_front(sigma: f64, theta: f64, omega: f64, horizon: f64) -> Result<FrontPaths> {
    if !(horizon > 0.0 && horizon <= 200.0) {
        return Err(Error::InvalidArgument(format!("horizon {horizon} must lie in (0, 200]")));
    }
    let k = kernel(sigma)?;
    let model = make_default_model(theta, THETA_TILDE, 1.0, 2.0, omega)?;
    let levels = vec![0.5 * theta, theta, 0.5 * (1.0 + theta)];
    let u0 = Field::centered(0.0, 300, SPACING, 0.0, step_profile(0.0))?.as_front();
    let dt = 0.05;
    let policy = WindowPolicy {
        track_level: theta,
        levels: levels.clone(),
        ..Default::default()
    };
    let traj = evolve(&u0, &model, &k, 0.0, horizon, dt, &policy)?;
    let times: Vec<f64> = (0..=horizon.floor() as usize).map(|t| t as f64).collect();
    let mut positions = Vec::with_capacity(times.len() * levels.len());
    for p in &traj.paths {
        positions.extend(times.iter().map(|&t| p.value_at(t).unwrap_or(f64::NAN)));
    }
    let last = traj.last();
    Ok(FrontPaths {
        times,
        levels,
        positions,
        final_x: (0..last.len()).map(|i| last.x(i)).collect(),
        final_u: last.values.clone(),
    })
}

#[wasm_bindgen]
pub fn front_paths(sigma: f64, theta: f64, omega: f64, horizon: f64) -> std::result::Result<FrontPaths, JsError> {
    run_demo_front(sigma, theta, omega, horizon).map_err(js_err)
}

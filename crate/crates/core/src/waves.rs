//! Travelling waves of the homogeneous equation `u_t = J * u - u + g(u)`,
//! computed by long-time evolution of a step-like datum.

use crate::error::{Error, Result};
use crate::evolution::{evolve, WindowPolicy};
use crate::grid::{Closure, Field};
use crate::kernel::Kernel;
use crate::nonlinearity::Reaction;
use crate::stats::linear_fit;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveKind {
    Ignition,
    Bistable,
}

/// Controls for [`solve_wave`].
#[derive(Debug, Clone, PartialEq)]
pub struct WaveOptions {
    /// Relative change of consecutive windowed speeds accepted as stabilised.
    pub tolerance: f64,
    /// Length of a speed-measurement window.
    pub window: f64,
    pub max_horizon: f64,
    /// Cells on each side of the front.
    pub half_width: usize,
    /// Bound on `sup |J * phi - phi + c phi' + g(phi)|`.
    pub residual_tol: f64,
    /// Bound on the largest log deviation of the tail fits.
    pub tail_tol: f64,
    /// Time step; defaults to `min(0.05, dt_max)`.
    pub dt: Option<f64>,
    /// Initial front position.
    pub start: f64,
}

impl Default for WaveOptions {
    fn default() -> Self {
        WaveOptions {
            tolerance: 1e-3,
            window: 25.0,
            max_horizon: 500.0,
            half_width: 1400,
            residual_tol: 1e-4,
            tail_tol: 0.05,
            dt: None,
            start: 0.0,
        }
    }
}

/// Exponential tail fits `phi ~ A e^{-c_plus x}` and `1 - phi ~ e^{c_minus (x - x_min)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub c_plus: f64,
    /// `ln A` of the right tail.
    pub plus_intercept: f64,
    pub c_minus: f64,
    pub x_min: f64,
    /// Largest deviation of the log data from the fitted lines.
    pub plus_residual: f64,
    pub minus_residual: f64,
    pub plus_points: usize,
    pub minus_points: usize,
}

/// A wave `(c, phi)` with `phi(0) = theta`, sampled at `origin + i h`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveSolution {
    pub kind: WaveKind,
    pub speed: f64,
    pub theta: f64,
    pub origin: f64,
    pub spacing: f64,
    pub values: Vec<f64>,
    pub decay: DecayFit,
    pub residual: f64,
    /// Evolution time used.
    pub horizon: f64,
    /// Speeds over the successive measurement windows.
    pub window_speeds: Vec<f64>,
}

impl WaveSolution {
    pub fn x(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.spacing
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Piecewise-linear profile; 1 left of the grid and 0 right of it.
    pub fn phi(&self, x: f64) -> f64 {
        let s = (x - self.origin) / self.spacing;
        if s < 0.0 {
            return 1.0;
        }
        let i = s.floor() as usize;
        if i + 1 >= self.values.len() {
            return if i + 1 == self.values.len() && s == i as f64 {
                self.values[i]
            } else {
                0.0
            };
        }
        let w = s - i as f64;
        self.values[i] + w * (self.values[i + 1] - self.values[i])
    }

    /// Four-point cubic interpolation of the profile.
    pub fn phi_cubic(&self, x: f64) -> f64 {
        let s = (x - self.origin) / self.spacing;
        let n = self.values.len() as i64;
        let i = s.floor() as i64;
        let v = |k: i64| -> f64 {
            if k < 0 {
                1.0
            } else if k >= n {
                0.0
            } else {
                self.values[k as usize]
            }
        };
        if i < 1 || i + 2 >= n {
            return self.phi(x);
        }
        let w = s - i as f64;
        let (p0, p1, p2, p3) = (v(i - 1), v(i), v(i + 1), v(i + 2));
        let a = -p0 / 6.0 + p1 / 2.0 - p2 / 2.0 + p3 / 6.0;
        let b = p0 / 2.0 - p1 + p2 / 2.0;
        let c = -p0 / 3.0 - p1 / 2.0 + p2 - p3 / 6.0;
        ((a * w + b) * w + c) * w + p1
    }

    /// The profile translated by `shift` onto the lattice of `spacing`, as a front field.
    pub fn sample(&self, shift: f64, center: f64, half_width: usize, time: f64) -> Result<Field> {
        Ok(Field::centered(center, half_width, self.spacing, time, |x| self.phi(x - shift))?.as_front())
    }
}

/// Largest `|J * phi - phi + c phi' + g(phi)|` with fourth-order centred differences.
pub fn profile_residual(
    values: &[f64],
    spacing: f64,
    kernel: &Kernel,
    speed: f64,
    reaction: &dyn Reaction,
) -> f64 {
    let r = raw_residual(values, spacing, kernel, reaction);
    let d = derivative(values, spacing);
    (2..values.len().saturating_sub(2))
        .map(|i| (r[i] + speed * d[i]).abs())
        .fold(0.0, f64::max)
}

fn raw_residual(values: &[f64], _spacing: f64, kernel: &Kernel, reaction: &dyn Reaction) -> Vec<f64> {
    let mut padded = Vec::new();
    kernel.pad(values, Closure::default(), &mut padded);
    let mut conv = vec![0.0; values.len()];
    kernel.convolve_padded(&padded, &mut conv);
    conv.iter()
        .zip(values)
        .map(|(&j, &v)| j - v + reaction.rate(0.0, v))
        .collect()
}

fn derivative(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut d = vec![0.0; n];
    for i in 2..n.saturating_sub(2) {
        d[i] = (-values[i + 2] + 8.0 * values[i + 1] - 8.0 * values[i - 1] + values[i - 2]) / (12.0 * h);
    }
    d
}

/// Speed minimising the squared residual of a given profile.
fn best_speed(values: &[f64], spacing: f64, kernel: &Kernel, reaction: &dyn Reaction) -> f64 {
    let r = raw_residual(values, spacing, kernel, reaction);
    let d = derivative(values, spacing);
    let (mut num, mut den) = (0.0, 0.0);
    for i in 2..values.len().saturating_sub(2) {
        num += r[i] * d[i];
        den += d[i] * d[i];
    }
    -num / den
}

/// Evolves `1/(1 + e^{4x})` under `g` until the windowed speed stabilises and
/// the profile residual drops below the tolerance.
pub fn solve_wave(
    reaction: &dyn Reaction,
    theta: f64,
    kind: WaveKind,
    kernel: &Kernel,
    opts: &WaveOptions,
) -> Result<WaveSolution> {
    let h = kernel.spacing();
    let dt = opts.dt.unwrap_or_else(|| 0.05f64.min(reaction.dt_max()));
    let start = opts.start;
    let mut field = Field::centered(start, opts.half_width, h, 0.0, |x| {
        1.0 / (1.0 + (4.0 * (x - start)).exp())
    })?
    .as_front();
    let policy = WindowPolicy {
        margin: opts.half_width / 8,
        track_level: theta,
        levels: vec![theta],
        substeps: 4,
        ..Default::default()
    };
    let mut t = 0.0;
    let mut speeds: Vec<f64> = Vec::new();
    let mut residual = f64::INFINITY;
    let mut speed = f64::NAN;
    let mut tails: Option<Result<DecayFit>> = None;
    let mut converged = false;
    while t < opts.max_horizon - 1e-9 {
        let t1 = (t + opts.window).min(opts.max_horizon);
        let traj = evolve(&field, reaction, kernel, t, t1, dt, &policy)?;
        let path = &traj.paths[0];
        if path.len() < 2 {
            return Err(Error::NonConvergence(format!(
                "no crossing of {theta} to track on [{t}, {t1}]"
            )));
        }
        speeds.push(path.mean_speed());
        field = traj.last().clone();
        t = t1;
        let n = speeds.len();
        if n < 2 {
            continue;
        }
        let (a, b) = (speeds[n - 2], speeds[n - 1]);
        if kind == WaveKind::Bistable && b <= 0.0 && a <= 0.0 {
            return Err(Error::ModelInconsistent(format!(
                "bistable front recedes with speed {b}"
            )));
        }
        if (b - a).abs() > opts.tolerance * b.abs() {
            continue;
        }
        speed = best_speed(&field.values, h, kernel, reaction);
        residual = profile_residual(&field.values, h, kernel, speed, reaction);
        if residual > opts.residual_tol {
            continue;
        }
        // The far tail settles last; keep evolving until both fits are clean.
        let origin = match field.crossing(theta, Closure::default()) {
            Some(x) => field.left_edge() - x,
            None => continue,
        };
        let fit = fit_tails(origin, h, &field.values, kernel.half_cells());
        let clean = matches!(&fit, Ok(f) if f.plus_residual <= opts.tail_tol && f.minus_residual <= opts.tail_tol);
        tails = Some(fit);
        if clean {
            converged = true;
            break;
        }
    }
    if !converged {
        let detail = match &tails {
            Some(Ok(f)) => format!(
                "tail fit deviations {:.3} / {:.3} exceed {}",
                f.plus_residual, f.minus_residual, opts.tail_tol
            ),
            Some(Err(e)) => e.to_string(),
            None => format!("residual {residual:e}"),
        };
        return Err(Error::NonConvergence(format!(
            "wave not converged within {} time units (last speeds {:?}; {detail})",
            opts.max_horizon,
            speeds.iter().rev().take(2).collect::<Vec<_>>()
        )));
    }
    if kind == WaveKind::Bistable && !(speed > 0.0) {
        return Err(Error::ModelInconsistent(format!(
            "bistable wave speed {speed} is not positive"
        )));
    }
    let x_theta = field
        .crossing(theta, Closure::default())
        .ok_or_else(|| Error::NonConvergence("final profile has no crossing".into()))?;
    for (i, w) in field.values.windows(2).enumerate() {
        if w[1] - w[0] > 1e-10 {
            return Err(Error::Numerical(format!(
                "wave profile increases at cell {i}"
            )));
        }
    }
    let (first, last) = (field.values[0], field.values[field.len() - 1]);
    if first < 1.0 - 1e-6 || last > 1e-6 {
        return Err(Error::InsufficientTail(format!(
            "profile edges {first} and {last} are not within 1e-6 of the limits"
        )));
    }
    let origin = field.left_edge() - x_theta;
    let decay = fit_tails(origin, h, &field.values, kernel.half_cells())?;
    Ok(WaveSolution {
        kind,
        speed,
        theta,
        origin,
        spacing: h,
        values: field.values,
        decay,
        residual,
        horizon: t,
        window_speeds: speeds,
    })
}

/// Tail fits of a solved wave.
pub fn fit_decay(wave: &WaveSolution) -> Result<DecayFit> {
    Ok(wave.decay)
}

/// Least-squares fits of `ln phi` where `phi` lies in `[1e-8, 1e-2]` and of
/// `ln(1 - phi)` on the same range behind the front. `exclusion` cells at each
/// edge are skipped, and so are values within a factor `1e3` of the edge value,
/// which the window closure distorts.
pub fn fit_tails(origin: f64, spacing: f64, values: &[f64], exclusion: usize) -> Result<DecayFit> {
    let n = values.len();
    if n <= 2 * exclusion + 2 {
        return Err(Error::InsufficientTail(format!(
            "{n} samples cannot cover the {exclusion}-cell edge exclusions"
        )));
    }
    let x = |i: usize| origin + i as f64 * spacing;
    let right_floor = (1e3 * values[n - 1]).max(1e-8);
    let left_floor = (1e3 * (1.0 - values[0])).max(1e-8);
    let (mut xr, mut yr, mut xl, mut yl) = (vec![], vec![], vec![], vec![]);
    for (i, &v) in values.iter().enumerate().take(n - exclusion).skip(exclusion) {
        if (right_floor..=1e-2).contains(&v) && x(i) > 0.0 {
            xr.push(x(i));
            yr.push(v.ln());
        }
        let w = 1.0 - v;
        if (left_floor..=1e-2).contains(&w) && x(i) < 0.0 {
            xl.push(x(i));
            yl.push(w.ln());
        }
    }
    if xr.len() < 10 || xl.len() < 10 {
        return Err(Error::InsufficientTail(format!(
            "{} right and {} left tail samples; at least 10 needed on each side",
            xr.len(),
            xl.len()
        )));
    }
    let r = linear_fit(&xr, &yr);
    let l = linear_fit(&xl, &yl);
    Ok(DecayFit {
        c_plus: -r.slope,
        plus_intercept: r.intercept,
        c_minus: l.slope,
        x_min: -l.intercept / l.slope,
        plus_residual: r.max_residual,
        minus_residual: l.max_residual,
        plus_points: xr.len(),
        minus_points: xl.len(),
    })
}

/// Measured stability data for the bistable wave.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityFit {
    pub times: Vec<f64>,
    /// Best shift `x(t)` at each time.
    pub shifts: Vec<f64>,
    /// `max(0, sup [phi_B(x - x(t)) - u(t, x)])`.
    pub defects: Vec<f64>,
    pub x_b: f64,
    pub q_b: f64,
    /// Fitted decay rate; `None` when the defect never rises above roundoff.
    pub omega_b: Option<f64>,
    /// Largest `|x(t) - x_B - c_B t|` over the second half of the run.
    pub shift_residual: f64,
    /// False when the fitted defect slope is not negative.
    pub decaying: bool,
}

/// Golden-section minimisation of `g` on `[a, b]`.
fn golden_min(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    while b - a > tol {
        if gc <= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d);
        }
    }
    0.5 * (a + b)
}

/// Evolves `u0` under the bistable reaction and measures how it approaches a
/// shifted wave: `u(t, .) >= phi_B(. - x_B - c_B t) - q_B e^{-omega_B t}`.
pub fn bistable_stability_constants(
    wave: &WaveSolution,
    reaction: &dyn Reaction,
    kernel: &Kernel,
    u0: &Field,
    horizon: f64,
) -> Result<StabilityFit> {
    let dt = 0.05f64.min(reaction.dt_max());
    let stride = (1.0 / dt).round().max(1.0) as usize;
    let policy = WindowPolicy {
        margin: u0.len() / 8,
        track_level: wave.theta,
        snapshot_stride: stride,
        ..Default::default()
    };
    let traj = evolve(u0, reaction, kernel, u0.time, u0.time + horizon, dt, &policy)?;
    let mut fit = StabilityFit {
        times: vec![],
        shifts: vec![],
        defects: vec![],
        x_b: f64::NAN,
        q_b: 0.0,
        omega_b: None,
        shift_residual: f64::NAN,
        decaying: true,
    };
    for f in &traj.snapshots {
        let guess = f.crossing(wave.theta, Closure::default()).ok_or_else(|| {
            Error::DegenerateField(format!("no crossing of theta at t = {}", f.time))
        })?;
        let sup = |xi: f64| -> f64 {
            f.values
                .iter()
                .enumerate()
                .map(|(i, &u)| (u - wave.phi_cubic(f.x(i) - xi)).abs())
                .fold(0.0, f64::max)
        };
        let xi = golden_min(sup, guess - 1.0, guess + 1.0, 1e-11);
        let defect = f
            .values
            .iter()
            .enumerate()
            .map(|(i, &u)| wave.phi_cubic(f.x(i) - xi) - u)
            .fold(0.0, f64::max);
        fit.times.push(f.time - u0.time);
        fit.shifts.push(xi);
        fit.defects.push(defect);
    }
    let half = fit.times.len() / 2;
    let late: Vec<f64> = (half..fit.times.len())
        .map(|k| fit.shifts[k] - wave.speed * fit.times[k])
        .collect();
    fit.x_b = late.iter().sum::<f64>() / late.len() as f64;
    fit.shift_residual = late.iter().map(|v| (v - fit.x_b).abs()).fold(0.0, f64::max);
    fit.q_b = fit.defects.iter().copied().fold(0.0, f64::max);
    let (ts, ls): (Vec<f64>, Vec<f64>) = fit
        .times
        .iter()
        .zip(&fit.defects)
        .filter(|(_, &d)| d > 1e-12)
        .map(|(&t, &d)| (t, d.ln()))
        .unzip();
    if ts.len() >= 3 {
        let lf = linear_fit(&ts, &ls);
        fit.omega_b = Some(-lf.slope);
        fit.q_b = lf.intercept.exp().max(fit.q_b);
        fit.decaying = lf.slope < 0.0;
    }
    Ok(fit)
}

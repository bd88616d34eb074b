//! Interface locations: level crossings, the exponential envelope location,
//! the shooting normalisation, and the modified interface with its shifted
//! envelopes.

use crate::error::{Error, Result};
use crate::evolution::{evolve, evolve_observed, Trajectory, WindowPolicy};
use crate::grid::{Closure, Field};
use crate::kernel::Kernel;
use crate::nonlinearity::{kappa0, lambda_star, theta_star_beta, IgnitionModel};
use crate::path::{InterfacePath, PathKind};
use crate::waves::WaveSolution;

pub use crate::path::InterfacePath as Path;

/// `sup{x : u(x) >= lambda}` on a monotone front profile.
pub fn level_crossing(field: &Field, lambda: f64) -> Result<f64> {
    let (lo, hi) = field
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(lo < lambda && lambda < hi) {
        return Err(Error::NoCrossing(format!(
            "level {lambda} outside the field range [{lo}, {hi}] at t = {}",
            field.time
        )));
    }
    field
        .crossing(lambda, Closure::default())
        .ok_or_else(|| Error::NoCrossing(format!("level {lambda} at t = {}", field.time)))
}

/// Smallest `y` with `u(x) <= e^{-lambda (x - y)}` at every sample:
/// `max_i [x_i + ln(u_i) / lambda]`, skipping cells with `u_i <= 1e-300`.
pub fn envelope_location(field: &Field, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "envelope exponent must be positive, got {lambda}"
        )));
    }
    let mut best = f64::NEG_INFINITY;
    for (i, &u) in field.values.iter().enumerate() {
        if u > 1e-300 {
            best = best.max(field.x(i) + u.ln() / lambda);
        }
    }
    if best == f64::NEG_INFINITY {
        return Err(Error::DegenerateField(format!(
            "no positive cell at t = {}",
            field.time
        )));
    }
    Ok(best)
}

/// Constants that fix the envelope construction for a model and kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontConstants {
    pub theta: f64,
    pub kappa0: f64,
    pub kappa: f64,
    pub lambda_kappa: f64,
    pub c_kappa: f64,
    /// Speed bound of the envelope location.
    pub c_tilde: f64,
    pub lambda_star: f64,
    pub theta_star: f64,
    pub beta: f64,
    pub c_b: f64,
}

impl FrontConstants {
    /// Picks the first `kappa` in `kappa0/2, kappa0/4, ...` with `c_kappa < c_B / 2`
    /// and derives the remaining constants from it.
    pub fn derive(model: &IgnitionModel, kernel: &Kernel, c_b: f64) -> Result<Self> {
        if !(c_b > 0.0) {
            return Err(Error::ModelInconsistent(format!(
                "bistable speed {c_b} is not positive"
            )));
        }
        let k0 = kappa0(model);
        let mut kappa = k0;
        for _ in 0..60 {
            kappa *= 0.5;
            let ks = kernel.kappa_speed(kappa)?;
            if ks.speed < 0.5 * c_b {
                let ls = lambda_star(model, kappa)?;
                let (theta_star, beta) = theta_star_beta(model, ls)?;
                return Ok(FrontConstants {
                    theta: model.theta,
                    kappa0: k0,
                    kappa,
                    lambda_kappa: ks.lambda,
                    c_kappa: ks.speed,
                    c_tilde: kernel.tilde_speed(kappa, k0)?,
                    lambda_star: ls,
                    theta_star,
                    beta,
                    c_b,
                });
            }
        }
        Err(Error::ModelInconsistent(format!(
            "no kappa on the halving grid gives c_kappa < c_B/2 = {}",
            0.5 * c_b
        )))
    }

    /// Upper limit `1 / (2 c_tilde - c_B)` for the smoothing length.
    pub fn delta_star_limit(&self) -> f64 {
        1.0 / (2.0 * self.c_tilde - self.c_b)
    }

    /// Levels that the front analysis needs tracked.
    pub fn levels(&self) -> Vec<f64> {
        let mut v = vec![
            self.theta,
            self.lambda_star,
            self.theta_star,
            0.5 * self.theta,
            0.5 * (1.0 + self.theta),
            0.5 * (self.theta + self.lambda_star),
        ];
        v.dedup();
        v
    }
}

/// Dense samples per step needed for a path step of at most `delta_star / 10`.
pub fn substeps_for(dt: f64, delta_star: f64) -> usize {
    (dt / (0.1 * delta_star) - 1e-9).ceil().max(1.0) as usize
}

/// Settings for evolving `phi_min(. - y)` from time `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontRunSpec {
    pub s: f64,
    pub t_end: f64,
    pub dt: f64,
    pub half_width: usize,
    pub levels: Vec<f64>,
    pub substeps: usize,
    pub snapshot_stride: usize,
    /// Record the envelope location with this exponent after every step.
    pub lambda_kappa: Option<f64>,
    pub track_level: f64,
}

/// A front started from a shifted ignition wave.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontRun {
    pub s: f64,
    pub y: f64,
    pub trajectory: Trajectory,
    pub envelope: Option<InterfacePath>,
    /// `(t, max_x |u(t) - u(t - dt)| / dt)` for every step.
    pub time_derivative: Vec<(f64, f64)>,
}

/// `phi_min(x - y)` on a window centred at `y`.
pub fn shifted_wave_field(wave: &WaveSolution, y: f64, s: f64, half_width: usize) -> Result<Field> {
    wave.sample(y, y, half_width, s)
}

fn policy_for(spec: &FrontRunSpec) -> WindowPolicy {
    WindowPolicy {
        margin: spec.half_width / 4,
        track_level: spec.track_level,
        levels: spec.levels.clone(),
        substeps: spec.substeps,
        snapshot_stride: spec.snapshot_stride,
        ..Default::default()
    }
}

/// Evolves `phi_min(. - y)` from `s` to `t_end` under the heterogeneous model.
pub fn run_front(
    model: &IgnitionModel,
    kernel: &Kernel,
    wave: &WaveSolution,
    y: f64,
    spec: &FrontRunSpec,
) -> Result<FrontRun> {
    let initial = shifted_wave_field(wave, y, spec.s, spec.half_width)?;
    let policy = policy_for(spec);
    let mut envelope = spec
        .lambda_kappa
        .map(|l| InterfacePath::new(PathKind::Envelope, l));
    let mut failure = None;
    let mut previous: Option<Field> = None;
    let mut time_derivative = Vec::new();
    let trajectory = evolve_observed(
        &initial,
        model,
        kernel,
        spec.s,
        spec.t_end,
        spec.dt,
        &policy,
        &mut |f| {
            if let Some(p) = envelope.as_mut() {
                match envelope_location(f, p.parameter) {
                    Ok(y) => p.push(f.time, y),
                    Err(e) => failure = Some(e),
                }
            }
            if let Some(p) = previous.as_ref() {
                let dt = f.time - p.time;
                if dt > 0.0 {
                    let start = p.offset.min(f.offset);
                    let end = p.end().max(f.end());
                    let sup = (start..end)
                        .map(|k| (f.at_global(k, Closure::default()) - p.at_global(k, Closure::default())).abs())
                        .fold(0.0, f64::max);
                    time_derivative.push((f.time, sup / dt));
                }
            }
            previous = Some(f.clone());
        },
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(FrontRun {
        s: spec.s,
        y,
        trajectory,
        envelope,
        time_derivative,
    })
}

/// Controls for [`shoot_initial_offset`].
#[derive(Debug, Clone, PartialEq)]
pub struct ShootOptions {
    pub dt: f64,
    pub half_width: usize,
    /// Target accuracy of `|u(0, 0) - theta|`.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        ShootOptions {
            dt: 0.05,
            half_width: 400,
            tol: 1e-6,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShootResult {
    pub s: f64,
    pub y: f64,
    /// `u(0, 0)` at the returned offset.
    pub value: f64,
    /// Bracket `[(ln theta + c_plus c s)/c_plus, c_min s]` before any expansion.
    pub bracket: (f64, f64),
    pub expanded: bool,
    /// Supersolution speed `c` used in the lower end of the bracket.
    pub c_super: f64,
    pub iterations: usize,
}

/// Initial bracket for the shooting offset.
pub fn shooting_bracket(kernel: &Kernel, wave: &WaveSolution, kappa0: f64, theta: f64, s: f64) -> Result<(f64, f64, f64)> {
    let cp = wave.decay.c_plus;
    if !(cp > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "wave decay rate {cp} must be positive"
        )));
    }
    let c = (kappa0 + kernel.moment_minus_one(cp)?) / cp;
    Ok(((theta.ln() + cp * c * s) / cp, wave.speed * s, c))
}

/// Finds `y_s` with `u(0, 0; s, phi_min(. - y_s)) = theta` by bisection.
pub fn shoot_initial_offset(
    model: &IgnitionModel,
    kernel: &Kernel,
    wave: &WaveSolution,
    s: f64,
    theta: f64,
    opts: &ShootOptions,
) -> Result<ShootResult> {
    if s > 0.0 {
        return Err(Error::InvalidArgument(format!("start time {s} must not be positive")));
    }
    let (lo0, hi0, c_super) = shooting_bracket(kernel, wave, kappa0(model), theta, s)?;
    let policy = WindowPolicy {
        margin: opts.half_width / 4,
        track_level: theta,
        ..Default::default()
    };
    let value = |y: f64| -> Result<f64> {
        if s == 0.0 {
            return Ok(wave.phi(-y));
        }
        let initial = shifted_wave_field(wave, y, s, opts.half_width)?;
        let traj = evolve(&initial, model, kernel, s, 0.0, opts.dt, &policy)?;
        Ok(traj.last().at_global(0, Closure::default()))
    };
    let mut iterations = 0;
    let done = |y: f64, v: f64, expanded: bool, iterations: usize| ShootResult {
        s,
        y,
        value: v,
        bracket: (lo0, hi0),
        expanded,
        c_super,
        iterations,
    };
    let (mut lo, mut hi) = (lo0, hi0);
    let (mut vlo, mut vhi) = (value(lo)?, value(hi)?);
    let mut expanded = false;
    if !(vlo <= theta && vhi >= theta) {
        let pad = 0.2 * (hi - lo);
        lo -= pad;
        hi += pad;
        vlo = value(lo)?;
        vhi = value(hi)?;
        expanded = true;
        if !(vlo <= theta && vhi >= theta) {
            return Err(Error::Bracket(format!(
                "u(0, 0) = {vlo} at y = {lo} and {vhi} at y = {hi} do not straddle {theta}"
            )));
        }
    }
    if (vhi - theta).abs() <= opts.tol {
        return Ok(done(hi, vhi, expanded, 0));
    }
    if (vlo - theta).abs() <= opts.tol {
        return Ok(done(lo, vlo, expanded, 0));
    }
    while iterations < opts.max_iterations {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let v = value(mid)?;
        if (v - theta).abs() <= opts.tol {
            return Ok(done(mid, v, expanded, iterations));
        }
        if v < theta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NonConvergence(format!(
        "shooting for s = {s} stalled on [{lo}, {hi}]"
    )))
}

/// Inputs of the modified interface construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModifiedParams {
    pub c_b: f64,
    /// Bound `C_0` on `|X_lambda* - Y|`.
    pub c0_big: f64,
    pub t_b: f64,
    pub delta_star: f64,
    /// Speed bound `c_0` of the envelope location.
    pub c_tilde: f64,
}

/// Largest slope `c_B/2 + (15/8)(2 C_0 + 1)/delta_*` of the smoothed interface.
pub fn modified_c_max(c_b: f64, c0_big: f64, delta_star: f64) -> f64 {
    0.5 * c_b + 1.875 * (2.0 * c0_big + 1.0) / delta_star
}

/// Quintic smoothstep `6s^5 - 15s^4 + 10s^3`.
fn smoothstep(s: f64) -> f64 {
    s * s * s * (s * (6.0 * s - 15.0) + 10.0)
}

fn smoothstep_prime(s: f64) -> f64 {
    30.0 * s * s * (s - 1.0) * (s - 1.0)
}

/// The modified interface: slope-`c_B/2` lines restarted `2C_0 + 1` ahead of
/// `X_lambda*` at each hitting time, joined by quintic ramps of length `delta_*`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModifiedInterfaceBuild {
    pub params: ModifiedParams,
    /// `T_0 = s, T_1, ...`.
    pub hitting_times: Vec<f64>,
    /// `X_lambda*(T_n)`.
    pub anchors: Vec<f64>,
    pub jump: f64,
    pub c_max: f64,
    /// Bound on the second derivative.
    pub c_tilde_max: f64,
    pub d_max: f64,
    /// Admissible range of the gaps between hitting times.
    pub gap_bounds: (f64, f64),
    /// Set when no hitting time was found.
    pub truncated: bool,
    /// The interface evaluated at the input sample times.
    pub path: InterfacePath,
}

impl ModifiedInterfaceBuild {
    fn segment(&self, t: f64) -> usize {
        self.hitting_times.partition_point(|&tn| tn <= t).saturating_sub(1)
    }

    /// `X(t)`.
    pub fn eval(&self, t: f64) -> f64 {
        let p = &self.params;
        let n = self.segment(t);
        if let Some(&next) = self.hitting_times.get(n + 1) {
            let tau = t - next;
            if tau > -p.delta_star {
                let sigma = (tau + p.delta_star) / p.delta_star;
                return self.anchors[n + 1] - 0.5 * p.c_b * p.delta_star
                    + 0.5 * p.c_b * (tau + p.delta_star)
                    + self.jump * smoothstep(sigma);
            }
        }
        self.anchors[n] + self.jump + 0.5 * p.c_b * (t - self.hitting_times[n])
    }

    /// `X'(t)`.
    pub fn slope(&self, t: f64) -> f64 {
        let p = &self.params;
        let n = self.segment(t);
        if let Some(&next) = self.hitting_times.get(n + 1) {
            let tau = t - next;
            if tau > -p.delta_star {
                let sigma = (tau + p.delta_star) / p.delta_star;
                return 0.5 * p.c_b + self.jump * smoothstep_prime(sigma) / p.delta_star;
            }
        }
        0.5 * p.c_b
    }

    /// Gaps `T_n - T_{n-1}` between consecutive hitting times.
    pub fn gaps(&self) -> Vec<f64> {
        self.hitting_times.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Builds the modified interface from a densely sampled `X_lambda*` path.
pub fn build_modified_interface(x_star: &InterfacePath, params: ModifiedParams) -> Result<ModifiedInterfaceBuild> {
    let p = params;
    if x_star.len() < 2 {
        return Err(Error::InvalidArgument("path needs at least two samples".into()));
    }
    if !(p.c_b > 0.0 && p.c0_big >= 0.0 && p.t_b >= 0.0 && p.delta_star > 0.0) {
        return Err(Error::InvalidArgument(format!("inadmissible parameters {p:?}")));
    }
    if p.delta_star >= 1.0 / (2.0 * p.c_tilde - p.c_b) {
        return Err(Error::InvalidArgument(format!(
            "delta_* = {} must lie below 1/(2 c_0 - c_B) = {}",
            p.delta_star,
            1.0 / (2.0 * p.c_tilde - p.c_b)
        )));
    }
    if x_star.max_step() > 0.1 * p.delta_star * (1.0 + 1e-9) {
        return Err(Error::InvalidArgument(format!(
            "path step {} exceeds delta_*/10 = {}",
            x_star.max_step(),
            0.1 * p.delta_star
        )));
    }
    let jump = 2.0 * p.c0_big + 1.0;
    let half = 0.5 * p.c_b;
    let mut hitting_times = vec![x_star.times[0]];
    let mut anchors = vec![x_star.values[0]];
    let mut prev = (x_star.times[0], -jump);
    for k in 1..x_star.len() {
        let n = hitting_times.len() - 1;
        let (tn, an) = (hitting_times[n], anchors[n]);
        let t = x_star.times[k];
        let d = x_star.values[k] - (an + jump + half * (t - tn));
        if d >= 0.0 {
            let (t0, d0) = prev;
            let hit = if d == d0 { t } else { t0 + (t - t0) * (-d0) / (d - d0) };
            hitting_times.push(hit);
            anchors.push(an + jump + half * (hit - tn));
            // Restart the search from the new line.
            prev = (hit, -jump);
            let d_new = x_star.values[k] - (an + jump + half * (hit - tn) + jump + half * (t - hit));
            if t > hit {
                prev = (t, d_new);
            }
        } else {
            prev = (t, d);
        }
    }
    let c_max = modified_c_max(p.c_b, p.c0_big, p.delta_star);
    let c_tilde_max = jump * (10.0 / 3f64.sqrt()) / (p.delta_star * p.delta_star);
    let d_max = jump + 0.75 * p.c_b * p.t_b;
    let gap_bounds = (
        2.0 / (2.0 * p.c_tilde - p.c_b),
        4.0 * jump / p.c_b + 3.0 * p.t_b,
    );
    let mut build = ModifiedInterfaceBuild {
        params,
        truncated: hitting_times.len() == 1,
        hitting_times,
        anchors,
        jump,
        c_max,
        c_tilde_max,
        d_max,
        gap_bounds,
        path: InterfacePath::new(PathKind::Modified, p.delta_star),
    };
    for (&t, &xs) in x_star.times.iter().zip(&x_star.values) {
        let x = build.eval(t);
        let gap = x - xs;
        if gap < -1e-9 || gap > d_max + 1e-9 {
            return Err(Error::ConstructionInvariant(format!(
                "X - X_lambda* = {gap} leaves [0, d_max = {d_max}] at t = {t}"
            )));
        }
        build.path.push(t, x);
    }
    Ok(build)
}

/// `X_hat = X - d_max - c_hat` and `X_tilde = X + width_sup`.
pub fn shifted_envelopes(
    modified: &InterfacePath,
    d_max: f64,
    c_hat: f64,
    width_sup: f64,
) -> (InterfacePath, InterfacePath) {
    (
        modified.shifted(PathKind::ShiftedLower, -(d_max + c_hat)),
        modified.shifted(PathKind::ShiftedUpper, width_sup),
    )
}

/// Checks `u >= theta_*` left of `X_hat` and `u <= theta` right of `X_tilde` at every snapshot.
pub fn check_envelope_placement(
    traj: &Trajectory,
    x_hat: &InterfacePath,
    x_tilde: &InterfacePath,
    theta_star: f64,
    theta: f64,
) -> Result<()> {
    for f in &traj.snapshots {
        let (Some(lo), Some(hi)) = (x_hat.value_at(f.time), x_tilde.value_at(f.time)) else {
            continue;
        };
        for (i, &u) in f.values.iter().enumerate() {
            let x = f.x(i);
            if x <= lo && u < theta_star - 1e-9 {
                return Err(Error::EnvelopeMisplacement {
                    t: f.time,
                    x,
                    detail: format!("u = {u} below theta_* = {theta_star} left of X_hat = {lo}"),
                });
            }
            if x >= hi && u > theta + 1e-9 {
                return Err(Error::EnvelopeMisplacement {
                    t: f.time,
                    x,
                    detail: format!("u = {u} above theta = {theta} right of X_tilde = {hi}"),
                });
            }
        }
    }
    Ok(())
}

/// Width of a level pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Width {
    pub lower: f64,
    pub upper: f64,
    /// `sup_t [X_lower - X_upper]`.
    pub sup: f64,
}

/// Summary statistics of a set of interface paths.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PathStatistics {
    pub widths: Vec<Width>,
    /// `(level, sup_t |X_level - X|)` against the reference path.
    pub distances: Vec<(f64, f64)>,
    /// `(delta, sup_{|t - t'| <= delta} |X_theta(t) - X_theta(t')|)`.
    pub oscillations: Vec<(f64, f64)>,
    /// `(level, mean speed)`.
    pub speeds: Vec<(f64, f64)>,
}

/// Widths over all level pairs, distances to `reference`, oscillation of
/// `oscillating` and mean speeds, all restricted to `t >= from`.
pub fn path_statistics(
    paths: &[&InterfacePath],
    reference: Option<&InterfacePath>,
    oscillating: Option<&InterfacePath>,
    deltas: &[f64],
    from: f64,
    to: f64,
) -> PathStatistics {
    let cut: Vec<InterfacePath> = paths.iter().map(|p| p.restrict(from, to)).collect();
    let mut stats = PathStatistics::default();
    for a in &cut {
        for b in &cut {
            if a.parameter <= b.parameter {
                stats.widths.push(Width {
                    lower: a.parameter,
                    upper: b.parameter,
                    sup: width_sup(a, b),
                });
            }
        }
        if let Some(r) = reference {
            stats.distances.push((a.parameter, a.sup_distance(&r.restrict(from, to))));
        }
        if a.len() >= 2 {
            stats.speeds.push((a.parameter, a.mean_speed()));
        }
    }
    if let Some(p) = oscillating {
        let p = p.restrict(from, to);
        for &d in deltas {
            stats.oscillations.push((d, p.oscillation(d)));
        }
    }
    stats
}

/// `sup_t [X_a(t) - X_b(t)]` over the samples of `a`.
pub fn width_sup(a: &InterfacePath, b: &InterfacePath) -> f64 {
    a.times
        .iter()
        .zip(&a.values)
        .filter_map(|(&t, &x)| b.value_at(t).map(|y| x - y))
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0)
}

/// Everything derived from one front run for the envelope construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontAnalysis {
    pub constants: FrontConstants,
    /// `sup |X_lambda* - Y|` over the run.
    pub envelope_gap: f64,
    /// `C_0`, the envelope gap with a 10% margin.
    pub c0_big: f64,
    pub t_b: f64,
    pub delta_star: f64,
    pub build: ModifiedInterfaceBuild,
    /// `sup |X_theta - X_lambda*|` over the run.
    pub width_sup: f64,
    pub c_hat: f64,
    pub x_hat: InterfacePath,
    pub x_tilde: InterfacePath,
}

/// Measures `C_0` and `t_B` on the run and builds the modified interface and
/// shifted envelopes.
pub fn analyze_front(run: &FrontRun, constants: &FrontConstants, delta_star: f64, c_hat: f64) -> Result<FrontAnalysis> {
    let traj = &run.trajectory;
    let x_star = traj
        .path(constants.lambda_star)
        .ok_or_else(|| Error::InvalidArgument("run does not track lambda_*".into()))?;
    let x_theta = traj
        .path(constants.theta)
        .ok_or_else(|| Error::InvalidArgument("run does not track theta".into()))?;
    let y = run
        .envelope
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("run does not record the envelope location".into()))?;
    let envelope_gap = y
        .times
        .iter()
        .zip(&y.values)
        .filter_map(|(&t, &yv)| x_star.value_at(t).map(|x| (x - yv).abs()))
        .fold(0.0, f64::max);
    let c0_big = 1.1 * envelope_gap;
    let t_b = x_star.propagation_lag(0.75 * constants.c_b);
    let build = build_modified_interface(
        x_star,
        ModifiedParams {
            c_b: constants.c_b,
            c0_big,
            t_b,
            delta_star,
            c_tilde: constants.c_tilde,
        },
    )?;
    let width = x_theta.sup_distance(x_star);
    let (x_hat, x_tilde) = shifted_envelopes(&build.path, build.d_max, c_hat, width);
    Ok(FrontAnalysis {
        constants: *constants,
        envelope_gap,
        c0_big,
        t_b,
        delta_star,
        build,
        width_sup: width,
        c_hat,
        x_hat,
        x_tilde,
    })
}

//! Verification suites for the front constructions: decay envelopes, bounded
//! width, the uniform Lipschitz bound, the limit front and its oscillation.

use crate::error::{Error, Result};
use crate::evolution::{moving_boundary_comparison_check, Bound, ComparisonReport, Side, Trajectory};
use crate::fronts::{
    analyze_front, run_front, shoot_initial_offset, substeps_for, FrontAnalysis, FrontConstants,
    FrontRun, FrontRunSpec, ShootOptions, ShootResult,
};
use crate::grid::{Closure, Field};
use crate::kernel::Kernel;
use crate::nonlinearity::IgnitionModel;
use crate::path::InterfacePath;
use crate::waves::{fit_tails, DecayFit, WaveSolution};

/// One measured quantity against its bound.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRecord {
    pub name: String,
    /// `"<="`, `">="` or `"=="`.
    pub relation: &'static str,
    pub bound: f64,
    pub measured: f64,
    pub pass: bool,
    /// `(t, x)` of the worst sample, where one exists.
    pub location: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerificationReport {
    pub suite: String,
    /// Run parameters behind the constants.
    pub parameters: Vec<(String, String)>,
    pub constants: Vec<(String, f64)>,
    pub checks: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn new(suite: &str) -> Self {
        VerificationReport {
            suite: suite.to_string(),
            ..Default::default()
        }
    }

    pub fn parameter(&mut self, key: &str, value: impl ToString) {
        self.parameters.push((key.to_string(), value.to_string()));
    }

    pub fn constant(&mut self, key: &str, value: f64) {
        self.constants.push((key.to_string(), value));
    }

    pub fn at_most(&mut self, name: &str, measured: f64, bound: f64) -> bool {
        self.push(name, "<=", bound, measured, measured <= bound, None)
    }

    pub fn at_least(&mut self, name: &str, measured: f64, bound: f64) -> bool {
        self.push(name, ">=", bound, measured, measured >= bound, None)
    }

    /// Records a yes/no check as `measured == 1`.
    pub fn holds(&mut self, name: &str, ok: bool) -> bool {
        self.push(name, "==", 1.0, if ok { 1.0 } else { 0.0 }, ok, None)
    }

    /// Records a comparison report; `expect_pass = false` turns it into a negative control.
    pub fn comparison(&mut self, name: &str, report: &ComparisonReport, expect_pass: bool) -> bool {
        if expect_pass {
            self.push(name, "<=", report.tol, report.max_violation, report.passed, report.worst)
        } else {
            self.push(name, ">", report.tol, report.max_violation, !report.passed, report.worst)
        }
    }

    fn push(
        &mut self,
        name: &str,
        relation: &'static str,
        bound: f64,
        measured: f64,
        pass: bool,
        location: Option<(f64, f64)>,
    ) -> bool {
        self.checks.push(CheckRecord {
            name: name.to_string(),
            relation,
            bound,
            measured,
            pass,
            location,
        });
        pass
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn value(&self, key: &str) -> Option<f64> {
        self.constants.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

/// Largest `c` in `[lo, ...)` with `ok(c)`, assuming `ok` holds on an interval
/// starting at `lo`. Returns the lower end of the final bracket.
fn last_admissible(ok: &dyn Fn(f64) -> Result<bool>, lo: f64) -> Result<f64> {
    let mut lo = lo;
    let mut hi = 1.0_f64.max(2.0 * lo);
    let mut doublings = 0;
    while ok(hi)? {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::Range(format!("admissible set unbounded past {hi}")));
        }
    }
    while hi - lo > 1e-14 * hi {
        let mid = 0.5 * (lo + hi);
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// `g(c) = c c_B / 2 - M(c) + 1`.
pub fn decay_g(kernel: &Kernel, c_b: f64, c: f64) -> Result<f64> {
    Ok(0.5 * c * c_b - kernel.moment_minus_one(c)?)
}

/// Largest `c` with `g(c) > 0`.
pub fn admissible_c_plus(kernel: &Kernel, c_b: f64) -> Result<f64> {
    let ok = |c: f64| decay_g(kernel, c_b, c).map(|g| g > 0.0);
    let start = 1e-9;
    if !(c_b > 0.0) || !ok(start)? {
        return Err(Error::InfeasibleRate(format!(
            "g(c) = c c_B/2 - M(c) + 1 is not positive near 0 for c_B = {c_b}"
        )));
    }
    last_admissible(&ok, start)
}

/// Largest `c` with `c c_max + M(-c) - 1 - beta <= 0`.
pub fn admissible_c_minus(kernel: &Kernel, c_max: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::InfeasibleRate(format!(
            "beta = {beta} leaves no positive lower decay rate"
        )));
    }
    let ok = |c: f64| kernel.moment_minus_one(-c).map(|m| c * c_max + m - beta <= 0.0);
    last_admissible(&ok, 0.0)
}

/// Decay rates that satisfy the proof inequalities, before any adjustment
/// for the initial datum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibleRates {
    pub c_plus: f64,
    pub c_minus: f64,
}

pub fn admissible_rates(kernel: &Kernel, c_b: f64, c_max: f64, beta: f64) -> Result<AdmissibleRates> {
    Ok(AdmissibleRates {
        c_plus: admissible_c_plus(kernel, c_b)?,
        c_minus: admissible_c_minus(kernel, c_max, beta)?,
    })
}

/// Both envelope checks on a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayCheck {
    /// `u >= 1 - e^{c_-(x - X_hat)}` for `x <= X_hat`.
    pub lower: ComparisonReport,
    /// `u <= e^{-c_+(x - X_tilde)}` for `x >= X_tilde`.
    pub upper: ComparisonReport,
}

impl DecayCheck {
    pub fn passed(&self) -> bool {
        self.lower.passed && self.upper.passed
    }
}

pub fn lower_envelope_check(traj: &Trajectory, x_hat: &InterfacePath, c_minus: f64, tol: f64) -> ComparisonReport {
    moving_boundary_comparison_check(
        traj,
        &|t| x_hat.value_at(t),
        &|t, x| 1.0 - (c_minus * (x - x_hat.value_at(t).unwrap_or(f64::NAN))).exp(),
        Side::Left,
        Bound::Lower,
        tol,
    )
}

pub fn upper_envelope_check(traj: &Trajectory, x_tilde: &InterfacePath, c_plus: f64, tol: f64) -> ComparisonReport {
    moving_boundary_comparison_check(
        traj,
        &|t| x_tilde.value_at(t),
        &|t, x| (-c_plus * (x - x_tilde.value_at(t).unwrap_or(f64::NAN))).exp(),
        Side::Right,
        Bound::Upper,
        tol,
    )
}

/// Checks both decay envelopes at every snapshot and grid point.
pub fn verify_decay(
    traj: &Trajectory,
    x_hat: &InterfacePath,
    x_tilde: &InterfacePath,
    c_minus: f64,
    c_plus: f64,
    tol: f64,
) -> DecayCheck {
    DecayCheck {
        lower: lower_envelope_check(traj, x_hat, c_minus, tol),
        upper: upper_envelope_check(traj, x_tilde, c_plus, tol),
    }
}

/// Rates and shift after fitting the envelopes to the initial datum.
#[derive(Debug, Clone, PartialEq)]
pub struct DecaySetup {
    pub admissible: AdmissibleRates,
    pub c_plus: f64,
    pub c_minus: f64,
    pub c_hat: f64,
    pub x_hat: InterfacePath,
    pub x_tilde: InterfacePath,
}

/// Caps `c_+` at the wave's tail rate, then shrinks it by 10% and raises `C_hat`
/// by 1 until both envelopes hold on the first snapshot.
pub fn fit_initial_envelopes(
    run: &FrontRun,
    analysis: &FrontAnalysis,
    admissible: AdmissibleRates,
    wave_rate: f64,
    tol: f64,
) -> Result<DecaySetup> {
    let first = run
        .trajectory
        .snapshots
        .first()
        .ok_or_else(|| Error::InvalidArgument("run has no snapshots".into()))?;
    let initial = run.trajectory.head(1);
    let mut c_plus = admissible.c_plus.min(wave_rate);
    let mut tries = 0;
    while !upper_envelope_check(&initial, &analysis.x_tilde, c_plus, tol).passed {
        c_plus *= 0.9;
        tries += 1;
        if tries > 400 {
            return Err(Error::InfeasibleRate(format!(
                "upper envelope fails at t = {} for every c_+ down to {c_plus:e}",
                first.time
            )));
        }
    }
    let base = analysis.x_hat.shifted(crate::path::PathKind::ShiftedLower, analysis.c_hat);
    let mut c_hat = analysis.c_hat;
    let mut x_hat = analysis.x_hat.clone();
    while !lower_envelope_check(&initial, &x_hat, admissible.c_minus, tol).passed {
        c_hat += 1.0;
        if c_hat > analysis.c_hat + 1e4 {
            return Err(Error::InfeasibleRate(format!(
                "lower envelope fails at t = {} for every C_hat up to {c_hat}",
                first.time
            )));
        }
        x_hat = base.shifted(crate::path::PathKind::ShiftedLower, -c_hat);
    }
    Ok(DecaySetup {
        admissible,
        c_plus,
        c_minus: admissible.c_minus,
        c_hat,
        x_hat,
        x_tilde: analysis.x_tilde.clone(),
    })
}

/// Width sups and diameters for one time range.
#[derive(Debug, Clone, PartialEq)]
pub struct WidthSummary {
    pub to: f64,
    /// `(lambda_1, lambda_2, sup_t [X_lambda_1 - X_lambda_2])` for `lambda_1 < lambda_2`.
    pub pairs: Vec<(f64, f64, f64)>,
    /// `(eps, sup_t diam{x : eps <= u <= 1 - eps})`.
    pub diameters: Vec<(f64, f64)>,
}

impl WidthSummary {
    pub fn pair(&self, a: f64, b: f64) -> Option<f64> {
        self.pairs
            .iter()
            .find(|p| (p.0 - a).abs() < 1e-12 && (p.1 - b).abs() < 1e-12)
            .map(|p| p.2)
    }

    pub fn max_width(&self) -> f64 {
        self.pairs.iter().map(|p| p.2).fold(0.0, f64::max)
    }
}

/// `diam{x : eps <= u <= 1 - eps}` on the window.
pub fn diameter(field: &Field, eps: f64) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, &u) in field.values.iter().enumerate() {
        if u >= eps && u <= 1.0 - eps {
            lo = lo.min(field.x(i));
            hi = hi.max(field.x(i));
        }
    }
    if hi >= lo {
        hi - lo
    } else {
        0.0
    }
}

fn width_summary(paths: &[&InterfacePath], snapshots: &[Field], eps: &[f64], from: f64, to: f64) -> WidthSummary {
    let cut: Vec<InterfacePath> = paths.iter().map(|p| p.restrict(from, to)).collect();
    let mut pairs = Vec::new();
    for a in &cut {
        for b in &cut {
            if a.parameter < b.parameter {
                pairs.push((a.parameter, b.parameter, crate::fronts::width_sup(a, b)));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let diameters = eps
        .iter()
        .map(|&e| {
            let d = snapshots
                .iter()
                .filter(|f| f.time >= from - 1e-9 && f.time <= to + 1e-9)
                .map(|f| diameter(f, e))
                .fold(0.0, f64::max);
            (e, d)
        })
        .collect();
    WidthSummary { to, pairs, diameters }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WidthReport {
    pub from: f64,
    pub half: WidthSummary,
    pub full: WidthSummary,
    /// Largest relative growth of any width sup from `half` to `full`.
    pub growth: f64,
    pub stable: bool,
}

/// Width sups over `[from, mid]` and `[from, to]` for every level pair, with
/// the diameters of the transition zone.
pub fn verify_width(
    paths: &[&InterfacePath],
    snapshots: &[Field],
    eps: &[f64],
    from: f64,
    mid: f64,
    to: f64,
    max_growth: f64,
) -> WidthReport {
    let half = width_summary(paths, snapshots, eps, from, mid);
    let full = width_summary(paths, snapshots, eps, from, to);
    let growth = half
        .pairs
        .iter()
        .zip(&full.pairs)
        .map(|(a, b)| if a.2 > 0.0 { b.2 / a.2 - 1.0 } else { 0.0 })
        .chain(
            half.diameters
                .iter()
                .zip(&full.diameters)
                .map(|(a, b)| if a.1 > 0.0 { b.1 / a.1 - 1.0 } else { 0.0 }),
        )
        .fold(0.0, f64::max);
    WidthReport {
        from,
        half,
        full,
        growth,
        stable: growth <= max_growth,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzReport {
    /// `(t, max_i |u_{i+1} - u_i| / h)` per snapshot.
    pub slopes: Vec<(f64, f64)>,
    pub initial: f64,
    pub sup_half: f64,
    pub sup_full: f64,
    pub factor: f64,
    pub growth: f64,
}

impl LipschitzReport {
    pub fn bounded(&self) -> bool {
        self.sup_full <= self.factor * self.initial
    }
}

/// Running sup of the spatial slope up to `mid` and to the end.
pub fn verify_lipschitz(traj: &Trajectory, mid: f64, factor: f64) -> LipschitzReport {
    let slopes: Vec<(f64, f64)> = traj.snapshots.iter().map(|f| (f.time, f.sup_slope())).collect();
    let initial = slopes.first().map_or(0.0, |s| s.1);
    let sup_half = slopes.iter().filter(|s| s.0 <= mid + 1e-9).map(|s| s.1).fold(0.0, f64::max);
    let sup_full = slopes.iter().map(|s| s.1).fold(0.0, f64::max);
    LipschitzReport {
        growth: if sup_half > 0.0 { sup_full / sup_half - 1.0 } else { 0.0 },
        slopes,
        initial,
        sup_half,
        sup_full,
        factor,
    }
}

/// Settings for the limit construction.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitOptions {
    /// Decreasing start times.
    pub ladder: Vec<f64>,
    pub dt: f64,
    pub half_width: usize,
    pub time_window: (f64, f64),
    /// Half-width of the spatial window around `X_theta(0)` of the deepest run.
    pub space_half_width: f64,
    pub snapshot_stride: usize,
    pub delta_star: f64,
    pub shoot: ShootOptions,
    pub limit_tol: f64,
}

impl Default for LimitOptions {
    fn default() -> Self {
        LimitOptions {
            ladder: vec![-10.0, -20.0, -40.0, -80.0],
            dt: 0.05,
            half_width: 400,
            time_window: (-5.0, 5.0),
            space_half_width: 10.0,
            snapshot_stride: 20,
            delta_star: 0.0,
            shoot: ShootOptions::default(),
            limit_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitRun {
    pub shot: ShootResult,
    pub run: FrontRun,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitFront {
    pub runs: Vec<LimitRun>,
    /// `(s_i, s_{i+1}, sup over the window of |u(.;s_i) - u(.;s_{i+1})|)`.
    pub distances: Vec<(f64, f64, f64)>,
    /// `|u(0, 0; s_i) - u(0, 0; s_{i+1})|` per consecutive pair.
    pub origin_gaps: Vec<f64>,
    pub x_window: (f64, f64),
    pub decreasing: bool,
    pub converged: bool,
}

impl LimitFront {
    /// The deepest run, used as the limit surrogate.
    pub fn surrogate(&self) -> &LimitRun {
        self.runs.last().expect("ladder is not empty")
    }
}

fn window_distance(a: &Trajectory, b: &Trajectory, times: (f64, f64), xs: (f64, f64)) -> f64 {
    let mut sup: f64 = 0.0;
    for f in a.snapshots.iter().filter(|f| f.time >= times.0 - 1e-9 && f.time <= times.1 + 1e-9) {
        let Some(g) = b.snapshot_at(f.time) else { continue };
        let h = f.spacing;
        let k0 = (xs.0 / h).ceil() as i64;
        let k1 = (xs.1 / h).floor() as i64;
        for k in k0..=k1 {
            sup = sup.max((f.at_global(k, Closure::default()) - g.at_global(k, Closure::default())).abs());
        }
    }
    sup
}

/// Shoots and evolves every start time of the ladder up to the end of the
/// time window, and measures consecutive distances on the evaluation window.
pub fn construct_limit_front(
    model: &IgnitionModel,
    kernel: &Kernel,
    wave: &WaveSolution,
    constants: &FrontConstants,
    opts: &LimitOptions,
) -> Result<LimitFront> {
    if opts.ladder.is_empty() || opts.ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(format!(
            "start times {:?} must be nonempty and decreasing",
            opts.ladder
        )));
    }
    if !(opts.delta_star > 0.0) {
        return Err(Error::InvalidArgument("delta_* must be positive".into()));
    }
    let mut runs = Vec::new();
    for &s in &opts.ladder {
        let shot = shoot_initial_offset(model, kernel, wave, s, constants.theta, &opts.shoot)?;
        let spec = FrontRunSpec {
            s,
            t_end: opts.time_window.1,
            dt: opts.dt,
            half_width: opts.half_width,
            levels: constants.levels(),
            substeps: substeps_for(opts.dt, opts.delta_star),
            snapshot_stride: opts.snapshot_stride,
            lambda_kappa: Some(constants.lambda_kappa),
            track_level: constants.theta,
        };
        let run = run_front(model, kernel, wave, shot.y, &spec)?;
        runs.push(LimitRun { shot, run });
    }
    let deepest = &runs.last().expect("nonempty").run.trajectory;
    let center = deepest
        .path(constants.theta)
        .and_then(|p| p.value_at(0.0))
        .unwrap_or(0.0);
    let xs = (center - opts.space_half_width, center + opts.space_half_width);
    let mut distances = Vec::new();
    let mut origin_gaps = Vec::new();
    for w in runs.windows(2) {
        let d = window_distance(&w[0].run.trajectory, &w[1].run.trajectory, opts.time_window, xs);
        distances.push((w[0].shot.s, w[1].shot.s, d));
        origin_gaps.push((w[0].shot.value - w[1].shot.value).abs());
    }
    let decreasing = distances.windows(2).all(|w| w[1].2 < w[0].2);
    let converged = decreasing && distances.last().is_none_or(|d| d.2 <= opts.limit_tol);
    Ok(LimitFront {
        runs,
        distances,
        origin_gaps,
        x_window: xs,
        decreasing,
        converged,
    })
}

/// Tail rates of a front snapshot, measured from its `theta` crossing.
pub fn fitted_front_rates(field: &Field, theta: f64, exclusion: usize) -> Result<DecayFit> {
    let x_theta = crate::fronts::level_crossing(field, theta)?;
    fit_tails(field.left_edge() - x_theta, field.spacing, &field.values, exclusion)
}

/// `max{h_- - ln(1 - lambda)/c_-, h_+ - ln(lambda)/c_+}`.
pub fn level_offset(lambda: f64, h_minus: f64, h_plus: f64, c_minus: f64, c_plus: f64) -> f64 {
    (h_minus - (1.0 - lambda).ln() / c_minus).max(h_plus - lambda.ln() / c_plus)
}

/// `max{h(theta) + h(theta/2), h(theta) + h((1 + theta)/2)}`.
pub fn oscillation_c1(theta: f64, h_minus: f64, h_plus: f64, c_minus: f64, c_plus: f64) -> f64 {
    let h = |l: f64| level_offset(l, h_minus, h_plus, c_minus, c_plus);
    (h(theta) + h(0.5 * theta)).max(h(theta) + h(0.5 * (1.0 + theta)))
}

/// `(k + 1) C_1` with `delta = k eta_0 + delta_0`, `0 <= delta_0 < eta_0`.
pub fn oscillation_bound(delta: f64, eta0: f64, c1: f64) -> (usize, f64) {
    let k = (delta / eta0 + 1e-12).floor() as usize;
    (k, (k + 1) as f64 * c1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillationRow {
    pub delta: f64,
    pub k: usize,
    pub bound: f64,
    pub measured: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillationReport {
    /// `sup |u_t|`.
    pub c_bar: f64,
    pub eta0: f64,
    pub c1: f64,
    /// Oscillation of `X_theta` over windows of length `eta_0`.
    pub at_eta0: f64,
    pub rows: Vec<OscillationRow>,
}

impl OscillationReport {
    pub fn passed(&self) -> bool {
        self.at_eta0 <= self.c1 && self.rows.iter().all(|r| r.measured <= r.bound)
    }
}

/// Measured oscillation of `X_theta` against the bound assembled from `h_pm`, `c_pm`.
pub fn verify_oscillation(
    x_theta: &InterfacePath,
    c_bar: f64,
    theta: f64,
    h: (f64, f64),
    c: (f64, f64),
    deltas: &[f64],
) -> Result<OscillationReport> {
    if !(c_bar > 0.0) {
        return Err(Error::DegenerateField(format!("sup |u_t| = {c_bar} is not positive")));
    }
    let eta0 = (0.5 * theta).min(0.5 * (1.0 - theta)) / c_bar;
    let c1 = oscillation_c1(theta, h.0, h.1, c.0, c.1);
    let rows = deltas
        .iter()
        .map(|&d| {
            let (k, bound) = oscillation_bound(d, eta0, c1);
            OscillationRow {
                delta: d,
                k,
                bound,
                measured: x_theta.oscillation(d),
            }
        })
        .collect();
    Ok(OscillationReport {
        c_bar,
        eta0,
        c1,
        at_eta0: x_theta.oscillation(eta0),
        rows,
    })
}

/// Builds the front analysis and decay setup for a run in one go.
pub fn decay_setup_for(
    run: &FrontRun,
    constants: &FrontConstants,
    kernel: &Kernel,
    wave_rate: f64,
    delta_star: f64,
    c_hat: f64,
    tol: f64,
) -> Result<(FrontAnalysis, DecaySetup)> {
    let analysis = analyze_front(run, constants, delta_star, c_hat)?;
    let rates = admissible_rates(kernel, constants.c_b, analysis.build.c_max, constants.beta)?;
    let setup = fit_initial_envelopes(run, &analysis, rates, wave_rate, tol)?;
    Ok((analysis, setup))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{make_kernel, KernelFamily};
    use approx::assert_relative_eq;

    fn gaussian() -> Kernel {
        make_kernel(KernelFamily::Gaussian { sigma: 1.0 }, 0.05, 1e-12).unwrap()
    }

    fn scalar_bisection(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    #[test]
    fn c_minus_matches_scalar_oracle() {
        let k = gaussian();
        let got = admissible_c_minus(&k, 18.95, 0.05).unwrap();
        let want = scalar_bisection(|c| 18.95 * c + (0.5 * c * c).exp() - 1.0 - 0.05, 0.0, 1.0);
        assert_relative_eq!(got, want, max_relative = 1e-9);
    }

    #[test]
    fn c_plus_is_the_positive_root_of_g() {
        let k = gaussian();
        let got = admissible_c_plus(&k, 0.4).unwrap();
        let want = scalar_bisection(|c| -(0.2 * c - (0.5 * c * c).exp() + 1.0), 0.1, 5.0);
        assert_relative_eq!(got, want, max_relative = 1e-9);
        assert!(decay_g(&k, 0.4, got).unwrap() > 0.0);
    }

    #[test]
    fn small_c_plus_is_admissible() {
        let k = gaussian();
        for c_b in [1e-3, 0.1, 1.0] {
            assert!(decay_g(&k, c_b, 1e-6).unwrap() > 0.0);
            assert!(admissible_c_plus(&k, c_b).unwrap() > 0.0);
        }
        assert!(matches!(admissible_c_plus(&k, 0.0), Err(Error::InfeasibleRate(_))));
        assert!(matches!(admissible_c_minus(&k, 1.0, 0.0), Err(Error::InfeasibleRate(_))));
    }

    #[test]
    fn oscillation_bound_steps() {
        assert_eq!(oscillation_bound(0.0, 0.5, 2.0), (0, 2.0));
        assert_eq!(oscillation_bound(1.0, 0.5, 2.0), (2, 6.0));
        assert_eq!(oscillation_bound(1.2, 0.5, 2.0), (2, 6.0));
        let eta = 0.3;
        assert_eq!(oscillation_bound(2.0 * eta, eta, 1.5).1, 4.5);
    }

    #[test]
    fn c1_formula() {
        let (t, hm, hp, cm, cp) = (0.25, 1.0, 2.0, 0.5, 0.7);
        let h = |l: f64| (hm - (1.0 - l).ln() / cm).max(hp - l.ln() / cp);
        let want = (h(t) + h(t / 2.0)).max(h(t) + h((1.0 + t) / 2.0));
        assert_eq!(oscillation_c1(t, hm, hp, cm, cp), want);
    }

    #[test]
    fn diameter_of_ramp() {
        let f = Field::from_fn(-40, 121, 0.05, 0.0, |x| (1.0 - x).clamp(0.0, 1.0)).unwrap();
        let d = diameter(&f, 0.05);
        assert!((d - 0.9).abs() <= 0.05 + 1e-12);
    }
}

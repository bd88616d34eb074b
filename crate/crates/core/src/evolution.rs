//! Explicit time integration on a co-moving window, with dense tracking of
//! level crossings and comparison checks between trajectories.

use crate::error::{Error, Result};
use crate::grid::{last_at_or_above, sup_crossing, Closure, Field};
use crate::kernel::Kernel;
use crate::nonlinearity::Reaction;
use crate::path::{InterfacePath, PathKind};

/// Values may leave `[0, 1]` by at most this much before the run is declared unstable.
const OVERSHOOT_TOL: f64 = 1e-8;

/// How the computational window follows the front and what is recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowPolicy {
    /// Shift the window whenever the tracked crossing drifts by more than `margin` cells.
    pub recenter: bool,
    pub margin: usize,
    /// Level whose crossing positions the window and triggers exhaustion errors.
    pub track_level: f64,
    pub closure: Closure,
    /// Keep a snapshot at every global step index divisible by this; zero keeps
    /// only the first and last fields.
    pub snapshot_stride: usize,
    /// Levels whose crossings are recorded as paths.
    pub levels: Vec<f64>,
    /// Dense samples per step for the level paths.
    pub substeps: usize,
    /// Fail when a front profile loses monotonicity by more than this.
    pub monotone_tol: f64,
}

impl Default for WindowPolicy {
    fn default() -> Self {
        WindowPolicy {
            recenter: true,
            margin: 100,
            track_level: 0.5,
            closure: Closure::default(),
            snapshot_stride: 0,
            levels: Vec::new(),
            substeps: 1,
            monotone_tol: 1e-10,
        }
    }
}

/// Per-step diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub time: f64,
    pub offset: i64,
    pub sup_slope: f64,
    /// `∫ (u - 1_{x<0}) dx`, whose growth rate is the mean front speed.
    pub mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowShift {
    pub time: f64,
    pub cells: i64,
}

/// Output of [`evolve`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    pub closure: Closure,
    pub snapshots: Vec<Field>,
    pub records: Vec<StepRecord>,
    pub shifts: Vec<WindowShift>,
    /// One path per requested level, sampled `substeps` times per step.
    pub paths: Vec<InterfacePath>,
    pub levels: Vec<f64>,
}

impl Trajectory {
    pub fn path(&self, level: f64) -> Option<&InterfacePath> {
        self.levels
            .iter()
            .position(|&l| l == level)
            .map(|i| &self.paths[i])
    }

    /// Snapshot whose time lies within `1e-9` of `t`.
    pub fn snapshot_at(&self, t: f64) -> Option<&Field> {
        self.snapshots.iter().find(|f| (f.time - t).abs() < 1e-9)
    }

    pub fn last(&self) -> &Field {
        self.snapshots.last().expect("trajectory keeps its final field")
    }

    /// The first `n` snapshots alone, without records or paths.
    pub fn head(&self, n: usize) -> Trajectory {
        Trajectory {
            snapshots: self.snapshots.iter().take(n).cloned().collect(),
            records: Vec::new(),
            shifts: Vec::new(),
            paths: Vec::new(),
            levels: Vec::new(),
            ..*self
        }
    }
}

/// Evaluates `J * u - u + f(t, u)` with a reusable padding buffer.
struct Rhs<'a, R: Reaction + ?Sized> {
    kernel: &'a Kernel,
    reaction: &'a R,
    closure: Closure,
    padded: Vec<f64>,
}

impl<R: Reaction + ?Sized> Rhs<'_, R> {
    fn eval(&mut self, t: f64, u: &[f64], out: &mut [f64]) {
        self.kernel.pad(u, self.closure, &mut self.padded);
        self.kernel.convolve_padded(&self.padded, out);
        for (o, &v) in out.iter_mut().zip(u) {
            *o += self.reaction.rate(t, v) - v;
        }
    }
}

/// Stage buffers of the classical fourth-order Runge-Kutta scheme.
struct Rk4 {
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        Rk4 {
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }

    /// Advances `u` to `u1` given `k1 = rhs(t, u)`.
    fn advance<R: Reaction + ?Sized>(
        &mut self,
        rhs: &mut Rhs<'_, R>,
        t: f64,
        dt: f64,
        u: &[f64],
        k1: &[f64],
        u1: &mut [f64],
    ) {
        let half = 0.5 * dt;
        for i in 0..u.len() {
            self.tmp[i] = u[i] + half * k1[i];
        }
        rhs.eval(t + half, &self.tmp, &mut self.k2);
        for i in 0..u.len() {
            self.tmp[i] = u[i] + half * self.k2[i];
        }
        rhs.eval(t + half, &self.tmp, &mut self.k3);
        for i in 0..u.len() {
            self.tmp[i] = u[i] + dt * self.k3[i];
        }
        rhs.eval(t + dt, &self.tmp, &mut self.k4);
        let sixth = dt / 6.0;
        for i in 0..u.len() {
            u1[i] = u[i] + sixth * (k1[i] + 2.0 * (self.k2[i] + self.k3[i]) + self.k4[i]);
        }
    }
}

fn check_step(reaction: &dyn Reaction, dt: f64) -> Result<()> {
    let limit = reaction.dt_max();
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "time step {dt} violates dt ≤ 0.2/(1+L_f) = {limit}"
        )));
    }
    Ok(())
}

fn check_spacing(field: &Field, kernel: &Kernel) -> Result<()> {
    if (field.spacing - kernel.spacing()).abs() > 1e-12 * kernel.spacing() {
        return Err(Error::InvalidArgument(format!(
            "field spacing {} differs from kernel spacing {}",
            field.spacing,
            kernel.spacing()
        )));
    }
    Ok(())
}

/// Rejects non-finite values and overshoot beyond the tolerance, and clips
/// roundoff-sized negative values to zero.
fn check_values(values: &mut [f64], offset: i64, spacing: f64, t: f64) -> Result<()> {
    for (i, v) in values.iter_mut().enumerate() {
        let v = {
            if *v < 0.0 && *v >= -OVERSHOOT_TOL {
                *v = 0.0;
            }
            *v
        };
        if !v.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite value at x = {} and t = {t}",
                (offset + i as i64) as f64 * spacing
            )));
        }
        if !(-OVERSHOOT_TOL..=1.0 + OVERSHOOT_TOL).contains(&v) {
            return Err(Error::Instability {
                t,
                detail: format!(
                    "value {v:e} at x = {} leaves [0, 1]",
                    (offset + i as i64) as f64 * spacing
                ),
            });
        }
    }
    Ok(())
}

/// One fourth-order Runge-Kutta step of size `dt`.
pub fn step(
    field: &Field,
    reaction: &dyn Reaction,
    kernel: &Kernel,
    dt: f64,
    closure: Closure,
) -> Result<Field> {
    check_step(reaction, dt)?;
    check_spacing(field, kernel)?;
    let n = field.len();
    let mut rhs = Rhs {
        kernel,
        reaction,
        closure,
        padded: Vec::new(),
    };
    let mut k1 = vec![0.0; n];
    rhs.eval(field.time, &field.values, &mut k1);
    let mut u1 = vec![0.0; n];
    Rk4::new(n).advance(&mut rhs, field.time, dt, &field.values, &k1, &mut u1);
    let t = field.time + dt;
    check_values(&mut u1, field.offset, field.spacing, t)?;
    let mut out = Field::new(field.offset, field.spacing, t, u1)?;
    out.front = field.front;
    if out.front {
        out.check_monotone(1e-10)?;
    }
    Ok(out)
}

fn mass(values: &[f64], offset: i64, h: f64) -> f64 {
    let n = values.len() as i64;
    let mut s = 0.0;
    for (i, &v) in values.iter().enumerate() {
        let k = offset + i as i64;
        s += if k < 0 { v - 1.0 } else { v };
    }
    let mut m = h * s;
    if offset > 0 {
        m += h * offset as f64;
    }
    if offset + n < 0 {
        m += h * (offset + n) as f64;
    }
    m
}

/// Cubic Hermite interpolation between `u0` and `u1` with derivatives `f0`, `f1`.
fn hermite(tau: f64, hstep: f64, u0: f64, f0: f64, u1: f64, f1: f64) -> f64 {
    let t2 = tau * tau;
    let t3 = t2 * tau;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + tau;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * u0 + h10 * hstep * f0 + h01 * u1 + h11 * hstep * f1
}

struct DenseStep<'a> {
    offset: i64,
    spacing: f64,
    closure: Closure,
    hstep: f64,
    u0: &'a [f64],
    f0: &'a [f64],
    u1: &'a [f64],
    f1: &'a [f64],
}

impl DenseStep<'_> {
    fn value(&self, tau: f64, i: usize) -> f64 {
        hermite(tau, self.hstep, self.u0[i], self.f0[i], self.u1[i], self.f1[i])
    }

    /// Crossing of `lambda` by the interpolated field at fraction `tau` of the step.
    fn crossing(&self, tau: f64, lambda: f64, band: Option<(usize, usize)>, scratch: &mut Vec<f64>) -> Option<f64> {
        let n = self.u0.len();
        if let Some((lo, hi)) = band {
            scratch.clear();
            scratch.extend((lo..=hi).map(|i| self.value(tau, i)));
            if let Some(j) = last_at_or_above(scratch, lambda) {
                let i = lo + j;
                if i < hi || hi == n - 1 {
                    if self.closure.right >= lambda {
                        return None;
                    }
                    let v = scratch[j];
                    let next = scratch.get(j + 1).copied().unwrap_or(self.closure.right);
                    return Some(
                        (self.offset + i as i64) as f64 * self.spacing
                            + self.spacing * (v - lambda) / (v - next),
                    );
                }
            }
        }
        scratch.clear();
        scratch.extend((0..n).map(|i| self.value(tau, i)));
        sup_crossing(scratch, self.offset, self.spacing, self.closure, lambda)
    }
}

fn step_time(aligned: Option<i64>, t0: f64, t1: f64, dt: f64, k: usize, nsteps: usize) -> f64 {
    if k == nsteps {
        return t1;
    }
    match aligned {
        Some(g0) => (g0 + k as i64) as f64 * dt,
        None => t0 + k as f64 * dt,
    }
}

/// Integrates from `t0` to `t1` with step `dt`. See [`evolve_observed`].
pub fn evolve(
    initial: &Field,
    reaction: &dyn Reaction,
    kernel: &Kernel,
    t0: f64,
    t1: f64,
    dt: f64,
    policy: &WindowPolicy,
) -> Result<Trajectory> {
    evolve_observed(initial, reaction, kernel, t0, t1, dt, policy, &mut |_| {})
}

/// Integrates from `t0` to `t1`, calling `observer` with the initial field and
/// the field after every step.
///
/// When `t0` is a multiple of `dt`, times are `g dt` for the global step index
/// `g`, so snapshots of runs with different start times line up exactly.
#[allow(clippy::too_many_arguments)]
pub fn evolve_observed(
    initial: &Field,
    reaction: &dyn Reaction,
    kernel: &Kernel,
    t0: f64,
    t1: f64,
    dt: f64,
    policy: &WindowPolicy,
    observer: &mut dyn FnMut(&Field),
) -> Result<Trajectory> {
    check_step(reaction, dt)?;
    check_spacing(initial, kernel)?;
    if !(t1 > t0) {
        return Err(Error::InvalidArgument(format!(
            "final time {t1} must exceed initial time {t0}"
        )));
    }
    if policy.substeps == 0 {
        return Err(Error::InvalidArgument("substeps must be positive".into()));
    }
    let h = initial.spacing;
    let n = initial.len();
    let closure = policy.closure;
    let front = initial.front;
    let reach = 2 * kernel.half_cells();
    let ratio = t0 / dt;
    let aligned = ((ratio - ratio.round()).abs() < 1e-9).then(|| ratio.round() as i64);
    let nsteps = (((t1 - t0) / dt) - 1e-9).ceil().max(1.0) as usize;

    let mut rhs = Rhs {
        kernel,
        reaction,
        closure,
        padded: Vec::with_capacity(n + reach),
    };
    let mut rk = Rk4::new(n);
    let mut u = initial.values.clone();
    let mut offset = initial.offset;
    let mut f0 = vec![0.0; n];
    let mut u1 = vec![0.0; n];
    let mut f1 = vec![0.0; n];
    let mut scratch = Vec::new();

    let mut traj = Trajectory {
        t0,
        t1,
        dt,
        closure,
        snapshots: Vec::new(),
        records: Vec::new(),
        shifts: Vec::new(),
        paths: policy
            .levels
            .iter()
            .map(|&l| InterfacePath::new(PathKind::Level, l))
            .collect(),
        levels: policy.levels.clone(),
    };

    let t_start = step_time(aligned, t0, t1, dt, 0, nsteps);
    let snapshot_due = |k: usize| -> bool {
        if k == 0 || k == nsteps {
            return true;
        }
        policy.snapshot_stride > 0
            && match aligned {
                Some(g0) => (g0 + k as i64).rem_euclid(policy.snapshot_stride as i64) == 0,
                None => k.is_multiple_of(policy.snapshot_stride),
            }
    };

    let make_field = |values: &[f64], offset: i64, t: f64| -> Result<Field> {
        let mut f = Field::new(offset, h, t, values.to_vec())?;
        f.front = front;
        Ok(f)
    };

    let record = |traj: &mut Trajectory, values: &[f64], offset: i64, t: f64| {
        let sup_slope = values
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0, f64::max)
            / h;
        traj.records.push(StepRecord {
            time: t,
            offset,
            sup_slope,
            mass: mass(values, offset, h),
        });
    };

    check_values(&mut u, offset, h, t_start)?;
    rhs.eval(t_start, &u, &mut f0);
    for (p, &l) in traj.paths.iter_mut().zip(&policy.levels) {
        if let Some(x) = sup_crossing(&u, offset, h, closure, l) {
            p.push(t_start, x);
        }
    }
    record(&mut traj, &u, offset, t_start);
    let first = make_field(&u, offset, t_start)?;
    observer(&first);
    traj.snapshots.push(first);

    for k in 0..nsteps {
        let t = step_time(aligned, t0, t1, dt, k, nsteps);
        let tn = step_time(aligned, t0, t1, dt, k + 1, nsteps);
        let hstep = tn - t;
        rk.advance(&mut rhs, t, hstep, &u, &f0, &mut u1);
        check_values(&mut u1, offset, h, tn)?;
        if front {
            for (i, w) in u1.windows(2).enumerate() {
                if w[1] - w[0] > policy.monotone_tol {
                    return Err(Error::Instability {
                        t: tn,
                        detail: format!(
                            "front profile increases by {:e} at x = {}",
                            w[1] - w[0],
                            (offset + i as i64) as f64 * h
                        ),
                    });
                }
            }
        }
        rhs.eval(tn, &u1, &mut f1);

        if !policy.levels.is_empty() {
            let dense = DenseStep {
                offset,
                spacing: h,
                closure,
                hstep,
                u0: &u,
                f0: &f0,
                u1: &u1,
                f1: &f1,
            };
            for (p, &l) in traj.paths.iter_mut().zip(&policy.levels) {
                let band = match (last_at_or_above(&u, l), last_at_or_above(&u1, l)) {
                    (Some(a), Some(b)) => {
                        Some((a.min(b).saturating_sub(2), (a.max(b) + 3).min(n - 1)))
                    }
                    _ => None,
                };
                for j in 1..=policy.substeps {
                    let tau = j as f64 / policy.substeps as f64;
                    let ts = if j == policy.substeps { tn } else { t + tau * hstep };
                    let x = if j == policy.substeps {
                        sup_crossing(&u1, offset, h, closure, l)
                    } else {
                        dense.crossing(tau, l, band, &mut scratch)
                    };
                    if let Some(x) = x {
                        p.push(ts, x);
                    }
                }
            }
        }

        std::mem::swap(&mut u, &mut u1);
        std::mem::swap(&mut f0, &mut f1);

        let tracked = sup_crossing(&u, offset, h, closure, policy.track_level);
        if policy.recenter {
            if let Some(x) = tracked {
                let target = (x / h).round() as i64;
                let center = offset + (n / 2) as i64;
                if (target - center).unsigned_abs() as usize > policy.margin {
                    let new_offset = target - (n / 2) as i64;
                    let old = Field {
                        offset,
                        spacing: h,
                        time: tn,
                        values: u.clone(),
                        front,
                    };
                    for (i, v) in u.iter_mut().enumerate() {
                        *v = old.at_global(new_offset + i as i64, closure);
                    }
                    traj.shifts.push(WindowShift {
                        time: tn,
                        cells: new_offset - offset,
                    });
                    offset = new_offset;
                    rhs.eval(tn, &u, &mut f0);
                }
            }
        }
        if let Some(x) = tracked {
            let left = offset as f64 * h;
            let right = (offset + n as i64 - 1) as f64 * h;
            let guard = 2.0 * kernel.half_width();
            if x - left < guard || right - x < guard {
                return Err(Error::WindowExhausted {
                    t: tn,
                    detail: format!(
                        "crossing of {} at x = {x} within {guard} of the window [{left}, {right}]",
                        policy.track_level
                    ),
                });
            }
        }

        record(&mut traj, &u, offset, tn);
        let due = snapshot_due(k + 1);
        let field = make_field(&u, offset, tn)?;
        observer(&field);
        if due {
            traj.snapshots.push(field);
        }
    }
    Ok(traj)
}

/// Outcome of a comparison between trajectories or against an envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub max_violation: f64,
    /// `(t, x)` of the largest violation, if any exceeded the tolerance.
    pub worst: Option<(f64, f64)>,
    pub samples: usize,
    pub tol: f64,
    pub passed: bool,
}

impl ComparisonReport {
    fn new(tol: f64) -> Self {
        ComparisonReport {
            max_violation: 0.0,
            worst: None,
            samples: 0,
            tol,
            passed: true,
        }
    }

    fn observe(&mut self, violation: f64, t: f64, x: f64) {
        self.samples += 1;
        if violation > self.max_violation {
            self.max_violation = violation;
            if violation > self.tol {
                self.worst = Some((t, x));
            }
        }
    }

    fn finish(mut self) -> Self {
        self.passed = self.max_violation <= self.tol;
        self
    }
}

/// `lower <= upper` on every pair of snapshots with equal times, over the union
/// of both windows.
pub fn comparison_check(lower: &Trajectory, upper: &Trajectory, tol: f64) -> Result<ComparisonReport> {
    let (a, b) = match (lower.snapshots.first(), upper.snapshots.first()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::InvalidArgument("empty trajectory".into())),
    };
    if (a.time - b.time).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "initial times differ: {} and {}",
            a.time, b.time
        )));
    }
    let initial = ordering_violation(a, lower.closure, b, upper.closure);
    if initial.0 > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "initial data are not ordered: excess {:e} at x = {}",
            initial.0, initial.1
        )));
    }
    let mut report = ComparisonReport::new(tol);
    for f in &lower.snapshots {
        if let Some(g) = upper.snapshot_at(f.time) {
            let (v, x) = ordering_violation(f, lower.closure, g, upper.closure);
            report.observe(v, f.time, x);
        }
    }
    Ok(report.finish())
}

fn ordering_violation(lo: &Field, lc: Closure, hi: &Field, hc: Closure) -> (f64, f64) {
    let start = lo.offset.min(hi.offset);
    let end = lo.end().max(hi.end());
    let mut worst = (0.0, f64::NAN);
    for k in start..end {
        let v = lo.at_global(k, lc) - hi.at_global(k, hc);
        if v > worst.0 {
            worst = (v, k as f64 * lo.spacing);
        }
    }
    worst
}

/// Which side of a moving boundary a check applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `x <= b(t)`.
    Left,
    /// `x >= b(t)`.
    Right,
}

/// Whether the envelope bounds the solution from below or above.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Lower,
    Upper,
}

/// Checks `u >= envelope` (or `u <= envelope`) on the snapshots, for window
/// points on the given side of `boundary(t)`. Snapshots where the boundary is
/// undefined are skipped.
pub fn moving_boundary_comparison_check(
    traj: &Trajectory,
    boundary: &dyn Fn(f64) -> Option<f64>,
    envelope: &dyn Fn(f64, f64) -> f64,
    side: Side,
    bound: Bound,
    tol: f64,
) -> ComparisonReport {
    let mut report = ComparisonReport::new(tol);
    for f in &traj.snapshots {
        let Some(b) = boundary(f.time) else { continue };
        for (i, &u) in f.values.iter().enumerate() {
            let x = f.x(i);
            let inside = match side {
                Side::Left => x <= b,
                Side::Right => x >= b,
            };
            if !inside {
                continue;
            }
            let e = envelope(f.time, x);
            let v = match bound {
                Bound::Lower => e - u,
                Bound::Upper => u - e,
            };
            report.observe(v, f.time, x);
        }
    }
    report.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{make_kernel, KernelFamily};
    use crate::nonlinearity::make_default_model;

    fn setup() -> (Kernel, crate::nonlinearity::IgnitionModel) {
        (
            make_kernel(KernelFamily::Gaussian { sigma: 1.0 }, 0.05, 1e-12).unwrap(),
            make_default_model(0.25, 0.8, 1.0, 2.0, 1.0).unwrap(),
        )
    }

    #[test]
    fn rejects_large_step() {
        let (k, m) = setup();
        let f = Field::centered(0.0, 400, 0.05, 0.0, |x| if x < 0.0 { 1.0 } else { 0.0 }).unwrap();
        let err = step(&f, &m, &k, 0.1, Closure::default()).unwrap_err();
        assert!(err.to_string().contains("dt ≤ 0.2/(1+L_f)"));
    }

    #[test]
    fn zero_stays_zero() {
        let (k, m) = setup();
        let f = Field::centered(0.0, 200, 0.05, 0.0, |_| 0.0).unwrap();
        let policy = WindowPolicy {
            closure: Closure::constant(0.0),
            recenter: false,
            ..Default::default()
        };
        let traj = evolve(&f, &m, &k, 0.0, 10.0, 0.05, &policy).unwrap();
        assert!(traj.last().values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn snapshots_align_on_global_steps() {
        let (k, m) = setup();
        let f = Field::centered(0.0, 400, 0.05, -2.0, |x| 1.0 / (1.0 + (4.0 * x).exp()))
            .unwrap()
            .as_front();
        let policy = WindowPolicy {
            snapshot_stride: 20,
            track_level: 0.25,
            ..Default::default()
        };
        let traj = evolve(&f, &m, &k, -2.0, 1.0, 0.05, &policy).unwrap();
        let times: Vec<f64> = traj.snapshots.iter().map(|s| s.time).collect();
        assert_eq!(times, vec![-2.0, -1.0, 0.0, 1.0]);
    }
}

//! Ignition nonlinearities oscillating between two envelopes, and the
//! constants derived from the envelopes.

use crate::error::{Error, Result};

/// A reaction term `f(t, u)`.
pub trait Reaction: Sync {
    fn rate(&self, t: f64, u: f64) -> f64;

    /// Upper bound for `|f_u|` on `[0, 1]`, uniform in time.
    fn lipschitz(&self) -> f64;

    /// Largest stable step `0.2 / (1 + L_f)` for the explicit integrator.
    fn dt_max(&self) -> f64 {
        0.2 / (1.0 + self.lipschitz())
    }
}

/// Time dependence of the interpolation weight `m(t)` between the envelopes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Modulation {
    /// `m(t) = (1 + sin(omega t)) / 2`.
    Sine { omega: f64 },
    Constant(f64),
}

impl Modulation {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Modulation::Sine { omega } => 0.5 * (1.0 + (omega * t).sin()),
            Modulation::Constant(m) => m,
        }
    }

    pub fn derivative_bound(&self) -> f64 {
        match *self {
            Modulation::Sine { omega } => 0.5 * omega.abs(),
            Modulation::Constant(_) => 0.0,
        }
    }
}

/// Sampled derivative bounds of `f` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeBounds {
    /// `sup |f_u|`.
    pub lipschitz_u: f64,
    /// `sup |f_t|`.
    pub sup_t: f64,
}

/// `f = f_min + m(t) (f_max - f_min)` with
/// `f_min = a_min (u - theta)^2 (1 - u)` and `f_max = a_max (u - theta)(1 - u)` on `(theta, 1)`,
/// zero below `theta` and `-(u - 1) u` above one.
#[derive(Debug, Clone, PartialEq)]
pub struct IgnitionModel {
    pub theta: f64,
    pub theta_tilde: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub modulation: Modulation,
    bounds: DerivativeBounds,
}

const SAMPLES: usize = 10_000;

fn invalid(invariant: &'static str, detail: String) -> Error {
    Error::ModelInvalid { invariant, detail }
}

/// Builds and validates the reference ignition family with sinusoidal modulation.
pub fn make_default_model(
    theta: f64,
    theta_tilde: f64,
    a_min: f64,
    a_max: f64,
    omega: f64,
) -> Result<IgnitionModel> {
    IgnitionModel::new(theta, theta_tilde, a_min, a_max, Modulation::Sine { omega })
}

impl IgnitionModel {
    pub fn new(
        theta: f64,
        theta_tilde: f64,
        a_min: f64,
        a_max: f64,
        modulation: Modulation,
    ) -> Result<Self> {
        if !(theta > 0.0 && theta < theta_tilde && theta_tilde < 1.0) {
            return Err(invalid(
                "0 < theta < theta_tilde < 1",
                format!("theta = {theta}, theta_tilde = {theta_tilde}"),
            ));
        }
        if !(a_min > 0.0 && a_max > 0.0 && a_min.is_finite() && a_max.is_finite()) {
            return Err(invalid(
                "positive amplitudes",
                format!("a_min = {a_min}, a_max = {a_max}"),
            ));
        }
        match modulation {
            Modulation::Sine { omega } if !omega.is_finite() => {
                return Err(invalid("finite frequency", format!("omega = {omega}")))
            }
            Modulation::Constant(m) if !(0.0..=1.0).contains(&m) => {
                return Err(invalid("0 <= m <= 1", format!("m = {m}")))
            }
            _ => {}
        }
        let mut model = IgnitionModel {
            theta,
            theta_tilde,
            a_min,
            a_max,
            modulation,
            bounds: DerivativeBounds {
                lipschitz_u: 0.0,
                sup_t: 0.0,
            },
        };
        model.validate()?;
        model.bounds = model.sample_bounds();
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        for k in 0..=SAMPLES {
            let u = k as f64 / SAMPLES as f64;
            let (lo, hi) = (self.f_min(u), self.f_max(u));
            if lo > hi + 1e-15 {
                return Err(invalid("f_min <= f_max", format!("at u = {u}: {lo} > {hi}")));
            }
            if u <= self.theta && (lo != 0.0 || hi != 0.0) {
                return Err(invalid("f = 0 on [0, theta]", format!("at u = {u}")));
            }
            if u > self.theta && u < 1.0 && lo <= 0.0 {
                return Err(invalid("0 < f_min on (theta, 1)", format!("at u = {u}")));
            }
            if u >= self.theta_tilde && (self.f_min_prime(u) > 1e-12 || self.f_max_prime(u) > 1e-12) {
                return Err(invalid(
                    "f(t, .) nonincreasing on [theta_tilde, 1]",
                    format!("envelope slope is positive at u = {u}"),
                ));
            }
        }
        for k in 1..=SAMPLES {
            let u = 1.0 + k as f64 / SAMPLES as f64;
            if self.f_min(u) >= 0.0 || self.f_max(u) >= 0.0 {
                return Err(invalid("f < 0 on (1, 2]", format!("at u = {u}")));
            }
        }
        if !(self.f_min_prime(1.0) < 0.0 && self.f_max_prime(1.0) < 0.0) {
            return Err(invalid("f_u(t, 1) < 0", String::new()));
        }
        Ok(())
    }

    fn sample_bounds(&self) -> DerivativeBounds {
        let mut lip: f64 = 0.0;
        let mut gap: f64 = 0.0;
        for k in 0..=SAMPLES {
            let u = k as f64 / SAMPLES as f64;
            // f_u is affine in m, so the extremes sit at m = 0 and m = 1.
            lip = lip
                .max(self.f_min_prime(u).abs())
                .max(self.f_max_prime(u).abs());
            gap = gap.max(self.f_max(u) - self.f_min(u));
        }
        DerivativeBounds {
            lipschitz_u: lip,
            sup_t: self.modulation.derivative_bound() * gap,
        }
    }

    pub fn bounds(&self) -> DerivativeBounds {
        self.bounds
    }

    pub fn f_min(&self, u: f64) -> f64 {
        if u <= self.theta {
            0.0
        } else if u >= 1.0 {
            -(u - 1.0) * u
        } else {
            let d = u - self.theta;
            self.a_min * d * d * (1.0 - u)
        }
    }

    pub fn f_max(&self, u: f64) -> f64 {
        if u <= self.theta {
            0.0
        } else if u >= 1.0 {
            -(u - 1.0) * u
        } else {
            self.a_max * (u - self.theta) * (1.0 - u)
        }
    }

    pub fn f_min_prime(&self, u: f64) -> f64 {
        if u < self.theta {
            0.0
        } else if u > 1.0 {
            1.0 - 2.0 * u
        } else {
            let d = u - self.theta;
            self.a_min * (2.0 * d * (1.0 - u) - d * d)
        }
    }

    pub fn f_max_prime(&self, u: f64) -> f64 {
        if u < self.theta {
            0.0
        } else if u > 1.0 {
            1.0 - 2.0 * u
        } else {
            self.a_max * (1.0 + self.theta - 2.0 * u)
        }
    }

    /// The same envelopes with a different modulation.
    pub fn with_modulation(&self, modulation: Modulation) -> Result<Self> {
        IgnitionModel::new(
            self.theta,
            self.theta_tilde,
            self.a_min,
            self.a_max,
            modulation,
        )
    }

    /// Homogeneous model `f = f_min`.
    pub fn lower_envelope(&self) -> Self {
        let mut m = self.clone();
        m.modulation = Modulation::Constant(0.0);
        m.bounds.sup_t = 0.0;
        m
    }

    /// Homogeneous model `f = f_max`.
    pub fn upper_envelope(&self) -> Self {
        let mut m = self.clone();
        m.modulation = Modulation::Constant(1.0);
        m.bounds.sup_t = 0.0;
        m
    }
}

impl Reaction for IgnitionModel {
    fn rate(&self, t: f64, u: f64) -> f64 {
        let lo = self.f_min(u);
        match self.modulation {
            Modulation::Constant(m) if m == 0.0 => lo,
            _ => lo + self.modulation.value(t) * (self.f_max(u) - lo),
        }
    }

    fn lipschitz(&self) -> f64 {
        self.bounds.lipschitz_u
    }
}

/// Golden-section maximisation of a unimodal `g` on `[a, b]`.
fn golden_max(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    while b - a > tol {
        if gc >= gd {
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

/// `kappa0 = sup_{0 < u <= 1} f_max(u) / u`, from a grid scan refined by golden section.
pub fn kappa0(model: &IgnitionModel) -> f64 {
    let n = 1000;
    let ratio = |u: f64| model.f_max(u) / u;
    let best = (1..n)
        .max_by(|&i, &j| {
            ratio(i as f64 / n as f64).total_cmp(&ratio(j as f64 / n as f64))
        })
        .unwrap_or(1);
    let a = (best - 1) as f64 / n as f64;
    let b = (best + 1) as f64 / n as f64;
    let u = golden_max(ratio, a.max(1e-12), b, 1e-12);
    ratio(u).max(ratio(best as f64 / n as f64))
}

/// Smallest root in `(theta, 1)` of `f_max(u) = kappa u`.
pub fn lambda_star(model: &IgnitionModel, kappa: f64) -> Result<f64> {
    let k0 = kappa0(model);
    if !(kappa > 0.0 && kappa < k0) {
        return Err(Error::NoCrossing(format!(
            "kappa = {kappa} must lie in (0, kappa0 = {k0})"
        )));
    }
    let g = |u: f64| model.f_max(u) - kappa * u;
    let n = 10_000;
    let (a, b) = (model.theta, 1.0);
    let mut prev = a;
    for i in 1..=n {
        let u = a + (b - a) * i as f64 / n as f64;
        if g(u) >= 0.0 {
            let (mut lo, mut hi) = (prev, u);
            while hi - lo > 1e-13 {
                let mid = 0.5 * (lo + hi);
                if g(mid) >= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(hi);
        }
        prev = u;
    }
    Err(Error::NoCrossing(format!(
        "f_max(u) never reaches {kappa} u on (theta, 1)"
    )))
}

/// `theta_* = min((theta_tilde + 1)/2, lambda_*)` and
/// `beta = min_{[theta_*, 1)} f_min(u) / (1 - u)`.
pub fn theta_star_beta(model: &IgnitionModel, lambda_star: f64) -> Result<(f64, f64)> {
    let theta_star = (0.5 * (model.theta_tilde + 1.0)).min(lambda_star);
    if theta_star <= model.theta {
        return Err(invalid(
            "theta_* > theta",
            format!("theta_* = {theta_star}"),
        ));
    }
    let n = 1000;
    let mut beta = -model.f_min_prime(1.0);
    for i in 0..n {
        let u = theta_star + (1.0 - theta_star) * i as f64 / n as f64;
        beta = beta.min(model.f_min(u) / (1.0 - u));
    }
    if !(beta > 0.0) {
        return Err(invalid("beta > 0", format!("beta = {beta}")));
    }
    Ok((theta_star, beta))
}

/// Bistable minorant of `f_min`:
/// `-depth u (theta - u)^3` on `[0, theta]` and `scale f_min(u) (u - theta)/(1 - theta)` above.
/// Both branches vanish to third order at `theta`, so `f_B` is twice differentiable.
#[derive(Debug, Clone, PartialEq)]
pub struct BistableMinorant {
    pub theta: f64,
    pub depth: f64,
    pub scale: f64,
    envelope: IgnitionModel,
    lipschitz: f64,
}

impl BistableMinorant {
    pub fn value(&self, u: f64) -> f64 {
        let th = self.theta;
        if u < th {
            let d = u - th;
            self.depth * u * d * d * d
        } else {
            self.scale * self.envelope.f_min(u) * (u - th) / (1.0 - th)
        }
    }

    pub fn derivative(&self, u: f64) -> f64 {
        let th = self.theta;
        if u < th {
            let d = u - th;
            self.depth * (d * d * d + 3.0 * u * d * d)
        } else {
            self.scale
                * (self.envelope.f_min_prime(u) * (u - th) + self.envelope.f_min(u))
                / (1.0 - th)
        }
    }

    /// `∫_0^1 f_B` in closed form.
    pub fn integral(&self) -> f64 {
        let th = self.theta;
        let k = self.scale * self.envelope.a_min / (1.0 - th);
        (k * (1.0 - th).powi(5) - self.depth * th.powi(5)) / 20.0
    }
}

impl Reaction for BistableMinorant {
    fn rate(&self, _t: f64, u: f64) -> f64 {
        self.value(u)
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

/// Builds the bistable minorant, halving the right-branch scale until every
/// sampled condition holds.
pub fn make_bistable_minorant(model: &IgnitionModel, depth: f64) -> Result<BistableMinorant> {
    if !(depth > 0.0 && depth.is_finite()) {
        return Err(invalid("depth > 0", format!("depth = {depth}")));
    }
    let mut scale = 1.0;
    for _ in 0..40 {
        let mut fb = BistableMinorant {
            theta: model.theta,
            depth,
            scale,
            envelope: model.lower_envelope(),
            lipschitz: 0.0,
        };
        let mut retry = false;
        let mut lip: f64 = 0.0;
        for k in 0..=SAMPLES {
            let u = k as f64 / SAMPLES as f64;
            let d = fb.derivative(u);
            lip = lip.max(d.abs());
            if fb.value(u) > model.f_min(u) + 1e-15 || 1.0 + d <= 0.0 {
                if u > model.theta {
                    retry = true;
                    break;
                }
                return Err(invalid(
                    "f_B <= f_min and 1 + f_B' > 0",
                    format!("left branch fails at u = {u}; reduce depth"),
                ));
            }
        }
        if retry {
            scale *= 0.5;
            continue;
        }
        if !(fb.derivative(0.0) < 0.0 && fb.derivative(1.0) < 0.0) {
            return Err(invalid("f_B'(0) < 0 and f_B'(1) < 0", String::new()));
        }
        if !(fb.integral() > 0.0) {
            return Err(invalid(
                "∫ f_B > 0",
                format!("integral = {:e}; reduce depth", fb.integral()),
            ));
        }
        fb.lipschitz = lip;
        return Ok(fb);
    }
    Err(invalid("f_B <= f_min", "scale underflow".into()))
}

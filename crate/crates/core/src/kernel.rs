//! Discretised dispersal kernels, their exponential moments and the
//! kappa-speeds built from them.

use std::f64::consts::SQRT_2;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::grid::{Closure, Field};

/// Largest exponent accepted by the moment routines.
const MAX_EXPONENT: f64 = 700.0;

/// Admissible kernel families. Both are even, nonnegative and of unit mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelFamily {
    Gaussian { sigma: f64 },
    /// `exp(-1 / (1 - (x/R)^2))` on `|x| < R`, normalised.
    Bump { radius: f64 },
}

impl KernelFamily {
    pub fn parameter(&self) -> f64 {
        match *self {
            KernelFamily::Gaussian { sigma } => sigma,
            KernelFamily::Bump { radius } => radius,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelFamily::Gaussian { .. } => "gaussian",
            KernelFamily::Bump { .. } => "bump",
        }
    }

    /// Normalised continuous density.
    pub fn density(&self, x: f64) -> f64 {
        match *self {
            KernelFamily::Gaussian { sigma } => {
                let z = x / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
            KernelFamily::Bump { radius } => {
                let z = x / radius;
                if z.abs() >= 1.0 {
                    0.0
                } else {
                    (-1.0 / (1.0 - z * z)).exp() / (radius * bump_mass())
                }
            }
        }
    }

    /// Continuous exponential moment, where a closed form exists.
    pub fn continuous_moment(&self, lambda: f64) -> Option<f64> {
        match *self {
            KernelFamily::Gaussian { sigma } => Some((0.5 * lambda * lambda * sigma * sigma).exp()),
            KernelFamily::Bump { .. } => None,
        }
    }
}

/// `∫_{-1}^{1} exp(-1/(1-z^2)) dz`. The integrand is flat at both ends, so the
/// trapezoid rule converges faster than any power of the step.
fn bump_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| {
        let n = 20_000;
        let dz = 2.0 / n as f64;
        (1..n)
            .map(|i| {
                let z = -1.0 + i as f64 * dz;
                (-1.0 / (1.0 - z * z)).exp()
            })
            .sum::<f64>()
            * dz
    })
}

/// Kappa-speed data: the minimiser `lambda` of `(M(l) - 1 + kappa)/l` and the minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaSpeed {
    pub kappa: f64,
    pub lambda: f64,
    pub speed: f64,
}

/// Kernel weights on the lattice `jh`, `|j| <= m`, renormalised to unit discrete mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    family: KernelFamily,
    spacing: f64,
    half_cells: usize,
    /// `h * w_j` stored from `j = -m` to `j = m`.
    scaled: Vec<f64>,
}

/// Discretises `family` on spacing `spacing`, truncating the tail where its
/// mass drops below `tail_tolerance`.
pub fn make_kernel(family: KernelFamily, spacing: f64, tail_tolerance: f64) -> Result<Kernel> {
    let p = family.parameter();
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "kernel parameter must be positive, got {p}"
        )));
    }
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "spacing must be positive, got {spacing}"
        )));
    }
    if !(tail_tolerance > 0.0 && tail_tolerance <= 1e-6) {
        return Err(Error::InvalidArgument(format!(
            "tail tolerance must lie in (0, 1e-6], got {tail_tolerance}"
        )));
    }
    if spacing > p / 4.0 {
        return Err(Error::Resolution {
            spacing,
            limit: p / 4.0,
        });
    }
    let half_cells = match family {
        KernelFamily::Gaussian { sigma } => {
            let mut m = 1usize;
            while libm::erfc(m as f64 * spacing / (sigma * SQRT_2)) > tail_tolerance {
                m += 1;
            }
            m
        }
        KernelFamily::Bump { radius } => (radius / spacing - 1e-9).ceil() as usize,
    };
    let raw: Vec<f64> = (0..=half_cells)
        .map(|j| family.density(j as f64 * spacing))
        .collect();
    let mass = spacing * (raw[0] + 2.0 * raw[1..].iter().sum::<f64>());
    let mut scaled = Vec::with_capacity(2 * half_cells + 1);
    for j in (1..=half_cells).rev() {
        scaled.push(spacing * raw[j] / mass);
    }
    for w in raw.iter() {
        scaled.push(spacing * w / mass);
    }
    Ok(Kernel {
        family,
        spacing,
        half_cells,
        scaled,
    })
}

impl Kernel {
    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Number of cells `m` on each side of the origin.
    pub fn half_cells(&self) -> usize {
        self.half_cells
    }

    /// Truncation half-width `H = m h`.
    pub fn half_width(&self) -> f64 {
        self.half_cells as f64 * self.spacing
    }

    /// Density weight `w_j`.
    pub fn weight(&self, j: i64) -> f64 {
        let m = self.half_cells as i64;
        if j.abs() > m {
            0.0
        } else {
            self.scaled[(j + m) as usize] / self.spacing
        }
    }

    /// Quadrature weights `h w_j`, `j = -m..=m`.
    pub fn scaled_weights(&self) -> &[f64] {
        &self.scaled
    }

    /// Discrete mass `h Σ w_j`.
    pub fn mass(&self) -> f64 {
        self.scaled.iter().sum()
    }

    fn check_exponent(&self, lambda: f64) -> Result<()> {
        if !lambda.is_finite() || lambda.abs() * self.half_width() > MAX_EXPONENT {
            return Err(Error::Range(format!(
                "|lambda| * H = {} exceeds {MAX_EXPONENT}",
                lambda.abs() * self.half_width()
            )));
        }
        Ok(())
    }

    fn one_sided(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let m = self.half_cells;
        (1..=m).map(move |j| (j as f64 * self.spacing, self.scaled[m + j]))
    }

    /// `M(lambda) = h Σ w_j e^{lambda j h}`.
    pub fn exponential_moment(&self, lambda: f64) -> Result<f64> {
        Ok(1.0 + self.moment_minus_one(lambda)?)
    }

    /// `M(lambda) - 1`, computed without cancellation for small `lambda`.
    pub fn moment_minus_one(&self, lambda: f64) -> Result<f64> {
        self.check_exponent(lambda)?;
        let mut s = 0.0;
        for (x, hw) in self.one_sided() {
            let half = (0.5 * lambda * x).sinh();
            s += 4.0 * hw * half * half;
        }
        // The discrete mass is one up to rounding; keep that rounding visible.
        Ok(s + (self.mass() - 1.0))
    }

    /// `M'(lambda) = h Σ (j h) w_j e^{lambda j h}`.
    pub fn first_moment_weighted(&self, lambda: f64) -> Result<f64> {
        self.check_exponent(lambda)?;
        Ok(self
            .one_sided()
            .map(|(x, hw)| 2.0 * hw * x * (lambda * x).sinh())
            .sum())
    }

    /// `M''(lambda) = h Σ (j h)^2 w_j e^{lambda j h}`.
    pub fn second_moment_weighted(&self, lambda: f64) -> Result<f64> {
        self.check_exponent(lambda)?;
        Ok(self
            .one_sided()
            .map(|(x, hw)| 2.0 * hw * x * x * (lambda * x).cosh())
            .sum())
    }

    /// `(J * u)` on the field's window, with `closure` supplying values outside it.
    pub fn convolve(&self, field: &Field, closure: Closure) -> Result<Field> {
        if (field.spacing - self.spacing).abs() > 1e-12 * self.spacing {
            return Err(Error::InvalidArgument(format!(
                "field spacing {} differs from kernel spacing {}",
                field.spacing, self.spacing
            )));
        }
        let mut padded = Vec::new();
        self.pad(&field.values, closure, &mut padded);
        let mut out = vec![0.0; field.len()];
        self.convolve_padded(&padded, &mut out);
        let mut res = Field::new(field.offset, field.spacing, field.time, out)?;
        res.front = false;
        Ok(res)
    }

    /// Writes `values` surrounded by `m` closure cells on each side into `buf`.
    pub fn pad(&self, values: &[f64], closure: Closure, buf: &mut Vec<f64>) {
        let m = self.half_cells;
        buf.clear();
        buf.resize(m, closure.left);
        buf.extend_from_slice(values);
        buf.resize(values.len() + 2 * m, closure.right);
    }

    /// Convolution of a padded buffer; `out.len()` must be `padded.len() - 2m`.
    pub fn convolve_padded(&self, padded: &[f64], out: &mut [f64]) {
        let width = self.scaled.len();
        debug_assert_eq!(padded.len(), out.len() + width - 1);
        // Even weights turn the convolution into a correlation.
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(&self.scaled, &padded[i..i + width]);
        }
    }

    /// `g(lambda) = lambda M'(lambda) - M(lambda) + 1`, increasing on `(0, inf)`.
    fn speed_equation(&self, lambda: f64) -> Result<f64> {
        Ok(lambda * self.first_moment_weighted(lambda)? - self.moment_minus_one(lambda)?)
    }

    /// Solves `g(lambda) = kappa` by bisection and returns the kappa-speed.
    pub fn kappa_speed(&self, kappa: f64) -> Result<KappaSpeed> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "kappa must be positive, got {kappa}"
            )));
        }
        let mut lo = 1e-8;
        let mut hi = 1.0;
        while self.speed_equation(hi)? <= kappa {
            lo = hi;
            hi *= 2.0;
            self.check_exponent(hi)?;
        }
        if self.speed_equation(lo)? > kappa {
            hi = lo;
        }
        while hi - lo > 1e-10 * hi {
            let mid = 0.5 * (lo + hi);
            if self.speed_equation(mid)? <= kappa {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let lambda = 0.5 * (lo + hi);
        let speed = (self.moment_minus_one(lambda)? + kappa) / lambda;
        Ok(KappaSpeed {
            kappa,
            lambda,
            speed,
        })
    }

    /// `(M(lambda_kappa) - 1 + kappa0) / lambda_kappa`.
    pub fn tilde_speed(&self, kappa: f64, kappa0: f64) -> Result<f64> {
        if kappa0 < kappa {
            return Err(Error::InvalidArgument(format!(
                "kappa0 = {kappa0} is below kappa = {kappa}"
            )));
        }
        let ks = self.kappa_speed(kappa)?;
        Ok((self.moment_minus_one(ks.lambda)? + kappa0) / ks.lambda)
    }
}

/// Dot product with four independent accumulators so the loop vectorises.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    let mut acc = [0.0f64; 4];
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

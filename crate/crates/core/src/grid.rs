//! Sampled profiles on a global lattice `x_k = k * spacing`.

use crate::error::{Error, Result};

/// Constant states assumed outside a finite window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Closure {
    pub left: f64,
    pub right: f64,
}

impl Default for Closure {
    fn default() -> Self {
        Closure {
            left: 1.0,
            right: 0.0,
        }
    }
}

impl Closure {
    pub fn constant(value: f64) -> Self {
        Closure {
            left: value,
            right: value,
        }
    }
}

/// A field sampled on the window `[offset, offset + len)` of the global lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub offset: i64,
    pub spacing: f64,
    pub time: f64,
    pub values: Vec<f64>,
    /// Set when the field is a front profile and must be nonincreasing.
    pub front: bool,
}

impl Field {
    pub fn new(offset: i64, spacing: f64, time: f64, values: Vec<f64>) -> Result<Self> {
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "spacing must be positive, got {spacing}"
            )));
        }
        if values.is_empty() {
            return Err(Error::InvalidArgument("field has no samples".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite value at index {i}")));
        }
        Ok(Field {
            offset,
            spacing,
            time,
            values,
            front: false,
        })
    }

    /// Samples `f` on `len` lattice points starting at global index `offset`.
    pub fn from_fn(
        offset: i64,
        len: usize,
        spacing: f64,
        time: f64,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let values = (0..len)
            .map(|i| f((offset + i as i64) as f64 * spacing))
            .collect();
        Field::new(offset, spacing, time, values)
    }

    /// A window of `2 * half_width + 1` cells centred on the lattice point nearest `center`.
    pub fn centered(
        center: f64,
        half_width: usize,
        spacing: f64,
        time: f64,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let mid = (center / spacing).round() as i64;
        Field::from_fn(mid - half_width as i64, 2 * half_width + 1, spacing, time, f)
    }

    pub fn as_front(mut self) -> Self {
        self.front = true;
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        (self.offset + i as i64) as f64 * self.spacing
    }

    pub fn left_edge(&self) -> f64 {
        self.x(0)
    }

    pub fn right_edge(&self) -> f64 {
        self.x(self.len() - 1)
    }

    pub fn end(&self) -> i64 {
        self.offset + self.len() as i64
    }

    /// Value at global lattice index `k`, using the closure outside the window.
    pub fn at_global(&self, k: i64, closure: Closure) -> f64 {
        if k < self.offset {
            closure.left
        } else if k >= self.end() {
            closure.right
        } else {
            self.values[(k - self.offset) as usize]
        }
    }

    /// Piecewise-linear value at `x`, using the closure outside the window.
    pub fn interpolate(&self, x: f64, closure: Closure) -> f64 {
        let s = x / self.spacing;
        let k = s.floor();
        let w = s - k;
        let k = k as i64;
        let a = self.at_global(k, closure);
        if w == 0.0 {
            return a;
        }
        let b = self.at_global(k + 1, closure);
        a + w * (b - a)
    }

    /// `sup |u_x|` from one-sided differences inside the window.
    pub fn sup_slope(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0, f64::max)
            / self.spacing
    }

    /// Level crossing `sup{x : u(x) >= lambda}` of the piecewise-linear interpolant.
    pub fn crossing(&self, lambda: f64, closure: Closure) -> Option<f64> {
        sup_crossing(&self.values, self.offset, self.spacing, closure, lambda)
    }

    /// Fails when a value leaves `[-tol, 1 + tol]`.
    pub fn check_range(&self, tol: f64) -> Result<()> {
        for (i, &v) in self.values.iter().enumerate() {
            if v < -tol || v > 1.0 + tol {
                return Err(Error::Instability {
                    t: self.time,
                    detail: format!("value {v:e} at x = {} leaves [0, 1]", self.x(i)),
                });
            }
        }
        Ok(())
    }

    /// Fails when an adjacent increase exceeds `tol`.
    pub fn check_monotone(&self, tol: f64) -> Result<()> {
        for (i, w) in self.values.windows(2).enumerate() {
            if w[1] - w[0] > tol {
                return Err(Error::Instability {
                    t: self.time,
                    detail: format!(
                        "profile increases by {:e} at x = {}",
                        w[1] - w[0],
                        self.x(i)
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Index of the last sample with `v >= lambda`.
pub fn last_at_or_above(values: &[f64], lambda: f64) -> Option<usize> {
    values.iter().rposition(|&v| v >= lambda)
}

/// `sup{x : u(x) >= lambda}` for samples at global indices `offset..`, with
/// `closure` outside. `None` when the set is empty or unbounded.
pub fn sup_crossing(
    values: &[f64],
    offset: i64,
    spacing: f64,
    closure: Closure,
    lambda: f64,
) -> Option<f64> {
    if closure.right >= lambda {
        return None;
    }
    match last_at_or_above(values, lambda) {
        Some(i) => {
            let v = values[i];
            let next = values.get(i + 1).copied().unwrap_or(closure.right);
            Some((offset + i as i64) as f64 * spacing + spacing * (v - lambda) / (v - next))
        }
        None if closure.left >= lambda => {
            let v = closure.left;
            Some((offset - 1) as f64 * spacing + spacing * (v - lambda) / (v - values[0]))
        }
        None => None,
    }
}

/// Heaviside-type step `1` for `x < at`, `0` otherwise.
pub fn step_profile(at: f64) -> impl Fn(f64) -> f64 {
    move |x| if x < at { 1.0 } else { 0.0 }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closure_applies_outside_window() {
        let f = Field::from_fn(10, 5, 0.5, 0.0, |x| x).unwrap();
        assert_eq!(f.at_global(9, Closure::default()), 1.0);
        assert_eq!(f.at_global(15, Closure::default()), 0.0);
        assert_eq!(f.at_global(12, Closure::default()), 6.0);
        assert_eq!(f.interpolate(5.25, Closure::default()), 5.25);
    }

    #[test]
    fn crossing_of_a_ramp() {
        let f = Field::from_fn(-10, 21, 0.1, 0.0, |x| (0.5 - x).clamp(0.0, 1.0)).unwrap();
        let x = f.crossing(0.25, Closure::default()).unwrap();
        assert!((x - 0.25).abs() < 1e-12);
        let all_one = Field::from_fn(0, 5, 0.1, 0.0, |_| 1.0).unwrap();
        assert!((all_one.crossing(0.5, Closure::default()).unwrap() - 0.45).abs() < 1e-12);
        let zero = Field::from_fn(0, 5, 0.1, 0.0, |_| 0.0).unwrap();
        assert!(zero.crossing(0.5, Closure::constant(0.0)).is_none());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(Field::new(0, 0.1, 0.0, vec![0.0, f64::NAN]).is_err());
        assert!(Field::new(0, 0.0, 0.0, vec![0.0]).is_err());
    }

    #[test]
    fn monotone_check_flags_increase() {
        let f = Field::new(0, 0.1, 0.0, vec![1.0, 0.5, 0.6]).unwrap();
        assert!(f.check_monotone(1e-12).is_err());
        assert!(f.check_monotone(0.2).is_ok());
    }
}

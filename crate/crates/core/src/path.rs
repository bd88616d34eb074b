//! Time series of interface positions.

use crate::error::{Error, Result};

/// What an interface path locates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PathKind {
    /// Crossing of a level; the parameter is the level.
    #[default]
    Level,
    /// Exponential envelope location; the parameter is the exponent.
    Envelope,
    /// The smoothed interface built from hitting times.
    Modified,
    /// Lower shifted envelope; the parameter is the downward shift.
    ShiftedLower,
    /// Upper shifted envelope; the parameter is the upward shift.
    ShiftedUpper,
}

impl PathKind {
    pub fn name(&self) -> &'static str {
        match self {
            PathKind::Level => "level",
            PathKind::Envelope => "envelope",
            PathKind::Modified => "modified",
            PathKind::ShiftedLower => "shifted_lower",
            PathKind::ShiftedUpper => "shifted_upper",
        }
    }
}

/// Samples `(t_k, X(t_k))` of an interface, with strictly increasing times.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InterfacePath {
    pub kind: PathKind,
    pub parameter: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl InterfacePath {
    pub fn new(kind: PathKind, parameter: f64) -> Self {
        InterfacePath {
            kind,
            parameter,
            times: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn from_samples(kind: PathKind, parameter: f64, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("times must increase strictly".into()));
        }
        Ok(InterfacePath {
            kind,
            parameter,
            times,
            values,
        })
    }

    /// Appends a sample, dropping it when its time does not advance.
    pub fn push(&mut self, t: f64, x: f64) {
        if self.times.last().is_none_or(|&last| t > last) {
            self.times.push(t);
            self.values.push(x);
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Largest gap between consecutive sample times.
    pub fn max_step(&self) -> f64 {
        self.times
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Linear interpolation; `None` outside the sampled range.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        let n = self.times.len();
        if n == 0 || t < self.times[0] || t > self.times[n - 1] {
            return None;
        }
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return Some(self.values[0]);
        }
        let i = k - 1;
        if i == n - 1 || self.times[i] == t {
            return Some(self.values[i]);
        }
        let w = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
        Some(self.values[i] + w * (self.values[i + 1] - self.values[i]))
    }

    /// Samples with `from <= t <= to`.
    pub fn restrict(&self, from: f64, to: f64) -> InterfacePath {
        let mut out = InterfacePath::new(self.kind, self.parameter);
        for (&t, &x) in self.times.iter().zip(&self.values) {
            if t >= from && t <= to {
                out.push(t, x);
            }
        }
        out
    }

    /// Keeps every `k`-th sample, always retaining the last one.
    pub fn decimate(&self, k: usize) -> InterfacePath {
        let mut out = InterfacePath::new(self.kind, self.parameter);
        let n = self.len();
        for i in (0..n).step_by(k.max(1)) {
            out.push(self.times[i], self.values[i]);
        }
        if n > 0 {
            out.push(self.times[n - 1], self.values[n - 1]);
        }
        out
    }

    /// `sup |X - Y|` over the samples of `self` that fall inside `other`'s range.
    pub fn sup_distance(&self, other: &InterfacePath) -> f64 {
        self.times
            .iter()
            .zip(&self.values)
            .filter_map(|(&t, &x)| other.value_at(t).map(|y| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    /// Largest and smallest difference quotient between consecutive samples.
    pub fn slope_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 1..self.len() {
            let q = (self.values[i] - self.values[i - 1]) / (self.times[i] - self.times[i - 1]);
            lo = lo.min(q);
            hi = hi.max(q);
        }
        (lo, hi)
    }

    /// `sup_{t0 <= t} [(t - t0) - (X(t) - X(t0)) / rate]^+`: the lag after which
    /// the path has advanced at least `rate (t - t0)`.
    pub fn propagation_lag(&self, rate: f64) -> f64 {
        let mut min_g = f64::INFINITY;
        let mut lag: f64 = 0.0;
        for (&t, &x) in self.times.iter().zip(&self.values) {
            let g = t - x / rate;
            min_g = min_g.min(g);
            lag = lag.max(g - min_g);
        }
        lag
    }

    /// `sup_{t0 <= t} [X(t) - X(t0) - rate (t - t0)]^+`.
    pub fn advance_excess(&self, rate: f64) -> f64 {
        let mut min_g = f64::INFINITY;
        let mut excess: f64 = 0.0;
        for (&t, &x) in self.times.iter().zip(&self.values) {
            let g = x - rate * t;
            min_g = min_g.min(g);
            excess = excess.max(g - min_g);
        }
        excess
    }

    /// `sup_{|t - t'| <= delta} |X(t) - X(t')|`.
    pub fn oscillation(&self, delta: f64) -> f64 {
        let n = self.len();
        let mut best: f64 = 0.0;
        let mut maxq: std::collections::VecDeque<usize> = Default::default();
        let mut minq: std::collections::VecDeque<usize> = Default::default();
        let mut start = 0;
        for j in 0..n {
            while self.times[j] - self.times[start] > delta + 1e-12 {
                start += 1;
            }
            while maxq.back().is_some_and(|&i| self.values[i] <= self.values[j]) {
                maxq.pop_back();
            }
            maxq.push_back(j);
            while minq.back().is_some_and(|&i| self.values[i] >= self.values[j]) {
                minq.pop_back();
            }
            minq.push_back(j);
            while maxq.front().is_some_and(|&i| i < start) {
                maxq.pop_front();
            }
            while minq.front().is_some_and(|&i| i < start) {
                minq.pop_front();
            }
            let (a, b) = (maxq[0], minq[0]);
            best = best.max(self.values[a] - self.values[b]);
        }
        best
    }

    /// The same samples moved by a constant.
    pub fn shifted(&self, kind: PathKind, by: f64) -> InterfacePath {
        InterfacePath {
            kind,
            parameter: by.abs(),
            times: self.times.clone(),
            values: self.values.iter().map(|v| v + by).collect(),
        }
    }

    /// Least-squares slope of `X` against `t`.
    pub fn mean_speed(&self) -> f64 {
        crate::stats::linear_fit(&self.times, &self.values).slope
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(c: f64) -> InterfacePath {
        let t: Vec<f64> = (0..101).map(|k| k as f64 * 0.1).collect();
        let x = t.iter().map(|t| c * t).collect();
        InterfacePath::from_samples(PathKind::Level, 0.5, t, x).unwrap()
    }

    #[test]
    fn interpolation_and_range() {
        let p = line(2.0);
        assert_eq!(p.value_at(0.05), Some(0.1));
        assert_eq!(p.value_at(10.0), Some(20.0));
        assert_eq!(p.value_at(10.5), None);
    }

    #[test]
    fn lag_and_excess_of_a_line() {
        let p = line(2.0);
        assert!(p.propagation_lag(2.0) < 1e-12);
        assert!((p.propagation_lag(4.0) - 5.0).abs() < 1e-12);
        assert!(p.advance_excess(2.0) < 1e-12);
        assert!((p.advance_excess(1.0) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn oscillation_of_a_line() {
        let p = line(2.0);
        assert!((p.oscillation(1.0) - 2.0).abs() < 1e-9);
        assert!((p.oscillation(0.0)).abs() < 1e-12);
    }
}

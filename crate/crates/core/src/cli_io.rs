//! Scenario files, suite orchestration and CSV export.
//!
//! A scenario is a flat `key = value` text file. Every key has a default, so a
//! file only lists what differs from the reference configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evolution::{comparison_check, evolve, WindowPolicy};
use crate::fronts::{
    check_envelope_placement, envelope_location, run_front, shoot_initial_offset, substeps_for,
    FrontAnalysis, FrontConstants, FrontRun, FrontRunSpec, ShootOptions, ShootResult,
};
use crate::grid::Field;
use crate::kernel::{make_kernel, Kernel, KernelFamily};
use crate::nonlinearity::{
    kappa0, make_bistable_minorant, make_default_model, BistableMinorant, IgnitionModel, Reaction,
};
use crate::path::{InterfacePath, PathKind};
use crate::verify::{
    construct_limit_front, decay_g, decay_setup_for, fitted_front_rates, upper_envelope_check,
    verify_decay, verify_lipschitz, verify_oscillation, verify_width, DecaySetup, LimitFront,
    LimitOptions, VerificationReport,
};
use crate::waves::{solve_wave, WaveKind, WaveOptions, WaveSolution};

const DEFAULTS: &[(&str, &str)] = &[
    ("kernel.family", "gaussian"),
    ("kernel.parameter", "1"),
    ("kernel.spacing", "0.05"),
    ("kernel.tail_tol", "1e-12"),
    ("model.theta", "0.25"),
    ("model.theta_tilde", "0.8"),
    ("model.a_min", "1"),
    ("model.a_max", "2"),
    ("model.omega", "1"),
    ("model.depth", "0.05"),
    ("numerics.dt", "0.05"),
    ("numerics.half_width", "400"),
    ("numerics.snapshot_stride", "20"),
    ("numerics.transient", "auto"),
    ("numerics.horizon", "200"),
    ("numerics.delta_fraction", "0.5"),
    ("wave.tolerance", "1e-3"),
    ("wave.window", "25"),
    ("wave.max_horizon", "500"),
    ("wave.half_width", "1400"),
    ("wave.residual_tol", "1e-4"),
    ("wave.tail_tol", "0.05"),
    ("verify.s_ref", "-10"),
    ("verify.s_ladder", "-10, -20, -40, -80"),
    ("verify.shoot_tol", "1e-6"),
    (
        "verify.levels",
        "0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95",
    ),
    ("verify.eps", "0.05, 0.01"),
    ("verify.deltas", "1, 5"),
    ("verify.tolerance", "1e-8"),
    ("verify.comparison_tol", "1e-9"),
    ("verify.growth", "0.1"),
    ("verify.lipschitz_factor", "10"),
    ("verify.c_hat", "0"),
    ("verify.limit_tol", "1e-3"),
    ("verify.limit_time", "-5, 5"),
    ("verify.limit_space", "10"),
    ("verify.pairs", "20"),
    ("verify.pair_horizon", "50"),
    ("verify.pair_half_width", "400"),
    ("output.dir", "out"),
    ("seed", "1"),
];

/// Validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub kernel_family: KernelFamily,
    pub kernel_spacing: f64,
    pub kernel_tail_tol: f64,
    pub theta: f64,
    pub theta_tilde: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub omega: f64,
    pub depth: f64,
    pub dt: f64,
    pub half_width: usize,
    pub snapshot_stride: usize,
    /// `None` means `5 / c_B`.
    pub transient: Option<f64>,
    pub horizon: f64,
    pub delta_fraction: f64,
    pub wave: WaveOptions,
    pub s_ref: f64,
    pub s_ladder: Vec<f64>,
    pub shoot_tol: f64,
    pub levels: Vec<f64>,
    pub eps: Vec<f64>,
    pub deltas: Vec<f64>,
    pub tolerance: f64,
    pub comparison_tol: f64,
    pub growth: f64,
    pub lipschitz_factor: f64,
    pub c_hat: f64,
    pub limit_tol: f64,
    pub limit_time: (f64, f64),
    pub limit_space: f64,
    pub pairs: usize,
    pub pair_horizon: f64,
    pub pair_half_width: usize,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Effective `key = value` pairs in canonical order.
    pub effective: Vec<(String, String)>,
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

struct Raw {
    values: BTreeMap<String, (String, usize)>,
}

impl Raw {
    fn text(&self, key: &str) -> (String, usize) {
        self.values.get(key).cloned().unwrap_or_else(|| {
            let d = DEFAULTS.iter().find(|(k, _)| *k == key).expect("known key");
            (d.1.to_string(), 0)
        })
    }

    fn float(&self, key: &str) -> Result<f64> {
        let (v, line) = self.text(key);
        let x: f64 = v
            .parse()
            .map_err(|_| parse_error(line, format!("{key}: '{v}' is not a number")))?;
        if !x.is_finite() {
            return Err(parse_error(line, format!("{key}: '{v}' is not finite")));
        }
        Ok(x)
    }

    fn count(&self, key: &str) -> Result<usize> {
        let (v, line) = self.text(key);
        v.parse()
            .map_err(|_| parse_error(line, format!("{key}: '{v}' is not a nonnegative integer")))
    }

    fn list(&self, key: &str) -> Result<Vec<f64>> {
        let (v, line) = self.text(key);
        v.split(',')
            .map(|p| {
                let p = p.trim();
                p.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| parse_error(line, format!("{key}: '{p}' is not a number")))
            })
            .collect()
    }
}

/// Parses scenario text. Unknown and duplicate keys are rejected.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut values: BTreeMap<String, (String, usize)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| parse_error(line, format!("expected 'key = value', found '{content}'")))?;
        let (key, value) = (key.trim(), value.trim());
        if !DEFAULTS.iter().any(|(k, _)| *k == key) {
            return Err(parse_error(line, format!("unknown key '{key}'")));
        }
        if value.is_empty() {
            return Err(parse_error(line, format!("{key}: empty value")));
        }
        if let Some((_, first)) = values.get(key) {
            return Err(parse_error(
                line,
                format!("duplicate key '{key}' (lines {first} and {line})"),
            ));
        }
        values.insert(key.to_string(), (value.to_string(), line));
    }
    let raw = Raw { values };
    let family = match raw.text("kernel.family").0.as_str() {
        "gaussian" => KernelFamily::Gaussian {
            sigma: raw.float("kernel.parameter")?,
        },
        "bump" => KernelFamily::Bump {
            radius: raw.float("kernel.parameter")?,
        },
        other => {
            return Err(parse_error(
                raw.text("kernel.family").1,
                format!("kernel.family: '{other}' is neither 'gaussian' nor 'bump'"),
            ))
        }
    };
    let transient = match raw.text("numerics.transient").0.as_str() {
        "auto" => None,
        _ => Some(raw.float("numerics.transient")?),
    };
    let limit_time = raw.list("verify.limit_time")?;
    if limit_time.len() != 2 {
        return Err(parse_error(
            raw.text("verify.limit_time").1,
            "verify.limit_time needs exactly two values",
        ));
    }
    let scenario = Scenario {
        kernel_family: family,
        kernel_spacing: raw.float("kernel.spacing")?,
        kernel_tail_tol: raw.float("kernel.tail_tol")?,
        theta: raw.float("model.theta")?,
        theta_tilde: raw.float("model.theta_tilde")?,
        a_min: raw.float("model.a_min")?,
        a_max: raw.float("model.a_max")?,
        omega: raw.float("model.omega")?,
        depth: raw.float("model.depth")?,
        dt: raw.float("numerics.dt")?,
        half_width: raw.count("numerics.half_width")?,
        snapshot_stride: raw.count("numerics.snapshot_stride")?,
        transient,
        horizon: raw.float("numerics.horizon")?,
        delta_fraction: raw.float("numerics.delta_fraction")?,
        wave: WaveOptions {
            tolerance: raw.float("wave.tolerance")?,
            window: raw.float("wave.window")?,
            max_horizon: raw.float("wave.max_horizon")?,
            half_width: raw.count("wave.half_width")?,
            residual_tol: raw.float("wave.residual_tol")?,
            tail_tol: raw.float("wave.tail_tol")?,
            ..Default::default()
        },
        s_ref: raw.float("verify.s_ref")?,
        s_ladder: raw.list("verify.s_ladder")?,
        shoot_tol: raw.float("verify.shoot_tol")?,
        levels: raw.list("verify.levels")?,
        eps: raw.list("verify.eps")?,
        deltas: raw.list("verify.deltas")?,
        tolerance: raw.float("verify.tolerance")?,
        comparison_tol: raw.float("verify.comparison_tol")?,
        growth: raw.float("verify.growth")?,
        lipschitz_factor: raw.float("verify.lipschitz_factor")?,
        c_hat: raw.float("verify.c_hat")?,
        limit_tol: raw.float("verify.limit_tol")?,
        limit_time: (limit_time[0], limit_time[1]),
        limit_space: raw.float("verify.limit_space")?,
        pairs: raw.count("verify.pairs")?,
        pair_horizon: raw.float("verify.pair_horizon")?,
        pair_half_width: raw.count("verify.pair_half_width")?,
        output_dir: PathBuf::from(raw.text("output.dir").0),
        seed: raw
            .text("seed")
            .0
            .parse()
            .map_err(|_| parse_error(raw.text("seed").1, "seed: not a nonnegative integer"))?,
        effective: DEFAULTS
            .iter()
            .map(|(k, _)| (k.to_string(), raw.text(k).0))
            .collect(),
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_scenario(&text)
}

impl Default for Scenario {
    fn default() -> Self {
        parse_scenario("").expect("defaults are valid")
    }
}

fn constraint(rule: &str, detail: String) -> Error {
    Error::Constraint(format!("{rule}: {detail}"))
}

impl Scenario {
    pub fn kernel(&self) -> Result<Kernel> {
        make_kernel(self.kernel_family, self.kernel_spacing, self.kernel_tail_tol)
    }

    pub fn model(&self) -> Result<IgnitionModel> {
        make_default_model(self.theta, self.theta_tilde, self.a_min, self.a_max, self.omega)
    }

    fn validate(&self) -> Result<()> {
        let kernel = self
            .kernel()
            .map_err(|e| constraint("kernel resolution", e.to_string()))?;
        let model = self
            .model()
            .map_err(|e| constraint("model hypotheses", e.to_string()))?;
        let limit = model.dt_max();
        if !(self.dt > 0.0 && self.dt <= limit) {
            return Err(constraint(
                "dt ≤ 0.2/(1+L_f)",
                format!("dt = {} but 0.2/(1 + {}) = {limit}", self.dt, model.lipschitz()),
            ));
        }
        if !(self.delta_fraction > 0.0 && self.delta_fraction < 1.0) {
            return Err(constraint(
                "δ_* admissibility",
                format!(
                    "numerics.delta_fraction = {} must lie in (0, 1)",
                    self.delta_fraction
                ),
            ));
        }
        if !(kappa0(&model) > 0.0) {
            return Err(constraint("κ admissibility", "sup f_max(u)/u is not positive".into()));
        }
        make_bistable_minorant(&model, self.depth)
            .map_err(|e| constraint("bistable minorant", e.to_string()))?;
        let m = kernel.half_cells();
        for (key, hw) in [
            ("numerics.half_width", self.half_width),
            ("verify.pair_half_width", self.pair_half_width),
            ("wave.half_width", self.wave.half_width),
        ] {
            // Recentering lets the front drift a quarter window; it must stay
            // two kernel widths from either edge.
            if 3 * hw <= 8 * m {
                return Err(constraint(
                    "window size",
                    format!("{key} = {hw} leaves less than two kernel widths ({} cells) beside the front", 2 * m),
                ));
            }
        }
        if !(self.s_ref < 0.0) {
            return Err(constraint("start time", format!("verify.s_ref = {} must be negative", self.s_ref)));
        }
        if self.s_ladder.len() < 2
            || self.s_ladder[0] >= 0.0
            || self.s_ladder.windows(2).any(|w| w[1] >= w[0])
        {
            return Err(constraint(
                "start ladder",
                format!("verify.s_ladder = {:?} must be negative and strictly decreasing", self.s_ladder),
            ));
        }
        if self.levels.is_empty()
            || self.levels.iter().any(|&l| !(l > 0.0 && l < 1.0))
            || self.eps.iter().any(|&e| !(e > 0.0 && e < 0.5))
        {
            return Err(constraint(
                "level grid",
                "verify.levels must lie in (0, 1) and verify.eps in (0, 1/2)".into(),
            ));
        }
        if !(self.horizon > 0.0 && self.pair_horizon > 0.0 && self.limit_time.0 < self.limit_time.1) {
            return Err(constraint("horizons", "horizons and time windows must be positive".into()));
        }
        if self.deltas.iter().any(|&d| d < 0.0) {
            return Err(constraint("oscillation windows", "verify.deltas must be nonnegative".into()));
        }
        Ok(())
    }

    /// Canonical `key = value` listing of every effective setting.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.effective {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// SHA-256 of [`Scenario::echo`].
    pub fn hash(&self) -> String {
        Sha256::digest(self.echo().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Suites in dependency order.
pub const SUITES: &[&str] = &[
    "waves",
    "shoot",
    "evolve",
    "fronts",
    "decay",
    "width",
    "lipschitz",
    "limit",
    "oscillation",
];

/// Expands a selector into suite names.
pub fn parse_selector(selector: &str) -> Result<Vec<&'static str>> {
    if selector == "all" {
        return Ok(SUITES.to_vec());
    }
    SUITES
        .iter()
        .find(|s| **s == selector)
        .map(|s| vec![*s])
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "unknown suite '{selector}'; expected one of {} or all",
                SUITES.join(", ")
            ))
        })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Waves {
    pub min: WaveSolution,
    pub bistable: WaveSolution,
}

/// The reference front run and everything measured on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub shot: ShootResult,
    pub run: FrontRun,
    pub analysis: FrontAnalysis,
    pub decay: DecaySetup,
    pub from: f64,
    pub mid: f64,
    pub to: f64,
}

/// The limit construction with the analysis of its deepest run.
#[derive(Debug, Clone, PartialEq)]
pub struct Limit {
    pub front: LimitFront,
    pub analysis: FrontAnalysis,
    pub decay: DecaySetup,
    pub from: f64,
}

/// Outcome of the random ordered-pair comparison runs.
#[derive(Debug, Clone, PartialEq)]
pub struct PairOutcome {
    pub index: usize,
    pub max_violation: f64,
    pub passed: bool,
}

type Cell<T> = OnceLock<std::result::Result<T, Error>>;

fn cached<T>(cell: &Cell<T>, f: impl FnOnce() -> Result<T>) -> Result<&T> {
    match cell.get_or_init(f) {
        Ok(v) => Ok(v),
        Err(e) => Err(e.clone()),
    }
}

/// Lazily computed shared state of a scenario run.
pub struct Context {
    pub scenario: Scenario,
    pub kernel: Kernel,
    pub model: IgnitionModel,
    pub bistable: BistableMinorant,
    waves: Cell<Waves>,
    constants: Cell<FrontConstants>,
    shots: Cell<Vec<ShootResult>>,
    reference: Cell<Reference>,
    pairs: Cell<Vec<PairOutcome>>,
    limit: Cell<Limit>,
    horizon_scale: f64,
}

impl Context {
    pub fn new(scenario: Scenario, horizon_scale: f64) -> Result<Context> {
        if !(horizon_scale > 0.0 && horizon_scale.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "horizon scale {horizon_scale} must be positive"
            )));
        }
        let kernel = scenario.kernel()?;
        let model = scenario.model()?;
        let bistable = make_bistable_minorant(&model, scenario.depth)?;
        Ok(Context {
            scenario,
            kernel,
            model,
            bistable,
            waves: OnceLock::new(),
            constants: OnceLock::new(),
            shots: OnceLock::new(),
            reference: OnceLock::new(),
            pairs: OnceLock::new(),
            limit: OnceLock::new(),
            horizon_scale,
        })
    }

    pub fn waves(&self) -> Result<&Waves> {
        cached(&self.waves, || {
            let lower = self.model.lower_envelope();
            let opts = self.scenario.wave.clone();
            Ok(Waves {
                min: solve_wave(&lower, self.model.theta, WaveKind::Ignition, &self.kernel, &opts)?,
                bistable: solve_wave(&self.bistable, self.model.theta, WaveKind::Bistable, &self.kernel, &opts)?,
            })
        })
    }

    pub fn constants(&self) -> Result<&FrontConstants> {
        cached(&self.constants, || {
            FrontConstants::derive(&self.model, &self.kernel, self.waves()?.bistable.speed)
        })
    }

    pub fn delta_star(&self) -> Result<f64> {
        Ok(self.scenario.delta_fraction * self.constants()?.delta_star_limit())
    }

    pub fn transient(&self) -> Result<f64> {
        match self.scenario.transient {
            Some(t) => Ok(t),
            None => Ok(5.0 / self.waves()?.bistable.speed),
        }
    }

    fn shoot_options(&self) -> ShootOptions {
        ShootOptions {
            dt: self.scenario.dt,
            half_width: self.scenario.half_width,
            tol: self.scenario.shoot_tol,
            ..Default::default()
        }
    }

    /// Shooting for the first two start times of the ladder.
    pub fn shots(&self) -> Result<&Vec<ShootResult>> {
        cached(&self.shots, || {
            let w = &self.waves()?.min;
            self.scenario.s_ladder[..2]
                .iter()
                .map(|&s| shoot_initial_offset(&self.model, &self.kernel, w, s, self.model.theta, &self.shoot_options()))
                .collect()
        })
    }

    /// Levels tracked on the reference run.
    pub fn reference_levels(&self) -> Result<Vec<f64>> {
        let mut levels = self.constants()?.levels();
        for &l in self.scenario.levels.iter() {
            levels.push(l);
        }
        for &e in &self.scenario.eps {
            levels.push(e);
            levels.push(1.0 - e);
        }
        let mut out: Vec<f64> = Vec::new();
        for l in levels {
            if !out.contains(&l) {
                out.push(l);
            }
        }
        Ok(out)
    }

    pub fn reference(&self) -> Result<&Reference> {
        cached(&self.reference, || {
            let sc = &self.scenario;
            let waves = self.waves()?;
            let constants = self.constants()?;
            let delta_star = self.delta_star()?;
            let s = sc.s_ref;
            let shot = shoot_initial_offset(&self.model, &self.kernel, &waves.min, s, self.model.theta, &self.shoot_options())?;
            let total = sc.horizon * self.horizon_scale;
            let spec = FrontRunSpec {
                s,
                t_end: s + total,
                dt: sc.dt,
                half_width: sc.half_width,
                levels: self.reference_levels()?,
                substeps: substeps_for(sc.dt, delta_star),
                snapshot_stride: sc.snapshot_stride,
                lambda_kappa: Some(constants.lambda_kappa),
                track_level: self.model.theta,
            };
            let run = run_front(&self.model, &self.kernel, &waves.min, shot.y, &spec)?;
            let (analysis, decay) = decay_setup_for(
                &run,
                constants,
                &self.kernel,
                waves.min.decay.c_plus,
                delta_star,
                sc.c_hat,
                sc.tolerance,
            )?;
            Ok(Reference {
                shot,
                run,
                analysis,
                decay,
                from: s + self.transient()?,
                mid: s + 0.5 * total,
                to: s + total,
            })
        })
    }

    /// Random ordered pairs evolved under the heterogeneous model.
    pub fn pairs(&self) -> Result<&Vec<PairOutcome>> {
        cached(&self.pairs, || {
            let sc = &self.scenario;
            let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
            let policy = WindowPolicy {
                margin: sc.pair_half_width / 4,
                track_level: self.model.theta,
                snapshot_stride: sc.snapshot_stride,
                ..Default::default()
            };
            let mut out = Vec::new();
            for index in 0..sc.pairs {
                let (lower, upper) = random_ordered_pair(&mut rng, sc.pair_half_width, sc.kernel_spacing)?;
                let a = evolve(&lower, &self.model, &self.kernel, 0.0, sc.pair_horizon, sc.dt, &policy)?;
                let b = evolve(&upper, &self.model, &self.kernel, 0.0, sc.pair_horizon, sc.dt, &policy)?;
                let report = comparison_check(&a, &b, sc.comparison_tol)?;
                out.push(PairOutcome {
                    index,
                    max_violation: report.max_violation,
                    passed: report.passed,
                });
            }
            Ok(out)
        })
    }

    pub fn limit(&self) -> Result<&Limit> {
        cached(&self.limit, || {
            let sc = &self.scenario;
            let waves = self.waves()?;
            let constants = self.constants()?;
            let delta_star = self.delta_star()?;
            let opts = LimitOptions {
                ladder: sc.s_ladder.clone(),
                dt: sc.dt,
                half_width: sc.half_width,
                time_window: sc.limit_time,
                space_half_width: sc.limit_space,
                snapshot_stride: sc.snapshot_stride,
                delta_star,
                shoot: self.shoot_options(),
                limit_tol: sc.limit_tol,
            };
            let front = construct_limit_front(&self.model, &self.kernel, &waves.min, constants, &opts)?;
            let deepest = &front.surrogate().run;
            let (analysis, decay) = decay_setup_for(
                deepest,
                constants,
                &self.kernel,
                waves.min.decay.c_plus,
                delta_star,
                sc.c_hat,
                sc.tolerance,
            )?;
            let from = deepest.s + self.transient()?;
            Ok(Limit {
                front,
                analysis,
                decay,
                from,
            })
        })
    }
}

/// Random monotone front: a convex combination of logistic steps.
fn random_profile(rng: &mut ChaCha8Rng) -> Vec<(f64, f64, f64)> {
    let n = rng.gen_range(1..=3);
    let mut parts: Vec<(f64, f64, f64)> = (0..n)
        .map(|_| (rng.gen_range(0.1..1.0), rng.gen_range(0.5..6.0), rng.gen_range(-4.0..4.0)))
        .collect();
    let total: f64 = parts.iter().map(|p| p.0).sum();
    for p in &mut parts {
        p.0 /= total;
    }
    parts
}

fn eval_profile(parts: &[(f64, f64, f64)], x: f64) -> f64 {
    parts
        .iter()
        .map(|&(w, a, b)| w / (1.0 + (a * (x - b)).exp()))
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// `(min(U, V), U)` for two random monotone fronts `U`, `V`.
pub fn random_ordered_pair(rng: &mut ChaCha8Rng, half_width: usize, spacing: f64) -> Result<(Field, Field)> {
    let u = random_profile(rng);
    let v = random_profile(rng);
    let upper = Field::centered(0.0, half_width, spacing, 0.0, |x| eval_profile(&u, x))?.as_front();
    let lower = Field::centered(0.0, half_width, spacing, 0.0, |x| {
        eval_profile(&u, x).min(eval_profile(&v, x))
    })?
    .as_front();
    Ok((lower, upper))
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Output files, kept in memory and written at the end in name order.
#[derive(Debug, Default)]
pub struct Outputs {
    files: BTreeMap<String, String>,
    hash: String,
}

impl Outputs {
    fn csv(&mut self, name: &str, header: &str) -> &mut String {
        let hash = self.hash.clone();
        self.files
            .entry(name.to_string())
            .or_insert_with(|| format!("# scenario {hash}\n{header}\n"))
    }

    fn row(&mut self, name: &str, header: &str, fields: &[String]) {
        let s = self.csv(name, header);
        s.push_str(&fields.join(","));
        s.push('\n');
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.get(name).map(|s| s.as_str())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(|s| s.as_str())
    }

    fn write_all(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, body) in &self.files {
            std::fs::write(dir.join(name), body)?;
        }
        Ok(())
    }
}

fn path_rows(out: &mut Outputs, name: &str, path: &InterfacePath, times: &[f64]) {
    for &t in times {
        if let Some(v) = path.value_at(t) {
            out.row(
                name,
                "t,value,kind,parameter",
                &[num(t), num(v), path.kind.name().to_string(), num(path.parameter)],
            );
        }
    }
}

fn sample_times(run: &FrontRun, every: f64) -> Vec<f64> {
    let t0 = run.trajectory.t0;
    let n = ((run.trajectory.t1 - t0) / every + 1e-9).floor() as usize;
    (0..=n).map(|k| t0 + k as f64 * every).collect()
}

fn waves_suite(ctx: &Context, out: &mut Outputs) -> Result<VerificationReport> {
    let w = ctx.waves()?;
    let sc = &ctx.scenario;
    let mut r = VerificationReport::new("waves");
    r.parameter("window", sc.wave.window);
    r.parameter("half_width", sc.wave.half_width);
    for (name, wave) in [("wave_min.csv", &w.min), ("wave_bistable.csv", &w.bistable)] {
        for (i, &v) in wave.values.iter().enumerate() {
            out.row(name, "x,phi", &[num(wave.x(i)), num(v)]);
        }
    }
    for (tag, wave) in [("min", &w.min), ("bistable", &w.bistable)] {
        r.constant(&format!("c_{tag}"), wave.speed);
        r.constant(&format!("c_{tag}_plus"), wave.decay.c_plus);
        r.constant(&format!("c_{tag}_minus"), wave.decay.c_minus);
        r.constant(&format!("x_{tag}"), wave.decay.x_min);
        r.constant(&format!("horizon_{tag}"), wave.horizon);
        let n = wave.window_speeds.len();
        let change = if n >= 2 {
            (wave.window_speeds[n - 1] - wave.window_speeds[n - 2]).abs() / wave.window_speeds[n - 1].abs()
        } else {
            f64::INFINITY
        };
        r.at_most(&format!("{tag} speed change between windows"), change, sc.wave.tolerance);
        r.at_most(&format!("{tag} profile residual"), wave.residual, sc.wave.residual_tol);
        r.at_most(&format!("{tag} front tail fit deviation"), wave.decay.plus_residual, sc.wave.tail_tol);
        r.at_most(&format!("{tag} back tail fit deviation"), wave.decay.minus_residual, sc.wave.tail_tol);
    }
    r.at_least("bistable speed positive", w.bistable.speed, f64::MIN_POSITIVE);
    r.at_most(
        "bistable speed below ignition speed",
        w.bistable.speed,
        w.min.speed * (1.0 + sc.wave.tolerance),
    );
    Ok(r)
}

fn shoot_suite(ctx: &Context, out: &mut Outputs) -> Result<VerificationReport> {
    let shots = ctx.shots()?;
    let sc = &ctx.scenario;
    let mut r = VerificationReport::new("shoot");
    r.parameter("tol", sc.shoot_tol);
    for sh in shots {
        out.row(
            "shoot.csv",
            "s,y,value,bracket_lo,bracket_hi,expanded,iterations",
            &[
                num(sh.s),
                num(sh.y),
                num(sh.value),
                num(sh.bracket.0),
                num(sh.bracket.1),
                sh.expanded.to_string(),
                sh.iterations.to_string(),
            ],
        );
        r.constant(&format!("y({})", sh.s), sh.y);
        r.at_most(&format!("|u(0,0) - theta| for s = {}", sh.s), (sh.value - ctx.model.theta).abs(), sc.shoot_tol);
        r.holds(
            &format!("y inside bracket for s = {}", sh.s),
            sh.bracket.0 <= sh.y && sh.y <= sh.bracket.1,
        );
    }
    r.holds("y decreases with s", shots.windows(2).all(|w| w[1].y < w[0].y));
    Ok(r)
}

fn evolve_suite(ctx: &Context, out: &mut Outputs) -> Result<VerificationReport> {
    let reference = ctx.reference()?;
    let pairs = ctx.pairs()?;
    let sc = &ctx.scenario;
    let traj = &reference.run.trajectory;
    let mut r = VerificationReport::new("evolve");
    r.parameter("s", reference.run.s);
    r.parameter("t_end", traj.t1);
    r.parameter("dt", sc.dt);
    r.parameter("pairs", sc.pairs);
    r.parameter("pair_horizon", sc.pair_horizon);
    r.parameter("seed", sc.seed);
    let times = sample_times(&reference.run, 0.25);
    for p in &traj.paths {
        path_rows(out, "paths.csv", p, &times);
    }
    let last = traj.last();
    for (i, &v) in last.values.iter().enumerate() {
        out.row("final_field.csv", "x,u", &[num(last.x(i)), num(v)]);
    }
    for p in pairs {
        out.row(
            "pairs.csv",
            "pair,max_violation,passed",
            &[p.index.to_string(), num(p.max_violation), p.passed.to_string()],
        );
    }
    r.constant("window_shifts", traj.shifts.len() as f64);
    r.holds("final field monotone", last.check_monotone(1e-10).is_ok());
    r.holds("final field in [0, 1]", last.check_range(1e-10).is_ok());
    let worst = pairs.iter().map(|p| p.max_violation).fold(0.0, f64::max);
    r.at_most("ordered pairs stay ordered", worst, sc.comparison_tol);
    Ok(r)
}

fn fronts_suite(ctx: &Context, out: &mut Outputs) -> Result<VerificationReport> {
    let reference = ctx.reference()?;
    let c = ctx.constants()?;
    let a = &reference.analysis;
    let b = &a.build;
    let traj = &reference.run.trajectory;
    let h = ctx.kernel.spacing();
    let mut r = VerificationReport::new("fronts");
    r.parameter("s", reference.run.s);
    r.parameter("delta_star", a.delta_star);
    r.parameter("c_hat", a.c_hat);
    for (k, v) in [
        ("kappa0", c.kappa0),
        ("kappa", c.kappa),
        ("lambda_kappa", c.lambda_kappa),
        ("c_kappa", c.c_kappa),
        ("c_tilde", c.c_tilde),
        ("lambda_star", c.lambda_star),
        ("theta_star", c.theta_star),
        ("beta", c.beta),
        ("C0", a.c0_big),
        ("t_B", a.t_b),
        ("c_max", b.c_max),
        ("c_tilde_max", b.c_tilde_max),
        ("d_max", b.d_max),
        ("width_theta_lambda_star", a.width_sup),
        ("hitting_times", (b.hitting_times.len() - 1) as f64),
    ] {
        r.constant(k, v);
    }
    for (n, (&t, &x)) in b.hitting_times.iter().zip(&b.anchors).enumerate() {
        out.row("hitting.csv", "n,t,anchor", &[n.to_string(), num(t), num(x)]);
    }
    let times = sample_times(&reference.run, 0.25);
    path_rows(out, "fronts.csv", &b.path, &times);
    path_rows(out, "fronts.csv", &a.x_hat, &times);
    path_rows(out, "fronts.csv", &a.x_tilde, &times);
    let y = reference.run.envelope.as_ref().expect("reference run records Y");
    path_rows(out, "fronts.csv", y, &times);

    r.holds("hitting time found", !b.truncated);
    let (lo, hi) = b.path.slope_range();
    r.at_least("modified slope min", lo, 0.5 * c.c_b - 1e-9);
    r.at_most("modified slope max", hi, b.c_max + 1e-9);
    let gaps = b.gaps();
    let gmin = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
    let gmax = gaps.iter().cloned().fold(0.0, f64::max);
    if !gaps.is_empty() {
        r.at_least("hitting gap min", gmin, b.gap_bounds.0);
        r.at_most("hitting gap max", gmax, b.gap_bounds.1);
    }
    let x_star = traj.path(c.lambda_star).expect("tracked");
    let (mut smin, mut smax) = (f64::INFINITY, f64::NEG_INFINITY);
    for (&t, &x) in b.path.times.iter().zip(&b.path.values) {
        if let Some(xs) = x_star.value_at(t) {
            smin = smin.min(x - xs);
            smax = smax.max(x - xs);
        }
    }
    r.at_least("sandwich lower", smin, -1e-9);
    r.at_most("sandwich upper", smax, b.d_max + 1e-9);
    let placement = check_envelope_placement(traj, &a.x_hat, &a.x_tilde, c.theta_star, c.theta);
    match placement {
        Ok(()) => {
            r.holds("envelope placement", true);
        }
        Err(Error::EnvelopeMisplacement { t, x, .. }) => {
            r.checks.push(crate::verify::CheckRecord {
                name: "envelope placement".into(),
                relation: "==",
                bound: 1.0,
                measured: 0.0,
                pass: false,
                location: Some((t, x)),
            });
        }
        Err(e) => return Err(e),
    }
    r.at_most("Y propagation excess", y.advance_excess(c.c_tilde), 2.0 * h);
    for lambda in [0.5 * (c.theta + c.lambda_star), c.lambda_star] {
        let p = traj.path(lambda).expect("tracked");
        let d = |to: f64| p.restrict(reference.from, to).sup_distance(&y.restrict(reference.from, to));
        let (half, full) = (d(reference.mid), d(reference.to));
        r.constant(&format!("C({lambda})"), full);
        r.at_most(
            &format!("C({lambda}) growth under horizon doubling"),
            if half > 0.0 { full / half - 1.0 } else { 0.0 },
            ctx.scenario.growth,
        );
        r.constant(&format!("t_eps({lambda})"), p.propagation_lag(0.75 * c.c_b));
    }
    let mut dominance: f64 = 0.0;
    for f in &traj.snapshots {
        let yv = envelope_location(f, c.lambda_kappa)?;
        for (i, &u) in f.values.iter().enumerate() {
            dominance = dominance.max(u * (c.lambda_kappa * (f.x(i) - yv)).exp() - 1.0);
        }
    }
    r.at_most("envelope dominance excess", dominance, 1e-12);
    Ok(r)
}

fn decay_suite(ctx: &Context, out: &mut Outputs) -> Result<VerificationReport> {
    let reference = ctx.reference()?;
    let c = ctx.constants()?;
    let d = &reference.decay;
    let traj = &reference.run.trajectory;
    let tol = ctx.scenario.tolerance;
    let mut r = VerificationReport::new("decay");
    r.parameter("s", reference.run.s);
    r.parameter("tolerance", tol);
    r.constant("c_plus_admissible", d.admissible.c_plus);
    r.constant("c_minus_admissible", d.admissible.c_minus);
    r.constant("c_plus", d.c_plus);
    r.constant("c_minus", d.c_minus);
    r.constant("C_hat", d.c_hat);
    r.at_least("g(c_plus)", decay_g(&ctx.kernel, c.c_b, d.c_plus)?, f64::MIN_POSITIVE);
    r.at_most(
        "c_minus inequality",
        d.c_minus * reference.analysis.build.c_max + ctx.kernel.moment_minus_one(-d.c_minus)? - c.beta,
        0.0,
    );
    let check = verify_decay(traj, &d.x_hat, &d.x_tilde, d.c_minus, d.c_plus, tol);
    r.comparison("lower envelope", &check.lower, true);
    r.comparison("upper envelope", &check.upper, true);
    let gap = d.x_tilde.values[0] - d.x_hat.values[0];
    let wrong = d.x_tilde.shifted(PathKind::ShiftedUpper, -gap);
    let control = upper_envelope_check(traj, &wrong, d.c_plus, tol);
    r.comparison("upper envelope anchored at X_hat (control)", &control, false);
    let doubled = upper_envelope_check(traj, &d.x_tilde, 2.0 * d.c_plus, tol);
    r.constant("g(2 c_plus)", decay_g(&ctx.kernel, c.c_b, 2.0 * d.c_plus)?);
    r.comparison("upper envelope with doubled rate (control)", &doubled, false);
    for (name, rep) in [
        ("lower", &check.lower),
        ("upper", &check.upper),
        ("anchored_at_x_hat", &control),
        ("doubled_rate", &doubled),
    ] {
        let (t, x) = rep.worst.unwrap_or((f64::NAN, f64::NAN));
        out.row(
            "decay.csv",
            "check,max_violation,samples,passed,t,x",
            &[
                name.to_string(),
                num(rep.max_violation),
                rep.samples.to_string(),
                rep.passed.to_string(),
                num(t),
                num(x),
            ],
        );
    }
    Ok(r)
}

fn width_suite(ctx: &Context, out: &mut Outputs) -> Result<VerificationReport> {
    let reference = ctx.reference()?;
    let sc = &ctx.scenario;
    let traj = &reference.run.trajectory;
    let paths: Vec<&InterfacePath> = sc.levels.iter().filter_map(|&l| traj.path(l)).collect();
    let w = verify_width(
        &paths,
        &traj.snapshots,
        &sc.eps,
        reference.from,
        reference.mid,
        reference.to,
        sc.growth,
    );
    let mut r = VerificationReport::new("width");
    r.parameter("from", reference.from);
    r.parameter("mid", reference.mid);
    r.parameter("to", reference.to);
    for (a, b) in w.half.pairs.iter().zip(&w.full.pairs) {
        out.row(
            "width.csv",
            "lambda1,lambda2,sup_half,sup_full",
            &[num(a.0), num(a.1), num(a.2), num(b.2)],
        );
    }
    for (a, b) in w.half.diameters.iter().zip(&w.full.diameters) {
        out.row("diameter.csv", "eps,sup_half,sup_full", &[num(a.0), num(a.1), num(b.1)]);
        r.constant(&format!("diam({})", a.0), b.1);
    }
    r.constant("max_width", w.full.max_width());
    r.holds("width sups finite", w.full.pairs.iter().all(|p| p.2.is_finite()));
    r.at_most("width growth under horizon doubling", w.growth, sc.growth);
    let lo = sc.levels.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = sc.levels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if let (Some(span), Some(&(e, diam))) = (w.full.pair(lo, hi), w.full.diameters.iter().find(|d| (d.0 - lo).abs() < 1e-12 && (1.0 - d.0 - hi).abs() < 1e-12)) {
        r.at_most(&format!("diam({e}) within level span"), diam, span + 2.0 * ctx.kernel.spacing());
    }
    Ok(r)
}

fn lipschitz_suite(ctx: &Context, out: &mut Outputs) -> Result<VerificationReport> {
    let reference = ctx.reference()?;
    let sc = &ctx.scenario;
    let l = verify_lipschitz(&reference.run.trajectory, reference.mid, sc.lipschitz_factor);
    for &(t, s) in &l.slopes {
        out.row("lipschitz.csv", "t,slope", &[num(t), num(s)]);
    }
    let mut r = VerificationReport::new("lipschitz");
    r.parameter("mid", reference.mid);
    r.parameter("factor", sc.lipschitz_factor);
    r.constant("initial_slope", l.initial);
    r.constant("sup_half", l.sup_half);
    r.constant("sup_full", l.sup_full);
    r.at_most("slope sup against initial", l.sup_full, sc.lipschitz_factor * l.initial);
    r.at_most("slope growth under horizon doubling", l.growth, sc.growth);
    Ok(r)
}

fn limit_suite(ctx: &Context, out: &mut Outputs) -> Result<VerificationReport> {
    let limit = ctx.limit()?;
    let c = ctx.constants()?;
    let sc = &ctx.scenario;
    let mut r = VerificationReport::new("limit");
    r.parameter("ladder", format!("{:?}", sc.s_ladder));
    r.parameter("time_window", format!("{:?}", sc.limit_time));
    r.parameter("x_window", format!("{:?}", limit.front.x_window));
    for lr in &limit.front.runs {
        out.row(
            "limit_runs.csv",
            "s,y,value",
            &[num(lr.shot.s), num(lr.shot.y), num(lr.shot.value)],
        );
    }
    for (&(a, b, d), &g) in limit.front.distances.iter().zip(&limit.front.origin_gaps) {
        out.row("limit.csv", "s_i,s_j,distance,origin_gap", &[num(a), num(b), num(d), num(g)]);
        r.constant(&format!("d({a},{b})"), d);
        r.at_most(&format!("origin gap ({a},{b})"), g, 2.0 * sc.shoot_tol);
    }
    r.holds("distances decrease", limit.front.decreasing);
    let last = limit.front.distances.last().map_or(0.0, |d| d.2);
    r.at_most("final distance", last, sc.limit_tol);
    let a = &limit.analysis;
    let (lo, hi) = a.build.path.slope_range();
    r.constant("c_min_star", 0.5 * c.c_b);
    r.constant("c_max_star", a.build.c_max);
    r.at_least("surrogate slope min", lo, 0.5 * c.c_b - 1e-9);
    r.at_most("surrogate slope max", hi, a.build.c_max + 1e-9);
    let h_plus = a.width_sup;
    let h_minus = a.build.d_max + limit.decay.c_hat;
    r.constant("h_plus", h_plus);
    r.constant("h_minus", h_minus);
    r.constant("c_plus", limit.decay.c_plus);
    r.constant("c_minus", limit.decay.c_minus);
    let surrogate = &limit.front.surrogate().run;
    let fit = fitted_front_rates(surrogate.trajectory.last(), c.theta, ctx.kernel.half_cells())?;
    r.constant("c_plus_fitted", fit.c_plus);
    r.constant("c_minus_fitted", fit.c_minus);
    r.at_least("fitted c_plus against proof value", fit.c_plus, 0.9 * limit.decay.c_plus);
    r.at_least("fitted c_minus against proof value", fit.c_minus, 0.9 * limit.decay.c_minus);
    let times = sample_times(surrogate, 0.25);
    path_rows(out, "limit_paths.csv", &a.build.path, &times);
    path_rows(out, "limit_paths.csv", &a.x_hat, &times);
    path_rows(out, "limit_paths.csv", &a.x_tilde, &times);
    if let Some(p) = surrogate.trajectory.path(c.theta) {
        path_rows(out, "limit_paths.csv", p, &times);
    }
    Ok(r)
}

fn oscillation_suite(ctx: &Context, out: &mut Outputs) -> Result<VerificationReport> {
    let limit = ctx.limit()?;
    let c = ctx.constants()?;
    let sc = &ctx.scenario;
    let surrogate = &limit.front.surrogate().run;
    let x_theta = surrogate
        .trajectory
        .path(c.theta)
        .expect("tracked")
        .restrict(limit.from, surrogate.trajectory.t1);
    let c_bar = surrogate
        .time_derivative
        .iter()
        .filter(|(t, _)| *t >= limit.from)
        .map(|p| p.1)
        .fold(0.0, f64::max);
    let h = (limit.analysis.build.d_max + limit.decay.c_hat, limit.analysis.width_sup);
    let fit = fitted_front_rates(surrogate.trajectory.last(), c.theta, ctx.kernel.half_cells())?;
    let mut r = VerificationReport::new("oscillation");
    r.parameter("from", limit.from);
    r.parameter("deltas", format!("{:?}", sc.deltas));
    for (variant, rates) in [
        ("proof", (limit.decay.c_minus, limit.decay.c_plus)),
        ("fitted", (fit.c_minus, fit.c_plus)),
    ] {
        let o = verify_oscillation(&x_theta, c_bar, c.theta, h, rates, &sc.deltas)?;
        r.constant(&format!("C_bar ({variant})"), o.c_bar);
        r.constant(&format!("eta0 ({variant})"), o.eta0);
        r.constant(&format!("C1 ({variant})"), o.c1);
        r.at_most(&format!("oscillation at eta0 ({variant})"), o.at_eta0, o.c1);
        for row in &o.rows {
            out.row(
                "oscillation.csv",
                "variant,delta,k,bound,measured",
                &[variant.to_string(), num(row.delta), row.k.to_string(), num(row.bound), num(row.measured)],
            );
            r.at_most(&format!("oscillation at delta = {} ({variant})", row.delta), row.measured, row.bound);
        }
    }
    Ok(r)
}

fn run_suite(ctx: &Context, name: &str, out: &mut Outputs) -> Result<VerificationReport> {
    match name {
        "waves" => waves_suite(ctx, out),
        "shoot" => shoot_suite(ctx, out),
        "evolve" => evolve_suite(ctx, out),
        "fronts" => fronts_suite(ctx, out),
        "decay" => decay_suite(ctx, out),
        "width" => width_suite(ctx, out),
        "lipschitz" => lipschitz_suite(ctx, out),
        "limit" => limit_suite(ctx, out),
        "oscillation" => oscillation_suite(ctx, out),
        _ => Err(Error::InvalidArgument(format!("unknown suite '{name}'"))),
    }
}

/// Result of [`run`].
#[derive(Debug)]
pub struct RunOutcome {
    /// 0 pass, 1 check failure, 3 numerical error.
    pub status: i32,
    pub reports: Vec<VerificationReport>,
    /// `(suite, error)` for a suite that could not complete.
    pub failure: Option<(String, Error)>,
    pub outputs: Outputs,
}

fn render_report(reports: &[VerificationReport], failure: &Option<(String, Error)>, hash: &str) -> String {
    let mut s = format!("# scenario {hash}\n");
    for rep in reports {
        let _ = writeln!(s, "[{}] {}", rep.suite, if rep.passed() { "PASS" } else { "FAIL" });
        for (k, v) in &rep.parameters {
            let _ = writeln!(s, "  param {k} = {v}");
        }
        for (k, v) in &rep.constants {
            let _ = writeln!(s, "  const {k} = {}", num(*v));
        }
        for c in &rep.checks {
            let loc = c
                .location
                .map(|(t, x)| format!(" at t = {}, x = {}", num(t), num(x)))
                .unwrap_or_default();
            let _ = writeln!(
                s,
                "  check {}: {} {} {} -> {}{loc}",
                c.name,
                num(c.measured),
                c.relation,
                num(c.bound),
                if c.pass { "PASS" } else { "FAIL" }
            );
        }
    }
    if let Some((suite, e)) = failure {
        let _ = writeln!(s, "[{suite}] ERROR {e}");
    }
    s
}

/// Runs the selected suites, writing all outputs to `out_dir` (or the
/// scenario's output directory).
pub fn run(scenario: &Scenario, selector: &str, out_dir: Option<&Path>, horizon_scale: f64) -> Result<RunOutcome> {
    let suites = parse_selector(selector)?;
    let ctx = Context::new(scenario.clone(), horizon_scale)?;
    let mut outputs = Outputs {
        hash: scenario.hash(),
        ..Default::default()
    };
    let mut reports = Vec::new();
    let mut failure = None;
    for name in suites {
        match run_suite(&ctx, name, &mut outputs) {
            Ok(r) => reports.push(r),
            Err(e) => {
                failure = Some((name.to_string(), e));
                break;
            }
        }
    }
    let hash = scenario.hash();
    let mut echo = format!("# scenario {hash}\n");
    echo.push_str(&format!("# horizon_scale = {horizon_scale}\n"));
    echo.push_str(&scenario.echo());
    outputs.files.insert("scenario.txt".into(), echo);
    outputs
        .files
        .insert("report.txt".into(), render_report(&reports, &failure, &hash));
    for rep in &reports {
        for c in &rep.checks {
            let (t, x) = c.location.unwrap_or((f64::NAN, f64::NAN));
            outputs.row(
                "report.csv",
                "suite,check,relation,bound,measured,pass,t,x",
                &[
                    rep.suite.clone(),
                    format!("\"{}\"", c.name),
                    c.relation.to_string(),
                    num(c.bound),
                    num(c.measured),
                    c.pass.to_string(),
                    num(t),
                    num(x),
                ],
            );
        }
        for (k, v) in &rep.constants {
            outputs.row("constants.csv", "suite,name,value", &[rep.suite.clone(), format!("\"{k}\""), num(*v)]);
        }
    }
    if let Some((suite, e)) = &failure {
        outputs.row(
            "failure.csv",
            "suite,exit_code,error",
            &[suite.clone(), "3".into(), format!("\"{}\"", e.to_string().replace('"', "'"))],
        );
    }
    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| scenario.output_dir.clone());
    outputs.write_all(&dir)?;
    let status = if failure.is_some() {
        3
    } else if reports.iter().all(|r| r.passed()) {
        0
    } else {
        1
    };
    Ok(RunOutcome {
        status,
        reports,
        failure,
        outputs,
    })
}

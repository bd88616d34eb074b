//! End-to-end acceptance checks on the reference scenario. Each criterion
//! prints one PASS/FAIL line; the process fails if any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use frontlab_core::cli_io::{run, Context, Scenario};
use frontlab_core::grid::{Closure, Field};
use frontlab_core::kernel::{make_kernel, KernelFamily};
use frontlab_core::nonlinearity::kappa0;
use frontlab_core::path::{InterfacePath, PathKind};
use frontlab_core::verify::{decay_g, upper_envelope_check, verify_decay};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ctx() -> &'static Context {
    static CTX: OnceLock<Context> = OnceLock::new();
    CTX.get_or_init(|| Context::new(Scenario::default(), 1.0).expect("reference scenario"))
}

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn gaussian_density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Direct double loop over every window cell plus the closure mass outside.
fn direct_convolution(field: &Field, h: f64, m: usize, closure: Closure) -> Vec<f64> {
    let raw: Vec<f64> = (0..=m).map(|j| gaussian_density(j as f64 * h)).collect();
    let mass = raw[0] + 2.0 * raw[1..].iter().sum::<f64>();
    let w = |d: i64| -> f64 {
        let a = d.unsigned_abs() as usize;
        if a > m {
            0.0
        } else {
            raw[a] / mass
        }
    };
    let n = field.len() as i64;
    (0..n)
        .map(|i| {
            let mut s = 0.0;
            for k in 0..n {
                s += w(i - k) * field.values[k as usize];
            }
            for k in (i - m as i64)..0 {
                s += w(i - k) * closure.left;
            }
            for k in n..=(i + m as i64) {
                s += w(i - k) * closure.right;
            }
            s
        })
        .collect()
}

fn random_front(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

fn criterion_1() -> Outcome {
    let h = 0.05;
    let k = make_kernel(KernelFamily::Gaussian { sigma: 1.0 }, h, 1e-12).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.gen_range(16..=2048);
        let f = Field::new(rng.gen_range(-500..500), h, 0.0, random_front(&mut rng, n)).map_err(err)?;
        let closure = Closure::default();
        let fast = k.convolve(&f, closure).map_err(err)?;
        let slow = direct_convolution(&f, h, k.half_cells(), closure);
        for (a, b) in fast.values.iter().zip(&slow) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst <= 1e-12, format!("convolution differs from direct sum by {worst:e}"))?;
    let mut moment_err: f64 = 0.0;
    for l in [0.5f64, 1.0, 2.0] {
        let want = (0.5 * l * l).exp();
        moment_err = moment_err.max((k.exponential_moment(l).map_err(err)? - want).abs());
    }
    ensure(moment_err <= 1e-6, format!("exponential moment error {moment_err:e}"))?;
    Ok(format!("convolution error {worst:.1e}, moment error {moment_err:.1e}"))
}

fn criterion_2() -> Outcome {
    let k = &ctx().kernel;
    let mut prev: Option<(f64, f64)> = None;
    let mut worst: f64 = 0.0;
    for kappa in [1e-1, 1e-2, 1e-3] {
        let ks = k.kappa_speed(kappa).map_err(err)?;
        let l = ks.lambda;
        let stationarity = l * k.first_moment_weighted(l).map_err(err)? - (k.moment_minus_one(l).map_err(err)? + kappa);
        worst = worst.max(stationarity.abs());
        if let Some((pl, pc)) = prev {
            ensure(
                ks.lambda < pl && ks.speed < pc,
                format!("lambda/speed not decreasing at kappa = {kappa}"),
            )?;
        }
        prev = Some((ks.lambda, ks.speed));
    }
    ensure(worst <= 1e-8, format!("stationarity residual {worst:e}"))?;
    Ok(format!("stationarity residual {worst:.1e}, lambda and c decrease"))
}

fn criterion_3() -> Outcome {
    let w = ctx().waves().map_err(err)?;
    for (tag, wave) in [("ignition", &w.min), ("bistable", &w.bistable)] {
        let s = &wave.window_speeds;
        let n = s.len();
        ensure(n >= 2, format!("{tag}: fewer than two windows"))?;
        let change = (s[n - 1] - s[n - 2]).abs() / s[n - 1].abs();
        ensure(change <= 1e-3, format!("{tag}: speed change {change:e}"))?;
        ensure(wave.residual <= 1e-4, format!("{tag}: residual {:e}", wave.residual))?;
        ensure(
            wave.decay.plus_residual <= 0.05 && wave.decay.minus_residual <= 0.05,
            format!("{tag}: tail fit deviations {} {}", wave.decay.plus_residual, wave.decay.minus_residual),
        )?;
    }
    ensure(w.bistable.speed > 0.0, "bistable speed not positive".into())?;
    ensure(
        w.bistable.speed <= w.min.speed * (1.0 + 1e-3),
        format!("c_B = {} exceeds c_min = {}", w.bistable.speed, w.min.speed),
    )?;
    Ok(format!(
        "c_min = {:.6}, c_B = {:.6}, residuals {:.1e}/{:.1e}",
        w.min.speed, w.bistable.speed, w.min.residual, w.bistable.residual
    ))
}

fn criterion_4() -> Outcome {
    let c = ctx();
    let w = c.waves().map_err(err)?;
    let shots = c.shots().map_err(err)?;
    let theta = c.model.theta;
    let cp = w.min.decay.c_plus;
    let rate = (kappa0(&c.model) + c.kernel.exponential_moment(cp).map_err(err)? - 1.0) / cp;
    for sh in shots {
        ensure(
            (sh.value - theta).abs() <= 1e-6,
            format!("s = {}: |u(0,0) - theta| = {:e}", sh.s, (sh.value - theta).abs()),
        )?;
        let lo = (theta.ln() + cp * rate * sh.s) / cp;
        let hi = w.min.speed * sh.s;
        ensure(
            lo <= sh.y && sh.y <= hi,
            format!("s = {}: y = {} outside [{lo}, {hi}]", sh.s, sh.y),
        )?;
    }
    let y = |s: f64| shots.iter().find(|r| r.s == s).map(|r| r.y);
    let (a, b) = (y(-10.0).ok_or("no s = -10")?, y(-20.0).ok_or("no s = -20")?);
    ensure(b < a, format!("y(-20) = {b} not below y(-10) = {a}"))?;
    Ok(format!("y(-10) = {a:.6}, y(-20) = {b:.6}"))
}

fn criterion_5() -> Outcome {
    let c = ctx();
    let pairs = c.pairs().map_err(err)?;
    ensure(pairs.len() == 20, format!("{} pairs", pairs.len()))?;
    let worst = pairs.iter().map(|p| p.max_violation).fold(0.0, f64::max);
    ensure(worst <= 1e-9, format!("ordered pair violation {worst:e}"))?;
    let r = c.reference().map_err(err)?;
    let d = &r.decay;
    let traj = &r.run.trajectory;
    let ok = verify_decay(traj, &d.x_hat, &d.x_tilde, d.c_minus, d.c_plus, 1e-8);
    ensure(ok.passed(), format!("envelopes violated: {:?} {:?}", ok.lower.worst, ok.upper.worst))?;
    let doubled = upper_envelope_check(traj, &d.x_tilde, 2.0 * d.c_plus, 1e-8);
    ensure(
        !doubled.passed,
        format!(
            "doubled-rate control not violated (max excess {:e} with c_+ = {:.4})",
            doubled.max_violation,
            2.0 * d.c_plus
        ),
    )?;
    Ok(format!("pair violation {worst:.1e}; doubled-rate control violated"))
}

fn criterion_6() -> Outcome {
    let c = ctx();
    let r = c.reference().map_err(err)?;
    let k = c.constants().map_err(err)?;
    let a = &r.analysis;
    let b = &a.build;
    let p = &b.path;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 1..p.len() {
        let s = (p.values[i] - p.values[i - 1]) / (p.times[i] - p.times[i - 1]);
        lo = lo.min(s);
        hi = hi.max(s);
    }
    let c_max = 0.5 * k.c_b + 1.875 * (2.0 * a.c0_big + 1.0) / a.delta_star;
    ensure(
        lo >= 0.5 * k.c_b - 1e-9 && hi <= c_max + 1e-9,
        format!("slopes [{lo}, {hi}] outside [{}, {c_max}]", 0.5 * k.c_b),
    )?;
    let gap_lo = 2.0 / (2.0 * k.c_tilde - k.c_b);
    let gap_hi = 4.0 * (2.0 * a.c0_big + 1.0) / k.c_b + 3.0 * a.t_b;
    let gaps: Vec<f64> = b.hitting_times.windows(2).map(|w| w[1] - w[0]).collect();
    ensure(!gaps.is_empty(), "no hitting time".into())?;
    for g in &gaps {
        ensure(*g >= gap_lo && *g <= gap_hi, format!("gap {g} outside [{gap_lo}, {gap_hi}]"))?;
    }
    let x_star = r.run.trajectory.path(k.lambda_star).ok_or("lambda_* not tracked")?;
    let d_max = 2.0 * a.c0_big + 1.0 + 0.75 * k.c_b * a.t_b;
    for (&t, &x) in p.times.iter().zip(&p.values) {
        let xs = x_star.value_at(t).ok_or("sample outside path")?;
        ensure(
            x - xs >= -1e-9 && x - xs <= d_max + 1e-9,
            format!("sandwich fails at t = {t}: {}", x - xs),
        )?;
    }
    Ok(format!(
        "slopes [{lo:.4}, {hi:.2}] within [{:.4}, {c_max:.2}], {} gaps in [{gap_lo:.3}, {gap_hi:.1}]",
        0.5 * k.c_b,
        gaps.len()
    ))
}

fn criterion_7() -> Outcome {
    let c = ctx();
    let r = c.reference().map_err(err)?;
    let k = c.constants().map_err(err)?;
    let d = &r.decay;
    ensure(decay_g(&c.kernel, k.c_b, d.c_plus).map_err(err)? > 0.0, "g(c_+) <= 0".into())?;
    let lhs = d.c_minus * r.analysis.build.c_max + c.kernel.exponential_moment(-d.c_minus).map_err(err)? - 1.0 - k.beta;
    ensure(lhs <= 0.0, format!("c_- inequality {lhs:e}"))?;
    let traj = &r.run.trajectory;
    let check = verify_decay(traj, &d.x_hat, &d.x_tilde, d.c_minus, d.c_plus, 1e-8);
    ensure(
        check.passed(),
        format!("violations {:e} / {:e}", check.lower.max_violation, check.upper.max_violation),
    )?;
    let gap = d.x_tilde.values[0] - d.x_hat.values[0];
    let wrong = d.x_tilde.shifted(PathKind::ShiftedUpper, -gap);
    let control = upper_envelope_check(traj, &wrong, d.c_plus, 1e-8);
    ensure(!control.passed, "misplaced envelope not detected".into())?;
    Ok(format!(
        "c_+ = {:.5}, c_- = {:.3e}, C_hat = {}, control excess {:.3} at {:?}",
        d.c_plus, d.c_minus, d.c_hat, control.max_violation, control.worst
    ))
}

fn width_sups(paths: &[&InterfacePath], from: f64, to: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for a in paths {
        for b in paths {
            if a.parameter < b.parameter {
                let mut sup: f64 = 0.0;
                for (&t, &x) in a.times.iter().zip(&a.values) {
                    if t >= from && t <= to {
                        if let Some(y) = b.value_at(t) {
                            sup = sup.max(x - y);
                        }
                    }
                }
                out.push(sup);
            }
        }
    }
    out
}

fn criterion_8() -> Outcome {
    let c = ctx();
    let r = c.reference().map_err(err)?;
    let traj = &r.run.trajectory;
    let levels: Vec<f64> = (1..20).map(|i| i as f64 * 0.05).collect();
    let paths: Vec<&InterfacePath> = levels
        .iter()
        .map(|&l| {
            traj.paths
                .iter()
                .find(|p| (p.parameter - l).abs() < 1e-12)
                .ok_or(format!("level {l} not tracked"))
        })
        .collect::<Result<_, _>>()?;
    let s = r.run.s;
    let half = width_sups(&paths, r.from, s + 100.0);
    let full = width_sups(&paths, r.from, s + 200.0);
    let mut growth: f64 = 0.0;
    for (a, b) in half.iter().zip(&full) {
        ensure(b.is_finite(), "infinite width".into())?;
        if *a > 0.0 {
            growth = growth.max(b / a - 1.0);
        }
    }
    ensure(growth <= 0.1, format!("width growth {growth}"))?;
    let widest = full.iter().cloned().fold(0.0, f64::max);
    Ok(format!("{} pairs, widest {widest:.4}, growth {:.2}%", full.len(), 100.0 * growth))
}

fn criterion_9() -> Outcome {
    let r = ctx().reference().map_err(err)?;
    let s = r.run.s;
    let snaps = &r.run.trajectory.snapshots;
    let slope = |f: &Field| {
        f.values
            .windows(2)
            .map(|w| (w[1] - w[0]).abs() / f.spacing)
            .fold(0.0, f64::max)
    };
    let initial = slope(&snaps[0]);
    let upto = |t: f64| snaps.iter().filter(|f| f.time <= t + 1e-9).map(slope).fold(0.0, f64::max);
    let (half, full) = (upto(s + 100.0), upto(s + 200.0));
    ensure(full <= 1.1 * half, format!("slope sup {full} vs {half}"))?;
    ensure(full <= 10.0 * initial, format!("slope sup {full} vs initial {initial}"))?;
    Ok(format!("initial {initial:.4}, T=100 {half:.4}, T=200 {full:.4}"))
}

fn criterion_10() -> Outcome {
    let c = ctx();
    let l = c.limit().map_err(err)?;
    let k = c.constants().map_err(err)?;
    let ds: Vec<f64> = l.front.distances.iter().map(|d| d.2).collect();
    let summary = format!(
        "distances {:?}, h_+ = {:.4}, h_- = {:.4}, c_+ = {:.4}, c_- = {:.3e}",
        ds.iter().map(|d| format!("{d:.2e}")).collect::<Vec<_>>(),
        l.analysis.width_sup,
        l.analysis.build.d_max + l.decay.c_hat,
        l.decay.c_plus,
        l.decay.c_minus
    );
    ensure(ds.len() == 3, format!("{} distances", ds.len()))?;
    ensure(ds.windows(2).all(|w| w[1] < w[0]), format!("not decreasing: {summary}"))?;
    let p = &l.analysis.build.path;
    let (lo, hi) = p.slope_range();
    ensure(
        lo >= 0.5 * k.c_b - 1e-9 && hi <= l.analysis.build.c_max + 1e-9,
        format!("surrogate slopes [{lo}, {hi}]"),
    )?;
    ensure(ds[2] <= 1e-3, format!("final distance {:.3e} > 1e-3; {summary}", ds[2]))?;
    Ok(summary)
}

fn criterion_11() -> Outcome {
    let c = ctx();
    let l = c.limit().map_err(err)?;
    let theta = c.model.theta;
    let run = &l.front.surrogate().run;
    let x = run.trajectory.path(theta).ok_or("theta not tracked")?.restrict(l.from, run.trajectory.t1);
    let c_bar = run
        .time_derivative
        .iter()
        .filter(|p| p.0 >= l.from)
        .map(|p| p.1)
        .fold(0.0, f64::max);
    let eta0 = (theta / 2.0).min((1.0 - theta) / 2.0) / c_bar;
    let (hm, hp) = (l.analysis.build.d_max + l.decay.c_hat, l.analysis.width_sup);
    let (cm, cp) = (l.decay.c_minus, l.decay.c_plus);
    let h = |lam: f64| (hm - (1.0 - lam).ln() / cm).max(hp - lam.ln() / cp);
    let c1 = (h(theta) + h(theta / 2.0)).max(h(theta) + h((1.0 + theta) / 2.0));
    let osc = |delta: f64| {
        let mut best: f64 = 0.0;
        for i in 0..x.len() {
            let mut j = i;
            while j < x.len() && x.times[j] - x.times[i] <= delta + 1e-12 {
                best = best.max((x.values[j] - x.values[i]).abs());
                j += 1;
            }
        }
        best
    };
    let at_eta = osc(eta0);
    ensure(at_eta <= c1, format!("oscillation {at_eta} > C1 = {c1}"))?;
    let mut rows = Vec::new();
    for delta in [1.0, 5.0] {
        let k = (delta / eta0 + 1e-12).floor();
        let bound = (k + 1.0) * c1;
        let m = osc(delta);
        ensure(m <= bound, format!("delta = {delta}: {m} > {bound}"))?;
        rows.push(format!("delta {delta}: {m:.3} <= {bound:.3e}"));
    }
    Ok(format!("C_bar = {c_bar:.4}, eta0 = {eta0:.4}, osc(eta0) = {at_eta:.4} <= C1 = {c1:.3e}; {}", rows.join("; ")))
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).expect("output directory") {
        let entry = entry.expect("entry");
        out.insert(
            entry.file_name().to_string_lossy().into_owned(),
            std::fs::read(entry.path()).expect("file"),
        );
    }
    out
}

fn criterion_12() -> Outcome {
    let scenario = Scenario::default();
    let a = tempfile::tempdir().map_err(err)?;
    let b = tempfile::tempdir().map_err(err)?;
    run(&scenario, "all", Some(a.path()), 1.0).map_err(err)?;
    run(&scenario, "all", Some(b.path()), 1.0).map_err(err)?;
    let (ta, tb) = (read_tree(a.path()), read_tree(b.path()));
    ensure(!ta.is_empty(), "no outputs".into())?;
    ensure(
        ta.keys().eq(tb.keys()),
        format!("file sets differ: {:?} vs {:?}", ta.keys(), tb.keys()),
    )?;
    for (name, bytes) in &ta {
        ensure(tb[name] == *bytes, format!("{name} differs"))?;
    }
    Ok(format!("{} files identical", ta.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("kernel oracle equivalence", criterion_1),
        ("speed machinery", criterion_2),
        ("wave solver", criterion_3),
        ("shooting", criterion_4),
        ("comparison principles", criterion_5),
        ("modified interface", criterion_6),
        ("decay envelopes", criterion_7),
        ("bounded width", criterion_8),
        ("lipschitz bound", criterion_9),
        ("limit front", criterion_10),
        ("oscillation bound", criterion_11),
        ("determinism", criterion_12),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}


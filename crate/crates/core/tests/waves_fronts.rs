use std::sync::OnceLock;

use approx::assert_abs_diff_eq;
use frontlab_core::evolution::{evolve, WindowPolicy};
use frontlab_core::fronts::{level_crossing, shoot_initial_offset, shooting_bracket, ShootOptions};
use frontlab_core::grid::Field;
use frontlab_core::kernel::{make_kernel, Kernel, KernelFamily};
use frontlab_core::nonlinearity::{
    kappa0, make_bistable_minorant, make_default_model, BistableMinorant, IgnitionModel,
};
use frontlab_core::waves::{bistable_stability_constants, solve_wave, WaveKind, WaveOptions, WaveSolution};

struct Fixture {
    kernel: Kernel,
    model: IgnitionModel,
    bistable: BistableMinorant,
    phi_min: WaveSolution,
    phi_b: WaveSolution,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let kernel = make_kernel(KernelFamily::Gaussian { sigma: 1.0 }, 0.05, 1e-12).unwrap();
        let model = make_default_model(0.25, 0.8, 1.0, 2.0, 1.0).unwrap();
        let bistable = make_bistable_minorant(&model, 0.05).unwrap();
        let opts = WaveOptions::default();
        let phi_min = solve_wave(&model.lower_envelope(), 0.25, WaveKind::Ignition, &kernel, &opts).unwrap();
        let phi_b = solve_wave(&bistable, 0.25, WaveKind::Bistable, &kernel, &opts).unwrap();
        Fixture {
            kernel,
            model,
            bistable,
            phi_min,
            phi_b,
        }
    })
}

#[test]
fn normalised_wave_crosses_theta_at_origin() {
    let f = fixture();
    let field = f.phi_min.sample(0.0, 0.0, 400, 0.0).unwrap();
    assert!(level_crossing(&field, 0.25).unwrap().abs() <= 0.05);
}

#[test]
fn crossing_moves_with_whole_cell_shifts() {
    let f = fixture();
    let a = f.phi_min.sample(0.0, 0.0, 400, 0.0).unwrap();
    let mut b = a.clone();
    b.offset += 3;
    let d = level_crossing(&b, 0.25).unwrap() - level_crossing(&a, 0.25).unwrap();
    assert_abs_diff_eq!(d, 0.15, epsilon = 1e-12);
}

#[test]
fn ordered_wave_speeds() {
    let f = fixture();
    assert!(f.phi_b.speed > 0.0);
    assert!(f.phi_b.speed < f.phi_min.speed);
    assert!(f.phi_min.decay.c_plus > 0.0 && f.phi_min.decay.c_minus > 0.0);
}

#[test]
fn wave_is_translation_invariant() {
    let f = fixture();
    let opts = WaveOptions {
        start: 7.3,
        ..Default::default()
    };
    let moved = solve_wave(&f.model.lower_envelope(), 0.25, WaveKind::Ignition, &f.kernel, &opts).unwrap();
    assert!((moved.speed - f.phi_min.speed).abs() <= 1e-3 * f.phi_min.speed);
    let sup = (-400..=400)
        .map(|i| {
            let x = i as f64 * 0.05;
            (moved.phi(x) - f.phi_min.phi(x)).abs()
        })
        .fold(0.0, f64::max);
    assert!(sup <= 1e-3, "profiles differ by {sup}");
}

#[test]
fn wave_moves_at_its_speed() {
    let f = fixture();
    let lower = f.model.lower_envelope();
    let u0 = f.phi_min.sample(0.0, 0.0, 600, 0.0).unwrap();
    let policy = WindowPolicy {
        track_level: 0.25,
        margin: 150,
        ..Default::default()
    };
    let traj = evolve(&u0, &lower, &f.kernel, 0.0, 5.0, 0.05, &policy).unwrap();
    let last = traj.last();
    let shift = 5.0 * f.phi_min.speed;
    let sup = last
        .values
        .iter()
        .enumerate()
        .map(|(i, &u)| (u - f.phi_min.phi_cubic(last.x(i) - shift)).abs())
        .fold(0.0, f64::max);
    assert!(sup <= 1e-3, "evolved wave differs from the shifted profile by {sup}");
}

#[test]
fn shooting_at_zero_needs_no_shift() {
    let f = fixture();
    let r = shoot_initial_offset(&f.model, &f.kernel, &f.phi_min, 0.0, 0.25, &ShootOptions::default()).unwrap();
    assert_eq!(r.y, 0.0);
}

#[test]
fn earlier_starts_begin_further_left() {
    let f = fixture();
    let opts = ShootOptions::default();
    let a = shoot_initial_offset(&f.model, &f.kernel, &f.phi_min, -10.0, 0.25, &opts).unwrap();
    let b = shoot_initial_offset(&f.model, &f.kernel, &f.phi_min, -5.0, 0.25, &opts).unwrap();
    assert!(a.y < b.y);
    assert!((a.value - 0.25).abs() <= 1e-6 && (b.value - 0.25).abs() <= 1e-6);
    let (lo, hi, c) = shooting_bracket(&f.kernel, &f.phi_min, kappa0(&f.model), 0.25, -10.0).unwrap();
    let cp = f.phi_min.decay.c_plus;
    assert!(cp * c - f.kernel.exponential_moment(cp).unwrap() + 1.0 >= kappa0(&f.model) - 1e-12);
    assert!(lo <= a.y && a.y <= hi);
    assert!(shoot_initial_offset(&f.model, &f.kernel, &f.phi_min, 1.0, 0.25, &opts).is_err());
}

#[test]
fn exact_bistable_wave_stays_a_wave() {
    let f = fixture();
    // Shift the profile onto the lattice so the datum is the discrete wave itself.
    let w = &f.phi_b;
    let shift = (w.origin / w.spacing).round() * w.spacing - w.origin;
    // The right tail decays slowly; a narrow window truncates it.
    let u0 = w.sample(shift, 0.0, 1200, 0.0).unwrap();
    let horizon = 20.0;
    let fit = bistable_stability_constants(w, &f.bistable, &f.kernel, &u0, horizon).unwrap();
    assert_eq!(fit.defects[0], 0.0);
    // Only the profile residual drives the datum off the wave.
    let defect = fit.defects.iter().cloned().fold(0.0, f64::max);
    let bound = 1e-8 + horizon * w.residual;
    assert!(defect <= bound, "defect {defect} above {bound}");
    assert!((fit.x_b - shift).abs() <= 1e-3, "x_B = {}", fit.x_b);
    assert!(fit.shift_residual <= 1e-4, "shift residual {}", fit.shift_residual);
}

#[test]
fn shifted_bistable_wave_reports_its_shift() {
    let f = fixture();
    let u0 = f.phi_b.sample(2.5, 2.5, 600, 0.0).unwrap();
    let fit = bistable_stability_constants(&f.phi_b, &f.bistable, &f.kernel, &u0, 10.0).unwrap();
    assert!((fit.x_b - 2.5).abs() <= 0.05, "x_B = {}", fit.x_b);
}

#[test]
fn plateau_datum_approaches_the_wave() {
    let f = fixture();
    let u0 = Field::centered(0.0, 600, 0.05, 0.0, |x| if x <= 0.0 { 0.6 } else { 0.0 })
        .unwrap()
        .as_front();
    let fit = bistable_stability_constants(&f.phi_b, &f.bistable, &f.kernel, &u0, 60.0).unwrap();
    let omega = fit.omega_b.expect("defect above roundoff");
    assert!(omega > 0.0 && fit.decaying, "omega_B = {omega}");
}

use approx::assert_abs_diff_eq;
use frontlab_core::fronts::{
    build_modified_interface, envelope_location, level_crossing, modified_c_max, path_statistics,
    shifted_envelopes, width_sup, ModifiedParams,
};
use frontlab_core::grid::Field;
use frontlab_core::path::{InterfacePath, PathKind};
use frontlab_core::verify::{diameter, oscillation_bound, verify_oscillation, verify_width};
use frontlab_core::Error;

const PARAMS: ModifiedParams = ModifiedParams {
    c_b: 0.2,
    c0_big: 1.0,
    // Leaves room for the ramp overshoot just before each hit.
    t_b: 1.0,
    delta_star: 0.2,
    c_tilde: 1.5,
};

fn line(speed: f64, s: f64, t_end: f64, dt: f64) -> InterfacePath {
    let n = ((t_end - s) / dt).round() as usize;
    let times: Vec<f64> = (0..=n).map(|k| s + k as f64 * dt).collect();
    let values = times.iter().map(|t| speed * (t - s)).collect();
    InterfacePath::from_samples(PathKind::Level, 0.3, times, values).unwrap()
}

#[test]
fn first_hit_of_a_straight_front() {
    let s = -5.0;
    let b = build_modified_interface(&line(1.0, s, 30.0, 0.01), PARAMS).unwrap();
    let jump = 2.0 * PARAMS.c0_big + 1.0;
    let expected = jump / (1.0 - 0.5 * PARAMS.c_b);
    assert_abs_diff_eq!(b.hitting_times[1] - s, expected, epsilon = 1e-9);
    // A constant-speed front hits at equal gaps.
    for g in b.gaps() {
        assert_abs_diff_eq!(g, expected, epsilon = 1e-8);
        assert!(b.gap_bounds.0 <= g && g <= b.gap_bounds.1);
    }
    assert!(!b.truncated);
}

#[test]
fn interface_stays_between_front_and_ceiling() {
    let x = line(0.7, 0.0, 40.0, 0.01);
    let b = build_modified_interface(&x, PARAMS).unwrap();
    for (k, (&t, &xs)) in x.times.iter().zip(&x.values).enumerate() {
        let gap = b.path.values[k] - xs;
        assert!(gap >= -1e-9 && gap <= b.d_max + 1e-9, "gap {gap} at t = {t}");
    }
    for (n, &tn) in b.hitting_times.iter().enumerate().skip(1) {
        assert_abs_diff_eq!(b.eval(tn), b.anchors[n] + b.jump, epsilon = 1e-9);
    }
}

#[test]
fn slope_matches_differences_and_its_bound() {
    let b = build_modified_interface(&line(1.0, 0.0, 20.0, 0.01), PARAMS).unwrap();
    let c_max = modified_c_max(PARAMS.c_b, PARAMS.c0_big, PARAMS.delta_star);
    assert_abs_diff_eq!(b.c_max, c_max, epsilon = 1e-12);
    let e = 1e-6;
    let mut t = 0.05;
    while t < 19.9 {
        let fd = (b.eval(t + e) - b.eval(t - e)) / (2.0 * e);
        assert!((fd - b.slope(t)).abs() <= 1e-4 * c_max, "slope mismatch at {t}");
        assert!(b.slope(t) >= 0.5 * PARAMS.c_b - 1e-12 && b.slope(t) <= c_max + 1e-9);
        t += 0.013;
    }
}

#[test]
fn construction_rejects_wide_ramps_and_coarse_paths() {
    let p = ModifiedParams {
        delta_star: 0.5,
        ..PARAMS
    };
    assert!(matches!(
        build_modified_interface(&line(1.0, 0.0, 10.0, 0.01), p),
        Err(Error::InvalidArgument(_))
    ));
    assert!(matches!(
        build_modified_interface(&line(1.0, 0.0, 10.0, 0.05), PARAMS),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn stalled_front_breaks_the_sandwich() {
    let mut x = line(1.0, 0.0, 60.0, 0.01);
    for (t, v) in x.times.iter().zip(x.values.iter_mut()) {
        if *t > 10.0 {
            *v = 10.0;
        }
    }
    assert!(matches!(
        build_modified_interface(&x, PARAMS),
        Err(Error::ConstructionInvariant(_))
    ));
}

#[test]
fn ramp_overshoots_a_ceiling_without_lag() {
    let p = ModifiedParams { t_b: 0.0, ..PARAMS };
    let r = build_modified_interface(&line(1.0, 0.0, 20.0, 0.01), p);
    assert!(matches!(r, Err(Error::ConstructionInvariant(_))));
    // The excess is the junction's lead over a front running at speed 1.
    let b = build_modified_interface(&line(1.0, 0.0, 20.0, 0.01), PARAMS).unwrap();
    let t1 = b.hitting_times[1];
    let excess = (1..200)
        .map(|k| {
            let t = t1 - PARAMS.delta_star * k as f64 / 200.0;
            b.eval(t) - t - b.jump
        })
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(excess > 0.0 && excess < 0.01, "excess {excess}");
}

#[test]
fn shifted_envelopes_keep_a_constant_gap() {
    let b = build_modified_interface(&line(1.0, 0.0, 20.0, 0.01), PARAMS).unwrap();
    let (lo, hi) = shifted_envelopes(&b.path, b.d_max, 1.5, 0.4);
    let gaps: Vec<f64> = hi.values.iter().zip(&lo.values).map(|(a, b)| a - b).collect();
    for g in &gaps {
        assert_abs_diff_eq!(*g, b.d_max + 1.5 + 0.4, epsilon = 1e-9);
    }
    let (lo2, _) = shifted_envelopes(&b.path, b.d_max, 3.0, 0.4);
    for (a, c) in lo.values.iter().zip(&lo2.values) {
        assert_abs_diff_eq!(a - c, 1.5, epsilon = 1e-9);
    }
}

#[test]
fn envelope_of_a_pure_exponential_is_its_shift() {
    let lambda = 0.8;
    let f = Field::centered(0.0, 400, 0.05, 0.0, |x| (-lambda * (x - 3.0)).exp().min(1.0)).unwrap();
    assert_abs_diff_eq!(envelope_location(&f, lambda).unwrap(), 3.0, epsilon = 1e-9);
    assert!(level_crossing(&f, 1.5).is_err());
}

#[test]
fn width_of_a_path_with_itself_is_zero() {
    let x = line(0.5, 0.0, 10.0, 0.1);
    assert_eq!(width_sup(&x, &x), 0.0);
    let y = x.shifted(PathKind::Level, -0.25);
    assert_abs_diff_eq!(width_sup(&x, &y), 0.25, epsilon = 1e-12);
    let stats = path_statistics(&[&x], None, Some(&x), &[0.0, 1.0], 0.0, 10.0);
    assert_eq!(stats.widths[0].sup, 0.0);
    assert_eq!(stats.oscillations[0].1, 0.0);
    assert_abs_diff_eq!(stats.oscillations[1].1, 0.5, epsilon = 1e-9);
}

#[test]
fn steeper_ramps_are_narrower() {
    let ramp = |slope: f64| {
        Field::centered(0.0, 400, 0.05, 0.0, move |x| (0.5 - slope * x).clamp(0.0, 1.0)).unwrap()
    };
    let a = diameter(&ramp(0.1), 0.1);
    let b = diameter(&ramp(0.2), 0.1);
    assert_abs_diff_eq!(a, 8.0, epsilon = 0.051);
    assert_abs_diff_eq!(b, 4.0, epsilon = 0.051);
}

#[test]
fn width_report_over_translating_fronts() {
    let x1 = line(0.5, 0.0, 20.0, 0.1);
    let mut x2 = x1.shifted(PathKind::Level, -1.0);
    x2.parameter = 0.6;
    let snaps: Vec<Field> = (0..=20)
        .map(|k| {
            let t = k as f64;
            Field::centered(0.0, 400, 0.05, t, move |x| (0.5 - 0.25 * (x - 0.5 * t)).clamp(0.0, 1.0)).unwrap()
        })
        .collect();
    let r = verify_width(&[&x1, &x2], &snaps, &[0.1], 0.0, 10.0, 20.0, 0.05);
    assert_abs_diff_eq!(r.full.pair(0.3, 0.6).unwrap(), 1.0, epsilon = 1e-12);
    // Diameters are measured on the lattice, so they wobble by a cell.
    assert!(r.stable && r.growth <= 0.1 / 3.1, "{r:?}");
}

#[test]
fn oscillation_bound_steps_with_eta0() {
    assert_eq!(oscillation_bound(0.0, 0.5, 2.0), (0, 2.0));
    assert_eq!(oscillation_bound(0.5, 0.5, 2.0), (1, 4.0));
    assert_eq!(oscillation_bound(1.49, 0.5, 2.0), (2, 6.0));
    let x = line(0.5, 0.0, 10.0, 0.01);
    let r = verify_oscillation(&x, 1.0, 0.25, (1.0, 1.0), (1.0, 1.0), &[0.0, 0.5, 2.0]).unwrap();
    assert_eq!(r.rows[0].measured, 0.0);
    assert_abs_diff_eq!(r.rows[2].measured, 1.0, epsilon = 1e-9);
    assert_abs_diff_eq!(r.eta0, 0.125, epsilon = 1e-15);
    assert!(r.passed());
    assert!(verify_oscillation(&x, 0.0, 0.25, (1.0, 1.0), (1.0, 1.0), &[1.0]).is_err());
}

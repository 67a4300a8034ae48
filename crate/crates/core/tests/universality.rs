use stm_core::universality::{
    efimov_ratio, ratio_deviations, scaling_curve, threshold_locate, threshold_locate_in,
    SolverSettings, THRESHOLD_RATIO,
};

/// Resolves the fourth unitarity level (ε ≈ 7e-11).
fn fine() -> SolverSettings {
    SolverSettings {
        grid_n: 300,
        map_scale: 0.01,
        min_binding: 1e-13,
        ..SolverSettings::default()
    }
}

#[test]
fn excited_threshold_is_universal() {
    let s = SolverSettings::default();
    let t1 = threshold_locate(1, &s).unwrap();
    assert!((t1.ratio - THRESHOLD_RATIO).abs() < 0.01, "{}", t1.ratio);
    let t0 = threshold_locate(0, &s).unwrap();
    assert!((t0.ratio - THRESHOLD_RATIO).abs() > (t1.ratio - THRESHOLD_RATIO).abs());

    let narrow = threshold_locate_in(1, &s, (0.8 * t1.eps2, 1.25 * t1.eps2)).unwrap();
    assert!((narrow.ratio - t1.ratio).abs() < 1e-3);
}

#[test]
fn consecutive_excited_curves_coincide() {
    let s = fine();
    let xs = [0.0, 0.1, 0.2, 0.3];
    let c1 = scaling_curve(&xs.map(|x| x * x * 1.826e-5), 1, &s).unwrap();
    let c2 = scaling_curve(&xs.map(|x| x * x * 3.5456e-8), 2, &s).unwrap();
    assert_eq!(c1.points.len(), 4);
    assert_eq!(c2.points.len(), 4);
    for p in &c2.points {
        if let Some(y1) = c1.y_at(p.x) {
            assert!((p.y / y1 - 1.0).abs() < 0.02, "x={} {} vs {}", p.x, p.y, y1);
        }
    }
    let x0 = &c1.points[0];
    assert_eq!(x0.x, 0.0);
    assert!((x0.y / efimov_ratio().powf(-0.5) - 1.0).abs() < 0.02);
}

#[test]
fn curve_rises_towards_the_cut_and_is_reproducible() {
    let s = SolverSettings::default();
    let eps2s = [0.0, 2e-6, 4e-6, 6e-6];
    let a = scaling_curve(&eps2s, 1, &s).unwrap();
    let b = scaling_curve(&eps2s, 1, &s).unwrap();
    assert_eq!(a, b);
    assert!(a
        .points
        .windows(2)
        .all(|w| w[1].x > w[0].x && w[1].y > w[0].y));
    for p in &a.points {
        assert!(p.y > p.x && p.y < 1.0);
        assert!(p.x <= THRESHOLD_RATIO.sqrt() * 1.01);
    }
}

#[test]
fn ratios_approach_the_asymptotic_value_up_the_tower() {
    let spectrum = fine().spectrum(0.0, 4).unwrap();
    assert_eq!(spectrum.levels.len(), 4);
    let dev = ratio_deviations(&spectrum);
    assert!(dev.windows(2).all(|w| w[1] <= w[0]), "{dev:?}");
}

use proptest::prelude::*;
use stm_core::quadrature::{gauss_legendre, halfline_point, MomentumGrid};

fn legendre_moment(k: u32) -> f64 {
    if k % 2 == 1 {
        0.0
    } else {
        2.0 / (k as f64 + 1.0)
    }
}

proptest! {
    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1(n in 1usize..40) {
        let (t, w) = gauss_legendre(n).unwrap();
        for k in 0..(2 * n as u32) {
            let q: f64 = t.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
            prop_assert!((q - legendre_moment(k)).abs() < 1e-13, "n={} k={} q={}", n, k, q);
        }
    }

    #[test]
    fn mapped_nodes_are_positive_and_increasing(n in 1usize..300, s in 1e-3f64..1e3) {
        let g = MomentumGrid::new(n, s).unwrap();
        prop_assert!(g.nodes().iter().all(|x| *x > 0.0 && x.is_finite()));
        prop_assert!(g.weights().iter().all(|w| *w > 0.0 && w.is_finite()));
        prop_assert!(g.nodes().windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn lorentzian_integral(s in 0.05f64..20.0, c in 0.1f64..10.0) {
        // ∫₀^∞ dx c/(c² + x²) = π/2
        let g = MomentumGrid::new(200, s).unwrap();
        let v = g.integrate(|x| c / (c * c + x * x));
        prop_assert!((v - std::f64::consts::FRAC_PI_2).abs() < 1e-6 * (s / c + c / s));
    }

    #[test]
    fn map_is_monotone(a in -1.0f64..1.0, b in -1.0f64..1.0, s in 0.01f64..100.0) {
        prop_assume!(a < b && b < 1.0);
        prop_assert!(halfline_point(a, s).0 <= halfline_point(b, s).0);
    }
}

#[test]
fn smooth_integrands_converge_exponentially() {
    let exact = std::f64::consts::FRAC_PI_4;
    let f = |x: f64| 1.0 / ((1.0 + x * x) * (1.0 + x * x));
    let errors: Vec<f64> = [4, 8, 16]
        .iter()
        .map(|&n| (MomentumGrid::new(n, 2.0).unwrap().integrate(f) - exact).abs())
        .collect();
    assert!(errors[2] < 1e-10, "{errors:?}");
    assert!(errors[1] < errors[0]);
}

#[test]
fn grid_serializes_losslessly() {
    let g = MomentumGrid::new(17, 0.3).unwrap();
    let copy =
        MomentumGrid::from_parts(g.nodes().to_vec(), g.weights().to_vec(), g.map_scale()).unwrap();
    assert_eq!(g, copy);
}

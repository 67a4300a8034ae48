use stm_core::oracles::ieps_extrapolated;
use stm_core::quadrature::MomentumGrid;
use stm_core::scattering::{cross_section, solve, solve_fixed, ElasticChannel, UNITARITY_SLOPE};
use stm_core::twobody::ChannelConfig;
use stm_core::Error;

fn channel(eps2: f64, k: f64) -> ElasticChannel {
    ElasticChannel::new(ChannelConfig::new(eps2).unwrap(), k).unwrap()
}

fn grid() -> MomentumGrid {
    MomentumGrid::new(200, 1.0).unwrap()
}

#[test]
fn subtracted_solve_matches_shifted_pole_limit() {
    let ch = channel(1.0, 0.3);
    let sol = solve(&ch, &grid()).unwrap();
    let oracle = ieps_extrapolated(&ch, 1e-2).unwrap();
    let rel = (sol.on_shell - oracle).norm() / oracle.norm();
    assert!(rel < 1e-4, "relative difference {rel:e}");
    assert!(sol.refinement_drift.unwrap() < 1e-8);
}

#[test]
fn elastic_unitarity_holds_below_breakup() {
    let cfg = ChannelConfig::new(1.0).unwrap();
    let kb = ElasticChannel::breakup_momentum(&cfg);
    let values: Vec<f64> = (0..9)
        .map(|i| {
            let k = kb * (0.1 + 0.05 * i as f64);
            let sol = solve(&ElasticChannel::new(cfg, k).unwrap(), &grid()).unwrap();
            (1.0 / sol.on_shell).im / -k
        })
        .collect();
    let (lo, hi) = values
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(*v), b.max(*v)));
    assert!((hi - lo) / lo.abs() < 0.02, "{values:?}");
    for v in values {
        assert!((v + UNITARITY_SLOPE).abs() < 1e-6 * UNITARITY_SLOPE);
    }
}

#[test]
fn low_momentum_amplitude_settles() {
    let eps2 = 0.1f64;
    let a = solve(&channel(eps2, 0.05 * eps2.sqrt()), &grid())
        .unwrap()
        .low_energy_amplitude();
    let b = solve(&channel(eps2, 0.01 * eps2.sqrt()), &grid())
        .unwrap()
        .low_energy_amplitude();
    assert!((a / b - 1.0).abs() < 0.01, "{a} {b}");
}

#[test]
fn grid_node_on_shell_does_not_change_the_answer() {
    let g = grid();
    let k = g.nodes()[g.nearest(0.3)];
    let ch = channel(1.0, k);
    let hit = solve_fixed(&ch, &g).unwrap();
    let clear = solve_fixed(&ch, &MomentumGrid::new(200, 0.97).unwrap()).unwrap();
    assert!((hit.on_shell - clear.on_shell).norm() < 1e-9 * clear.on_shell.norm());
}

#[test]
fn cross_section_is_modulus_squared() {
    let sol = solve_fixed(&channel(2.0, 0.7), &grid()).unwrap();
    assert_eq!(cross_section(&sol), sol.on_shell.norm_sqr());
    assert_eq!(sol.h.len(), 200);
}

#[test]
fn breakup_region_is_rejected() {
    let cfg = ChannelConfig::new(1.0).unwrap();
    assert!(matches!(
        ElasticChannel::new(cfg, 1.2),
        Err(Error::UnsupportedRegion { .. })
    ));
}

use std::sync::OnceLock;

use stm_core::bound_state::{find_levels, spectator, BoundStateProblem};
use stm_core::quadrature::MomentumGrid;
use stm_core::twobody::ChannelConfig;
use stm_core::wavefunction::{density_table, norm, normalize, WaveFunction};

/// Ground state at eps2 = 0.01, compact enough for modest grids.
fn ground() -> &'static WaveFunction {
    static CELL: OnceLock<WaveFunction> = OnceLock::new();
    CELL.get_or_init(|| {
        let p = BoundStateProblem::new(
            ChannelConfig::new(0.01).unwrap(),
            MomentumGrid::new(120, 0.1).unwrap(),
        )
        .unwrap();
        let levels = find_levels(&p, 1).unwrap();
        WaveFunction::new(spectator(levels.levels[0], &p).unwrap()).unwrap()
    })
}

fn jacobi_2(q: [f64; 3], p: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let q2 = [0, 1, 2].map(|i| p[i] - 0.5 * q[i]);
    let p2 = [0, 1, 2].map(|i| -0.75 * q[i] - 0.5 * p[i]);
    (q2, p2)
}

#[test]
fn symmetric_under_pair_relabelling() {
    let wf = ground();
    for (q, p) in [
        ([0.1, 0.0, 0.05], [0.02, -0.3, 0.1]),
        ([1.0, 2.0, -0.5], [0.0, 0.2, 0.0]),
        ([0.01, 0.01, 0.0], [0.03, 0.0, -0.02]),
    ] {
        let base = wf.psi(q, p);
        let (q2, p2) = jacobi_2(q, p);
        let (q3, p3) = jacobi_2(q2, p2);
        assert!((wf.psi(q2, p2) - base).abs() < 1e-12 * base.abs());
        assert!((wf.psi(q3, p3) - base).abs() < 1e-12 * base.abs());
    }
}

#[test]
fn normalization_gives_unit_norm() {
    let mut wf = ground().clone();
    let (qg, pg) = (
        MomentumGrid::new(48, 0.15).unwrap(),
        MomentumGrid::new(48, 0.15).unwrap(),
    );
    let before = normalize(&mut wf, &qg, &pg).unwrap();
    assert!(before > 0.0);
    let after = norm(&wf, &qg, &pg).unwrap();
    assert!((after - 1.0).abs() < 1e-12);
}

#[test]
fn density_integrates_to_one_on_an_independent_grid() {
    let mut wf = ground().clone();
    let g = MomentumGrid::new(48, 0.15).unwrap();
    normalize(&mut wf, &g, &g).unwrap();
    let qg = MomentumGrid::new(72, 0.3).unwrap();
    let pg = MomentumGrid::new(72, 0.08).unwrap();
    let n = density_table(&wf, &qg, &pg).unwrap();
    let total: f64 = 4.0
        * std::f64::consts::PI
        * qg.iter()
            .zip(&n)
            .map(|((q, w), d)| w * q * q * d)
            .sum::<f64>();
    assert!((total - 1.0).abs() < 1e-3, "{total}");
    assert!(n.iter().all(|d| *d > 0.0));
}

#[test]
fn norm_is_stable_under_grid_doubling() {
    let wf = ground();
    let a = norm(
        wf,
        &MomentumGrid::new(40, 0.15).unwrap(),
        &MomentumGrid::new(40, 0.15).unwrap(),
    )
    .unwrap();
    let b = norm(
        wf,
        &MomentumGrid::new(80, 0.15).unwrap(),
        &MomentumGrid::new(80, 0.15).unwrap(),
    )
    .unwrap();
    assert!((a / b - 1.0).abs() < 1e-3, "{a} {b}");
}

#[test]
fn interpolant_reproduces_table_nodes() {
    let wf = ground();
    let t = wf.table();
    for (y, f) in t.nodes().iter().zip(&t.values).filter(|(y, _)| **y < 50.0) {
        assert!(
            (wf.spectator(*y) - f).abs() <= 1e-12 * f.abs().max(1e-300),
            "y={y}"
        );
    }
}

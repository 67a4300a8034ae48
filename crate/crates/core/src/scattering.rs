//! Elastic atom–dimer scattering below the breakup threshold.
//!
//! The scattered part of the spectator function carries the dimer pole of
//! `τ(E₃ − ¾q²)` at the on-shell momentum `q = k`, where
//! `E₃ = −ε₂ + ¾k²`. Writing it as `h(q)/(¾(k² − q²) + i0)` leaves the
//! regular amplitude `h`, which solves
//!
//! ```text
//! h(y) = D(y) + ∫₀^∞ dx x² 4π τ̂(y) ΔΛ(y, x) h(x) / (¾(k² − x²) + i0),
//! D(y) = 2 τ̂(y) ΔΛ(y, k),
//! ```
//!
//! with `ΔΛ(y, x) = Λ(E₃; y, x) − Λ(−1; y, x)` and
//! `τ̂(y) = ¾(k² − y²) τ(E₃ − ¾y²)`, which is finite at `y = k`.
//!
//! The pole is handled by subtraction: the integrand minus its on-shell
//! value is integrated by quadrature, and the on-shell value is multiplied
//! by the principal-value plus `−iπ/(2k)` residue term. The on-shell point
//! `k` is appended to the grid as an extra unknown.
//!
//! The amplitude is normalized up to a constant factor; only ratios,
//! moduli and `k`-dependence are meaningful. In this normalization elastic
//! unitarity reads `Im(1/h(k, k)) = 4π²k/3`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bound_state::{angular_log, SUBTRACTION_ENERGY};
use crate::error::{Error, Result};
use crate::integral_eq::{KernelMatrix, Scalar};
use crate::quadrature::MomentumGrid;
use crate::twobody::{tau_pole_residue, ChannelConfig};

const TWO_PI_SQUARED: f64 = 2.0 * PI * PI;

/// Nodes closer than this to `k` trigger a grid shift.
pub const NODE_CLEARANCE: f64 = 1e-6;

/// Relative jitter applied to the map scale when a node sits on `k`.
pub const MAP_SCALE_JITTER: f64 = 1e-3;

/// Largest relative change of `h(k, k)` accepted under grid doubling.
pub const REFINEMENT_TOLERANCE: f64 = 1e-4;

/// `Im(1/h(k, k)) / k` fixed by elastic unitarity in this normalization.
pub const UNITARITY_SLOPE: f64 = 4.0 * PI * PI / 3.0;

/// One atom–dimer channel at relative momentum `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticChannel {
    cfg: ChannelConfig,
    k: f64,
}

impl ElasticChannel {
    pub fn new(cfg: ChannelConfig, k: f64) -> Result<Self> {
        if cfg.eps2() <= 0.0 {
            return Err(Error::InvalidArgument(
                "elastic atom-dimer scattering needs a bound dimer (eps2 > 0)".into(),
            ));
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "on-shell momentum must be positive, got {k}"
            )));
        }
        let channel = Self { cfg, k };
        let energy = channel.energy();
        if !(energy < 0.0) {
            return Err(Error::UnsupportedRegion { energy });
        }
        Ok(channel)
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.cfg
    }

    pub fn momentum(&self) -> f64 {
        self.k
    }

    /// Three-body energy `E₃ = −ε₂ + ¾k²`.
    pub fn energy(&self) -> f64 {
        -self.cfg.eps2() + 0.75 * self.k * self.k
    }

    /// Momentum at which `E₃` reaches the breakup threshold.
    pub fn breakup_momentum(cfg: &ChannelConfig) -> f64 {
        (4.0 * cfg.eps2() / 3.0).sqrt()
    }
}

/// `τ̂(y) = ¾(k² − y²) τ(E₃ − ¾y²) = (√ε₂ + √(ε₂ + ¾(y² − k²)))/(2π²)`.
pub fn regular_tau(y: f64, channel: &ElasticChannel) -> f64 {
    let eps2 = channel.cfg.eps2();
    let k = channel.k;
    if y == k {
        // Both branches coincide; the residue is the on-shell value.
        return tau_pole_residue(&channel.cfg).unwrap_or(0.0);
    }
    (eps2.sqrt() + (eps2 + 0.75 * (y * y - k * k)).sqrt()) / TWO_PI_SQUARED
}

fn angular_difference(e3: f64, y: f64, x: f64) -> Result<f64> {
    Ok(angular_log(e3, y, x)? - angular_log(SUBTRACTION_ENERGY, y, x)?)
}

/// Inhomogeneous term `D(y) = 2 τ̂(y) ΔΛ(y, k)`.
pub fn driver(y: f64, channel: &ElasticChannel) -> Result<f64> {
    let dl = angular_difference(channel.energy(), y, channel.k)?;
    Ok(2.0 * regular_tau(y, channel) * dl)
}

/// Regular part `4π τ̂(y) ΔΛ(y, x)` of the scattering kernel.
pub fn kernel_numerator(y: f64, x: f64, channel: &ElasticChannel) -> Result<f64> {
    let dl = angular_difference(channel.energy(), y, x)?;
    Ok(4.0 * PI * regular_tau(y, channel) * dl)
}

/// Half-off-shell amplitude on a grid plus its on-shell value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringSolution {
    pub channel: ElasticChannel,
    pub grid: MomentumGrid,
    /// `h(y_i, k)` at the grid nodes.
    pub h: Vec<Complex64>,
    /// `h(k, k)`.
    pub on_shell: Complex64,
    pub cross_section: f64,
    pub condition: f64,
    /// Relative change of `h(k, k)` under grid doubling, when checked.
    pub refinement_drift: Option<f64>,
}

impl ScatteringSolution {
    /// `1 / Re(1/h(k, k))`: the on-shell amplitude with the unitarity
    /// term removed, real and finite as `k → 0`.
    pub fn low_energy_amplitude(&self) -> f64 {
        1.0 / (1.0 / self.on_shell).re
    }

    pub fn half_shell(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        self.grid
            .nodes()
            .iter()
            .copied()
            .zip(self.h.iter().copied())
    }
}

/// `|h(k, k)|²`.
pub fn cross_section(solution: &ScatteringSolution) -> f64 {
    solution.on_shell.norm_sqr()
}

fn clear_of_pole(grid: &MomentumGrid, k: f64) -> Result<MomentumGrid> {
    let mut grid = grid.clone();
    for _ in 0..16 {
        let near = grid.nodes()[grid.nearest(k)];
        if (near - k).abs() >= NODE_CLEARANCE {
            return Ok(grid);
        }
        let scale = grid.map_scale() * (1.0 + MAP_SCALE_JITTER);
        log::debug!("grid node {near} within {NODE_CLEARANCE} of k={k}; map scale -> {scale}");
        grid = MomentumGrid::new(grid.len(), scale)?;
    }
    Err(Error::NumericalQuality(format!(
        "could not move grid nodes away from k = {k}"
    )))
}

/// Solves on one grid without the refinement check.
pub fn solve_fixed(channel: &ElasticChannel, grid: &MomentumGrid) -> Result<ScatteringSolution> {
    let grid = clear_of_pole(grid, channel.k)?;
    let k = channel.k;
    let k2 = k * k;
    let nodes = grid.nodes();
    let weights = grid.weights();
    let n = nodes.len();
    let dim = n + 1;
    let momentum = |r: usize| if r < n { nodes[r] } else { k };

    // Σ_j w_j/(k² − x_j²) approximates the vanishing principal value ∫dx/(k² − x²).
    let pv_sum: f64 = nodes
        .iter()
        .zip(weights)
        .map(|(&x, &w)| w / (k2 - x * x))
        .sum();
    let pole_factor = Complex64::new(pv_sum, PI / (2.0 * k));
    let column_weights: Vec<f64> = nodes
        .iter()
        .zip(weights)
        .map(|(&x, &w)| w * x * x / (0.75 * (k2 - x * x)))
        .collect();

    let mut entries = vec![Complex64::zero(); dim * dim];
    entries
        .par_chunks_mut(dim)
        .enumerate()
        .try_for_each(|(r, row)| -> Result<()> {
            let y = momentum(r);
            for (j, slot) in row[..n].iter_mut().enumerate() {
                let a = kernel_numerator(y, nodes[j], channel)?;
                *slot = Complex64::from_real(-column_weights[j] * a);
            }
            let a_k = kernel_numerator(y, k, channel)?;
            row[n] = pole_factor * (k2 * a_k / 0.75);
            row[r] += Complex64::one();
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Assembly {
                    i: r,
                    j: dim,
                    energy: channel.energy(),
                });
            }
            Ok(())
        })?;
    let matrix = KernelMatrix::from_entries(entries, dim, channel.energy())?;
    let rhs = (0..dim)
        .map(|r| driver(momentum(r), channel).map(Complex64::from_real))
        .collect::<Result<Vec<_>>>()?;
    let solution = matrix.solve(&rhs)?;
    let mut h = solution.values;
    let on_shell = h.pop().unwrap_or_default();
    Ok(ScatteringSolution {
        channel: *channel,
        grid,
        h,
        on_shell,
        cross_section: on_shell.norm_sqr(),
        condition: solution.condition,
        refinement_drift: None,
    })
}

/// Solves on `grid` and confirms `h(k, k)` against a doubled grid.
pub fn solve(channel: &ElasticChannel, grid: &MomentumGrid) -> Result<ScatteringSolution> {
    let mut coarse = solve_fixed(channel, grid)?;
    let fine = solve_fixed(
        channel,
        &MomentumGrid::new(2 * grid.len(), grid.map_scale())?,
    )?;
    let difference = (fine.on_shell - coarse.on_shell).norm();
    let drift = if difference == 0.0 {
        0.0
    } else {
        difference / fine.on_shell.norm()
    };
    if !(drift <= REFINEMENT_TOLERANCE) {
        return Err(Error::NumericalQuality(format!(
            "on-shell amplitude drifts by {drift:e} under grid doubling"
        )));
    }
    coarse.refinement_drift = Some(drift);
    Ok(coarse)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn channel(eps2: f64, k: f64) -> ElasticChannel {
        ElasticChannel::new(ChannelConfig::new(eps2).unwrap(), k).unwrap()
    }

    #[test]
    fn channel_validation() {
        let cfg = ChannelConfig::new(1.0).unwrap();
        assert!(ElasticChannel::new(ChannelConfig::unitarity(), 0.1).is_err());
        assert!(ElasticChannel::new(cfg, 0.0).is_err());
        let kb = ElasticChannel::breakup_momentum(&cfg);
        assert!(matches!(
            ElasticChannel::new(cfg, kb * 1.0001),
            Err(Error::UnsupportedRegion { .. })
        ));
        assert!(ElasticChannel::new(cfg, kb * 0.9999).is_ok());
    }

    #[test]
    fn regular_tau_is_continuous_at_the_pole() {
        let ch = channel(0.7, 0.4);
        let at = regular_tau(0.4, &ch);
        assert_eq!(at, tau_pole_residue(ch.config()).unwrap());
        for d in [1e-4, 1e-6, 1e-8] {
            assert!((regular_tau(0.4 + d, &ch) - at).abs() < d * at);
            assert!((regular_tau(0.4 - d, &ch) - at).abs() < d * at);
        }
    }

    #[test]
    fn regular_tau_matches_tau_times_pole_factor() {
        let ch = channel(0.5, 0.3);
        for y in [0.01, 0.2, 0.7, 5.0] {
            let t = crate::twobody::tau(ch.energy() - 0.75 * y * y, ch.config()).unwrap();
            let expected = 0.75 * (0.09 - y * y) * t;
            assert!((regular_tau(y, &ch) - expected).abs() < 1e-12 * expected.abs());
        }
    }

    #[test]
    fn driver_vanishes_at_subtraction_point() {
        // E₃ = −1 needs eps2 > 1: ¾k² = eps2 − 1
        let ch = channel(1.3, (0.3f64 / 0.75).sqrt());
        assert!((ch.energy() + 1.0).abs() < 1e-15);
        for y in [0.01, 0.5, 3.0] {
            assert!(driver(y, &ch).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn driver_decays_in_the_ultraviolet() {
        let ch = channel(1.0, 0.1);
        let near = driver(1.0, &ch).unwrap().abs();
        let far = driver(1e4, &ch).unwrap().abs();
        assert!(far < 1e-6 * near);
    }

    #[test]
    fn driver_spot_value() {
        let ch = channel(1.0, 0.1);
        let e3 = -1.0 + 0.75 * 0.01;
        let tau_hat = (1.0 + (1.0f64).sqrt()) / (2.0 * PI * PI);
        let dl = angular_log(e3, 0.1, 0.1).unwrap() - angular_log(-1.0, 0.1, 0.1).unwrap();
        let v = driver(0.1, &ch).unwrap();
        assert_eq!(v, 2.0 * tau_hat * dl);
        assert!(v.is_finite() && v != 0.0);
    }

    #[test]
    fn node_on_shell_is_shifted() {
        let grid = MomentumGrid::new(40, 1.0).unwrap();
        let k = grid.nodes()[12];
        let ch = channel(1.0, k);
        let sol = solve_fixed(&ch, &grid).unwrap();
        assert!(sol.grid.map_scale() > 1.0);
        assert!(sol
            .grid
            .nodes()
            .iter()
            .all(|x| (x - k).abs() >= NODE_CLEARANCE));
    }
}

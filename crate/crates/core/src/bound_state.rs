//! Three-boson bound states from the subtracted STM equation.
//!
//! In units of the subtraction scale the s-wave equation reads
//!
//! ```text
//! f(y) = ∫₀^∞ dx K(y, x; E₃) f(x),
//! K(y, x; E₃) = 4π τ(E₃ − ¾y²) x² [Λ(E₃; y, x) − Λ(−1; y, x)],
//! Λ(a; y, x) = ∫₋₁¹ dz 1/(a − y² − x² − xyz).
//! ```
//!
//! Levels are the energies where `det(1 − wK)` changes sign. The spectator
//! function is the corresponding null vector.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integral_eq::{KernelMatrix, LogDet, LuFactorization};
use crate::quadrature::MomentumGrid;
use crate::twobody::{tau, ChannelConfig};

const FOUR_PI: f64 = 4.0 * PI;

/// Energy of the kernel subtraction, `−μ₍₃₎²` in scaled units.
pub const SUBTRACTION_ENERGY: f64 = -1.0;

/// Scan density of the determinant search.
pub const SCAN_POINTS_PER_DECADE: usize = 200;

/// Relative distance below the two-body cut at which the default window
/// stops. A level closer to the cut than this counts as absorbed.
pub const CUT_MARGIN: f64 = 1e-8;

/// Shallowest energy scanned when the cut sits at zero.
pub const DEFAULT_MIN_BINDING: f64 = 1e-10;

/// Default relative bisection tolerance for level energies.
pub const DEFAULT_LEVEL_TOLERANCE: f64 = 1e-13;

/// Condition estimates above this reject a spectator pivot.
const PIVOT_CONDITION_LIMIT: f64 = 1e13;

/// `Λ(a; y, x) = (1/xy) ln[(a − y² − x² + xy)/(a − y² − x² − xy)]`.
///
/// Evaluated as `(2/D) · atanh(u)/u` with `D = a − y² − x²` and
/// `u = xy/|D| < 1`, which is exact at `xy → 0`.
pub fn angular_log(a: f64, y: f64, x: f64) -> Result<f64> {
    if !(a < 0.0) {
        return Err(Error::UnsupportedRegion { energy: a });
    }
    if !(y >= 0.0 && x >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "momenta must be non-negative, got y={y}, x={x}"
        )));
    }
    Ok(angular_log_unchecked(a, y, x))
}

#[inline]
fn angular_log_unchecked(a: f64, y: f64, x: f64) -> f64 {
    let d = a - y * y - x * x;
    let u = x * y / -d;
    let ratio = if u == 0.0 { 1.0 } else { u.atanh() / u };
    2.0 / d * ratio
}

#[inline]
fn kernel_from_parts(tau_y: f64, x: f64, angular_difference: f64) -> f64 {
    FOUR_PI * tau_y * (x * x) * angular_difference
}

/// Subtracted s-wave STM kernel `K(y, x; E₃)`.
pub fn stm_kernel(y: f64, x: f64, e3: f64, cfg: &ChannelConfig) -> Result<f64> {
    let dl = angular_log(e3, y, x)? - angular_log_unchecked(SUBTRACTION_ENERGY, y, x);
    if dl == 0.0 || x == 0.0 {
        return Ok(0.0);
    }
    let t = tau(e3 - 0.75 * y * y, cfg)?;
    Ok(kernel_from_parts(t, x, dl))
}

/// Energy interval searched for levels, `deepest < shallowest ≤ −ε₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyWindow {
    pub deepest: f64,
    pub shallowest: f64,
}

/// Grid, two-body input and search settings of a bound-state calculation.
#[derive(Debug, Clone)]
pub struct BoundStateProblem {
    cfg: ChannelConfig,
    grid: MomentumGrid,
    window: EnergyWindow,
    tolerance: f64,
    // Λ(−1; y_i, x_j), independent of the energy
    subtraction: Vec<f64>,
}

impl BoundStateProblem {
    /// Default window: from the subtraction point up to just below the cut
    /// (or to [`DEFAULT_MIN_BINDING`] at unitarity).
    pub fn new(cfg: ChannelConfig, grid: MomentumGrid) -> Result<Self> {
        let shallowest = -(cfg.eps2() * (1.0 + CUT_MARGIN)).max(DEFAULT_MIN_BINDING);
        if shallowest <= SUBTRACTION_ENERGY {
            return Err(Error::InvalidArgument(format!(
                "eps2 = {} leaves no room below the cut above the subtraction point",
                cfg.eps2()
            )));
        }
        let window = EnergyWindow {
            deepest: SUBTRACTION_ENERGY,
            shallowest,
        };
        Self::with_window(cfg, grid, window)
    }

    pub fn with_window(
        cfg: ChannelConfig,
        grid: MomentumGrid,
        window: EnergyWindow,
    ) -> Result<Self> {
        let EnergyWindow {
            deepest,
            shallowest,
        } = window;
        if !(deepest.is_finite() && deepest < shallowest && shallowest < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "search window [{deepest}, {shallowest}] must be finite, ordered and negative"
            )));
        }
        if shallowest > -cfg.eps2() {
            return Err(Error::InvalidArgument(format!(
                "search window reaches above the two-body cut at {}",
                -cfg.eps2()
            )));
        }
        let nodes = grid.nodes();
        let subtraction = nodes
            .iter()
            .flat_map(|&y| {
                nodes
                    .iter()
                    .map(move |&x| angular_log_unchecked(SUBTRACTION_ENERGY, y, x))
            })
            .collect();
        Ok(Self {
            cfg,
            grid,
            window,
            tolerance: DEFAULT_LEVEL_TOLERANCE,
            subtraction,
        })
    }

    /// Relative bisection tolerance on level energies.
    pub fn with_tolerance(mut self, tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0 && tolerance < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "level tolerance must lie in (0, 1), got {tolerance}"
            )));
        }
        self.tolerance = tolerance;
        Ok(self)
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    pub fn window(&self) -> EnergyWindow {
        self.window
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// `1 − wK` at energy `e3`, bit-identical to assembling [`stm_kernel`].
    pub fn matrix(&self, e3: f64) -> Result<KernelMatrix<f64>> {
        if !(e3 < 0.0) {
            return Err(Error::UnsupportedRegion { energy: e3 });
        }
        let nodes = self.grid.nodes();
        let weights = self.grid.weights();
        let n = nodes.len();
        let mut entries = vec![0.0; n * n];
        entries
            .par_chunks_mut(n)
            .enumerate()
            .try_for_each(|(i, row)| -> Result<()> {
                let y = nodes[i];
                let tau_y = tau(e3 - 0.75 * y * y, &self.cfg);
                let sub = &self.subtraction[i * n..(i + 1) * n];
                for (j, slot) in row.iter_mut().enumerate() {
                    let x = nodes[j];
                    let dl = angular_log_unchecked(e3, y, x) - sub[j];
                    let k = if dl == 0.0 {
                        0.0
                    } else {
                        kernel_from_parts(tau_y.clone()?, x, dl)
                    };
                    if !k.is_finite() {
                        return Err(Error::Assembly { i, j, energy: e3 });
                    }
                    let mut value = -(weights[j] * k);
                    if i == j {
                        value += 1.0;
                    }
                    *slot = value;
                }
                Ok(())
            })?;
        KernelMatrix::from_entries(entries, n, e3)
    }
}

/// Sign and log-magnitude of `det(1 − wK(E₃))`.
pub fn det_at(e3: f64, problem: &BoundStateProblem) -> Result<LogDet<f64>> {
    Ok(problem.matrix(e3)?.logdet_sign())
}

/// Levels found for one ε₂, deepest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfimovSpectrum {
    pub eps2: f64,
    /// Binding energies ε₃⁽ᴺ⁾ > ε₂, strictly decreasing.
    pub levels: Vec<f64>,
    /// ε₃⁽ᴺ⁾ / ε₃⁽ᴺ⁺¹⁾.
    pub ratios: Vec<f64>,
    pub grid_n: usize,
    pub map_scale: f64,
    pub window: EnergyWindow,
    /// Set when the window held no sign change.
    pub diagnostic: Option<String>,
}

fn scan_energies(window: EnergyWindow) -> Vec<f64> {
    let (deep, shallow) = (-window.deepest, -window.shallowest);
    let decades = (deep / shallow).log10();
    let steps = ((SCAN_POINTS_PER_DECADE as f64 * decades).ceil() as usize).max(1);
    let mut energies: Vec<f64> = (0..steps)
        .map(|k| -deep * (shallow / deep).powf(k as f64 / steps as f64))
        .collect();
    energies.push(window.shallowest);
    energies
}

fn bisect_level(
    problem: &BoundStateProblem,
    mut deep: f64,
    mut shallow: f64,
    deep_sign: f64,
) -> Result<f64> {
    loop {
        let mid = 0.5 * (deep + shallow);
        if (shallow - deep).abs() <= problem.tolerance * mid.abs() || mid == deep || mid == shallow
        {
            return Ok(-mid);
        }
        let s = det_at(mid, problem)?.sign;
        if s == 0.0 {
            return Ok(-mid);
        }
        if s == deep_sign {
            deep = mid;
        } else {
            shallow = mid;
        }
    }
}

/// Logarithmic determinant scan of the window followed by bisection.
///
/// Only sign changes are accepted as roots. At most `max_levels` levels
/// are returned, deepest first.
pub fn find_levels(problem: &BoundStateProblem, max_levels: usize) -> Result<EfimovSpectrum> {
    if max_levels == 0 {
        return Err(Error::InvalidArgument(
            "max_levels must be at least 1".into(),
        ));
    }
    let energies = scan_energies(problem.window);
    let mut levels = Vec::new();
    let mut previous: Option<(f64, f64)> = None;
    'scan: for chunk in energies.chunks(SCAN_POINTS_PER_DECADE) {
        let signs = chunk
            .par_iter()
            .map(|&e| det_at(e, problem).map(|d| d.sign))
            .collect::<Result<Vec<_>>>()?;
        for (&e, &s) in chunk.iter().zip(&signs) {
            if let Some((pe, ps)) = previous {
                if s == 0.0 {
                    levels.push(-e);
                } else if ps != 0.0 && s != ps {
                    levels.push(bisect_level(problem, pe, e, ps)?);
                }
                if levels.len() == max_levels {
                    break 'scan;
                }
            }
            previous = Some((e, s));
        }
    }
    let ratios = levels.windows(2).map(|p| p[0] / p[1]).collect();
    let diagnostic = levels.is_empty().then(|| {
        format!(
            "no determinant sign change in [{}, {}] ({} scan points)",
            problem.window.deepest,
            problem.window.shallowest,
            energies.len()
        )
    });
    if let Some(d) = &diagnostic {
        log::info!("{d}");
    }
    Ok(EfimovSpectrum {
        eps2: problem.cfg.eps2(),
        levels,
        ratios,
        grid_n: problem.grid.len(),
        map_scale: problem.grid.map_scale(),
        window: problem.window,
        diagnostic,
    })
}

/// Spectator function of one level, normalized to one at `pivot`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectatorTable {
    /// Binding energy ε₃; the three-body energy is −ε₃.
    pub energy: f64,
    pub grid: MomentumGrid,
    pub values: Vec<f64>,
    pub pivot: usize,
    /// `max|M f| / max|f|` of the full homogeneous system.
    pub residual: f64,
}

impl SpectatorTable {
    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes()
    }
}

fn pivot_order(start: usize, n: usize) -> impl Iterator<Item = usize> {
    (0..2 * n).filter_map(move |k| {
        let offset = k.div_ceil(2);
        if k % 2 == 1 {
            (start + offset < n).then_some(start + offset)
        } else {
            start.checked_sub(offset)
        }
    })
}

/// Fixes `f(pivot) = 1`, drops the redundant pivot equation and solves the
/// remaining `(n−1)`-dimensional system.
pub fn spectator(binding: f64, problem: &BoundStateProblem) -> Result<SpectatorTable> {
    if !(binding > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "binding energy must be positive, got {binding}"
        )));
    }
    let m = problem.matrix(-binding)?;
    let n = m.dim();
    if n < 2 {
        return Err(Error::Extraction("grid too small".into()));
    }
    let start = problem.grid.nearest(binding.sqrt());
    let mut last_condition = f64::NAN;
    for pivot in pivot_order(start, n) {
        let keep: Vec<usize> = (0..n).filter(|&i| i != pivot).collect();
        let reduced: Vec<f64> = keep
            .iter()
            .flat_map(|&i| keep.iter().map(move |&j| (i, j)))
            .map(|(i, j)| m.get(i, j))
            .collect();
        let rhs: Vec<f64> = keep.iter().map(|&i| -m.get(i, pivot)).collect();
        let lu = LuFactorization::new(reduced.clone(), n - 1);
        if lu.is_singular() {
            continue;
        }
        let norm = (0..n - 1)
            .map(|j| {
                (0..n - 1)
                    .map(|i| reduced[i * (n - 1) + j].abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        last_condition = lu.condition_estimate(norm);
        if !(last_condition < PIVOT_CONDITION_LIMIT) {
            continue;
        }
        let partial = lu.solve(&rhs);
        let mut values = Vec::with_capacity(n);
        values.extend_from_slice(&partial[..pivot]);
        values.push(1.0);
        values.extend_from_slice(&partial[pivot..]);
        let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let residual = m.apply(&values).iter().fold(0.0f64, |a, v| a.max(v.abs())) / scale;
        return Ok(SpectatorTable {
            energy: binding,
            grid: problem.grid.clone(),
            values,
            pivot,
            residual,
        });
    }
    Err(Error::Extraction(format!(
        "every pivot gave a singular reduced system (last condition estimate {last_condition:e})"
    )))
}

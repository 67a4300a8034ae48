//! Three-body wave function built from a spectator function.
//!
//! For identical bosons in Jacobi momenta `(q, p)`
//!
//! ```text
//! Ψ(q, p) = [f(|q|) + f(|p − q/2|) + f(|p + q/2|)] / (ε₃ + p² + ¾q²).
//! ```
//!
//! Spectator functions are s-wave, so every integral reduces to the two
//! magnitudes and the relative angle `cos θ = q̂·p̂`:
//!
//! ```text
//! ∫d³q d³p |Ψ|² = 8π² ∫q² dq ∫p² dp ∫₋₁¹ d(cos θ) |Ψ(q, p, cos θ)|².
//! ```

use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use crate::bound_state::SpectatorTable;
use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, MomentumGrid};

/// Spectator arguments above this evaluate to zero.
pub const EXTRAPOLATION_CEILING: f64 = 100.0;

/// Relative change of the norm tolerated when all grids are doubled.
pub const NORM_DRIFT_LIMIT: f64 = 0.01;

/// Monotone (Fritsch–Carlson) cubic interpolation of `f` in `ln y`, constant
/// below the first node and `C/y²` beyond the last.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectatorInterpolant {
    log_nodes: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    tail_coefficient: f64,
}

impl SpectatorInterpolant {
    pub fn new(nodes: &[f64], values: &[f64]) -> Result<Self> {
        if nodes.len() != values.len() || nodes.len() < 2 {
            return Err(Error::InvalidArgument(
                "interpolation needs at least two matching nodes and values".into(),
            ));
        }
        let log_nodes: Vec<f64> = nodes.iter().map(|y| y.ln()).collect();
        let slopes = pchip_slopes(&log_nodes, values);
        let last = nodes[nodes.len() - 1];
        let (num, den) = nodes
            .iter()
            .zip(values)
            .filter(|(&y, _)| y >= last / 10.0)
            .fold((0.0, 0.0), |(n, d), (&y, &f)| {
                let inv2 = 1.0 / (y * y);
                (n + f * inv2, d + inv2 * inv2)
            });
        Ok(Self {
            log_nodes,
            values: values.to_vec(),
            slopes,
            tail_coefficient: num / den,
        })
    }

    pub fn tail_coefficient(&self) -> f64 {
        self.tail_coefficient
    }

    /// Interpolated value; arguments above the ceiling give `None`.
    pub fn eval(&self, y: f64) -> Option<f64> {
        if y > EXTRAPOLATION_CEILING {
            return None;
        }
        let n = self.values.len();
        if y <= 0.0 {
            return Some(self.values[0]);
        }
        let t = y.ln();
        if t <= self.log_nodes[0] {
            return Some(self.values[0]);
        }
        if t >= self.log_nodes[n - 1] {
            return Some(self.tail_coefficient / (y * y));
        }
        let k = self.log_nodes.partition_point(|&u| u <= t) - 1;
        let h = self.log_nodes[k + 1] - self.log_nodes[k];
        let s = (t - self.log_nodes[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        Some(
            h00 * self.values[k]
                + h10 * h * self.slopes[k]
                + h01 * self.values[k + 1]
                + h11 * h * self.slopes[k + 1],
        )
    }
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s * d0 <= 0.0 {
            0.0
        } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

/// Bound-state wave function with an overall normalization factor.
#[derive(Debug)]
pub struct WaveFunction {
    table: SpectatorTable,
    interpolant: SpectatorInterpolant,
    scale: f64,
    clamped: AtomicUsize,
}

impl Clone for WaveFunction {
    fn clone(&self) -> Self {
        Self {
            table: self.table.clone(),
            interpolant: self.interpolant.clone(),
            scale: self.scale,
            clamped: AtomicUsize::new(self.clamped.load(Ordering::Relaxed)),
        }
    }
}

impl WaveFunction {
    pub fn new(table: SpectatorTable) -> Result<Self> {
        if !(table.energy > 0.0) {
            return Err(Error::InvalidArgument(
                "binding energy must be positive".into(),
            ));
        }
        let interpolant = SpectatorInterpolant::new(table.grid.nodes(), &table.values)?;
        Ok(Self {
            table,
            interpolant,
            scale: 1.0,
            clamped: AtomicUsize::new(0),
        })
    }

    /// Binding energy ε₃.
    pub fn energy(&self) -> f64 {
        self.table.energy
    }

    pub fn table(&self) -> &SpectatorTable {
        &self.table
    }

    /// Factor multiplying the tabulated spectator function.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn rescale(&mut self, factor: f64) {
        self.scale *= factor;
    }

    /// How many spectator evaluations fell beyond the extrapolation ceiling.
    pub fn clamped_evaluations(&self) -> usize {
        self.clamped.load(Ordering::Relaxed)
    }

    /// Normalized spectator function at momentum `y`.
    pub fn spectator(&self, y: f64) -> f64 {
        match self.interpolant.eval(y) {
            Some(v) => self.scale * v,
            None => {
                self.clamped.fetch_add(1, Ordering::Relaxed);
                0.0
            }
        }
    }

    /// `Ψ` from Jacobi momentum vectors.
    pub fn psi(&self, q: [f64; 3], p: [f64; 3]) -> f64 {
        let norm = |v: [f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let minus = [p[0] - 0.5 * q[0], p[1] - 0.5 * q[1], p[2] - 0.5 * q[2]];
        let plus = [p[0] + 0.5 * q[0], p[1] + 0.5 * q[1], p[2] + 0.5 * q[2]];
        let q2 = q[0] * q[0] + q[1] * q[1] + q[2] * q[2];
        let p2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
        let numerator =
            self.spectator(norm(q)) + self.spectator(norm(minus)) + self.spectator(norm(plus));
        numerator / (self.energy() + p2 + 0.75 * q2)
    }

    /// `Ψ` from magnitudes and `cos θ = q̂·p̂`.
    pub fn psi_reduced(&self, q: f64, p: f64, cos: f64) -> f64 {
        let base = p * p + 0.25 * q * q;
        let cross = p * q * cos;
        let minus = (base - cross).max(0.0).sqrt();
        let plus = (base + cross).max(0.0).sqrt();
        let numerator = self.spectator(q) + self.spectator(minus) + self.spectator(plus);
        numerator / (self.energy() + p * p + 0.75 * q * q)
    }
}

/// Gauss–Legendre order of each panel in the `|k + q|` integration.
const PANEL_POINTS: usize = 16;

/// Panels in the `|k + q|` integration grow geometrically from this
/// fraction of `√ε₃`.
const PANEL_START: f64 = 0.5;

/// `∫d³p |Ψ(q, p)|²` with the spectator arguments as integration variables.
///
/// Expanding `|F₁ + F₂ + F₃|²`, where `F₁` carries `f(q)` and `F₂, F₃`
/// carry `f(|p ∓ q/2|)`, and shifting `k = p − q/2` in the cross terms
/// leaves only smooth integrands:
///
/// ```text
/// n(q) = I₁₁ + 4 I₁₂ + 2 I₂₂ + 2 I₂₃,   A = ε₃ + k² + q²,  B = kq,
/// I₁₁ = π² f(q)² / √(ε₃ + ¾q²),
/// I₁₂ = 4π f(q) ∫k² dk f(k) / (A² − B²),
/// I₂₂ = 4π ∫k² dk f(k)² / (A² − B²),
/// I₂₃ = (2π/q) ∫k dk f(k) ∫_{|k−q|}^{k+q} u du f(u) / (ε₃ + (k² + q² + u²)/2)².
/// ```
fn density_with(
    wf: &WaveFunction,
    q: f64,
    kgrid: &MomentumGrid,
    panel: &(Vec<f64>, Vec<f64>),
) -> f64 {
    let e3 = wf.energy();
    let fq = wf.spectator(q);
    let mut i12 = 0.0;
    let mut i22 = 0.0;
    let mut i23 = 0.0;
    for (k, wk) in kgrid.iter() {
        let fk = wf.spectator(k);
        if fk == 0.0 {
            continue;
        }
        let a = e3 + k * k + q * q;
        let b = k * q;
        let angular = 1.0 / ((a - b) * (a + b));
        i12 += wk * k * k * fk * angular;
        i22 += wk * k * k * fk * fk * angular;
        let inner = panel_integral(
            (k - q).abs(),
            (k + q).min(EXTRAPOLATION_CEILING),
            e3.sqrt() * PANEL_START,
            panel,
            |u| {
                let d = e3 + 0.5 * (k * k + q * q + u * u);
                u * wf.spectator(u) / (d * d)
            },
        );
        i23 += wk * k * fk * inner;
    }
    let i11 = PI * PI * fq * fq / (e3 + 0.75 * q * q).sqrt();
    let i12 = 4.0 * PI * fq * i12;
    let i22 = 4.0 * PI * i22;
    let i23 = if q > 0.0 { 2.0 * PI * i23 / q } else { 0.0 };
    i11 + 4.0 * i12 + 2.0 * i22 + 2.0 * i23
}

/// `∫_lo^hi g` on panels starting at width `first` and doubling.
fn panel_integral<G: Fn(f64) -> f64>(
    lo: f64,
    hi: f64,
    first: f64,
    rule: &(Vec<f64>, Vec<f64>),
    g: G,
) -> f64 {
    let (t, w) = rule;
    let mut sum = 0.0;
    let mut a = lo;
    let mut width = first.max(1e-300);
    while a < hi {
        let b = (a + width).min(hi);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        sum += half
            * t.iter()
                .zip(w)
                .map(|(&t, &w)| w * g(mid + half * t))
                .sum::<f64>();
        a = b;
        width *= 2.0;
    }
    sum
}

fn norm_with(
    wf: &WaveFunction,
    qgrid: &MomentumGrid,
    kgrid: &MomentumGrid,
    panel: &(Vec<f64>, Vec<f64>),
) -> f64 {
    let per_q: Vec<f64> = qgrid
        .nodes()
        .par_iter()
        .map(|&q| density_with(wf, q, kgrid, panel))
        .collect();
    4.0 * PI
        * qgrid
            .iter()
            .zip(&per_q)
            .map(|((q, w), n)| w * q * q * n)
            .sum::<f64>()
}

fn doubled(grid: &MomentumGrid) -> Result<MomentumGrid> {
    MomentumGrid::new(2 * grid.len(), grid.map_scale())
}

/// `∫d³q d³p |Ψ|²`, checked against the same integral on doubled grids.
pub fn norm(wf: &WaveFunction, qgrid: &MomentumGrid, pgrid: &MomentumGrid) -> Result<f64> {
    let value = norm_with(wf, qgrid, pgrid, &gauss_legendre(PANEL_POINTS)?);
    let fine = norm_with(
        wf,
        &doubled(qgrid)?,
        &doubled(pgrid)?,
        &gauss_legendre(2 * PANEL_POINTS)?,
    );
    let drift = ((fine - value) / fine).abs();
    if !(drift <= NORM_DRIFT_LIMIT) {
        return Err(Error::NormalizationUnstable { drift });
    }
    Ok(value)
}

/// Rescales `wf` to unit norm on the given grids; returns the old norm.
pub fn normalize(wf: &mut WaveFunction, qgrid: &MomentumGrid, pgrid: &MomentumGrid) -> Result<f64> {
    let n = norm(wf, qgrid, pgrid)?;
    wf.rescale(1.0 / n.sqrt());
    Ok(n)
}

/// Momentum density of the spectator, `n(q) = ∫d³p |Ψ(q, p)|²`.
pub fn momentum_density(wf: &WaveFunction, q: f64, pgrid: &MomentumGrid) -> Result<f64> {
    Ok(density_with(wf, q, pgrid, &gauss_legendre(PANEL_POINTS)?))
}

/// `n(q)` at every node of `qgrid`.
pub fn density_table(
    wf: &WaveFunction,
    qgrid: &MomentumGrid,
    pgrid: &MomentumGrid,
) -> Result<Vec<f64>> {
    let panel = gauss_legendre(PANEL_POINTS)?;
    Ok(qgrid
        .nodes()
        .par_iter()
        .map(|&q| density_with(wf, q, pgrid, &panel))
        .collect())
}

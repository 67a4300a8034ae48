//! Independent reference computations used to cross-check the solvers.
//!
//! Each routine takes a different numerical path from the production code:
//! closed forms, dense SVD, brute-force quadrature, a shifted-pole solve
//! with Richardson extrapolation, and a separately coded dense determinant.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::integral_eq::KernelMatrix;
use crate::quadrature::{gauss_legendre, MomentumGrid};
use crate::scattering::{driver, kernel_numerator, ElasticChannel};

/// Closed-form solution of `φ = g + λ u ⟨v, φ⟩` at `points`.
///
/// Inner products are taken on `inner`, which should differ from the grid
/// used by the solver under test.
pub fn rank_one_solution<U, V, G>(
    u: U,
    v: V,
    g: G,
    lambda: f64,
    inner: &MomentumGrid,
    points: &[f64],
) -> Result<Vec<f64>>
where
    U: Fn(f64) -> f64,
    V: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let vg = inner.integrate(|x| v(x) * g(x));
    let vu = inner.integrate(|x| v(x) * u(x));
    let denominator = 1.0 - lambda * vu;
    if denominator.abs() < 1e-14 {
        return Err(Error::Singular {
            condition: f64::INFINITY,
        });
    }
    let c = lambda * vg / denominator;
    Ok(points.iter().map(|&y| g(y) + c * u(y)).collect())
}

/// `∫₋₁¹ dz / (a − y² − x² − xyz)` by `n`-point Gauss–Legendre.
pub fn angular_log_quadrature(a: f64, y: f64, x: f64, n: usize) -> Result<f64> {
    let (z, w) = gauss_legendre(n)?;
    let d = a - y * y - x * x;
    Ok(z.iter().zip(&w).map(|(&z, &w)| w / (d - x * y * z)).sum())
}

/// Right singular vector of the smallest singular value, scaled to one at
/// `pivot`.
pub fn svd_null_vector(matrix: &KernelMatrix<f64>, pivot: usize) -> Result<(Vec<f64>, f64)> {
    let n = matrix.dim();
    if pivot >= n {
        return Err(Error::InvalidArgument(format!(
            "pivot {pivot} outside 0..{n}"
        )));
    }
    let a = DMatrix::from_row_slice(n, n, matrix.entries());
    let svd = a.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Extraction("SVD did not return right singular vectors".into()))?;
    let (idx, &smallest) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::Extraction("empty matrix".into()))?;
    let row = v_t.row(idx);
    let scale = row[pivot];
    if scale == 0.0 {
        return Err(Error::Extraction(
            "null vector vanishes at the pivot".into(),
        ));
    }
    Ok((row.iter().map(|v| v / scale).collect(), smallest))
}

/// Binding energy of the deepest level at `eps2` from an independently
/// coded dense determinant scan.
///
/// The kernel is rebuilt from the logarithmic form of the angular integral
/// and factorized with nalgebra.
pub fn dense_ground_state(eps2: f64, n: usize, map_scale: f64) -> Result<f64> {
    let grid = MomentumGrid::new(n, map_scale)?;
    let (nodes, weights) = (grid.nodes(), grid.weights());
    let log_form = |a: f64, y: f64, x: f64| {
        let d = y * y + x * x - a;
        ((d + x * y) / (d - x * y)).ln() / (x * y)
    };
    let sign = |e3: f64| -> Result<f64> {
        let mut m = DMatrix::<f64>::zeros(n, n);
        for (i, &y) in nodes.iter().enumerate() {
            let inv_tau = 2.0 * PI * PI * (eps2.sqrt() - (0.75 * y * y - e3).sqrt());
            for (j, &x) in nodes.iter().enumerate() {
                // Λ(a) = −log_form(a); subtracting at a = −1 flips the order.
                let dl = log_form(-1.0, y, x) - log_form(e3, y, x);
                m[(i, j)] = -weights[j] * 4.0 * PI * x * x * dl / inv_tau;
            }
            m[(i, i)] += 1.0;
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Assembly {
                i: 0,
                j: 0,
                energy: e3,
            });
        }
        let lu = m.lu();
        Ok(lu.determinant().signum())
    };
    let shallowest = (eps2 * (1.0 + 1e-8)).max(1e-10);
    let steps = 400;
    let mut previous = (-1.0, sign(-1.0)?);
    for s in 1..=steps {
        let e = -(shallowest.powf(s as f64 / steps as f64));
        let current = sign(e)?;
        if current != previous.1 {
            let (mut deep, mut shallow, deep_sign) = (previous.0, e, previous.1);
            while (shallow - deep).abs() > 1e-13 * shallow.abs() {
                let mid = 0.5 * (deep + shallow);
                if sign(mid)? == deep_sign {
                    deep = mid;
                } else {
                    shallow = mid;
                }
            }
            return Ok(-0.5 * (deep + shallow));
        }
        previous = (e, current);
    }
    Err(Error::NoBoundState)
}

/// Composite grid graded geometrically towards `k` on `[0, 2k]`, with a
/// tangent-mapped tail beyond.
pub fn pole_graded_grid(k: f64, finest: f64, order: usize, tail: usize) -> Result<MomentumGrid> {
    if !(k > 0.0 && finest > 0.0 && finest < k) {
        return Err(Error::InvalidArgument("need 0 < finest < k".into()));
    }
    let mut offsets = vec![k];
    while *offsets.last().unwrap_or(&k) > finest {
        let next = offsets.last().unwrap_or(&k) * 0.5;
        offsets.push(next);
    }
    let mut breaks: Vec<f64> = offsets.iter().map(|d| k - d).collect();
    breaks.extend(offsets.iter().rev().map(|d| k + d));
    let (t, w) = gauss_legendre(order)?;
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let half = 0.5 * (b - a);
        for (&ti, &wi) in t.iter().zip(&w) {
            nodes.push(a + half * (ti + 1.0));
            weights.push(half * wi);
        }
    }
    let tail_grid = MomentumGrid::new(tail, 1.0)?;
    for (&x, &wx) in tail_grid.nodes().iter().zip(tail_grid.weights()) {
        nodes.push(2.0 * k + x);
        weights.push(wx);
    }
    MomentumGrid::from_parts(nodes, weights, 1.0)
}

/// On-shell amplitude with the pole denominator `¾(k² − x²) + iε`.
pub fn shifted_pole_amplitude(
    channel: &ElasticChannel,
    epsilon: f64,
    grid: &MomentumGrid,
) -> Result<Complex64> {
    let k = channel.momentum();
    let (nodes, weights) = (grid.nodes(), grid.weights());
    let n = nodes.len();
    let column = |j: usize| {
        let x = nodes[j];
        weights[j] * x * x / Complex64::new(0.75 * (k * k - x * x), epsilon)
    };
    let cols: Vec<Complex64> = (0..n).map(column).collect();
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    let mut rhs = nalgebra::DVector::<Complex64>::zeros(n);
    for i in 0..n {
        let y = nodes[i];
        for j in 0..n {
            m[(i, j)] = -cols[j] * kernel_numerator(y, nodes[j], channel)?;
        }
        m[(i, i)] += Complex64::new(1.0, 0.0);
        rhs[i] = Complex64::new(driver(y, channel)?, 0.0);
    }
    let h = m.lu().solve(&rhs).ok_or(Error::Singular {
        condition: f64::INFINITY,
    })?;
    let mut on_shell = Complex64::new(driver(k, channel)?, 0.0);
    for j in 0..n {
        on_shell += cols[j] * kernel_numerator(k, nodes[j], channel)? * h[j];
    }
    Ok(on_shell)
}

/// Richardson extrapolation `ε → 0` from `ε₀, ε₀/2, ε₀/4`.
pub fn ieps_extrapolated(channel: &ElasticChannel, epsilon0: f64) -> Result<Complex64> {
    let k = channel.momentum();
    // Lorentzian half-width in x for the smallest ε.
    let width = epsilon0 / 4.0 / (1.5 * k);
    let grid = pole_graded_grid(k, width / 4.0, 16, 160)?;
    let h: Vec<Complex64> = [1.0, 0.5, 0.25]
        .iter()
        .map(|f| shifted_pole_amplitude(channel, epsilon0 * f, &grid))
        .collect::<Result<_>>()?;
    Ok((h[2] * 8.0 - h[1] * 6.0 + h[0]) / 3.0)
}

//! Gauss–Legendre rules and the tangent map onto the momentum half-line.
//!
//! Every integral in the crate runs over a [`MomentumGrid`]: Gauss–Legendre
//! nodes on `[-1, 1]` pushed through `x = s · tan(π(t + 1)/4)`, with the
//! Jacobian folded into the weights. The map puts half of the points below
//! `x = s`, so `s` sets the momentum scale that is resolved best.

use std::f64::consts::{FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const NEWTON_TOLERANCE: f64 = 1e-15;
const NEWTON_MAX_ITERATIONS: usize = 100;

/// Legendre polynomial `P_n(x)` and its derivative by upward recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 2..=n {
        let k = k as f64;
        let p_next = ((2.0 * k - 1.0) * x * p - (k - 1.0) * p_prev) / k;
        p_prev = p;
        p = p_next;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let n = n as f64;
    let dp = n * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// nodes in ascending order.
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "Gauss-Legendre rule needs at least one node".into(),
        ));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi's estimate of the i-th largest root.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..NEWTON_MAX_ITERATIONS {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() <= NEWTON_TOLERANCE {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok((nodes, weights))
}

/// Quadrature nodes and weights on `(0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    map_scale: f64,
}

impl MomentumGrid {
    /// `n`-point Gauss–Legendre rule mapped with scale `map_scale`.
    pub fn new(n: usize, map_scale: f64) -> Result<Self> {
        let (t, w) = gauss_legendre(n)?;
        map_to_halfline(&t, &w, map_scale)
    }

    /// A grid from explicit nodes and weights, e.g. a composite rule.
    ///
    /// `map_scale` is recorded as metadata only.
    pub fn from_parts(nodes: Vec<f64>, weights: Vec<f64>, map_scale: f64) -> Result<Self> {
        if nodes.len() != weights.len() || nodes.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "grid needs matching non-empty node/weight lists ({} vs {})",
                nodes.len(),
                weights.len()
            )));
        }
        let increasing = nodes.windows(2).all(|p| p[0] < p[1]);
        let positive = nodes.iter().all(|x| x.is_finite() && *x > 0.0)
            && weights.iter().all(|w| w.is_finite() && *w > 0.0);
        if !increasing || !positive {
            return Err(Error::InvalidArgument(
                "grid nodes must be finite, positive and strictly increasing with positive weights"
                    .into(),
            ));
        }
        Ok(Self {
            nodes,
            weights,
            map_scale,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn map_scale(&self) -> f64 {
        self.map_scale
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }

    /// Index of the node closest to `x`.
    pub fn nearest(&self, x: f64) -> usize {
        let pos = self.nodes.partition_point(|&node| node < x);
        if pos == 0 {
            0
        } else if pos == self.nodes.len() {
            pos - 1
        } else if (self.nodes[pos] - x) < (x - self.nodes[pos - 1]) {
            pos
        } else {
            pos - 1
        }
    }
}

/// Maps a rule on `[-1, 1]` onto `(0, ∞)` through `x = s · tan(π(t + 1)/4)`.
pub fn map_to_halfline(
    reference_nodes: &[f64],
    reference_weights: &[f64],
    map_scale: f64,
) -> Result<MomentumGrid> {
    if !(map_scale > 0.0 && map_scale.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "map scale must be positive and finite, got {map_scale}"
        )));
    }
    if reference_nodes.len() != reference_weights.len() {
        return Err(Error::InvalidArgument(
            "reference nodes and weights differ in length".into(),
        ));
    }
    let (nodes, weights) = reference_nodes
        .iter()
        .zip(reference_weights)
        .map(|(&t, &w)| {
            let (x, jacobian) = halfline_point(t, map_scale);
            (x, w * jacobian)
        })
        .unzip();
    MomentumGrid::from_parts(nodes, weights, map_scale)
}

/// Image of `t` under the tangent map together with `dx/dt`.
pub fn halfline_point(t: f64, map_scale: f64) -> (f64, f64) {
    let angle = FRAC_PI_4 * (t + 1.0);
    let cos = angle.cos();
    (map_scale * angle.tan(), map_scale * FRAC_PI_4 / (cos * cos))
}

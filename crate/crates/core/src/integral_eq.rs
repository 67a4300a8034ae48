//! Nyström machinery for Fredholm equations of the second kind.
//!
//! An equation `φ(y) = g(y) + λ ∫ K(y, x) φ(x) dx` on a [`MomentumGrid`]
//! becomes the dense system `Σ_j (δ_ij − λ w_j K(y_i, x_j)) φ_j = g_i`.
//! The same code path serves real bound-state kernels and complex
//! scattering kernels through the [`Scalar`] trait.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::MomentumGrid;

/// Condition estimates above this are logged as warnings.
pub const CONDITION_WARNING: f64 = 1e12;

/// Field element of a kernel matrix.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + 'static
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_real(x: f64) -> Self;
    fn modulus(self) -> f64;
    fn conj(self) -> Self;
    fn is_finite(self) -> bool;

    /// `self / |self|`, or one for zero.
    fn phase(self) -> Self {
        let m = self.modulus();
        if m == 0.0 {
            Self::one()
        } else {
            self * Self::from_real(1.0 / m)
        }
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn conj(self) -> Self {
        self
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn is_finite(self) -> bool {
        Complex64::is_finite(self)
    }
}

/// Dense square matrix `δ_ij − w_j K(y_i, x_j; E)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix<T> {
    entries: Vec<T>,
    dim: usize,
    energy: f64,
}

impl<T: Scalar> KernelMatrix<T> {
    /// Wraps explicit row-major entries.
    pub fn from_entries(entries: Vec<T>, dim: usize, energy: f64) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::InvalidArgument(format!(
                "{} entries do not form a {dim}x{dim} matrix",
                entries.len()
            )));
        }
        Ok(Self {
            entries,
            dim,
            energy,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The energy the kernel was evaluated at.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.dim + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }

    /// `M v`.
    pub fn apply(&self, v: &[T]) -> Vec<T> {
        (0..self.dim)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    pub fn factor(&self) -> LuFactorization<T> {
        LuFactorization::new(self.entries.clone(), self.dim)
    }

    pub fn logdet_sign(&self) -> LogDet<T> {
        logdet_sign(self)
    }

    /// Solves `M φ = rhs` and attaches a condition estimate.
    pub fn solve(&self, rhs: &[T]) -> Result<Solution<T>> {
        if rhs.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "right-hand side has {} entries, matrix dimension is {}",
                rhs.len(),
                self.dim
            )));
        }
        let lu = self.factor();
        if lu.is_singular() {
            return Err(Error::Singular {
                condition: f64::INFINITY,
            });
        }
        let condition = lu.condition_estimate(one_norm(&self.entries, self.dim));
        if !condition.is_finite() || condition > 1.0 / f64::EPSILON {
            return Err(Error::Singular { condition });
        }
        if condition > CONDITION_WARNING {
            log::warn!("ill-conditioned Nyström system: condition estimate {condition:e}");
        }
        let values = lu.solve(rhs);
        Ok(Solution { values, condition })
    }
}

fn one_norm<T: Scalar>(entries: &[T], dim: usize) -> f64 {
    (0..dim)
        .map(|j| {
            (0..dim)
                .map(|i| entries[i * dim + j].modulus())
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// Values on the grid together with the condition estimate of the solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution<T> {
    pub values: Vec<T>,
    pub condition: f64,
}

/// Determinant as `sign · exp(log_magnitude)`.
///
/// For real matrices `sign` is `-1`, `0` or `+1`; for complex ones it is a
/// unit phase. A singular matrix has `sign = 0` and `log_magnitude = -∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDet<T> {
    pub sign: T,
    pub log_magnitude: f64,
}

impl<T: Scalar> LogDet<T> {
    pub fn is_singular(&self) -> bool {
        self.sign == T::zero()
    }
}

/// LU factorization with partial pivoting, `P A = L U` stored in place.
#[derive(Debug, Clone)]
pub struct LuFactorization<T> {
    lu: Vec<T>,
    dim: usize,
    pivots: Vec<usize>,
    permutation_sign: f64,
    singular: bool,
}

impl<T: Scalar> LuFactorization<T> {
    pub fn new(mut a: Vec<T>, n: usize) -> Self {
        assert_eq!(a.len(), n * n, "matrix storage does not match dimension");
        let mut pivots = vec![0; n];
        let mut permutation_sign = 1.0;
        let mut singular = false;
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].modulus();
            for i in k + 1..n {
                let m = a[i * n + k].modulus();
                if m > best {
                    best = m;
                    p = i;
                }
            }
            pivots[k] = p;
            if best == 0.0 {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                permutation_sign = -permutation_sign;
            }
            let (head, tail) = a.split_at_mut((k + 1) * n);
            let pivot_row = &head[k * n..(k + 1) * n];
            let inv = T::one() / pivot_row[k];
            for row in tail.chunks_exact_mut(n) {
                let l = row[k] * inv;
                row[k] = l;
                if l == T::zero() {
                    continue;
                }
                for (r, &u) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                    *r -= l * u;
                }
            }
        }
        Self {
            lu: a,
            dim: n,
            pivots,
            permutation_sign,
            singular,
        }
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn logdet(&self) -> LogDet<T> {
        if self.singular {
            return LogDet {
                sign: T::zero(),
                log_magnitude: f64::NEG_INFINITY,
            };
        }
        let n = self.dim;
        let mut sign = T::from_real(self.permutation_sign);
        let mut log_magnitude = 0.0;
        for k in 0..n {
            let d = self.lu[k * n + k];
            sign *= d.phase();
            log_magnitude += d.modulus().ln();
        }
        // keep real signs exactly ±1
        let sign = sign.phase();
        LogDet {
            sign,
            log_magnitude,
        }
    }

    /// Solves `A x = b`. The factorization must be nonsingular.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.dim;
        let mut x = b.to_vec();
        for k in 0..n {
            x.swap(k, self.pivots[k]);
        }
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s = row
                .iter()
                .zip(&x[..i])
                .fold(T::zero(), |acc, (&l, &v)| acc + l * v);
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n..(i + 1) * n];
            let s = row[i + 1..]
                .iter()
                .zip(&x[i + 1..])
                .fold(T::zero(), |acc, (&u, &v)| acc + u * v);
            x[i] = (x[i] - s) / row[i];
        }
        x
    }

    /// Solves `Aᴴ x = b`.
    pub fn solve_adjoint(&self, b: &[T]) -> Vec<T> {
        let n = self.dim;
        let mut x = b.to_vec();
        // Uᴴ z = b
        for i in 0..n {
            let s = x[..i].iter().enumerate().fold(T::zero(), |acc, (k, &xk)| {
                acc + self.lu[k * n + i].conj() * xk
            });
            x[i] = (x[i] - s) / self.lu[i * n + i].conj();
        }
        // Lᴴ w = z
        for i in (0..n).rev() {
            let s = x[i + 1..]
                .iter()
                .enumerate()
                .fold(T::zero(), |acc, (k, &xk)| {
                    acc + self.lu[(i + 1 + k) * n + i].conj() * xk
                });
            x[i] -= s;
        }
        for k in (0..n).rev() {
            x.swap(k, self.pivots[k]);
        }
        x
    }

    /// Hager–Higham estimate of the 1-norm condition number, given `‖A‖₁`.
    pub fn condition_estimate(&self, a_norm: f64) -> f64 {
        if self.singular {
            return f64::INFINITY;
        }
        let n = self.dim;
        let mut x = vec![T::from_real(1.0 / n as f64); n];
        let mut estimate = 0.0;
        let mut last_index = usize::MAX;
        for _ in 0..5 {
            let y = self.solve(&x);
            let norm: f64 = y.iter().map(|v| v.modulus()).sum();
            if !norm.is_finite() {
                return f64::INFINITY;
            }
            if norm <= estimate {
                break;
            }
            estimate = norm;
            let xi: Vec<T> = y.iter().map(|v| v.phase()).collect();
            let z = self.solve_adjoint(&xi);
            let (index, zmax) = z.iter().enumerate().map(|(i, v)| (i, v.modulus())).fold(
                (0, f64::NEG_INFINITY),
                |acc, cur| if cur.1 > acc.1 { cur } else { acc },
            );
            if index == last_index || zmax <= 0.0 {
                break;
            }
            last_index = index;
            x = vec![T::zero(); n];
            x[index] = T::one();
        }
        a_norm * estimate
    }
}

/// Builds `δ_ij − w_j K(y_i, x_j; E)` from an infallible kernel.
pub fn assemble<T, K>(kernel: K, grid: &MomentumGrid, energy: f64) -> Result<KernelMatrix<T>>
where
    T: Scalar,
    K: Fn(f64, f64, f64) -> T + Sync,
{
    try_assemble(|y, x, e| Ok(kernel(y, x, e)), grid, energy)
}

/// As [`assemble`], for kernels that can fail; the first error wins.
pub fn try_assemble<T, K>(kernel: K, grid: &MomentumGrid, energy: f64) -> Result<KernelMatrix<T>>
where
    T: Scalar,
    K: Fn(f64, f64, f64) -> Result<T> + Sync,
{
    let n = grid.len();
    let nodes = grid.nodes();
    let weights = grid.weights();
    let mut entries = vec![T::zero(); n * n];
    entries
        .par_chunks_mut(n)
        .enumerate()
        .try_for_each(|(i, row)| -> Result<()> {
            let y = nodes[i];
            for (j, slot) in row.iter_mut().enumerate() {
                let k = kernel(y, nodes[j], energy)?;
                if !k.is_finite() {
                    return Err(Error::Assembly { i, j, energy });
                }
                let mut value = -(T::from_real(weights[j]) * k);
                if i == j {
                    value += T::one();
                }
                *slot = value;
            }
            Ok(())
        })?;
    Ok(KernelMatrix {
        entries,
        dim: n,
        energy,
    })
}

/// Sign and log-magnitude of the determinant via pivoted LU.
pub fn logdet_sign<T: Scalar>(m: &KernelMatrix<T>) -> LogDet<T> {
    if m.entries.iter().any(|v| !v.is_finite()) {
        return LogDet {
            sign: T::zero(),
            log_magnitude: f64::NAN,
        };
    }
    m.factor().logdet()
}

fn sampled_driver<T: Scalar, D: Fn(f64) -> T>(grid: &MomentumGrid, driver: D) -> Vec<T> {
    grid.nodes().iter().map(|&y| driver(y)).collect()
}

/// Direct Nyström solve of `φ = g + λ K φ` on the grid nodes.
pub fn solve_second_kind<T, K, D>(
    kernel: K,
    grid: &MomentumGrid,
    driver: D,
    lambda: T,
) -> Result<Solution<T>>
where
    T: Scalar,
    K: Fn(f64, f64) -> T + Sync,
    D: Fn(f64) -> T,
{
    let m = assemble(|y, x, _| lambda * kernel(y, x), grid, 0.0)?;
    m.solve(&sampled_driver(grid, driver))
}

/// Partial sum of the Neumann (Born) series.
#[derive(Debug, Clone, PartialEq)]
pub struct BornSeries<T> {
    pub values: Vec<T>,
    /// Max-norm of `λⁿ φ_n` for every computed term, `n = 0..=m`.
    pub term_norms: Vec<f64>,
    /// Geometric growth factor estimated from the last two terms.
    pub ratio: f64,
    pub diverged: bool,
}

/// `Σ_{n=0}^{m} λⁿ φ_n` with `φ_0 = g` and `φ_n = K φ_{n−1}` by quadrature.
pub fn born_series<T, K, D>(
    kernel: K,
    grid: &MomentumGrid,
    driver: D,
    lambda: T,
    terms: usize,
) -> BornSeries<T>
where
    T: Scalar,
    K: Fn(f64, f64) -> T + Sync,
    D: Fn(f64) -> T,
{
    let nodes = grid.nodes();
    let weights = grid.weights();
    let n = grid.len();
    let weighted: Vec<T> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            lambda * T::from_real(weights[j]) * kernel(nodes[i], nodes[j])
        })
        .collect();
    let max_norm = |v: &[T]| v.iter().map(|x| x.modulus()).fold(0.0, f64::max);

    let mut term = sampled_driver(grid, driver);
    let mut values = term.clone();
    let mut term_norms = vec![max_norm(&term)];
    for _ in 0..terms {
        term = (0..n)
            .map(|i| {
                weighted[i * n..(i + 1) * n]
                    .iter()
                    .zip(&term)
                    .fold(T::zero(), |acc, (&k, &t)| acc + k * t)
            })
            .collect();
        for (v, &t) in values.iter_mut().zip(&term) {
            *v += t;
        }
        term_norms.push(max_norm(&term));
    }
    let ratio = match term_norms.as_slice() {
        [.., a, b] if *a > 0.0 => b / a,
        [.., _, b] if *b > 0.0 => f64::INFINITY,
        _ => 0.0,
    };
    let last = *term_norms.last().unwrap_or(&0.0);
    let diverged = !last.is_finite()
        || values.iter().any(|v| !v.is_finite())
        || (terms > 0 && ratio >= 1.0 && last > term_norms[0]);
    BornSeries {
        values,
        term_norms,
        ratio,
        diverged,
    }
}

/// Quadrature estimate of `‖K‖ = (∫∫ |K(y, x)|² dy dx)^{1/2}`.
pub fn hs_norm<T, K>(kernel: K, grid: &MomentumGrid) -> f64
where
    T: Scalar,
    K: Fn(f64, f64) -> T,
{
    let mut sum = 0.0;
    for (y, wy) in grid.iter() {
        for (x, wx) in grid.iter() {
            let k = kernel(y, x).modulus();
            sum += wy * wx * k * k;
        }
    }
    sum.sqrt()
}

/// The Neumann series converges when `|λ|‖K‖ < 1`.
pub fn is_convergent(lambda_modulus: f64, norm: f64) -> bool {
    lambda_modulus * norm < 1.0
}

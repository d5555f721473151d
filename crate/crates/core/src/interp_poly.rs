//! Polynomials in multipoint-interpolation form.
//!
//! A [`ValuePoly`] stores a polynomial by its values at the fixed points of an
//! [`InterpolationBasis`], so products and quotients by linear factors and
//! additions are pointwise and cost `O(D)`. The functional
//! `psi_d(A) = <A, B_d> / (d + 1)`, with `B_d(x) = sum_k x^k / C(d, k)`, is a
//! dot product with a precomputed weight vector `N_d`.
//!
//! # Evaluation points
//!
//! With `t = y / (1 + y)`,
//!
//! ```text
//! <A, B_d> = (d + 1) * integral_0^1 (1 - t)^d A(t / (1 - t)) dt
//! ```
//!
//! and the integrand is a degree-`d` polynomial in `t`. The points are
//! therefore placed as Chebyshev points of the second kind in `t` on
//! `[T_MARGIN, 1 - T_MARGIN]` and mapped back to `y`. `N_d[j]` is the
//! interpolatory quadrature weight of node `t_j` times `(d + 1)(1 - t_j)^d`.
//! The weights reproduce `<A, B_d>` exactly for every polynomial of degree at
//! most `d` and stay `O(1)` in size, where the plain Vandermonde inverse on
//! points in `y` grows past `1e13` at `D = 18`.
//!
//! Every `y_j` is strictly positive, so `y_j + p` never vanishes for the
//! shifts the explainer produces (`p = 0` or `p >= 1`).

use crate::error::{Error, Result};

/// Largest supported polynomial degree.
pub const MAX_DEGREE: usize = 32;

/// Distance of the outermost nodes from the ends of `t in [0, 1]`.
pub const T_MARGIN: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationBasis {
    max_degree: usize,
    points: Vec<f64>,
    /// `pow1p[k][j] = (1 + y_j)^k`
    pow1p: Vec<Vec<f64>>,
    /// `weights[d]` is `N_d`.
    weights: Vec<Vec<f64>>,
}

/// A polynomial of nominal degree `degree` sampled at the basis points.
#[derive(Debug, Clone, PartialEq)]
pub struct ValuePoly {
    pub values: Vec<f64>,
    pub degree: usize,
}

impl InterpolationBasis {
    pub fn new(max_degree: usize) -> Result<Self> {
        if max_degree > MAX_DEGREE {
            return Err(Error::DegreeTooLarge {
                requested: max_degree,
                max: MAX_DEGREE,
            });
        }
        let n = max_degree + 1;
        let (nodes, quad) = chebyshev_quadrature(max_degree);
        let points: Vec<f64> = nodes.iter().map(|t| t / (1.0 - t)).collect();

        let mut pow1p = vec![vec![1.0; n]];
        for k in 1..n {
            let row = pow1p[k - 1]
                .iter()
                .zip(&points)
                .map(|(p, y)| p * (1.0 + y))
                .collect();
            pow1p.push(row);
        }

        let weights = (0..n)
            .map(|d| {
                nodes
                    .iter()
                    .zip(&quad)
                    .map(|(t, w)| (d + 1) as f64 * w * (1.0 - t).powi(d as i32))
                    .collect()
            })
            .collect();

        Ok(Self {
            max_degree,
            points,
            pow1p,
            weights,
        })
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn pow1p(&self, k: usize) -> &[f64] {
        &self.pow1p[k]
    }

    /// `N_d`: `<p(Y), N_d> = <coeffs(p), C_d>` for every `p` of degree `<= d`.
    pub fn weights(&self, d: usize) -> &[f64] {
        &self.weights[d]
    }

    pub fn one(&self) -> ValuePoly {
        ValuePoly {
            values: vec![1.0; self.max_degree + 1],
            degree: 0,
        }
    }

    /// Samples a coefficient vector (lowest power first) at the basis points.
    pub fn from_coefficients(&self, coeffs: &[f64]) -> Result<ValuePoly> {
        let degree = coeffs.len().saturating_sub(1);
        if degree > self.max_degree {
            return Err(Error::DegreeOverflow {
                degree,
                max: self.max_degree,
            });
        }
        let values = self
            .points
            .iter()
            .map(|&y| coeffs.iter().rev().fold(0.0, |acc, &c| acc * y + c))
            .collect();
        Ok(ValuePoly { values, degree })
    }

    /// `G + H (1 + y)^{d_G - d_H}` with the lower-degree operand lifted.
    pub fn add_scaled(&self, g1: &ValuePoly, g2: &ValuePoly) -> ValuePoly {
        let mut out = g1.clone();
        self.add_scaled_assign(&mut out, g2);
        out
    }

    pub fn add_scaled_assign(&self, acc: &mut ValuePoly, other: &ValuePoly) {
        if acc.degree >= other.degree {
            let lift = &self.pow1p[acc.degree - other.degree];
            for ((a, &o), &s) in acc.values.iter_mut().zip(&other.values).zip(lift) {
                *a += o * s;
            }
        } else {
            let lift = &self.pow1p[other.degree - acc.degree];
            for ((a, &o), &s) in acc.values.iter_mut().zip(&other.values).zip(lift) {
                *a = o + *a * s;
            }
            acc.degree = other.degree;
        }
    }

    /// `psi_d(g) = <g(Y), N_d> / (d + 1)`.
    pub fn psi(&self, g: &ValuePoly, d: usize) -> Result<f64> {
        if d > self.max_degree {
            return Err(Error::DegreeOutOfRange {
                degree: d,
                max: self.max_degree,
            });
        }
        Ok(dot(&g.values, &self.weights[d]) / (d + 1) as f64)
    }

    /// `psi_d(g / (y + p))` without materialising the quotient.
    pub(crate) fn psi_quotient(&self, values: &[f64], shift: f64, d: usize) -> f64 {
        let mut acc = 0.0;
        for ((&v, &y), &n) in values.iter().zip(&self.points).zip(&self.weights[d]) {
            acc += (v / (y + shift)) * n;
        }
        acc / (d + 1) as f64
    }

    /// `psi_d(g (1 + y)^k / (y + p))` without materialising anything.
    pub(crate) fn psi_lifted_quotient(&self, values: &[f64], k: usize, shift: f64, d: usize) -> f64 {
        let mut acc = 0.0;
        for (((&v, &y), &n), &s) in values
            .iter()
            .zip(&self.points)
            .zip(&self.weights[d])
            .zip(&self.pow1p[k])
        {
            acc += ((v * s) / (y + shift)) * n;
        }
        acc / (d + 1) as f64
    }
}

impl ValuePoly {
    /// Pointwise product with `(y + p)`.
    pub fn mul_linear(&self, basis: &InterpolationBasis, p: f64) -> Result<ValuePoly> {
        let mut out = self.clone();
        out.mul_linear_assign(basis, p)?;
        Ok(out)
    }

    pub fn mul_linear_assign(&mut self, basis: &InterpolationBasis, p: f64) -> Result<()> {
        if self.degree >= basis.max_degree {
            return Err(Error::DegreeOverflow {
                degree: self.degree + 1,
                max: basis.max_degree,
            });
        }
        for (v, &y) in self.values.iter_mut().zip(&basis.points) {
            *v *= y + p;
        }
        self.degree += 1;
        Ok(())
    }

    /// Pointwise quotient by `(y + p)`.
    ///
    /// When `(y + p)` divides the polynomial this is the exact quotient. When
    /// it does not, the result samples the rational function `g / (y + p)`;
    /// the explainer only applies such samples inside sums where they cancel.
    pub fn div_linear(&self, basis: &InterpolationBasis, p: f64) -> Result<ValuePoly> {
        let mut out = self.clone();
        out.div_linear_assign(basis, p)?;
        Ok(out)
    }

    pub fn div_linear_assign(&mut self, basis: &InterpolationBasis, p: f64) -> Result<()> {
        if !(p == 0.0 || p >= 1.0) || !p.is_finite() {
            return Err(Error::InfeasibleShift { shift: p });
        }
        if basis.points.iter().any(|&y| y + p == 0.0) {
            return Err(Error::Pole { shift: p });
        }
        for (v, &y) in self.values.iter_mut().zip(&basis.points) {
            *v /= y + p;
        }
        self.degree = self.degree.saturating_sub(1);
        Ok(())
    }

    pub fn scale(&self, c: f64) -> ValuePoly {
        ValuePoly {
            values: self.values.iter().map(|v| v * c).collect(),
            degree: self.degree,
        }
    }

    /// Multiplies by `(1 + y)^k`, raising the nominal degree by `k`.
    pub fn lift(&self, basis: &InterpolationBasis, k: usize) -> Result<ValuePoly> {
        if self.degree + k > basis.max_degree {
            return Err(Error::DegreeOverflow {
                degree: self.degree + k,
                max: basis.max_degree,
            });
        }
        Ok(ValuePoly {
            values: self
                .values
                .iter()
                .zip(&basis.pow1p[k])
                .map(|(v, s)| v * s)
                .collect(),
            degree: self.degree + k,
        })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Chebyshev points of the second kind on `[T_MARGIN, 1 - T_MARGIN]` (in
/// ascending order) and their interpolatory quadrature weights for
/// `integral_0^1`.
///
/// The interpolant through the nodes is expanded in Chebyshev polynomials of
/// the mapped variable `s in [-1, 1]`, using the discrete orthogonality of
/// `T_k` on Chebyshev-Lobatto nodes, and each `T_k` is integrated in closed
/// form over the slightly wider `s`-interval that covers `t in [0, 1]`.
fn chebyshev_quadrature(degree: usize) -> (Vec<f64>, Vec<f64>) {
    if degree == 0 {
        return (vec![0.5], vec![1.0]);
    }
    let n = degree;
    let half = 0.5 - T_MARGIN;
    let reach = 0.5 / half;

    // T_k(reach) for k up to n + 1, by the three-term recurrence.
    let mut t_at = vec![1.0, reach];
    for k in 2..=n + 1 {
        let next = 2.0 * reach * t_at[k - 1] - t_at[k - 2];
        t_at.push(next);
    }
    // moments[k] = integral_{-reach}^{reach} T_k(s) ds; odd k vanish.
    let moments: Vec<f64> = (0..=n)
        .map(|k| match k {
            0 => 2.0 * reach,
            k if k % 2 == 1 => 0.0,
            k => t_at[k + 1] / (k + 1) as f64 - t_at[k - 1] / (k - 1) as f64,
        })
        .collect();

    let end = |k: usize| if k == 0 || k == n { 2.0 } else { 1.0 };
    let mut nodes = Vec::with_capacity(n + 1);
    let mut weights = Vec::with_capacity(n + 1);
    for i in 0..=n {
        // ascending in s: theta runs from pi down to 0
        let j = n - i;
        let theta = std::f64::consts::PI * j as f64 / n as f64;
        let s = theta.cos();
        let w: f64 = (0..=n)
            .map(|k| 2.0 / (n as f64 * end(j) * end(k)) * (k as f64 * theta).cos() * moments[k])
            .sum();
        nodes.push(0.5 + half * s);
        weights.push(half * w);
    }
    (nodes, weights)
}

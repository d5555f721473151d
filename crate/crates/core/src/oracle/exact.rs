//! The edge-wise Shapley formula with true floor division, in exact
//! arithmetic.
//!
//! For the edge `e` into node `u` on feature `i`, with `G_u` the
//! degree-aligned sum of the summary polynomials of the leaves below `u`:
//!
//! ```text
//! phi_i += (p_e - 1) psi(floor(G_u / (y + p_e)))
//!        - (p_up - 1) psi(floor(G_u (1 + y)^{d_up - d_u} / (y + p_up)))
//! ```
//!
//! The floor quotients carry coefficients of size up to `p^d` that only cancel
//! in the sum, so double precision is useless here once `p^d` is large.
//!
//! Every input is a double, hence a dyadic rational. Leaf polynomials are
//! built as `value prod_j (s_j + W_j y)`, with `W_j` the product of the weights
//! on the `j`-edges and `s_j` 1 when all of them are satisfied, else 0. That
//! equals `R_empty prod_j (q_j + y)` and keeps every `G_u` dyadic. A shift
//! `p = N / M` is a ratio of integers, and the floor division runs as an
//! integer recurrence scaled by powers of `M`. Each term becomes one rational,
//! terms sharing a shift are summed exactly, and each such group is rounded
//! to a double once.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Float, One, ToPrimitive, Zero};

use super::{binomial_table, path_edges, PathEdge};
use crate::error::Result;
use crate::tree_model::{Instance, NodeKind, PreprocessedTree};

/// `coeffs[k] * 2^exp`.
#[derive(Debug, Clone)]
struct DyadicPoly {
    coeffs: Vec<BigInt>,
    exp: i64,
}

/// Exact `(m, e)` with `x = m * 2^e`.
fn dyadic(x: f64) -> (BigInt, i64) {
    let (mantissa, exp, sign) = Float::integer_decode(x);
    (BigInt::from(mantissa) * i64::from(sign), i64::from(exp))
}

fn shl(x: &BigInt, bits: i64) -> BigInt {
    debug_assert!(bits >= 0);
    x << (bits as usize)
}

impl DyadicPoly {
    fn constant(x: f64) -> Self {
        let (m, e) = dyadic(x);
        Self {
            coeffs: vec![m],
            exp: e,
        }
    }

    fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `self (s + w y)` for dyadic `s = (ms, es)` and `w = (mw, ew)`.
    fn mul_linear(&self, (ms, es): &(BigInt, i64), (mw, ew): &(BigInt, i64)) -> Self {
        let base = (*es).min(*ew);
        let s = shl(ms, es - base);
        let w = shl(mw, ew - base);
        let mut out = vec![BigInt::zero(); self.coeffs.len() + 1];
        for (k, c) in self.coeffs.iter().enumerate() {
            out[k] += &s * c;
            out[k + 1] += &w * c;
        }
        Self {
            coeffs: out,
            exp: self.exp + base,
        }
    }

    /// `self (1 + y)^k`.
    fn lift(&self, k: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        for _ in 0..k {
            coeffs.push(BigInt::zero());
            for j in (1..coeffs.len()).rev() {
                let prev = coeffs[j - 1].clone();
                coeffs[j] += prev;
            }
        }
        Self {
            coeffs,
            exp: self.exp,
        }
    }

    /// Degree-aligned sum.
    fn add_aligned(&self, other: &Self) -> Self {
        let (hi, lo) = if self.degree() >= other.degree() {
            (self, other)
        } else {
            (other, self)
        };
        let lo = lo.lift(hi.degree() - lo.degree());
        let exp = hi.exp.min(lo.exp);
        let coeffs = hi
            .coeffs
            .iter()
            .zip(&lo.coeffs)
            .map(|(a, b)| shl(a, hi.exp - exp) + shl(b, lo.exp - exp))
            .collect();
        Self { coeffs, exp }
    }
}

/// A non-negative shift `p = num / den`.
#[derive(Debug, Clone)]
struct Shift {
    num: BigInt,
    den: BigInt,
}

impl Shift {
    /// Product of `1 / w` over the `feature` edges of `path`, or zero once one
    /// of them is unsatisfied.
    fn of_path(path: &[PathEdge], feature: usize) -> Self {
        let mut den = BigInt::one();
        let mut exp = 0i64;
        for e in path.iter().filter(|e| e.feature == feature) {
            if !e.satisfied {
                return Self {
                    num: BigInt::zero(),
                    den: BigInt::one(),
                };
            }
            let (m, ew) = dyadic(e.weight);
            den *= m;
            exp -= ew;
        }
        // p = 2^exp / den
        if exp >= 0 {
            Self {
                num: shl(&BigInt::one(), exp),
                den,
            }
        } else {
            Self {
                num: BigInt::one(),
                den: shl(&den, -exp),
            }
        }
    }
}

fn binomial_lcm(d: usize) -> BigInt {
    let row = &binomial_table()[d];
    row[..=d]
        .iter()
        .fold(BigInt::one(), |acc, &c| acc.lcm(&BigInt::from(c)))
}

/// `(p - 1) psi_{n-1}(floor(a / (y + p)))` with `n = deg(a) >= 1`.
///
/// With `a = A 2^s` and `p = N / M`, the quotient is `b_k = beta_k 2^s /
/// M^{n-1-k}` where `beta_{n-1} = A_n` and
/// `beta_{k-1} = M^{n-k} A_k - N beta_k`.
fn floor_term(a: &DyadicPoly, p: &Shift) -> BigRational {
    let n = a.degree();
    assert!(n >= 1, "edge polynomial has degree at least one");
    let d = n - 1;
    let m_pow: Vec<BigInt> = std::iter::successors(Some(BigInt::one()), |x| Some(x * &p.den))
        .take(n + 1)
        .collect();
    let mut beta = vec![BigInt::zero(); n];
    beta[n - 1] = a.coeffs[n].clone();
    for k in (1..n).rev() {
        beta[k - 1] = &m_pow[n - k] * &a.coeffs[k] - &p.num * &beta[k];
    }
    // psi_d(b) = 2^s sum_k beta_k M^k (L / C(d, k)) / (M^d L (d + 1))
    let lcm = binomial_lcm(d);
    let binom = &binomial_table()[d];
    let mut sum = BigInt::zero();
    for k in 0..=d {
        sum += &beta[k] * &m_pow[k] * (&lcm / BigInt::from(binom[k]));
    }
    let mut numer = (&p.num - &p.den) * sum;
    let mut denom = &m_pow[d] * &p.den * lcm * BigInt::from(d + 1);
    if a.exp >= 0 {
        numer = shl(&numer, a.exp);
    } else {
        denom = shl(&denom, -a.exp);
    }
    BigRational::new(numer, denom)
}

/// `G_u` for `u` and every descendant.
fn summary_sums(
    tree: &PreprocessedTree,
    paths: &[Vec<PathEdge>],
    u: usize,
    out: &mut [Option<DyadicPoly>],
) {
    let g = match tree.node(u).kind {
        NodeKind::Leaf { value } => {
            let path = &paths[u];
            let mut features: Vec<usize> = path.iter().map(|e| e.feature).collect();
            features.sort_unstable();
            features.dedup();
            features.into_iter().fold(DyadicPoly::constant(value), |g, j| {
                let mut w = (BigInt::one(), 0i64);
                let mut s = BigInt::one();
                for e in path.iter().filter(|e| e.feature == j) {
                    let (m, ew) = dyadic(e.weight);
                    w = (w.0 * m, w.1 + ew);
                    if !e.satisfied {
                        s = BigInt::zero();
                    }
                }
                g.mul_linear(&(s, 0), &w)
            })
        }
        NodeKind::Split { left, right, .. } => {
            summary_sums(tree, paths, left, out);
            summary_sums(tree, paths, right, out);
            let (a, b) = (out[left].as_ref(), out[right].as_ref());
            a.expect("left done").add_aligned(b.expect("right done"))
        }
    };
    out[u] = Some(g);
}

/// Shapley values from the edge-wise formula with remainder-discarding
/// division, evaluated exactly and rounded once per shift group.
pub fn coefficient_reference(tree: &PreprocessedTree, x: &Instance) -> Result<Vec<f64>> {
    x.check_len(tree.num_features())?;
    let n = tree.len();
    let paths: Vec<Vec<PathEdge>> = (0..n).map(|v| path_edges(tree, v, x.values())).collect();
    let mut sums = vec![None; n];
    summary_sums(tree, &paths, tree.root(), &mut sums);
    let sums: Vec<DyadicPoly> = sums.into_iter().map(|g| g.expect("every node")).collect();

    // group[v]: all terms whose shift is p of the edge into v
    let mut group: Vec<BigRational> = vec![BigRational::zero(); n];
    for u in 0..n {
        let path = &paths[u];
        let Some(last) = path.last() else { continue };
        let i = last.feature;
        group[u] += floor_term(&sums[u], &Shift::of_path(path, i));
        if let Some(k) = path[..path.len() - 1].iter().rposition(|e| e.feature == i) {
            // e_up is edge k, whose child end is k + 1 edges below the root
            let mut up_node = u;
            for _ in k + 1..path.len() {
                up_node = tree.info(up_node).parent.expect("ancestor");
            }
            let lifted = sums[u].lift(sums[up_node].degree() - sums[u].degree());
            group[up_node] -= floor_term(&lifted, &Shift::of_path(&path[..=k], i));
        }
    }

    let mut phi = vec![0.0; tree.num_features()];
    for (u, g) in group.iter().enumerate() {
        if let Some(last) = paths[u].last() {
            phi[last.feature] += to_f64(g);
        }
    }
    Ok(phi)
}

fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

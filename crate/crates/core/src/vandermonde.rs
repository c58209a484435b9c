//! Direction vectors `m_t = (nu_1^(t-1), ..., nu_n^(t-1))` with
//! `nu_1 = 1`, `nu_s = 2^((d+1)^(s-2))`, the matrices `M_j = (m_t^j)` and their
//! determinants.

use crate::error::{Error, Result};
use crate::exact::{binomial, det_bareiss, inverse_rational, Matrix};
use crate::forms::{monomials, ExponentVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Largest `N_d` accepted by [`build_directions`].
pub const MAX_DIRECTIONS: usize = 512;

/// `N_j = C(j+n-1, n-1)`.
pub fn monomial_count(n: usize, j: u32) -> BigInt {
    if n == 0 {
        return BigInt::zero();
    }
    binomial(j as u64 + n as u64 - 1, n as u64 - 1)
}

/// `N = N_1 + ... + N_d`.
pub fn total_monomials(n: usize, d: u32) -> BigInt {
    (1..=d).map(|j| monomial_count(n, j)).sum()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectionSet {
    pub n: usize,
    pub d: u32,
    pub nu: Vec<BigInt>,
    pub vectors: Vec<Vec<BigInt>>,
}

pub fn build_directions(n: usize, d: u32) -> Result<DirectionSet> {
    if n == 0 || d < 2 {
        return Err(Error::Invalid(format!("need n >= 1 and d >= 2, got n = {n}, d = {d}")));
    }
    let count = monomial_count(n, d)
        .to_usize()
        .filter(|&c| c <= MAX_DIRECTIONS)
        .ok_or_else(|| Error::Budget(format!("N_d for n = {n}, d = {d} exceeds {MAX_DIRECTIONS}")))?;
    let nu: Vec<BigInt> = (1..=n)
        .map(|s| {
            if s == 1 {
                BigInt::one()
            } else {
                BigInt::one() << ((d as usize + 1).pow(s as u32 - 2))
            }
        })
        .collect();
    let vectors = (0..count)
        .map(|t| nu.iter().map(|v| num_traits::pow(v.clone(), t)).collect())
        .collect();
    Ok(DirectionSet { n, d, nu, vectors })
}

/// `m^j` for an integer vector.
pub fn power(m: &[BigInt], j: &ExponentVector) -> BigInt {
    m.iter()
        .zip(&j.0)
        .fold(BigInt::one(), |a, (x, &e)| a * num_traits::pow(x.clone(), e as usize))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VandermondeFamily {
    /// `matrices[j-1] = M_j`.
    pub matrices: Vec<Matrix>,
    /// `dets[j-1] = Delta_j`.
    pub dets: Vec<BigInt>,
    /// Vandermonde parameters `nu^j` of the columns of `M_j`.
    pub params: Vec<Vec<BigInt>>,
}

pub fn build_family(dirs: &DirectionSet) -> Result<VandermondeFamily> {
    let mut matrices = Vec::with_capacity(dirs.d as usize);
    let mut dets = Vec::with_capacity(dirs.d as usize);
    let mut params = Vec::with_capacity(dirs.d as usize);
    for j in 1..=dirs.d {
        let cols = monomials(dirs.n, j);
        let m: Matrix = dirs.vectors[..cols.len()]
            .iter()
            .map(|mt| cols.iter().map(|c| power(mt, c)).collect())
            .collect();
        let det = det_bareiss(&m);
        if det.is_zero() {
            return Err(Error::Degenerate(j as usize));
        }
        params.push(cols.iter().map(|c| power(&dirs.nu, c)).collect());
        matrices.push(m);
        dets.push(det);
    }
    Ok(VandermondeFamily { matrices, dets, params })
}

impl VandermondeFamily {
    /// `Delta_j M_j^{-1}`; errors if an entry is not an integer.
    pub fn scaled_inverse(&self, j: u32) -> Result<Matrix> {
        let idx = j as usize - 1;
        let m = self.matrices.get(idx).ok_or_else(|| Error::Index(format!("degree {j}")))?;
        let inv = inverse_rational(m).ok_or(Error::Degenerate(j as usize))?;
        let det = BigRational::from_integer(self.dets[idx].clone());
        inv.into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|x| {
                        let y = x * &det;
                        if y.is_integer() {
                            Ok(y.to_integer())
                        } else {
                            Err(Error::Invalid(format!("Delta_{j} M_{j}^-1 has non-integer entry {y}")))
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// `prod_{a<b} (p_b - p_a)`.
pub fn vandermonde_product(params: &[BigInt]) -> BigInt {
    let mut acc = BigInt::one();
    for b in 0..params.len() {
        for a in 0..b {
            acc *= &params[b] - &params[a];
        }
    }
    acc
}

/// `z_{j,i}(m, y) = sum_{j' <= i, |j'| = j} C(i, j') m^j' y^(i - j')`, the
/// coefficient of `x^j` in `(y + x m)^i`.
pub fn z_coefficient(j: u32, i: &ExponentVector, m: &[BigInt], y: &[BigInt]) -> Result<BigInt> {
    let n = i.len();
    if m.len() != n {
        return Err(Error::Dimension { expected: n, got: m.len() });
    }
    if y.len() != n {
        return Err(Error::Dimension { expected: n, got: y.len() });
    }
    if j > i.degree() {
        return Ok(BigInt::zero());
    }
    let mut acc = BigInt::zero();
    for jp in monomials(n, j) {
        if !jp.divides(i) {
            continue;
        }
        let rest = ExponentVector(i.0.iter().zip(&jp.0).map(|(a, b)| a - b).collect());
        acc += jp.binomial_from(i) * power(m, &jp) * power(y, &rest);
    }
    Ok(acc)
}

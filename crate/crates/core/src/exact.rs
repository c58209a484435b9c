//! Exact integer and rational helpers: literal parsing, binomials and
//! fraction-free linear algebra over `BigInt`.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Matrix = Vec<Vec<BigInt>>;

/// Parses a decimal integer literal with optional sign.
pub fn parse_int(s: &str) -> Result<BigInt> {
    let t = s.trim();
    t.parse::<BigInt>()
        .map_err(|_| Error::parse(format!("{t:?}"), "expected an integer literal"))
}

/// Parses `a`, `a/b` or a finite decimal such as `-1.25` or `3e-2` exactly.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let t = s.trim();
    let bad = || Error::parse(format!("{t:?}"), "expected a rational literal");
    if let Some((a, b)) = t.split_once('/') {
        let num = parse_int(a).map_err(|_| bad())?;
        let den = parse_int(b).map_err(|_| bad())?;
        if den.is_zero() {
            return Err(Error::parse(format!("{t:?}"), "zero denominator"));
        }
        return Ok(BigRational::new(num, den));
    }
    let (mant, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i64>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, body) = match mant.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (ip, fp) = body.split_once('.').unwrap_or((body, ""));
    if ip.is_empty() && fp.is_empty() {
        return Err(bad());
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{ip}{fp}");
    let mut num: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().map_err(|_| bad())?
    };
    if neg {
        num = -num;
    }
    let scale = exp - fp.len() as i64;
    let ten = BigInt::from(10);
    Ok(if scale >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
    })
}

/// Number of significant fractional digits in a decimal literal.
pub fn decimal_places(s: &str) -> usize {
    let t = s.trim();
    let mant = t.split(['e', 'E']).next().unwrap_or(t);
    let exp: i64 = t
        .split_once(['e', 'E'])
        .and_then(|(_, e)| e.parse().ok())
        .unwrap_or(0);
    let frac = mant.split_once('.').map(|(_, f)| f.len()).unwrap_or(0) as i64;
    (frac - exp).max(0) as usize
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

pub fn binomial_u128(n: u64, k: u64) -> u128 {
    binomial(n, k).to_u128().expect("binomial overflow")
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(n.into())
}

pub fn rat_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        if x.is_positive() {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    })
}

/// `floor(x)` for an exact rational.
pub fn floor_rat(x: &BigRational) -> BigInt {
    x.numer().div_floor(x.denom())
}

/// Nearest integer, ties toward +infinity.
pub fn round_rat(x: &BigRational) -> BigInt {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    floor_rat(&(x + half))
}

/// Determinant by Bareiss fraction-free elimination with row pivoting.
pub fn det_bareiss(m: &Matrix) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a = m.clone();
    let mut sign = false;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                    sign = !sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    let d = a[n - 1][n - 1].clone();
    if sign {
        -d
    } else {
        d
    }
}

/// Exact rank of an integer matrix (rows of equal length).
pub fn rank(m: &Matrix) -> usize {
    let rows: Vec<Vec<BigRational>> = m
        .iter()
        .map(|r| r.iter().map(|x| BigRational::from_integer(x.clone())).collect())
        .collect();
    rank_rational(rows)
}

pub fn rank_rational(mut a: Vec<Vec<BigRational>>) -> usize {
    let nr = a.len();
    if nr == 0 {
        return 0;
    }
    let nc = a[0].len();
    let mut r = 0;
    for c in 0..nc {
        let Some(p) = (r..nr).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(p, r);
        for i in r + 1..nr {
            if a[i][c].is_zero() {
                continue;
            }
            let f = &a[i][c] / &a[r][c];
            for j in c..nc {
                let v = &f * &a[r][j];
                a[i][j] -= v;
            }
        }
        r += 1;
        if r == nr {
            break;
        }
    }
    r
}

/// Inverse over the rationals by Gauss-Jordan; `None` if singular.
pub fn inverse_rational(m: &Matrix) -> Option<Vec<Vec<BigRational>>> {
    let n = m.len();
    let mut a: Vec<Vec<BigRational>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r: Vec<BigRational> =
                row.iter().map(|x| BigRational::from_integer(x.clone())).collect();
            r.extend((0..n).map(|j| {
                if i == j {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            }));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&i| !a[i][c].is_zero())?;
        a.swap(p, c);
        let inv = a[c][c].recip();
        for x in a[c].iter_mut() {
            *x *= &inv;
        }
        for i in 0..n {
            if i == c || a[i][c].is_zero() {
                continue;
            }
            let f = a[i][c].clone();
            for j in 0..2 * n {
                let v = &f * &a[c][j];
                a[i][j] -= v;
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// `det(m) * m^{-1}` as an integer matrix, with `det(m)`.
pub fn adjugate(m: &Matrix) -> Option<(BigInt, Matrix)> {
    let det = det_bareiss(m);
    if det.is_zero() {
        return None;
    }
    let inv = inverse_rational(m)?;
    let dr = BigRational::from_integer(det.clone());
    let adj = inv
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|x| {
                    let y = x * &dr;
                    debug_assert!(y.is_integer());
                    y.to_integer()
                })
                .collect()
        })
        .collect();
    Some((det, adj))
}

/// Greedily picks the first `k` rows (in row order) that are linearly independent.
pub fn first_independent_rows(m: &Matrix, k: usize) -> Option<Vec<usize>> {
    let mut chosen: Vec<usize> = Vec::new();
    for i in 0..m.len() {
        if chosen.len() == k {
            break;
        }
        let mut trial: Matrix = chosen.iter().map(|&t| m[t].clone()).collect();
        trial.push(m[i].clone());
        if rank(&trial) == trial.len() {
            chosen.push(i);
        }
    }
    (chosen.len() == k).then_some(chosen)
}

pub fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let m = b.first().map_or(0, |r| r.len());
    let inner = b.len();
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| (0..inner).fold(BigInt::zero(), |s, t| s + &a[i][t] * &b[t][j]))
                .collect()
        })
        .collect()
}

pub fn gcd_all<'a>(xs: impl IntoIterator<Item = &'a BigInt>) -> BigInt {
    xs.into_iter().fold(BigInt::zero(), |g, x| g.gcd(x))
}

//! `N(P) = #{x in [-P, P]^n : |f_k(x + mu 1) - tau_k| < eta for all k}`.
//!
//! Every band decision runs a fast `f64` test with an error margin and falls
//! back to the exact comparison in `Shift::cmp_poly`. Points the enclosure of
//! `mu` cannot decide are reported as boundary flags and left out of the count.

use crate::error::{Error, Result};
use crate::exact::{binomial_u128, rat_to_f64};
use crate::forms::{FormSystem, ShiftExpansion};
use crate::shift::Shift;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;
use std::cmp::Ordering;
use std::time::Instant;

/// Default cap on lattice points for the generic enumerator.
pub const DEFAULT_COUNT_BUDGET: u64 = 2_000_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Generic,
    Mitm,
    Auto,
}

impl Method {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "generic" => Ok(Method::Generic),
            "mitm" | "diagonal-mitm" => Ok(Method::Mitm),
            "auto" => Ok(Method::Auto),
            other => Err(Error::parse("method", format!("unknown method {other:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Generic => "generic",
            Method::Mitm => "mitm",
            Method::Auto => "auto",
        }
    }
}

#[derive(Clone, Debug)]
pub struct CountSpec<'a> {
    pub system: &'a FormSystem,
    pub expansion: &'a ShiftExpansion,
    pub mu: &'a Shift,
    pub tau: Vec<BigRational>,
    pub eta: BigRational,
    pub p: u64,
    pub method: Method,
}

#[derive(Clone, Debug, Serialize)]
pub struct CountResult {
    pub count: u64,
    pub p: u64,
    pub method: Method,
    pub boundary_flags: u64,
    pub seconds: f64,
}

impl CountResult {
    pub fn certified(&self) -> bool {
        self.boundary_flags == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Decision {
    In,
    Out,
    Flag,
}

/// Band `(tau - eta, tau + eta)` for one form, with exact and float ends.
#[derive(Clone, Debug)]
struct Band {
    lo: BigRational,
    hi: BigRational,
    lo_f: f64,
    hi_f: f64,
}

/// Shared state for deciding `|sum_m c_m mu^m - tau_k| < eta`.
#[derive(Clone, Debug)]
struct BandTest<'a> {
    mu: &'a Shift,
    /// `|mu|^m` and `(|mu| + rad)^m - |mu|^m` for `m = 0..=d`.
    mu_pow: Vec<f64>,
    mu_abs_pow: Vec<f64>,
    spread: Vec<f64>,
    bands: Vec<Band>,
}

impl<'a> BandTest<'a> {
    fn new(mu: &'a Shift, d: u32, tau: &[BigRational], eta: &BigRational) -> Result<Self> {
        if !eta.is_positive() {
            return Err(Error::Invalid(format!("eta must be positive, got {eta}")));
        }
        let m = mu.value_f64();
        let rad = mu.radius_f64();
        let d = d as i32;
        let mu_pow = (0..=d).map(|k| m.powi(k)).collect();
        let mu_abs_pow: Vec<f64> = (0..=d).map(|k| m.abs().powi(k)).collect();
        let spread = (0..=d).map(|k| (m.abs() + rad).powi(k) * (1.0 + 1e-12) - m.abs().powi(k)).collect();
        let bands = tau
            .iter()
            .map(|t| {
                let lo = t - eta;
                let hi = t + eta;
                Band { lo_f: rat_to_f64(&lo), hi_f: rat_to_f64(&hi), lo, hi }
            })
            .collect();
        Ok(BandTest { mu, mu_pow, mu_abs_pow, spread, bands })
    }

    /// `(value, error bound)` of `sum c_m mu^m` in `f64`.
    fn float(&self, c: &[i128]) -> (f64, f64) {
        let mut v = 0.0;
        let mut scale = 0.0;
        let mut spread = 0.0;
        for (m, &cm) in c.iter().enumerate() {
            let cf = cm as f64;
            v += cf * self.mu_pow[m];
            scale += cf.abs() * self.mu_abs_pow[m];
            spread += cf.abs() * self.spread[m];
        }
        (v, 1e-13 * scale + spread)
    }

    fn exact(&self, k: usize, c: &[i128]) -> Decision {
        let big: Vec<BigInt> = c.iter().map(|&x| BigInt::from(x)).collect();
        let b = &self.bands[k];
        let lo = self.mu.cmp_poly(&big, &b.lo);
        let hi = self.mu.cmp_poly(&big, &b.hi);
        match (lo, hi) {
            (Some(o), _) if o != Ordering::Greater => Decision::Out,
            (_, Some(o)) if o != Ordering::Less => Decision::Out,
            (Some(_), Some(_)) => Decision::In,
            _ => Decision::Flag,
        }
    }

    fn edge_err(&self, k: usize) -> f64 {
        let b = &self.bands[k];
        1e-15 * (b.lo_f.abs() + b.hi_f.abs())
    }

    fn decide(&self, k: usize, c: &[i128]) -> Decision {
        let (v, err) = self.float(c);
        let b = &self.bands[k];
        let m = err + self.edge_err(k);
        if v - b.lo_f > m && b.hi_f - v > m {
            Decision::In
        } else if v < b.lo_f - m || v > b.hi_f + m {
            Decision::Out
        } else {
            self.exact(k, c)
        }
    }
}

fn check_spec(spec: &CountSpec) -> Result<()> {
    if spec.tau.len() != spec.system.r() {
        return Err(Error::Dimension { expected: spec.system.r(), got: spec.tau.len() });
    }
    Ok(())
}

/// Coefficients of `c_m` (of `mu^m`) for form `k` as a polynomial table:
/// `(exponents, coefficient, m)`.
fn slice_terms(exp: &ShiftExpansion, k: usize) -> Vec<(Vec<u32>, i128, usize)> {
    let d = exp.d();
    let mut out: Vec<(Vec<u32>, i128, usize)> = exp
        .entries(k)
        .iter()
        .map(|(j, c)| (j.0.clone(), c.to_i128().expect("coefficient fits i128"), (d - j.degree()) as usize))
        .collect();
    out.push((vec![0; exp.n()], exp.constant(k).to_i128().expect("coefficient fits i128"), d as usize));
    out
}

/// Enumerates the box with forward differences along the last coordinate.
pub fn count_generic(spec: &CountSpec, budget: u64) -> Result<CountResult> {
    check_spec(spec)?;
    let start = Instant::now();
    let n = spec.system.n();
    let d = spec.system.d() as usize;
    let r = spec.system.r();
    let side = 2 * spec.p + 1;
    if (side as f64).powi(n as i32) > budget as f64 {
        return Err(Error::Budget(format!("{side}^{n} points exceed {budget}")));
    }
    let test = BandTest::new(spec.mu, spec.system.d(), &spec.tau, &spec.eta)?;
    let terms: Vec<_> = (0..r).map(|k| slice_terms(spec.expansion, k)).collect();
    let p = spec.p as i64;

    // c_m(x) at x_n = -P + t, t = 0..=d, then forward differences in x_n
    let run = |prefix: &[i64]| -> (u64, u64) {
        let mut diffs = vec![vec![vec![0i128; d + 1]; d + 1]; r];
        for (k, tk) in terms.iter().enumerate() {
            for t in 0..=d {
                let xn = -p + t as i64;
                for (e, c, m) in tk {
                    let mut v = *c;
                    for (i, &ex) in e.iter().enumerate() {
                        let xi = if i + 1 == n { xn } else { prefix[i] };
                        v *= (xi as i128).pow(ex);
                    }
                    diffs[k][*m][t] += v;
                }
            }
            for row in diffs[k].iter_mut() {
                for lvl in 1..=d {
                    for t in (lvl..=d).rev() {
                        row[t] -= row[t - 1];
                    }
                }
            }
        }
        let (mut hits, mut flags) = (0u64, 0u64);
        let mut c = vec![0i128; d + 1];
        for _ in -p..=p {
            let mut inside = true;
            let mut flagged = false;
            for k in 0..r {
                for m in 0..=d {
                    c[m] = diffs[k][m][0];
                }
                match test.decide(k, &c) {
                    Decision::In => {}
                    Decision::Out => {
                        inside = false;
                        break;
                    }
                    Decision::Flag => flagged = true,
                }
            }
            if inside {
                if flagged {
                    flags += 1;
                } else {
                    hits += 1;
                }
            }
            for row in diffs.iter_mut().flat_map(|f| f.iter_mut()) {
                for t in 0..d {
                    row[t] += row[t + 1];
                }
            }
        }
        (hits, flags)
    };

    let (count, boundary_flags) = if n == 1 {
        run(&[])
    } else {
        let parts: Vec<(u64, u64)> = (-p..=p)
            .into_par_iter()
            .map(|x1| {
                let mut prefix = vec![-p; n - 1];
                prefix[0] = x1;
                let (mut h, mut f) = (0, 0);
                loop {
                    let (a, b) = run(&prefix);
                    h += a;
                    f += b;
                    let mut s = n - 1;
                    loop {
                        if s == 1 {
                            return (h, f);
                        }
                        s -= 1;
                        if prefix[s] < p {
                            prefix[s] += 1;
                            break;
                        }
                        prefix[s] = -p;
                    }
                }
            })
            .collect();
        parts.iter().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
    };
    Ok(CountResult { count, p: spec.p, method: Method::Generic, boundary_flags, seconds: start.elapsed().as_secs_f64() })
}

/// Partial sums over a group of variables: exact coefficient vectors (`R`
/// blocks of `d + 1`) with the `f64` value of the first form.
struct Half {
    values: Vec<f64>,
    coeffs: Vec<i128>,
    err: Vec<f64>,
}

fn enumerate_group(vars: &[usize], weights: &[Vec<Vec<i128>>], p: i64, width: usize, test: &BandTest, sorted: bool) -> Half {
    let total: usize = (2 * p as usize + 1).pow(vars.len() as u32);
    let mut coeffs = Vec::with_capacity(total * width);
    let mut idx = vec![-p; vars.len()];
    for _ in 0..total {
        let mut c = vec![0i128; width];
        for (slot, &v) in vars.iter().enumerate() {
            let w = &weights[v][(idx[slot] + p) as usize];
            for (a, b) in c.iter_mut().zip(w) {
                *a += b;
            }
        }
        coeffs.extend_from_slice(&c);
        for s in (0..vars.len()).rev() {
            if idx[s] < p {
                idx[s] += 1;
                break;
            }
            idx[s] = -p;
        }
    }
    let block = width / test.bands.len();
    let mut rows: Vec<(f64, f64, usize)> = (0..total)
        .map(|i| {
            let (v, e) = test.float(&coeffs[i * width..i * width + block]);
            (v, e, i)
        })
        .collect();
    if sorted {
        rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
    }
    let mut out = Half { values: Vec::with_capacity(total), coeffs: Vec::with_capacity(total * width), err: Vec::with_capacity(total) };
    for (v, e, i) in rows {
        out.values.push(v);
        out.err.push(e);
        out.coeffs.extend_from_slice(&coeffs[i * width..(i + 1) * width]);
    }
    out
}

/// Meet-in-the-middle for diagonal systems with `R <= 2`: two sorted groups of
/// `floor(n/2)` variables swept with monotone pointers for each value of the
/// remaining variable.
pub fn count_diagonal_mitm(spec: &CountSpec) -> Result<CountResult> {
    check_spec(spec)?;
    let start = Instant::now();
    let sys = spec.system;
    if !sys.is_diagonal() {
        return Err(Error::Invalid("meet-in-the-middle needs a diagonal system".into()));
    }
    let r = sys.r();
    if r > 2 {
        return Err(Error::Invalid(format!("meet-in-the-middle handles R <= 2, got R = {r}")));
    }
    let n = sys.n();
    let d = sys.d() as usize;
    let p = spec.p as i64;
    let test = BandTest::new(spec.mu, sys.d(), &spec.tau, &spec.eta)?;
    let diag: Vec<Vec<i128>> = sys
        .forms()
        .iter()
        .map(|f| f.diagonal_coeffs().expect("diagonal").iter().map(|c| c.to_i128().expect("coefficient fits i128")).collect())
        .collect();
    let width = r * (d + 1);
    // w[v][x + P] = blocks of a_{k,v} C(d, m) x^(d-m) for m = 0..=d
    let weights: Vec<Vec<Vec<i128>>> = (0..n)
        .map(|v| {
            (-p..=p)
                .map(|x| {
                    let mut w = vec![0i128; width];
                    for k in 0..r {
                        for m in 0..=d {
                            w[k * (d + 1) + m] = diag[k][v] * binomial_u128(d as u64, m as u64) as i128 * (x as i128).pow((d - m) as u32);
                        }
                    }
                    w
                })
                .collect()
        })
        .collect();
    let h = n / 2;
    let group_a: Vec<usize> = (0..h).collect();
    let group_b: Vec<usize> = (h..2 * h).collect();
    let outer: Vec<usize> = (2 * h..n).collect();
    let a = enumerate_group(&group_a, &weights, p, width, &test, true);
    let b = enumerate_group(&group_b, &weights, p, width, &test, true);
    let o = enumerate_group(&outer, &weights, p, width, &test, false);
    let max_err = |x: &Half| x.err.iter().copied().fold(0.0, f64::max);
    let margin = 2.0 * (max_err(&a) + max_err(&b) + max_err(&o)) + test.edge_err(0) + 1e-300;
    let band = &test.bands[0];

    let parts: Vec<(u64, u64)> = (0..o.values.len())
        .into_par_iter()
        .map(|oi| {
            let vo = o.values[oi];
            let co = &o.coeffs[oi * width..(oi + 1) * width];
            let (mut hits, mut flags) = (0u64, 0u64);
            let mut c = vec![0i128; width];
            let na = a.values.len();
            let (mut i1, mut i2, mut i3, mut i4) = (0usize, 0usize, 0usize, 0usize);
            let mut check = |ia: usize, ib: usize, first_known: bool, hits: &mut u64, flags: &mut u64| {
                let ca = &a.coeffs[ia * width..(ia + 1) * width];
                let cb = &b.coeffs[ib * width..(ib + 1) * width];
                for t in 0..width {
                    c[t] = ca[t] + cb[t] + co[t];
                }
                let mut flagged = false;
                for k in 0..r {
                    if k == 0 && first_known {
                        continue;
                    }
                    match test.decide(k, &c[k * (d + 1)..(k + 1) * (d + 1)]) {
                        Decision::In => {}
                        Decision::Out => return,
                        Decision::Flag => flagged = true,
                    }
                }
                if flagged {
                    *flags += 1;
                } else {
                    *hits += 1;
                }
            };
            // descending b values give ascending thresholds on a
            for ib in (0..b.values.len()).rev() {
                let s = vo + b.values[ib];
                let lo = band.lo_f - s;
                let hi = band.hi_f - s;
                while i1 < na && a.values[i1] < lo - margin {
                    i1 += 1;
                }
                while i2 < na && a.values[i2] <= lo + margin {
                    i2 += 1;
                }
                while i3 < na && a.values[i3] < hi - margin {
                    i3 += 1;
                }
                while i4 < na && a.values[i4] <= hi + margin {
                    i4 += 1;
                }
                if i2 > i3 {
                    for ia in i1..i4 {
                        check(ia, ib, false, &mut hits, &mut flags);
                    }
                    continue;
                }
                for ia in i1..i2 {
                    check(ia, ib, false, &mut hits, &mut flags);
                }
                if r == 1 {
                    hits += (i3 - i2) as u64;
                } else {
                    for ia in i2..i3 {
                        check(ia, ib, true, &mut hits, &mut flags);
                    }
                }
                for ia in i3..i4 {
                    check(ia, ib, false, &mut hits, &mut flags);
                }
            }
            (hits, flags)
        })
        .collect();
    let (count, boundary_flags) = parts.iter().fold((0, 0), |x, y| (x.0 + y.0, x.1 + y.1));
    Ok(CountResult { count, p: spec.p, method: Method::Mitm, boundary_flags, seconds: start.elapsed().as_secs_f64() })
}

/// Dispatches on `spec.method`; `auto` picks the meet-in-the-middle route for
/// diagonal systems with `R <= 2` and the enumerator otherwise.
pub fn count(spec: &CountSpec, budget: u64) -> Result<CountResult> {
    match spec.method {
        Method::Generic => count_generic(spec, budget),
        Method::Mitm => count_diagonal_mitm(spec),
        Method::Auto => {
            if spec.system.is_diagonal() && spec.system.r() <= 2 {
                count_diagonal_mitm(spec)
            } else {
                count_generic(spec, budget)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SeriesRow {
    pub p: u64,
    pub n: u64,
    /// `N / ((2 eta)^R c P^(n - Rd))`; infinite when `c <= 0`.
    pub ratio: f64,
    pub method: Method,
    pub boundary_flags: u64,
    pub seconds: f64,
}

/// `(2 eta)^R c P^(n - Rd)`.
pub fn main_term(sys: &FormSystem, eta: f64, c: f64, p: u64) -> f64 {
    let r = sys.r() as i32;
    let e = sys.n() as i32 - r * sys.d() as i32;
    (2.0 * eta).powi(r) * c * (p as f64).powi(e)
}

pub fn count_series(spec: &CountSpec, ps: &[u64], c: f64, budget: u64) -> Result<Vec<SeriesRow>> {
    let eta = rat_to_f64(&spec.eta);
    ps.iter()
        .map(|&p| {
            let s = CountSpec { p, ..spec.clone() };
            let res = count(&s, budget)?;
            let target = main_term(spec.system, eta, c, p);
            let ratio = if c > 0.0 && target > 0.0 { res.count as f64 / target } else { f64::INFINITY };
            Ok(SeriesRow { p, n: res.count, ratio, method: res.method, boundary_flags: res.boundary_flags, seconds: res.seconds })
        })
        .collect()
}

//! Rational approximation certificates: Birch-type `(q, a)` for `alpha`,
//! Baker-type `(r, a_j)` for the `omega_j`, and the special `(D, E, a1, a2)`
//! built from the degree `d` and `d-1` slices, with their consistency checks.

use crate::error::{Error, Result};
use crate::exact::{adjugate, gcd_all, rat_to_f64, round_rat, Matrix};
use crate::forms::{monomials, slice_matrix, independent_rows, ExponentVector, ShiftExpansion};
use crate::real::{dd, dd_from_int, Ball, Dd};
use crate::shift::Shift;
use crate::vandermonde::total_monomials;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::BTreeMap;

pub use crate::shift::IrrationalMu;

/// Default cap on the number of candidates a search may visit.
pub const DEFAULT_SEARCH_CAP: u64 = 10_000_000;

/// `P^y` for rational `P > 0` and `y`, enclosed in a rational interval.
#[derive(Clone, Debug)]
pub struct PowBound {
    base: BigRational,
    exp: BigRational,
    lo: BigRational,
    hi: BigRational,
    approx: f64,
}

impl PowBound {
    pub fn new(base: &BigRational, exp: &BigRational) -> Result<Self> {
        if !base.is_positive() {
            return Err(Error::Invalid(format!("P must be positive, got {base}")));
        }
        let ln = rat_to_f64(base).ln() * rat_to_f64(exp);
        if !ln.is_finite() || ln.abs() > 700.0 {
            return Err(Error::Invalid(format!("P^{exp} out of range")));
        }
        let v = ln.exp();
        let slack = 1e-12 * ln.abs().max(1.0);
        let lo = BigRational::from_float(v * (1.0 - slack)).unwrap_or_else(BigRational::zero);
        let hi = BigRational::from_float(v * (1.0 + slack)).unwrap_or_else(BigRational::zero);
        Ok(PowBound { base: base.clone(), exp: exp.clone(), lo, hi, approx: v })
    }

    pub fn approx(&self) -> f64 {
        self.approx
    }

    pub fn upper(&self) -> &BigRational {
        &self.hi
    }

    /// Orders `x` against `P^y`, falling back to exact integer powers when the
    /// interval cannot decide.
    pub fn compare(&self, x: &BigRational) -> Result<Ordering> {
        if *x < self.lo {
            return Ok(Ordering::Less);
        }
        if *x > self.hi {
            return Ok(Ordering::Greater);
        }
        let den = self.exp.denom().to_usize().filter(|&m| m <= 64);
        let num = self.exp.numer().to_i64().filter(|v| v.abs() <= 4096);
        match (den, num) {
            (Some(m), Some(k)) => {
                let lhs = num_traits::pow(x.clone(), m);
                Ok(if k >= 0 {
                    lhs.cmp(&num_traits::pow(self.base.clone(), k as usize))
                } else {
                    (lhs * num_traits::pow(self.base.clone(), (-k) as usize)).cmp(&BigRational::one())
                })
            }
            _ => Err(Error::Undecidable(format!("{x} against P^{}", self.exp))),
        }
    }

    /// Largest integer `m >= 0` with `m <= P^y` (or `< P^y` when `strict`).
    pub fn floor_int(&self, strict: bool) -> Result<BigInt> {
        let below = |m: &BigInt| -> Result<bool> {
            let o = self.compare(&BigRational::from_integer(m.clone()))?;
            Ok(o == Ordering::Less || (!strict && o == Ordering::Equal))
        };
        // invariant: below(lo) (or lo = -1), !below(hi)
        let mut lo: BigInt = self.lo.floor().to_integer() - 1;
        let mut hi: BigInt = self.hi.floor().to_integer() + 1;
        if lo.is_negative() {
            lo = BigInt::from(-1);
        } else if !below(&lo)? {
            return Err(Error::Undecidable(format!("floor of P^{}", self.exp)));
        }
        while &hi - &lo > BigInt::one() {
            let mid: BigInt = (&lo + &hi) >> 1;
            if below(&mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo.max(BigInt::zero()))
    }

    /// Decides `[lo, hi] <= P^y` (or `<` when `strict`) for an enclosure.
    fn admits(&self, lo: &BigRational, hi: &BigRational, strict: bool) -> Result<bool> {
        let ok = |o: Ordering| if strict { o == Ordering::Less } else { o != Ordering::Greater };
        if ok(self.compare(hi)?) {
            return Ok(true);
        }
        if !ok(self.compare(lo)?) {
            return Ok(false);
        }
        Err(Error::Undecidable(format!("[{lo}, {hi}] straddles P^{}", self.exp)))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    pub cap: u64,
    pub check_unique: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { cap: DEFAULT_SEARCH_CAP, check_unique: true }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BirchCertificate {
    #[serde(serialize_with = "ser_display")]
    pub q: BigInt,
    #[serde(serialize_with = "ser_vec")]
    pub a: Vec<BigInt>,
    #[serde(serialize_with = "ser_display")]
    pub theta: BigRational,
    /// `max_k |q alpha_k - a_k|` at the midpoint of `alpha`.
    #[serde(serialize_with = "ser_display")]
    pub quality: BigRational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BakerCertificate {
    #[serde(serialize_with = "ser_display")]
    pub r: BigInt,
    #[serde(serialize_with = "ser_map")]
    pub a: BTreeMap<ExponentVector, BigInt>,
    #[serde(serialize_with = "ser_display")]
    pub delta: BigRational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpecialCertificate {
    #[serde(serialize_with = "ser_display")]
    pub d: BigInt,
    #[serde(serialize_with = "ser_display")]
    pub e: BigInt,
    #[serde(serialize_with = "ser_vec")]
    pub a1: Vec<BigInt>,
    #[serde(serialize_with = "ser_vec")]
    pub a2: Vec<BigInt>,
}

fn ser_display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

fn ser_vec<S: serde::Serializer>(v: &[BigInt], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| x.to_string()))
}

fn ser_map<S: serde::Serializer>(v: &BTreeMap<ExponentVector, BigInt>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|(e, x)| (e.0.clone(), x.to_string())))
}

/// `theta_0`, `delta = (R(R+1) N d^2 + 1) theta_0`, `N` and `C_f`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DissectionParams {
    pub theta0: BigRational,
    pub delta: BigRational,
    pub n_total: BigInt,
    /// `max(|D_d|, |D_{d-1}|)`; absent when `d` or `d-1` lies outside the
    /// independent degrees.
    pub c_f: Option<BigInt>,
}

fn structural_weight(r: usize, n_total: &BigInt, d: u32) -> BigInt {
    BigInt::from((r * (r + 1)) as u64) * n_total * BigInt::from(d as u64 * d as u64)
}

pub fn default_theta0(r: usize, n: usize, d: u32) -> BigRational {
    let w = structural_weight(r, &total_monomials(n, d), d);
    BigRational::new(BigInt::one(), w * 64)
}

impl DissectionParams {
    pub fn new(exp: &ShiftExpansion, theta0: Option<BigRational>) -> Result<Self> {
        let n_total = total_monomials(exp.n(), exp.d());
        let theta0 = theta0.unwrap_or_else(|| default_theta0(exp.r(), exp.n(), exp.d()));
        if !theta0.is_positive() {
            return Err(Error::Invalid("theta0 must be positive".into()));
        }
        let delta = (BigRational::from_integer(structural_weight(exp.r(), &n_total, exp.d())) + BigRational::one()) * &theta0;
        let top = slice_determinant(exp, exp.d()).ok();
        let sub = slice_determinant(exp, exp.d() - 1).ok();
        let c_f = match (top, sub) {
            (Some(a), Some(b)) => Some(a.abs().max(b.abs())),
            _ => None,
        };
        Ok(DissectionParams { theta0, delta, n_total, c_f })
    }
}

fn slice_determinant(exp: &ShiftExpansion, j: u32) -> Result<BigInt> {
    let zero: BTreeMap<ExponentVector, BigInt> = BTreeMap::new();
    Ok(special_from_slices(exp, j, &zero)?.det)
}

/// `omega_j = sum_k d_{k,j} alpha_k mu^(d-|j|)` in double-double.
#[derive(Clone, Debug)]
pub struct OmegaMap {
    pub values: BTreeMap<ExponentVector, Dd>,
    /// Bound on `|value - true omega_j|` over all `j`.
    pub radius: f64,
}

impl OmegaMap {
    pub fn get(&self, j: &ExponentVector) -> Dd {
        self.values.get(j).copied().unwrap_or_else(|| dd(0.0))
    }

    /// Entries with `|j| < d`.
    pub fn diamond(&self, d: u32) -> BTreeMap<ExponentVector, Dd> {
        self.values.iter().filter(|(j, _)| j.degree() < d).map(|(j, v)| (j.clone(), *v)).collect()
    }
}

pub fn omega(alpha: &[Dd], exp: &ShiftExpansion, mu: &Shift) -> Result<OmegaMap> {
    if alpha.len() != exp.r() {
        return Err(Error::Dimension { expected: exp.r(), got: alpha.len() });
    }
    let m = mu.value_dd();
    let mu_abs = m.hi().abs();
    let rad = mu.radius_f64();
    let d = exp.d() as usize;
    let mut pows = vec![dd(1.0)];
    for i in 1..=d {
        pows.push(pows[i - 1] * m);
    }
    let mut values = BTreeMap::new();
    let mut radius: f64 = 0.0;
    for j in exp.index() {
        let p = exp.mu_power(&j) as usize;
        let mut acc = dd(0.0);
        let mut mag = 0.0;
        for (k, a) in alpha.iter().enumerate() {
            let c = exp.coeff(k, &j);
            if c.is_zero() {
                continue;
            }
            let term = dd_from_int(&c) * *a;
            mag += (term.hi()).abs();
            acc += term * pows[p];
        }
        let spread = (mu_abs + rad).powi(p as i32) - mu_abs.powi(p as i32);
        radius = radius.max(mag * (spread * 1.000001 + 1e-28 * (mu_abs + 1.0).powi(p as i32)));
        values.insert(j, acc);
    }
    Ok(OmegaMap { values, radius })
}

/// Rigorous enclosures of the `omega_j`.
pub fn omega_ball(alpha: &[Ball], exp: &ShiftExpansion, mu: &Shift) -> Result<BTreeMap<ExponentVector, Ball>> {
    if alpha.len() != exp.r() {
        return Err(Error::Dimension { expected: exp.r(), got: alpha.len() });
    }
    let (lo, hi) = mu.enclosure(256);
    let m = Ball::from_bounds(&lo, &hi);
    let pows: Vec<Ball> = (0..=exp.d() as usize).map(|i| m.pow(i)).collect();
    let mut out = BTreeMap::new();
    for j in exp.index() {
        let p = exp.mu_power(&j) as usize;
        let mut acc = Ball::exact(BigRational::zero());
        for (k, a) in alpha.iter().enumerate() {
            let c = exp.coeff(k, &j);
            if !c.is_zero() {
                acc = acc.add(&a.scale(&BigRational::from_integer(c)));
            }
        }
        out.insert(j, acc.mul(&pows[p]));
    }
    Ok(out)
}

/// Fast rejection: true when `|x m - round(x m)|` clearly exceeds `bound`.
fn clearly_far(x: f64, m: f64, bound: f64) -> bool {
    let v = x * m;
    (v - v.round()).abs() > bound * 1.001 + 1e-9 * v.abs().max(1.0)
}

fn birch_test(alpha: &[Ball], q: &BigInt, bound: &PowBound) -> Result<Option<(Vec<BigInt>, BigRational)>> {
    let two = BigRational::from_integer(BigInt::from(2));
    let qr = BigRational::from_integer(q.clone());
    let mut a = Vec::with_capacity(alpha.len());
    let mut quality = BigRational::zero();
    for al in alpha {
        let scaled = al.scale(&qr);
        let ak = round_rat(&scaled.mid);
        let akr = BigRational::from_integer(ak.clone());
        let (lo, hi) = scaled.dist_to(&akr);
        if !bound.admits(&(&lo * &two), &(&hi * &two), false)? {
            return Ok(None);
        }
        quality = quality.max((&scaled.mid - &akr).abs());
        a.push(ak);
    }
    Ok(Some((a, quality)))
}

/// Finds `q <= P^(R(d-1)theta)` and `a` with `2|q alpha - a| <= P^(R(d-1)theta - d)`.
pub fn birch_search(
    alpha: &[Ball],
    p: &BigRational,
    theta: &BigRational,
    d: u32,
    opts: SearchOptions,
) -> Result<Option<BirchCertificate>> {
    if !theta.is_positive() || *theta > BigRational::one() {
        return Err(Error::Invalid(format!("theta must lie in (0, 1], got {theta}")));
    }
    if alpha.is_empty() {
        return Err(Error::Invalid("alpha must be nonempty".into()));
    }
    let x = BigRational::from_integer(BigInt::from(alpha.len() as u64 * (d as u64 - 1))) * theta;
    let qbound = PowBound::new(p, &x)?;
    let ebound = PowBound::new(p, &(&x - BigRational::from_integer(BigInt::from(d))))?;
    let qmax = qbound.floor_int(false)?;
    let mids: Vec<f64> = alpha.iter().map(|b| rat_to_f64(&b.mid)).collect();
    let half_bound = ebound.approx() / 2.0;

    let max_rad = alpha.iter().map(|b| rat_to_f64(&b.rad)).fold(0.0, f64::max);
    let qf = rat_to_f64(&BigRational::from_integer(qmax.clone()));
    let accelerate = alpha.len() == 1 && qf * rat_to_f64(ebound.upper()) + 2.0 * qf * qf * max_rad < 0.999;
    let candidates: Box<dyn Iterator<Item = BigInt>> = if accelerate {
        let conv = Shift::Rational(alpha[0].mid.clone()).convergents(4096);
        let mut qs: Vec<BigInt> = conv.into_iter().map(|(_, q)| q).take_while(|q| *q <= qmax).collect();
        qs.dedup();
        Box::new(qs.into_iter())
    } else {
        if qmax > BigInt::from(opts.cap) {
            return Err(Error::SearchCap(opts.cap));
        }
        let top = qmax.to_u64().unwrap_or(0);
        Box::new((1..=top).map(BigInt::from))
    };

    let mut found: Option<BirchCertificate> = None;
    for q in candidates {
        let qf = q.to_f64().unwrap_or(f64::INFINITY);
        if mids.iter().any(|&m| clearly_far(m, qf, half_bound + qf * max_rad)) {
            continue;
        }
        let Some((a, quality)) = birch_test(alpha, &q, &ebound)? else {
            continue;
        };
        match &found {
            None => {
                found = Some(BirchCertificate { q, a, theta: theta.clone(), quality });
                if !opts.check_unique {
                    break;
                }
            }
            Some(first) => {
                if gcd_all(a.iter().chain(std::iter::once(&q))).is_one() {
                    return Err(Error::NonUnique(format!(
                        "q = {} and q = {q} both satisfy the Birch bounds",
                        first.q
                    )));
                }
            }
        }
    }
    Ok(found)
}

/// Finds the least `r < P^delta` with `|r omega_j - a_j| < P^(delta - |j|)` for all `j`.
pub fn baker_search(
    omega: &BTreeMap<ExponentVector, Ball>,
    p: &BigRational,
    delta: &BigRational,
    opts: SearchOptions,
) -> Result<Option<BakerCertificate>> {
    let rbound = PowBound::new(p, delta)?;
    if rbound.approx() > 2.0 * opts.cap as f64 {
        return Err(Error::SearchCap(opts.cap));
    }
    let rmax = rbound.floor_int(true)?;
    if rmax > BigInt::from(opts.cap) {
        return Err(Error::SearchCap(opts.cap));
    }
    let mut bounds: BTreeMap<u32, PowBound> = BTreeMap::new();
    for j in omega.keys() {
        let deg = j.degree();
        if let std::collections::btree_map::Entry::Vacant(v) = bounds.entry(deg) {
            v.insert(PowBound::new(p, &(delta - BigRational::from_integer(BigInt::from(deg))))?);
        }
    }
    let fast: Vec<(f64, f64, f64)> = omega
        .iter()
        .map(|(j, b)| (rat_to_f64(&b.mid), rat_to_f64(&b.rad), bounds[&j.degree()].approx()))
        .collect();
    let mut found: Option<BakerCertificate> = None;
    // for the first hit r1: (r1, max_j |r1 omega_j - a_j|)
    let mut first_err: Option<(u64, f64)> = None;
    for r in 1..=rmax.to_u64().unwrap_or(0) {
        let rf = r as f64;
        if fast.iter().any(|&(m, rad, b)| clearly_far(m, rf, b + rf * rad)) {
            continue;
        }
        // a multiple m r1 rounds to m a1 and so shares the factor m
        if let Some((r1, err)) = first_err {
            if r % r1 == 0 {
                let m = (r / r1) as f64;
                let spread = fast.iter().map(|&(_, rad, _)| rf * rad).fold(0.0, f64::max);
                if m * err + spread < 0.4 {
                    continue;
                }
            }
        }
        let rr = BigRational::from_integer(BigInt::from(r));
        let mut a = BTreeMap::new();
        let mut ok = true;
        for (j, w) in omega {
            let scaled = w.scale(&rr);
            let aj = round_rat(&scaled.mid);
            let (lo, hi) = scaled.dist_to(&BigRational::from_integer(aj.clone()));
            if !bounds[&j.degree()].admits(&lo, &hi, true)? {
                ok = false;
                break;
            }
            a.insert(j.clone(), aj);
        }
        if !ok {
            continue;
        }
        let r = BigInt::from(r);
        match &found {
            None => {
                let r1 = r.to_u64().expect("r fits u64");
                let err = omega
                    .iter()
                    .zip(&fast)
                    .map(|((j, _), &(m, rad, _))| (r1 as f64 * m - rat_to_f64(&BigRational::from_integer(a[j].clone()))).abs() + r1 as f64 * rad)
                    .fold(0.0, f64::max);
                first_err = Some((r1, err + 1e-9));
                found = Some(BakerCertificate { r, a, delta: delta.clone() });
                if !opts.check_unique {
                    break;
                }
            }
            Some(first) => {
                if gcd_all(a.values().chain(std::iter::once(&r))).is_one() {
                    return Err(Error::NonUnique(format!(
                        "r = {} and r = {r} both satisfy the Baker bounds",
                        first.r
                    )));
                }
            }
        }
    }
    Ok(found)
}

/// Output of the slice construction at one degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SliceSpecial {
    /// Rows of `C_j` used, in canonical monomial order.
    pub rows: Vec<usize>,
    /// `D_j = det(C'_j)`.
    pub det: BigInt,
    /// `D_j (C'_j)^-1`.
    pub adj: Matrix,
    /// `a_{k,j} = D_j (C'_j)^-1 A'_j`.
    pub a: Vec<BigInt>,
}

/// Picks the first `R` independent rows of `C_j`, forms `C'_j` and returns
/// `D_j = det C'_j` with `D_j (C'_j)^-1 A'_j`, where `A'_j` holds the `a_j` on those rows.
pub fn special_from_slices(exp: &ShiftExpansion, j: u32, a_slice: &BTreeMap<ExponentVector, BigInt>) -> Result<SliceSpecial> {
    let rows = independent_rows(exp, j)?
        .ok_or_else(|| Error::Invalid(format!("degree {j} is not in the independent set")))?;
    let c = slice_matrix(exp, j)?;
    let cp: Matrix = rows.iter().map(|&t| c[t].clone()).collect();
    let (det, adj) = adjugate(&cp).ok_or(Error::Degenerate(j as usize))?;
    let mons = monomials(exp.n(), j);
    let ap: Vec<BigInt> = rows
        .iter()
        .map(|&t| a_slice.get(&mons[t]).cloned().unwrap_or_else(BigInt::zero))
        .collect();
    let a = adj
        .iter()
        .map(|row| row.iter().zip(&ap).fold(BigInt::zero(), |s, (x, y)| s + x * y))
        .collect();
    Ok(SliceSpecial { rows, det, adj, a })
}

fn normalize(det: BigInt, a: Vec<BigInt>) -> (BigInt, Vec<BigInt>) {
    let (det, a) = if det.is_negative() { (-det, a.into_iter().map(|x| -x).collect()) } else { (det, a) };
    let g = gcd_all(a.iter().chain(std::iter::once(&det)));
    if g.is_one() || g.is_zero() {
        return (det, a);
    }
    (&det / &g, a.into_iter().map(|x| x / &g).collect())
}

/// `(D, E, a1, a2)` from the degree `d` and `d-1` slices of a Baker certificate,
/// normalised to `D, E > 0` and `gcd(D, a1) = gcd(E, a2) = 1`.
pub fn special_certificate(exp: &ShiftExpansion, baker: &BakerCertificate) -> Result<SpecialCertificate> {
    let top = special_from_slices(exp, exp.d(), &baker.a)?;
    let sub = special_from_slices(exp, exp.d() - 1, &baker.a)?;
    let (d, a1) = normalize(top.det, top.a);
    let (e, a2) = normalize(sub.det, sub.a);
    Ok(SpecialCertificate { d, e, a1, a2 })
}

/// The three certificates attached to one `alpha`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Certificates {
    pub birch: BirchCertificate,
    pub baker: BakerCertificate,
    pub special: SpecialCertificate,
}

impl Certificates {
    /// `q = r = D = E = 1` with all numerators zero.
    pub fn unit(r: usize) -> Self {
        let zero = vec![BigInt::zero(); r];
        Certificates {
            birch: BirchCertificate { q: BigInt::one(), a: zero.clone(), theta: BigRational::one(), quality: BigRational::zero() },
            baker: BakerCertificate { r: BigInt::one(), a: BTreeMap::new(), delta: BigRational::one() },
            special: SpecialCertificate { d: BigInt::one(), e: BigInt::one(), a1: zero.clone(), a2: zero },
        }
    }

    pub fn check(&self, exp: &ShiftExpansion) -> IdentityReport {
        identity_checks(exp, &self.birch, &self.baker, &self.special)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityReport {
    pub equality1: bool,
    pub q_divides_dr: bool,
    pub equality2: bool,
    pub failures: Vec<String>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.equality1 && self.q_divides_dr && self.equality2
    }
}

/// Checks `(Dr)^-1 a1 = q^-1 a`, `q | Dr` and `r^-1 a_j = q^-1 sum_k d_{k,j} a_k` for `|j| = d`.
pub fn identity_checks(
    exp: &ShiftExpansion,
    birch: &BirchCertificate,
    baker: &BakerCertificate,
    special: &SpecialCertificate,
) -> IdentityReport {
    let mut failures = Vec::new();
    let dr = &special.d * &baker.r;
    let mut equality1 = birch.a.len() == special.a1.len();
    for (k, (a1, a)) in special.a1.iter().zip(&birch.a).enumerate() {
        if a1 * &birch.q != a * &dr {
            equality1 = false;
            failures.push(format!("equality1 fails at k = {}", k + 1));
        }
    }
    let q_divides_dr = !birch.q.is_zero() && dr.is_multiple_of(&birch.q);
    if !q_divides_dr {
        failures.push(format!("q = {} does not divide Dr = {dr}", birch.q));
    }
    let mut equality2 = true;
    for j in monomials(exp.n(), exp.d()) {
        let aj = baker.a.get(&j).cloned().unwrap_or_else(BigInt::zero);
        let s = (0..exp.r()).fold(BigInt::zero(), |s, k| s + exp.coeff(k, &j) * &birch.a[k]);
        if aj * &birch.q != &baker.r * s {
            equality2 = false;
            failures.push(format!("equality2 fails at j = {:?}", j.0));
        }
    }
    IdentityReport { equality1, q_divides_dr, equality2, failures }
}

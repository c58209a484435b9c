//! Sparse homogeneous forms with exact integer coefficients, the Taylor table
//! of `f_k(x + mu*1)`, degree slices and the hypothesis report.

use crate::error::{Error, Result};
use crate::exact::{binomial, first_independent_rows, rank, rank_rational, Matrix};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A multi-index `j`. Ordered by degree, then descending graded
/// reverse-lexicographic order within a degree (`x1^2, x1 x2, x2^2`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExponentVector(pub Vec<u32>);

impl ExponentVector {
    pub fn new(exps: Vec<u32>) -> Self {
        ExponentVector(exps)
    }

    pub fn zero(n: usize) -> Self {
        ExponentVector(vec![0; n])
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Componentwise `self <= other`.
    pub fn divides(&self, other: &ExponentVector) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// `prod_s C(i_s, j_s)` for `j = self <= i`.
    pub fn binomial_from(&self, i: &ExponentVector) -> BigInt {
        self.0
            .iter()
            .zip(&i.0)
            .fold(BigInt::one(), |acc, (&j, &i)| acc * binomial(i as u64, j as u64))
    }

    /// `x^j` over the rationals.
    pub fn eval(&self, x: &[BigRational]) -> BigRational {
        self.0
            .iter()
            .zip(x)
            .fold(BigRational::one(), |acc, (&e, xi)| acc * num_traits::pow(xi.clone(), e as usize))
    }

    pub fn eval_i128(&self, x: &[i64]) -> Option<i128> {
        let mut acc: i128 = 1;
        for (&e, &xi) in self.0.iter().zip(x) {
            acc = acc.checked_mul((xi as i128).checked_pow(e)?)?;
        }
        Some(acc)
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .fold(1.0, |acc, (&e, &xi)| acc * xi.powi(e as i32))
    }
}

impl Ord for ExponentVector {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            o => return o,
        }
        for (a, b) in self.0.iter().zip(&other.0).rev() {
            if a != b {
                return a.cmp(b);
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

impl PartialOrd for ExponentVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All exponent vectors of total degree `j` in `n` variables, in canonical order.
pub fn monomials(n: usize, j: u32) -> Vec<ExponentVector> {
    fn rec(n: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<ExponentVector>) {
        if cur.len() + 1 == n {
            cur.push(left);
            out.push(ExponentVector(cur.clone()));
            cur.pop();
            return;
        }
        for e in 0..=left {
            cur.push(e);
            rec(n, left - e, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    rec(n, j, &mut Vec::with_capacity(n), &mut out);
    out.sort();
    out
}

fn fmt_terms<C: fmt::Display + Signed>(
    f: &mut fmt::Formatter<'_>,
    terms: &BTreeMap<ExponentVector, C>,
) -> fmt::Result {
    if terms.is_empty() {
        return write!(f, "0");
    }
    let mut order: Vec<(&ExponentVector, &C)> = terms.iter().collect();
    order.sort_by_key(|(e, _)| std::cmp::Reverse(e.degree()));
    for (idx, (e, c)) in order.into_iter().enumerate() {
        let neg = c.is_negative();
        let mag = c.abs();
        match (idx, neg) {
            (0, true) => write!(f, "-")?,
            (0, false) => {}
            (_, true) => write!(f, " - ")?,
            (_, false) => write!(f, " + ")?,
        }
        let vars: Vec<String> = e
            .0
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0)
            .map(|(i, &p)| if p == 1 { format!("x{}", i + 1) } else { format!("x{}^{}", i + 1, p) })
            .collect();
        if vars.is_empty() {
            write!(f, "{mag}")?;
        } else if mag.is_one() {
            write!(f, "{}", vars.join("*"))?;
        } else {
            write!(f, "{mag}*{}", vars.join("*"))?;
        }
    }
    Ok(())
}

/// A homogeneous form of degree `d` in `n` variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Form {
    n: usize,
    d: u32,
    terms: BTreeMap<ExponentVector, BigInt>,
}

impl Form {
    /// Builds a form, merging repeated monomials and dropping zero coefficients.
    pub fn new(n: usize, d: u32, terms: impl IntoIterator<Item = (Vec<u32>, BigInt)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("a form needs n >= 1".into()));
        }
        let mut map: BTreeMap<ExponentVector, BigInt> = BTreeMap::new();
        for (e, c) in terms {
            if e.len() != n {
                return Err(Error::Dimension { expected: n, got: e.len() });
            }
            let ev = ExponentVector(e);
            if ev.degree() != d {
                return Err(Error::Invalid(format!(
                    "monomial {:?} has degree {} but the form has degree {d}",
                    ev.0,
                    ev.degree()
                )));
            }
            *map.entry(ev).or_insert_with(BigInt::zero) += c;
        }
        map.retain(|_, c| !c.is_zero());
        Ok(Form { n, d, terms: map })
    }

    pub fn from_i64(n: usize, d: u32, terms: &[(&[u32], i64)]) -> Result<Self> {
        Self::new(n, d, terms.iter().map(|(e, c)| (e.to_vec(), BigInt::from(*c))))
    }

    /// `sum_i c_i x_i^d`.
    pub fn diagonal(d: u32, coeffs: &[i64]) -> Self {
        let n = coeffs.len();
        let terms = coeffs.iter().enumerate().map(|(i, &c)| {
            let mut e = vec![0; n];
            e[i] = d;
            (e, BigInt::from(c))
        });
        Self::new(n, d, terms).expect("well formed diagonal form")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn terms(&self) -> &BTreeMap<ExponentVector, BigInt> {
        &self.terms
    }

    pub fn coeff(&self, e: &ExponentVector) -> BigInt {
        self.terms.get(e).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Every term involves a single variable.
    pub fn is_diagonal(&self) -> bool {
        self.terms.keys().all(|e| e.0.iter().filter(|&&p| p > 0).count() <= 1)
    }

    /// Coefficient of `x_i^d`, for diagonal forms.
    pub fn diagonal_coeffs(&self) -> Option<Vec<BigInt>> {
        if !self.is_diagonal() {
            return None;
        }
        let mut out = vec![BigInt::zero(); self.n];
        for (e, c) in &self.terms {
            if let Some(i) = e.0.iter().position(|&p| p > 0) {
                out[i] = c.clone();
            }
        }
        Some(out)
    }

    pub fn eval(&self, x: &[BigRational]) -> Result<BigRational> {
        if x.len() != self.n {
            return Err(Error::Dimension { expected: self.n, got: x.len() });
        }
        Ok(self.terms.iter().fold(BigRational::zero(), |acc, (e, c)| {
            acc + BigRational::from_integer(c.clone()) * e.eval(x)
        }))
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c.to_f64().unwrap_or(f64::NAN) * e.eval_f64(x))
            .sum()
    }

    /// Exact value at an integer point, `None` on `i128` overflow.
    pub fn eval_i128(&self, x: &[i64]) -> Option<i128> {
        let mut acc: i128 = 0;
        for (e, c) in &self.terms {
            acc = acc.checked_add(c.to_i128()?.checked_mul(e.eval_i128(x)?)?)?;
        }
        Some(acc)
    }

    /// Coefficients as machine integers.
    pub fn i128_terms(&self) -> Result<Vec<(Vec<u32>, i128)>> {
        self.terms
            .iter()
            .map(|(e, c)| {
                c.to_i128()
                    .map(|v| (e.0.clone(), v))
                    .ok_or_else(|| Error::Budget(format!("coefficient {c} exceeds i128")))
            })
            .collect()
    }

    pub fn content(&self) -> BigInt {
        self.terms.values().fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    pub fn scale(&self, m: &BigInt) -> Form {
        let terms = self.terms.iter().map(|(e, c)| (e.0.clone(), c * m));
        Form::new(self.n, self.d, terms).expect("scaling preserves shape")
    }

    pub fn max_abs_coeff(&self) -> BigInt {
        self.terms.values().map(|c| c.abs()).max().unwrap_or_else(BigInt::zero)
    }

    pub fn to_polynomial(&self) -> Polynomial {
        Polynomial {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), BigRational::from_integer(c.clone())))
                .collect(),
        }
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_terms(f, &self.terms)
    }
}

/// A polynomial of mixed degree with rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Polynomial {
    pub n: usize,
    pub terms: BTreeMap<ExponentVector, BigRational>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Polynomial { n, terms: BTreeMap::new() }
    }

    pub fn add_term(&mut self, e: ExponentVector, c: BigRational) {
        let slot = self.terms.entry(e.clone()).or_insert_with(BigRational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn derivative(&self, i: usize) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        for (e, c) in &self.terms {
            let p = e.0[i];
            if p == 0 {
                continue;
            }
            let mut ne = e.clone();
            ne.0[i] -= 1;
            out.add_term(ne, c * BigRational::from_integer(BigInt::from(p)));
        }
        out
    }

    pub fn eval(&self, x: &[BigRational]) -> BigRational {
        self.terms
            .iter()
            .fold(BigRational::zero(), |acc, (e, c)| acc + c * e.eval(x))
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| crate::exact::rat_to_f64(c) * e.eval_f64(x))
            .sum()
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_terms(f, &self.terms)
    }
}

pub fn eval_form(f: &Form, x: &[BigRational]) -> Result<BigRational> {
    f.eval(x)
}

/// `(df/dx_1, ..., df/dx_n)` with exact coefficients.
pub fn gradient(f: &Form) -> Vec<Polynomial> {
    let p = f.to_polynomial();
    (0..f.n).map(|i| p.derivative(i)).collect()
}

/// A system `(f_1, ..., f_R)` sharing `n` and `d`, with the user's `sigma`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormSystem {
    forms: Vec<Form>,
    sigma: u64,
    rescaled: bool,
}

#[derive(Deserialize)]
struct TermDoc {
    coeff: String,
    exps: Vec<u32>,
}

#[derive(Deserialize)]
struct SystemDoc {
    n: usize,
    d: u32,
    forms: Vec<Vec<TermDoc>>,
    #[serde(default)]
    sigma: u64,
}

impl FormSystem {
    pub fn new(forms: Vec<Form>, sigma: u64) -> Result<Self> {
        let first = forms
            .first()
            .ok_or_else(|| Error::Invalid("a system needs at least one form".into()))?;
        let (n, d) = (first.n, first.d);
        if d < 2 {
            return Err(Error::Invalid(format!("degree must be at least 2, got {d}")));
        }
        for (k, f) in forms.iter().enumerate() {
            if f.n != n || f.d != d {
                return Err(Error::Invalid(format!(
                    "form {} has (n, d) = ({}, {}), expected ({n}, {d})",
                    k + 1,
                    f.n,
                    f.d
                )));
            }
        }
        if sigma > n as u64 {
            return Err(Error::Invalid(format!("sigma = {sigma} exceeds n = {n}")));
        }
        Ok(FormSystem { forms, sigma, rescaled: false })
    }

    /// A single-form system of any degree, for exercising samplers on
    /// linear test integrands. Certificate machinery expects `d >= 2`.
    pub fn new_unchecked(forms: Vec<Form>) -> Self {
        FormSystem { forms, sigma: 0, rescaled: false }
    }

    /// Parses the structured form document `{n, d, forms, sigma}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SystemDoc = serde_json::from_str(text)
            .map_err(|e| Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        let mut forms = Vec::with_capacity(doc.forms.len());
        for (k, terms) in doc.forms.iter().enumerate() {
            let mut parsed = Vec::with_capacity(terms.len());
            for (t, term) in terms.iter().enumerate() {
                let loc = format!("forms[{k}][{t}]");
                let c = term
                    .coeff
                    .trim()
                    .parse::<BigInt>()
                    .map_err(|_| Error::parse(format!("{loc}.coeff"), format!("not an integer: {:?}", term.coeff)))?;
                if term.exps.len() != doc.n {
                    return Err(Error::parse(
                        format!("{loc}.exps"),
                        format!("expected {} exponents, got {}", doc.n, term.exps.len()),
                    ));
                }
                let deg: u32 = term.exps.iter().sum();
                if deg != doc.d {
                    return Err(Error::parse(format!("{loc}.exps"), format!("degree {deg} differs from d = {}", doc.d)));
                }
                parsed.push((term.exps.clone(), c));
            }
            forms.push(Form::new(doc.n, doc.d, parsed).map_err(|e| Error::parse(format!("forms[{k}]"), e.to_string()))?);
        }
        Self::new(forms, doc.sigma).map_err(|e| Error::parse("system", e.to_string()))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let forms: Vec<Vec<serde_json::Value>> = self
            .forms
            .iter()
            .map(|f| {
                f.terms
                    .iter()
                    .map(|(e, c)| serde_json::json!({"coeff": c.to_string(), "exps": e.0}))
                    .collect()
            })
            .collect();
        serde_json::json!({"n": self.n(), "d": self.d(), "forms": forms, "sigma": self.sigma})
    }

    pub fn forms(&self) -> &[Form] {
        &self.forms
    }

    pub fn n(&self) -> usize {
        self.forms[0].n
    }

    pub fn d(&self) -> u32 {
        self.forms[0].d
    }

    pub fn r(&self) -> usize {
        self.forms.len()
    }

    pub fn sigma(&self) -> u64 {
        self.sigma
    }

    pub fn rescaled(&self) -> bool {
        self.rescaled
    }

    /// `kappa = (n - sigma) / (R (d-1) 2^(d-1))`.
    pub fn kappa(&self) -> BigRational {
        let den = BigInt::from(self.r() as u64 * (self.d() as u64 - 1)) << (self.d() as usize - 1);
        BigRational::new(BigInt::from(self.n() as u64 - self.sigma), den)
    }

    pub fn is_diagonal(&self) -> bool {
        self.forms.iter().all(Form::is_diagonal)
    }

    /// Values `f_k(x)` at a real point.
    pub fn eval_f64(&self, x: &[f64]) -> Vec<f64> {
        self.forms.iter().map(|f| f.eval_f64(x)).collect()
    }
}

fn factorial(d: u32) -> BigInt {
    (1..=d as u64).fold(BigInt::one(), |a, i| a * i)
}

/// Multiplies each form by the least integer making all its coefficients
/// multiples of `d!`. Callers must scale `tau` and `eta` by the same factors.
pub fn rescale_to_dfactorial(sys: &FormSystem) -> (FormSystem, Vec<BigInt>) {
    let df = factorial(sys.d());
    let mut mults = Vec::with_capacity(sys.r());
    let forms = sys
        .forms
        .iter()
        .map(|f| {
            let g = f.content().gcd(&df);
            let m = if g.is_zero() { BigInt::one() } else { &df / g };
            let out = f.scale(&m);
            mults.push(m);
            out
        })
        .collect();
    (
        FormSystem { forms, sigma: sys.sigma, rescaled: true },
        mults,
    )
}

/// The table `d_{k,j} = sum_{i >= j} c_i C(i, j)` for `1 <= |j| <= d`, i.e. the
/// coefficients of `f_k(x + mu*1) = sum_j mu^(d-|j|) d_{k,j} x^j + mu^d f_k(1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShiftExpansion {
    n: usize,
    d: u32,
    coeffs: Vec<BTreeMap<ExponentVector, BigInt>>,
    constants: Vec<BigInt>,
}

pub fn taylor_shift(sys: &FormSystem) -> ShiftExpansion {
    let (n, d) = (sys.n(), sys.d());
    let mut coeffs = Vec::with_capacity(sys.r());
    let mut constants = Vec::with_capacity(sys.r());
    for f in &sys.forms {
        let mut table: BTreeMap<ExponentVector, BigInt> = BTreeMap::new();
        let mut constant = BigInt::zero();
        for (i, c) in &f.terms {
            constant += c;
            // every j <= i componentwise
            let mut j = vec![0u32; n];
            loop {
                let jv = ExponentVector(j.clone());
                if jv.degree() > 0 {
                    *table.entry(jv.clone()).or_insert_with(BigInt::zero) += c * jv.binomial_from(i);
                }
                let mut s = 0;
                while s < n {
                    if j[s] < i.0[s] {
                        j[s] += 1;
                        break;
                    }
                    j[s] = 0;
                    s += 1;
                }
                if s == n {
                    break;
                }
            }
        }
        table.retain(|_, v| !v.is_zero());
        coeffs.push(table);
        constants.push(constant);
    }
    ShiftExpansion { n, d, coeffs, constants }
}

impl ShiftExpansion {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn r(&self) -> usize {
        self.coeffs.len()
    }

    /// `d_{k,j}` (0-based `k`), zero when absent.
    pub fn coeff(&self, k: usize, j: &ExponentVector) -> BigInt {
        self.coeffs[k].get(j).cloned().unwrap_or_else(BigInt::zero)
    }

    /// Nonzero entries of form `k`.
    pub fn entries(&self, k: usize) -> &BTreeMap<ExponentVector, BigInt> {
        &self.coeffs[k]
    }

    /// The power of `mu` carried by `d_{k,j}`.
    pub fn mu_power(&self, j: &ExponentVector) -> u32 {
        self.d - j.degree()
    }

    /// `f_k(1, ..., 1)`, the coefficient of `mu^d`.
    pub fn constant(&self, k: usize) -> &BigInt {
        &self.constants[k]
    }

    /// All exponent vectors with `1 <= |j| <= d`, in canonical order.
    pub fn index(&self) -> Vec<ExponentVector> {
        (1..=self.d).flat_map(|j| monomials(self.n, j)).collect()
    }

    /// `f_k(x + mu*1)` rebuilt from the table at rational `mu`, `x`.
    pub fn reconstruct(&self, k: usize, mu: &BigRational, x: &[BigRational]) -> BigRational {
        let mut acc = BigRational::from_integer(self.constants[k].clone()) * num_traits::pow(mu.clone(), self.d as usize);
        for (j, c) in &self.coeffs[k] {
            acc += BigRational::from_integer(c.clone())
                * num_traits::pow(mu.clone(), self.mu_power(j) as usize)
                * j.eval(x);
        }
        acc
    }
}

/// The degree-`j` part `F_{k,j}` of the table, as a form (`k` 0-based).
pub fn slice(exp: &ShiftExpansion, k: usize, j: u32) -> Result<Form> {
    if k >= exp.r() {
        return Err(Error::Index(format!("form index {} out of 1..={}", k + 1, exp.r())));
    }
    if j == 0 || j > exp.d {
        return Err(Error::Index(format!("slice degree {j} out of 1..={}", exp.d)));
    }
    let terms = exp.coeffs[k]
        .iter()
        .filter(|(e, _)| e.degree() == j)
        .map(|(e, c)| (e.0.clone(), c.clone()));
    Form::new(exp.n, j, terms)
}

/// `C_j`: row `t` is monomial `j_{t,j}` in canonical order, column `k` is form `k`.
pub fn slice_matrix(exp: &ShiftExpansion, j: u32) -> Result<Matrix> {
    if j == 0 || j > exp.d {
        return Err(Error::Index(format!("slice degree {j} out of 1..={}", exp.d)));
    }
    Ok(monomials(exp.n, j)
        .iter()
        .map(|e| (0..exp.r()).map(|k| exp.coeff(k, e)).collect())
        .collect())
}

/// Degrees `j` at which `F_{1,j}, ..., F_{R,j}` are linearly independent.
pub fn independent_degrees(exp: &ShiftExpansion) -> BTreeSet<u32> {
    (1..=exp.d)
        .filter(|&j| rank(&slice_matrix(exp, j).expect("valid degree")) == exp.r())
        .collect()
}

/// First `R` independent rows of `C_j`, in row order.
pub fn independent_rows(exp: &ShiftExpansion, j: u32) -> Result<Option<Vec<usize>>> {
    Ok(first_independent_rows(&slice_matrix(exp, j)?, exp.r()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SigmaProbe {
    pub points: usize,
    pub height: u64,
    /// `rank_histogram[r]` = number of points whose Jacobian has rank `r`.
    pub rank_histogram: Vec<usize>,
    pub max_deficiency: usize,
    /// Every sampled point was singular, so the singular locus is likely all of
    /// space and `sigma` should be `n`.
    pub singular_everywhere: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HypothesisReport {
    pub n: usize,
    pub d: u32,
    pub r: usize,
    pub sigma: u64,
    pub kappa: String,
    pub numvars_ok: bool,
    pub numvars_threshold: String,
    pub slice_independent_degrees: Vec<u32>,
    pub top_slice_ok: bool,
    pub gradient_slice_ok: bool,
    pub kappa_exceeds_r_plus_1: bool,
    pub sigma_probe: SigmaProbe,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.numvars_ok && self.top_slice_ok && self.gradient_slice_ok && self.kappa_exceeds_r_plus_1
    }

    /// Names of the failing conditions.
    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.numvars_ok {
            out.push("numvars");
        }
        if !self.kappa_exceeds_r_plus_1 {
            out.push("kappa");
        }
        if !self.top_slice_ok {
            out.push("top-slice");
        }
        if !self.gradient_slice_ok {
            out.push("gradient-slice");
        }
        out
    }
}

/// `n > sigma + R(R+1)(d-1)2^(d-1)` in exact integers.
pub fn numvars_ok(n: u64, sigma: u64, r: u64, d: u32) -> bool {
    BigInt::from(n) > numvars_threshold(sigma, r, d)
}

fn numvars_threshold(sigma: u64, r: u64, d: u32) -> BigInt {
    BigInt::from(sigma) + (BigInt::from(r * (r + 1) * (d as u64 - 1)) << (d as usize - 1))
}

/// Samples rational points and records the exact rank of `(grad f_k)`.
pub fn sigma_probe(sys: &FormSystem, points: usize, height: u64, seed: u64) -> SigmaProbe {
    let grads: Vec<Vec<Polynomial>> = sys.forms.iter().map(gradient).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = height as i64;
    let mut hist = vec![0usize; sys.r() + 1];
    for _ in 0..points {
        let x: Vec<BigRational> = (0..sys.n())
            .map(|_| BigRational::new(BigInt::from(rng.gen_range(-h..=h)), BigInt::from(rng.gen_range(1..=h))))
            .collect();
        let jac: Vec<Vec<BigRational>> = grads.iter().map(|g| g.iter().map(|p| p.eval(&x)).collect()).collect();
        hist[rank_rational(jac)] += 1;
    }
    let min_rank = hist.iter().position(|&c| c > 0).unwrap_or(sys.r());
    SigmaProbe {
        points,
        height,
        max_deficiency: sys.r() - min_rank,
        singular_everywhere: points > 0 && hist[sys.r()] == 0,
        rank_histogram: hist,
    }
}

pub const SIGMA_PROBE_POINTS: usize = 200;
pub const SIGMA_PROBE_HEIGHT: u64 = 10_000;

pub fn check_hypotheses(sys: &FormSystem, seed: u64) -> HypothesisReport {
    let exp = taylor_shift(sys);
    let s = independent_degrees(&exp);
    let (n, d, r) = (sys.n(), sys.d(), sys.r());
    let kappa = sys.kappa();
    let nd1 = crate::vandermonde::monomial_count(n, d - 1);
    HypothesisReport {
        n,
        d,
        r,
        sigma: sys.sigma,
        kappa: kappa.to_string(),
        numvars_ok: numvars_ok(n as u64, sys.sigma, r as u64, d),
        numvars_threshold: numvars_threshold(sys.sigma, r as u64, d).to_string(),
        top_slice_ok: s.contains(&d),
        gradient_slice_ok: s.contains(&(d - 1)) && BigInt::from(r) <= nd1,
        kappa_exceeds_r_plus_1: kappa > BigRational::from_integer(BigInt::from(r as u64 + 1)),
        slice_independent_degrees: s.into_iter().collect(),
        sigma_probe: sigma_probe(sys, SIGMA_PROBE_POINTS, SIGMA_PROBE_HEIGHT, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use proptest::prelude::*;
    use rand::Rng;

    pub(crate) fn quad5() -> FormSystem {
        FormSystem::new(vec![Form::diagonal(2, &[1, 1, -1, -1, -1])], 0).unwrap()
    }

    fn ri(v: &[i64]) -> Vec<BigRational> {
        v.iter().map(|&x| rat(x, 1)).collect()
    }

    #[test]
    fn ordering_is_degree_then_grevlex() {
        let m = monomials(2, 2);
        assert_eq!(m, vec![ExponentVector(vec![2, 0]), ExponentVector(vec![1, 1]), ExponentVector(vec![0, 2])]);
        let m3 = monomials(3, 2);
        assert_eq!(m3.len(), 6);
        assert_eq!(m3[0].0, vec![2, 0, 0]);
        assert_eq!(m3[1].0, vec![1, 1, 0]);
        assert_eq!(m3[2].0, vec![0, 2, 0]);
        assert_eq!(m3[3].0, vec![1, 0, 1]);
        assert!(ExponentVector(vec![0, 1]) < ExponentVector(vec![2, 0]));
    }

    #[test]
    fn evaluation_examples() {
        let sq = Form::from_i64(1, 2, &[(&[2], 1)]).unwrap();
        assert_eq!(sq.eval(&ri(&[3])).unwrap(), rat(9, 1));
        let xy = Form::from_i64(2, 2, &[(&[1, 1], 1)]).unwrap();
        assert_eq!(xy.eval(&ri(&[2, 5])).unwrap(), rat(10, 1));
        let sys = quad5();
        let q = &sys.forms()[0];
        assert_eq!(q.eval(&ri(&[1, 1, 1, 1, 1])).unwrap(), rat(-1, 1));
        assert!(matches!(q.eval(&ri(&[1])), Err(Error::Dimension { .. })));
        assert_eq!(q.eval_i128(&[1, 2, 0, 0, 1]), Some(4));
    }

    #[test]
    fn gradients() {
        let sq = Form::from_i64(1, 2, &[(&[2], 1)]).unwrap();
        assert_eq!(gradient(&sq)[0].to_string(), "2*x1");
        let xy = Form::from_i64(2, 2, &[(&[1, 1], 1)]).unwrap();
        let g = gradient(&xy);
        assert_eq!((g[0].to_string(), g[1].to_string()), ("x2".into(), "x1".into()));
        let cube = Form::from_i64(1, 3, &[(&[3], 1)]).unwrap();
        assert_eq!(gradient(&cube)[0].to_string(), "3*x1^2");
    }

    #[test]
    fn rescaling() {
        let s = FormSystem::new(vec![Form::from_i64(1, 2, &[(&[2], 1)]).unwrap()], 0).unwrap();
        let (r, m) = rescale_to_dfactorial(&s);
        assert_eq!(m, vec![BigInt::from(2)]);
        assert_eq!(r.forms()[0].to_string(), "2*x1^2");
        assert!(r.rescaled());
        let s = FormSystem::new(vec![Form::from_i64(1, 2, &[(&[2], 2)]).unwrap()], 0).unwrap();
        assert_eq!(rescale_to_dfactorial(&s).1, vec![BigInt::one()]);
        let s = FormSystem::new(vec![Form::diagonal(3, &[1, 1])], 0).unwrap();
        let (r, m) = rescale_to_dfactorial(&s);
        assert_eq!(m, vec![BigInt::from(6)]);
        assert_eq!(r.forms()[0].to_string(), "6*x1^3 + 6*x2^3");
    }

    #[test]
    fn taylor_examples() {
        let sq = FormSystem::new(vec![Form::from_i64(1, 2, &[(&[2], 1)]).unwrap()], 0).unwrap();
        let e = taylor_shift(&sq);
        assert_eq!(e.coeff(0, &ExponentVector(vec![1])), BigInt::from(2));
        assert_eq!(e.coeff(0, &ExponentVector(vec![2])), BigInt::from(1));
        assert_eq!(e.constant(0), &BigInt::one());
        let xy = FormSystem::new(vec![Form::from_i64(2, 2, &[(&[1, 1], 1)]).unwrap()], 0).unwrap();
        let e = taylor_shift(&xy);
        for j in [[1, 0], [0, 1], [1, 1]] {
            assert_eq!(e.coeff(0, &ExponentVector(j.to_vec())), BigInt::one());
        }
        assert_eq!(e.mu_power(&ExponentVector(vec![1, 0])), 1);
    }

    #[test]
    fn slice_examples() {
        let e = taylor_shift(&quad5());
        assert_eq!(slice(&e, 0, 1).unwrap().to_string(), "2*x1 + 2*x2 - 2*x3 - 2*x4 - 2*x5");
        let xy = FormSystem::new(vec![Form::from_i64(2, 2, &[(&[1, 1], 1)]).unwrap()], 0).unwrap();
        assert_eq!(slice(&taylor_shift(&xy), 0, 2).unwrap(), xy.forms()[0]);
        let cube = FormSystem::new(vec![Form::from_i64(1, 3, &[(&[3], 1)]).unwrap()], 0).unwrap();
        assert_eq!(slice(&taylor_shift(&cube), 0, 2).unwrap().to_string(), "3*x1^2");
        assert!(slice(&e, 1, 1).is_err());
        assert!(slice(&e, 0, 3).is_err());
    }

    #[test]
    fn slice_matrix_examples() {
        let s = FormSystem::new(vec![Form::diagonal(2, &[1, 1])], 0).unwrap();
        let c = slice_matrix(&taylor_shift(&s), 2).unwrap();
        let col: Vec<BigInt> = c.iter().map(|r| r[0].clone()).collect();
        assert_eq!(col, vec![BigInt::one(), BigInt::zero(), BigInt::one()]);
        let xy = FormSystem::new(vec![Form::from_i64(2, 2, &[(&[1, 1], 1)]).unwrap()], 0).unwrap();
        let c = slice_matrix(&taylor_shift(&xy), 1).unwrap();
        assert_eq!(c, vec![vec![BigInt::one()], vec![BigInt::one()]]);
        let two = FormSystem::new(
            vec![Form::from_i64(2, 2, &[(&[2, 0], 1)]).unwrap(), Form::from_i64(2, 2, &[(&[0, 2], 1)]).unwrap()],
            0,
        )
        .unwrap();
        assert_eq!(rank(&slice_matrix(&taylor_shift(&two), 2).unwrap()), 2);
    }

    #[test]
    fn independent_degree_examples() {
        let e = taylor_shift(&quad5());
        assert_eq!(independent_degrees(&e), BTreeSet::from([1, 2]));
        // (x1 - x2)^3 + (x3 - x4)^3 has vanishing degree-2 slice
        let cubes = Form::from_i64(
            4,
            3,
            &[
                (&[3, 0, 0, 0], 1),
                (&[2, 1, 0, 0], -3),
                (&[1, 2, 0, 0], 3),
                (&[0, 3, 0, 0], -1),
                (&[0, 0, 3, 0], 1),
                (&[0, 0, 2, 1], -3),
                (&[0, 0, 1, 2], 3),
                (&[0, 0, 0, 3], -1),
            ],
        )
        .unwrap();
        let sys = FormSystem::new(vec![cubes], 0).unwrap();
        let e = taylor_shift(&sys);
        assert!(slice(&e, 0, 2).unwrap().is_zero());
        let s = independent_degrees(&e);
        assert!(!s.contains(&2) && s.contains(&3));
    }

    #[test]
    fn hypothesis_examples() {
        let rep = check_hypotheses(&quad5(), 1);
        assert!(rep.numvars_ok && rep.gradient_slice_ok && rep.kappa_exceeds_r_plus_1 && rep.passed());
        assert_eq!(rep.slice_independent_degrees, vec![1, 2]);
        assert_eq!(rep.kappa, "5/2");
        assert_eq!(rep.sigma_probe.points, 200);
        assert!(!rep.sigma_probe.singular_everywhere);
        let four = FormSystem::new(vec![Form::diagonal(2, &[1, 1, -1, -1])], 0).unwrap();
        let rep = check_hypotheses(&four, 1);
        assert!(!rep.numvars_ok);
        assert_eq!(rep.failures(), vec!["numvars", "kappa"]);
    }

    #[test]
    fn probe_detects_everywhere_singular() {
        // x1^2 and 2 x1^2 have parallel gradients everywhere
        let sys = FormSystem::new(vec![Form::diagonal(2, &[1, 0, 0]), Form::diagonal(2, &[2, 0, 0])], 0).unwrap();
        let p = sigma_probe(&sys, 20, 100, 3);
        assert!(p.singular_everywhere);
        assert_eq!(p.max_deficiency, 1);
    }

    #[test]
    fn json_round_trip_and_errors() {
        let text = r#"{"n":2,"d":2,"forms":[[{"coeff":"1","exps":[2,0]},{"coeff":"-1","exps":[0,2]}]],"sigma":0}"#;
        let sys = FormSystem::from_json(text).unwrap();
        assert_eq!(sys.forms()[0].to_string(), "x1^2 - x2^2");
        let back = FormSystem::from_json(&sys.to_json().to_string()).unwrap();
        assert_eq!(back, sys);
        let bad = r#"{"n":2,"d":2,"forms":[[{"coeff":"x","exps":[2,0]}]]}"#;
        match FormSystem::from_json(bad) {
            Err(Error::Parse { location, .. }) => assert_eq!(location, "forms[0][0].coeff"),
            other => panic!("{other:?}"),
        }
        let bad = r#"{"n":2,"d":2,"forms":[[{"coeff":"1","exps":[2,1]}]]}"#;
        assert!(matches!(FormSystem::from_json(bad), Err(Error::Parse { .. })));
        assert!(matches!(FormSystem::from_json("{"), Err(Error::Parse { .. })));
    }

    fn arb_form(n: usize, d: u32) -> impl Strategy<Value = Form> {
        let mons = monomials(n, d);
        proptest::collection::vec(-9i64..=9, mons.len()).prop_map(move |cs| {
            Form::new(n, d, mons.iter().zip(cs).map(|(m, c)| (m.0.clone(), BigInt::from(c)))).unwrap()
        })
    }

    fn arb_rat() -> impl Strategy<Value = BigRational> {
        (-50i64..=50, 1i64..=12).prop_map(|(a, b)| rat(a, b))
    }

    proptest! {
        #[test]
        fn taylor_reconstruction_is_exact(f in arb_form(3, 3), mu in arb_rat(), x in proptest::collection::vec(arb_rat(), 3)) {
            let sys = FormSystem::new(vec![f.clone()], 0).unwrap();
            let e = taylor_shift(&sys);
            let shifted: Vec<BigRational> = x.iter().map(|xi| xi + &mu).collect();
            prop_assert_eq!(e.reconstruct(0, &mu, &x), f.eval(&shifted).unwrap());
        }

        #[test]
        fn top_and_gradient_slices(f in arb_form(3, 3)) {
            prop_assume!(!f.is_zero());
            let sys = FormSystem::new(vec![f.clone()], 0).unwrap();
            let e = taylor_shift(&sys);
            prop_assert_eq!(slice(&e, 0, 3).unwrap(), f.clone());
            let sum = gradient(&f).iter().fold(Polynomial::zero(3), |a, g| a.add(g));
            prop_assert_eq!(slice(&e, 0, 2).unwrap().to_polynomial(), sum);
        }

        #[test]
        fn independent_degrees_scale_invariant(f in arb_form(2, 3), g in arb_form(2, 3), m in prop_oneof![-5i64..=-1, 1i64..=5]) {
            let sys = FormSystem::new(vec![f.clone(), g.clone()], 0).unwrap();
            let m = BigInt::from(m);
            let scaled = FormSystem::new(vec![f.scale(&m), g.scale(&m)], 0).unwrap();
            prop_assert_eq!(independent_degrees(&taylor_shift(&sys)), independent_degrees(&taylor_shift(&scaled)));
        }
    }

    #[test]
    fn numvars_matches_direct_comparison() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let (n, sigma, r, d) = (rng.gen_range(1..200u64), rng.gen_range(0..50u64), rng.gen_range(1..5u64), rng.gen_range(2..7u32));
            let direct = (n as i128) > sigma as i128 + (r * (r + 1) * (d as u64 - 1)) as i128 * (1i128 << (d - 1));
            assert_eq!(numvars_ok(n, sigma, r, d), direct);
        }
    }
}

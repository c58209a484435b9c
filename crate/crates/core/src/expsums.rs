//! Exponential sums and oscillatory integrals: `g(alpha, omega)`, `S(alpha)`,
//! `I(gamma, gamma_diamond)`, the complete sums `S_{r,D,q}`, the approximant
//! `S*(alpha)` and the decay witness `F(alpha)`.

use crate::dioph::{omega, Certificates};
use crate::error::{Error, Result};
use crate::forms::{ExponentVector, FormSystem, ShiftExpansion};
use crate::quadrature::gauss_legendre;
use crate::real::{dd, dd_from_i128, dd_from_int, dd_from_rational, e, frac, frac_mul, CSum, Dd};
use crate::shift::Shift;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

/// Default cap on lattice points visited by one sum.
pub const DEFAULT_LATTICE_BUDGET: u64 = 100_000_000;
/// Default cap on tensor quadrature nodes.
pub const DEFAULT_NODE_BUDGET: u64 = 20_000_000;
pub const DEFAULT_NODES: usize = 64;
pub const DEFAULT_MAX_DIM: usize = 6;

/// `sum_m beta_m x^m`, evaluated mod 1.
#[derive(Clone, Debug)]
struct PhasePoly {
    terms: Vec<(Vec<u32>, Dd)>,
}

impl PhasePoly {
    fn new() -> Self {
        PhasePoly { terms: Vec::new() }
    }

    fn add(&mut self, j: &ExponentVector, c: Dd) {
        if let Some(t) = self.terms.iter_mut().find(|t| t.0 == j.0) {
            t.1 += c;
        } else {
            self.terms.push((j.0.clone(), c));
        }
    }

    /// `alpha . f(x)` plus the `omega_diamond` part.
    fn weyl(sys: &FormSystem, alpha: &[Dd], omega_diamond: &BTreeMap<ExponentVector, Dd>) -> Self {
        let mut p = PhasePoly::new();
        for (f, a) in sys.forms().iter().zip(alpha) {
            for (i, c) in f.terms() {
                p.add(i, dd_from_int(c) * *a);
            }
        }
        for (j, w) in omega_diamond {
            if j.degree() >= 1 && j.degree() < sys.d() {
                p.add(j, *w);
            }
        }
        p
    }

    fn phase(&self, pows: &[Vec<i128>]) -> f64 {
        let mut s = 0.0;
        for (j, c) in &self.terms {
            let mut m: i128 = 1;
            for (i, &e) in j.iter().enumerate() {
                m *= pows[i][e as usize];
            }
            s += frac_mul(*c, m);
        }
        s
    }
}

fn check_budget(n: usize, side: u64, budget: u64) -> Result<()> {
    let total = (side as f64).powi(n as i32);
    if total > budget as f64 {
        return Err(Error::Budget(format!("{side}^{n} lattice points exceed {budget}")));
    }
    Ok(())
}

/// `sum_{|x| <= P} e(phase(x))`, split over `x_1` and reduced in ascending order.
fn box_sum<F>(n: usize, p: u64, d: u32, budget: u64, phase: F) -> Result<Complex64>
where
    F: Fn(&[i64], &[Vec<i128>]) -> f64 + Sync,
{
    check_budget(n, 2 * p + 1, budget)?;
    let p = p as i64;
    let d = d as usize;
    let partial: Vec<CSum> = (-p..=p)
        .into_par_iter()
        .map(|x1| {
            let mut x = vec![-p; n];
            x[0] = x1;
            let mut pows: Vec<Vec<i128>> = x.iter().map(|&v| powers(v, d)).collect();
            let mut acc = CSum::default();
            loop {
                acc.add(e(phase(&x, &pows)));
                let mut s = n;
                loop {
                    if s == 1 {
                        return acc;
                    }
                    s -= 1;
                    if x[s] < p {
                        x[s] += 1;
                        pows[s] = powers(x[s], d);
                        break;
                    }
                    x[s] = -p;
                    pows[s] = powers(-p, d);
                }
            }
        })
        .collect();
    let mut total = CSum::default();
    for c in &partial {
        total.merge(c);
    }
    Ok(total.value())
}

fn powers(x: i64, d: usize) -> Vec<i128> {
    let mut v = Vec::with_capacity(d + 1);
    let mut acc: i128 = 1;
    for _ in 0..=d {
        v.push(acc);
        acc = acc.saturating_mul(x as i128);
    }
    v
}

#[derive(Clone, Debug)]
pub struct WeylSumSpec<'a> {
    pub system: &'a FormSystem,
    pub p: u64,
    pub alpha: Vec<Dd>,
    /// `omega_j` for `1 <= |j| <= d-1`; missing entries are zero.
    pub omega_diamond: BTreeMap<ExponentVector, Dd>,
}

/// `g(alpha, omega) = sum_{|x| <= P} e(alpha . f(x) + sum omega_j x^j)`.
pub fn weyl_g(spec: &WeylSumSpec, budget: u64) -> Result<Complex64> {
    let sys = spec.system;
    if spec.alpha.len() != sys.r() {
        return Err(Error::Dimension { expected: sys.r(), got: spec.alpha.len() });
    }
    let poly = PhasePoly::weyl(sys, &spec.alpha, &spec.omega_diamond);
    box_sum(sys.n(), spec.p, sys.d(), budget, |_, pows| poly.phase(pows))
}

/// `alpha . f(mu 1) = mu^d sum_k alpha_k f_k(1)`.
pub fn constant_phase(exp: &ShiftExpansion, alpha: &[Dd], mu: &Shift) -> Dd {
    let m = mu.value_dd();
    let mut md = dd(1.0);
    for _ in 0..exp.d() {
        md *= m;
    }
    let mut s = dd(0.0);
    for (k, a) in alpha.iter().enumerate() {
        s += dd_from_int(exp.constant(k)) * *a;
    }
    s * md
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ShiftedSum {
    /// `sum e(alpha . f(x + mu 1))` summed directly.
    pub direct: Complex64,
    /// `e(alpha . f(mu 1)) g(alpha, omega_diamond)`.
    pub factored: Complex64,
    pub residual: f64,
}

/// `S(alpha)` by direct summation, with the factorisation through `g`.
pub fn shifted_s(
    system: &FormSystem,
    exp: &ShiftExpansion,
    mu: &Shift,
    p: u64,
    alpha: &[Dd],
    budget: u64,
) -> Result<ShiftedSum> {
    if alpha.len() != system.r() {
        return Err(Error::Dimension { expected: system.r(), got: alpha.len() });
    }
    let m = mu.value_dd();
    let d = system.d() as usize;
    let coeffs: Vec<Vec<(Vec<u32>, Dd)>> = system
        .forms()
        .iter()
        .map(|f| f.terms().iter().map(|(i, c)| (i.0.clone(), dd_from_int(c))).collect())
        .collect();
    let direct = box_sum(system.n(), p, system.d(), budget, |x, _| {
        let ys: Vec<Vec<Dd>> = x
            .iter()
            .map(|&v| {
                let y = dd(v as f64) + m;
                let mut out = vec![dd(1.0); d + 1];
                for i in 1..=d {
                    out[i] = out[i - 1] * y;
                }
                out
            })
            .collect();
        let mut s = 0.0;
        for (terms, a) in coeffs.iter().zip(alpha) {
            let mut fv = dd(0.0);
            for (i, c) in terms {
                let mut t = *c;
                for (v, &ex) in i.iter().enumerate() {
                    t *= ys[v][ex as usize];
                }
                fv += t;
            }
            s += frac(fv * *a);
        }
        s
    })?;
    let w = omega(alpha, exp, mu)?;
    let g = weyl_g(&WeylSumSpec { system, p, alpha: alpha.to_vec(), omega_diamond: w.diamond(system.d()) }, budget)?;
    let factored = e(frac(constant_phase(exp, alpha, mu))) * g;
    Ok(ShiftedSum { direct, factored, residual: (direct - factored).norm() })
}

#[derive(Clone, Copy, Debug)]
pub struct QuadratureOptions {
    /// Gauss-Legendre nodes per axis for the coarse estimate.
    pub nodes: usize,
    pub node_budget: u64,
    pub max_dim: usize,
    /// Absolute tolerance on the two-rule difference.
    pub tol: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions { nodes: DEFAULT_NODES, node_budget: DEFAULT_NODE_BUDGET, max_dim: DEFAULT_MAX_DIM, tol: 1e-8 }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct OscIntegral {
    pub value: Complex64,
    pub error: f64,
    pub nodes: usize,
}

/// Real phase polynomial in `t` for `I`.
fn osc_phase(sys: &FormSystem, gamma: &[f64], gamma_diamond: &BTreeMap<ExponentVector, f64>) -> Vec<(Vec<u32>, f64)> {
    let mut terms: BTreeMap<ExponentVector, f64> = BTreeMap::new();
    for (f, g) in sys.forms().iter().zip(gamma) {
        for (i, c) in f.terms() {
            *terms.entry(i.clone()).or_insert(0.0) += c.to_f64().unwrap_or(f64::NAN) * g;
        }
    }
    for (j, g) in gamma_diamond {
        if j.degree() >= 1 && j.degree() < sys.d() {
            *terms.entry(j.clone()).or_insert(0.0) += g;
        }
    }
    terms.into_iter().filter(|(_, v)| *v != 0.0).map(|(j, v)| (j.0, v)).collect()
}

/// Composite rule on `[-1, 1]` with `m` nodes in 16-node panels.
fn axis_rule(m: usize) -> Vec<(f64, f64)> {
    if m <= 16 {
        return gauss_legendre(m.max(2)).mapped(-1.0, 1.0).collect();
    }
    let panels = m.div_ceil(16);
    let h = 2.0 / panels as f64;
    let rule = gauss_legendre(16);
    (0..panels)
        .flat_map(|k| {
            let a = -1.0 + h * k as f64;
            rule.mapped(a, a + h).collect::<Vec<_>>()
        })
        .collect()
}

fn tensor(n: usize, terms: &[(Vec<u32>, f64)], m: usize) -> Complex64 {
    let rule = axis_rule(m);
    let d = terms.iter().flat_map(|t| t.0.iter()).copied().max().unwrap_or(0) as usize;
    let pw: Vec<Vec<f64>> = rule.iter().map(|&(t, _)| (0..=d).map(|k| t.powi(k as i32)).collect()).collect();
    let k = rule.len();
    let partial: Vec<CSum> = (0..k)
        .into_par_iter()
        .map(|i0| {
            let mut idx = vec![0usize; n];
            idx[0] = i0;
            let mut acc = CSum::default();
            loop {
                let mut ph = 0.0;
                for (j, c) in terms {
                    let mut v = *c;
                    for (ax, &ex) in j.iter().enumerate() {
                        if ex > 0 {
                            v *= pw[idx[ax]][ex as usize];
                        }
                    }
                    ph += v;
                }
                let w: f64 = idx.iter().map(|&i| rule[i].1).product();
                acc.add(e(ph) * w);
                let mut s = n;
                loop {
                    if s == 1 {
                        return acc;
                    }
                    s -= 1;
                    if idx[s] + 1 < k {
                        idx[s] += 1;
                        break;
                    }
                    idx[s] = 0;
                }
            }
        })
        .collect();
    let mut total = CSum::default();
    for c in &partial {
        total.merge(c);
    }
    total.value()
}

/// One-dimensional `int_{-1}^{1} e(sum c_k t^k) dt`, doubling nodes until two
/// successive estimates agree to `tol`.
fn axis_integral(coeffs: &[f64], start: usize, tol: f64) -> (Complex64, f64, usize) {
    let eval = |m: usize| {
        let mut acc = CSum::default();
        for (t, w) in axis_rule(m) {
            let ph = coeffs.iter().rev().fold(0.0, |s, &c| s * t + c);
            acc.add(e(ph) * w);
        }
        acc.value()
    };
    let mut m = start.max(2);
    let mut coarse = eval(m);
    loop {
        let fine = eval(2 * m);
        let err = (fine - coarse).norm();
        if err <= tol || m >= 1 << 16 {
            return (fine, err, 2 * m);
        }
        m *= 2;
        coarse = fine;
    }
}

/// `I(gamma, gamma_diamond) = int_{[-1,1]^n} e(gamma . f(t) + sum gamma_j t^j) dt`.
pub fn osc_integral(
    system: &FormSystem,
    gamma: &[f64],
    gamma_diamond: &BTreeMap<ExponentVector, f64>,
    opts: QuadratureOptions,
) -> Result<OscIntegral> {
    let n = system.n();
    if gamma.len() != system.r() {
        return Err(Error::Dimension { expected: system.r(), got: gamma.len() });
    }
    if n > opts.max_dim {
        return Err(Error::Budget(format!("dimension {n} exceeds quadrature cap {}", opts.max_dim)));
    }
    if opts.nodes < 2 {
        return Err(Error::Invalid("at least two nodes per axis".into()));
    }
    let terms = osc_phase(system, gamma, gamma_diamond);
    let separable = terms.iter().all(|(j, _)| j.iter().filter(|&&e| e > 0).count() <= 1);
    if separable {
        let d = system.d() as usize;
        let mut value = Complex64::new(1.0, 0.0);
        let mut upper = 1.0;
        let mut lower = 1.0;
        let mut nodes = 0;
        for ax in 0..n {
            let mut c = vec![0.0; d + 1];
            for (j, v) in &terms {
                if j[ax] > 0 {
                    c[j[ax] as usize] += v;
                }
            }
            let (v, err, m) = axis_integral(&c, opts.nodes, opts.tol / n as f64);
            value *= v;
            upper *= v.norm() + err;
            lower *= v.norm();
            nodes = nodes.max(m);
        }
        let error = upper - lower;
        if error > opts.tol {
            return Err(Error::NonConverged { estimate: error, tol: opts.tol });
        }
        return Ok(OscIntegral { value, error, nodes });
    }
    let fits = |m: usize| ((2 * m) as f64).powi(n as i32) <= opts.node_budget as f64;
    let mut m = opts.nodes;
    while m > 2 && !fits(m) {
        m -= 1;
    }
    let mut coarse = tensor(n, &terms, m);
    let (fine, error) = loop {
        let fine = tensor(n, &terms, 2 * m);
        let error = (fine - coarse).norm();
        if error <= opts.tol || !fits(2 * m) {
            break (fine, error);
        }
        m *= 2;
        coarse = fine;
    };
    if error > opts.tol {
        return Err(Error::NonConverged { estimate: error, tol: opts.tol });
    }
    Ok(OscIntegral { value: fine, error, nodes: 2 * m })
}

/// Exact phase numerators modulo `m` with a root-of-unity table.
struct RootTable {
    m: i128,
    table: Option<Vec<Complex64>>,
}

impl RootTable {
    fn new(m: i128) -> Self {
        let table = (m <= 1 << 20).then(|| (0..m).map(|t| e(t as f64 / m as f64)).collect());
        RootTable { m, table }
    }

    fn get(&self, t: i128) -> Complex64 {
        let t = t.rem_euclid(self.m);
        match &self.table {
            Some(v) => v[t as usize],
            None => e(t as f64 / self.m as f64),
        }
    }
}

fn to_mod(x: &BigInt, m: i128) -> i128 {
    x.mod_floor(&BigInt::from(m)).to_i128().unwrap_or(0)
}

/// `S_{r,D,q}(a, a_dagger) = sum_{x mod Dr} e(a . f(x) / q + sum_{|j| < d} a_j x^j / r)`.
pub fn complete_sum(
    r: &BigInt,
    dd_: &BigInt,
    q: &BigInt,
    a: &[BigInt],
    a_dagger: &BTreeMap<ExponentVector, BigInt>,
    system: &FormSystem,
    budget: u64,
) -> Result<Complex64> {
    if a.len() != system.r() {
        return Err(Error::Dimension { expected: system.r(), got: a.len() });
    }
    if !r.is_positive() || !dd_.is_positive() || !q.is_positive() {
        return Err(Error::Invalid("r, D and q must be positive".into()));
    }
    let modulus = dd_ * r;
    if !modulus.is_multiple_of(q) {
        return Err(Error::Divisibility(format!("q = {q} does not divide Dr = {modulus}")));
    }
    let m = modulus
        .to_u64()
        .filter(|&m| m < 1 << 40)
        .ok_or_else(|| Error::Budget(format!("modulus {modulus} too large")))?;
    check_budget(system.n(), m, budget)?;
    let mi = m as i128;
    let scale = &modulus / q;
    // coefficients of the phase numerator, reduced mod Dr
    let mut num: BTreeMap<ExponentVector, i128> = BTreeMap::new();
    for (f, ak) in system.forms().iter().zip(a) {
        for (i, c) in f.terms() {
            *num.entry(i.clone()).or_insert(0) += to_mod(&(c * ak * &scale), mi);
        }
    }
    for (j, aj) in a_dagger {
        if j.degree() >= 1 && j.degree() < system.d() {
            *num.entry(j.clone()).or_insert(0) += to_mod(&(aj * dd_), mi);
        }
    }
    let terms: Vec<(Vec<u32>, i128)> = num
        .into_iter()
        .map(|(j, c)| (j.0, c.rem_euclid(mi)))
        .filter(|(_, c)| *c != 0)
        .collect();
    let roots = RootTable::new(mi);
    let n = system.n();
    let d = system.d() as usize;
    let pow_mod = |x: i128| {
        let mut v = vec![1i128; d + 1];
        for k in 1..=d {
            v[k] = (v[k - 1] * x) % mi;
        }
        v
    };
    let partial: Vec<CSum> = (0..mi)
        .into_par_iter()
        .map(|x0| {
            let mut x = vec![0i128; n];
            x[0] = x0;
            let mut pows: Vec<Vec<i128>> = x.iter().map(|&v| pow_mod(v)).collect();
            let mut acc = CSum::default();
            loop {
                let mut t: i128 = 0;
                for (j, c) in &terms {
                    let mut v = *c;
                    for (ax, &ex) in j.iter().enumerate() {
                        if ex > 0 {
                            v = (v * pows[ax][ex as usize]) % mi;
                        }
                    }
                    t = (t + v) % mi;
                }
                acc.add(roots.get(t));
                let mut s = n;
                loop {
                    if s == 1 {
                        return acc;
                    }
                    s -= 1;
                    if x[s] + 1 < mi {
                        x[s] += 1;
                        pows[s] = pow_mod(x[s]);
                        break;
                    }
                    x[s] = 0;
                    pows[s] = pow_mod(0);
                }
            }
        })
        .collect();
    let mut total = CSum::default();
    for c in &partial {
        total.merge(c);
    }
    Ok(total.value())
}

#[derive(Clone, Debug, Serialize)]
pub struct SStar {
    pub value: Complex64,
    pub complete: Complex64,
    pub integral: OscIntegral,
    pub gamma: Vec<f64>,
    pub gamma_diamond_max: f64,
}

/// `S*(alpha) = P^n (Dr)^-n S_{r,D,q}(a, a_dagger) I(gamma, gamma_diamond) e(alpha . f(mu 1))`
/// with `gamma = P^d (alpha - a/q)` and `gamma_j = P^|j| (omega_j - a_j / r)`.
#[allow(clippy::too_many_arguments)]
pub fn s_star(
    alpha: &[Dd],
    certs: &Certificates,
    system: &FormSystem,
    exp: &ShiftExpansion,
    mu: &Shift,
    p: u64,
    budget: u64,
    quad: QuadratureOptions,
) -> Result<SStar> {
    let report = certs.check(exp);
    if !report.passed() {
        return Err(Error::Invalid(format!("inconsistent certificates: {}", report.failures.join("; "))));
    }
    let (birch, baker, special) = (&certs.birch, &certs.baker, &certs.special);
    let d = system.d();
    let n = system.n();
    let pf = p as f64;
    let qd = dd_from_int(&birch.q);
    let gamma: Vec<f64> = alpha
        .iter()
        .zip(&birch.a)
        .map(|(al, ak)| {
            let z = *al - dd_from_int(ak) / qd;
            (z * dd(pf.powi(d as i32))).hi()
        })
        .collect();
    let w = omega(alpha, exp, mu)?;
    let rd = dd_from_int(&baker.r);
    let mut gd = BTreeMap::new();
    let mut gmax: f64 = 0.0;
    for (j, v) in w.diamond(d) {
        let aj = baker.a.get(&j).map(dd_from_int).unwrap_or_else(|| dd(0.0));
        let g = ((v - aj / rd) * dd(pf.powi(j.degree() as i32))).hi();
        gmax = gmax.max(g.abs());
        gd.insert(j, g);
    }
    let complete = complete_sum(&baker.r, &special.d, &birch.q, &birch.a, &baker.a, system, budget)?;
    let integral = osc_integral(system, &gamma, &gd, quad)?;
    let dr = (&special.d * &baker.r).to_f64().unwrap_or(f64::INFINITY);
    let lead = (pf / dr).powi(n as i32);
    let value = complete * integral.value * lead * e(frac(constant_phase(exp, alpha, mu)));
    Ok(SStar { value, complete, integral, gamma, gamma_diamond_max: gmax })
}

/// `F(alpha) = (q + P^d |q alpha - a|)^-1 (Er + P^(d-1) |E r mu alpha - a2|)^-1`.
pub fn decay_witness(alpha: &[Dd], p: u64, d: u32, mu: &Shift, certs: &Certificates) -> f64 {
    let (birch, baker, special) = (&certs.birch, &certs.baker, &certs.special);
    let q = dd_from_int(&birch.q);
    let er_big = &special.e * &baker.r;
    let er = dd_from_int(&er_big);
    let m = mu.value_dd();
    let mut d1: f64 = 0.0;
    let mut d2: f64 = 0.0;
    for (k, al) in alpha.iter().enumerate() {
        let a = birch.a.get(k).map(dd_from_int).unwrap_or_else(|| dd(0.0));
        d1 = d1.max((q * *al - a).hi().abs());
        let a2 = special.a2.get(k).map(dd_from_int).unwrap_or_else(|| dd(0.0));
        d2 = d2.max((er * m * *al - a2).hi().abs());
    }
    let pf = p as f64;
    let left = q.hi() + pf.powi(d as i32) * d1;
    let right = er.hi() + pf.powi(d as i32 - 1) * d2;
    1.0 / (left * right)
}

/// One row of an evaluation trace.
#[derive(Clone, Debug, Serialize)]
pub struct TraceRow {
    pub alpha: Vec<f64>,
    pub abs_s: f64,
    pub abs_s_star: f64,
    pub residual: f64,
    pub f: f64,
}

/// `alpha` as double-double from a rational literal.
pub fn alpha_dd(alpha: &[BigRational]) -> Vec<Dd> {
    alpha.iter().map(dd_from_rational).collect()
}

/// Integer vector to double-double, for tests and tools.
pub fn int_dd(x: i128) -> Dd {
    dd_from_i128(x)
}

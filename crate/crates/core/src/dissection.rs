//! Major, minor and trivial arcs, the sandwich integrals
//! `R±(P) = int S(alpha) e(-alpha . tau) K±(alpha) d alpha`, and the end-to-end
//! asymptotic check.

use crate::counting::{count, count_series, CountSpec, Method, SeriesRow};
use crate::density::{density, find_nonsingular_real_zero, DensityEstimate, DensityOptions, RealZero, DEFAULT_ATTEMPTS};
use crate::dioph::{
    baker_search, birch_search, omega_ball, special_certificate, Certificates, DissectionParams, SearchOptions,
};
use crate::error::{Error, Result};
use crate::exact::rat_to_f64;
use crate::expsums::shifted_s;
use crate::forms::{check_hypotheses, taylor_shift, FormSystem, HypothesisReport, ShiftExpansion};
use crate::kernels::{kernel, sandwich_grid, KernelParams, Sign};
use crate::quadrature::gauss_legendre;
use crate::real::{dd, dd_from_i128, dd_from_rational, Ball, Dd, RSum};
use crate::shift::Shift;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::path::Path;

/// Largest box for which `R±` is integrated.
pub const SANDWICH_MAX_POINTS: u64 = 10_000_000;
/// Cap on `quadrature nodes x distinct values` for one `R±` evaluation.
pub const DEFAULT_SANDWICH_BUDGET: u64 = 4_000_000_000;
const GL_NODES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ArcKind {
    Major,
    Minor,
    Trivial,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ArcLabel {
    pub kind: ArcKind,
    /// `P^(delta - d)`.
    pub major_threshold: f64,
    /// `T(P)`.
    pub trivial_threshold: f64,
}

pub fn major_threshold(p: f64, d: u32, params: &DissectionParams) -> f64 {
    p.powf(rat_to_f64(&params.delta) - d as f64)
}

/// Labels `alpha` by its sup norm: major below `P^(delta - d)`, minor on the
/// closed interval up to `T(P)`, trivial beyond.
pub fn classify(alpha: &[f64], p: f64, d: u32, params: &DissectionParams, k: &KernelParams) -> ArcLabel {
    let norm = alpha.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let major_threshold = major_threshold(p, d, params);
    let kind = if norm < major_threshold {
        ArcKind::Major
    } else if norm <= k.t {
        ArcKind::Minor
    } else {
        ArcKind::Trivial
    };
    ArcLabel { kind, major_threshold, trivial_threshold: k.t }
}

/// Birch, Baker and special certificates for `alpha`, or `None` when either
/// search comes back empty.
pub fn certify(
    alpha: &[Ball],
    p: u64,
    theta: &BigRational,
    exp: &ShiftExpansion,
    mu: &Shift,
    params: &DissectionParams,
    opts: SearchOptions,
) -> Result<Option<Certificates>> {
    let pr = BigRational::from_integer(BigInt::from(p));
    let Some(birch) = birch_search(alpha, &pr, theta, exp.d(), opts)? else {
        return Ok(None);
    };
    let omega = omega_ball(alpha, exp, mu)?;
    let Some(baker) = baker_search(&omega, &pr, &params.delta, opts)? else {
        return Ok(None);
    };
    let special = special_certificate(exp, &baker)?;
    Ok(Some(Certificates { birch, baker, special }))
}

/// Distinct vectors `f(x + mu 1) - tau` over the box with multiplicities.
fn band_values(spec: &CountSpec) -> Result<Vec<(Vec<f64>, u64)>> {
    let n = spec.system.n();
    let r = spec.system.r();
    let d = spec.system.d();
    let side = 2 * spec.p + 1;
    if (side as f64).powi(n as i32) > SANDWICH_MAX_POINTS as f64 {
        return Err(Error::Budget(format!("{side}^{n} points exceed {SANDWICH_MAX_POINTS}")));
    }
    let mu = spec.mu.value_dd();
    let mu_pow: Vec<Dd> = (0..=d).scan(dd(1.0), |s, _| {
        let v = *s;
        *s = *s * mu;
        Some(v)
    })
    .collect();
    let terms: Vec<Vec<(Vec<u32>, i128, usize)>> = (0..r)
        .map(|k| {
            let mut t: Vec<_> = spec
                .expansion
                .entries(k)
                .iter()
                .map(|(j, c)| (j.0.clone(), c.to_i128().expect("coefficient fits i128"), (d - j.degree()) as usize))
                .collect();
            t.push((vec![0; n], spec.expansion.constant(k).to_i128().expect("coefficient fits i128"), d as usize));
            t
        })
        .collect();
    let tau: Vec<Dd> = spec.tau.iter().map(dd_from_rational).collect();
    let p = spec.p as i64;
    let total = side.pow(n as u32) as usize;
    let mut values = Vec::with_capacity(total);
    let mut x = vec![-p; n];
    for _ in 0..total {
        let w: Vec<f64> = terms
            .iter()
            .zip(&tau)
            .map(|(tk, t)| {
                let mut s = dd(0.0) - *t;
                for (e, c, m) in tk {
                    let mono = e.iter().zip(&x).fold(*c, |acc, (&ex, &xi)| acc * (xi as i128).pow(ex));
                    s += dd_from_i128(mono) * mu_pow[*m];
                }
                s.hi() + s.lo()
            })
            .collect();
        values.push(w);
        for i in (0..n).rev() {
            if x[i] < p {
                x[i] += 1;
                break;
            }
            x[i] = -p;
        }
    }
    values.sort_by(|a, b| a.iter().zip(b).map(|(u, v)| u.total_cmp(v)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    let mut out: Vec<(Vec<f64>, u64)> = Vec::new();
    for v in values {
        match out.last_mut() {
            Some((last, m)) if *last == v => *m += 1,
            _ => out.push((v, 1)),
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Sandwich {
    pub r_minus: f64,
    pub r_plus: f64,
    /// Rigorous bound on the integral outside `[-A, A]^R`.
    pub tail: f64,
    pub cutoff: f64,
    pub kernel: KernelParams,
    pub nodes: u64,
}

#[derive(Clone, Copy, Debug)]
pub struct SandwichOptions {
    /// Truncation radius `A`; defaults to `10 T(P)`.
    pub cutoff: Option<f64>,
    pub budget: u64,
}

impl Default for SandwichOptions {
    fn default() -> Self {
        SandwichOptions { cutoff: None, budget: DEFAULT_SANDWICH_BUDGET }
    }
}

/// `int_{|a| > A} |K±(a)| da <= 2 / (pi^2 rho A)` and
/// `int |K±(a)| da <= (4 / pi) sqrt((2 eta + rho) / rho)`.
pub fn tail_bound(points: u64, r: usize, k: &KernelParams, cutoff: f64) -> f64 {
    let outer = 2.0 / (PI * PI * k.rho * cutoff);
    let full = 4.0 / PI * (k.width(Sign::Plus) / k.rho).sqrt();
    points as f64 * r as f64 * outer * full.powi(r as i32 - 1)
}

fn panels_for(freq: f64, len: f64) -> usize {
    ((freq * len).ceil() as usize).max(1)
}

/// `R-(P)` and `R+(P)` by composite Gauss-Legendre over `[-A, A]^R`, using
/// that the integrand is even so only `Re S(alpha) e(-alpha . tau)` contributes.
pub fn r_plus_minus(spec: &CountSpec, k: &KernelParams, opts: SandwichOptions) -> Result<Sandwich> {
    let r = spec.system.r();
    if r > 2 {
        return Err(Error::Invalid(format!("R± integration handles R <= 2, got R = {r}")));
    }
    let cutoff = opts.cutoff.unwrap_or(10.0 * k.t);
    let values = band_values(spec)?;
    let points: u64 = values.iter().map(|v| v.1).sum();
    let kernel_freq = k.width(Sign::Plus) + k.rho;
    let freq: Vec<f64> = (0..r).map(|i| values.iter().fold(0.0f64, |m, v| m.max(v.0[i].abs())) + kernel_freq).collect();
    let rule = gauss_legendre(GL_NODES);
    let p0 = panels_for(freq[0], cutoff);
    let p1 = if r == 2 { panels_for(freq[1], 2.0 * cutoff) } else { 1 };
    let nodes = (p0 * p1 * GL_NODES.pow(r as u32)) as u64;
    if nodes as f64 * values.len() as f64 > opts.budget as f64 {
        return Err(Error::Budget(format!("{nodes} nodes x {} values exceed {}", values.len(), opts.budget)));
    }
    let h0 = cutoff / p0 as f64;
    let h1 = 2.0 * cutoff / p1 as f64;
    let panel_sums: Vec<(f64, f64)> = (0..p0)
        .into_par_iter()
        .map(|i| {
            let mut lo = RSum::default();
            let mut hi = RSum::default();
            for (a0, w0) in rule.mapped(i as f64 * h0, (i + 1) as f64 * h0) {
                let km0 = kernel(Sign::Minus, a0, k);
                let kp0 = kernel(Sign::Plus, a0, k);
                if r == 1 {
                    let s: f64 = values.iter().map(|(v, m)| *m as f64 * (2.0 * PI * a0 * v[0]).cos()).sum();
                    lo.add(2.0 * w0 * km0 * s);
                    hi.add(2.0 * w0 * kp0 * s);
                    continue;
                }
                for j in 0..p1 {
                    let a = -cutoff + j as f64 * h1;
                    for (a1, w1) in rule.mapped(a, a + h1) {
                        let s: f64 = values.iter().map(|(v, m)| *m as f64 * (2.0 * PI * (a0 * v[0] + a1 * v[1])).cos()).sum();
                        lo.add(2.0 * w0 * w1 * km0 * kernel(Sign::Minus, a1, k) * s);
                        hi.add(2.0 * w0 * w1 * kp0 * kernel(Sign::Plus, a1, k) * s);
                    }
                }
            }
            (lo.value(), hi.value())
        })
        .collect();
    let mut lo = RSum::default();
    let mut hi = RSum::default();
    for (a, b) in panel_sums {
        lo.add(a);
        hi.add(b);
    }
    Ok(Sandwich {
        r_minus: lo.value(),
        r_plus: hi.value(),
        tail: tail_bound(points, r, k, cutoff),
        cutoff,
        kernel: *k,
        nodes,
    })
}

/// `R±` on the Fourier side: `sum_x prod_k ft±(f_k(x + mu 1) - tau_k)`.
pub fn r_plus_minus_dual(spec: &CountSpec, k: &KernelParams) -> Result<(f64, f64)> {
    let values = band_values(spec)?;
    let mut lo = RSum::default();
    let mut hi = RSum::default();
    for (v, m) in &values {
        let m = *m as f64;
        lo.add(m * v.iter().map(|&t| crate::kernels::kernel_ft(Sign::Minus, t, k)).product::<f64>());
        hi.add(m * v.iter().map(|&t| crate::kernels::kernel_ft(Sign::Plus, t, k)).product::<f64>());
    }
    Ok((lo.value(), hi.value()))
}

#[derive(Clone, Debug, Serialize)]
pub struct SandwichRow {
    pub p: u64,
    pub count: u64,
    pub r_minus: f64,
    pub r_plus: f64,
    pub tail: f64,
    pub holds: bool,
}

impl SandwichRow {
    pub fn new(p: u64, count: u64, s: &Sandwich) -> Self {
        let n = count as f64;
        let holds = s.r_minus - s.tail <= n && n <= s.r_plus + s.tail;
        SandwichRow { p, count, r_minus: s.r_minus, r_plus: s.r_plus, tail: s.tail, holds }
    }
}

#[derive(Clone, Debug)]
pub struct VerifySpec<'a> {
    pub system: &'a FormSystem,
    pub mu: &'a Shift,
    pub tau: Vec<BigRational>,
    pub eta: BigRational,
    pub ps: Vec<u64>,
    pub method: Method,
    pub density: DensityOptions,
    /// Allowed `|ratio - 1|` at the largest `P`.
    pub tolerance: f64,
    /// First index of `ps` from which `|ratio - 1|` must not increase.
    pub monotone_from: usize,
    pub budget: u64,
    pub theta0: Option<BigRational>,
    pub seed: u64,
    pub sandwich: bool,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Target {
    Main { c: f64, std_error: f64 },
    None { reason: String },
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub hypotheses: HypothesisReport,
    pub certified: bool,
    pub waiver: Option<String>,
    pub theta0: String,
    pub delta: String,
    pub real_zero: Option<RealZero>,
    pub density: Option<DensityEstimate>,
    pub target: Target,
    pub rows: Vec<SeriesRow>,
    pub deviations: Vec<f64>,
    pub final_within_tolerance: bool,
    pub monotone: bool,
    /// `|ratio - 1|` failed to shrink across the monitored range.
    pub stalled: bool,
    pub boundary_flags: u64,
    pub sandwich: Vec<SandwichRow>,
    pub tolerance: f64,
    pub pass: bool,
}

/// Hypotheses, density, counts and the ratio table against `(2 eta)^R c P^(n - Rd)`.
pub fn verify_asymptotic(spec: &VerifySpec) -> Result<VerifyReport> {
    if spec.ps.is_empty() {
        return Err(Error::Invalid("at least one P is required".into()));
    }
    let sys = spec.system;
    let hypotheses = check_hypotheses(sys, spec.seed);
    let certified = hypotheses.passed();
    let waiver = (!certified).then(|| format!("hypotheses fail ({}); run without certification", hypotheses.failures().join(", ")));
    let exp = taylor_shift(sys);
    let params = DissectionParams::new(&exp, spec.theta0.clone())?;
    let real_zero = find_nonsingular_real_zero(sys, DEFAULT_ATTEMPTS, spec.seed);
    let (dens, target) = match &real_zero {
        None => (None, Target::None { reason: "no asymptotic target: no nonsingular real zero found".into() }),
        Some(_) => {
            let est = density(sys, &spec.density)?;
            let target = if est.c > 3.0 * est.std_error && est.c > 0.0 {
                Target::Main { c: est.c, std_error: est.std_error }
            } else {
                Target::None { reason: format!("no asymptotic target: density {} not separated from 0", est.c) }
            };
            (Some(est), target)
        }
    };
    let c = match target {
        Target::Main { c, .. } => c,
        Target::None { .. } => 0.0,
    };
    let cs = CountSpec {
        system: sys,
        expansion: &exp,
        mu: spec.mu,
        tau: spec.tau.clone(),
        eta: spec.eta.clone(),
        p: spec.ps[0],
        method: spec.method,
    };
    let rows = count_series(&cs, &spec.ps, c, spec.budget)?;
    let deviations: Vec<f64> = rows.iter().map(|r| (r.ratio - 1.0).abs()).collect();
    let last = *deviations.last().expect("nonempty");
    let final_within_tolerance = last <= spec.tolerance;
    let tail = &deviations[spec.monotone_from.min(deviations.len() - 1)..];
    let monotone = tail.windows(2).all(|w| w[1] <= w[0]);
    let stalled = tail.len() < 2 || !(last < tail[0]);
    let boundary_flags = rows.iter().map(|r| r.boundary_flags).sum();

    let mut sandwich = Vec::new();
    if spec.sandwich && sys.r() <= 2 {
        let eta = rat_to_f64(&spec.eta);
        let delta = rat_to_f64(&params.delta);
        for row in &rows {
            let side = (2 * row.p + 1) as f64;
            if side.powi(sys.n() as i32) > SANDWICH_MAX_POINTS as f64 {
                continue;
            }
            let k = KernelParams::new(eta, row.p as f64, delta);
            let s = r_plus_minus(&CountSpec { p: row.p, ..cs.clone() }, &k, SandwichOptions::default());
            match s {
                Ok(s) => sandwich.push(SandwichRow::new(row.p, row.n, &s)),
                Err(Error::Budget(_)) => continue,
                Err(e) => return Err(e),
            }
        }
    }
    let has_target = matches!(target, Target::Main { .. });
    let pass = certified && has_target && final_within_tolerance && monotone && sandwich.iter().all(|s| s.holds);
    Ok(VerifyReport {
        hypotheses,
        certified,
        waiver,
        theta0: params.theta0.to_string(),
        delta: params.delta.to_string(),
        real_zero,
        density: dens,
        target,
        rows,
        deviations,
        final_within_tolerance,
        monotone,
        stalled,
        boundary_flags,
        sandwich,
        tolerance: spec.tolerance,
        pass,
    })
}

/// Report files as `(name, contents)`.
#[derive(Clone, Debug, Default)]
pub struct Bundle {
    pub files: Vec<(String, String)>,
}

impl Bundle {
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, text) in &self.files {
            std::fs::write(dir.join(name), text)?;
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|f| f.0 == name).map(|f| f.1.as_str())
    }
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| Error::Io(e.to_string()))?;
    for r in rows {
        w.write_record(&r).map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// `P, N, ratio, method` and `seconds` when `timings` is set.
pub fn ratios_csv(rows: &[SeriesRow], timings: bool) -> Result<String> {
    let mut header = vec!["P", "N", "ratio", "method", "boundary_flags"];
    if timings {
        header.push("seconds");
    }
    csv_string(
        &header,
        rows.iter().map(|r| {
            let mut v = vec![r.p.to_string(), r.n.to_string(), r.ratio.to_string(), r.method.name().to_string(), r.boundary_flags.to_string()];
            if timings {
                v.push(r.seconds.to_string());
            }
            v
        }),
    )
}

pub fn kernel_grid_csv(k: &KernelParams, points: usize) -> Result<String> {
    let grid = sandwich_grid(k, points, 1e3);
    csv_string(
        &["t", "ft_minus", "ft_plus", "oracle_minus", "oracle_plus", "indicator", "sandwiched"],
        grid.iter().map(|g| {
            vec![
                g.t.to_string(),
                g.ft_minus.to_string(),
                g.ft_plus.to_string(),
                g.oracle_minus.to_string(),
                g.oracle_plus.to_string(),
                g.indicator.to_string(),
                g.sandwiched().to_string(),
            ]
        }),
    )
}

/// `|S(alpha)| / (2P+1)^n` and the arc label along the diagonal
/// `alpha = (a, ..., a)` for `a` log-spaced around both thresholds.
pub fn arc_samples_csv(sys: &FormSystem, mu: &Shift, p: u64, params: &DissectionParams, k: &KernelParams, samples: usize) -> Result<String> {
    let exp = taylor_shift(sys);
    let lo = major_threshold(p as f64, sys.d(), params) / 4.0;
    let hi = 4.0 * k.t;
    let side = (2 * p + 1) as f64;
    let box_size = side.powi(sys.n() as i32);
    let evaluate = box_size <= 1e6;
    let mut rows = Vec::with_capacity(samples);
    for i in 0..samples {
        let f = if samples > 1 { i as f64 / (samples - 1) as f64 } else { 0.0 };
        let a = lo * (hi / lo).powf(f);
        let alpha = vec![a; sys.r()];
        let label = classify(&alpha, p as f64, sys.d(), params, k);
        let s = if evaluate {
            let ad: Vec<Dd> = alpha.iter().map(|&x| dd(x)).collect();
            (shifted_s(sys, &exp, mu, p, &ad, box_size as u64 + 1)?.direct.norm() / box_size).to_string()
        } else {
            String::new()
        };
        let kind = serde_json::to_value(label.kind).expect("label serialises");
        rows.push(vec![a.to_string(), kind.as_str().unwrap_or_default().to_string(), s]);
    }
    csv_string(&["alpha", "label", "abs_s_normalised"], rows)
}

/// JSON summary plus `ratios.csv`, `arcs.csv` and `kernel_grid.csv`.
pub fn build_bundle(spec: &VerifySpec, report: &VerifyReport, timings: bool) -> Result<Bundle> {
    let mut summary = report.clone();
    if !timings {
        for r in summary.rows.iter_mut() {
            r.seconds = 0.0;
        }
    }
    let exp = taylor_shift(spec.system);
    let params = DissectionParams::new(&exp, spec.theta0.clone())?;
    let p_max = *spec.ps.iter().max().expect("nonempty");
    let p_min = *spec.ps.iter().min().expect("nonempty");
    let eta = rat_to_f64(&spec.eta);
    let delta = rat_to_f64(&params.delta);
    let k_max = KernelParams::new(eta, p_max as f64, delta);
    let k_min = KernelParams::new(eta, p_min as f64, delta);
    let mut json = serde_json::to_value(&summary).map_err(|e| Error::Io(e.to_string()))?;
    if !timings {
        if let Some(rows) = json.get_mut("rows").and_then(|r| r.as_array_mut()) {
            for r in rows {
                if let Some(o) = r.as_object_mut() {
                    o.remove("seconds");
                }
            }
        }
    }
    Ok(Bundle {
        files: vec![
            ("summary.json".into(), serde_json::to_string_pretty(&json).map_err(|e| Error::Io(e.to_string()))? + "\n"),
            ("ratios.csv".into(), ratios_csv(&report.rows, timings)?),
            ("arcs.csv".into(), arc_samples_csv(spec.system, spec.mu, p_min, &params, &k_min, 48)?),
            ("kernel_grid.csv".into(), kernel_grid_csv(&k_max, 201)?),
        ],
    })
}

/// Single count with the exact band, for callers that only need `N(P)`.
pub fn count_at(system: &FormSystem, mu: &Shift, tau: &[BigRational], eta: &BigRational, p: u64, method: Method, budget: u64) -> Result<u64> {
    let exp = taylor_shift(system);
    let spec = CountSpec { system, expansion: &exp, mu, tau: tau.to_vec(), eta: eta.clone(), p, method };
    Ok(count(&spec, budget)?.count)
}

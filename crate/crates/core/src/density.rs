//! The real density `c` as the limit of tent integrals
//! `I_L = int_{[-1,1]^n} prod_k lambda_L(f_k(t)) dt`, estimated by randomly
//! shifted Sobol points, and a Newton search for nonsingular real zeros.

use crate::forms::{gradient, FormSystem, Polynomial};
use nalgebra::{DMatrix, DVector};
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sobol::params::JoeKuoD6;
use sobol::Sobol;

pub const DEFAULT_SHIFTS: usize = 16;
pub const DEFAULT_SAMPLES_PER_SHIFT: usize = 1 << 16;
pub const DEFAULT_REL_TOL: f64 = 1e-2;
pub const DEFAULT_MAX_SAMPLES_PER_SHIFT: usize = 1 << 20;
pub const DEFAULT_ATTEMPTS: usize = 100;

/// `lambda_L(xi) = L max(0, 1 - L |xi|)`.
pub fn tent(l: f64, xi: f64) -> f64 {
    l * (1.0 - l * xi.abs()).max(0.0)
}

pub fn tent_product(l: f64, xi: &[f64]) -> f64 {
    xi.iter().map(|&x| tent(l, x)).product()
}

/// Forms flattened to `(exponents, coefficient)` lists for fast `f64` evaluation.
#[derive(Clone, Debug)]
pub struct Compiled {
    n: usize,
    d: usize,
    forms: Vec<Vec<(Vec<u32>, f64)>>,
}

impl Compiled {
    pub fn new(sys: &FormSystem) -> Self {
        let forms = sys
            .forms()
            .iter()
            .map(|f| f.terms().iter().map(|(e, c)| (e.0.clone(), c.to_f64().unwrap_or(f64::NAN))).collect())
            .collect();
        Compiled { n: sys.n(), d: sys.d() as usize, forms }
    }

    pub fn r(&self) -> usize {
        self.forms.len()
    }

    /// Writes `f(t)` into `out`, using `pw` as scratch for the power table.
    pub fn eval_into(&self, t: &[f64], pw: &mut Vec<f64>, out: &mut [f64]) {
        let w = self.d + 1;
        pw.resize(self.n * w, 1.0);
        for (i, &x) in t.iter().enumerate() {
            let row = &mut pw[i * w..(i + 1) * w];
            row[0] = 1.0;
            for k in 1..w {
                row[k] = row[k - 1] * x;
            }
        }
        for (o, terms) in out.iter_mut().zip(&self.forms) {
            let mut s = 0.0;
            for (e, c) in terms {
                let mut v = *c;
                for (i, &k) in e.iter().enumerate() {
                    if k > 0 {
                        v *= pw[i * w + k as usize];
                    }
                }
                s += v;
            }
            *o = s;
        }
    }

    pub fn eval(&self, t: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.r()];
        let mut pw = Vec::new();
        self.eval_into(t, &mut pw, &mut out);
        out
    }
}

#[derive(Clone, Debug)]
pub struct DensityOptions {
    pub ladder: Vec<f64>,
    pub samples_per_shift: usize,
    pub shifts: usize,
    pub seed: u64,
    pub rel_tol: f64,
    /// Samples per shift double until the top rung's relative standard error
    /// is at most `rel_tol` or `max_samples_per_shift` is reached.
    pub max_samples_per_shift: usize,
}

impl Default for DensityOptions {
    fn default() -> Self {
        DensityOptions {
            ladder: (1..=8).map(|k| 2f64.powi(k)).collect(),
            samples_per_shift: DEFAULT_SAMPLES_PER_SHIFT,
            shifts: DEFAULT_SHIFTS,
            seed: 0,
            rel_tol: DEFAULT_REL_TOL,
            max_samples_per_shift: DEFAULT_MAX_SAMPLES_PER_SHIFT,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Rung {
    pub l: f64,
    pub value: f64,
    pub samples: usize,
    pub std_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityEstimate {
    pub c: f64,
    pub std_error: f64,
    pub ladder: Vec<Rung>,
    pub converged: bool,
}

/// Unshifted Sobol points as 32-bit integers, row-major.
fn sobol_points(n: usize, count: usize) -> Vec<u32> {
    let params = JoeKuoD6::minimal();
    Sobol::<u32>::new(n, &params).take(count).flatten().collect()
}

/// `I_L` for every `L` in `ladder`, one estimate per digital shift.
fn shifted_estimates(sys: &FormSystem, opts: &DensityOptions) -> Vec<Vec<f64>> {
    let n = sys.n();
    let comp = Compiled::new(sys);
    let pts = sobol_points(n, opts.samples_per_shift);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let masks: Vec<Vec<u32>> = (0..opts.shifts).map(|_| (0..n).map(|_| rng.gen()).collect()).collect();
    let vol = 2f64.powi(n as i32);
    masks
        .par_iter()
        .map(|mask| {
            let mut sums = vec![0.0; opts.ladder.len()];
            let mut t = vec![0.0; n];
            let mut fv = vec![0.0; comp.r()];
            let mut pw = Vec::new();
            for p in pts.chunks_exact(n) {
                for i in 0..n {
                    let u = ((p[i] ^ mask[i]) as f64 + 0.5) / 4_294_967_296.0;
                    t[i] = 2.0 * u - 1.0;
                }
                comp.eval_into(&t, &mut pw, &mut fv);
                for (s, &l) in sums.iter_mut().zip(&opts.ladder) {
                    *s += tent_product(l, &fv);
                }
            }
            sums.into_iter().map(|s| vol * s / opts.samples_per_shift as f64).collect()
        })
        .collect()
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / k;
    if xs.len() < 2 {
        return (m, f64::INFINITY);
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1.0);
    (m, (var / k).sqrt())
}

/// `I_L` with its standard error over the digital shifts.
pub fn i_l(sys: &FormSystem, l: f64, samples_per_shift: usize, shifts: usize, seed: u64) -> (f64, f64) {
    let opts = DensityOptions { ladder: vec![l], samples_per_shift, shifts, seed, rel_tol: DEFAULT_REL_TOL, max_samples_per_shift: samples_per_shift };
    let est = shifted_estimates(sys, &opts);
    let col: Vec<f64> = est.iter().map(|v| v[0]).collect();
    mean_se(&col)
}

/// Runs the ladder; converged when the last two rungs differ by less than
/// `max(2 sqrt(se_1^2 + se_2^2), rel_tol |value|)`. The sample count is
/// doubled while the top rung is noisier than `rel_tol`.
pub fn density(sys: &FormSystem, opts: &DensityOptions) -> crate::Result<DensityEstimate> {
    if opts.ladder.is_empty() || opts.ladder.windows(2).any(|w| w[1] <= w[0]) || opts.ladder[0] < 1.0 {
        return Err(crate::Error::Invalid("ladder must be nonempty, increasing and start at L >= 1".into()));
    }
    if opts.samples_per_shift * opts.shifts < 1000 || opts.shifts < 2 {
        return Err(crate::Error::Invalid("at least 1000 samples over two or more shifts".into()));
    }
    let mut run = opts.clone();
    let ladder = loop {
        let est = shifted_estimates(sys, &run);
        let ladder: Vec<Rung> = run
            .ladder
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                let col: Vec<f64> = est.iter().map(|v| v[i]).collect();
                let (value, std_error) = mean_se(&col);
                Rung { l, value, samples: run.samples_per_shift * run.shifts, std_error }
            })
            .collect();
        let top = ladder.last().expect("nonempty ladder");
        if top.std_error <= run.rel_tol * top.value.abs() || 2 * run.samples_per_shift > run.max_samples_per_shift {
            break ladder;
        }
        run.samples_per_shift *= 2;
    };
    let last = ladder.last().expect("nonempty ladder");
    let converged = match ladder.len() {
        1 => false,
        k => {
            let prev = &ladder[k - 2];
            let gap = (last.value - prev.value).abs();
            let band = (2.0 * (last.std_error.powi(2) + prev.std_error.powi(2)).sqrt()).max(opts.rel_tol * last.value.abs());
            gap <= band
        }
    };
    Ok(DensityEstimate { c: last.value, std_error: last.std_error, ladder: ladder.clone(), converged })
}

#[derive(Clone, Debug, Serialize)]
pub struct RealZero {
    pub point: Vec<f64>,
    pub residual: f64,
    /// Smallest singular value of the row-normalised Jacobian.
    pub sigma_min: f64,
    pub rank: usize,
}

fn jacobian(grads: &[Vec<Polynomial>], t: &[f64]) -> DMatrix<f64> {
    let r = grads.len();
    let n = t.len();
    DMatrix::from_fn(r, n, |k, i| grads[k][i].eval_f64(t))
}

/// Smallest singular value after scaling each row to unit length, and the
/// numerical rank at threshold `1e-6`.
pub fn normalized_sigma(j: &DMatrix<f64>) -> (f64, usize) {
    let mut m = j.clone();
    for mut row in m.row_iter_mut() {
        let nrm = row.norm();
        if nrm == 0.0 {
            return (0.0, 0);
        }
        row /= nrm;
    }
    let sv = m.singular_values();
    let rank = sv.iter().filter(|&&s| s > 1e-6).count();
    (sv.iter().copied().fold(f64::INFINITY, f64::min), rank)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn newton(comp: &Compiled, grads: &[Vec<Polynomial>], mut t: Vec<f64>, iters: usize) -> Vec<f64> {
    let mut f = comp.eval(&t);
    for _ in 0..iters {
        let res = max_abs(&f);
        if res < 1e-15 {
            break;
        }
        let j = jacobian(grads, &t);
        let Ok(pinv) = j.svd(true, true).pseudo_inverse(1e-12) else {
            break;
        };
        let step = pinv * DVector::from_column_slice(&f);
        let mut lam = 1.0;
        let mut moved = false;
        while lam > 1e-6 {
            let cand: Vec<f64> = t.iter().zip(step.iter()).map(|(x, s)| x - lam * s).collect();
            let fc = comp.eval(&cand);
            if max_abs(&fc) < res {
                t = cand;
                f = fc;
                moved = true;
                break;
            }
            lam *= 0.5;
        }
        if !moved {
            break;
        }
    }
    t
}

/// Damped Newton from seeded random starts. A zero is accepted when, after
/// rescaling to `max |t_i| = 1/2`, `|f(t)| < 1e-10` and the row-normalised
/// Jacobian has smallest singular value above `1e-6`.
pub fn find_nonsingular_real_zero(sys: &FormSystem, attempts: usize, seed: u64) -> Option<RealZero> {
    let comp = Compiled::new(sys);
    let grads: Vec<Vec<Polynomial>> = sys.forms().iter().map(gradient).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..attempts {
        let start: Vec<f64> = (0..sys.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let t = newton(&comp, &grads, start, 60);
        let m = max_abs(&t);
        if !(m > 1e-8) || !m.is_finite() {
            continue;
        }
        // homogeneity: f(lambda t) = lambda^d f(t)
        let scaled: Vec<f64> = t.iter().map(|x| x * 0.5 / m).collect();
        let t = newton(&comp, &grads, scaled, 8);
        let residual = max_abs(&comp.eval(&t));
        if residual >= 1e-10 || max_abs(&t) >= 1.0 {
            continue;
        }
        let (sigma_min, rank) = normalized_sigma(&jacobian(&grads, &t));
        if sigma_min > 1e-6 && rank == sys.r() {
            return Some(RealZero { point: t, residual, sigma_min, rank });
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::Form;
    use proptest::prelude::*;
    use rand::Rng;

    fn quad5() -> FormSystem {
        FormSystem::new(vec![Form::diagonal(2, &[1, 1, -1, -1, -1])], 0).unwrap()
    }

    #[test]
    fn tent_examples() {
        assert_eq!(tent(4.0, 0.0), 4.0);
        assert_eq!(tent(4.0, 0.25), 0.0);
        // area of the triangle with height L and half-width 1/L
        for l in [1.0, 3.0, 17.5] {
            let half = 1.0 / l;
            let area = 0.5 * (2.0 * half) * tent(l, 0.0);
            assert!((area - 1.0).abs() < 1e-15);
        }
        assert_eq!(tent_product(3.0, &[0.0, 0.0]), 9.0);
    }

    #[test]
    fn linear_density_is_one() {
        // a degree-1 "form" t, used only to exercise the sampler
        let f = Form::from_i64(1, 1, &[(&[1], 1)]).unwrap();
        let sys = FormSystem::new_unchecked(vec![f]);
        let opts = DensityOptions { ladder: vec![1.0, 2.0, 4.0], samples_per_shift: 1 << 12, ..Default::default() };
        let est = density(&sys, &opts).unwrap();
        assert!((est.c - 1.0).abs() < 1e-3, "{est:?}");
        assert!(est.converged);
    }

    #[test]
    fn empty_zero_set() {
        // a definite ternary form vanishes only at 0, so I_L decays like L^(-1/2)
        let g = FormSystem::new(vec![Form::diagonal(2, &[1, 1, 1])], 0).unwrap();
        let opts = DensityOptions { ladder: vec![4.0, 64.0], samples_per_shift: 1 << 12, ..Default::default() };
        let est = density(&g, &opts).unwrap();
        assert!(est.ladder[1].value < est.ladder[0].value);
        assert!(est.ladder.iter().all(|r| r.value >= 0.0 && r.value <= r.l * 8.0));
    }

    fn plain_mc(sys: &FormSystem, l: f64, samples: usize, seed: u64) -> (f64, f64) {
        let comp = Compiled::new(sys);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vol = 2f64.powi(sys.n() as i32);
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..samples {
            let t: Vec<f64> = (0..sys.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v = vol * tent_product(l, &comp.eval(&t));
            s += v;
            s2 += v * v;
        }
        let m = s / samples as f64;
        (m, ((s2 / samples as f64 - m * m) / samples as f64).sqrt())
    }

    #[test]
    fn qmc_agrees_with_plain_mc() {
        let sys = quad5();
        for l in [4.0, 16.0] {
            let (q, qse) = i_l(&sys, l, 1 << 14, 16, 7);
            let (m, mse) = plain_mc(&sys, l, 400_000, 99);
            assert!((q - m).abs() < 3.0 * (qse.powi(2) + mse.powi(2)).sqrt(), "L={l}: {q}±{qse} vs {m}±{mse}");
        }
    }

    #[test]
    fn seed_stability() {
        let sys = quad5();
        let opts = DensityOptions { ladder: vec![8.0, 16.0], samples_per_shift: 1 << 14, ..Default::default() };
        let a = density(&sys, &opts).unwrap();
        let b = density(&sys, &DensityOptions { seed: 12345, ..opts.clone() }).unwrap();
        assert!((a.c - b.c).abs() < 3.0 * (a.std_error.powi(2) + b.std_error.powi(2)).sqrt());
        let c = density(&sys, &opts).unwrap();
        assert_eq!(a.c.to_bits(), c.c.to_bits());
    }

    #[test]
    fn zero_search_examples() {
        let z = find_nonsingular_real_zero(&quad5(), 100, 1).expect("cone has smooth points");
        let comp = Compiled::new(&quad5());
        assert!(max_abs(&comp.eval(&z.point)) < 1e-10);
        assert!(z.point.iter().all(|x| x.abs() < 1.0) && z.rank == 1);
        let def = FormSystem::new(vec![Form::diagonal(2, &[1, 1, 1, 1, 1])], 0).unwrap();
        assert!(find_nonsingular_real_zero(&def, 50, 1).is_none());
        let two = FormSystem::new(
            vec![Form::diagonal(2, &[1, -1, 0, 0, 0]), Form::diagonal(2, &[0, 0, 1, -1, 0])],
            0,
        )
        .unwrap();
        let z = find_nonsingular_real_zero(&two, 100, 3).expect("explicit zero exists");
        assert_eq!(z.rank, 2);
        // independent re-check of the certificate
        let t = &z.point;
        assert!((t[0] * t[0] - t[1] * t[1]).abs() < 1e-10 && (t[2] * t[2] - t[3] * t[3]).abs() < 1e-10);
        assert!(t[0].abs() > 1e-4 && t[2].abs() > 1e-4);
    }

    #[test]
    fn positivity_when_zero_found() {
        let sys = quad5();
        assert!(find_nonsingular_real_zero(&sys, 100, 0).is_some());
        let opts = DensityOptions { ladder: vec![8.0, 16.0], samples_per_shift: 1 << 13, ..Default::default() };
        let est = density(&sys, &opts).unwrap();
        assert!(est.c > 2.0 * est.std_error);
    }

    /// `c` for `t1^2 + t2^2 - t3^2 - t4^2 - t5^2`: integrating out `t5` and
    /// both pairs leaves `int_0^2 p(w) int_0^1 2 p(w + v^2) dv dw`, with `p`
    /// the derivative of the area of a disc of radius `sqrt s` in `[-1, 1]^2`.
    fn quad5_oracle() -> f64 {
        let p = |s: f64| {
            if !(0.0..=2.0).contains(&s) {
                0.0
            } else if s <= 1.0 {
                std::f64::consts::PI
            } else {
                std::f64::consts::PI - 4.0 * (1.0 / s.sqrt()).acos()
            }
        };
        let simpson = |f: &dyn Fn(f64) -> f64, a: f64, b: f64, m: usize| {
            let h = (b - a) / m as f64;
            (0..=m).map(|i| f(a + i as f64 * h) * if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 }).sum::<f64>() * h / 3.0
        };
        let inner = |w: f64| {
            let k1 = (1.0 - w).max(0.0).sqrt().min(1.0);
            let k2 = (2.0 - w).max(0.0).sqrt().min(1.0);
            let g = |v: f64| 2.0 * p(w + v * v);
            p(w) * (simpson(&g, 0.0, k1, 400) + simpson(&g, k1, k2, 400) + simpson(&g, k2, 1.0, 400))
        };
        simpson(&inner, 0.0, 1.0, 400) + simpson(&inner, 1.0, 2.0, 400)
    }

    #[test]
    fn quad5_density_matches_oracle() {
        let c = quad5_oracle();
        assert!((c - 17.196).abs() < 0.01, "{c}");
        let est = density(&quad5(), &DensityOptions::default()).unwrap();
        assert!(est.std_error < 0.01 * est.c, "{est:?}");
        assert!((est.c - c).abs() < 3.0 * est.std_error + 0.01 * c, "{} vs {c}", est.c);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn tent_bounds(l in 1.0f64..100.0, xs in proptest::collection::vec(-2.0f64..2.0, 1..4)) {
            let v = tent_product(l, &xs);
            prop_assert!(v >= 0.0 && v <= l.powi(xs.len() as i32) * (1.0 + 1e-12));
            prop_assert_eq!(tent_product(l, &vec![0.0; xs.len()]), l.powi(xs.len() as i32));
        }
    }
}

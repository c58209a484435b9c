//! The eight end-to-end acceptance criteria. Each prints one PASS/FAIL line;
//! the test fails if any criterion fails.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shiftlab::counting::{count_diagonal_mitm, count_generic, count_series, CountSpec, Method};
use shiftlab::density::{density, DensityOptions};
use shiftlab::dioph::{
    baker_search, birch_search, identity_checks, omega_ball, special_certificate, DissectionParams, SearchOptions,
};
use shiftlab::dissection::{r_plus_minus, SandwichOptions, SandwichRow};
use shiftlab::exact::{rat, rat_int, rat_to_f64};
use shiftlab::expsums::{osc_integral, shifted_s, weyl_g, QuadratureOptions, WeylSumSpec};
use shiftlab::forms::{gradient, monomials, slice, taylor_shift, ExponentVector, Form, FormSystem, Polynomial};
use shiftlab::kernels::{sandwich_grid, schedule, KernelParams, Schedule};
use shiftlab::real::{dd, Ball};
use shiftlab::shift::Shift;
use shiftlab::vandermonde::{build_directions, build_family, vandermonde_product};
use std::collections::BTreeMap;
use std::time::Instant;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: usize, name: &str, o: &Outcome) {
    println!("criterion {id} [{name}]: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
}

fn quad5() -> FormSystem {
    FormSystem::new(vec![Form::diagonal(2, &[1, 1, -1, -1, -1])], 0).unwrap()
}

fn asymptotic() -> Outcome {
    let start = Instant::now();
    let sys = quad5();
    let exp = taylor_shift(&sys);
    let mu = Shift::sqrt(2);
    let est = density(&sys, &DensityOptions::default()).unwrap();
    let rel_se = est.std_error / est.c;
    let spec = CountSpec { system: &sys, expansion: &exp, mu: &mu, tau: vec![rat(0, 1)], eta: rat(1, 4), p: 25, method: Method::Mitm };
    let rows = count_series(&spec, &[25, 50, 100, 200], est.c, u64::MAX).unwrap();
    let dev: Vec<f64> = rows.iter().map(|r| (r.ratio - 1.0).abs()).collect();
    let monotone = dev[1..].windows(2).all(|w| w[1] <= w[0]);
    let flags: u64 = rows.iter().map(|r| r.boundary_flags).sum();
    let secs = start.elapsed().as_secs_f64();
    let ratios: Vec<String> = rows.iter().map(|r| format!("P={} N={} ratio={:.4}", r.p, r.n, r.ratio)).collect();
    Outcome {
        pass: rel_se < 0.01 && dev[3] <= 0.15 && monotone && flags == 0 && secs < 300.0,
        detail: format!("c={:.6} se={:.2e} rel={:.4}; {}; flags={flags}; {secs:.1}s", est.c, est.std_error, rel_se, ratios.join(", ")),
    }
}

fn sandwich() -> Outcome {
    let start = Instant::now();
    let sys = FormSystem::new(vec![Form::diagonal(2, &[1, -1])], 0).unwrap();
    let exp = taylor_shift(&sys);
    let mu = Shift::sqrt(2);
    let params = DissectionParams::new(&exp, None).unwrap();
    let mut rows = Vec::new();
    for p in [3u64, 5, 8] {
        let spec = CountSpec { system: &sys, expansion: &exp, mu: &mu, tau: vec![rat(0, 1)], eta: rat(1, 2), p, method: Method::Generic };
        let n = count_generic(&spec, 1 << 20).unwrap();
        let k = KernelParams::new(0.5, p as f64, rat_to_f64(&params.delta));
        let s = r_plus_minus(&spec, &k, SandwichOptions::default()).unwrap();
        rows.push(SandwichRow::new(p, n.count, &s));
    }
    let secs = start.elapsed().as_secs_f64();
    let detail: Vec<String> = rows
        .iter()
        .map(|r| format!("P={}: {:.3}-{:.3} <= {} <= {:.3}+{:.3}", r.p, r.r_minus, r.tail, r.count, r.r_plus, r.tail))
        .collect();
    Outcome { pass: rows.iter().all(|r| r.holds) && secs < 120.0, detail: format!("{}; {secs:.1}s", detail.join("; ")) }
}

fn kernel_grid() -> Outcome {
    let sys = quad5();
    let params = DissectionParams::new(&taylor_shift(&sys), None).unwrap();
    let cases = [
        KernelParams::new(0.25, 200.0, rat_to_f64(&params.delta)),
        schedule(1e6, 1.0, 0.25, Schedule::Fixed(3f64.exp())),
        schedule(1e6, 1.0, 0.5, Schedule::Fixed(2f64.exp())),
    ];
    let mut worst = 0.0f64;
    let mut sandwiched = true;
    for k in &cases {
        let grid = sandwich_grid(k, 201, 1e3);
        assert_eq!(grid.len(), 201);
        worst = grid.iter().map(|g| g.max_oracle_gap()).fold(worst, f64::max);
        sandwiched &= grid.iter().all(|g| g.sandwiched());
    }
    Outcome { pass: worst <= 1e-6 && sandwiched, detail: format!("max |closed - oracle| = {worst:.2e}, sandwich {sandwiched}") }
}

fn random_form(rng: &mut ChaCha8Rng, n: usize, d: u32) -> Form {
    loop {
        let mut terms: Vec<(Vec<u32>, BigInt)> = Vec::new();
        for e in monomials(n, d) {
            if rng.gen_bool(0.6) {
                terms.push((e.0, BigInt::from(rng.gen_range(-4i64..=4))));
            }
        }
        let f = Form::new(n, d, terms).unwrap();
        if !f.is_zero() {
            return f;
        }
    }
}

fn identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut sg_worst, mut taylor_bad, mut slice_bad, mut top_bad) = (0.0f64, 0, 0, 0);
    for _ in 0..100 {
        let n = rng.gen_range(1..=3);
        let d = rng.gen_range(2..=3);
        let r = rng.gen_range(1..=2);
        let sys = FormSystem::new((0..r).map(|_| random_form(&mut rng, n, d)).collect(), 0).unwrap();
        let exp = taylor_shift(&sys);
        // exact Taylor reconstruction at rational mu and x
        let mu = rat(rng.gen_range(-9..=9), rng.gen_range(1..=7));
        let x: Vec<BigRational> = (0..n).map(|_| rat(rng.gen_range(-20..=20), rng.gen_range(1..=5))).collect();
        let y: Vec<BigRational> = x.iter().map(|v| v + &mu).collect();
        for k in 0..r {
            if exp.reconstruct(k, &mu, &x) != sys.forms()[k].eval(&y).unwrap() {
                taylor_bad += 1;
            }
            let grad = gradient(&sys.forms()[k]).into_iter().fold(Polynomial::zero(n), |a, g| a.add(&g));
            if slice(&exp, k, d - 1).unwrap().to_polynomial() != grad {
                slice_bad += 1;
            }
            if slice(&exp, k, d).unwrap() != sys.forms()[k] {
                top_bad += 1;
            }
        }
        let p = rng.gen_range(1..=5);
        let alpha: Vec<_> = (0..r).map(|_| dd(rng.gen_range(-1.0..1.0))).collect();
        for shift in [Shift::sqrt(2), Shift::sqrt(7), Shift::Rational(mu.clone())] {
            let s = shifted_s(&sys, &exp, &shift, p, &alpha, 1 << 22).unwrap();
            sg_worst = sg_worst.max(s.residual / s.direct.norm().max(1.0));
        }
    }
    Outcome {
        pass: sg_worst <= 1e-10 && taylor_bad == 0 && slice_bad == 0 && top_bad == 0,
        detail: format!("factorisation rel err {sg_worst:.2e}; taylor {taylor_bad}, gradient slice {slice_bad}, top slice {top_bad} mismatches"),
    }
}

fn vandermonde() -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    for n in 1..=3 {
        for d in 2..=4u32 {
            let fam = build_directions(n, d).and_then(|dirs| build_family(&dirs));
            let Ok(fam) = fam else {
                bad.push(format!("(n={n}, d={d}) degenerate"));
                continue;
            };
            for j in 1..=d {
                let idx = j as usize - 1;
                checked += 1;
                if fam.dets[idx].is_zero() || fam.dets[idx] != vandermonde_product(&fam.params[idx]) || fam.scaled_inverse(j).is_err() {
                    bad.push(format!("(n={n}, d={d}, j={j})"));
                }
            }
        }
    }
    Outcome { pass: bad.is_empty(), detail: format!("{checked} determinants checked; failures: {bad:?}") }
}

fn certificates() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let opts = SearchOptions::default();
    // Birch: alpha = a/q + eps
    let mut birch_ok = 0;
    let p_b = rat_int(1_000_000);
    for i in 0..500 {
        let r = if i % 5 == 0 { 2 } else { 1 };
        let theta = if r == 1 { rat(1, 2) } else { rat(1, 4) };
        let q = rng.gen_range(1i64..=200);
        let a: Vec<i64> = (0..r).map(|_| rng.gen_range(0..q)).collect();
        let g = a.iter().fold(q, |g, &x| g.gcd(&x));
        let alpha: Vec<Ball> = a
            .iter()
            .map(|&x| Ball::exact(rat(x, q) + rat(rng.gen_range(-100..=100), 1_000_000_000_000_000)))
            .collect();
        if let Ok(Some(c)) = birch_search(&alpha, &p_b, &theta, 2, opts) {
            if c.q == BigInt::from(q / g) && c.a.iter().zip(&a).all(|(u, &v)| *u == BigInt::from(v / g)) {
                birch_ok += 1;
            }
        }
    }
    // Baker: omega_j = a_j / r + eps over the index of a binary quadratic
    let idx: Vec<ExponentVector> = (1..=2).flat_map(|j| monomials(2, j)).collect();
    let p_k = rat_int(100_000_000);
    let mut baker_ok = 0;
    for _ in 0..100 {
        let r = rng.gen_range(1i64..=100);
        let a: Vec<i64> = idx.iter().map(|_| rng.gen_range(0..r)).collect();
        let g = a.iter().fold(r, |g, &x| g.gcd(&x));
        let w: BTreeMap<ExponentVector, Ball> = idx
            .iter()
            .zip(&a)
            .map(|(j, &x)| (j.clone(), Ball::exact(rat(x, r) + rat(rng.gen_range(-9..=9), 10_000_000_000_000_000))))
            .collect();
        if let Ok(Some(c)) = baker_search(&w, &p_k, &rat(1, 2), opts) {
            if c.r == BigInt::from(r / g) && idx.iter().zip(&a).all(|(j, &x)| c.a.get(j).cloned().unwrap_or_default() == BigInt::from(x / g)) {
                baker_ok += 1;
            }
        }
    }
    // identity checks on exact rational alpha with rational mu
    let p_i = rat_int(10_000);
    let (mut consistent, mut consistent_ok, mut controls) = (0, 0, [0usize; 3]);
    let mut attempts = 0;
    while consistent < 30 && attempts < 1000 {
        attempts += 1;
        let n = rng.gen_range(1..=3);
        let sys = FormSystem::new(vec![random_form(&mut rng, n, 2)], 0).unwrap();
        let exp = taylor_shift(&sys);
        let q = rng.gen_range(1i64..=6);
        let alpha = vec![Ball::exact(rat(rng.gen_range(0..q), q))];
        let mu = Shift::Rational(rat(rng.gen_range(-4..=4), rng.gen_range(1..=3)));
        let Ok(Some(birch)) = birch_search(&alpha, &p_i, &rat(1, 2), 2, opts) else { continue };
        let Ok(w) = omega_ball(&alpha, &exp, &mu) else { continue };
        let Ok(Some(baker)) = baker_search(&w, &p_i, &rat(1, 2), opts) else { continue };
        let Ok(special) = special_certificate(&exp, &baker) else { continue };
        consistent += 1;
        if identity_checks(&exp, &birch, &baker, &special).passed() {
            consistent_ok += 1;
        }
        let mut b1 = birch.clone();
        b1.a[0] += 1;
        if !identity_checks(&exp, &b1, &baker, &special).passed() {
            controls[0] += 1;
        }
        let mut k2 = baker.clone();
        let top = monomials(n, 2)[0].clone();
        *k2.a.entry(top).or_insert_with(BigInt::zero) += 1;
        if !identity_checks(&exp, &birch, &k2, &special).passed() {
            controls[1] += 1;
        }
        let mut b3 = birch.clone();
        b3.q = &birch.q * BigInt::from(1_000_003);
        b3.a = birch.a.iter().map(|a| a * BigInt::from(1_000_003)).collect();
        if !identity_checks(&exp, &b3, &baker, &special).passed() {
            controls[2] += 1;
        }
    }
    let pass = birch_ok == 500 && baker_ok == 100 && consistent >= 30 && consistent_ok == consistent && controls.iter().all(|&c| c == consistent);
    Outcome {
        pass,
        detail: format!(
            "birch {birch_ok}/500, baker {baker_ok}/100, identities {consistent_ok}/{consistent}, controls rejected {controls:?} of {consistent}"
        ),
    }
}

fn mitm_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let shifts = [
        Shift::sqrt(2),
        Shift::sqrt(3),
        Shift::sqrt(5),
        Shift::Rational(rat(1, 2)),
        Shift::Rational(rat(-2, 3)),
        Shift::parse("decimal", "1.7320508").unwrap(),
    ];
    let mut agree = 0;
    let mut total_points = 0u64;
    for _ in 0..200 {
        let n = rng.gen_range(1..=5);
        let d = rng.gen_range(2..=3);
        let r = rng.gen_range(1..=2);
        let pmax = ((100_000f64).powf(1.0 / n as f64) as u64 - 1) / 2;
        let p = rng.gen_range(0..=pmax.min(12));
        let forms: Vec<Form> = (0..r)
            .map(|_| {
                let c: Vec<i64> = (0..n).map(|_| rng.gen_range(-5..=5)).collect();
                if c.iter().all(|&x| x == 0) {
                    Form::diagonal(d, &vec![1; n])
                } else {
                    Form::diagonal(d, &c)
                }
            })
            .collect();
        let sys = FormSystem::new(forms, 0).unwrap();
        let exp = taylor_shift(&sys);
        let mu = &shifts[rng.gen_range(0..shifts.len())];
        let scale = (p as i64).pow(d).max(1);
        let tau: Vec<BigRational> = (0..r).map(|_| rat(rng.gen_range(-4 * scale..=4 * scale), rng.gen_range(1..=4))).collect();
        let eta = rat(rng.gen_range(1..=4 * scale), rng.gen_range(1..=8));
        let spec = CountSpec { system: &sys, expansion: &exp, mu, tau, eta, p, method: Method::Generic };
        let g = count_generic(&spec, 100_000).unwrap();
        let m = count_diagonal_mitm(&spec).unwrap();
        total_points += (2 * p + 1).pow(n as u32);
        if g.count == m.count && g.boundary_flags == m.boundary_flags {
            agree += 1;
        }
    }
    Outcome { pass: agree == 200, detail: format!("{agree}/200 instances agree; {total_points} lattice points") }
}

fn residual_slope() -> Outcome {
    let sys = FormSystem::new(vec![Form::from_i64(2, 2, &[(&[2, 0], 1), (&[1, 1], 1), (&[0, 2], -2)]).unwrap()], 0).unwrap();
    let samples: [(f64, f64, f64); 4] = [(0.3, 0.5, -0.25), (-0.7, 0.0, 0.4), (1.1, -0.6, 0.2), (0.05, 0.9, 0.9)];
    let ps = [4u64, 8, 16, 32];
    let mut pts = Vec::new();
    for &p in &ps {
        let pf = p as f64;
        let mut worst = 0.0f64;
        for &(g, h1, h2) in &samples {
            let mut om = BTreeMap::new();
            om.insert(ExponentVector(vec![1, 0]), dd(h1 / pf));
            om.insert(ExponentVector(vec![0, 1]), dd(h2 / pf));
            let gs = weyl_g(&WeylSumSpec { system: &sys, p, alpha: vec![dd(g / (pf * pf))], omega_diamond: om }, 1 << 20).unwrap();
            let mut gd = BTreeMap::new();
            gd.insert(ExponentVector(vec![1, 0]), h1);
            gd.insert(ExponentVector(vec![0, 1]), h2);
            let i = osc_integral(&sys, &[g], &gd, QuadratureOptions::default()).unwrap();
            worst = worst.max((gs - i.value * pf * pf).norm());
        }
        pts.push((pf.ln(), worst.ln()));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    Outcome { pass: slope <= 1.2, detail: format!("fitted exponent {slope:.3} (bound 1.2)") }
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("asymptotic ratio", asymptotic),
        ("unconditional sandwich", sandwich),
        ("kernel sandwich grid", kernel_grid),
        ("exact identities", identities),
        ("vandermonde family", vandermonde),
        ("certificate round-trips", certificates),
        ("mitm oracle equivalence", mitm_oracle),
        ("weyl residual scaling", residual_slope),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        report(i + 1, name, &o);
        if !o.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

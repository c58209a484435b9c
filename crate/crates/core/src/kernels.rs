//! Freeman's kernel pair
//! `K±(a) = sin(pi a rho) sin(pi a (2 eta ± rho)) / (pi^2 a^2 rho)`,
//! their trapezoidal Fourier transforms, and the `T(P)`, `L(P)`, `rho` schedule.

use crate::quadrature::composite;
use crate::real::sinc;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    fn s(self) -> f64 {
        match self {
            Sign::Minus => -1.0,
            Sign::Plus => 1.0,
        }
    }
}

/// How `T(P)` is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Schedule {
    /// `T(P) = min(P^delta, P, 1 + ln(1 + P))`.
    Log,
    /// A fixed `T`, for experiments that need `L > 1` at small `P`.
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelParams {
    pub eta: f64,
    pub p: f64,
    pub t: f64,
    pub l: f64,
    pub rho: f64,
}

/// `(T, L, rho)` with `L = max(1, ln T)` and `rho = eta / L`.
pub fn schedule(p: f64, delta: f64, eta: f64, how: Schedule) -> KernelParams {
    let t = match how {
        Schedule::Log => p.powf(delta).min(p).min(1.0 + (1.0 + p).ln()).max(1.0),
        Schedule::Fixed(t) => t.max(1.0),
    };
    let l = t.ln().max(1.0);
    KernelParams { eta, p, t, l, rho: eta / l }
}

impl KernelParams {
    pub fn new(eta: f64, p: f64, delta: f64) -> Self {
        schedule(p, delta, eta, Schedule::Log)
    }

    /// `2 eta ± rho`.
    pub fn width(&self, sign: Sign) -> f64 {
        2.0 * self.eta + sign.s() * self.rho
    }
}

pub fn kernel(sign: Sign, alpha: f64, k: &KernelParams) -> f64 {
    let b = k.width(sign);
    b * sinc(PI * alpha * k.rho) * sinc(PI * alpha * b)
}

/// `prod_k K±(alpha_k)`.
pub fn product_kernel(sign: Sign, alpha: &[f64], k: &KernelParams) -> f64 {
    alpha.iter().map(|&a| kernel(sign, a, k)).product()
}

/// Literal decay bound `|K±(a)| <= min(2 eta ± rho, L / (pi^2 eta a^2))`.
pub fn kernel_bound(sign: Sign, alpha: f64, k: &KernelParams) -> f64 {
    let b = k.width(sign);
    if alpha == 0.0 {
        b
    } else {
        b.min(k.l / (PI * PI * k.eta * alpha * alpha))
    }
}

/// The constant `C` in `|K±(a)| a^2 / L <= C`.
pub fn decay_constant(k: &KernelParams) -> f64 {
    1.0 / (PI * PI * k.eta)
}

/// `int e(a t) K±(a) da`: overlap of `[t - rho/2, t + rho/2]` with
/// `[-b/2, b/2]`, divided by `rho`.
pub fn kernel_ft(sign: Sign, t: f64, k: &KernelParams) -> f64 {
    let b = k.width(sign);
    let top = (b / k.rho).min(1.0);
    let e = t.abs();
    let inner = 0.5 * (b - k.rho).abs();
    let outer = 0.5 * (b + k.rho);
    if e <= inner {
        top
    } else if e >= outer {
        0.0
    } else {
        ((outer - e) / k.rho).min(top)
    }
}

/// Indicator of `|t| < eta`.
pub fn band_indicator(t: f64, eta: f64) -> f64 {
    if t.abs() < eta {
        1.0
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FtOracle {
    pub estimate: f64,
    /// Bound on what the truncation at `|a| = A` leaves unaccounted for.
    pub tail_bound: f64,
    pub cutoff: f64,
}

/// Numerical `int e(a t) K±(a) da` over `|a| <= A = cutoff_mult / rho` by composite
/// Gauss-Legendre, plus the tail beyond `A` computed term by term from
/// `2 cos(2 pi t a) K(a) = (2 pi^2 rho a^2)^-1 sum_i s_i cos(w_i a)`.
pub fn kernel_ft_oracle(sign: Sign, t: f64, k: &KernelParams, cutoff_mult: f64) -> FtOracle {
    let a = cutoff_mult / k.rho;
    let b = k.width(sign);
    let panels = (2.0 * a).ceil() as usize;
    let body = 2.0 * composite(|x| (2.0 * PI * t * x).cos() * kernel(sign, x, k), 0.0, a, panels, 16);
    let coef = 1.0 / (2.0 * PI * PI * k.rho);
    let terms = [
        (1.0, 2.0 * PI * (t + 0.5 * (b - k.rho))),
        (1.0, 2.0 * PI * (t - 0.5 * (b - k.rho))),
        (-1.0, 2.0 * PI * (t + 0.5 * (b + k.rho))),
        (-1.0, 2.0 * PI * (t - 0.5 * (b + k.rho))),
    ];
    let mut tail = 0.0;
    let mut bound = 0.0;
    for (s, w) in terms {
        let wa = w.abs() * a;
        if wa < 1e-6 {
            // int_A^inf cos(w x) / x^2 = 1/A - |w| pi/2 + O(w^2 A)
            tail += s * coef / a;
            bound += coef * (w.abs() * PI / 2.0 + 2.0 * w * w * a);
        } else if wa >= 50.0 {
            tail += s * coef * (-(w * a).sin() / (w * a * a) + 2.0 * (w * a).cos() / (w * w * a * a * a));
            bound += coef * 2.0 / (w * w * a * a * a);
        } else {
            bound += coef * (1.0 / a).min(2.0 / (w.abs() * a * a));
        }
    }
    FtOracle { estimate: body + tail, tail_bound: bound, cutoff: a }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GridRow {
    pub t: f64,
    pub ft_minus: f64,
    pub ft_plus: f64,
    pub oracle_minus: f64,
    pub oracle_plus: f64,
    pub indicator: f64,
}

impl GridRow {
    pub fn max_oracle_gap(&self) -> f64 {
        (self.ft_minus - self.oracle_minus).abs().max((self.ft_plus - self.oracle_plus).abs())
    }

    /// `0 <= ft- <= U <= ft+ <= 1`.
    pub fn sandwiched(&self) -> bool {
        0.0 <= self.ft_minus && self.ft_minus <= self.indicator && self.indicator <= self.ft_plus && self.ft_plus <= 1.0
    }
}

/// Closed form against the quadrature oracle on `points` equally spaced
/// `t` in `[-2 eta, 2 eta]`.
pub fn sandwich_grid(k: &KernelParams, points: usize, cutoff_mult: f64) -> Vec<GridRow> {
    use rayon::prelude::*;
    let step = if points > 1 { 4.0 * k.eta / (points - 1) as f64 } else { 0.0 };
    (0..points)
        .into_par_iter()
        .map(|i| {
            let t = -2.0 * k.eta + step * i as f64;
            GridRow {
                t,
                ft_minus: kernel_ft(Sign::Minus, t, k),
                ft_plus: kernel_ft(Sign::Plus, t, k),
                oracle_minus: kernel_ft_oracle(Sign::Minus, t, k, cutoff_mult).estimate,
                oracle_plus: kernel_ft_oracle(Sign::Plus, t, k, cutoff_mult).estimate,
                indicator: band_indicator(t, k.eta),
            }
        })
        .collect()
}

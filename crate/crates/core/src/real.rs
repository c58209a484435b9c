//! Double-double reals, reduced phases and compensated complex sums.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use std::f64::consts::PI;
use twofloat::TwoFloat;

pub type Dd = TwoFloat;

pub fn dd(x: f64) -> Dd {
    TwoFloat::from(x)
}

/// Nearest double-double to an exact rational.
pub fn dd_from_rational(x: &BigRational) -> Dd {
    let hi = x.to_f64().unwrap_or(0.0);
    if !hi.is_finite() {
        return dd(hi);
    }
    let Some(hr) = BigRational::from_float(hi) else {
        return dd(hi);
    };
    let lo = (x - hr).to_f64().unwrap_or(0.0);
    TwoFloat::new_add(hi, lo)
}

pub fn dd_from_int(x: &BigInt) -> Dd {
    dd_from_rational(&BigRational::from_integer(x.clone()))
}

pub fn dd_from_i128(x: i128) -> Dd {
    let hi = x as f64;
    let lo = (x - hi as i128) as f64;
    TwoFloat::new_add(hi, lo)
}

/// Exact rational value of a double-double.
pub fn dd_to_rational(x: Dd) -> BigRational {
    let h = BigRational::from_float(x.hi()).unwrap_or_else(BigRational::zero);
    let l = BigRational::from_float(x.lo()).unwrap_or_else(BigRational::zero);
    h + l
}

/// Fractional part in `[0, 1)` of a double-double, rounded to `f64`.
pub fn frac(x: Dd) -> f64 {
    let f = x - x.floor();
    let v = f.hi() + f.lo();
    if v >= 1.0 {
        v - 1.0
    } else if v < 0.0 {
        v + 1.0
    } else {
        v
    }
}

/// `frac(a * m)` for an integer `m`, evaluated in double-double.
pub fn frac_mul(a: Dd, m: i128) -> f64 {
    frac(a * dd_from_i128(m))
}

/// `e(x) = exp(2 pi i x)`.
pub fn e(x: f64) -> Complex64 {
    let (s, c) = (2.0 * PI * x).sin_cos();
    Complex64::new(c, s)
}

/// `e(x)` for a double-double phase, reduced mod 1 first.
pub fn e_dd(x: Dd) -> Complex64 {
    e(frac(x))
}

/// Neumaier-compensated complex accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CSum {
    re: f64,
    re_c: f64,
    im: f64,
    im_c: f64,
}

fn neumaier(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

impl CSum {
    pub fn add(&mut self, z: Complex64) {
        neumaier(&mut self.re, &mut self.re_c, z.re);
        neumaier(&mut self.im, &mut self.im_c, z.im);
    }

    pub fn merge(&mut self, other: &CSum) {
        self.add(Complex64::new(other.re, other.im));
        self.add(Complex64::new(other.re_c, other.im_c));
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re + self.re_c, self.im + self.im_c)
    }
}

/// Neumaier-compensated real accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct RSum {
    s: f64,
    c: f64,
}

impl RSum {
    pub fn add(&mut self, x: f64) {
        neumaier(&mut self.s, &mut self.c, x);
    }

    pub fn value(&self) -> f64 {
        self.s + self.c
    }
}

/// `sin(x)/x` with the removable point handled by its series.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// A rational midpoint with a rational error radius.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ball {
    pub mid: BigRational,
    pub rad: BigRational,
}

impl Ball {
    pub fn exact(x: BigRational) -> Self {
        Ball { mid: x, rad: BigRational::zero() }
    }

    pub fn from_bounds(lo: &BigRational, hi: &BigRational) -> Self {
        let two = BigRational::from_integer(BigInt::from(2));
        Ball { mid: (lo + hi) / &two, rad: (hi - lo) / two }
    }

    /// The double-double `x` taken as exact, with extra radius `err`.
    pub fn from_dd(x: Dd, err: f64) -> Self {
        Ball {
            mid: dd_to_rational(x),
            rad: BigRational::from_float(err.abs()).unwrap_or_else(BigRational::zero),
        }
    }

    pub fn lo(&self) -> BigRational {
        &self.mid - &self.rad
    }

    pub fn hi(&self) -> BigRational {
        &self.mid + &self.rad
    }

    pub fn add(&self, o: &Ball) -> Ball {
        Ball { mid: &self.mid + &o.mid, rad: &self.rad + &o.rad }
    }

    pub fn mul(&self, o: &Ball) -> Ball {
        use num_traits::Signed;
        Ball {
            mid: &self.mid * &o.mid,
            rad: self.mid.abs() * &o.rad + o.mid.abs() * &self.rad + &self.rad * &o.rad,
        }
    }

    pub fn scale(&self, k: &BigRational) -> Ball {
        use num_traits::Signed;
        Ball { mid: &self.mid * k, rad: &self.rad * k.abs() }
    }

    pub fn pow(&self, m: usize) -> Ball {
        let mut acc = Ball::exact(BigRational::from_integer(BigInt::from(1)));
        for _ in 0..m {
            acc = acc.mul(self);
        }
        acc
    }

    /// Enclosure of `|self - a|`.
    pub fn dist_to(&self, a: &BigRational) -> (BigRational, BigRational) {
        use num_traits::Signed;
        let c = (&self.mid - a).abs();
        let lo = &c - &self.rad;
        let lo = if lo.is_negative() { BigRational::zero() } else { lo };
        (lo, c + &self.rad)
    }

    pub fn to_dd(&self) -> Dd {
        dd_from_rational(&self.mid)
    }

    pub fn to_f64(&self) -> f64 {
        self.mid.to_f64().unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    #[test]
    fn rational_round_trip() {
        let x = rat(1, 3);
        let d = dd_from_rational(&x);
        let err = (dd_to_rational(d) - &x).to_f64().unwrap().abs();
        assert!(err < 1e-32);
    }

    #[test]
    fn fractional_parts() {
        assert!((frac(dd(2.25)) - 0.25).abs() < 1e-16);
        assert!((frac(dd(-0.25)) - 0.75).abs() < 1e-16);
        let third = dd_from_rational(&rat(1, 3));
        // 3^30 / 3 is an integer plus one third of the residue
        let m: i128 = 3i128.pow(30) + 1;
        assert!((frac_mul(third, m) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn compensated_sum_cancels() {
        let mut s = CSum::default();
        s.add(Complex64::new(1e16, 1.0));
        s.add(Complex64::new(1.0, 0.0));
        s.add(Complex64::new(-1e16, 0.0));
        assert_eq!(s.value().re, 1.0);
        let mut r = RSum::default();
        for x in [1e16, 1.0, -1e16] {
            r.add(x);
        }
        assert_eq!(r.value(), 1.0);
    }

    #[test]
    fn sinc_limits() {
        assert_eq!(sinc(0.0), 1.0);
        assert!((sinc(PI)).abs() < 1e-16);
        assert!((sinc(1e-5) - (1e-5f64).sin() / 1e-5).abs() < 1e-15);
    }
}

//! The shift `mu`: exact rationals, quadratic irrationals `(p + q sqrt D) / r`
//! and decimal literals carrying their own error radius.

use crate::error::{Error, Result};
use crate::exact::{decimal_places, floor_rat, parse_int, parse_rational, rat_to_f64};
use crate::real::{dd_from_int, dd_from_rational, Dd};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;

/// `(p + q sqrt(d)) / r` with `d > 0` not a square, `q != 0`, `r > 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadraticMu {
    pub p: BigInt,
    pub q: BigInt,
    pub d: BigInt,
    pub r: BigInt,
}

/// A decimal literal `mid` known to lie within `radius` of the true value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecimalMu {
    pub literal: String,
    pub mid: BigRational,
    pub radius: BigRational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IrrationalMu {
    Quadratic(QuadraticMu),
    Decimal(DecimalMu),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Shift {
    Rational(BigRational),
    Irrational(IrrationalMu),
}

impl QuadraticMu {
    pub fn new(p: BigInt, q: BigInt, d: BigInt, r: BigInt) -> Result<Self> {
        if !d.is_positive() {
            return Err(Error::Invalid("radicand must be positive".into()));
        }
        let s = d.sqrt();
        if &s * &s == d {
            return Err(Error::Invalid(format!("radicand {d} is a perfect square")));
        }
        if q.is_zero() || r.is_zero() {
            return Err(Error::Invalid("q and r must be nonzero".into()));
        }
        let (p, q, r) = if r.is_negative() { (-p, -q, -r) } else { (p, q, r) };
        Ok(QuadraticMu { p, q, d, r })
    }

    pub fn sqrt(d: i64) -> Result<Self> {
        Self::new(BigInt::zero(), BigInt::one(), BigInt::from(d), BigInt::one())
    }

    /// Parses `sqrt(D)`, `q*sqrt(D)`, `p+q*sqrt(D)` or `(p+q*sqrt(D))/r`.
    pub fn parse(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::parse(format!("{s:?}"), "expected (p+q*sqrt(D))/r");
        let (inner, r) = if let Some(rest) = t.strip_prefix('(') {
            let close = rest.rfind(")/").ok_or_else(bad)?;
            (rest[..close].to_string(), parse_int(&rest[close + 2..])?)
        } else {
            (t.clone(), BigInt::one())
        };
        let at = inner.find("sqrt(").ok_or_else(bad)?;
        let close = inner[at..].find(')').ok_or_else(bad)? + at;
        let d = parse_int(&inner[at + 5..close])?;
        if close + 1 != inner.len() {
            return Err(bad());
        }
        let head = inner[..at].strip_suffix('*').unwrap_or(&inner[..at]);
        // head is "", "-", "q", "p+", "p-q", "p+q", ...
        let split = head
            .char_indices()
            .skip(1)
            .filter(|&(_, c)| c == '+' || c == '-')
            .map(|(i, _)| i)
            .last();
        let (p_str, q_str) = match split {
            Some(i) => (&head[..i], &head[i..]),
            None => ("", head),
        };
        let p = if p_str.is_empty() {
            BigInt::zero()
        } else {
            parse_int(p_str)?
        };
        let q = match q_str {
            "" | "+" => BigInt::one(),
            "-" => -BigInt::one(),
            other => parse_int(other.strip_prefix('+').unwrap_or(other))?,
        };
        Self::new(p, q, d, r)
    }

    pub fn value_dd(&self) -> Dd {
        let root = dd_from_int(&self.d).sqrt();
        (dd_from_int(&self.p) + dd_from_int(&self.q) * root) / dd_from_int(&self.r)
    }

    /// Rigorous rational enclosure of width about `2^-bits`.
    pub fn enclosure(&self, bits: u32) -> (BigRational, BigRational) {
        let scale = BigInt::one() << (2 * bits as usize);
        let s = (&self.d * &scale).sqrt();
        let den = BigInt::one() << bits as usize;
        let lo_root = BigRational::new(s.clone(), den.clone());
        let hi_root = BigRational::new(s + 1, den);
        let q = BigRational::from_integer(self.q.clone());
        let (a, b) = if self.q.is_positive() {
            (&q * &lo_root, &q * &hi_root)
        } else {
            (&q * &hi_root, &q * &lo_root)
        };
        let p = BigRational::from_integer(self.p.clone());
        let r = BigRational::from_integer(self.r.clone());
        ((&p + a) / &r, (&p + b) / &r)
    }

    /// Partial quotients of the (infinite, eventually periodic) continued fraction.
    pub fn partial_quotients(&self, count: usize) -> Vec<BigInt> {
        let sign = BigInt::from(if self.q.is_negative() { -1 } else { 1 });
        let mut dd = &self.q * &self.q * &self.d;
        let mut pp: BigInt = &self.p * &sign;
        let mut qq: BigInt = &self.r * &sign;
        let disc: BigInt = &dd - &pp * &pp;
        if !disc.is_multiple_of(&qq) {
            let aq = qq.abs();
            pp *= &aq;
            dd *= &qq * &qq;
            qq *= &aq;
        }
        let root: BigInt = dd.sqrt();
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let fl: BigInt = &pp + &root;
            let a = if qq.is_positive() {
                fl.div_floor(&qq)
            } else {
                let neg: BigInt = -&qq;
                -(fl.div_floor(&neg) + BigInt::one())
            };
            let np = &a * &qq - &pp;
            let nq = (&dd - &np * &np) / &qq;
            out.push(a);
            pp = np;
            qq = nq;
        }
        out
    }

    /// `(A, B)` with `(p + q sqrt d)^m = A + B sqrt d`.
    fn power(&self, m: usize) -> (BigInt, BigInt) {
        let (mut a, mut b) = (BigInt::one(), BigInt::zero());
        for _ in 0..m {
            let na = &a * &self.p + &b * &self.q * &self.d;
            let nb = &a * &self.q + &b * &self.p;
            a = na;
            b = nb;
        }
        (a, b)
    }
}

/// Sign of `a + b sqrt(d)` for nonsquare `d > 0`.
pub fn sign_quadratic(a: &BigInt, b: &BigInt, d: &BigInt) -> Ordering {
    let za = a.sign();
    let zb = b.sign();
    use num_bigint::Sign::*;
    match (za, zb) {
        (NoSign, NoSign) => Ordering::Equal,
        (Plus | NoSign, Plus | NoSign) => Ordering::Greater,
        (Minus | NoSign, Minus | NoSign) => Ordering::Less,
        (Plus, Minus) => (a * a).cmp(&(b * b * d)),
        (Minus, Plus) => (b * b * d).cmp(&(a * a)),
    }
}

fn rational_partial_quotients(x: &BigRational, count: usize) -> Vec<BigInt> {
    let mut out = Vec::new();
    let (mut n, mut d) = (x.numer().clone(), x.denom().clone());
    while out.len() < count && !d.is_zero() {
        let a = n.div_floor(&d);
        let rem = &n - &a * &d;
        out.push(a);
        n = d;
        d = rem;
    }
    out
}

fn convergents_from(quotients: &[BigInt]) -> Vec<(BigInt, BigInt)> {
    let (mut h1, mut h2) = (BigInt::one(), BigInt::zero());
    let (mut k1, mut k2) = (BigInt::zero(), BigInt::one());
    quotients
        .iter()
        .map(|a| {
            let h = a * &h1 + &h2;
            let k = a * &k1 + &k2;
            h2 = std::mem::replace(&mut h1, h.clone());
            k2 = std::mem::replace(&mut k1, k.clone());
            (h, k)
        })
        .collect()
}

impl DecimalMu {
    /// A decimal literal; the radius is one unit in its last stated place.
    pub fn parse(literal: &str) -> Result<Self> {
        let mid = parse_rational(literal)?;
        let places = decimal_places(literal);
        let radius = BigRational::new(BigInt::one(), num_traits::pow(BigInt::from(10), places));
        Ok(DecimalMu {
            literal: literal.trim().to_string(),
            mid,
            radius,
        })
    }
}

impl Shift {
    pub fn sqrt(d: i64) -> Self {
        Shift::Irrational(IrrationalMu::Quadratic(QuadraticMu::sqrt(d).expect("nonsquare")))
    }

    pub fn rational(x: BigRational) -> Self {
        Shift::Rational(x)
    }

    /// Parses a `(kind, literal)` pair: kind is `rational`, `quadratic` or `decimal`.
    pub fn parse(kind: &str, literal: &str) -> Result<Self> {
        match kind {
            "rational" => Ok(Shift::Rational(parse_rational(literal)?)),
            "quadratic" => Ok(Shift::Irrational(IrrationalMu::Quadratic(QuadraticMu::parse(
                literal,
            )?))),
            "decimal" => Ok(Shift::Irrational(IrrationalMu::Decimal(DecimalMu::parse(
                literal,
            )?))),
            other => Err(Error::parse(
                "mu.kind",
                format!("unknown kind {other:?}; expected rational, quadratic or decimal"),
            )),
        }
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, Shift::Rational(_))
    }

    pub fn value_dd(&self) -> Dd {
        match self {
            Shift::Rational(x) => dd_from_rational(x),
            Shift::Irrational(IrrationalMu::Quadratic(q)) => q.value_dd(),
            Shift::Irrational(IrrationalMu::Decimal(d)) => dd_from_rational(&d.mid),
        }
    }

    pub fn value_f64(&self) -> f64 {
        let v = self.value_dd();
        v.hi() + v.lo()
    }

    /// Error radius of `value_dd` as a statement about the true shift.
    pub fn radius_f64(&self) -> f64 {
        match self {
            Shift::Irrational(IrrationalMu::Decimal(d)) => rat_to_f64(&d.radius) * 1.000001,
            _ => 0.0,
        }
    }

    pub fn enclosure(&self, bits: u32) -> (BigRational, BigRational) {
        match self {
            Shift::Rational(x) => (x.clone(), x.clone()),
            Shift::Irrational(IrrationalMu::Quadratic(q)) => q.enclosure(bits),
            Shift::Irrational(IrrationalMu::Decimal(d)) => (&d.mid - &d.radius, &d.mid + &d.radius),
        }
    }

    /// Continued-fraction convergents `(p, q)`; for decimal literals only the
    /// prefix shared by both ends of the enclosure is returned.
    pub fn convergents(&self, count: usize) -> Vec<(BigInt, BigInt)> {
        let quotients = match self {
            Shift::Rational(x) => rational_partial_quotients(x, count),
            Shift::Irrational(IrrationalMu::Quadratic(q)) => q.partial_quotients(count),
            Shift::Irrational(IrrationalMu::Decimal(d)) => {
                let lo = rational_partial_quotients(&(&d.mid - &d.radius), count + 1);
                let hi = rational_partial_quotients(&(&d.mid + &d.radius), count + 1);
                let common = lo.iter().zip(&hi).take_while(|(a, b)| a == b).count();
                // the last shared quotient may still differ in the true value
                lo[..common.saturating_sub(1).min(count)].to_vec()
            }
        };
        convergents_from(&quotients)
    }

    /// Compares `sum_m c[m] mu^m` with `t`; `None` when the enclosure cannot decide.
    pub fn cmp_poly(&self, c: &[BigInt], t: &BigRational) -> Option<Ordering> {
        match self {
            Shift::Rational(x) => {
                let mut v = BigRational::zero();
                for cm in c.iter().rev() {
                    v = v * x + BigRational::from_integer(cm.clone());
                }
                Some(v.cmp(t))
            }
            Shift::Irrational(IrrationalMu::Quadratic(q)) => {
                let deg = c.len().saturating_sub(1);
                let (mut a, mut b) = (BigInt::zero(), BigInt::zero());
                for (m, cm) in c.iter().enumerate() {
                    if cm.is_zero() {
                        continue;
                    }
                    let (pa, pb) = q.power(m);
                    let w = cm * num_traits::pow(q.r.clone(), deg - m);
                    a += &w * pa;
                    b += &w * pb;
                }
                let rd = num_traits::pow(q.r.clone(), deg);
                let a2 = &a * t.denom() - t.numer() * rd;
                let b2 = &b * t.denom();
                Some(sign_quadratic(&a2, &b2, &q.d))
            }
            Shift::Irrational(IrrationalMu::Decimal(d)) => {
                let mut v = BigRational::zero();
                for cm in c.iter().rev() {
                    v = v * &d.mid + BigRational::from_integer(cm.clone());
                }
                let am = d.mid.abs();
                let wide = &am + &d.radius;
                let mut bound = BigRational::zero();
                let (mut pw, mut pm) = (BigRational::one(), BigRational::one());
                for cm in c.iter() {
                    bound += BigRational::from_integer(cm.abs()) * (&pw - &pm);
                    pw *= &wide;
                    pm *= &am;
                }
                if &v - &bound > *t {
                    Some(Ordering::Greater)
                } else if &v + &bound < *t {
                    Some(Ordering::Less)
                } else {
                    None
                }
            }
        }
    }

    /// Floor of the shift, decided on a rigorous enclosure.
    pub fn floor(&self) -> Option<BigInt> {
        let (lo, hi) = self.enclosure(128);
        let (a, b) = (floor_rat(&lo), floor_rat(&hi));
        (a == b).then_some(a)
    }
}

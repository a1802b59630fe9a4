//! Dense univariate polynomials over ℚ and the rational functions built
//! from them. Used for flow-parameter polynomials and for the linear
//! eliminations behind moment-generating-function ODEs.

use std::fmt;

use num::{One, Signed, Zero};

use crate::kernel::rational::{format_rat, Rat};

/// A univariate polynomial with exact rational coefficients, lowest
/// degree first. The zero polynomial has no coefficients.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Poly {
    coeffs: Vec<Rat>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<Rat>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(Rat::one())
    }

    pub fn constant(c: Rat) -> Self {
        Poly::new(vec![c])
    }

    /// The monomial c·x^k.
    pub fn monomial(c: Rat, k: usize) -> Self {
        let mut coeffs = vec![Rat::zero(); k + 1];
        coeffs[k] = c;
        Poly::new(coeffs)
    }

    pub fn x() -> Self {
        Poly::monomial(Rat::one(), 1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; zero polynomial reports `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, k: usize) -> Rat {
        self.coeffs.get(k).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn leading(&self) -> Rat {
        self.coeffs.last().cloned().unwrap_or_else(Rat::zero)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            out.push(self.coeff(k) + other.coeff(k));
        }
        Poly::new(out)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| -c.clone()).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Rat::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn scale(&self, s: &Rat) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        Poly::new(
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(k, c)| c * Rat::from_integer(((k + 1) as i64).into()))
                .collect(),
        )
    }

    /// Antiderivative with zero constant term.
    pub fn integral(&self) -> Poly {
        let mut out = vec![Rat::zero()];
        for (k, c) in self.coeffs.iter().enumerate() {
            out.push(c / Rat::from_integer(((k + 1) as i64).into()));
        }
        Poly::new(out)
    }

    /// Euclidean division: (quotient, remainder).
    pub fn div_rem(&self, d: &Poly) -> (Poly, Poly) {
        assert!(!d.is_zero(), "division by zero polynomial");
        let mut rem = self.clone();
        let mut quo = Poly::zero();
        let dd = d.degree().unwrap();
        let dl = d.leading();
        while let Some(rd) = rem.degree() {
            if rd < dd {
                break;
            }
            let t = Poly::monomial(rem.leading() / &dl, rd - dd);
            quo = quo.add(&t);
            rem = rem.sub(&t.mul(d));
        }
        (quo, rem)
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, other: &Poly) -> Poly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            let lead = a.leading();
            a.scale(&lead.recip())
        }
    }

    /// Divides all coefficients by their content (gcd of numerators over
    /// lcm of denominators) and makes the leading coefficient positive.
    pub fn primitive_normalized(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        use num::bigint::BigInt;
        use num::Integer;
        let mut num_gcd = BigInt::zero();
        let mut den_lcm = BigInt::one();
        for c in &self.coeffs {
            num_gcd = num_gcd.gcd(c.numer());
            den_lcm = den_lcm.lcm(c.denom());
        }
        let scale = Rat::new(den_lcm, num_gcd);
        let mut out = self.scale(&scale);
        if out.leading().is_negative() {
            out = out.neg();
        }
        out
    }

    pub fn format(&self, var: &str) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let cs = format_rat(c);
            let term = match k {
                0 => cs,
                1 if c.is_one() => var.to_string(),
                1 => format!("{cs}*{var}"),
                _ if c.is_one() => format!("{var}^{k}"),
                _ => format!("{cs}*{var}^{k}"),
            };
            parts.push(term);
        }
        parts.join(" + ")
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.format("t"))
    }
}

/// A rational function p/q over ℚ, normalized: gcd(p, q) = 1 and q monic.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RatFun {
    num: Poly,
    den: Poly,
}

impl RatFun {
    pub fn new(num: Poly, den: Poly) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        if num.is_zero() {
            return RatFun { num, den: Poly::one() };
        }
        let g = num.gcd(&den);
        let (n, _) = num.div_rem(&g);
        let (d, _) = den.div_rem(&g);
        let lead = d.leading();
        RatFun {
            num: n.scale(&lead.recip()),
            den: d.scale(&lead.recip()),
        }
    }

    pub fn from_poly(p: Poly) -> Self {
        RatFun { num: p, den: Poly::one() }
    }

    pub fn zero() -> Self {
        RatFun::from_poly(Poly::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn add(&self, other: &RatFun) -> RatFun {
        RatFun::new(
            self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
    }

    pub fn sub(&self, other: &RatFun) -> RatFun {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> RatFun {
        RatFun {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, other: &RatFun) -> RatFun {
        RatFun::new(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    pub fn recip(&self) -> RatFun {
        assert!(!self.is_zero(), "reciprocal of zero");
        RatFun::new(self.den.clone(), self.num.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::rational::rat;

    #[test]
    fn arithmetic_and_division() {
        let p = Poly::new(vec![rat(1, 1), rat(2, 1), rat(1, 1)]); // 1+2t+t²
        let q = Poly::new(vec![rat(1, 1), rat(1, 1)]); // 1+t
        let (quo, rem) = p.div_rem(&q);
        assert!(rem.is_zero());
        assert_eq!(quo, q);
        assert_eq!(p.eval(&rat(2, 1)), rat(9, 1));
        assert_eq!(q.mul(&q), p);
    }

    #[test]
    fn gcd_and_normalization() {
        let a = Poly::new(vec![rat(-2, 1), rat(0, 1), rat(2, 1)]); // 2t²−2
        let b = Poly::new(vec![rat(2, 1), rat(2, 1)]); // 2t+2
        let g = a.gcd(&b);
        assert_eq!(g, Poly::new(vec![rat(1, 1), rat(1, 1)]));
        let n = Poly::new(vec![rat(-4, 6), rat(0, 1), rat(-2, 3)]).primitive_normalized();
        assert_eq!(n, Poly::new(vec![rat(1, 1), rat(0, 1), rat(1, 1)]));
    }

    #[test]
    fn calculus() {
        let p = Poly::new(vec![rat(0, 1), rat(0, 1), rat(3, 1)]); // 3t²
        assert_eq!(p.derivative(), Poly::new(vec![rat(0, 1), rat(6, 1)]));
        assert_eq!(p.integral(), Poly::new(vec![rat(0, 1), rat(0, 1), rat(0, 1), rat(1, 1)]));
    }

    #[test]
    fn ratfun_field_ops() {
        let t = RatFun::from_poly(Poly::x());
        let one = RatFun::from_poly(Poly::one());
        let f = one.add(&t.recip()); // 1 + 1/t = (t+1)/t
        assert_eq!(f.num(), &Poly::new(vec![rat(1, 1), rat(1, 1)]));
        assert_eq!(f.den(), &Poly::x());
        let g = f.mul(&t); // t+1
        assert_eq!(g.den(), &Poly::one());
        assert!(f.sub(&f).is_zero());
    }
}

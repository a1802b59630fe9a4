//! Exact rational scalars.
//!
//! The ground field is ℚ with arbitrary-precision integers; double
//! factorials and flat-coordinate recursions overflow fixed width
//! almost immediately.

use crate::{Error, Result};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Zero};

/// The scalar type of the whole crate: arbitrary-precision rationals,
/// always in lowest terms with positive denominator.
pub type Rat = BigRational;

/// Shorthand constructor from an integer pair.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Parses the serialization format `"p/q"` or `"p"`.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s, "1"),
    };
    let p: BigInt = num
        .parse()
        .map_err(|_| Error::schema(format!("bad rational numerator in {s:?}")))?;
    let q: BigInt = den
        .parse()
        .map_err(|_| Error::schema(format!("bad rational denominator in {s:?}")))?;
    if q.is_zero() {
        return Err(Error::schema(format!("zero denominator in {s:?}")));
    }
    Ok(Rat::new(p, q))
}

/// Renders `r` as `"p/q"` (or `"p"` when the denominator is one).
pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// n! as a rational.
pub fn factorial(n: usize) -> Rat {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= BigInt::from(k);
    }
    Rat::from_integer(acc)
}

/// The exact integer square root, if `n` is a perfect square.
pub fn perfect_sqrt(n: u64) -> Option<u64> {
    let r = (n as f64).sqrt().round() as u64;
    for cand in r.saturating_sub(2)..=r + 2 {
        if cand * cand == n {
            return Some(cand);
        }
    }
    None
}

/// `base^exp` for a possibly negative integer exponent.
pub fn rat_pow(base: &Rat, exp: i64) -> Rat {
    if base.is_zero() && exp < 0 {
        panic!("negative power of zero");
    }
    let p = base.pow(exp.unsigned_abs() as i32);
    if exp < 0 {
        p.recip()
    } else {
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_roundtrip() {
        for s in ["3/4", "-7/2", "5", "0", "-12"] {
            let r = parse_rat(s).unwrap();
            assert_eq!(parse_rat(&format_rat(&r)).unwrap(), r);
        }
        assert_eq!(parse_rat("6/4").unwrap(), rat(3, 2));
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
    }

    #[test]
    fn factorial_values() {
        assert_eq!(factorial(0), rat(1, 1));
        assert_eq!(factorial(5), rat(120, 1));
        assert_eq!(factorial(12), rat(479001600, 1));
    }

    #[test]
    fn perfect_squares() {
        assert_eq!(perfect_sqrt(16), Some(4));
        assert_eq!(perfect_sqrt(9), Some(3));
        assert_eq!(perfect_sqrt(10), None);
        assert_eq!(perfect_sqrt(1), Some(1));
    }
}

//! Exact rationals. Backed by `num_rational::BigRational`, which keeps values
//! reduced with a positive denominator.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    assert!(d != 0, "zero denominator");
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// `m!! = m (m-2) ... 1` for odd `m >= -1`, with `(-1)!! = 1`.
pub fn odd_double_factorial(m: i64) -> Result<Rational> {
    if m < -1 || m % 2 == 0 {
        return Err(Error::Domain(format!(
            "double factorial needs an odd argument >= -1, got {m}"
        )));
    }
    let mut acc = BigInt::one();
    let mut k = m;
    while k > 1 {
        acc *= k;
        k -= 2;
    }
    Ok(Rational::from_integer(acc))
}

pub fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

pub fn binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}

pub fn binomial_rational(n: u32, k: u32) -> Rational {
    Rational::from_integer(binomial(n, k))
}

/// Formats as `numerator/denominator`, dropping the denominator when it is 1.
pub fn format_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Parses `a/b` or `a`. The result is reduced; a zero denominator is rejected.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::Parse(format!("malformed rational {s:?}"));
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(num, den))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_factorials() {
        assert_eq!(odd_double_factorial(-1).unwrap(), int(1));
        assert_eq!(odd_double_factorial(1).unwrap(), int(1));
        assert_eq!(odd_double_factorial(5).unwrap(), int(15));
        assert_eq!(odd_double_factorial(9).unwrap(), int(945));
        assert!(odd_double_factorial(4).is_err());
        assert!(odd_double_factorial(-3).is_err());
    }

    #[test]
    fn rational_strings() {
        assert_eq!(format_rational(&ratio(2, 4)), "1/2");
        assert_eq!(format_rational(&ratio(-6, 3)), "-2");
        assert_eq!(format_rational(&ratio(0, 7)), "0");
        assert_eq!(parse_rational("43/2880").unwrap(), ratio(43, 2880));
        assert_eq!(parse_rational("-4/8").unwrap(), ratio(-1, 2));
        assert_eq!(parse_rational("7").unwrap(), int(7));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x/2").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn canonical_form_denominator_positive() {
        let q = ratio(3, -9);
        assert_eq!(q.numer(), &BigInt::from(-1));
        assert_eq!(q.denom(), &BigInt::from(3));
        assert_eq!(ratio(0, -5), int(0));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), BigInt::from(10));
        assert_eq!(binomial(3, 4), BigInt::from(0));
    }
}

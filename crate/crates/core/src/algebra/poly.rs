use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use super::monomial::Monomial;
use super::rational::{int, Rational};
use crate::error::{Error, Result};

/// Variable family of a polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Alphabet {
    /// `t_0, t_1, ...`: Gromov-Witten (psi) variables.
    T,
    /// `p_0, p_1, ...`: kappa-potential variables; `p_0` has weight 0.
    P,
    /// `s_0, s_1, ...`: omega-potential variables.
    S,
    /// Abstract `x_1, x_2, ...` used for Bell polynomials.
    X,
}

impl Alphabet {
    pub fn symbol(self) -> char {
        match self {
            Alphabet::T => 't',
            Alphabet::P => 'p',
            Alphabet::S => 's',
            Alphabet::X => 'x',
        }
    }
}

/// Truncation bounds. A monomial is retained iff it respects every bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Cap {
    pub weight: Option<u32>,
    pub degree: Option<u32>,
}

impl Cap {
    pub const UNBOUNDED: Cap = Cap {
        weight: None,
        degree: None,
    };

    pub fn weight(w: u32) -> Cap {
        Cap {
            weight: Some(w),
            degree: None,
        }
    }

    pub fn degree(d: u32) -> Cap {
        Cap {
            weight: None,
            degree: Some(d),
        }
    }

    pub fn admits(&self, m: &Monomial) -> bool {
        self.weight.is_none_or(|w| m.weight() <= w) && self.degree.is_none_or(|d| m.degree() <= d)
    }

    /// The tighter of two caps, bound by bound.
    pub fn meet(self, other: Cap) -> Cap {
        fn min(a: Option<u32>, b: Option<u32>) -> Option<u32> {
            match (a, b) {
                (Some(x), Some(y)) => Some(x.min(y)),
                (x, None) => x,
                (None, y) => y,
            }
        }
        Cap {
            weight: min(self.weight, other.weight),
            degree: min(self.degree, other.degree),
        }
    }
}

/// Sparse polynomial with exact rational coefficients over one alphabet,
/// truncated at a [`Cap`]. Zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GradedPoly {
    alphabet: Alphabet,
    cap: Cap,
    terms: BTreeMap<Monomial, Rational>,
}

impl GradedPoly {
    pub fn zero(alphabet: Alphabet, cap: Cap) -> Self {
        Self {
            alphabet,
            cap,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(alphabet: Alphabet, cap: Cap, c: Rational) -> Self {
        Self::monomial(alphabet, cap, Monomial::one(), c)
    }

    pub fn one(alphabet: Alphabet, cap: Cap) -> Self {
        Self::constant(alphabet, cap, Rational::one())
    }

    pub fn var(alphabet: Alphabet, cap: Cap, index: u32) -> Self {
        Self::monomial(alphabet, cap, Monomial::var(index), Rational::one())
    }

    pub fn monomial(alphabet: Alphabet, cap: Cap, m: Monomial, c: Rational) -> Self {
        let mut p = Self::zero(alphabet, cap);
        p.add_term(m, c);
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, Rational)>>(
        alphabet: Alphabet,
        cap: Cap,
        terms: I,
    ) -> Self {
        let mut p = Self::zero(alphabet, cap);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn cap(&self) -> Cap {
        self.cap
    }

    /// Number of nonzero terms; see [`GradedPoly::is_zero`] for emptiness.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when the polynomial is exactly `1`.
    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms.get(&Monomial::one()).is_some_and(|c| c.is_one())
    }

    /// Terms in the canonical monomial order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn constant_term(&self) -> Rational {
        self.coeff(&Monomial::one())
    }

    /// Minimal and maximal weight among stored monomials.
    pub fn weight_range(&self) -> Option<(u32, u32)> {
        let mut it = self.terms.keys().map(Monomial::weight);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), w| (lo.min(w), hi.max(w))))
    }

    pub fn max_index(&self) -> Option<u32> {
        self.terms.keys().filter_map(Monomial::max_index).max()
    }

    /// Adds `c * m`, dropping it if it exceeds the cap and pruning zeros.
    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() || !self.cap.admits(&m) {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// `self += s * other`, in place. Alphabets must agree.
    pub fn add_scaled(&mut self, other: &GradedPoly, s: &Rational) {
        assert_eq!(
            self.alphabet, other.alphabet,
            "alphabet mismatch in polynomial addition"
        );
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c * s);
        }
    }

    /// Replaces the cap, dropping terms the new cap rejects.
    pub fn with_cap(mut self, cap: Cap) -> Self {
        self.cap = cap;
        self.terms.retain(|m, _| cap.admits(m));
        self
    }

    pub fn retain<F: FnMut(&Monomial, &Rational) -> bool>(mut self, mut keep: F) -> Self {
        self.terms.retain(|m, c| keep(m, c));
        self
    }

    fn check_alphabet(&self, other: &GradedPoly) -> Result<()> {
        if self.alphabet != other.alphabet {
            return Err(Error::AlphabetMismatch {
                left: self.alphabet,
                right: other.alphabet,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &GradedPoly) -> Result<GradedPoly> {
        self.check_alphabet(other)?;
        let mut out = self.clone().with_cap(self.cap.meet(other.cap));
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    /// Product truncated at the meet of both caps.
    pub fn checked_mul(&self, other: &GradedPoly) -> Result<GradedPoly> {
        self.check_alphabet(other)?;
        let cap = self.cap.meet(other.cap);
        let mut out = GradedPoly::zero(self.alphabet, cap);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                if let Some(w) = cap.weight {
                    if m1.weight() + m2.weight() > w {
                        continue;
                    }
                }
                if let Some(d) = cap.degree {
                    if m1.degree() + m2.degree() > d {
                        continue;
                    }
                }
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: &Rational) -> GradedPoly {
        if s.is_zero() {
            return GradedPoly::zero(self.alphabet, self.cap);
        }
        GradedPoly {
            alphabet: self.alphabet,
            cap: self.cap,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect(),
        }
    }

    /// Multiplies by a single monomial with coefficient.
    pub fn mul_term(&self, m: &Monomial, c: &Rational) -> GradedPoly {
        let mut out = GradedPoly::zero(self.alphabet, self.cap);
        for (m1, c1) in &self.terms {
            out.add_term(m1.mul(m), c1 * c);
        }
        out
    }

    pub fn partial(&self, index: u32) -> GradedPoly {
        let mut out = GradedPoly::zero(self.alphabet, self.cap);
        for (m, c) in &self.terms {
            if let Some((e, rest)) = m.derivative(index) {
                out.add_term(rest, c * int(e as i64));
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> GradedPoly {
        let mut acc = GradedPoly::one(self.alphabet, self.cap);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Substitutes `x_i -> c_i * x_i` for every variable, with `c_i = scale(i)`.
    pub fn rescale_vars<F: Fn(u32) -> Rational>(&self, scale: F) -> GradedPoly {
        let mut out = GradedPoly::zero(self.alphabet, self.cap);
        for (m, c) in &self.terms {
            let mut k = c.clone();
            for &(i, e) in m.pairs() {
                let s = scale(i);
                for _ in 0..e {
                    k *= &s;
                }
            }
            out.add_term(m.clone(), k);
        }
        out
    }

    /// `sum_{j >= 0} self^j / j!` truncated at the cap.
    ///
    /// Requires a zero constant term. The series must terminate under the cap:
    /// either every monomial has positive weight and a weight bound is set, or a
    /// degree bound is set.
    pub fn exp_truncated(&self) -> Result<GradedPoly> {
        if !self.constant_term().is_zero() {
            return Err(Error::Domain(
                "exp of a series with nonzero constant term".into(),
            ));
        }
        let positive_weight = self.terms.keys().all(|m| m.weight() > 0);
        if self.cap.degree.is_none() && !(positive_weight && self.cap.weight.is_some()) {
            return Err(Error::Domain(
                "exp does not terminate: weight-zero terms need a degree cap".into(),
            ));
        }
        let mut out = GradedPoly::one(self.alphabet, self.cap);
        let mut power = GradedPoly::one(self.alphabet, self.cap);
        let mut j = 0i64;
        loop {
            j += 1;
            power = (&power * self).scale(&Rational::new(1.into(), j.into()));
            if power.is_zero() {
                break;
            }
            out = &out + &power;
        }
        Ok(out)
    }
}

/// Polynomial product, failing on an alphabet mismatch.
pub fn poly_mul(a: &GradedPoly, b: &GradedPoly) -> Result<GradedPoly> {
    a.checked_mul(b)
}

impl Add for &GradedPoly {
    type Output = GradedPoly;

    /// Panics on an alphabet mismatch; see [`GradedPoly::checked_add`].
    fn add(self, rhs: &GradedPoly) -> GradedPoly {
        self.checked_add(rhs)
            .expect("alphabet mismatch in polynomial addition")
    }
}

impl Sub for &GradedPoly {
    type Output = GradedPoly;

    fn sub(self, rhs: &GradedPoly) -> GradedPoly {
        self + &(-rhs)
    }
}

impl Neg for &GradedPoly {
    type Output = GradedPoly;

    fn neg(self) -> GradedPoly {
        self.scale(&-Rational::one())
    }
}

impl Mul for &GradedPoly {
    type Output = GradedPoly;

    /// Panics on an alphabet mismatch; see [`GradedPoly::checked_mul`].
    fn mul(self, rhs: &GradedPoly) -> GradedPoly {
        self.checked_mul(rhs)
            .expect("alphabet mismatch in polynomial product")
    }
}

impl fmt::Debug for GradedPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for GradedPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let sym = self.alphabet.symbol();
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let mono = m.to_string().replace('x', &sym.to_string());
            if m.is_one() {
                write!(f, "{c}")?;
            } else if c.is_one() {
                write!(f, "{mono}")?;
            } else {
                write!(f, "({c})*{mono}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rational::ratio;

    fn p(i: u32) -> GradedPoly {
        GradedPoly::var(Alphabet::P, Cap::UNBOUNDED, i)
    }

    fn one() -> GradedPoly {
        GradedPoly::one(Alphabet::P, Cap::UNBOUNDED)
    }

    #[test]
    fn products() {
        assert_eq!(
            &p(1) * &p(1),
            GradedPoly::monomial(Alphabet::P, Cap::UNBOUNDED, Monomial::power(1, 2), int(1))
        );
        let capped = GradedPoly::var(Alphabet::P, Cap::weight(2), 1);
        assert!((&capped * &p(2)).is_zero());
        let lhs = &(&one() + &p(1)) * &(&one() - &p(1));
        let rhs = &one() - &(&p(1) * &p(1));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn mixed_alphabets_are_rejected() {
        let t1 = GradedPoly::var(Alphabet::T, Cap::UNBOUNDED, 1);
        assert!(matches!(
            poly_mul(&p(1), &t1),
            Err(Error::AlphabetMismatch { .. })
        ));
        assert!(p(1).checked_add(&t1).is_err());
    }

    #[test]
    fn partial_derivatives() {
        let f = &(&p(1) * &p(1)) * &p(2);
        assert_eq!(f.partial(1), (&p(1) * &p(2)).scale(&int(2)));
        assert!((&p(1) * &p(1)).partial(3).is_zero());
    }

    #[test]
    fn coefficients() {
        let f = &one() - &(&p(1) * &p(1));
        assert_eq!(f.coeff(&Monomial::power(1, 2)), int(-1));
        assert_eq!(f.coeff(&Monomial::var(7)), int(0));
    }

    #[test]
    fn exponential_examples() {
        // exp(p1) with weight cap 2 stands in for exp(p1 z) at z-cap 2
        let e = GradedPoly::var(Alphabet::P, Cap::weight(2), 1)
            .exp_truncated()
            .unwrap();
        let expected = GradedPoly::from_terms(
            Alphabet::P,
            Cap::weight(2),
            [
                (Monomial::one(), int(1)),
                (Monomial::var(1), int(1)),
                (Monomial::power(1, 2), ratio(1, 2)),
            ],
        );
        assert_eq!(e, expected);
        let z = GradedPoly::zero(Alphabet::P, Cap::weight(4));
        assert_eq!(
            z.exp_truncated().unwrap(),
            GradedPoly::one(Alphabet::P, Cap::weight(4))
        );

        let a = GradedPoly::from_terms(
            Alphabet::P,
            Cap::weight(2),
            [(Monomial::var(1), int(1)), (Monomial::var(2), int(1))],
        );
        let e = a.exp_truncated().unwrap();
        assert_eq!(e.coeff(&Monomial::var(2)), int(1));
        assert_eq!(e.coeff(&Monomial::power(1, 2)), ratio(1, 2));
    }

    #[test]
    fn exponential_errors() {
        let c = GradedPoly::constant(Alphabet::P, Cap::weight(3), int(1));
        assert!(c.exp_truncated().is_err());
        let p0 = GradedPoly::var(Alphabet::P, Cap::weight(3), 0);
        assert!(p0.exp_truncated().is_err());
        let p0 = GradedPoly::var(Alphabet::P, Cap::degree(3), 0);
        assert_eq!(p0.exp_truncated().unwrap().len(), 4);
    }

    #[test]
    fn zero_pruning() {
        let f = &p(1) - &p(1);
        assert!(f.is_zero());
        assert_eq!(f.len(), 0);
    }
}

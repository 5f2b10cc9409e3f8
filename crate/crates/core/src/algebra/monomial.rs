use std::fmt;

use smallvec::SmallVec;

/// A monomial in countably many indexed variables `x_0, x_1, ...`.
///
/// Stored as `(index, exponent)` pairs sorted by index, with no zero exponent.
/// The variable family (t, p, ...) is tracked by the owning polynomial.
///
/// The derived ordering compares total weight `sum(index * exponent)`, then the
/// degree `sum(exponent)`, then the pairs lexicographically.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Monomial {
    weight: u32,
    degree: u32,
    factors: SmallVec<[(u32, u32); 4]>,
}

impl Monomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn var(index: u32) -> Self {
        Self::power(index, 1)
    }

    pub fn power(index: u32, exponent: u32) -> Self {
        Self::from_pairs([(index, exponent)])
    }

    /// Builds a monomial from `(index, exponent)` pairs in any order; repeated
    /// indices are merged and zero exponents dropped.
    pub fn from_pairs<I: IntoIterator<Item = (u32, u32)>>(pairs: I) -> Self {
        let mut factors: SmallVec<[(u32, u32); 4]> =
            pairs.into_iter().filter(|p| p.1 > 0).collect();
        factors.sort_unstable();
        let mut merged: SmallVec<[(u32, u32); 4]> = SmallVec::with_capacity(factors.len());
        for (i, e) in factors {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += e,
                _ => merged.push((i, e)),
            }
        }
        Self::from_sorted(merged)
    }

    /// Monomial with one factor per listed index, e.g. `[2, 2, 3]` is `x_2^2 x_3`.
    pub fn from_indices<I: IntoIterator<Item = u32>>(indices: I) -> Self {
        Self::from_pairs(indices.into_iter().map(|i| (i, 1)))
    }

    fn from_sorted(factors: SmallVec<[(u32, u32); 4]>) -> Self {
        let weight = factors.iter().map(|&(i, e)| i * e).sum();
        let degree = factors.iter().map(|&(_, e)| e).sum();
        Self {
            weight,
            degree,
            factors,
        }
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.factors
    }

    /// Variable indices with multiplicity, ascending.
    pub fn indices(&self) -> impl Iterator<Item = u32> + '_ {
        self.factors
            .iter()
            .flat_map(|&(i, e)| std::iter::repeat_n(i, e as usize))
    }

    pub fn exponent(&self, index: u32) -> u32 {
        match self.factors.binary_search_by_key(&index, |p| p.0) {
            Ok(pos) => self.factors[pos].1,
            Err(_) => 0,
        }
    }

    pub fn max_index(&self) -> Option<u32> {
        self.factors.last().map(|p| p.0)
    }

    pub fn min_index(&self) -> Option<u32> {
        self.factors.first().map(|p| p.0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.factors, &other.factors);
        let mut out: SmallVec<[(u32, u32); 4]> = SmallVec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial {
            weight: self.weight + other.weight,
            degree: self.degree + other.degree,
            factors: out,
        }
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        if other.degree > self.degree || other.weight > self.weight {
            return None;
        }
        let mut out: SmallVec<[(u32, u32); 4]> = SmallVec::with_capacity(self.factors.len());
        let mut j = 0;
        for &(i, e) in &self.factors {
            if j < other.factors.len() && other.factors[j].0 == i {
                let f = other.factors[j].1;
                if f > e {
                    return None;
                }
                if e > f {
                    out.push((i, e - f));
                }
                j += 1;
            } else if j < other.factors.len() && other.factors[j].0 < i {
                return None;
            } else {
                out.push((i, e));
            }
        }
        if j < other.factors.len() {
            return None;
        }
        Some(Monomial {
            weight: self.weight - other.weight,
            degree: self.degree - other.degree,
            factors: out,
        })
    }

    pub fn with_var(&self, index: u32) -> Monomial {
        self.mul(&Monomial::var(index))
    }

    pub fn without_var(&self, index: u32) -> Option<Monomial> {
        self.div(&Monomial::var(index))
    }

    /// Formal derivative: `d/dx_index (self) = e * rest`, or `None` if the variable is absent.
    pub fn derivative(&self, index: u32) -> Option<(u32, Monomial)> {
        let e = self.exponent(index);
        (e > 0).then(|| (e, self.without_var(index).expect("variable present")))
    }

    /// `prod(exponent!)` over all factors.
    pub fn factorial_product(&self) -> num_bigint::BigInt {
        self.factors
            .iter()
            .map(|&(_, e)| super::rational::factorial(e))
            .product()
    }

    /// All monomials dividing `self`, including `1` and `self`.
    pub fn divisors(&self) -> Vec<Monomial> {
        let mut out = vec![Monomial::one()];
        for &(i, e) in &self.factors {
            let mut next = Vec::with_capacity(out.len() * (e as usize + 1));
            for d in &out {
                for k in 0..=e {
                    next.push(d.mul(&Monomial::power(i, k)));
                }
            }
            out = next;
        }
        out
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|&(i, e)| {
                if e == 1 {
                    format!("x{i}")
                } else {
                    format!("x{i}^{e}")
                }
            })
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_construction() {
        let m = Monomial::from_pairs([(3, 1), (1, 2), (3, 1), (5, 0)]);
        assert_eq!(m.pairs(), &[(1, 2), (3, 2)]);
        assert_eq!(m.weight(), 8);
        assert_eq!(m.degree(), 4);
        assert_eq!(
            Monomial::from_indices([2, 1, 2]),
            Monomial::from_pairs([(1, 1), (2, 2)])
        );
        assert!(Monomial::from_pairs([(4, 0)]).is_one());
    }

    #[test]
    fn ordering_weight_then_length_then_pairs() {
        let p3 = Monomial::var(3);
        let p2p1 = Monomial::from_indices([2, 1]);
        let p1_cubed = Monomial::power(1, 3);
        let p4 = Monomial::var(4);
        let mut v = vec![p4.clone(), p1_cubed.clone(), p2p1.clone(), p3.clone()];
        v.sort();
        assert_eq!(v, vec![p3, p2p1, p1_cubed, p4]);
    }

    #[test]
    fn mul_div_roundtrip() {
        let a = Monomial::from_indices([1, 1, 4]);
        let b = Monomial::from_indices([1, 2]);
        let ab = a.mul(&b);
        assert_eq!(ab, Monomial::from_pairs([(1, 3), (2, 1), (4, 1)]));
        assert_eq!(ab.div(&b), Some(a.clone()));
        assert_eq!(a.div(&b), None);
        assert_eq!(a.div(&Monomial::power(1, 3)), None);
        assert_eq!(a.div(&Monomial::var(0)), None);
    }

    #[test]
    fn derivative_and_divisors() {
        let m = Monomial::from_pairs([(1, 2), (2, 1)]);
        assert_eq!(m.derivative(1), Some((2, Monomial::from_indices([1, 2]))));
        assert_eq!(m.derivative(3), None);
        let divs = m.divisors();
        assert_eq!(divs.len(), 6);
        assert!(divs.iter().all(|d| m.div(d).is_some()));
    }
}

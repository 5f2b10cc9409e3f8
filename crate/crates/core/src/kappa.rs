//! Kappa-class intersection numbers `[prod kappa_i^{mu_i}]_g` on `M_g`, computed
//! from the operators `Lhat_n` that annihilate `e^K`, where
//! `K = p_0/24 + sum_{g >= 2} e^{(2g-2) p_0} K_g(p_1, p_2, ...)`.
//!
//! The coefficient of `prod p_i^{mu_i}` in `K_g` is `[kappa^mu]_g / prod mu_i!`.
//! For a monomial `mu` of genus `g` pick `n` with `mu_n > 0`; the coefficient of
//! `e^{(2g-2) p_0} mu / p_n` in `e^{-K} Lhat_n e^K` is linear in the unknown,
//! whose partners are shorter monomials or lower genus.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::algebra::{
    int, odd_double_factorial, ratio, Alphabet, Cap, ExpPoly, GradedPoly, Monomial, Rational,
};
use crate::error::{Error, Result};
use crate::genfun::{bell_coeff_series, schur_seq, ZSeries};
use crate::solver::{
    constraint_at, solve, CoefficientSource, DiffOperator, OperatorTerm, Potential, RecursionFamily,
};

/// Largest genus the engine agrees to solve.
pub const MAX_GENUS: u32 = 9;

/// A kappa monomial on `M_g`. `monomial` holds the indices `i >= 1`;
/// powers of `kappa_0` are kept apart and folded by `(2g - 2)^n`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KappaKey {
    pub genus: u32,
    pub monomial: Monomial,
    pub kappa0_power: u32,
}

impl KappaKey {
    /// From `(index, multiplicity)` pairs; index `0` counts towards `kappa0_power`.
    pub fn new(genus: u32, pairs: &[(u32, u32)]) -> Self {
        let kappa0_power = pairs.iter().filter(|p| p.0 == 0).map(|p| p.1).sum();
        let monomial = Monomial::from_pairs(pairs.iter().copied().filter(|p| p.0 != 0));
        Self {
            genus,
            monomial,
            kappa0_power,
        }
    }

    pub fn canonical(genus: u32, monomial: Monomial) -> Self {
        Self {
            genus,
            monomial,
            kappa0_power: 0,
        }
    }

    /// Whether the weight is `3g - 3`.
    pub fn has_top_degree(&self) -> bool {
        self.monomial.weight() as i64 == 3 * self.genus as i64 - 3
    }
}

impl fmt::Debug for KappaKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        let mut first = true;
        if self.kappa0_power > 0 {
            write!(f, "k0^{}", self.kappa0_power)?;
            first = false;
        }
        for &(i, e) in self.monomial.pairs() {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            if e == 1 {
                write!(f, "k{i}")?;
            } else {
                write!(f, "k{i}^{e}")?;
            }
        }
        write!(f, "]_{}", self.genus)
    }
}

/// Partitions of `w` as monomials in `p_1, p_2, ...`, in canonical monomial order.
pub fn monomials_of_weight(w: u32) -> Vec<Monomial> {
    fn rec(left: u32, max_part: u32, parts: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if left == 0 {
            out.push(Monomial::from_indices(parts.iter().copied()));
            return;
        }
        for p in (1..=left.min(max_part)).rev() {
            parts.push(p);
            rec(left - p, p, parts, out);
            parts.pop();
        }
    }
    let mut out = Vec::new();
    rec(w, w, &mut Vec::new(), &mut out);
    out.sort();
    out
}

/// `alpha_{n,d}`: the coefficient of `x^d` in `prod_{i=0}^{n} (x + i + 3/2)`.
pub fn alpha(n: u32, d: u32) -> Rational {
    let mut coeffs = vec![Rational::one()];
    for i in 0..=n {
        let a = ratio(2 * i as i64 + 3, 2);
        let mut next = vec![Rational::zero(); coeffs.len() + 1];
        for (k, c) in coeffs.iter().enumerate() {
            next[k] += c * &a;
            next[k + 1] += c;
        }
        coeffs = next;
    }
    coeffs
        .get(d as usize)
        .cloned()
        .unwrap_or_else(Rational::zero)
}

/// Sign of the first-order part of `Lhat_1` multiplying `e^{2 p_0}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lhat1Variant {
    /// Multiplier `S_{m+2}(2p) - S_{m+2}(p)`: the operator that annihilates `e^K`.
    Annihilating,
    /// Multiplier `S_{m+2}(p) - S_{m+2}(2p)`. Kept only to show that it fails.
    FlippedSign,
}

/// The operator `Lhat_n` with multipliers truncated at weight `cap`.
pub fn build_lhat(n: i64, cap: u32) -> Result<DiffOperator> {
    LhatBuilder::new(cap).build(n, Lhat1Variant::Annihilating)
}

pub fn build_lhat_variant(n: i64, cap: u32, variant: Lhat1Variant) -> Result<DiffOperator> {
    LhatBuilder::new(cap).build(n, variant)
}

/// Builds the operators `Lhat_n` for one weight cap, sharing the Schur
/// polynomials, their pairwise products and the Bell-coefficient series.
pub struct LhatBuilder {
    cap: u32,
    s1: Vec<GradedPoly>,
    s2: Vec<GradedPoly>,
    /// `products[m][l] = S_m(p) S_l(p)` for `m + l <= cap`.
    products: Vec<Vec<GradedPoly>>,
    bell: RwLock<BTreeMap<u32, Arc<ZSeries>>>,
}

impl LhatBuilder {
    pub fn new(cap: u32) -> Self {
        let wcap = Cap::weight(cap);
        let s1 = schur_seq(cap + 2, 1);
        let s2 = schur_seq(cap + 2, 2);
        let products = (0..=cap as usize)
            .map(|m| {
                (0..=cap as usize - m)
                    .map(|l| (&s1[m] * &s1[l]).with_cap(wcap))
                    .collect()
            })
            .collect();
        Self {
            cap,
            s1,
            s2,
            products,
            bell: RwLock::new(BTreeMap::new()),
        }
    }

    fn bell_series(&self, d: u32) -> Arc<ZSeries> {
        if let Some(s) = self.bell.read().expect("lock").get(&d) {
            return s.clone();
        }
        let s = Arc::new(bell_coeff_series(d, self.cap));
        self.bell.write().expect("lock").insert(d, s.clone());
        s
    }

    pub fn build(&self, n: i64, variant: Lhat1Variant) -> Result<DiffOperator> {
        if n < 0 {
            return Err(Error::Domain(format!("Lhat_{n} is not defined")));
        }
        let n = n as u32;
        let cap = self.cap;
        let wcap = Cap::weight(cap);
        let one = || GradedPoly::one(Alphabet::P, wcap);
        let p = |i: u32| GradedPoly::var(Alphabet::P, wcap, i);
        let (s1, s2) = (&self.s1, &self.s2);
        let mut terms = Vec::new();
        match n {
            0 => {
                terms.push(OperatorTerm::new(ratio(-3, 2), 0, one(), &[0]));
                for m in 1..=cap {
                    terms.push(OperatorTerm::new(int(m as i64), 0, p(m), &[m]));
                }
                terms.push(OperatorTerm::new(ratio(1, 16), 0, one(), &[]));
            }
            1 => {
                terms.push(OperatorTerm::new(ratio(-15, 4), 0, one(), &[1]));
                for m in 1..=cap {
                    terms.push(OperatorTerm::new(
                        int((m * (m + 4)) as i64),
                        0,
                        p(m),
                        &[m + 1],
                    ));
                }
                for l in 1..=cap {
                    for m in 1..=cap.saturating_sub(l) {
                        let pl_pm = GradedPoly::monomial(
                            Alphabet::P,
                            wcap,
                            Monomial::from_indices([l, m]),
                            int(1),
                        );
                        terms.push(OperatorTerm::new(
                            -int((l * m) as i64),
                            0,
                            pl_pm,
                            &[l + m + 1],
                        ));
                    }
                }
                let sign = match variant {
                    Lhat1Variant::Annihilating => int(1),
                    Lhat1Variant::FlippedSign => int(-1),
                };
                for m in (0..=cap).take_while(|m| m + 2 <= cap) {
                    let mult = (&s2[m as usize + 2] - &s1[m as usize + 2]).with_cap(wcap);
                    terms.push(OperatorTerm::new(&sign * ratio(1, 8), 2, mult, &[m]));
                }
                for l in (0..=cap).take_while(|l| l + 2 <= cap) {
                    for m in 0..=cap - 2 - l {
                        let mult = self.products[l as usize + 1][m as usize + 1].clone();
                        terms.push(OperatorTerm::new(ratio(1, 8), 2, mult, &[l, m]));
                    }
                }
            }
            n => {
                for d in 0..=n + 1 {
                    let a = alpha(n, d);
                    let series = self.bell_series(d);
                    for (m, c) in series.coefficients().iter().enumerate() {
                        if !c.is_zero() {
                            terms.push(OperatorTerm::new(
                                -a.clone(),
                                0,
                                c.clone(),
                                &[m as u32 + n],
                            ));
                        }
                    }
                }
                let two_pow = int(2).pow(n as i32 + 1);
                let c = (0..n)
                    .map(|i| {
                        Ok(odd_double_factorial(2 * i as i64 + 1)?
                            * odd_double_factorial(2 * (n - i) as i64 - 1)?
                            / &two_pow)
                    })
                    .collect::<Result<Vec<Rational>>>()?;
                let c_sum: Rational = c.iter().sum();
                for m in 0..=cap {
                    let j = m as i64 + n as i64 - 3;
                    if j >= 0 {
                        terms.push(OperatorTerm::new(
                            &c_sum / int(2),
                            2,
                            s2[m as usize].clone(),
                            &[j as u32],
                        ));
                    }
                }
                for (i, ci) in c.iter().enumerate() {
                    let i = i as i64;
                    for m in 0..=cap as i64 {
                        for l in 0..=(cap as i64 - m) {
                            let a = m + n as i64 - 2 - i;
                            let b = l + i - 1;
                            if a < 0 || b < 0 {
                                continue;
                            }
                            let mult = self.products[m as usize][l as usize].clone();
                            terms.push(OperatorTerm::new(
                                ci / int(2),
                                2,
                                mult,
                                &[a as u32, b as u32],
                            ));
                        }
                    }
                }
            }
        }
        Ok(DiffOperator::new(format!("Lhat_{n}"), Alphabet::P, terms))
    }
}

/// Which index `n` with `mu_n > 0` selects the operator `Lhat_n` for a monomial.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PivotRule {
    #[default]
    Largest,
    Smallest,
}

/// The kappa potential seen through solved values (keyed by genus and monomial).
struct KappaSource<'a> {
    solved: &'a BTreeMap<(u32, Monomial), Rational>,
}

impl CoefficientSource for KappaSource<'_> {
    fn alphabet(&self) -> Alphabet {
        Alphabet::P
    }

    fn coeff(&self, sector: i32, m: &Monomial) -> Result<Rational> {
        if sector == 0 {
            return Ok(if *m == Monomial::var(0) {
                ratio(1, 24)
            } else {
                Rational::zero()
            });
        }
        if sector < 0 || sector % 2 != 0 || m.exponent(0) > 0 {
            return Ok(Rational::zero());
        }
        let g = (sector + 2) as u32 / 2;
        if m.weight() != 3 * g - 3 {
            return Ok(Rational::zero());
        }
        let v = self
            .solved
            .get(&(g, m.clone()))
            .ok_or_else(|| Error::Dependency {
                what: format!("{:?}", KappaKey::canonical(g, m.clone())),
            })?;
        Ok(v / Rational::from_integer(m.factorial_product()))
    }

    fn sectors(&self, max_sector: i32) -> Vec<i32> {
        (0..=max_sector).step_by(2).collect()
    }
}

/// The kappa recursion as a stratified family over `(genus, length)`.
pub struct KappaFamily {
    max_genus: u32,
    rule: PivotRule,
    ops: Vec<Arc<DiffOperator>>,
}

impl KappaFamily {
    pub fn new(max_genus: u32, rule: PivotRule) -> Result<Self> {
        if max_genus > MAX_GENUS {
            return Err(Error::Resource(format!(
                "genus {max_genus} exceeds the supported maximum {MAX_GENUS}"
            )));
        }
        let cap = (3 * max_genus).saturating_sub(3);
        let builder = LhatBuilder::new(cap);
        let ops = (0..=cap as i64)
            .into_par_iter()
            .map(|n| builder.build(n, Lhat1Variant::Annihilating).map(Arc::new))
            .collect::<Result<_>>()?;
        Ok(Self {
            max_genus,
            rule,
            ops,
        })
    }

    pub fn operator(&self, n: u32) -> Option<&DiffOperator> {
        self.ops.get(n as usize).map(|o| o.as_ref())
    }
}

impl RecursionFamily for KappaFamily {
    type Key = (u32, Monomial);

    fn strata(&self) -> Vec<Vec<Self::Key>> {
        let mut out = Vec::new();
        for g in 2..=self.max_genus {
            let mut by_len: BTreeMap<u32, Vec<Self::Key>> = BTreeMap::new();
            for m in monomials_of_weight(3 * g - 3) {
                by_len.entry(m.degree()).or_default().push((g, m));
            }
            out.extend(by_len.into_values());
        }
        out
    }

    fn evaluate(
        &self,
        key: &Self::Key,
        solved: &BTreeMap<Self::Key, Rational>,
    ) -> Result<Rational> {
        let (g, mu) = key;
        let n = match self.rule {
            PivotRule::Largest => mu.max_index(),
            PivotRule::Smallest => mu.min_index(),
        }
        .ok_or_else(|| Error::Domain("empty kappa monomial".into()))?;
        let op = self.ops.get(n as usize).ok_or_else(|| Error::Dependency {
            what: format!("operator Lhat_{n}"),
        })?;
        let target = mu.without_var(n).expect("index present");
        let relation = constraint_at(
            op.as_ref(),
            &KappaSource { solved },
            2 * *g as i32 - 2,
            &target,
        )?;
        Ok(relation.solve()? * Rational::from_integer(mu.factorial_product()))
    }
}

/// Solves all kappa-free monomials up to `max_genus` with the given pivot rule.
pub fn solve_kappa_table(
    max_genus: u32,
    rule: PivotRule,
) -> Result<BTreeMap<(u32, Monomial), Rational>> {
    let family = KappaFamily::new(max_genus, rule)?;
    solve(&family, BTreeMap::new())
}

/// Kappa-free values keyed by `(genus, monomial)`.
pub type KappaTable = BTreeMap<(u32, Monomial), Rational>;

/// Memoized kappa numbers, extended genus by genus on demand.
#[derive(Default)]
pub struct KappaEngine {
    /// Solved genus bound and the values up to it.
    state: RwLock<(u32, KappaTable)>,
}

impl KappaEngine {
    pub fn new() -> Self {
        Self {
            state: RwLock::new((1, BTreeMap::new())),
        }
    }

    /// Solved genus bound so far.
    pub fn solved_genus(&self) -> u32 {
        self.state.read().expect("lock").0
    }

    /// Makes every value of genus `<= max_genus` available.
    pub fn ensure_genus(&self, max_genus: u32) -> Result<()> {
        if self.solved_genus() >= max_genus {
            return Ok(());
        }
        let family = KappaFamily::new(max_genus, PivotRule::Largest)?;
        let seeds = self.state.read().expect("lock").1.clone();
        let table = solve(&family, seeds)?;
        let mut state = self.state.write().expect("lock");
        if state.0 < max_genus {
            *state = (max_genus, table);
        }
        Ok(())
    }

    /// Preloads already known values (from a cache), trusting them as solved up to `genus`.
    pub fn preload(&self, genus: u32, values: BTreeMap<(u32, Monomial), Rational>) {
        let mut state = self.state.write().expect("lock");
        if genus > state.0 {
            *state = (genus, values);
        }
    }

    /// `[kappa^mu kappa_0^n]_g`.
    pub fn kappa_number(&self, key: &KappaKey) -> Result<Rational> {
        let g = key.genus;
        if g == 0 {
            return Err(Error::Domain("kappa numbers need genus >= 1".into()));
        }
        if g == 1 {
            let v = if key.monomial.is_one() && key.kappa0_power == 1 {
                ratio(1, 24)
            } else {
                Rational::zero()
            };
            return Ok(v);
        }
        if !key.has_top_degree() {
            return Ok(Rational::zero());
        }
        self.ensure_genus(g)?;
        let base = self
            .state
            .read()
            .expect("lock")
            .1
            .get(&(g, key.monomial.clone()))
            .cloned()
            .ok_or_else(|| Error::Dependency {
                what: format!("{key:?}"),
            })?;
        Ok(base * int(2 * g as i64 - 2).pow(key.kappa0_power as i32))
    }

    /// All kappa-free values of genus `2..=max_genus` in canonical order.
    pub fn table(&self, max_genus: u32) -> Result<Vec<(KappaKey, Rational)>> {
        self.ensure_genus(max_genus)?;
        let state = self.state.read().expect("lock");
        Ok(state
            .1
            .iter()
            .filter(|((g, _), _)| *g <= max_genus)
            .map(|((g, m), v)| (KappaKey::canonical(*g, m.clone()), v.clone()))
            .collect())
    }

    /// `p_0/24 + sum_{g=2}^{G} e^{(2g-2) p_0} K_g`, known up to sector `2G - 2`.
    pub fn kappa_potential(&self, max_genus: u32) -> Result<Potential> {
        if max_genus < 1 {
            return Err(Error::Domain(
                "the kappa potential starts at genus 1".into(),
            ));
        }
        let cap = Cap::weight((3 * max_genus).saturating_sub(3));
        let mut body = ExpPoly::zero(Alphabet::P, cap);
        body.add_term(0, Monomial::var(0), ratio(1, 24));
        for (key, v) in self.table(max_genus)? {
            let denom = Rational::from_integer(key.monomial.factorial_product());
            body.add_term(2 * key.genus as i32 - 2, key.monomial, v / denom);
        }
        Ok(Potential::new(body, 2 * max_genus as i32 - 2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_values() {
        assert_eq!(alpha(1, 0), ratio(15, 4));
        assert_eq!(alpha(2, 0), ratio(105, 8));
        assert_eq!(alpha(3, 0), ratio(945, 16));
        assert_eq!(alpha(1, 2), int(1));
        assert_eq!(alpha(1, 3), int(0));
    }

    #[test]
    fn lhat0_shape() {
        let op = build_lhat(0, 3).unwrap();
        assert_eq!(op.pivot().unwrap(), (0, ratio(-3, 2)));
        assert_eq!(op.term(0, &[]).unwrap().coefficient, ratio(1, 16));
        let t2 = op.term(0, &[2]).unwrap().scaled_multiplier();
        assert_eq!(t2.coeff(&Monomial::var(2)), int(2));
        assert_eq!(t2.len(), 1);
        assert_eq!(op.terms().len(), 5);
        assert!(build_lhat(-1, 3).is_err());
    }

    #[test]
    fn lhat_leading_terms() {
        for n in 1..=4u32 {
            let op = build_lhat(n as i64, 9).unwrap();
            assert_eq!(op.pivot().unwrap(), (n, -alpha(n, 0)));
        }
    }

    #[test]
    fn genus_two_values() {
        let e = KappaEngine::new();
        let k = |pairs: &[(u32, u32)]| e.kappa_number(&KappaKey::new(2, pairs)).unwrap();
        assert_eq!(k(&[(3, 1)]), ratio(1, 1152));
        assert_eq!(k(&[(2, 1), (1, 1)]), ratio(1, 240));
        assert_eq!(k(&[(1, 3)]), ratio(43, 2880));
        assert_eq!(k(&[(0, 1), (3, 1)]), ratio(1, 576));
        assert_eq!(k(&[(2, 1)]), int(0));
    }

    #[test]
    fn genus_one_and_zero() {
        let e = KappaEngine::new();
        assert_eq!(
            e.kappa_number(&KappaKey::new(1, &[(0, 1)])).unwrap(),
            ratio(1, 24)
        );
        assert_eq!(
            e.kappa_number(&KappaKey::new(1, &[(0, 2)])).unwrap(),
            int(0)
        );
        assert!(e.kappa_number(&KappaKey::new(0, &[(0, 1)])).is_err());
    }

    #[test]
    fn weight_partitions() {
        assert_eq!(monomials_of_weight(3).len(), 3);
        assert_eq!(monomials_of_weight(6).len(), 11);
        assert_eq!(monomials_of_weight(12).len(), 77);
        assert_eq!(monomials_of_weight(3)[0], Monomial::var(3));
    }
}

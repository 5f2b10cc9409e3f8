//! Psi-class intersection numbers `<tau_{k_1} ... tau_{k_n}>_g` from the
//! Virasoro constraints `L_n(e^F) = 0`, `n >= -1`.
//!
//! Relations are not transcribed by hand: each value comes from
//! [`constraint_at`] applied to the operator `L_{K-1}`, where `K` is the
//! largest exponent of the key. The string and dilaton equations serve as fast
//! paths for keys containing a `0` or a `1`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, RwLock};

use num_traits::{One, Zero};

use crate::algebra::{
    int, odd_double_factorial, ratio, Alphabet, Cap, ExpPoly, GradedPoly, Monomial, Rational,
};
use crate::error::{Error, Result};
use crate::solver::{
    constraint_at, solve, CoefficientSource, DiffOperator, OperatorTerm, Potential, RecursionFamily,
};

/// Genus and exponent multiset of a bracket; exponents are kept sorted.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PsiKey {
    genus: u32,
    exponents: Vec<u32>,
}

impl PsiKey {
    pub fn new(genus: u32, exponents: impl IntoIterator<Item = u32>) -> Self {
        let mut exponents: Vec<u32> = exponents.into_iter().collect();
        exponents.sort_unstable();
        Self { genus, exponents }
    }

    /// Key of the coefficient of a `t`-monomial at genus `genus`.
    pub fn from_monomial(genus: u32, m: &Monomial) -> Self {
        Self {
            genus,
            exponents: m.indices().collect(),
        }
    }

    pub fn genus(&self) -> u32 {
        self.genus
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    /// `2g - 2 + n > 0`.
    pub fn is_stable(&self) -> bool {
        2 * self.genus as i64 - 2 + self.exponents.len() as i64 > 0
    }

    /// `sum k_i = 3g - 3 + n`.
    pub fn has_top_degree(&self) -> bool {
        self.exponents.iter().map(|&k| k as i64).sum::<i64>()
            == 3 * self.genus as i64 - 3 + self.exponents.len() as i64
    }

    pub fn monomial(&self) -> Monomial {
        Monomial::from_indices(self.exponents.iter().copied())
    }

    /// The key with the `j`-th exponent removed.
    fn without(&self, j: usize) -> PsiKey {
        let mut e = self.exponents.clone();
        e.remove(j);
        PsiKey {
            genus: self.genus,
            exponents: e,
        }
    }
}

impl fmt::Debug for PsiKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<")?;
        for (i, k) in self.exponents.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "tau{k}")?;
        }
        write!(f, ">_{}", self.genus)
    }
}

/// All top-degree keys of genus `g` with `n` insertions, ascending.
pub fn top_degree_keys(g: u32, n: usize) -> Vec<PsiKey> {
    let total = 3 * g as i64 - 3 + n as i64;
    if total < 0 || n == 0 {
        return if n == 0 && total == 0 {
            vec![PsiKey::new(g, [])]
        } else {
            Vec::new()
        };
    }
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(n);
    fn rec(
        left: u32,
        slots: usize,
        min: u32,
        current: &mut Vec<u32>,
        g: u32,
        out: &mut Vec<PsiKey>,
    ) {
        if slots == 0 {
            if left == 0 {
                out.push(PsiKey {
                    genus: g,
                    exponents: current.clone(),
                });
            }
            return;
        }
        let mut k = min;
        while k as usize * slots <= left as usize {
            current.push(k);
            rec(left - k, slots - 1, k, current, g, out);
            current.pop();
            k += 1;
        }
    }
    rec(total as u32, n, 0, &mut current, g, &mut out);
    out
}

/// The Virasoro operator `L_n` in `t_0, ..., t_{index_cap}`.
///
/// Sectors count powers of `u`; the `t_0^2/2` term of `L_{-1}` sits at shift `-2`
/// because it carries `u^{-2}`.
pub fn build_l(n: i64, index_cap: u32) -> Result<DiffOperator> {
    let cap = Cap::UNBOUNDED;
    let one = || GradedPoly::one(Alphabet::T, cap);
    let t = |i: u32| GradedPoly::var(Alphabet::T, cap, i);
    let mut terms = Vec::new();
    match n {
        n if n < -1 => return Err(Error::Domain(format!("L_{n} is not defined"))),
        -1 => {
            terms.push(OperatorTerm::new(int(-1), 0, one(), &[0]));
            for i in 0..index_cap {
                terms.push(OperatorTerm::new(int(1), 0, t(i + 1), &[i]));
            }
            let half_t0_sq =
                GradedPoly::monomial(Alphabet::T, cap, Monomial::power(0, 2), ratio(1, 2));
            terms.push(OperatorTerm::new(int(1), -2, half_t0_sq, &[]));
        }
        0 => {
            terms.push(OperatorTerm::new(ratio(-3, 2), 0, one(), &[1]));
            for i in 0..=index_cap {
                terms.push(OperatorTerm::new(ratio(2 * i as i64 + 1, 2), 0, t(i), &[i]));
            }
            terms.push(OperatorTerm::new(ratio(1, 16), 0, one(), &[]));
        }
        n => {
            let n = n as u32;
            let two_pow = int(2).pow(n as i32 + 1);
            let lead = odd_double_factorial(2 * n as i64 + 3)? / &two_pow;
            terms.push(OperatorTerm::new(-lead, 0, one(), &[n + 1]));
            for i in 0..=index_cap {
                let c = odd_double_factorial(2 * i as i64 + 2 * n as i64 + 1)?
                    / (odd_double_factorial(2 * i as i64 - 1)? * &two_pow);
                terms.push(OperatorTerm::new(c, 0, t(i), &[i + n]));
            }
            for i in 0..n {
                let c = odd_double_factorial(2 * i as i64 + 1)?
                    * odd_double_factorial(2 * (n - i) as i64 - 1)?
                    / (&two_pow * int(2));
                terms.push(OperatorTerm::new(c, 2, one(), &[i, n - 1 - i]));
            }
        }
    }
    Ok(DiffOperator::new(format!("L_{n}"), Alphabet::T, terms))
}

/// Coefficients of the psi potential `F = sum_g u^{2g-2} F_g` seen through a
/// bracket lookup: the coefficient of `u^{2g-2} prod t_k^{n_k}` is
/// `<prod tau>_g / prod n_k!`.
struct BracketSource<'a> {
    lookup: &'a (dyn Fn(&PsiKey) -> Result<Rational> + Sync),
}

impl CoefficientSource for BracketSource<'_> {
    fn alphabet(&self) -> Alphabet {
        Alphabet::T
    }

    fn coeff(&self, sector: i32, m: &Monomial) -> Result<Rational> {
        if sector < -2 || sector % 2 != 0 {
            return Ok(Rational::zero());
        }
        let key = PsiKey::from_monomial(((sector + 2) / 2) as u32, m);
        if !key.is_stable() || !key.has_top_degree() {
            return Ok(Rational::zero());
        }
        Ok((self.lookup)(&key)? / Rational::from_integer(m.factorial_product()))
    }

    fn sectors(&self, max_sector: i32) -> Vec<i32> {
        (-2..=max_sector).step_by(2).collect()
    }
}

/// Operators `L_n` built on demand and shared between threads.
#[derive(Default)]
struct OperatorCache {
    ops: RwLock<HashMap<(i64, u32), Arc<DiffOperator>>>,
}

impl OperatorCache {
    fn get(&self, n: i64, index_cap: u32) -> Result<Arc<DiffOperator>> {
        if let Some(op) = self.ops.read().expect("lock").get(&(n, index_cap)) {
            return Ok(op.clone());
        }
        let op = Arc::new(build_l(n, index_cap)?);
        self.ops
            .write()
            .expect("lock")
            .insert((n, index_cap), op.clone());
        Ok(op)
    }
}

/// Computes one stable, top-degree, non-seed key from smaller ones.
fn derive_bracket(
    key: &PsiKey,
    ops: &OperatorCache,
    lookup: &(dyn Fn(&PsiKey) -> Result<Rational> + Sync),
) -> Result<Rational> {
    let g = key.genus;
    let n = key.len();
    let e = &key.exponents;
    if e.first() == Some(&0) {
        // string equation on the first tau_0
        let rest = key.without(0);
        let mut acc = Rational::zero();
        for j in 0..rest.len() {
            if rest.exponents[j] == 0 || (j > 0 && rest.exponents[j] == rest.exponents[j - 1]) {
                continue;
            }
            let mult = rest
                .exponents
                .iter()
                .filter(|&&k| k == rest.exponents[j])
                .count();
            let mut lowered = rest.exponents.clone();
            lowered[j] -= 1;
            let lowered = PsiKey::new(g, lowered);
            acc += int(mult as i64) * bracket_or_zero(&lowered, lookup)?;
        }
        return Ok(acc);
    }
    if n >= 2 && e.contains(&1) {
        let j = e.iter().position(|&k| k == 1).expect("present");
        let rest = key.without(j);
        let factor = int(2 * g as i64 - 2 + rest.len() as i64);
        return Ok(factor * bracket_or_zero(&rest, lookup)?);
    }
    let k_max = *e
        .last()
        .ok_or_else(|| Error::Domain(format!("{key:?} has no insertions")))?;
    let op = ops.get(k_max as i64 - 1, k_max)?;
    let target = key
        .monomial()
        .without_var(k_max)
        .expect("largest exponent present");
    let source = BracketSource { lookup };
    let relation = constraint_at(&op, &source, 2 * g as i32 - 2, &target)?;
    Ok(relation.solve()? * Rational::from_integer(key.monomial().factorial_product()))
}

fn bracket_or_zero(
    key: &PsiKey,
    lookup: &(dyn Fn(&PsiKey) -> Result<Rational> + Sync),
) -> Result<Rational> {
    if !key.is_stable() || !key.has_top_degree() {
        return Ok(Rational::zero());
    }
    lookup(key)
}

fn is_seed(key: &PsiKey) -> bool {
    key.genus == 0 && key.exponents == [0, 0, 0]
}

/// Memoized psi-class intersection numbers. Safe to query from many threads.
#[derive(Default)]
pub struct PsiEngine {
    memo: RwLock<HashMap<PsiKey, Rational>>,
    ops: OperatorCache,
}

impl PsiEngine {
    pub fn new() -> Self {
        Self::default()
    }

    /// `<tau_{k_1} ... tau_{k_n}>_g`; zero when the degree does not match.
    pub fn psi_number(&self, key: &PsiKey) -> Result<Rational> {
        if !key.is_stable() {
            return Err(Error::Domain(format!("{key:?} is unstable")));
        }
        if !key.has_top_degree() {
            return Ok(Rational::zero());
        }
        if is_seed(key) {
            return Ok(Rational::one());
        }
        if let Some(v) = self.memo.read().expect("lock").get(key) {
            return Ok(v.clone());
        }
        let v = derive_bracket(key, &self.ops, &|k: &PsiKey| self.psi_number(k))?;
        self.memo
            .write()
            .expect("lock")
            .insert(key.clone(), v.clone());
        Ok(v)
    }

    /// Bracket with possibly negative exponents, which give zero.
    pub fn bracket(&self, genus: u32, exponents: &[i64]) -> Result<Rational> {
        if exponents.iter().any(|&k| k < 0) {
            return Ok(Rational::zero());
        }
        self.psi_number(&PsiKey::new(genus, exponents.iter().map(|&k| k as u32)))
    }

    /// Number of memoized values.
    pub fn memo_len(&self) -> usize {
        self.memo.read().expect("lock").len()
    }

    /// Solves every key with genus `<= max_genus` and at most `max_points`
    /// insertions through the stratified solver, filling the memo.
    pub fn ensure(&self, max_genus: u32, max_points: usize) -> Result<()> {
        let family = PsiFamily {
            max_genus,
            max_points,
            ops: &self.ops,
        };
        let table = solve(&family, BTreeMap::new())?;
        let mut memo = self.memo.write().expect("lock");
        for (k, v) in table {
            memo.entry(k).or_insert(v);
        }
        Ok(())
    }

    /// The truncated potential `sum_{g <= G} u^{2g-2} F_g` restricted to at
    /// most `max_points` insertions, capped at degree `max_points`.
    pub fn gw_potential(&self, max_genus: u32, max_points: usize) -> Result<Potential> {
        self.ensure(max_genus, max_points)?;
        let cap = Cap::degree(max_points as u32);
        let mut body = ExpPoly::zero(Alphabet::T, cap);
        for g in 0..=max_genus {
            for n in 1..=max_points {
                for key in top_degree_keys(g, n) {
                    if !key.is_stable() {
                        continue;
                    }
                    let m = key.monomial();
                    let v = self.psi_number(&key)? / Rational::from_integer(m.factorial_product());
                    body.add_term(2 * g as i32 - 2, m, v);
                }
            }
        }
        Ok(Potential::new(body, 2 * max_genus as i32 - 2))
    }
}

/// The psi recursion as a stratified family: strata are `(g, n)`; genus `g`
/// goes up to `max_points + (max_genus - g)` insertions because each genus
/// step of the quadratic terms needs one more insertion below.
struct PsiFamily<'a> {
    max_genus: u32,
    max_points: usize,
    ops: &'a OperatorCache,
}

impl RecursionFamily for PsiFamily<'_> {
    type Key = PsiKey;

    fn strata(&self) -> Vec<Vec<PsiKey>> {
        let mut out = Vec::new();
        for g in 0..=self.max_genus {
            let bound = self.max_points + (self.max_genus - g) as usize;
            for n in 1..=bound {
                let keys: Vec<PsiKey> = top_degree_keys(g, n)
                    .into_iter()
                    .filter(PsiKey::is_stable)
                    .collect();
                if !keys.is_empty() {
                    out.push(keys);
                }
            }
        }
        out
    }

    fn evaluate(&self, key: &PsiKey, solved: &BTreeMap<PsiKey, Rational>) -> Result<Rational> {
        if is_seed(key) {
            return Ok(Rational::one());
        }
        let lookup = |k: &PsiKey| -> Result<Rational> {
            if is_seed(k) {
                return Ok(Rational::one());
            }
            solved.get(k).cloned().ok_or_else(|| Error::Dependency {
                what: format!("{k:?}"),
            })
        };
        derive_bracket(key, self.ops, &lookup)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(g: u32, e: &[u32]) -> PsiKey {
        PsiKey::new(g, e.iter().copied())
    }

    #[test]
    fn operator_shapes() {
        let l0 = build_l(0, 4).unwrap();
        assert_eq!(l0.term(0, &[]).unwrap().coefficient, ratio(1, 16));
        let lm1 = build_l(-1, 4).unwrap();
        let q = lm1.term(-2, &[]).unwrap().scaled_multiplier();
        assert_eq!(q.coeff(&Monomial::power(0, 2)), ratio(1, 2));
        let l1 = build_l(1, 4).unwrap();
        let dd = l1.term(2, &[0, 0]).unwrap();
        assert_eq!(dd.coefficient, ratio(1, 8));
        assert!(dd.multiplier.is_one());
        assert_eq!(l1.pivot().unwrap(), (2, ratio(-15, 4)));
        assert!(build_l(-2, 4).is_err());
    }

    #[test]
    fn small_values() {
        let e = PsiEngine::new();
        assert_eq!(e.psi_number(&key(0, &[0, 0, 0])).unwrap(), int(1));
        assert_eq!(e.psi_number(&key(1, &[1])).unwrap(), ratio(1, 24));
        assert_eq!(e.psi_number(&key(0, &[0, 0, 1])).unwrap(), int(0));
        assert_eq!(e.psi_number(&key(0, &[1, 0, 0, 0])).unwrap(), int(1));
        assert_eq!(e.psi_number(&key(2, &[4])).unwrap(), ratio(1, 1152));
        assert_eq!(e.psi_number(&key(2, &[3, 2])).unwrap(), ratio(29, 5760));
        assert_eq!(e.psi_number(&key(2, &[2, 2, 2])).unwrap(), ratio(7, 240));
        assert_eq!(e.psi_number(&key(1, &[1, 1])).unwrap(), ratio(1, 24));
        assert!(e.psi_number(&key(0, &[0])).is_err());
        assert!(e.psi_number(&key(1, &[])).is_err());
    }

    #[test]
    fn stratified_solve_matches_lazy() {
        let lazy = PsiEngine::new();
        let strat = PsiEngine::new();
        strat.ensure(3, 4).unwrap();
        for g in 0..=3 {
            for n in 1..=4 {
                for k in top_degree_keys(g, n).into_iter().filter(PsiKey::is_stable) {
                    assert_eq!(
                        lazy.psi_number(&k).unwrap(),
                        strat.psi_number(&k).unwrap(),
                        "{k:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn key_enumeration() {
        assert_eq!(top_degree_keys(0, 3), vec![key(0, &[0, 0, 0])]);
        assert_eq!(top_degree_keys(1, 1), vec![key(1, &[1])]);
        assert_eq!(top_degree_keys(2, 2).len(), 3);
    }
}

//! Independent routes to kappa numbers, used to cross-check the `Lhat_n` recursion.
//!
//! - Set partitions: `[prod kappa_{k_i - 1}]_g = sum_P (-1)^{n + l(P)} <prod_j tau_{a_j - |P_j| + 1}>_g`
//!   where `a_j` sums the `k_i` over the block `P_j`.
//! - Change of variables: restrict the psi potential to `t_0 = t_1 = 0`, set
//!   `u = e^{p_0}` and `t_i = -S_{i-1}(-p)`.
//! - Fork flow: the omega potential is the psi potential evaluated at
//!   `sum_i t_i z^i = [z (1 - exp(-sum_k s_k z^{k-1}))]_+`, and its coefficients
//!   are kappa numbers with the index shifted by one.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};

use crate::algebra::{int, ratio, Alphabet, Cap, GradedPoly, Monomial, Rational};
use crate::error::{Error, Result};
use crate::genfun::{schur_seq, substitute_series};
use crate::kappa::{monomials_of_weight, KappaEngine, KappaKey};
use crate::psi::{top_degree_keys, PsiEngine, PsiKey};

/// Default bound on the number of kappa factors for the partition formula.
pub const DEFAULT_PARTITION_LIMIT: usize = 10;

/// Largest genus and `s`-degree accepted by the fork route.
pub const FORK_MAX_GENUS: u32 = 3;
pub const FORK_MAX_DEGREE: u32 = 6;

/// Bracket values by key. Implemented by the psi engine (computing on demand)
/// and by plain tables (where a missing key is a dependency error).
pub trait BracketLookup: Sync {
    fn bracket(&self, key: &PsiKey) -> Result<Rational>;
}

impl BracketLookup for PsiEngine {
    fn bracket(&self, key: &PsiKey) -> Result<Rational> {
        self.psi_number(key)
    }
}

impl BracketLookup for BTreeMap<PsiKey, Rational> {
    fn bracket(&self, key: &PsiKey) -> Result<Rational> {
        if !key.is_stable() {
            return Err(Error::Domain(format!("{key:?} is unstable")));
        }
        if !key.has_top_degree() {
            return Ok(Rational::zero());
        }
        self.get(key).cloned().ok_or_else(|| Error::Dependency {
            what: format!("{key:?}"),
        })
    }
}

/// A set partition of `{0, ..., n-1}` into non-empty blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetPartition {
    blocks: Vec<Vec<usize>>,
}

impl SetPartition {
    /// From a restricted growth string: element `i` lies in block `code[i]`.
    pub fn from_rgs(code: &[u32]) -> Self {
        let count = code.iter().max().map_or(0, |m| *m as usize + 1);
        let mut blocks = vec![Vec::new(); count];
        for (i, &b) in code.iter().enumerate() {
            blocks[b as usize].push(i);
        }
        Self { blocks }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

/// Restricted growth strings of length `n`: `a_0 = 0` and
/// `a_i <= 1 + max(a_0, ..., a_{i-1})`. They are in bijection with the set
/// partitions of an `n`-element set.
pub struct RestrictedGrowth {
    code: Vec<u32>,
    /// `prefix_max[i] = max(code[..=i])`.
    prefix_max: Vec<u32>,
    done: bool,
}

impl RestrictedGrowth {
    pub fn new(n: usize) -> Self {
        Self {
            code: vec![0; n],
            prefix_max: vec![0; n],
            done: false,
        }
    }
}

impl Iterator for RestrictedGrowth {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        if self.done {
            return None;
        }
        let out = self.code.clone();
        // advance: find the rightmost position that can still grow
        let n = self.code.len();
        let mut i = n;
        loop {
            if i <= 1 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.code[i] <= self.prefix_max[i - 1] {
                self.code[i] += 1;
                self.prefix_max[i] = self.prefix_max[i - 1].max(self.code[i]);
                for j in i + 1..n {
                    self.code[j] = 0;
                    self.prefix_max[j] = self.prefix_max[i];
                }
                break;
            }
        }
        Some(out)
    }
}

pub fn set_partitions(n: usize) -> impl Iterator<Item = SetPartition> {
    RestrictedGrowth::new(n).map(|c| SetPartition::from_rgs(&c))
}

/// `[prod kappa_{k_i - 1}]_g` through the set-partition formula.
///
/// Returns zero unless `sum k_i = 3g - 3 + n`. Genus 1 is only defined for
/// `ks = [1]` (value `1/24`).
pub fn kappa_via_partitions<B: BracketLookup + ?Sized>(
    psi: &B,
    genus: u32,
    ks: &[u32],
    limit: usize,
) -> Result<Rational> {
    let n = ks.len();
    if n > limit {
        return Err(Error::Resource(format!(
            "{n} kappa factors exceed the partition limit {limit}"
        )));
    }
    if ks.iter().map(|&k| k as i64).sum::<i64>() != 3 * genus as i64 - 3 + n as i64 {
        return Ok(Rational::zero());
    }
    if genus < 2 {
        return if genus == 1 && ks == [1] {
            Ok(ratio(1, 24))
        } else {
            Err(Error::Domain(format!(
                "partition formula needs genus >= 2, got {genus}"
            )))
        };
    }
    // Collapse all partitions onto signed counts per bracket key.
    let mut counts: HashMap<Vec<u32>, i64> = HashMap::new();
    let mut sums = vec![0i64; n];
    let mut sizes = vec![0i64; n];
    fn rec(
        i: usize,
        blocks: usize,
        ks: &[u32],
        sums: &mut [i64],
        sizes: &mut [i64],
        counts: &mut HashMap<Vec<u32>, i64>,
    ) {
        let n = ks.len();
        if i == n {
            let mut exps = Vec::with_capacity(blocks);
            for j in 0..blocks {
                let e = sums[j] - sizes[j] + 1;
                if e < 0 {
                    return;
                }
                exps.push(e as u32);
            }
            exps.sort_unstable();
            let sign = if (n + blocks).is_multiple_of(2) {
                1
            } else {
                -1
            };
            *counts.entry(exps).or_insert(0) += sign;
            return;
        }
        for j in 0..=blocks.min(n - 1) {
            sums[j] += ks[i] as i64;
            sizes[j] += 1;
            rec(i + 1, blocks.max(j + 1), ks, sums, sizes, counts);
            sums[j] -= ks[i] as i64;
            sizes[j] -= 1;
        }
    }
    rec(0, 0, ks, &mut sums, &mut sizes, &mut counts);
    let mut keys: Vec<(Vec<u32>, i64)> = counts.into_iter().filter(|(_, c)| *c != 0).collect();
    keys.sort();
    let mut total = Rational::zero();
    for (exps, c) in keys {
        total += int(c) * psi.bracket(&PsiKey::new(genus, exps))?;
    }
    Ok(total)
}

/// `[kappa^mu]_g` for a kappa-free monomial `mu` through the partition formula.
pub fn kappa_monomial_via_partitions<B: BracketLookup + ?Sized>(
    psi: &B,
    genus: u32,
    mu: &Monomial,
    limit: usize,
) -> Result<Rational> {
    let ks: Vec<u32> = mu.indices().map(|i| i + 1).collect();
    kappa_via_partitions(psi, genus, &ks, limit)
}

/// All kappa-free values of genus `2..=max_genus` read off the psi potential
/// after the change of variables `t_0 = t_1 = 0`, `u = e^{p_0}`, `t_i = -S_{i-1}(-p)`.
pub fn kappa_via_substitution<B: BracketLookup + ?Sized>(
    psi: &B,
    max_genus: u32,
) -> Result<BTreeMap<(u32, Monomial), Rational>> {
    let mut out = BTreeMap::new();
    for g in 2..=max_genus {
        let w = 3 * g - 3;
        let cap = Cap::weight(w);
        // Only keys with every exponent >= 2 survive t_0 = t_1 = 0; then n <= 3g - 3.
        let mut restricted = GradedPoly::zero(Alphabet::T, Cap::UNBOUNDED);
        for n in 1..=w as usize {
            for key in top_degree_keys(g, n) {
                if key.exponents().iter().any(|&k| k < 2) {
                    continue;
                }
                let m = key.monomial();
                let v = psi.bracket(&key)? / Rational::from_integer(m.factorial_product());
                restricted.add_term(m, v);
            }
        }
        let minus = schur_seq(w, -1);
        let images: BTreeMap<u32, GradedPoly> = (2..=w + 1)
            .map(|i| (i, minus[i as usize - 1].scale(&-Rational::one())))
            .collect();
        let kappa_side = substitute_series(&restricted, &images, Alphabet::P, cap)?;
        for mu in monomials_of_weight(w) {
            let v = kappa_side.coeff(&mu) * Rational::from_integer(mu.factorial_product());
            out.insert((g, mu), v);
        }
    }
    Ok(out)
}

fn check_fork_bounds(genus: u32, degree_cap: u32) -> Result<()> {
    if genus == 0 || genus > FORK_MAX_GENUS || degree_cap > FORK_MAX_DEGREE {
        return Err(Error::Resource(format!(
            "fork route supports 1 <= genus <= {FORK_MAX_GENUS} and s-degree <= {FORK_MAX_DEGREE}, got genus {genus}, degree {degree_cap}"
        )));
    }
    Ok(())
}

/// Largest `s`-weight at genus `g` and degree `<= degree_cap`: `3g - 3 + degree_cap`.
fn fork_weight_cap(genus: u32, degree_cap: u32) -> u32 {
    3 * genus - 3 + degree_cap
}

/// The images `t_i = f_i(s)` from `sum_i t_i z^i = [z (1 - exp(-sum_k s_k z^{k-1}))]_+`.
///
/// A monomial `prod s_k` of the exponential carries `z^{weight - degree + 1}`;
/// terms with a negative power of `z` are dropped. Without `s_0` the map reduces
/// to `sum_i t_{i+1} z^i = 1 - exp(-sum_k s_{k+1} z^k)` and `t_0 = 0`.
pub fn fork_images(
    weight_cap: u32,
    degree_cap: u32,
    include_s0: bool,
) -> Result<BTreeMap<u32, GradedPoly>> {
    let cap = Cap {
        weight: Some(weight_cap),
        degree: Some(degree_cap),
    };
    let first = if include_s0 { 0 } else { 1 };
    let exponent = GradedPoly::from_terms(
        Alphabet::S,
        cap,
        (first..=weight_cap).map(|k| (Monomial::var(k), -Rational::one())),
    );
    let e = exponent.exp_truncated()?;
    let mut images: BTreeMap<u32, GradedPoly> = (0..=weight_cap)
        .map(|i| (i, GradedPoly::zero(Alphabet::S, cap)))
        .collect();
    for (m, c) in e.terms() {
        if m.is_one() {
            continue;
        }
        let z = m.weight() as i64 - m.degree() as i64 + 1;
        if z < 0 || z > weight_cap as i64 {
            continue;
        }
        images
            .get_mut(&(z as u32))
            .expect("slot")
            .add_term(m.clone(), -c);
    }
    Ok(images)
}

/// The same images computed straight from the fork vector field
/// `sum_n (-1)^{n-1}/n! sum_{i_1..i_n} s_{i_1} ... s_{i_n} d/dt_{i_1 + ... + i_n + 1 - n}`,
/// enumerating ordered index tuples.
pub fn fork_images_direct(weight_cap: u32, degree_cap: u32) -> BTreeMap<u32, GradedPoly> {
    let cap = Cap {
        weight: Some(weight_cap),
        degree: Some(degree_cap),
    };
    let mut images: BTreeMap<u32, GradedPoly> = (0..=weight_cap)
        .map(|i| (i, GradedPoly::zero(Alphabet::S, cap)))
        .collect();
    let mut factorial = Rational::one();
    for n in 1..=degree_cap {
        factorial *= int(n as i64);
        let c = int(if n % 2 == 1 { 1 } else { -1 }) / &factorial;
        let mut tuple = vec![0u32; n as usize];
        loop {
            let sum: u32 = tuple.iter().sum();
            let index = sum as i64 + 1 - n as i64;
            if index >= 0 && index <= weight_cap as i64 && sum <= weight_cap {
                images
                    .get_mut(&(index as u32))
                    .expect("slot")
                    .add_term(Monomial::from_indices(tuple.iter().copied()), c.clone());
            }
            // next tuple in [0, weight_cap]^n
            let mut pos = 0;
            loop {
                if pos == tuple.len() {
                    break;
                }
                tuple[pos] += 1;
                if tuple[pos] <= weight_cap {
                    break;
                }
                tuple[pos] = 0;
                pos += 1;
            }
            if pos == tuple.len() {
                break;
            }
        }
    }
    images
}

/// The genus-`g` part of the positive-genus psi potential, restricted to at most
/// `max_points` insertions (and no `t_0` unless `include_t0`).
fn psi_part<B: BracketLookup + ?Sized>(
    psi: &B,
    genus: u32,
    max_points: u32,
    include_t0: bool,
) -> Result<GradedPoly> {
    let mut f = GradedPoly::zero(Alphabet::T, Cap::UNBOUNDED);
    for n in 1..=max_points as usize {
        for key in top_degree_keys(genus, n) {
            if !key.is_stable() || (!include_t0 && key.exponents().contains(&0)) {
                continue;
            }
            let m = key.monomial();
            let v = psi.bracket(&key)? / Rational::from_integer(m.factorial_product());
            f.add_term(m, v);
        }
    }
    Ok(f)
}

/// Coefficients of the genus-`g` omega potential `S^g(s)` up to `s`-degree
/// `degree_cap`, by substituting the fork images into the psi potential.
///
/// The coefficient of `prod s_k^{m_k}` equals `int omega^K / prod m_k!`.
pub fn omega_via_fork<B: BracketLookup + ?Sized>(
    psi: &B,
    genus: u32,
    degree_cap: u32,
    include_s0: bool,
) -> Result<GradedPoly> {
    check_fork_bounds(genus, degree_cap)?;
    let w = fork_weight_cap(genus, degree_cap);
    let cap = Cap {
        weight: Some(w),
        degree: Some(degree_cap),
    };
    let images = fork_images(w, degree_cap, include_s0)?;
    let f = psi_part(psi, genus, degree_cap, include_s0)?;
    substitute_series(&f, &images, Alphabet::S, cap)
}

/// The same coefficients by expanding `e^L F` term by term at `t = 0`:
/// `sum_j 1/j! sum_{a_1..a_j} f_{a_1} ... f_{a_j} <tau_{a_1} ... tau_{a_j}>_g`
/// over ordered tuples, with the images taken from [`fork_images_direct`].
pub fn omega_via_fork_direct<B: BracketLookup + ?Sized>(
    psi: &B,
    genus: u32,
    degree_cap: u32,
) -> Result<GradedPoly> {
    check_fork_bounds(genus, degree_cap)?;
    let w = fork_weight_cap(genus, degree_cap);
    let cap = Cap {
        weight: Some(w),
        degree: Some(degree_cap),
    };
    let images = fork_images_direct(w, degree_cap);
    let mut out = GradedPoly::zero(Alphabet::S, cap);
    let mut factorial = Rational::one();
    for j in 1..=degree_cap {
        factorial *= int(j as i64);
        let mut tuple = vec![0u32; j as usize];
        loop {
            let key = PsiKey::new(genus, tuple.iter().copied());
            if key.is_stable() && key.has_top_degree() {
                let v = psi.bracket(&key)?;
                if !v.is_zero() {
                    let mut term = GradedPoly::constant(Alphabet::S, cap, v / &factorial);
                    for a in &tuple {
                        term = &term * &images[a];
                    }
                    out.add_scaled(&term, &Rational::one());
                }
            }
            let mut pos = 0;
            loop {
                if pos == tuple.len() {
                    break;
                }
                tuple[pos] += 1;
                if tuple[pos] <= w {
                    break;
                }
                tuple[pos] = 0;
                pos += 1;
            }
            if pos == tuple.len() {
                break;
            }
        }
    }
    Ok(out)
}

/// `int omega^K` for the `s`-monomial `K` (an index `k` with multiplicity `m`
/// stands for `m` insertions of `omega^k`), as predicted by the kappa side:
/// zero if some `k = 0`, otherwise `[prod kappa_{k_i - 1}]_g`.
pub fn omega_from_kappa(
    kappa: &KappaEngine,
    genus: u32,
    s_monomial: &Monomial,
) -> Result<Rational> {
    if s_monomial.exponent(0) > 0 {
        return Ok(Rational::zero());
    }
    let pairs: Vec<(u32, u32)> = s_monomial
        .pairs()
        .iter()
        .map(|&(k, m)| (k - 1, m))
        .collect();
    kappa.kappa_number(&KappaKey::new(genus, &pairs))
}

/// Mismatches between the fork route and the kappa numbers at one genus.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ForkComparison {
    pub checked: usize,
    /// `(s-monomial, from kappa numbers, from the fork route)`.
    pub mismatches: Vec<(Monomial, Rational, Rational)>,
}

/// Compares every coefficient of [`omega_via_fork`] (and every monomial the kappa
/// side predicts to be nonzero) with [`omega_from_kappa`].
pub fn fork_agreement<B: BracketLookup + ?Sized>(
    psi: &B,
    kappa: &KappaEngine,
    genus: u32,
    degree_cap: u32,
    include_s0: bool,
) -> Result<ForkComparison> {
    let omega = omega_via_fork(psi, genus, degree_cap, include_s0)?;
    let mut monomials: Vec<Monomial> = omega.terms().map(|(m, _)| m.clone()).collect();
    // Every s-monomial without s_0 of the right weight: parts j = k - 1 sum to 3g - 3,
    // padded with s_1 factors.
    for mu in monomials_of_weight(3 * genus - 3) {
        let base = Monomial::from_indices(mu.indices().map(|j| j + 1));
        for extra in 0..=degree_cap.saturating_sub(base.degree()) {
            monomials.push(base.mul(&Monomial::power(1, extra)));
        }
    }
    monomials.sort();
    monomials.dedup();
    let mut report = ForkComparison::default();
    for m in monomials
        .into_iter()
        .filter(|m| m.degree() <= degree_cap && !m.is_one())
    {
        let actual = omega.coeff(&m) * Rational::from_integer(m.factorial_product());
        let expected = omega_from_kappa(kappa, genus, &m)?;
        report.checked += 1;
        if actual != expected {
            report.mismatches.push((m, expected, actual));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn restricted_growth_strings() {
        let codes: Vec<Vec<u32>> = RestrictedGrowth::new(3).collect();
        assert_eq!(
            codes,
            vec![
                vec![0, 0, 0],
                vec![0, 0, 1],
                vec![0, 1, 0],
                vec![0, 1, 1],
                vec![0, 1, 2]
            ]
        );
        assert_eq!(RestrictedGrowth::new(0).count(), 1);
        assert_eq!(RestrictedGrowth::new(1).count(), 1);
        let p = SetPartition::from_rgs(&[0, 1, 0]);
        assert_eq!(p.blocks(), &[vec![0, 2], vec![1]]);
    }

    #[test]
    fn partition_formula_genus_two() {
        let psi = PsiEngine::new();
        let l = DEFAULT_PARTITION_LIMIT;
        assert_eq!(
            kappa_via_partitions(&psi, 2, &[4], l).unwrap(),
            ratio(1, 1152)
        );
        assert_eq!(
            kappa_via_partitions(&psi, 2, &[3, 2], l).unwrap(),
            ratio(1, 240)
        );
        assert_eq!(
            kappa_via_partitions(&psi, 2, &[2, 2, 2], l).unwrap(),
            ratio(43, 2880)
        );
        assert_eq!(kappa_via_partitions(&psi, 2, &[2, 2], l).unwrap(), int(0));
        assert_eq!(
            kappa_via_partitions(&psi, 1, &[1], l).unwrap(),
            ratio(1, 24)
        );
        assert!(matches!(
            kappa_via_partitions(&psi, 2, &[1; 11][..], 10),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn substitution_images_and_genus_two() {
        let psi = PsiEngine::new();
        let table = kappa_via_substitution(&psi, 2).unwrap();
        assert_eq!(table[&(2, Monomial::var(3))], ratio(1, 1152));
        assert_eq!(table[&(2, Monomial::power(1, 3))], ratio(43, 2880));
        assert!(!table.keys().any(|(g, _)| *g == 1));
        let missing: BTreeMap<PsiKey, Rational> = BTreeMap::new();
        assert!(matches!(
            kappa_via_substitution(&missing, 2),
            Err(Error::Dependency { .. })
        ));
    }

    #[test]
    fn fork_genus_one_and_expo() {
        let psi = PsiEngine::new();
        let s1 = omega_via_fork(&psi, 1, 3, true).unwrap();
        assert_eq!(s1.coeff(&Monomial::var(1)), ratio(1, 24));
        let s2 = omega_via_fork(&psi, 2, 4, true).unwrap();
        assert!(s2.terms().all(|(m, _)| m.exponent(0) == 0));
        let base = Monomial::from_indices([2, 3]);
        let with_s1 = base.with_var(1);
        assert_eq!(s2.coeff(&with_s1), s2.coeff(&base) * int(2));
        assert!(omega_via_fork(&psi, 4, 3, false).is_err());
    }

    #[test]
    fn fork_images_agree_with_direct_expansion() {
        let resummed = fork_images(6, 3, true).unwrap();
        let direct = fork_images_direct(6, 3);
        assert_eq!(resummed, direct);
        // t_0 = s_0 - s_0 s_1 + ...
        assert_eq!(resummed[&0].coeff(&Monomial::var(0)), int(1));
        assert_eq!(resummed[&0].coeff(&Monomial::from_indices([0, 1])), int(-1));
        assert_eq!(resummed[&1].coeff(&Monomial::power(1, 2)), ratio(-1, 2));
    }
}

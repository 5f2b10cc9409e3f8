//! Differential operators acting on exponentials of potentials, extraction of
//! linear relations between potential coefficients, and a triangular solver.
//!
//! A potential `F` is addressed by `(sector, monomial)`: the sector is the
//! exponent of `e^{p_0}` on the kappa side and the power of `u` on the psi side.
//! Every operator is a sum of terms `c * e^{shift p_0} * M * D` where `M` is a
//! polynomial multiplier and `D` is `1`, `d_x` or `d_x d_y`, and we evaluate
//! `e^{-F} op e^F` term by term:
//!
//! - `1` contributes `1`;
//! - `d_x` contributes `d_x F`;
//! - `d_x d_y` contributes `d_x d_y F + d_x F * d_y F`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::algebra::{int, Alphabet, ExpPoly, GradedPoly, Monomial, Rational};
use crate::error::{Error, Result};

/// One summand `coefficient * e^{genus_shift p_0} * multiplier * d_{derivatives}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorTerm {
    pub coefficient: Rational,
    pub genus_shift: i32,
    pub multiplier: GradedPoly,
    /// Zero, one or two variable indices, ascending.
    pub derivatives: Vec<u32>,
}

impl OperatorTerm {
    pub fn new(
        coefficient: Rational,
        genus_shift: i32,
        multiplier: GradedPoly,
        derivatives: &[u32],
    ) -> Self {
        assert!(
            derivatives.len() <= 2,
            "operator terms have at most two derivatives"
        );
        let mut derivatives = derivatives.to_vec();
        derivatives.sort_unstable();
        Self {
            coefficient,
            genus_shift,
            multiplier,
            derivatives,
        }
    }

    /// `coefficient * multiplier` as one polynomial.
    pub fn scaled_multiplier(&self) -> GradedPoly {
        self.multiplier.scale(&self.coefficient)
    }
}

/// A finite sum of [`OperatorTerm`]s, grouped so that each `(shift, derivatives)`
/// pair occurs once.
#[derive(Clone, Debug)]
pub struct DiffOperator {
    name: String,
    alphabet: Alphabet,
    terms: Vec<OperatorTerm>,
    pivot: Option<usize>,
}

impl DiffOperator {
    /// Groups the terms and locates the leading term: the unique shift-0,
    /// single-derivative term whose multiplier has a nonzero constant part.
    pub fn new(name: impl Into<String>, alphabet: Alphabet, raw: Vec<OperatorTerm>) -> Self {
        let mut grouped: BTreeMap<(i32, Vec<u32>), GradedPoly> = BTreeMap::new();
        for t in raw {
            assert_eq!(t.multiplier.alphabet(), alphabet, "multiplier alphabet");
            let slot = grouped
                .entry((t.genus_shift, t.derivatives))
                .or_insert_with(|| GradedPoly::zero(alphabet, t.multiplier.cap()));
            slot.add_scaled(&t.multiplier, &t.coefficient);
        }
        let terms: Vec<OperatorTerm> = grouped
            .into_iter()
            .filter(|(_, m)| !m.is_zero())
            .map(|((shift, derivatives), m)| {
                if m.len() == 1 && !m.constant_term().is_zero() {
                    let c = m.constant_term();
                    OperatorTerm {
                        coefficient: c,
                        genus_shift: shift,
                        multiplier: GradedPoly::one(alphabet, m.cap()),
                        derivatives,
                    }
                } else {
                    OperatorTerm {
                        coefficient: Rational::one(),
                        genus_shift: shift,
                        multiplier: m,
                        derivatives,
                    }
                }
            })
            .collect();
        let candidates: Vec<usize> = terms
            .iter()
            .enumerate()
            .filter(|(_, t)| {
                t.genus_shift == 0
                    && t.derivatives.len() == 1
                    && !t.multiplier.constant_term().is_zero()
            })
            .map(|(i, _)| i)
            .collect();
        let pivot = (candidates.len() == 1).then(|| candidates[0]);
        Self {
            name: name.into(),
            alphabet,
            terms,
            pivot,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn terms(&self) -> &[OperatorTerm] {
        &self.terms
    }

    /// The grouped term with the given shift and derivative indices.
    pub fn term(&self, genus_shift: i32, derivatives: &[u32]) -> Option<&OperatorTerm> {
        let mut d = derivatives.to_vec();
        d.sort_unstable();
        self.terms
            .iter()
            .find(|t| t.genus_shift == genus_shift && t.derivatives == d)
    }

    /// The leading term and the constant `A` of its multiplier.
    pub fn pivot(&self) -> Result<(u32, Rational)> {
        let i = self.pivot.ok_or_else(|| Error::MissingPivot {
            operator: self.name.clone(),
        })?;
        let t = &self.terms[i];
        Ok((
            t.derivatives[0],
            &t.coefficient * t.multiplier.constant_term(),
        ))
    }

    /// Operator with additional terms (regrouped).
    pub fn plus(&self, other: &DiffOperator) -> DiffOperator {
        let raw = self
            .terms
            .iter()
            .chain(other.terms.iter())
            .cloned()
            .collect();
        DiffOperator::new(format!("{}+{}", self.name, other.name), self.alphabet, raw)
    }
}

impl fmt::Display for DiffOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

/// Read access to the coefficients of a potential.
pub trait CoefficientSource: Sync {
    fn alphabet(&self) -> Alphabet;

    /// Coefficient of `e^{sector p_0} * m`. Unknown values are a [`Error::Dependency`].
    fn coeff(&self, sector: i32, m: &Monomial) -> Result<Rational>;

    /// Ascending list of sectors `<= max_sector` that may hold nonzero coefficients.
    fn sectors(&self, max_sector: i32) -> Vec<i32>;
}

impl CoefficientSource for ExpPoly {
    fn alphabet(&self) -> Alphabet {
        ExpPoly::alphabet(self)
    }

    fn coeff(&self, sector: i32, m: &Monomial) -> Result<Rational> {
        Ok(ExpPoly::coeff(self, sector, m))
    }

    fn sectors(&self, max_sector: i32) -> Vec<i32> {
        ExpPoly::sectors(self)
            .map(|(d, _)| d)
            .filter(|d| *d <= max_sector)
            .collect()
    }
}

/// A potential known up to a sector bound. Coefficients beyond the bound are
/// not zero but unknown, so asking for them is a [`Error::Dependency`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Potential {
    body: ExpPoly,
    max_sector: i32,
}

impl Potential {
    pub fn new(body: ExpPoly, max_sector: i32) -> Self {
        Self {
            body: body.truncate_sectors(max_sector),
            max_sector,
        }
    }

    pub fn body(&self) -> &ExpPoly {
        &self.body
    }

    pub fn max_sector(&self) -> i32 {
        self.max_sector
    }

    pub fn coeff(&self, sector: i32, m: &Monomial) -> Result<Rational> {
        if sector > self.max_sector {
            return Err(Error::Dependency {
                what: format!(
                    "sector {sector} coefficient of {m} (known up to sector {})",
                    self.max_sector
                ),
            });
        }
        Ok(self.body.coeff(sector, m))
    }
}

impl CoefficientSource for Potential {
    fn alphabet(&self) -> Alphabet {
        self.body.alphabet()
    }

    fn coeff(&self, sector: i32, m: &Monomial) -> Result<Rational> {
        Potential::coeff(self, sector, m)
    }

    fn sectors(&self, max_sector: i32) -> Vec<i32> {
        CoefficientSource::sectors(&self.body, max_sector)
    }
}

/// `a * x + b` for the single pivot unknown `x`.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Affine {
    a: Rational,
    b: Rational,
}

impl Affine {
    fn known(b: Rational) -> Self {
        Self {
            a: Rational::zero(),
            b,
        }
    }

    fn zero() -> Self {
        Self::known(Rational::zero())
    }

    fn add_scaled(&mut self, other: &Affine, s: &Rational) {
        if !other.a.is_zero() {
            self.a += &other.a * s;
        }
        if !other.b.is_zero() {
            self.b += &other.b * s;
        }
    }

    fn mul(&self, other: &Affine, operator: &str) -> Result<Affine> {
        if !self.a.is_zero() && !other.a.is_zero() {
            return Err(Error::NonlinearRelation {
                operator: operator.to_string(),
            });
        }
        Ok(Affine {
            a: &self.a * &other.b + &other.a * &self.b,
            b: &self.b * &other.b,
        })
    }

    fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }
}

/// The source seen by relation extraction: one coefficient is the unknown.
struct PivotView<'s, S: ?Sized> {
    inner: &'s S,
    pivot: Option<(i32, Monomial)>,
}

impl<S: CoefficientSource + ?Sized> PivotView<'_, S> {
    fn get(&self, sector: i32, m: &Monomial) -> Result<Affine> {
        if let Some((ps, pm)) = &self.pivot {
            if *ps == sector && pm == m {
                return Ok(Affine {
                    a: Rational::one(),
                    b: Rational::zero(),
                });
            }
        }
        Ok(Affine::known(self.inner.coeff(sector, m)?))
    }

    /// Coefficient of `m` in `d_x F` at `sector`.
    fn d1(&self, x: u32, sector: i32, m: &Monomial) -> Result<Affine> {
        let mut out = Affine::zero();
        let e = m.exponent(x) + 1;
        out.add_scaled(&self.get(sector, &m.with_var(x))?, &int(e as i64));
        if x == 0 && self.inner.alphabet() == Alphabet::P && sector != 0 {
            out.add_scaled(&self.get(sector, m)?, &int(sector as i64));
        }
        Ok(out)
    }

    /// Coefficient of `m` in `d_x d_y F` at `sector`.
    fn d2(&self, x: u32, y: u32, sector: i32, m: &Monomial) -> Result<Affine> {
        let mut out = Affine::zero();
        let e = m.exponent(y) + 1;
        out.add_scaled(&self.d1(x, sector, &m.with_var(y))?, &int(e as i64));
        if y == 0 && self.inner.alphabet() == Alphabet::P && sector != 0 {
            out.add_scaled(&self.d1(x, sector, m)?, &int(sector as i64));
        }
        Ok(out)
    }
}

/// Coefficient of `e^{sector p_0} target` in `e^{-F} op e^F`, as an affine
/// function of the pivot unknown (if any).
fn evaluate<S: CoefficientSource + ?Sized>(
    op: &DiffOperator,
    view: &PivotView<'_, S>,
    sector: i32,
    target: &Monomial,
) -> Result<Affine> {
    let divisors = target.divisors();
    let mut acc = Affine::zero();
    for term in &op.terms {
        let s = sector - term.genus_shift;
        let product_sectors = if term.derivatives.len() == 2 {
            view.inner.sectors(s)
        } else {
            Vec::new()
        };
        for a in &divisors {
            let c = term.multiplier.coeff(a);
            if c.is_zero() {
                continue;
            }
            let nu = target.div(a).expect("divisor");
            let e = match term.derivatives.as_slice() {
                [] => {
                    if s == 0 && nu.is_one() {
                        Affine::known(Rational::one())
                    } else {
                        Affine::zero()
                    }
                }
                [x] => view.d1(*x, s, &nu)?,
                [x, y] => {
                    let mut e = view.d2(*x, *y, s, &nu)?;
                    for &s1 in &product_sectors {
                        let s2 = s - s1;
                        if !product_sectors.contains(&s2) {
                            continue;
                        }
                        for nu1 in nu.divisors() {
                            let f1 = view.d1(*x, s1, &nu1)?;
                            if f1.is_zero() {
                                continue;
                            }
                            let f2 = view.d1(*y, s2, &nu.div(&nu1).expect("divisor"))?;
                            e.add_scaled(&f1.mul(&f2, &op.name)?, &Rational::one());
                        }
                    }
                    e
                }
                _ => unreachable!("at most two derivatives"),
            };
            acc.add_scaled(&e, &(&term.coefficient * &c));
        }
    }
    Ok(acc)
}

/// Coefficient of `e^{sector p_0} target` in `e^{-F} op e^F` with every
/// coefficient of `F` known.
pub fn coefficient_of_image<S: CoefficientSource + ?Sized>(
    op: &DiffOperator,
    source: &S,
    sector: i32,
    target: &Monomial,
) -> Result<Rational> {
    let view = PivotView {
        inner: source,
        pivot: None,
    };
    Ok(evaluate(op, &view, sector, target)?.b)
}

/// The relation `A x + B = 0` obtained from one coefficient of `e^{-F} op e^F`,
/// where `x` is the coefficient of `F` at `(sector, pivot_monomial)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    pub operator: String,
    pub sector: i32,
    pub pivot_monomial: Monomial,
    pub pivot_coefficient: Rational,
    pub constant: Rational,
}

impl Relation {
    pub fn solve(&self) -> Result<Rational> {
        if self.pivot_coefficient.is_zero() {
            return Err(Error::ZeroPivot {
                operator: self.operator.clone(),
            });
        }
        Ok(-&self.constant / &self.pivot_coefficient)
    }
}

/// Extracts the relation at `(sector, target)`. The unknown is the coefficient
/// of `target * x_k` where `d_{x_k}` is the operator's leading term; every other
/// coefficient must already be available from `source`.
pub fn constraint_at<S: CoefficientSource + ?Sized>(
    op: &DiffOperator,
    source: &S,
    sector: i32,
    target: &Monomial,
) -> Result<Relation> {
    let (k, _) = op.pivot()?;
    let pivot_monomial = target.with_var(k);
    let view = PivotView {
        inner: source,
        pivot: Some((sector, pivot_monomial.clone())),
    };
    let r = evaluate(op, &view, sector, target)?;
    Ok(Relation {
        operator: op.name.clone(),
        sector,
        pivot_monomial,
        pivot_coefficient: r.a,
        constant: r.b,
    })
}

/// `e^{-F} op e^F` as a full exponential polynomial, keeping sectors `<= max_sector`.
///
/// Products are truncated at the potential's cap.
pub fn apply_operator(op: &DiffOperator, f: &ExpPoly, max_sector: i32) -> Result<ExpPoly> {
    let zero = || ExpPoly::zero(f.alphabet(), f.cap()).with_p0_degree(f.p0_degree());
    let mut out = zero();
    for term in &op.terms {
        let image = match term.derivatives.as_slice() {
            [] => ExpPoly::from_sector(0, GradedPoly::one(f.alphabet(), f.cap())),
            [x] => f.partial(*x),
            [x, y] => {
                let dx = f.partial(*x);
                let dy = f.partial(*y);
                dx.partial(*y)
                    .add(&dx.mul(&dy, Some(max_sector - term.genus_shift))?)
            }
            _ => unreachable!("at most two derivatives"),
        };
        let multiplier = ExpPoly::from_sector(0, term.scaled_multiplier().with_cap(f.cap()));
        let contribution = multiplier
            .mul(&image, Some(max_sector - term.genus_shift))?
            .shift(term.genus_shift);
        out = out.add(&contribution);
    }
    Ok(out.truncate_sectors(max_sector))
}

/// Result of an annihilation check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnihilationReport {
    pub operator: String,
    pub max_sector: i32,
    pub terms_checked: usize,
    /// First nonzero coefficient in canonical order: `(sector, monomial, value)`.
    pub violation: Option<(i32, Monomial, Rational)>,
}

impl AnnihilationReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

impl fmt::Display for AnnihilationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.violation {
            None => write!(
                f,
                "{} annihilates the potential up to sector {}",
                self.operator, self.max_sector
            ),
            Some((s, m, v)) => write!(
                f,
                "{} leaves {} at sector {} monomial {}",
                self.operator,
                crate::algebra::format_rational(v),
                s,
                m
            ),
        }
    }
}

/// Checks that `e^{-F} op e^F` vanishes at every sector `<= max_sector` and every
/// monomial accepted by `region`.
pub fn check_annihilation<R: Fn(i32, &Monomial) -> bool>(
    op: &DiffOperator,
    f: &ExpPoly,
    max_sector: i32,
    region: R,
) -> Result<AnnihilationReport> {
    let image = apply_operator(op, f, max_sector)?;
    let mut terms_checked = 0;
    let mut violation = None;
    'outer: for (s, q) in image.sectors() {
        for (m, c) in q.terms() {
            if !region(s, m) {
                continue;
            }
            terms_checked += 1;
            if !c.is_zero() {
                violation = Some((s, m.clone(), c.clone()));
                break 'outer;
            }
        }
    }
    Ok(AnnihilationReport {
        operator: op.name.clone(),
        max_sector,
        terms_checked,
        violation,
    })
}

/// A family of unknowns solved stratum by stratum.
///
/// Keys inside one stratum must not depend on each other, so each stratum can be
/// evaluated in parallel; results are published only once the whole stratum is done.
pub trait RecursionFamily: Sync {
    type Key: Clone + Ord + Send + Sync + fmt::Debug;

    /// Strata in dependency order; the keys of each stratum in canonical order.
    fn strata(&self) -> Vec<Vec<Self::Key>>;

    /// Computes `key` from previously solved values.
    fn evaluate(&self, key: &Self::Key, solved: &BTreeMap<Self::Key, Rational>)
        -> Result<Rational>;
}

/// Solves every key of `family`, starting from `seeds`.
pub fn solve<F: RecursionFamily>(
    family: &F,
    seeds: BTreeMap<F::Key, Rational>,
) -> Result<BTreeMap<F::Key, Rational>> {
    let mut table = seeds;
    for stratum in family.strata() {
        let todo: Vec<&F::Key> = stratum.iter().filter(|k| !table.contains_key(k)).collect();
        let values: Vec<Result<Rational>> = todo
            .par_iter()
            .map(|k| family.evaluate(k, &table))
            .collect();
        for (k, v) in todo.into_iter().zip(values) {
            table.insert(k.clone(), v?);
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{ratio, Cap};

    fn p_const(c: Rational) -> GradedPoly {
        GradedPoly::constant(Alphabet::P, Cap::UNBOUNDED, c)
    }

    fn seed() -> ExpPoly {
        ExpPoly::from_sector(
            0,
            GradedPoly::monomial(Alphabet::P, Cap::UNBOUNDED, Monomial::var(0), ratio(1, 24)),
        )
    }

    #[test]
    fn single_derivative_of_seed() {
        let op = DiffOperator::new(
            "d0",
            Alphabet::P,
            vec![OperatorTerm::new(int(1), 0, p_const(int(1)), &[0])],
        );
        let image = apply_operator(&op, &seed(), 0).unwrap();
        assert_eq!(image.coeff(0, &Monomial::one()), ratio(1, 24));
        assert_eq!(
            coefficient_of_image(&op, &seed(), 0, &Monomial::one()).unwrap(),
            ratio(1, 24)
        );
    }

    #[test]
    fn scalar_operator() {
        let op = DiffOperator::new(
            "c",
            Alphabet::P,
            vec![OperatorTerm::new(ratio(1, 16), 0, p_const(int(1)), &[])],
        );
        let image = apply_operator(&op, &seed(), 4).unwrap();
        assert_eq!(image.coeff(0, &Monomial::one()), ratio(1, 16));
        assert_eq!(image.sectors().count(), 1);
        assert!(matches!(op.pivot(), Err(Error::MissingPivot { .. })));
    }

    #[test]
    fn relation_solves_for_pivot() {
        // (-3/2) d0 + 1/16 on the seed: -3/2 * x + 1/16 = 0 with x = 1/24
        let op = DiffOperator::new(
            "L",
            Alphabet::P,
            vec![
                OperatorTerm::new(ratio(-3, 2), 0, p_const(int(1)), &[0]),
                OperatorTerm::new(ratio(1, 16), 0, p_const(int(1)), &[]),
            ],
        );
        let empty = ExpPoly::zero(Alphabet::P, Cap::UNBOUNDED);
        let r = constraint_at(&op, &empty, 0, &Monomial::one()).unwrap();
        assert_eq!(r.pivot_monomial, Monomial::var(0));
        assert_eq!(r.solve().unwrap(), ratio(1, 24));
    }

    #[test]
    fn nonlinear_pivot_is_rejected() {
        let op = DiffOperator::new(
            "Q",
            Alphabet::P,
            vec![
                OperatorTerm::new(int(1), 0, p_const(int(1)), &[1]),
                OperatorTerm::new(int(1), 0, p_const(int(1)), &[1, 1]),
            ],
        );
        assert!(matches!(
            constraint_at(&op, &seed(), 0, &Monomial::one()),
            Err(Error::NonlinearRelation { .. })
        ));
    }

    #[test]
    fn grouping_merges_terms() {
        let op = DiffOperator::new(
            "G",
            Alphabet::P,
            vec![
                OperatorTerm::new(int(1), 0, p_const(int(1)), &[2]),
                OperatorTerm::new(int(2), 0, p_const(int(1)), &[2]),
            ],
        );
        assert_eq!(op.terms().len(), 1);
        assert_eq!(op.pivot().unwrap(), (2, int(3)));
    }
}

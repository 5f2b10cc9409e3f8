//! Verification suites: published genus-2/3 values and relations, the
//! set-partition cross-check, and annihilation of `e^K` by `Lhat_0..Lhat_6`.

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use rayon::prelude::*;

use crate::algebra::{format_rational, int, ratio, Monomial, Rational};
use crate::error::{Error, Result};
use crate::kappa::{build_lhat, monomials_of_weight, KappaEngine, KappaKey};
use crate::oracle::kappa_monomial_via_partitions;
use crate::psi::PsiEngine;
use crate::solver::check_annihilation;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    PaperTables,
    CrossCheck,
    Annihilation,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-tables" => Ok(Suite::PaperTables),
            "cross-check" => Ok(Suite::CrossCheck),
            "annihilation" => Ok(Suite::Annihilation),
            "all" => Ok(Suite::All),
            other => Err(Error::Parse(format!(
                "unknown suite {other:?} (expected paper-tables, cross-check, annihilation or all)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub actual: String,
    pub passed: bool,
}

impl Check {
    fn values(name: impl Into<String>, expected: &Rational, actual: &Rational) -> Self {
        Self {
            name: name.into(),
            expected: format_rational(expected),
            actual: format_rational(actual),
            passed: expected == actual,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(
            f,
            "{verdict} {}: expected {}, actual {}",
            self.name, self.expected, self.actual
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        write!(
            f,
            "{} checks, {} failed",
            self.checks.len(),
            self.failures()
        )
    }
}

/// A factor in a relation: a genus-3 number, a genus-2 number, or `[kappa_0]_1`.
#[derive(Clone, Copy)]
enum Factor {
    G3(&'static [u32]),
    G2(&'static [u32]),
    K0,
}

use Factor::{G2, G3, K0};

const K3: Factor = G2(&[3]);
const K21: Factor = G2(&[2, 1]);
const K111: Factor = G2(&[1, 1, 1]);

type Term = ((i64, i64), &'static [Factor]);

/// The genus-3 relations obtained from `[Lhat_n e^K]` at the listed monomial:
/// the left value equals the right-hand combination of lower numbers.
const GENUS_THREE_RELATIONS: &[(&str, &[u32], &[Term])] = &[
    (
        "Lhat_6 at 1",
        &[6],
        &[((1, 99), &[K3]), ((1, 1287), &[K21]), ((1, 715), &[K3, K0])],
    ),
    (
        "Lhat_1 at p5",
        &[5, 1],
        &[((12, 1), &[G3(&[6])]), ((1, 30), &[K3])],
    ),
    (
        "Lhat_2 at p4",
        &[4, 2],
        &[
            ((136, 7), &[G3(&[6])]),
            ((4, 35), &[K3]),
            ((1, 35), &[K3, K0]),
        ],
    ),
    (
        "Lhat_3 at p3",
        &[3, 3],
        &[
            ((136, 7), &[G3(&[6])]),
            ((38, 315), &[K3]),
            ((1, 63), &[K21]),
            ((-1, 1), &[K3, K3]),
            ((31, 630), &[K3, K0]),
            ((1, 210), &[K3, K0, K0]),
        ],
    ),
    (
        "Lhat_1 at p4 p1",
        &[4, 1, 1],
        &[
            ((-32, 15), &[G3(&[6])]),
            ((128, 15), &[G3(&[5, 1])]),
            ((4, 3), &[G3(&[4, 2])]),
            ((7, 30), &[K3]),
            ((1, 30), &[K21]),
            ((1, 15), &[K3, K0]),
        ],
    ),
    (
        "Lhat_1 at p3 p2",
        &[3, 2, 1],
        &[
            ((-16, 5), &[G3(&[6])]),
            ((28, 5), &[G3(&[4, 2])]),
            ((16, 5), &[G3(&[3, 3])]),
            ((1, 6), &[K3]),
            ((1, 10), &[K21]),
            ((16, 5), &[K3, K3]),
            ((-1, 1), &[K3, K21]),
            ((1, 30), &[K3, K0]),
        ],
    ),
    (
        "Lhat_2 at p2^2",
        &[2, 2, 2],
        &[
            ((-288, 35), &[G3(&[6])]),
            ((56, 5), &[G3(&[4, 2])]),
            ((6, 35), &[K3]),
            ((2, 7), &[K21]),
            ((1, 35), &[K3, K0]),
            ((2, 35), &[K21, K0]),
        ],
    ),
    (
        "Lhat_1 at p2^2 p1",
        &[2, 2, 1, 1],
        &[
            ((-32, 15), &[G3(&[5, 1])]),
            ((-32, 15), &[G3(&[4, 2])]),
            ((32, 5), &[G3(&[3, 2, 1])]),
            ((4, 3), &[G3(&[2, 2, 2])]),
            ((11, 30), &[K3]),
            ((5, 6), &[K21]),
            ((1, 15), &[K111]),
            ((32, 5), &[K3, K21]),
            ((-2, 1), &[K21, K21]),
            ((1, 15), &[K3, K0]),
            ((1, 5), &[K21, K0]),
        ],
    ),
    (
        "Lhat_1 at p3 p1^2",
        &[3, 1, 1, 1],
        &[
            ((-16, 5), &[G3(&[5, 1])]),
            ((-8, 15), &[G3(&[3, 3])]),
            ((28, 5), &[G3(&[4, 1, 1])]),
            ((8, 3), &[G3(&[3, 2, 1])]),
            ((29, 30), &[K3]),
            ((8, 15), &[K21]),
            ((1, 30), &[K111]),
            ((-8, 15), &[K3, K3]),
            ((8, 3), &[K3, K21]),
            ((-1, 1), &[K3, K111]),
            ((1, 2), &[K3, K0]),
            ((2, 15), &[K21, K0]),
            ((1, 15), &[K3, K0, K0]),
        ],
    ),
    (
        "Lhat_1 at p2 p1^3",
        &[2, 1, 1, 1, 1],
        &[
            ((-16, 5), &[G3(&[4, 1, 1])]),
            ((-8, 5), &[G3(&[3, 2, 1])]),
            ((16, 5), &[G3(&[3, 1, 1, 1])]),
            ((4, 1), &[G3(&[2, 2, 1, 1])]),
            ((9, 10), &[K3]),
            ((19, 5), &[K21]),
            ((29, 30), &[K111]),
            ((-8, 5), &[K3, K21]),
            ((16, 5), &[K3, K111]),
            ((8, 1), &[K21, K21]),
            ((-4, 1), &[K21, K111]),
            ((1, 5), &[K3, K0]),
            ((17, 10), &[K21, K0]),
            ((7, 30), &[K111, K0]),
            ((1, 5), &[K21, K0, K0]),
        ],
    ),
    (
        "Lhat_1 at p1^5",
        &[1, 1, 1, 1, 1, 1],
        &[
            ((-16, 3), &[G3(&[3, 1, 1, 1])]),
            ((20, 3), &[G3(&[2, 1, 1, 1, 1])]),
            ((17, 10), &[K3]),
            ((35, 6), &[K21]),
            ((12, 1), &[K111]),
            ((-16, 3), &[K3, K111]),
            ((80, 3), &[K21, K111]),
            ((-10, 1), &[K111, K111]),
            ((1, 3), &[K3, K0]),
            ((4, 3), &[K21, K0]),
            ((17, 3), &[K111, K0]),
            ((2, 3), &[K111, K0, K0]),
        ],
    ),
];

fn kappa_value(kappa: &KappaEngine, genus: u32, indices: &[u32]) -> Result<Rational> {
    let key = KappaKey::canonical(genus, Monomial::from_indices(indices.iter().copied()));
    kappa.kappa_number(&key)
}

fn factor_value(kappa: &KappaEngine, f: Factor) -> Result<Rational> {
    match f {
        G3(ix) => kappa_value(kappa, 3, ix),
        G2(ix) => kappa_value(kappa, 2, ix),
        K0 => kappa.kappa_number(&KappaKey::new(1, &[(0, 1)])),
    }
}

fn kappa_label(genus: u32, indices: &[u32]) -> String {
    format!(
        "{:?}",
        KappaKey::canonical(genus, Monomial::from_indices(indices.iter().copied()))
    )
}

/// The three genus-2 numbers and the eleven genus-3 relations.
pub fn paper_tables(kappa: &KappaEngine) -> Result<Report> {
    let mut report = Report::default();
    for (ix, expected) in [
        (&[3][..], ratio(1, 1152)),
        (&[2, 1], ratio(1, 240)),
        (&[1, 1, 1], ratio(43, 2880)),
    ] {
        let actual = kappa_value(kappa, 2, ix)?;
        report
            .checks
            .push(Check::values(kappa_label(2, ix), &expected, &actual));
    }
    for &(name, lhs, rhs) in GENUS_THREE_RELATIONS {
        let mut expected = Rational::zero();
        for &((a, b), factors) in rhs {
            let mut term = ratio(a, b);
            for &f in factors {
                term *= factor_value(kappa, f)?;
            }
            expected += term;
        }
        let actual = kappa_value(kappa, 3, lhs)?;
        report.checks.push(Check::values(
            format!("{} from {name}", kappa_label(3, lhs)),
            &expected,
            &actual,
        ));
    }
    Ok(report)
}

/// Recursion against the set-partition formula for every kappa-free monomial
/// of genus `2..=max_genus`.
pub fn cross_check(psi: &PsiEngine, kappa: &KappaEngine, max_genus: u32) -> Result<Report> {
    kappa.ensure_genus(max_genus)?;
    let limit = (3 * max_genus).saturating_sub(3) as usize;
    let jobs: Vec<(u32, Monomial)> = (2..=max_genus)
        .flat_map(|g| {
            monomials_of_weight(3 * g - 3)
                .into_iter()
                .map(move |m| (g, m))
        })
        .collect();
    let checks = jobs
        .par_iter()
        .map(|(g, m)| {
            let expected = kappa_monomial_via_partitions(psi, *g, m, limit)?;
            let actual = kappa.kappa_number(&KappaKey::canonical(*g, m.clone()))?;
            let label = format!("{:?} partition formula", KappaKey::canonical(*g, m.clone()));
            Ok(Check::values(label, &expected, &actual))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Report { checks })
}

/// `Lhat_0 .. Lhat_6` applied to `e^K` with `K` truncated at `max_genus`.
pub fn annihilation(kappa: &KappaEngine, max_genus: u32) -> Result<Report> {
    let potential = kappa.kappa_potential(max_genus)?;
    let cap = (3 * max_genus).saturating_sub(3);
    let max_sector = potential.max_sector();
    let checks = (0..=6i64)
        .into_par_iter()
        .map(|n| {
            let op = build_lhat(n, cap)?;
            let r = check_annihilation(&op, potential.body(), max_sector, |_, _| true)?;
            let (expected, actual) = match &r.violation {
                None => (int(0), int(0)),
                Some((_, _, c)) => (int(0), c.clone()),
            };
            let name = match &r.violation {
                None => format!("{} e^K vanishes up to sector {max_sector}", op.name()),
                Some((s, m, _)) => format!("{} e^K at sector {s}, monomial {m}", op.name()),
            };
            Ok(Check::values(name, &expected, &actual))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Report { checks })
}

/// Runs a named suite.
pub fn run_suite(
    suite: Suite,
    max_genus: u32,
    psi: &PsiEngine,
    kappa: &KappaEngine,
) -> Result<Report> {
    if max_genus < 2 && suite != Suite::PaperTables {
        return Err(Error::Domain(format!(
            "verification needs max genus >= 2, got {max_genus}"
        )));
    }
    Ok(match suite {
        Suite::PaperTables => paper_tables(kappa)?,
        Suite::CrossCheck => cross_check(psi, kappa, max_genus)?,
        Suite::Annihilation => annihilation(kappa, max_genus)?,
        Suite::All => {
            let mut all = paper_tables(kappa)?;
            all.checks
                .extend(cross_check(psi, kappa, max_genus)?.checks);
            all.checks.extend(annihilation(kappa, max_genus)?.checks);
            all
        }
    })
}

//! Generating-function layer: elementary Schur polynomials `S_i`, complete Bell
//! polynomials `B_d`, the `q_i` series, Bell-coefficient series and polynomial
//! composition.
//!
//! Series in an auxiliary variable `z` whose `z^k` coefficient carries `p_k`
//! are homogeneous: the `z`-exponent of every term equals its weight. Most
//! routines therefore work with one [`GradedPoly`] capped at weight `z_cap`
//! and split it by weight only when a [`ZSeries`] is asked for.

use std::collections::{BTreeMap, HashMap};

use num_traits::One;

use crate::algebra::{binomial_rational, int, Alphabet, Cap, GradedPoly, Monomial, Rational};
use crate::error::{Error, Result};

/// A truncated power series `sum_{m <= z_cap} c_m z^m` with polynomial coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZSeries {
    coefficients: Vec<GradedPoly>,
}

impl ZSeries {
    /// Splits a polynomial by weight: the weight-`m` part becomes the `z^m` coefficient.
    pub fn from_homogeneous_parts(poly: &GradedPoly, z_cap: u32) -> Self {
        let mut coefficients =
            vec![GradedPoly::zero(poly.alphabet(), Cap::weight(z_cap)); z_cap as usize + 1];
        for (m, c) in poly.terms() {
            if let Some(slot) = coefficients.get_mut(m.weight() as usize) {
                slot.add_term(m.clone(), c.clone());
            }
        }
        Self { coefficients }
    }

    pub fn z_cap(&self) -> u32 {
        self.coefficients.len() as u32 - 1
    }

    /// The `z^m` coefficient; zero beyond the cap.
    pub fn coeff(&self, m: u32) -> GradedPoly {
        self.coefficients
            .get(m as usize)
            .cloned()
            .unwrap_or_else(|| {
                GradedPoly::zero(self.coefficients[0].alphabet(), self.coefficients[0].cap())
            })
    }

    pub fn coefficients(&self) -> &[GradedPoly] {
        &self.coefficients
    }

    /// Recombines the coefficients into one polynomial (dropping `z`).
    pub fn flatten(&self) -> GradedPoly {
        let mut out = GradedPoly::zero(self.coefficients[0].alphabet(), Cap::weight(self.z_cap()));
        for c in &self.coefficients {
            out = &out + c;
        }
        out
    }
}

/// `S_0, ..., S_{n_max}` evaluated at `scale * p`, where
/// `sum_i S_i(p) z^i = exp(sum_{k >= 1} p_k z^k)`.
///
/// Uses `i S_i = sum_{k=1}^{i} k p_k S_{i-k}`. `S_i` is homogeneous of weight `i`.
pub fn schur_seq(n_max: u32, scale: i64) -> Vec<GradedPoly> {
    let cap = Cap::weight(n_max);
    let mut seq = vec![GradedPoly::one(Alphabet::P, cap)];
    for i in 1..=n_max {
        let mut acc = GradedPoly::zero(Alphabet::P, cap);
        for k in 1..=i {
            let c = int(scale * k as i64) / int(i as i64);
            acc.add_scaled(
                &seq[(i - k) as usize].mul_term(&Monomial::var(k), &c),
                &Rational::one(),
            );
        }
        seq.push(acc);
    }
    seq
}

/// `S_i` from a sequence built by [`schur_seq`], with `S_i = 0` for negative `i`.
pub fn schur_at(seq: &[GradedPoly], i: i64) -> Option<&GradedPoly> {
    if i < 0 {
        None
    } else {
        seq.get(i as usize)
    }
}

/// Complete Bell polynomial `B_d(x_1, ..., x_d)`, via
/// `B_{d+1} = sum_{k=0}^{d} C(d, k) B_{d-k} x_{k+1}`.
pub fn bell_poly(d: u32) -> GradedPoly {
    bell_polys(d).pop().expect("non-empty")
}

/// `B_0, ..., B_{d_max}`.
pub fn bell_polys(d_max: u32) -> Vec<GradedPoly> {
    let mut b = vec![GradedPoly::one(Alphabet::X, Cap::UNBOUNDED)];
    for d in 0..d_max {
        let mut next = GradedPoly::zero(Alphabet::X, Cap::UNBOUNDED);
        for k in 0..=d {
            let c = binomial_rational(d, k);
            next.add_scaled(
                &b[(d - k) as usize].mul_term(&Monomial::var(k + 1), &c),
                &Rational::one(),
            );
        }
        b.push(next);
    }
    b
}

/// `q_i = -sum_{k >= 1} k^i p_k z^k` as one polynomial (the `z^k` term is the weight-`k` part).
pub fn q_poly(i: u32, z_cap: u32) -> GradedPoly {
    GradedPoly::from_terms(
        Alphabet::P,
        Cap::weight(z_cap),
        (1..=z_cap).map(|k| (Monomial::var(k), -int(k as i64).pow(i as i32))),
    )
}

pub fn q_series(i: u32, z_cap: u32) -> ZSeries {
    ZSeries::from_homogeneous_parts(&q_poly(i, z_cap), z_cap)
}

/// The series `B_d(q_1, ..., q_d)` up to `z^{z_cap}`.
pub fn bell_coeff_series(d: u32, z_cap: u32) -> ZSeries {
    let images: BTreeMap<u32, GradedPoly> = (1..=d).map(|j| (j, q_poly(j, z_cap))).collect();
    let b = bell_poly(d);
    let composed = substitute_series(&b, &images, Alphabet::P, Cap::weight(z_cap))
        .expect("every Bell variable has an image");
    ZSeries::from_homogeneous_parts(&composed, z_cap)
}

/// Polynomial composition `outer(x_i -> images[i])`, truncated at `cap`.
///
/// The result lives in `target`; each image must too.
pub fn substitute_series(
    outer: &GradedPoly,
    images: &BTreeMap<u32, GradedPoly>,
    target: Alphabet,
    cap: Cap,
) -> Result<GradedPoly> {
    for img in images.values() {
        if img.alphabet() != target {
            return Err(Error::AlphabetMismatch {
                left: target,
                right: img.alphabet(),
            });
        }
    }
    let mut powers: HashMap<(u32, u32), GradedPoly> = HashMap::new();
    let mut out = GradedPoly::zero(target, cap);
    for (m, c) in outer.terms() {
        let mut term = GradedPoly::constant(target, cap, c.clone());
        for &(i, e) in m.pairs() {
            if !powers.contains_key(&(i, e)) {
                let img = images.get(&i).ok_or_else(|| {
                    Error::Domain(format!(
                        "no image for variable {}{i}",
                        outer.alphabet().symbol()
                    ))
                })?;
                let img = img.clone().with_cap(cap);
                let mut p = GradedPoly::one(target, cap);
                for k in 1..=e {
                    p = &p * &img;
                    powers.entry((i, k)).or_insert_with(|| p.clone());
                }
            }
            term = &term * &powers[&(i, e)];
            if term.is_zero() {
                break;
            }
        }
        out.add_scaled(&term, &Rational::one());
    }
    Ok(out)
}

/// Outcome of [`faa_di_bruno_check`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaaDiBrunoReport {
    pub d: u32,
    pub z_cap: u32,
    pub equal: bool,
    /// A monomial where both sides differ, with (left, right) coefficients.
    pub first_mismatch: Option<(Monomial, Rational, Rational)>,
}

/// Checks `(z d/dz)^d e^{Q_0} = e^{Q_0} B_d(Q_1, ..., Q_d)` up to `z^{z_cap}`, with
/// `Q_i = sum_{k >= 1} k^i p_k z^k`.
///
/// The left side applies `z d/dz` (the weighted Euler operator, since `z`-degree
/// equals weight) `d` times to the truncated exponential; the right side
/// substitutes into [`bell_poly`].
pub fn faa_di_bruno_check(d: u32, z_cap: u32) -> FaaDiBrunoReport {
    let cap = Cap::weight(z_cap);
    let big_q = |i: u32| q_poly(i, z_cap).scale(&-Rational::one());
    let e = big_q(0)
        .exp_truncated()
        .expect("positive weight under a weight cap");

    let mut left = e.clone();
    for _ in 0..d {
        left = GradedPoly::from_terms(
            Alphabet::P,
            cap,
            left.terms()
                .map(|(m, c)| (m.clone(), c * int(m.weight() as i64))),
        );
    }

    let images: BTreeMap<u32, GradedPoly> = (1..=d).map(|j| (j, big_q(j))).collect();
    let b = substitute_series(&bell_poly(d), &images, Alphabet::P, cap).expect("images present");
    let right = &e * &b;

    let diff = &left - &right;
    let first_mismatch = diff
        .terms()
        .next()
        .map(|(m, _)| (m.clone(), left.coeff(m), right.coeff(m)));
    FaaDiBrunoReport {
        d,
        z_cap,
        equal: diff.is_zero(),
        first_mismatch,
    }
}

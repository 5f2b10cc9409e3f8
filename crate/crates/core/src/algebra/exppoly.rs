use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;

use super::monomial::Monomial;
use super::poly::{Alphabet, Cap, GradedPoly};
use super::rational::{int, Rational};
use crate::error::Result;

/// Default bound on the explicit power of `p_0` kept in each sector.
pub const DEFAULT_P0_DEGREE: u32 = 2;

/// A finite sum `sum_d e^{d p_0} q_d` with polynomial sector factors `q_d`.
///
/// Over the `P` alphabet, `p_0` may also appear explicitly inside each `q_d`
/// (with bounded degree) and the derivative in `p_0` acts on the exponential
/// too. Over the `T` alphabet the sector integer is just an extra grading
/// (the power of `u`), and no variable interacts with it.
#[derive(Clone, PartialEq, Eq)]
pub struct ExpPoly {
    alphabet: Alphabet,
    cap: Cap,
    p0_degree: u32,
    sectors: BTreeMap<i32, GradedPoly>,
}

impl ExpPoly {
    pub fn zero(alphabet: Alphabet, cap: Cap) -> Self {
        Self {
            alphabet,
            cap,
            p0_degree: DEFAULT_P0_DEGREE,
            sectors: BTreeMap::new(),
        }
    }

    pub fn with_p0_degree(mut self, limit: u32) -> Self {
        self.p0_degree = limit;
        let sectors = std::mem::take(&mut self.sectors);
        for (d, q) in sectors {
            self.add_sector(d, q);
        }
        self
    }

    /// `e^{sector p_0} * poly`.
    pub fn from_sector(sector: i32, poly: GradedPoly) -> Self {
        let mut e = Self::zero(poly.alphabet(), poly.cap());
        e.add_sector(sector, poly);
        e
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn cap(&self) -> Cap {
        self.cap
    }

    pub fn p0_degree(&self) -> u32 {
        self.p0_degree
    }

    pub fn is_zero(&self) -> bool {
        self.sectors.is_empty()
    }

    pub fn sectors(&self) -> impl Iterator<Item = (i32, &GradedPoly)> {
        self.sectors.iter().map(|(d, q)| (*d, q))
    }

    pub fn sector(&self, d: i32) -> Option<&GradedPoly> {
        self.sectors.get(&d)
    }

    pub fn coeff(&self, sector: i32, m: &Monomial) -> Rational {
        self.sectors
            .get(&sector)
            .map_or_else(Rational::zero, |q| q.coeff(m))
    }

    fn admits(&self, m: &Monomial) -> bool {
        self.alphabet != Alphabet::P || m.exponent(0) <= self.p0_degree
    }

    pub fn add_term(&mut self, sector: i32, m: Monomial, c: Rational) {
        if c.is_zero() || !self.admits(&m) {
            return;
        }
        let q = self
            .sectors
            .entry(sector)
            .or_insert_with(|| GradedPoly::zero(self.alphabet, self.cap));
        q.add_term(m, c);
        if q.is_zero() {
            self.sectors.remove(&sector);
        }
    }

    /// Adds `e^{sector p_0} * poly`; the polynomial must share this alphabet.
    pub fn add_sector(&mut self, sector: i32, poly: GradedPoly) {
        assert_eq!(
            poly.alphabet(),
            self.alphabet,
            "alphabet mismatch in sector addition"
        );
        for (m, c) in poly.terms() {
            self.add_term(sector, m.clone(), c.clone());
        }
    }

    pub fn add(&self, other: &ExpPoly) -> ExpPoly {
        let mut out = self.clone();
        for (d, q) in &other.sectors {
            out.add_sector(*d, q.clone());
        }
        out
    }

    pub fn scale(&self, s: &Rational) -> ExpPoly {
        let mut out = ExpPoly {
            sectors: BTreeMap::new(),
            ..self.clone()
        };
        for (d, q) in &self.sectors {
            out.add_sector(*d, q.scale(s));
        }
        out
    }

    /// Multiplies by `e^{shift p_0}`.
    pub fn shift(&self, shift: i32) -> ExpPoly {
        ExpPoly {
            sectors: self
                .sectors
                .iter()
                .map(|(d, q)| (d + shift, q.clone()))
                .collect(),
            ..self.clone()
        }
    }

    /// Product, keeping only sectors `<= max_sector` when given.
    pub fn mul(&self, other: &ExpPoly, max_sector: Option<i32>) -> Result<ExpPoly> {
        let mut out = ExpPoly::zero(self.alphabet, self.cap.meet(other.cap))
            .with_p0_degree(self.p0_degree.min(other.p0_degree));
        for (d1, a) in &self.sectors {
            for (d2, b) in &other.sectors {
                if max_sector.is_some_and(|s| d1 + d2 > s) {
                    continue;
                }
                out.add_sector(d1 + d2, a.checked_mul(b)?);
            }
        }
        Ok(out)
    }

    /// Partial derivative. Over the `P` alphabet, `d/dp_0` also differentiates
    /// the exponential: `d/dp_0 (e^{d p_0} q) = e^{d p_0} (d q + dq/dp_0)`.
    pub fn partial(&self, index: u32) -> ExpPoly {
        let mut out = ExpPoly {
            sectors: BTreeMap::new(),
            ..self.clone()
        };
        for (d, q) in &self.sectors {
            out.add_sector(*d, q.partial(index));
            if index == 0 && self.alphabet == Alphabet::P && *d != 0 {
                out.add_sector(*d, q.scale(&int(*d as i64)));
            }
        }
        out
    }

    /// Drops every sector above `max_sector`.
    pub fn truncate_sectors(mut self, max_sector: i32) -> ExpPoly {
        self.sectors.retain(|d, _| *d <= max_sector);
        self
    }
}

impl fmt::Debug for ExpPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for ExpPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sectors.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .sectors
            .iter()
            .map(|(d, q)| format!("[{d}]({q})"))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

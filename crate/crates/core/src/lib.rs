//! Exact intersection numbers of psi and kappa classes on moduli spaces of curves.
//!
//! Psi numbers `<tau_{d_1} ... tau_{d_n}>_g` come from the string, dilaton and
//! higher Virasoro constraints on the Gromov-Witten potential. Kappa numbers
//! `[kappa_{i_1} ... kappa_{i_n}]_g` come from the operators `Lhat_n` that
//! annihilate `e^K`, with `K = p_0/24 + sum_g e^{(2g-2) p_0} K_g`. Both are
//! driven by the same relation extractor in [`solver`]; [`oracle`] computes kappa
//! numbers independently from psi numbers for cross-checking.
//!
//! All arithmetic is exact (`BigRational`).

pub mod algebra;
pub mod error;
pub mod genfun;
pub mod kappa;
pub mod oracle;
pub mod psi;
pub mod solver;
pub mod table;
pub mod verify;

pub use error::{Error, Result};

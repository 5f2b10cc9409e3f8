//! Exact arithmetic layer: rationals, monomials over indexed variables, sparse
//! weight-graded polynomials and their extension by exponential sectors in `p_0`.

pub mod exppoly;
pub mod monomial;
pub mod poly;
pub mod rational;

pub use exppoly::ExpPoly;
pub use monomial::Monomial;
pub use poly::{poly_mul, Alphabet, Cap, GradedPoly};
pub use rational::{
    binomial_rational, format_rational, int, odd_double_factorial, parse_rational, ratio, Rational,
};

//! Test-side oracles that share no code with the library's solvers.

#![allow(dead_code)]

use std::collections::HashMap;

use kappa_forge::algebra::{int, ratio, Rational};
use num_traits::Zero;

fn double_factorial(m: i64) -> Rational {
    // (2j - 1)!! for odd m >= -1
    let mut acc = 1i64;
    let mut k = m;
    while k > 1 {
        acc *= k;
        k -= 2;
    }
    int(acc)
}

/// Psi numbers from the Dijkgraaf-Verlinde-Verlinde recursion, removing the
/// largest exponent each step.
#[derive(Default)]
pub struct DvvOracle {
    memo: HashMap<(u32, Vec<u32>), Rational>,
}

impl DvvOracle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn value(&mut self, genus: u32, exponents: &[u32]) -> Rational {
        let mut ks = exponents.to_vec();
        ks.sort_unstable();
        let n = ks.len() as i64;
        let g = genus as i64;
        if 2 * g - 2 + n <= 0 {
            return Rational::zero();
        }
        if ks.iter().map(|&k| k as i64).sum::<i64>() != 3 * g - 3 + n {
            return Rational::zero();
        }
        if genus == 0 && ks == [0, 0, 0] {
            return int(1);
        }
        if genus == 1 && ks == [1] {
            return ratio(1, 24);
        }
        if let Some(v) = self.memo.get(&(genus, ks.clone())) {
            return v.clone();
        }
        let top = ks.pop().expect("non-empty");
        if top == 0 {
            return Rational::zero();
        }
        let k = top as i64 - 1;
        let rest = ks;
        let mut acc = Rational::zero();
        for j in 0..rest.len() {
            let d = rest[j] as i64;
            let mut others = rest.clone();
            others.remove(j);
            others.push((k + d) as u32);
            let c = double_factorial(2 * k + 2 * d + 1) / double_factorial(2 * d - 1);
            acc += c * self.value(genus, &others);
        }
        for r in 0..k {
            let s = k - 1 - r;
            let c = double_factorial(2 * r + 1) * double_factorial(2 * s + 1) / int(2);
            if genus >= 1 {
                let mut both = rest.clone();
                both.push(r as u32);
                both.push(s as u32);
                acc += &c * self.value(genus - 1, &both);
            }
            for mask in 0..(1u32 << rest.len()) {
                let mut left = vec![r as u32];
                let mut right = vec![s as u32];
                for (i, &e) in rest.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        left.push(e);
                    } else {
                        right.push(e);
                    }
                }
                for g1 in 0..=genus {
                    let a = self.value(g1, &left);
                    if a.is_zero() {
                        continue;
                    }
                    acc += &c * a * self.value(genus - g1, &right);
                }
            }
        }
        let v = acc / double_factorial(2 * k + 3);
        self.memo
            .insert((genus, exponents_sorted(exponents)), v.clone());
        v
    }
}

fn exponents_sorted(e: &[u32]) -> Vec<u32> {
    let mut v = e.to_vec();
    v.sort_unstable();
    v
}

//! Multivariate polynomials with exact evaluation and differentiation, used
//! for chart-mode metric and complex-structure entries.

use serde::{Deserialize, Serialize};

/// One monomial: `c * u_1^{p_1} ... u_d^{p_d}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub c: f64,
    pub p: Vec<u32>,
}

/// Sum of monomials in `nvars` variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Poly {
    pub terms: Vec<Monomial>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { terms: Vec::new() }
    }

    pub fn constant(c: f64, nvars: usize) -> Self {
        if c == 0.0 {
            return Poly::zero();
        }
        Poly { terms: vec![Monomial { c, p: vec![0; nvars] }] }
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|m| {
                let mut v = m.c;
                for (x, &pw) in u.iter().zip(&m.p) {
                    for _ in 0..pw {
                        v *= x;
                    }
                }
                v
            })
            .sum()
    }

    /// Exact partial derivative with respect to variable `var`.
    pub fn partial(&self, var: usize) -> Poly {
        let terms = self
            .terms
            .iter()
            .filter(|m| var < m.p.len() && m.p[var] > 0)
            .map(|m| {
                let mut p = m.p.clone();
                p[var] -= 1;
                Monomial { c: m.c * f64::from(m.p[var]), p }
            })
            .collect();
        Poly { terms }
    }

    pub fn negated(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|m| Monomial { c: -m.c, p: m.p.clone() }).collect(),
        }
    }
}

//! Sparse bivariate polynomials with real coefficients.
//!
//! Used for the multinomial substitutions behind coordinate changes and the
//! oscillator coefficient tables, and (in compiled form) for fast evaluation
//! of vector fields inside the integrator.

use std::collections::BTreeMap;
use std::ops::{Add, Mul};

/// `Σ c_kl · u^k · v^l`, keyed by `(k, l)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Poly2 {
    terms: BTreeMap<(u32, u32), f64>,
}

impl Poly2 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial(0, 0, c)
    }

    pub fn monomial(k: u32, l: u32, c: f64) -> Self {
        let mut p = Self::zero();
        p.add_term(k, l, c);
        p
    }

    /// `cu · u + cv · v`
    pub fn linear(cu: f64, cv: f64) -> Self {
        let mut p = Self::zero();
        p.add_term(1, 0, cu);
        p.add_term(0, 1, cv);
        p
    }

    pub fn add_term(&mut self, k: u32, l: u32, c: f64) {
        if c == 0.0 {
            return;
        }
        *self.terms.entry((k, l)).or_insert(0.0) += c;
    }

    pub fn coeff(&self, k: u32, l: u32) -> f64 {
        self.terms.get(&(k, l)).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), f64)> + '_ {
        self.terms.iter().map(|(&kl, &c)| (kl, c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|&c| c == 0.0)
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .filter(|(_, &c)| c != 0.0)
            .map(|(&(k, l), _)| k + l)
            .max()
            .unwrap_or(0)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zero();
        for (&(k, l), &c) in &self.terms {
            out.add_term(k, l, s * c);
        }
        out
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::constant(1.0);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    pub fn eval(&self, u: f64, v: f64) -> f64 {
        self.terms
            .iter()
            .map(|(&(k, l), &c)| c * u.powi(k as i32) * v.powi(l as i32))
            .sum()
    }

    /// Substitute `u → su`, `v → sv` where `su`, `sv` are themselves polynomials.
    pub fn compose(&self, su: &Poly2, sv: &Poly2) -> Self {
        let max_deg = self.terms.keys().map(|&(k, l)| k.max(l)).max().unwrap_or(0);
        let pow_u: Vec<Poly2> = (0..=max_deg).map(|n| su.pow(n)).collect();
        let pow_v: Vec<Poly2> = (0..=max_deg).map(|n| sv.pow(n)).collect();
        let mut out = Self::zero();
        for (&(k, l), &c) in &self.terms {
            let term = (&pow_u[k as usize] * &pow_v[l as usize]).scale(c);
            out = &out + &term;
        }
        out
    }
}

impl Add for &Poly2 {
    type Output = Poly2;

    fn add(self, rhs: &Poly2) -> Poly2 {
        let mut out = self.clone();
        for (&(k, l), &c) in &rhs.terms {
            out.add_term(k, l, c);
        }
        out
    }
}

impl Mul for &Poly2 {
    type Output = Poly2;

    fn mul(self, rhs: &Poly2) -> Poly2 {
        let mut out = Poly2::zero();
        for (&(k1, l1), &c1) in &self.terms {
            for (&(k2, l2), &c2) in &rhs.terms {
                out.add_term(k1 + k2, l1 + l2, c1 * c2);
            }
        }
        out
    }
}

/// Flat monomial list with cached power tables, for hot-loop evaluation.
#[derive(Debug, Clone)]
pub struct CompiledPoly {
    terms: Vec<(usize, usize, f64)>,
    max_power: usize,
}

impl CompiledPoly {
    pub fn new(p: &Poly2) -> Self {
        let terms: Vec<_> = p
            .terms()
            .filter(|&(_, c)| c != 0.0)
            .map(|((k, l), c)| (k as usize, l as usize, c))
            .collect();
        let max_power = terms.iter().map(|&(k, l, _)| k.max(l)).max().unwrap_or(0);
        Self { terms, max_power }
    }

    pub fn max_power(&self) -> usize {
        self.max_power
    }

    /// Evaluate with caller-provided power tables (`xp[i] = x^i`, `yp[i] = y^i`).
    #[inline]
    pub fn eval_with_powers(&self, xp: &[f64], yp: &[f64]) -> f64 {
        self.terms.iter().map(|&(k, l, c)| c * xp[k] * yp[l]).sum()
    }
}

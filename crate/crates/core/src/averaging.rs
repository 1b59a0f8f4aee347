//! First-order averaging of the oscillator `z̈ + z = G(z, ż)`.
//!
//! With `z = r cos φ`, `ż = −r sin φ` the averaged amplitude and phase rates
//! are governed by
//!
//! ```text
//! p(r) =  (ε / π r)  ∫ sin φ · G(r cos φ, −r sin φ) dφ
//! q(r) = −(ε / 2π r) ∫ cos φ · G(r cos φ, −r sin φ) dφ
//! ```
//!
//! For `G = Σ ε^(m+n−2) H_mn z^m ż^n` only the entries with `m` even and `n`
//! odd survive in `p`, and only `m` odd, `n` even in `q`. In the unscaled
//! amplitude `A = εr`:
//!
//! ```text
//! p(A) = p3 A² + p5 A⁴ + O(A⁶),   q(A) = q2 A² + q4 A⁴ + O(A⁶)
//! ```

use crate::canonical::IndexTable;
use crate::error::Result;
use crate::quadrature;
use serde::Serialize;
use std::f64::consts::PI;

/// Degree of the truncated field the series is exact for.
pub const VALID_DEGREE: u32 = 6;

fn double_factorial(n: i64) -> f64 {
    let mut acc = 1.0;
    let mut k = n;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}

/// `∫₀^{2π} cos^i φ sin^j φ dφ`.
pub fn trig_moment(i: u32, j: u32) -> f64 {
    if i % 2 == 1 || j % 2 == 1 {
        return 0.0;
    }
    let (i, j) = (i as i64, j as i64);
    // The ratio is a dyadic rational for small orders, so forming it first
    // keeps the tabulated values bit-exact.
    2.0 * PI * (double_factorial(i - 1) * double_factorial(j - 1) / double_factorial(i + j))
}

/// `K_mn = ∫₀^{2π} cos^m φ sin^(n+1) φ dφ`; nonzero only for `m` even, `n` odd.
pub fn k_integral(m: u32, n: u32) -> f64 {
    trig_moment(m, n + 1)
}

/// `(p3, p5)` from the oscillator coefficients.
pub fn hopf_coefficients(h: &IndexTable) -> (f64, f64) {
    let p3 = -(3.0 * h.get(0, 3) + h.get(2, 1)) / 4.0;
    let p5 = -(5.0 * h.get(0, 5) + h.get(2, 3) + h.get(4, 1)) / 8.0;
    (p3, p5)
}

/// `(q2, q4)` from the oscillator coefficients.
pub fn q_coefficients(h: &IndexTable) -> (f64, f64) {
    let q2 = -(3.0 * h.get(3, 0) + h.get(1, 2)) / 8.0;
    let q4 = -(5.0 * h.get(5, 0) + h.get(3, 2) + h.get(1, 4)) / 16.0;
    (q2, q4)
}

/// Truncated amplitude and frequency series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscriminantSeries {
    pub p3: f64,
    pub p5: f64,
    pub q2: f64,
    pub q4: f64,
    pub valid_degree: u32,
}

impl DiscriminantSeries {
    pub fn new(p3: f64, p5: f64, q2: f64, q4: f64) -> Self {
        Self { p3, p5, q2, q4, valid_degree: VALID_DEGREE }
    }

    pub fn from_h_table(h: &IndexTable) -> Self {
        let (p3, p5) = hopf_coefficients(h);
        let (q2, q4) = q_coefficients(h);
        Self::new(p3, p5, q2, q4)
    }

    /// `p(A) = p3 A² + p5 A⁴`, truncated at `O(A⁶)`.
    pub fn p(&self, amplitude: f64) -> f64 {
        p_series_eval(self, amplitude)
    }

    /// `q(A) = q2 A² + q4 A⁴`.
    pub fn q(&self, amplitude: f64) -> f64 {
        let a2 = amplitude * amplitude;
        a2 * (self.q2 + self.q4 * a2)
    }

    /// Angular frequency `ϖ = 1 + q(A)` of a cycle of amplitude `A`.
    pub fn frequency(&self, amplitude: f64) -> f64 {
        1.0 + self.q(amplitude)
    }
}

pub fn p_series_eval(ds: &DiscriminantSeries, amplitude: f64) -> f64 {
    let a2 = amplitude * amplitude;
    a2 * (ds.p3 + ds.p5 * a2)
}

/// The ε-scaled forcing `Σ ε^(m+n−2) H_mn z^m ż^n` built from a table.
pub fn scaled_forcing(h: &IndexTable, eps: f64) -> impl Fn(f64, f64) -> f64 + '_ {
    move |z, zd| {
        h.iter()
            .map(|((m, n), c)| c * eps.powi(m as i32 + n as i32 - 2) * z.powi(m as i32) * zd.powi(n as i32))
            .sum()
    }
}

/// Absolute accuracy of [`pq_numeric`] on each output.
pub const PQ_TOLERANCE: f64 = 1e-12;

/// `(p, q)` at radius `r` by adaptive quadrature of the averaging integrals.
pub fn pq_numeric<G: Fn(f64, f64) -> f64>(g: G, r: f64, eps: f64) -> Result<(f64, f64)> {
    if eps == 0.0 {
        return Ok((0.0, 0.0));
    }
    let scale_p = eps / (PI * r);
    let scale_q = -eps / (2.0 * PI * r);
    let ip = quadrature::integrate(
        |phi| phi.sin() * g(r * phi.cos(), -r * phi.sin()),
        0.0,
        2.0 * PI,
        PQ_TOLERANCE / scale_p.abs(),
    )?;
    let iq = quadrature::integrate(
        |phi| phi.cos() * g(r * phi.cos(), -r * phi.sin()),
        0.0,
        2.0 * PI,
        PQ_TOLERANCE / scale_q.abs(),
    )?;
    Ok((scale_p * ip, scale_q * iq))
}

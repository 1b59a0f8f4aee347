//! Canonical linear part and the equivalent second-order oscillator.
//!
//! The linear change `X = M·X̃` plus a constant time rescale brings the
//! Jacobian to `(1/2)[[τ, −Λ], [Λ, τ]]` with `Λ = 2` at the critical value.
//! In those coordinates the row `(γ21, γ22)` of `Γ = Γ1` combines the two
//! components into the oscillator forcing
//!
//! ```text
//! G(z, ż) = Σ R_kl (μ11 z + μ12 ż)^k (μ21 z + μ22 ż)^l = Σ H_mn z^m ż^n
//! ```
//!
//! where `(μ_ij) = Γ⁻¹`. `H_mn` is obtained by multinomial expansion; two
//! independent closed-form routes for the five entries feeding `p3`, `p5`
//! are provided for cross-checking.

use crate::error::{Error, Result};
use crate::field::{JacobianSummary, ParamField, PlanarField, MAX_DEGREE};
use crate::linalg::Mat2;
use crate::poly::Poly2;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use std::collections::BTreeMap;

/// Coefficients indexed by a pair of exponents, e.g. `R_kl` or `H_mn`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IndexTable(pub BTreeMap<(u32, u32), f64>);

impl IndexTable {
    pub fn get(&self, i: u32, j: u32) -> f64 {
        self.0.get(&(i, j)).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, i: u32, j: u32, v: f64) {
        self.0.insert((i, j), v);
    }

    pub fn iter(&self) -> impl Iterator<Item = ((u32, u32), f64)> + '_ {
        self.0.iter().map(|(&k, &v)| (k, v))
    }

    pub fn is_zero(&self) -> bool {
        self.0.values().all(|&v| v == 0.0)
    }
}

impl Serialize for IndexTable {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (&(i, j), v) in &self.0 {
            map.serialize_entry(&format!("{i},{j}"), v)?;
        }
        map.end()
    }
}

/// A field frozen at one parameter value, expressed in canonical coordinates.
#[derive(Debug, Clone)]
pub struct CanonicalSystem {
    pub a: f64,
    /// `s · M⁻¹ F(M X̃, a)`.
    pub field: PlanarField,
    /// Change of basis `X = M·X̃`.
    pub linmap: Mat2,
    /// Factor `s` multiplying the field; canonical time is `t̃ = t / s`.
    pub time_scale: f64,
    /// Linearization of the canonical field.
    pub summary: JacobianSummary,
}

impl CanonicalSystem {
    pub fn tau(&self) -> f64 {
        self.summary.tau
    }

    pub fn lambda(&self) -> f64 {
        self.summary.lambda.expect("canonical systems are in the Hopf region")
    }

    pub fn to_original(&self, p: [f64; 2]) -> [f64; 2] {
        self.linmap.apply(p)
    }

    pub fn to_canonical(&self, p: [f64; 2]) -> [f64; 2] {
        self.linmap.inverse().expect("invertible change of basis").apply(p)
    }
}

/// Columns of `M` from the eigenvector of `J` for `λ = (τ + iΛ)/2`, scaled to
/// a unit first component (unit second component if the first vanishes).
fn eigen_basis(j: &Mat2, tau: f64, lambda: f64) -> Mat2 {
    let [[j11, j12], [j21, j22]] = j.0;
    let (re_l, im_l) = (0.5 * tau, 0.5 * lambda);
    if j12 != 0.0 {
        // v = (1, (λ − j11)/j12)
        let re = (re_l - j11) / j12;
        let im = im_l / j12;
        Mat2::new(1.0, 0.0, re, -im)
    } else {
        // v = ((λ − j22)/j21, 1)
        let re = (re_l - j22) / j21;
        let im = im_l / j21;
        Mat2::new(re, -im, 1.0, 0.0)
    }
}

pub fn canonicalize(vf: &ParamField, a: f64) -> Result<CanonicalSystem> {
    canonicalize_frozen(&vf.freeze(a), a, critical_lambda(vf)?)
}

/// `Λ` at the critical parameter value.
pub fn critical_lambda(vf: &ParamField) -> Result<f64> {
    let at_star = vf.jacobian_summary(vf.a_star());
    at_star.lambda.ok_or_else(|| Error::NotHopfRegion {
        a: vf.a_star(),
        discriminant: at_star.tau * at_star.tau - 4.0 * at_star.delta,
    })
}

/// Canonicalizes a frozen field; `lambda_star` fixes the time scale `2/Λ*`.
pub fn canonicalize_frozen(field: &PlanarField, a: f64, lambda_star: f64) -> Result<CanonicalSystem> {
    let j = field.jacobian();
    let summary = JacobianSummary::from_matrix(&j);
    let lambda = summary.lambda.ok_or(Error::NotHopfRegion {
        a,
        discriminant: summary.tau * summary.tau - 4.0 * summary.delta,
    })?;
    let linmap = eigen_basis(&j, summary.tau, lambda);
    let time_scale = 2.0 / lambda_star;
    let canonical = field
        .transform(&linmap, time_scale)
        .ok_or_else(|| Error::DomainError("singular change of basis".into()))?;
    let summary = JacobianSummary::from_matrix(&canonical.jacobian());
    Ok(CanonicalSystem { a, field: canonical, linmap, time_scale, summary })
}

/// `Γ` and its inverse `(μ11, μ12, μ21, μ22)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscillatorBasis {
    pub gamma: Mat2,
    pub mu: [f64; 4],
}

impl OscillatorBasis {
    pub fn mu_matrix(&self) -> Mat2 {
        Mat2::new(self.mu[0], self.mu[1], self.mu[2], self.mu[3])
    }
}

/// `Γ1 = [[1, 0], [τ/2, −Λ/2]]` for the canonical Jacobian and its inverse
/// `μ = (1, 0, τ/Λ, −2/Λ)`.
pub fn gamma1(tau: f64, lambda: f64) -> OscillatorBasis {
    OscillatorBasis {
        gamma: Mat2::new(1.0, 0.0, 0.5 * tau, -0.5 * lambda),
        mu: [1.0, 0.0, tau / lambda, -2.0 / lambda],
    }
}

/// `R_kl = γ21 σ_kl¹ + γ22 σ_kl²` for `2 ≤ k + l ≤ 6`.
pub fn r_coefficients(field: &PlanarField, basis: &OscillatorBasis) -> IndexTable {
    let (g21, g22) = (basis.gamma.0[1][0], basis.gamma.0[1][1]);
    let mut table = IndexTable::default();
    for deg in 2..=MAX_DEGREE {
        for k in 0..=deg {
            let l = deg - k;
            let v = g21 * field.coefficient(1, k, l) + g22 * field.coefficient(2, k, l);
            table.set(k, l, v);
        }
    }
    table
}

/// Multinomial expansion of `Σ R_kl (μ11 z + μ12 ż)^k (μ21 z + μ22 ż)^l`.
pub fn h_table(r_table: &IndexTable, mu: [f64; 4]) -> IndexTable {
    let first = Poly2::linear(mu[0], mu[1]);
    let second = Poly2::linear(mu[2], mu[3]);
    let mut g = Poly2::zero();
    for ((k, l), r) in r_table.iter() {
        if r == 0.0 {
            continue;
        }
        let term = (&first.pow(k) * &second.pow(l)).scale(r);
        g = &g + &term;
    }
    let mut table = IndexTable::default();
    for deg in 2..=MAX_DEGREE {
        for m in 0..=deg {
            table.set(m, deg - m, g.coeff(m, deg - m));
        }
    }
    table
}

/// The five entries feeding `p3` and `p5`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HopfEntries {
    pub h03: f64,
    pub h21: f64,
    pub h05: f64,
    pub h23: f64,
    pub h41: f64,
}

impl HopfEntries {
    pub fn from_table(h: &IndexTable) -> Self {
        Self {
            h03: h.get(0, 3),
            h21: h.get(2, 1),
            h05: h.get(0, 5),
            h23: h.get(2, 3),
            h41: h.get(4, 1),
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.h03, self.h21, self.h05, self.h23, self.h41]
    }
}

/// Closed forms of `H03, H21, H05, H23, H41` for general `μ`.
pub fn hopf_entries_closed_form(r: &IndexTable, mu: [f64; 4]) -> HopfEntries {
    let [m11, m12, m21, m22] = mu;
    let g = |k, l| r.get(k, l);
    let h21 = 3.0 * g(3, 0) * m11 * m11 * m12
        + 2.0 * g(2, 1) * m11 * m12 * m21
        + g(2, 1) * m11 * m11 * m22
        + 2.0 * g(1, 2) * m11 * m21 * m22
        + g(1, 2) * m12 * m21 * m21
        + 3.0 * g(0, 3) * m21 * m21 * m22;
    let h03 = g(1, 2) * m12 * m22 * m22
        + g(0, 3) * m22.powi(3)
        + g(3, 0) * m12.powi(3)
        + g(2, 1) * m12 * m12 * m22;
    let h41 = 2.0 * g(3, 2) * m11.powi(3) * m21 * m22
        + 5.0 * g(5, 0) * m11.powi(4) * m12
        + g(4, 1) * m11.powi(4) * m22
        + 4.0 * g(4, 1) * m11.powi(3) * m12 * m21
        + 2.0 * g(2, 3) * m11 * m12 * m21.powi(3)
        + 3.0 * g(2, 3) * m11 * m11 * m21 * m21 * m22
        + 3.0 * g(3, 2) * m11 * m11 * m12 * m21 * m21
        + g(1, 4) * m12 * m21.powi(4)
        + 4.0 * g(1, 4) * m11 * m21.powi(3) * m22
        + 5.0 * g(0, 5) * m21.powi(4) * m22;
    let h23 = 10.0 * g(5, 0) * m11 * m11 * m12.powi(3)
        + 4.0 * g(4, 1) * m11 * m12.powi(3) * m21
        + 6.0 * g(4, 1) * m11 * m11 * m12 * m12 * m22
        + 6.0 * g(3, 2) * m11 * m12 * m12 * m21 * m22
        + g(3, 2) * m12.powi(3) * m21 * m21
        + 3.0 * g(3, 2) * m11 * m11 * m12 * m22 * m22
        + 6.0 * g(2, 3) * m11 * m12 * m21 * m22 * m22
        + g(2, 3) * m11 * m11 * m22.powi(3)
        + 3.0 * g(2, 3) * m12 * m12 * m21 * m21 * m22
        + 6.0 * g(1, 4) * m12 * m21 * m21 * m22 * m22
        + 4.0 * g(1, 4) * m11 * m21 * m22.powi(3)
        + 10.0 * g(0, 5) * m21 * m21 * m22.powi(3);
    let h05 = g(3, 2) * m12.powi(3) * m22 * m22
        + g(2, 3) * m12 * m12 * m22.powi(3)
        + g(1, 4) * m12 * m22.powi(4)
        + g(0, 5) * m22.powi(5)
        + g(5, 0) * m12.powi(5)
        + g(4, 1) * m12.powi(4) * m22;
    HopfEntries { h03, h21, h05, h23, h41 }
}

/// Closed forms specialized to `Γ = Γ1` in canonical coordinates.
pub fn h_canonical_check(r: &IndexTable, tau: f64, lambda: f64) -> HopfEntries {
    let g = |k, l| r.get(k, l);
    let (t, l) = (tau, lambda);
    HopfEntries {
        h03: -8.0 * g(0, 3) / l.powi(3),
        h21: -2.0 * (g(2, 1) * l * l + 2.0 * g(1, 2) * t * l + 3.0 * g(0, 3) * t * t) / l.powi(3),
        h05: -32.0 * g(0, 5) / l.powi(5),
        h23: -8.0 * (g(2, 3) * l * l + 4.0 * g(1, 4) * t * l + 10.0 * g(0, 5) * t * t)
            / l.powi(5),
        h41: -2.0
            * (g(4, 1) * l.powi(4)
                + 2.0 * g(3, 2) * t * l.powi(3)
                + 3.0 * g(2, 3) * t * t * l * l
                + 4.0 * g(1, 4) * t.powi(3) * l
                + 5.0 * g(0, 5) * t.powi(4))
            / l.powi(5),
    }
}

/// `Γ`, `μ`, `R_kl` and `H_mn` of the equivalent oscillator.
#[derive(Debug, Clone, Serialize)]
pub struct OscillatorForm {
    pub gamma: Mat2,
    pub mu: [f64; 4],
    pub r_table: IndexTable,
    pub h_table: IndexTable,
}

impl OscillatorForm {
    pub fn build(cs: &CanonicalSystem) -> Self {
        let basis = gamma1(cs.tau(), cs.lambda());
        let r_table = r_coefficients(&cs.field, &basis);
        let h_table = h_table(&r_table, basis.mu);
        Self { gamma: basis.gamma, mu: basis.mu, r_table, h_table }
    }

    pub fn gamma_inverse(&self) -> Mat2 {
        Mat2::new(self.mu[0], self.mu[1], self.mu[2], self.mu[3])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas;
    use crate::field::ParamCurve;

    fn linear_family(j: Mat2) -> ParamField {
        ParamField::new(1, 0.0)
            .unwrap()
            .with(1, 1, 0, ParamCurve::constant(j.0[0][0]))
            .unwrap()
            .with(1, 0, 1, ParamCurve::constant(j.0[0][1]))
            .unwrap()
            .with(2, 1, 0, ParamCurve::constant(j.0[1][0]))
            .unwrap()
            .with(2, 0, 1, ParamCurve::constant(j.0[1][1]))
            .unwrap()
    }

    #[test]
    fn cubic_std_is_already_canonical() {
        let cs = canonicalize(&atlas::cubic_std(), 0.0).unwrap();
        assert_eq!(cs.linmap, Mat2::IDENTITY);
        assert_eq!(cs.time_scale, 1.0);
    }

    #[test]
    fn stretched_center_is_rescaled() {
        let vf = linear_family(Mat2::new(0.0, -4.0, 1.0, 0.0));
        let cs = canonicalize(&vf, 0.0).unwrap();
        // Unit first component of the eigenvector; any diagonal M with
        // M11/M22 = 2 conjugates J to [[0, −2], [2, 0]].
        let m = cs.linmap.0;
        assert!(m[0][1] == 0.0 && m[1][0] == 0.0);
        assert!((m[0][0] / m[1][1] - 2.0).abs() < 1e-15);
        assert!((cs.time_scale - 0.5).abs() < 1e-15);
        let j = cs.field.jacobian();
        assert!(j.max_abs_diff(&Mat2::new(0.0, -1.0, 1.0, 0.0)) < 1e-12);
    }

    #[test]
    fn saddle_is_rejected() {
        let vf = linear_family(Mat2::new(1.0, 0.0, 0.0, -1.0));
        assert!(matches!(canonicalize(&vf, 0.0), Err(Error::NotHopfRegion { .. })));
    }

    #[test]
    fn canonical_jacobian_has_rotation_form() {
        // Skewed linear part with a cubic term.
        let vf = ParamField::new(3, 0.0)
            .unwrap()
            .with(1, 1, 0, ParamCurve::monomial(1, 1.0))
            .unwrap()
            .with(1, 0, 1, ParamCurve::constant(-2.0))
            .unwrap()
            .with(2, 1, 0, ParamCurve::constant(1.5))
            .unwrap()
            .with(2, 0, 1, ParamCurve::constant(0.3))
            .unwrap()
            .with(1, 2, 1, ParamCurve::constant(0.7))
            .unwrap()
            .with(1, 1, 0, ParamCurve::constant(-0.3))
            .unwrap();
        // Trace is a, so the critical value is 0.
        let a_star = vf.a_of_tau(0.0).unwrap();
        assert_eq!(a_star, 0.0);
        for a in [a_star, a_star + 0.05, a_star - 0.1] {
            let cs = canonicalize(&vf, a).unwrap();
            let (t, l) = (cs.tau(), cs.lambda());
            let target = Mat2::new(0.5 * t, -0.5 * l, 0.5 * l, 0.5 * t);
            assert!(cs.field.jacobian().max_abs_diff(&target) < 1e-10);
            if a == a_star {
                assert!((l - 2.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn gamma1_examples() {
        let b = gamma1(0.0, 2.0);
        assert_eq!(b.gamma, Mat2::new(1.0, 0.0, 0.0, -1.0));
        assert_eq!(b.mu, [1.0, 0.0, 0.0, -1.0]);
        let b = gamma1(0.002, 2.0);
        assert!((b.mu[2] - 0.001).abs() < 1e-18);
        assert_eq!(b.mu[3], -1.0);
        let b = gamma1(0.5, 2.0);
        assert_eq!(b.mu, [1.0, 0.0, 0.25, -1.0]);
        for (t, l) in [(0.0, 2.0), (0.3, 1.7), (-0.9, 0.4)] {
            let b = gamma1(t, l);
            assert!((b.gamma * b.mu_matrix()).max_abs_diff(&Mat2::IDENTITY) < 1e-12);
        }
    }

    #[test]
    fn generator_rows_are_first_row_times_jacobian() {
        // Row 2 of Γ1 is (1, 0)·J and row 2 of Γ2 is (0, 1)·J.
        let j = Mat2::new(0.3, -1.1, 0.9, -0.2);
        let gamma1_row2 = [j.0[0][0], j.0[0][1]];
        let gamma2_row2 = [j.0[1][0], j.0[1][1]];
        let row_times_j = |r: [f64; 2]| {
            [r[0] * j.0[0][0] + r[1] * j.0[1][0], r[0] * j.0[0][1] + r[1] * j.0[1][1]]
        };
        assert_eq!(row_times_j([1.0, 0.0]), gamma1_row2);
        assert_eq!(row_times_j([0.0, 1.0]), gamma2_row2);
    }

    fn form_at(vf: &ParamField, a: f64) -> OscillatorForm {
        OscillatorForm::build(&canonicalize(vf, a).unwrap())
    }

    #[test]
    fn r_coefficients_cubic_std() {
        let f = form_at(&atlas::cubic_std(), 0.0);
        assert_eq!(f.r_table.get(2, 1), 1.0);
        assert_eq!(f.r_table.get(0, 3), 1.0);
        assert_eq!(f.r_table.get(3, 0), 0.0);
        assert_eq!(f.r_table.get(1, 2), 0.0);
    }

    #[test]
    fn r_coefficients_multi2() {
        let f = form_at(&atlas::multi2(), 0.1);
        let r = &f.r_table;
        assert!((r.get(2, 1) - 0.01).abs() < 1e-15);
        assert!((r.get(0, 3) - 0.01).abs() < 1e-15);
        assert!((r.get(3, 0) + 1e-5).abs() < 1e-17);
        assert!((r.get(0, 5) + 0.01875).abs() < 1e-15);
    }

    #[test]
    fn zero_nonlinearity_gives_zero_tables() {
        let vf = linear_family(Mat2::new(0.0, -1.0, 1.0, 0.0));
        let f = form_at(&vf, 0.0);
        assert!(f.r_table.is_zero());
        assert!(f.h_table.is_zero());
        let zero = IndexTable::default();
        assert_eq!(h_canonical_check(&zero, 0.0, 2.0).as_array(), [0.0; 5]);
    }

    #[test]
    fn h_table_examples() {
        let f = form_at(&atlas::cubic_std(), 0.0);
        assert_eq!(f.h_table.get(2, 1), -1.0);
        assert_eq!(f.h_table.get(0, 3), -1.0);

        let f = form_at(&atlas::multi2(), 0.1);
        assert!((f.h_table.get(0, 5) - 0.01875).abs() < 1e-15);
    }

    #[test]
    fn cubic_std_frequency_entries() {
        // G = −a z³ − a z (a z − ż)² + z² (a z − ż) + (a z − ż)³
        for a in [0.0, 0.04, -0.2] {
            let f = form_at(&atlas::cubic_std(), a);
            assert!(f.h_table.get(3, 0).abs() < 1e-15);
            assert!((f.h_table.get(1, 2) - 2.0 * a).abs() < 1e-15);
        }
    }

    #[test]
    fn canonical_check_examples() {
        let mut r = IndexTable::default();
        r.set(0, 3, 1.0);
        assert_eq!(h_canonical_check(&r, 0.0, 2.0).h03, -1.0);

        let f = form_at(&atlas::multi2(), 0.1);
        let h = h_canonical_check(&f.r_table, 0.002, 2.0);
        // −2(0.01·4 + 2(−1e−5)(0.002)(2) + 3(0.01)(4e−6)) / 8
        assert!((h.h21 - (-0.01000001)).abs() < 1e-15);
        let direct = HopfEntries::from_table(&f.h_table);
        for (x, y) in h.as_array().iter().zip(direct.as_array()) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300) + 1e-18);
        }
    }

    #[test]
    fn closed_forms_agree_with_expansion_on_canonical_mu() {
        let mut r = IndexTable::default();
        let vals = [0.3, -0.7, 1.1, 0.2, -0.5, 0.9, -1.3, 0.4, 0.6, -0.8];
        let keys = [(3, 0), (2, 1), (1, 2), (0, 3), (5, 0), (4, 1), (3, 2), (2, 3), (1, 4), (0, 5)];
        for (k, v) in keys.iter().zip(vals) {
            r.set(k.0, k.1, v);
        }
        for (tau, lambda) in [(0.0, 2.0), (0.13, 1.9), (-0.4, 2.3)] {
            let basis = gamma1(tau, lambda);
            let direct = HopfEntries::from_table(&h_table(&r, basis.mu));
            let general = hopf_entries_closed_form(&r, basis.mu);
            let special = h_canonical_check(&r, tau, lambda);
            for i in 0..5 {
                let (d, g, s) = (direct.as_array()[i], general.as_array()[i], special.as_array()[i]);
                assert!((d - g).abs() < 1e-12 * d.abs().max(1.0), "entry {i}");
                assert!((d - s).abs() < 1e-12 * d.abs().max(1.0), "entry {i}");
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn expansion_matches_closed_forms(
            rv in proptest::collection::vec(-1.0f64..1.0, 10),
            mu in proptest::array::uniform4(-1.0f64..1.0),
        ) {
            let mut r = IndexTable::default();
            for (deg, v) in [3u32, 5].iter().flat_map(|d| (0..=*d).map(move |m| (m, d - m))).zip(rv) {
                r.set(deg.0, deg.1, v);
            }
            let direct = HopfEntries::from_table(&h_table(&r, mu));
            let general = hopf_entries_closed_form(&r, mu);
            for (d, g) in direct.as_array().iter().zip(general.as_array()) {
                proptest::prop_assert!((d - g).abs() <= 1e-12 * d.abs().max(1.0));
            }
        }
    }
}

//! One-parameter families of polynomial planar vector fields with an
//! equilibrium at the origin.
//!
//! A [`ParamField`] stores every Taylor coefficient `σ_kl^m` as a
//! [`ParamCurve`] in the parameter `a`. Freezing the family at a parameter
//! value yields a [`PlanarField`], which is what the integrator and the
//! coordinate changes work with.

use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::poly::{CompiledPoly, Poly2};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Largest supported total degree of the field.
pub const MAX_DEGREE: u32 = 6;

/// Number of samples used to check that the trace is monotone on the window.
pub const MONOTONE_SAMPLES: usize = 101;

/// Default half-width of the parameter window around `a_star`.
pub const DEFAULT_HALF_WINDOW: f64 = 0.5;

/// `c · sign(a) · |a|^β`, or `c · |a|^β` when `even` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignedPower {
    pub beta: f64,
    pub c: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub even: bool,
}

impl SignedPower {
    pub fn odd(beta: f64, c: f64) -> Self {
        Self { beta, c, even: false }
    }

    pub fn even(beta: f64, c: f64) -> Self {
        Self { beta, c, even: true }
    }

    pub fn eval(&self, a: f64) -> f64 {
        let mag = self.c * a.abs().powf(self.beta);
        if self.even {
            mag
        } else if a == 0.0 {
            0.0
        } else {
            a.signum() * mag
        }
    }
}

/// Parameter dependence of a single coefficient: a polynomial in `a` plus an
/// optional signed power term.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamCurve {
    pub poly: BTreeMap<u32, f64>,
    pub signed_power: Option<SignedPower>,
}

impl ParamCurve {
    pub fn constant(c: f64) -> Self {
        Self::monomial(0, c)
    }

    /// `c · a^power`
    pub fn monomial(power: u32, c: f64) -> Self {
        let mut poly = BTreeMap::new();
        poly.insert(power, c);
        Self { poly, signed_power: None }
    }

    pub fn signed(sp: SignedPower) -> Self {
        Self { poly: BTreeMap::new(), signed_power: Some(sp) }
    }

    pub fn eval(&self, a: f64) -> f64 {
        let p: f64 = self.poly.iter().map(|(&k, &c)| c * a.powi(k as i32)).sum();
        p + self.signed_power.map_or(0.0, |sp| sp.eval(a))
    }

    fn validate(&self) -> Result<()> {
        if let Some(sp) = self.signed_power {
            if !(sp.beta > 0.0 && sp.beta.is_finite() && sp.c.is_finite()) {
                return Err(Error::InvalidSystem(format!(
                    "signed power term needs finite beta > 0, got beta = {}",
                    sp.beta
                )));
            }
        }
        if self.poly.values().any(|c| !c.is_finite()) {
            return Err(Error::InvalidSystem("non-finite polynomial coefficient".into()));
        }
        Ok(())
    }
}

/// Identifies `σ_kl^m`: component `m ∈ {1, 2}`, monomial `x^k y^l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CoeffKey {
    pub m: u8,
    pub k: u32,
    pub l: u32,
}

impl CoeffKey {
    pub fn new(m: u8, k: u32, l: u32) -> Self {
        Self { m, k, l }
    }
}

/// Frozen coefficient values keyed by `(m, k, l)`.
pub type CoefficientTable = BTreeMap<CoeffKey, f64>;

/// A one-parameter family `Ẋ = F(X, a)` of polynomial planar vector fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SystemFile", into = "SystemFile")]
pub struct ParamField {
    degree: u32,
    a_star: f64,
    coeffs: BTreeMap<CoeffKey, ParamCurve>,
    window: (f64, f64),
}

impl ParamField {
    pub fn new(degree: u32, a_star: f64) -> Result<Self> {
        if degree == 0 || degree > MAX_DEGREE {
            return Err(Error::InvalidSystem(format!(
                "degree must be between 1 and {MAX_DEGREE}, got {degree}"
            )));
        }
        if !a_star.is_finite() {
            return Err(Error::InvalidSystem("a_star must be finite".into()));
        }
        Ok(Self {
            degree,
            a_star,
            coeffs: BTreeMap::new(),
            window: (a_star - DEFAULT_HALF_WINDOW, a_star + DEFAULT_HALF_WINDOW),
        })
    }

    /// Adds `curve` to the coefficient of `x^k y^l` in component `m`.
    pub fn with(mut self, m: u8, k: u32, l: u32, curve: ParamCurve) -> Result<Self> {
        self.insert(m, k, l, curve)?;
        Ok(self)
    }

    pub fn insert(&mut self, m: u8, k: u32, l: u32, curve: ParamCurve) -> Result<()> {
        if m != 1 && m != 2 {
            return Err(Error::InvalidSystem(format!("component must be 1 or 2, got {m}")));
        }
        if k + l == 0 {
            return Err(Error::InvalidSystem(
                "constant terms are not allowed: the origin must be an equilibrium".into(),
            ));
        }
        if k + l > self.degree {
            return Err(Error::InvalidSystem(format!(
                "term x^{k} y^{l} exceeds declared degree {}",
                self.degree
            )));
        }
        curve.validate()?;
        let key = CoeffKey::new(m, k, l);
        match self.coeffs.get_mut(&key) {
            Some(existing) => {
                for (p, c) in curve.poly {
                    *existing.poly.entry(p).or_insert(0.0) += c;
                }
                if let Some(sp) = curve.signed_power {
                    if existing.signed_power.is_some() {
                        return Err(Error::InvalidSystem(format!(
                            "more than one signed power term for sigma_{k}{l}^{m}"
                        )));
                    }
                    existing.signed_power = Some(sp);
                }
            }
            None => {
                self.coeffs.insert(key, curve);
            }
        }
        Ok(())
    }

    pub fn with_window(mut self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidSystem(format!("invalid parameter window [{lo}, {hi}]")));
        }
        self.window = (lo, hi);
        Ok(self)
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn a_star(&self) -> f64 {
        self.a_star
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn curves(&self) -> impl Iterator<Item = (&CoeffKey, &ParamCurve)> {
        self.coeffs.iter()
    }

    pub fn coefficient(&self, m: u8, k: u32, l: u32, a: f64) -> f64 {
        self.coeffs.get(&CoeffKey::new(m, k, l)).map_or(0.0, |c| c.eval(a))
    }

    /// All coefficient values at `a`, zeros dropped.
    pub fn coefficients_at(&self, a: f64) -> CoefficientTable {
        self.coeffs
            .iter()
            .map(|(&key, curve)| (key, curve.eval(a)))
            .filter(|&(_, v)| v != 0.0)
            .collect()
    }

    /// Freezes the family at parameter value `a`.
    pub fn freeze(&self, a: f64) -> PlanarField {
        let mut x = Poly2::zero();
        let mut y = Poly2::zero();
        for (key, curve) in &self.coeffs {
            let v = curve.eval(a);
            match key.m {
                1 => x.add_term(key.k, key.l, v),
                _ => y.add_term(key.k, key.l, v),
            }
        }
        PlanarField::new(x, y)
    }

    pub fn eval_field(&self, a: f64, point: [f64; 2]) -> [f64; 2] {
        self.freeze(a).eval(point)
    }

    pub fn jacobian(&self, a: f64) -> Mat2 {
        Mat2::new(
            self.coefficient(1, 1, 0, a),
            self.coefficient(1, 0, 1, a),
            self.coefficient(2, 1, 0, a),
            self.coefficient(2, 0, 1, a),
        )
    }

    pub fn jacobian_summary(&self, a: f64) -> JacobianSummary {
        JacobianSummary::from_matrix(&self.jacobian(a))
    }

    pub fn tau(&self, a: f64) -> f64 {
        self.jacobian(a).trace()
    }

    /// All `σ_kl^m(a)` with `k + l ≥ 2`.
    pub fn nonlinear_part(&self, a: f64) -> CoefficientTable {
        self.coefficients_at(a)
            .into_iter()
            .filter(|(key, _)| key.k + key.l >= 2)
            .collect()
    }

    /// Inverts `a ↦ τ_a` on the working window by bracketing and bisection.
    pub fn a_of_tau(&self, tau_target: f64) -> Result<f64> {
        let (lo, hi) = self.window;
        if self.a_star >= lo && self.a_star <= hi && self.tau(self.a_star) == tau_target {
            return Ok(self.a_star);
        }
        let n = MONOTONE_SAMPLES;
        let samples: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let a = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                (a, self.tau(a))
            })
            .collect();
        let increasing = samples.windows(2).all(|w| w[1].1 > w[0].1);
        let decreasing = samples.windows(2).all(|w| w[1].1 < w[0].1);
        if !(increasing || decreasing) {
            return Err(Error::NonMonotoneTrace { lo, hi });
        }
        let out_of_window = || Error::OutOfWindow { tau: tau_target, lo, hi };
        let bracket = samples
            .windows(2)
            .find(|w| {
                let (t0, t1) = (w[0].1, w[1].1);
                (t0 - tau_target) * (t1 - tau_target) <= 0.0
            })
            .ok_or_else(out_of_window)?;
        let (mut a0, mut a1) = (bracket[0].0, bracket[1].0);
        let mut f0 = bracket[0].1 - tau_target;
        if f0 == 0.0 {
            return Ok(a0);
        }
        if bracket[1].1 == tau_target {
            return Ok(a1);
        }
        for _ in 0..2000 {
            let mid = 0.5 * (a0 + a1);
            if mid == a0 || mid == a1 {
                break;
            }
            let fm = self.tau(mid) - tau_target;
            if fm == 0.0 {
                return Ok(mid);
            }
            if (fm < 0.0) == (f0 < 0.0) {
                a0 = mid;
                f0 = fm;
            } else {
                a1 = mid;
            }
        }
        let (e0, e1) = (
            (self.tau(a0) - tau_target).abs(),
            (self.tau(a1) - tau_target).abs(),
        );
        let best = if e0 <= e1 { a0 } else { a1 };
        if (self.tau(best) - tau_target).abs() > 1e-12 * tau_target.abs().max(1.0) {
            return Err(out_of_window());
        }
        Ok(best)
    }
}

/// Trace, determinant and rotation rate of the linearization at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobianSummary {
    pub tau: f64,
    pub delta: f64,
    /// `+√(4δ − τ²)`; `None` outside the Hopf region.
    pub lambda: Option<f64>,
    pub hopf_ok: bool,
}

impl JacobianSummary {
    pub fn from_matrix(j: &Mat2) -> Self {
        let tau = j.trace();
        let delta = j.det();
        let hopf_ok = tau * tau - 4.0 * delta < 0.0;
        let lambda = hopf_ok.then(|| (4.0 * delta - tau * tau).sqrt());
        Self { tau, delta, lambda, hopf_ok }
    }
}

/// A polynomial planar vector field at a fixed parameter value.
#[derive(Debug, Clone)]
pub struct PlanarField {
    x: Poly2,
    y: Poly2,
    compiled: [CompiledPoly; 2],
    max_power: usize,
}

impl PartialEq for PlanarField {
    fn eq(&self, other: &Self) -> bool {
        self.x == other.x && self.y == other.y
    }
}

impl PlanarField {
    pub fn new(x: Poly2, y: Poly2) -> Self {
        let compiled = [CompiledPoly::new(&x), CompiledPoly::new(&y)];
        let max_power = compiled[0].max_power().max(compiled[1].max_power());
        Self { x, y, compiled, max_power }
    }

    pub fn linear(j: &Mat2) -> Self {
        Self::new(Poly2::linear(j.0[0][0], j.0[0][1]), Poly2::linear(j.0[1][0], j.0[1][1]))
    }

    pub fn component(&self, m: u8) -> &Poly2 {
        if m == 1 {
            &self.x
        } else {
            &self.y
        }
    }

    pub fn coefficient(&self, m: u8, k: u32, l: u32) -> f64 {
        self.component(m).coeff(k, l)
    }

    pub fn degree(&self) -> u32 {
        self.x.degree().max(self.y.degree())
    }

    pub fn jacobian(&self) -> Mat2 {
        Mat2::new(
            self.x.coeff(1, 0),
            self.x.coeff(0, 1),
            self.y.coeff(1, 0),
            self.y.coeff(0, 1),
        )
    }

    pub fn nonlinear_part(&self) -> CoefficientTable {
        let mut out = CoefficientTable::new();
        for (m, p) in [(1u8, &self.x), (2u8, &self.y)] {
            for ((k, l), c) in p.terms() {
                if k + l >= 2 && c != 0.0 {
                    out.insert(CoeffKey::new(m, k, l), c);
                }
            }
        }
        out
    }

    #[inline]
    pub fn eval(&self, p: [f64; 2]) -> [f64; 2] {
        let mut xp = [1.0; MAX_DEGREE as usize + 1];
        let mut yp = [1.0; MAX_DEGREE as usize + 1];
        let n = self.max_power.min(MAX_DEGREE as usize);
        if self.max_power > MAX_DEGREE as usize {
            return [self.x.eval(p[0], p[1]), self.y.eval(p[0], p[1])];
        }
        for i in 1..=n {
            xp[i] = xp[i - 1] * p[0];
            yp[i] = yp[i - 1] * p[1];
        }
        [
            self.compiled[0].eval_with_powers(&xp, &yp),
            self.compiled[1].eval_with_powers(&xp, &yp),
        ]
    }

    /// `s · M⁻¹ F(M X)`: the field seen in coordinates `X = M·X̃` with time
    /// `t̃ = t / s`.
    pub fn transform(&self, m: &Mat2, s: f64) -> Option<PlanarField> {
        let minv = m.inverse()?;
        let su = Poly2::linear(m.0[0][0], m.0[0][1]);
        let sv = Poly2::linear(m.0[1][0], m.0[1][1]);
        let fx = self.x.compose(&su, &sv);
        let fy = self.y.compose(&su, &sv);
        let nx = &fx.scale(minv.0[0][0]) + &fy.scale(minv.0[0][1]);
        let ny = &fx.scale(minv.0[1][0]) + &fy.scale(minv.0[1][1]);
        Some(PlanarField::new(nx.scale(s), ny.scale(s)))
    }

    /// The same field with time reversed.
    pub fn reversed(&self) -> PlanarField {
        PlanarField::new(self.x.scale(-1.0), self.y.scale(-1.0))
    }
}

// ---------------------------------------------------------------------------
// JSON system description

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SystemFile {
    degree: u32,
    #[serde(default)]
    a_star: f64,
    coefficients: Vec<CoefficientEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CoefficientEntry {
    m: u8,
    k: u32,
    l: u32,
    #[serde(default)]
    poly: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    signed_power: Option<SignedPower>,
}

impl TryFrom<SystemFile> for ParamField {
    type Error = Error;

    fn try_from(file: SystemFile) -> Result<Self> {
        let mut field = ParamField::new(file.degree, file.a_star)?;
        for entry in file.coefficients {
            let mut poly = BTreeMap::new();
            for (power, c) in entry.poly {
                let p: u32 = power.trim().parse().map_err(|_| {
                    Error::InvalidSystem(format!(
                        "polynomial power {power:?} is not a non-negative integer"
                    ))
                })?;
                *poly.entry(p).or_insert(0.0) += c;
            }
            let curve = ParamCurve { poly, signed_power: entry.signed_power };
            field.insert(entry.m, entry.k, entry.l, curve)?;
        }
        Ok(field)
    }
}

impl From<ParamField> for SystemFile {
    fn from(field: ParamField) -> Self {
        let coefficients = field
            .coeffs
            .into_iter()
            .map(|(key, curve)| CoefficientEntry {
                m: key.m,
                k: key.k,
                l: key.l,
                poly: curve.poly.into_iter().map(|(p, c)| (p.to_string(), c)).collect(),
                signed_power: curve.signed_power,
            })
            .collect();
        SystemFile { degree: field.degree, a_star: field.a_star, coefficients }
    }
}

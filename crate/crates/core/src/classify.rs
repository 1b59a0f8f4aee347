//! Empirical discriminant, coefficient scaling and bifurcation classification.
//!
//! In canonical coordinates the averaged radial equation reads
//! `ṙ = (r/2)(τ − p(r))` with `p(r) = c3 r² + c5 r⁴ + …`. Integrating over
//! one revolution of duration `T`,
//!
//! ```text
//! (2/T) ln(r_return / r) = τ − c3 ⟨r²⟩ − c5 ⟨r⁴⟩ − …
//! ```
//!
//! where `⟨·⟩` is the time average along the orbit. Each revolution therefore
//! yields one linear equation in `(c3, c5)`, exact for rotationally symmetric
//! fields and accurate to the drift within one turn otherwise.

use crate::averaging::DiscriminantSeries;
use crate::canonical::{canonicalize, OscillatorForm};
use crate::error::{Error, Result};
use crate::field::ParamField;
use crate::linalg::Mat2;
use crate::regression::{least_squares_2, log_log_fit, LinearFit};
use crate::tracking::{track_families, EmergenceRule, Family};
use crate::verify::{geometric_grid, ReturnMap, Stability, VerifyOptions};
use rayon::prelude::*;
use serde::Serialize;

/// One revolution of the empirical discriminant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscriminantSample {
    /// Starting radius on the section.
    pub r_start: f64,
    /// Geometric mean of the start and return radii.
    pub r: f64,
    pub p_hat: f64,
    /// Orbit averages `⟨r²⟩`, `⟨r⁴⟩`.
    pub moment2: f64,
    pub moment4: f64,
}

/// `p̂ = τ − (2/T) ln(r_return / r)` for each starting radius, in canonical
/// coordinates and time.
pub fn empirical_discriminant(
    vf: &ParamField,
    a: f64,
    r_grid: &[f64],
    opts: &VerifyOptions,
) -> Result<Vec<DiscriminantSample>> {
    let cs = canonicalize(vf, a)?;
    let tau_c = cs.tau();
    let map = ReturnMap::from_canonical(&cs, vf.tau(a), *opts);
    r_grid
        .par_iter()
        .map(|&r| {
            let ret = map.section_return(r).map_err(|e| match e {
                Error::RevolutionFailure { .. } => e,
                other => Error::RevolutionFailure { r, reason: other.to_string() },
            })?;
            Ok(DiscriminantSample {
                r_start: r,
                r: (r * ret.r_return).sqrt(),
                p_hat: tau_c - 2.0 / ret.period * (ret.r_return / r).ln(),
                moment2: ret.moment2,
                moment4: ret.moment4,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HopfFit {
    pub c3: f64,
    pub c5: f64,
    pub residual: f64,
    pub c3_stderr: f64,
    pub c5_stderr: f64,
    pub condition: f64,
}

impl HopfFit {
    /// `(c3, c5)` with statistically insignificant values set to zero.
    pub fn floored(&self, cfg: &ClassifyConfig) -> (f64, f64) {
        let keep = |c: f64, se: f64| if significant(c, se, cfg) { c } else { 0.0 };
        (keep(self.c3, self.c3_stderr), keep(self.c5, self.c5_stderr))
    }
}

/// Least squares of `p̂` against the orbit moments `⟨r²⟩`, `⟨r⁴⟩`.
pub fn fit_hopf_coefficients(samples: &[DiscriminantSample]) -> Result<HopfFit> {
    if samples.len() < 4 {
        return Err(Error::InconclusiveFit(format!(
            "{} discriminant samples, at least 4 are needed",
            samples.len()
        )));
    }
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), s| (lo.min(s.r), hi.max(s.r)));
    if hi < 2.0 * lo {
        return Err(Error::InconclusiveFit("sample radii span less than a factor 2".into()));
    }
    let rows: Vec<[f64; 2]> = samples.iter().map(|s| [s.moment2, s.moment4]).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.p_hat).collect();
    let fit = least_squares_2(&rows, &y)?;
    Ok(HopfFit {
        c3: fit.coefficients[0],
        c5: fit.coefficients[1],
        residual: fit.residual,
        c3_stderr: fit.stderr[0],
        c5_stderr: fit.stderr[1],
        condition: fit.condition,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassifyConfig {
    /// A coefficient is negligible when its exponent is at least `1 − tol_eta`.
    pub tol_eta: f64,
    /// Absolute floor below which a coefficient counts as zero.
    pub floor: f64,
    /// Coefficients within this many standard errors of zero count as zero.
    pub significance: f64,
    pub tol_gamma: f64,
    /// Relative discriminant size below which two roots are merged.
    pub tol_double: f64,
    pub min_r_squared: f64,
    /// Log-residual scatter accepted for fits with too little spread for `R²`.
    pub max_log_scatter: f64,
    /// Roots farther than this multiple of the largest sampled radius are
    /// dropped as extrapolations.
    pub max_extrapolation: f64,
    pub verify: VerifyOptions,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            tol_eta: 0.1,
            floor: 1e-12,
            significance: 5.0,
            tol_gamma: 0.05,
            tol_double: 0.02,
            min_r_squared: 0.95,
            max_log_scatter: 0.01,
            max_extrapolation: 10.0,
            verify: VerifyOptions::default(),
        }
    }
}

/// Eight geometric radii in `[0.025, 0.25]`.
pub fn default_r_grid() -> Vec<f64> {
    geometric_grid(0.025, 0.25, 8)
}

/// Eight geometric values per sign in `[10⁻⁶, 10⁻³]`.
pub fn default_tau_window() -> Vec<f64> {
    let pos = geometric_grid(1e-6, 1e-3, 8);
    pos.iter().map(|t| -t).chain(pos.iter().copied()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BifurcationKind {
    NonDegenerate,
    DegenerateFirstKind,
    DegenerateSecondKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Criticality {
    Supercritical,
    Subcritical,
}

/// Scaling `|c| ≈ C |τ|^η` of one fitted coefficient on one side of `τ = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientScaling {
    /// `s` in `p_(2s+1)`.
    pub index: u32,
    /// `+1` for `τ > 0`, `−1` for `τ < 0`.
    pub side: i8,
    pub amplitude_constant: f64,
    pub exponent: f64,
    pub fit_quality: f64,
    pub negligible: bool,
    /// Too few significant values to fit; treated as zero.
    pub at_floor: bool,
    pub significant_points: usize,
    /// Sign of the coefficient at the smallest significant `|τ|`.
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauSample {
    pub tau: f64,
    pub a: f64,
    /// Trace of the canonical field.
    pub tau_canonical: f64,
    pub fit: HopfFit,
    /// Positive roots `u = A²` of `c5 u² + c3 u = τ`.
    pub roots: Vec<f64>,
    pub double_root: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub kind: BifurcationKind,
    pub criticality: Option<Criticality>,
    pub omega_sign: Option<i8>,
    pub leading_index: Option<u32>,
    pub gamma: f64,
    pub radius_constant: Option<f64>,
    pub radius_exponent: Option<f64>,
    /// Exponent fitted directly to the emerging radii.
    pub measured_radius_exponent: Option<f64>,
    pub radius_fit_r_squared: Option<f64>,
    /// Number of root families that tend to zero with `τ`.
    pub emerging_families: usize,
    /// Whether the emerging roots are double.
    pub double_root: bool,
    pub evidence: Vec<CoefficientScaling>,
    pub samples: Vec<TauSample>,
}

fn significant(c: f64, stderr: f64, cfg: &ClassifyConfig) -> bool {
    c.abs() >= cfg.floor && c.abs() > cfg.significance * stderr
}

fn fit_acceptable(fit: &LinearFit, cfg: &ClassifyConfig) -> bool {
    if fit.r_squared >= cfg.min_r_squared {
        return true;
    }
    // A flat coefficient has no variance for R² to explain; judge it by the
    // scatter of the log residuals instead.
    let n = fit.n as f64;
    let scatter = fit.slope_stderr * (n - 2.0).max(1.0).sqrt();
    scatter <= cfg.max_log_scatter
}

fn scaling(index: u32, side: i8, pts: &[(f64, f64, f64)], cfg: &ClassifyConfig) -> Result<CoefficientScaling> {
    let sig: Vec<&(f64, f64, f64)> = pts.iter().filter(|(_, c, se)| significant(*c, *se, cfg)).collect();
    let sign = sig
        .iter()
        .min_by(|x, y| x.0.abs().total_cmp(&y.0.abs()))
        .map_or(0, |p| if p.1 > 0.0 { 1 } else { -1 });
    if sig.len() < 3 {
        return Ok(CoefficientScaling {
            index,
            side,
            amplitude_constant: 0.0,
            exponent: f64::INFINITY,
            fit_quality: 0.0,
            negligible: true,
            at_floor: true,
            significant_points: sig.len(),
            sign,
        });
    }
    let taus: Vec<f64> = sig.iter().map(|p| p.0).collect();
    let vals: Vec<f64> = sig.iter().map(|p| p.1).collect();
    let fit = log_log_fit(&taus, &vals)?;
    if !fit_acceptable(&fit, cfg) {
        return Err(Error::InconclusiveFit(format!(
            "scaling of p{} for tau {} 0 has R^2 = {:.3}",
            2 * index + 1,
            if side > 0 { ">" } else { "<" },
            fit.r_squared
        )));
    }
    Ok(CoefficientScaling {
        index,
        side,
        amplitude_constant: fit.intercept.exp(),
        exponent: fit.slope,
        fit_quality: fit.r_squared,
        negligible: fit.slope >= 1.0 - cfg.tol_eta,
        at_floor: false,
        significant_points: sig.len(),
        sign,
    })
}

/// Classifies the bifurcation at `τ = 0` from the empirical discriminant
/// measured at each trace value of `tau_window`.
pub fn classify(vf: &ParamField, tau_window: &[f64], r_grid: &[f64], cfg: &ClassifyConfig) -> Result<Classification> {
    for side in [1.0, -1.0] {
        let n = tau_window.iter().filter(|t| **t * side > 0.0).count();
        if n > 0 && n < 6 {
            return Err(Error::DomainError(format!(
                "tau window has {n} values of one sign, at least 6 are needed"
            )));
        }
    }
    if tau_window.iter().all(|t| *t == 0.0) {
        return Err(Error::DomainError("tau window has no nonzero values".into()));
    }
    let r_cap = cfg.max_extrapolation * r_grid.iter().copied().fold(0.0, f64::max);

    let mut taus: Vec<f64> = tau_window.iter().copied().filter(|t| *t != 0.0).collect();
    taus.sort_by(f64::total_cmp);
    let samples: Vec<TauSample> = taus
        .par_iter()
        .map(|&tau| -> Result<TauSample> {
            let a = vf.a_of_tau(tau)?;
            let summary = vf.jacobian_summary(a);
            if !summary.hopf_ok {
                return Err(Error::NotHopfRegion { a, discriminant: tau * tau - 4.0 * summary.delta });
            }
            let disc = empirical_discriminant(vf, a, r_grid, &cfg.verify)?;
            let fit = fit_hopf_coefficients(&disc)?;
            let tau_c = canonicalize(vf, a)?.tau();
            let (c3, c5) = fit.floored(cfg);
            let (roots, double_root) = positive_roots(c3, c5, tau_c, cfg.tol_double);
            let roots = roots.into_iter().filter(|u| u.sqrt() <= r_cap).collect();
            Ok(TauSample { tau, a, tau_canonical: tau_c, fit, roots, double_root })
        })
        .collect::<Result<_>>()?;

    let mut evidence = Vec::new();
    for side in [1i8, -1] {
        let on_side: Vec<&TauSample> = samples.iter().filter(|s| s.tau * side as f64 > 0.0).collect();
        if on_side.is_empty() {
            continue;
        }
        let c3: Vec<(f64, f64, f64)> = on_side.iter().map(|s| (s.tau, s.fit.c3, s.fit.c3_stderr)).collect();
        let c5: Vec<(f64, f64, f64)> = on_side.iter().map(|s| (s.tau, s.fit.c5, s.fit.c5_stderr)).collect();
        evidence.push(scaling(1, side, &c3, cfg)?);
        evidence.push(scaling(2, side, &c5, cfg)?);
    }

    let base = Classification {
        kind: BifurcationKind::DegenerateFirstKind,
        criticality: None,
        omega_sign: None,
        leading_index: None,
        gamma: 0.0,
        radius_constant: None,
        radius_exponent: None,
        measured_radius_exponent: None,
        radius_fit_r_squared: None,
        emerging_families: 0,
        double_root: false,
        evidence: evidence.clone(),
        samples: samples.clone(),
    };
    if evidence.iter().all(|e| e.negligible) {
        return Ok(base);
    }

    // Emerging root families on each side.
    let rule = EmergenceRule { min_r_squared: cfg.min_r_squared, ..EmergenceRule::default() };
    let mut emerging: Vec<(i8, Family)> = Vec::new();
    for side in [1i8, -1] {
        let series: Vec<(f64, Vec<f64>)> = samples
            .iter()
            .filter(|s| s.tau * side as f64 > 0.0)
            .map(|s| (s.tau, s.roots.iter().map(|u| u.sqrt()).collect()))
            .collect();
        for fam in track_families(&series) {
            if rule.is_emerging(&fam) {
                emerging.push((side, fam));
            }
        }
    }
    let sides: Vec<i8> = {
        let mut s: Vec<i8> = emerging.iter().map(|e| e.0).collect();
        s.dedup();
        s
    };
    if sides.len() > 1 {
        return Err(Error::MixedSigns);
    }
    let Some(&side) = sides.first() else {
        return Err(Error::NoEmergingFamily);
    };

    let leading = evidence
        .iter()
        .filter(|e| e.side == side && !e.negligible)
        .min_by_key(|e| e.index)
        .ok_or(Error::NoEmergingFamily)?;
    let n = leading.index;
    let smallest = emerging
        .iter()
        .map(|e| &e.1)
        .min_by(|x, y| {
            let mx = x.radii.iter().copied().fold(f64::INFINITY, f64::min);
            let my = y.radii.iter().copied().fold(f64::INFINITY, f64::min);
            mx.total_cmp(&my)
        })
        .expect("at least one emerging family");
    let fit = smallest.fit().expect("emerging families have a fit");
    let e = fit.slope;
    let gamma = (1.0 - 2.0 * n as f64 * e).clamp(0.0, 1.0 - f64::EPSILON);
    let kind = if gamma <= cfg.tol_gamma {
        BifurcationKind::NonDegenerate
    } else {
        BifurcationKind::DegenerateSecondKind
    };
    let double_root = samples
        .iter()
        .filter(|s| s.tau * side as f64 > 0.0 && !s.roots.is_empty())
        .all(|s| s.double_root);
    Ok(Classification {
        kind,
        criticality: Some(if side > 0 { Criticality::Supercritical } else { Criticality::Subcritical }),
        omega_sign: Some(leading.sign),
        leading_index: Some(n),
        gamma,
        radius_constant: Some(fit.intercept.exp()),
        radius_exponent: Some((1.0 - gamma) / (2.0 * n as f64)),
        measured_radius_exponent: Some(e),
        radius_fit_r_squared: Some(fit.r_squared),
        emerging_families: emerging.len(),
        double_root,
        ..base
    })
}

/// Positive roots `u` of `c5 u² + c3 u = τ`, ascending, and whether they
/// were merged into a double root.
pub fn positive_roots(c3: f64, c5: f64, tau: f64, tol_double: f64) -> (Vec<f64>, bool) {
    if c5 == 0.0 {
        if c3 == 0.0 {
            return (vec![], false);
        }
        let u = tau / c3;
        return (if u > 0.0 { vec![u] } else { vec![] }, false);
    }
    let disc = c3 * c3 + 4.0 * c5 * tau;
    if disc.abs() <= tol_double * c3 * c3 && c3 != 0.0 {
        let u = -c3 / (2.0 * c5);
        return (if u > 0.0 { vec![u] } else { vec![] }, true);
    }
    if disc < 0.0 {
        return (vec![], false);
    }
    // Numerically stable quadratic roots of c5 u² + c3 u − τ = 0.
    let q = -0.5 * (c3 + c3.signum() * disc.sqrt());
    let mut roots = vec![q / c5];
    if q != 0.0 {
        roots.push(-tau / q);
    }
    let mut out: Vec<f64> = roots.into_iter().filter(|u| *u > 0.0 && u.is_finite()).collect();
    out.sort_by(f64::total_cmp);
    (out, false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PredictionSource {
    Series,
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CyclePrediction {
    /// Amplitude `ρ = √u` in canonical coordinates.
    pub radius: f64,
    pub stability: Stability,
    pub frequency: f64,
    pub source: PredictionSource,
}

/// Cycles from the truncated discriminant `p(A) = c3 A² + c5 A⁴ = τ`.
///
/// A cycle is stable when `dp/dA > 0` at the root, so that `τ − p` changes
/// sign from positive to negative across it.
pub fn predict_cycles(c3: f64, c5: f64, tau: f64) -> Vec<CyclePrediction> {
    predict_cycles_with(c3, c5, tau, ClassifyConfig::default().tol_double, None, PredictionSource::Empirical)
}

/// As [`predict_cycles`], with an explicit double-root tolerance, optional
/// frequency series and provenance.
pub fn predict_cycles_with(
    c3: f64,
    c5: f64,
    tau: f64,
    tol_double: f64,
    series: Option<&DiscriminantSeries>,
    source: PredictionSource,
) -> Vec<CyclePrediction> {
    let (roots, double) = positive_roots(c3, c5, tau, tol_double);
    roots
        .into_iter()
        .map(|u| {
            let radius = u.sqrt();
            let slope = c3 + 2.0 * c5 * u;
            let stability = if double {
                Stability::Semistable
            } else if slope > 0.0 {
                Stability::Stable
            } else {
                Stability::Unstable
            };
            let frequency = series.map_or(1.0, |s| s.frequency(radius));
            CyclePrediction { radius, stability, frequency, source }
        })
        .collect()
}

/// First-order approximation of a cycle in the original canonical coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticCycle {
    pub amplitude: f64,
    pub frequency: f64,
    pub gamma_inverse: Mat2,
}

impl AsymptoticCycle {
    /// `A Γ⁻¹ (cos ϖt, −sin ϖt)`.
    pub fn profile(&self, t: f64) -> [f64; 2] {
        let w = self.frequency * t;
        self.gamma_inverse.apply([self.amplitude * w.cos(), -self.amplitude * w.sin()])
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.frequency
    }
}

pub fn asymptotic_cycle(pred: &CyclePrediction, form: &OscillatorForm, ds: &DiscriminantSeries) -> AsymptoticCycle {
    AsymptoticCycle {
        amplitude: pred.radius,
        frequency: ds.frequency(pred.radius),
        gamma_inverse: form.gamma_inverse(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConditionVerdict {
    TwoCycles,
    OneSemistable,
    None,
}

/// Existence test for `|p3| ≈ Q3 |τ|^γ`, `|p5| ≈ Q5 |τ|^(2γ−1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SufficientCondition {
    pub q3: f64,
    pub q5: f64,
    pub gamma: f64,
    pub delta: f64,
    pub verdict: ConditionVerdict,
    /// Roots of `Q5 u² − Q3 u + 1 = 0`, ascending.
    pub roots: Vec<f64>,
}

impl SufficientCondition {
    /// Cycle radii `|τ|^((1−γ)/2) √u` at trace `τ`.
    pub fn radii_at(&self, tau: f64) -> Vec<f64> {
        let scale = tau.abs().powf((1.0 - self.gamma) / 2.0);
        self.roots.iter().map(|u| scale * u.sqrt()).collect()
    }
}

pub fn sufficient_condition(q3: f64, q5: f64, gamma: f64) -> Result<SufficientCondition> {
    if !(q3 > 0.0 && q5 > 0.0 && gamma > 0.5 && gamma < 1.0) {
        return Err(Error::DomainError(format!(
            "need Q3 > 0, Q5 > 0 and 1/2 < gamma < 1, got Q3 = {q3}, Q5 = {q5}, gamma = {gamma}"
        )));
    }
    let delta = q3 * q3 - 4.0 * q5;
    let tol = 1e-9 * (q3 * q3).max(1.0);
    let (verdict, roots) = if delta.abs() <= tol {
        (ConditionVerdict::OneSemistable, vec![q3 / (2.0 * q5)])
    } else if delta > 0.0 {
        let s = delta.sqrt();
        (ConditionVerdict::TwoCycles, vec![(q3 - s) / (2.0 * q5), (q3 + s) / (2.0 * q5)])
    } else {
        (ConditionVerdict::None, vec![])
    };
    Ok(SufficientCondition { q3, q5, gamma, delta, verdict, roots })
}

//! Serializable analysis reports.
//!
//! Every block of numbers carries a `provenance` label: `series-pipeline` for
//! values from the oscillator/averaging series and `ode-empirical` for values
//! measured by integrating the field.

use crate::averaging::DiscriminantSeries;
use crate::canonical::{canonicalize, IndexTable, OscillatorForm};
use crate::classify::{
    asymptotic_cycle, classify, empirical_discriminant, fit_hopf_coefficients, predict_cycles_with,
    sufficient_condition, AsymptoticCycle, BifurcationKind, Classification, ClassifyConfig,
    CyclePrediction, DiscriminantSample, HopfFit, PredictionSource, SufficientCondition,
};
use crate::error::Result;
use crate::field::{JacobianSummary, ParamField};
use crate::linalg::Mat2;
use crate::verify::{find_cycles, CycleRecord, SweepReport};
use serde::Serialize;

pub const SCHEMA_VERSION: &str = "hopfscope-report/1";
pub const SERIES: &str = "series-pipeline";
pub const EMPIRICAL: &str = "ode-empirical";

/// Relative deviation of the pipeline/empirical ratio from 1 that triggers a
/// warning.
pub const RATIO_TOLERANCE: f64 = 0.05;

/// Echo of the command-line inputs.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct InputEcho {
    pub system: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_window: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Linearization {
    pub original: JacobianSummary,
    pub canonical: JacobianSummary,
    /// `X = M X̃`.
    pub linmap: Mat2,
    /// Original time per unit canonical time.
    pub time_scale: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineBlock {
    pub provenance: &'static str,
    pub gamma: Mat2,
    pub mu: [f64; 4],
    pub r_table: IndexTable,
    pub h_table: IndexTable,
    pub p3: f64,
    pub p5: f64,
    pub q2: f64,
    pub q4: f64,
}

impl PipelineBlock {
    fn new(form: &OscillatorForm, ds: &DiscriminantSeries) -> Self {
        Self {
            provenance: SERIES,
            gamma: form.gamma,
            mu: form.mu,
            r_table: form.r_table.clone(),
            h_table: form.h_table.clone(),
            p3: ds.p3,
            p5: ds.p5,
            q2: ds.q2,
            q4: ds.q4,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalBlock {
    pub provenance: &'static str,
    pub samples: Vec<DiscriminantSample>,
    /// Fitted coefficients, zeroed when insignificant.
    pub c3: f64,
    pub c5: f64,
    pub fit: HopfFit,
}

#[derive(Debug, Clone, Serialize)]
pub struct PredictionBlock {
    pub provenance: &'static str,
    pub cycles: Vec<CyclePrediction>,
    /// First-order cycle shapes for the series predictions.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub asymptotic: Vec<AsymptoticCycle>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CycleBlock {
    pub provenance: &'static str,
    pub cycles: Vec<CycleRecord>,
}

impl CycleBlock {
    pub fn new(cycles: Vec<CycleRecord>) -> Self {
        Self { provenance: EMPIRICAL, cycles }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationBlock {
    pub provenance: &'static str,
    #[serde(flatten)]
    pub classification: Classification,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sufficient_condition: Option<SufficientCondition>,
}

impl ClassificationBlock {
    pub fn new(classification: Classification) -> Self {
        let sufficient_condition = fitted_sufficient_condition(&classification);
        Self { provenance: EMPIRICAL, classification, sufficient_condition }
    }
}

/// Sufficient-condition test built from the fitted `p3`, `p5` scalings on
/// the emerging side, when the leading index is 1 and `p5` opposes `p3`.
pub fn fitted_sufficient_condition(c: &Classification) -> Option<SufficientCondition> {
    if c.kind != BifurcationKind::DegenerateSecondKind || c.leading_index != Some(1) {
        return None;
    }
    let side = match c.criticality? {
        crate::classify::Criticality::Supercritical => 1,
        crate::classify::Criticality::Subcritical => -1,
    };
    let p3 = c.evidence.iter().find(|e| e.side == side && e.index == 1)?;
    let p5 = c.evidence.iter().find(|e| e.side == side && e.index == 2)?;
    if p5.at_floor || p3.sign == p5.sign {
        return None;
    }
    sufficient_condition(p3.amplitude_constant, p5.amplitude_constant, c.gamma).ok()
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeReport {
    pub schema_version: &'static str,
    pub input: InputEcho,
    pub a: f64,
    pub linearization: Linearization,
    pub pipeline: PipelineBlock,
    pub empirical: EmpiricalBlock,
    pub series_predictions: PredictionBlock,
    pub empirical_predictions: PredictionBlock,
    pub detected: CycleBlock,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<ClassificationBlock>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub r_grid: Vec<f64>,
    /// Cycle search interval in original coordinates.
    pub search: (f64, f64),
    /// Trace values for classification; `None` skips it.
    pub tau_window: Option<Vec<f64>>,
    pub config: ClassifyConfig,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            r_grid: crate::classify::default_r_grid(),
            search: (1e-4, 1.5),
            tau_window: Some(crate::classify::default_tau_window()),
            config: ClassifyConfig::default(),
        }
    }
}

/// Runs the series pipeline, the empirical discriminant and a cycle search
/// at one parameter value, then classifies over the trace window.
pub fn analyze(vf: &ParamField, a: f64, input: InputEcho, opts: &AnalyzeOptions) -> Result<AnalyzeReport> {
    let cs = canonicalize(vf, a)?;
    let form = OscillatorForm::build(&cs);
    let ds = DiscriminantSeries::from_h_table(&form.h_table);
    let samples = empirical_discriminant(vf, a, &opts.r_grid, &opts.config.verify)?;
    let fit = fit_hopf_coefficients(&samples)?;
    let (c3, c5) = fit.floored(&opts.config);
    let tau_c = cs.tau();
    let tol_double = opts.config.tol_double;

    let series_cycles = predict_cycles_with(ds.p3, ds.p5, tau_c, tol_double, Some(&ds), PredictionSource::Series);
    let asymptotic = series_cycles.iter().map(|p| asymptotic_cycle(p, &form, &ds)).collect();
    let empirical_cycles = predict_cycles_with(c3, c5, tau_c, tol_double, None, PredictionSource::Empirical);
    let detected = find_cycles(vf, a, opts.search.0, opts.search.1, &opts.config.verify)?;

    let mut warnings = coefficient_warnings(ds.p3, c3, "p3");
    warnings.extend(coefficient_warnings(ds.p5, c5, "p5"));
    warnings.extend(frequency_warnings(&ds, &detected));

    let classification = match &opts.tau_window {
        Some(window) => match classify(vf, window, &opts.r_grid, &opts.config) {
            Ok(c) => Some(ClassificationBlock::new(c)),
            Err(e) => {
                warnings.push(format!("classification failed: {}: {e}", e.name()));
                None
            }
        },
        None => None,
    };

    Ok(AnalyzeReport {
        schema_version: SCHEMA_VERSION,
        input,
        a,
        linearization: Linearization {
            original: vf.jacobian_summary(a),
            canonical: cs.summary,
            linmap: cs.linmap,
            time_scale: cs.time_scale,
        },
        pipeline: PipelineBlock::new(&form, &ds),
        empirical: EmpiricalBlock { provenance: EMPIRICAL, samples, c3, c5, fit },
        series_predictions: PredictionBlock { provenance: SERIES, cycles: series_cycles, asymptotic },
        empirical_predictions: PredictionBlock { provenance: EMPIRICAL, cycles: empirical_cycles, asymptotic: vec![] },
        detected: CycleBlock::new(detected),
        classification,
        warnings,
    })
}

/// Warnings comparing a series coefficient with its empirical counterpart.
pub fn coefficient_warnings(pipeline: f64, empirical: f64, label: &str) -> Vec<String> {
    let mut out = Vec::new();
    if pipeline == 0.0 || empirical == 0.0 {
        return out;
    }
    if pipeline.signum() != empirical.signum() {
        out.push(format!(
            "pipeline/empirical sign disagreement for {label}: {SERIES} {pipeline:.6e}, {EMPIRICAL} {empirical:.6e}"
        ));
    }
    let ratio = pipeline / empirical;
    if (ratio - 1.0).abs() > RATIO_TOLERANCE {
        out.push(format!(
            "pipeline/empirical ratio {ratio:.2} for {label} ({SERIES} {pipeline:.6e}, {EMPIRICAL} {empirical:.6e})"
        ));
    }
    out
}

/// Cycle periods are measured in canonical time, as is the series frequency.
fn frequency_warnings(ds: &DiscriminantSeries, cycles: &[CycleRecord]) -> Vec<String> {
    cycles
        .iter()
        .filter_map(|c| {
            let predicted = ds.frequency(c.section_radius);
            ((predicted - c.frequency).abs() > 1e-6).then(|| {
                format!(
                    "pipeline frequency {predicted:.8} differs from measured {:.8} at radius {:.6}",
                    c.frequency, c.radius
                )
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyReport {
    pub schema_version: &'static str,
    pub input: InputEcho,
    pub classification: ClassificationBlock,
    pub warnings: Vec<String>,
}

pub fn classify_report(vf: &ParamField, input: InputEcho, tau_window: &[f64], r_grid: &[f64], config: &ClassifyConfig) -> Result<ClassifyReport> {
    let c = classify(vf, tau_window, r_grid, config)?;
    Ok(ClassifyReport {
        schema_version: SCHEMA_VERSION,
        input,
        classification: ClassificationBlock::new(c),
        warnings: vec![],
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub schema_version: &'static str,
    pub input: InputEcho,
    pub a: f64,
    pub tau: f64,
    pub detected: CycleBlock,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepBlock {
    pub schema_version: &'static str,
    pub input: InputEcho,
    pub provenance: &'static str,
    #[serde(flatten)]
    pub sweep: SweepReport,
    pub warnings: Vec<String>,
}

impl SweepBlock {
    pub fn new(input: InputEcho, sweep: SweepReport) -> Self {
        let mut warnings = Vec::new();
        if sweep.inconclusive {
            warnings.push("inconclusive: fewer than 4 parameter values carry an emerging cycle or the radius fit has R^2 < 0.95".into());
        }
        for p in &sweep.points {
            if let Some(e) = &p.error {
                warnings.push(format!("tau {:e}: {e}", p.tau));
            }
        }
        Self { schema_version: SCHEMA_VERSION, input, provenance: EMPIRICAL, sweep, warnings }
    }
}

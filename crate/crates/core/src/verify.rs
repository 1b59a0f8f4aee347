//! Direct numerical verification: trajectories, return maps, cycle detection
//! and scaling sweeps.
//!
//! The section is the positive `x̃`-axis of canonical coordinates. Return
//! times and frequencies are measured in canonical time; radii are mean
//! distances to the origin in the original coordinates.

use crate::canonical::{canonicalize, CanonicalSystem};
use crate::error::{Error, Result};
use crate::field::{ParamField, PlanarField};
use crate::linalg::Mat2;
use crate::ode::{self, DenseStep, Dopri5, Options};
use crate::regression::log_log_fit;
use crate::roots::{brent, golden_section};
use crate::tracking::{track_families, EmergenceRule};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyOptions {
    /// Relative (and scaled absolute) integrator tolerance.
    pub tol: f64,
    /// Orbits leaving this disk (original coordinates) are reported as escapes.
    pub disk_radius: f64,
    /// Longest time allowed for one return to the section.
    pub t_max: f64,
    /// Number of geometric probe radii in a cycle scan.
    pub probes: usize,
    /// Bound on `|P′ − 1|` for semistable cycles.
    pub tol_rd: f64,
    /// Relative offset of the side probes that confirm a semistable cycle.
    pub side_offset: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            disk_radius: 10.0,
            t_max: 200.0 * PI,
            probes: 121,
            tol_rd: 1e-3,
            side_offset: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Stability {
    Stable,
    Unstable,
    Semistable,
}

impl Stability {
    pub fn reversed(self) -> Self {
        match self {
            Stability::Stable => Stability::Unstable,
            Stability::Unstable => Stability::Stable,
            Stability::Semistable => Stability::Semistable,
        }
    }
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Semistable => "semistable",
        };
        f.write_str(s)
    }
}

/// Sampled solution at the accepted steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: Vec<[f64; 2]>,
}

impl Trajectory {
    pub fn last(&self) -> [f64; 2] {
        *self.x.last().expect("trajectory contains the initial point")
    }
}

/// Integrates the field frozen at `a` from `x0` for time `t_end`.
pub fn integrate(vf: &ParamField, a: f64, x0: [f64; 2], t_end: f64, opts: &VerifyOptions) -> Result<Trajectory> {
    integrate_frozen(&vf.freeze(a), x0, t_end, opts)
}

pub fn integrate_frozen(field: &PlanarField, x0: [f64; 2], t_end: f64, opts: &VerifyOptions) -> Result<Trajectory> {
    let scale = x0[0].hypot(x0[1]).max(f64::MIN_POSITIVE);
    let options = Options::new(opts.tol, opts.tol * scale);
    let mut traj = Trajectory { t: vec![0.0], x: vec![x0] };
    let disk = opts.disk_radius;
    ode::integrate(|y: &[f64; 2]| field.eval(*y), x0, t_end, options, |step: &DenseStep<2>| {
        let y = step.y1();
        let norm = y[0].hypot(y[1]);
        // A NaN norm counts as an escape.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(norm <= disk) {
            return Err(Error::Escape { t: step.t1(), radius: disk });
        }
        traj.t.push(step.t1());
        traj.x.push(y);
        Ok(true)
    })?;
    Ok(traj)
}

/// One return to the section from `(r, 0)` in canonical coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectionReturn {
    pub r: f64,
    pub r_return: f64,
    /// Return time in canonical time.
    pub period: f64,
    /// Time average of the distance to the origin, original coordinates.
    pub mean_radius: f64,
    /// Time averages of `|X̃|²` and `|X̃|⁴` over the revolution.
    pub moment2: f64,
    pub moment4: f64,
}

/// First-return map of a canonical system.
#[derive(Debug, Clone)]
pub struct ReturnMap {
    field: PlanarField,
    linmap: Mat2,
    pub a: f64,
    pub tau: f64,
    opts: VerifyOptions,
}

impl ReturnMap {
    pub fn new(vf: &ParamField, a: f64, opts: VerifyOptions) -> Result<Self> {
        let cs = canonicalize(vf, a)?;
        Ok(Self::from_canonical(&cs, vf.tau(a), opts))
    }

    pub fn from_canonical(cs: &CanonicalSystem, tau: f64, opts: VerifyOptions) -> Self {
        Self { field: cs.field.clone(), linmap: cs.linmap, a: cs.a, tau, opts }
    }

    /// The same map for the time-reversed flow.
    pub fn reversed(&self) -> Self {
        Self { field: self.field.reversed(), ..self.clone() }
    }

    pub fn options(&self) -> &VerifyOptions {
        &self.opts
    }

    pub fn section_return(&self, r: f64) -> Result<SectionReturn> {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(r > 0.0) {
            return Err(Error::DomainError(format!("section radius must be positive, got {r}")));
        }
        let field = &self.field;
        let m = self.linmap;
        let disk = self.opts.disk_radius;
        let start_orig = m.apply([r, 0.0]);
        if start_orig[0].hypot(start_orig[1]) > disk {
            return Err(Error::Escape { t: 0.0, radius: disk });
        }
        let dir = field.eval([r, 0.0])[1].signum();
        if field.eval([r, 0.0])[1] == 0.0 {
            return Err(Error::NoReturn { t_max: 0.0 });
        }
        // State scaled by r: (ξ, η, ∫|Mξ|, ∫|ξ|², ∫|ξ|⁴).
        let rhs = move |y: &[f64; 5]| {
            let v = field.eval([r * y[0], r * y[1]]);
            let p = m.apply([y[0], y[1]]);
            let q = y[0] * y[0] + y[1] * y[1];
            [v[0] / r, v[1] / r, p[0].hypot(p[1]), q, q * q]
        };
        let mut options = Options::new(self.opts.tol, self.opts.tol);
        options.h_max = 0.25;
        let mut solver = Dopri5::new(rhs, 0.0, [1.0, 0.0, 0.0, 0.0, 0.0], 1.0, options);
        loop {
            let step = solver.step()?;
            let (y0, y1) = (step.y0(), step.y1());
            let orig = m.apply([r * y1[0], r * y1[1]]);
            if orig[0].hypot(orig[1]) > disk {
                return Err(Error::Escape { t: step.t1(), radius: disk });
            }
            if y1[0].hypot(y1[1]) < 1e-9 {
                return Err(Error::RevolutionFailure { r, reason: "orbit collapsed onto the origin".into() });
            }
            let (w0, w1) = (dir * y0[1], dir * y1[1]);
            if w0 < 0.0 && w1 >= 0.0 {
                let t_cross = locate_crossing(&step, dir)?;
                if step.eval(t_cross)[0] > 0.0 {
                    let (t, s) = polish_crossing(&rhs, &step, t_cross, dir);
                    return Ok(SectionReturn {
                        r,
                        r_return: r * s[0].hypot(s[1]),
                        period: t,
                        mean_radius: r * s[2] / t,
                        moment2: r * r * s[3] / t,
                        moment4: r.powi(4) * s[4] / t,
                    });
                }
            }
            if solver.t() > self.opts.t_max {
                return Err(Error::NoReturn { t_max: self.opts.t_max });
            }
        }
    }

    /// `d(r) = P(r) − r`.
    pub fn displacement(&self, r: f64) -> Result<f64> {
        Ok(self.section_return(r)?.r_return - r)
    }

    /// `P′(ρ)` by a centered difference with step `10⁻⁴ ρ`.
    pub fn return_derivative(&self, rho: f64) -> Result<f64> {
        let h = 1e-4 * rho;
        let plus = self.section_return(rho + h)?.r_return;
        let minus = self.section_return(rho - h)?.r_return;
        Ok((plus - minus) / (2.0 * h))
    }

    /// Displacements below this are treated as zero.
    fn noise_floor(&self, r: f64) -> f64 {
        100.0 * self.opts.tol * r
    }

    fn sign(&self, r: f64, d: f64) -> i8 {
        if d.abs() <= self.noise_floor(r) {
            0
        } else if d > 0.0 {
            1
        } else {
            -1
        }
    }
}

fn locate_crossing(step: &DenseStep<5>, dir: f64) -> Result<f64> {
    let w = |t: f64| dir * step.eval(t)[1];
    let (t0, t1) = (step.t0, step.t1());
    brent(|t| Ok(w(t)), t0, t1, w(t0), w(t1), 1e-15 * t1.abs().max(1.0))
}

/// Refines the crossing time by secant iteration on single full steps from
/// the start of the step, which removes the interpolation error.
fn polish_crossing<F: Fn(&[f64; 5]) -> [f64; 5]>(
    rhs: &F,
    step: &DenseStep<5>,
    t_cross: f64,
    dir: f64,
) -> (f64, [f64; 5]) {
    let y0 = step.y0();
    let w = |h: f64| -> ([f64; 5], f64) {
        let y = Dopri5::single_step(rhs, &y0, h);
        (y, dir * y[1])
    };
    let mut h1 = t_cross - step.t0;
    let mut h0 = h1 * (1.0 - 1e-6);
    let mut w0 = w(h0).1;
    let (mut s1, mut w1) = w(h1);
    for _ in 0..8 {
        if w1 == 0.0 || w1 == w0 {
            break;
        }
        let h2 = h1 - w1 * (h1 - h0) / (w1 - w0);
        if !h2.is_finite() || h2 <= 0.0 {
            break;
        }
        (h0, w0) = (h1, w1);
        (s1, w1) = w(h2);
        h1 = h2;
        if (h1 - h0).abs() <= 1e-15 * (step.t0 + h1) {
            break;
        }
    }
    (step.t0 + h1, s1)
}

/// `(r_return, t_return)` for the section radius `r`.
pub fn poincare_map(vf: &ParamField, a: f64, r: f64, opts: &VerifyOptions) -> Result<(f64, f64)> {
    let ret = ReturnMap::new(vf, a, *opts)?.section_return(r)?;
    Ok((ret.r_return, ret.period))
}

/// A limit cycle located by the return map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleRecord {
    /// Mean distance to the origin over the cycle, original coordinates.
    pub radius: f64,
    /// Crossing radius on the canonical section.
    pub section_radius: f64,
    /// Canonical-time period.
    pub period: f64,
    pub frequency: f64,
    pub stability: Stability,
    pub return_derivative: f64,
    pub a: f64,
    pub tau: f64,
}

pub fn find_cycles(vf: &ParamField, a: f64, r_min: f64, r_max: f64, opts: &VerifyOptions) -> Result<Vec<CycleRecord>> {
    scan(&ReturnMap::new(vf, a, *opts)?, r_min, r_max)
}

pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (l0, l1) = (lo.ln(), hi.ln());
    let mut g: Vec<f64> = (0..n).map(|i| (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp()).collect();
    g[0] = lo;
    g[n - 1] = hi;
    g
}

enum Candidate {
    Bracket { lo: f64, hi: f64, d_lo: f64, d_hi: f64 },
    Touch { lo: f64, hi: f64 },
}

/// Scans `[r_min, r_max]` for cycles of a return map. Probes that fail leave
/// gaps and never bracket a cycle.
pub fn scan(map: &ReturnMap, r_min: f64, r_max: f64) -> Result<Vec<CycleRecord>> {
    if !(r_min > 0.0 && r_max > r_min) {
        return Err(Error::DomainError(format!("invalid scan range [{r_min}, {r_max}]")));
    }
    let grid = geometric_grid(r_min, r_max, map.opts.probes.max(3));
    let d: Vec<Option<f64>> = grid.par_iter().map(|&r| map.displacement(r).ok()).collect();

    // Runs of consecutive successful probes.
    let mut candidates = Vec::new();
    let mut i = 0;
    while i < grid.len() {
        if d[i].is_none() {
            i += 1;
            continue;
        }
        let start = i;
        while i < grid.len() && d[i].is_some() {
            i += 1;
        }
        let run: Vec<(f64, f64)> = (start..i).map(|k| (grid[k], d[k].expect("in run"))).collect();
        collect_candidates(map, &run, &mut candidates);
    }

    let found: Vec<Option<CycleRecord>> = candidates
        .par_iter()
        .map(|c| match *c {
            Candidate::Bracket { lo, hi, d_lo, d_hi } => refine_simple(map, lo, hi, d_lo, d_hi).ok(),
            Candidate::Touch { lo, hi } => refine_touch(map, lo, hi).ok().flatten(),
        })
        .collect();
    let mut cycles: Vec<CycleRecord> = found.into_iter().flatten().collect();
    cycles.sort_by(|x, y| x.section_radius.total_cmp(&y.section_radius));
    cycles.dedup_by(|x, y| (x.section_radius - y.section_radius).abs() <= 1e-6 * y.section_radius);
    Ok(cycles)
}

fn collect_candidates(map: &ReturnMap, run: &[(f64, f64)], out: &mut Vec<Candidate>) {
    let signs: Vec<i8> = run.iter().map(|&(r, d)| map.sign(r, d)).collect();
    // Sign changes between nonzero probes, skipping probes lying on a cycle.
    let nonzero: Vec<usize> = (0..run.len()).filter(|&k| signs[k] != 0).collect();
    for w in nonzero.windows(2) {
        let (j, k) = (w[0], w[1]);
        if signs[j] != signs[k] {
            out.push(Candidate::Bracket { lo: run[j].0, hi: run[k].0, d_lo: run[j].1, d_hi: run[k].1 });
        } else if k > j + 1 {
            out.push(Candidate::Touch { lo: run[j].0, hi: run[k].0 });
        }
    }
    // Interior local minima of |d| without a sign change.
    for k in 1..run.len().saturating_sub(1) {
        let (l, c, r) = (run[k - 1].1.abs(), run[k].1.abs(), run[k + 1].1.abs());
        let same = signs[k - 1] != 0 && signs[k - 1] == signs[k] && signs[k] == signs[k + 1];
        if same && c < l && c < r {
            out.push(Candidate::Touch { lo: run[k - 1].0, hi: run[k + 1].0 });
        }
    }
}

fn record(map: &ReturnMap, rho: f64, stability: Stability) -> Result<CycleRecord> {
    let ret = map.section_return(rho)?;
    let return_derivative = map.return_derivative(rho)?;
    Ok(CycleRecord {
        radius: ret.mean_radius,
        section_radius: rho,
        period: ret.period,
        frequency: 2.0 * PI / ret.period,
        stability,
        return_derivative,
        a: map.a,
        tau: map.tau,
    })
}

fn refine_simple(map: &ReturnMap, lo: f64, hi: f64, d_lo: f64, d_hi: f64) -> Result<CycleRecord> {
    let rho = brent(|r| map.displacement(r), lo, hi, d_lo, d_hi, 1e-13 * hi)?;
    let stability = if d_lo > 0.0 { Stability::Stable } else { Stability::Unstable };
    record(map, rho, stability)
}

/// Confirms a double root: near-zero minimum of `|d|`, equal displacement
/// signs at `ρ(1 ± offset)` and `|P′ − 1| ≤ tol_rd`.
fn refine_touch(map: &ReturnMap, lo: f64, hi: f64) -> Result<Option<CycleRecord>> {
    let (rho, dmin) = golden_section(|r| Ok(map.displacement(r)?.abs()), lo, hi, 1e-9 * hi)?;
    if dmin > 1e-9 * rho {
        return Ok(None);
    }
    let off = map.opts.side_offset;
    let (r_in, r_out) = (rho * (1.0 - off), rho * (1.0 + off));
    let s_in = map.sign(r_in, map.displacement(r_in)?);
    let s_out = map.sign(r_out, map.displacement(r_out)?);
    if s_in == 0 || s_in != s_out {
        return Ok(None);
    }
    let rec = record(map, rho, Stability::Semistable)?;
    if (rec.return_derivative - 1.0).abs() > map.opts.tol_rd {
        return Ok(None);
    }
    Ok(Some(rec))
}

// ---------------------------------------------------------------------------
// Scaling sweeps

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepOptions {
    pub verify: VerifyOptions,
    pub r_min: f64,
    pub r_max: f64,
    /// `|ϖ − 1|` below this counts as an exact unit frequency.
    pub frequency_noise: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { verify: VerifyOptions::default(), r_min: 1e-4, r_max: 1.5, frequency_noise: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub tau: f64,
    pub a: f64,
    pub cycles: Vec<CycleRecord>,
    /// Why this parameter value produced no scan, if it failed.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub tau_values: Vec<f64>,
    /// Smallest radius of the emerging family at each `τ`, if present.
    pub smallest_cycle_radii: Vec<Option<f64>>,
    pub fitted_radius_exponent: Option<f64>,
    pub radius_constant: Option<f64>,
    pub radius_fit_r_squared: Option<f64>,
    /// Log–log slope of `|ϖ − 1|` against `|τ|`; `None` when every measured
    /// frequency is 1 to within noise.
    pub fitted_frequency_exponent_bound: Option<f64>,
    /// `max |ϖ − 1| / |τ|^(2e)` over the emerging family.
    pub frequency_constant: Option<f64>,
    pub persistent_cycles: Vec<CycleRecord>,
    pub emerging_families: usize,
    pub inconclusive: bool,
    pub points: Vec<SweepPoint>,
}

impl SweepReport {
    pub fn all_cycles(&self) -> impl Iterator<Item = &CycleRecord> {
        self.points.iter().flat_map(|p| p.cycles.iter())
    }
}

pub fn scaling_sweep(vf: &ParamField, tau_values: &[f64], opts: &SweepOptions) -> Result<SweepReport> {
    if tau_values.is_empty() {
        return Err(Error::DomainError("empty tau list".into()));
    }
    let points: Vec<SweepPoint> = tau_values
        .par_iter()
        .map(|&tau| {
            let run = || -> Result<(f64, Vec<CycleRecord>)> {
                let a = vf.a_of_tau(tau)?;
                Ok((a, find_cycles(vf, a, opts.r_min, opts.r_max, &opts.verify)?))
            };
            match run() {
                Ok((a, cycles)) => SweepPoint { tau, a, cycles, error: None },
                Err(e) => SweepPoint { tau, a: f64::NAN, cycles: vec![], error: Some(e.to_string()) },
            }
        })
        .collect();

    let series: Vec<(f64, Vec<f64>)> =
        points.iter().map(|p| (p.tau, p.cycles.iter().map(|c| c.radius).collect())).collect();
    let families = track_families(&series);
    let rule = EmergenceRule::default();
    let emerging: Vec<_> = families.iter().filter(|f| rule.is_emerging(f)).collect();
    let persistent_radii: Vec<f64> = families
        .iter()
        .filter(|f| !rule.is_emerging(f))
        .flat_map(|f| f.radii.iter().copied())
        .collect();
    let persistent_cycles: Vec<CycleRecord> = points
        .iter()
        .flat_map(|p| p.cycles.iter())
        .filter(|c| persistent_radii.contains(&c.radius))
        .copied()
        .collect();

    // The family carrying the smallest radii.
    let smallest = emerging
        .iter()
        .min_by(|x, y| {
            let mx = x.radii.iter().copied().fold(f64::INFINITY, f64::min);
            let my = y.radii.iter().copied().fold(f64::INFINITY, f64::min);
            mx.total_cmp(&my)
        })
        .copied();

    let smallest_cycle_radii: Vec<Option<f64>> = points
        .iter()
        .map(|p| {
            smallest.and_then(|f| {
                f.taus.iter().position(|t| *t == p.tau.abs()).map(|k| f.radii[k])
            })
        })
        .collect();

    let fit = smallest.and_then(|f| f.fit());
    let exponent = fit.map(|f| f.slope);

    let mut freq_tau = Vec::new();
    let mut freq_dev = Vec::new();
    for f in &emerging {
        for (t, r) in f.taus.iter().zip(&f.radii) {
            if let Some(c) = points.iter().flat_map(|p| p.cycles.iter()).find(|c| c.radius == *r) {
                freq_tau.push(*t);
                freq_dev.push((c.frequency - 1.0).abs());
            }
        }
    }
    let noisy = freq_dev.iter().all(|d| *d <= opts.frequency_noise);
    let fitted_frequency_exponent_bound = if noisy || freq_dev.len() < 2 {
        None
    } else {
        log_log_fit(&freq_tau, &freq_dev).ok().map(|f| f.slope)
    };
    let frequency_constant = exponent.map(|e| {
        freq_tau
            .iter()
            .zip(&freq_dev)
            .map(|(t, d)| d / t.powf(2.0 * e))
            .fold(0.0, f64::max)
    });

    let populated = smallest_cycle_radii.iter().filter(|r| r.is_some()).count();
    let inconclusive = populated < 4 || fit.is_none_or(|f| f.r_squared < 0.95);
    Ok(SweepReport {
        tau_values: tau_values.to_vec(),
        smallest_cycle_radii,
        fitted_radius_exponent: exponent,
        radius_constant: fit.map(|f| f.intercept.exp()),
        radius_fit_r_squared: fit.map(|f| f.r_squared),
        fitted_frequency_exponent_bound,
        frequency_constant,
        persistent_cycles,
        emerging_families: emerging.len(),
        inconclusive,
        points,
    })
}

/// CSV with columns `tau, radius, period, stability, return_derivative`.
pub fn write_cycles_csv<W: std::io::Write>(cycles: &[CycleRecord], out: W) -> Result<()> {
    let io = |e: csv::Error| Error::DomainError(format!("csv output failed: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["tau", "radius", "period", "stability", "return_derivative"]).map_err(io)?;
    for c in cycles {
        w.write_record([
            format!("{:e}", c.tau),
            format!("{:.12e}", c.radius),
            format!("{:.12e}", c.period),
            c.stability.to_string(),
            format!("{:.12e}", c.return_derivative),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::DomainError(format!("csv output failed: {e}")))?;
    Ok(())
}

/// Writes `tau_radius.dat` and `log_tau_log_radius.dat` into `dir`.
pub fn write_plot_data(report: &SweepReport, dir: &Path) -> Result<()> {
    let io = |e: std::io::Error| Error::DomainError(format!("plot data output failed: {e}"));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut lin = std::fs::File::create(dir.join("tau_radius.dat")).map_err(io)?;
    let mut log = std::fs::File::create(dir.join("log_tau_log_radius.dat")).map_err(io)?;
    writeln!(lin, "# tau radius (smallest emerging cycle)").map_err(io)?;
    writeln!(log, "# ln|tau| ln(radius) (smallest emerging cycle)").map_err(io)?;
    if let Some(e) = report.fitted_radius_exponent {
        writeln!(log, "# fitted exponent {e:.6}").map_err(io)?;
    }
    for (tau, r) in report.tau_values.iter().zip(&report.smallest_cycle_radii) {
        if let Some(r) = r {
            writeln!(lin, "{tau:.12e} {r:.12e}").map_err(io)?;
            writeln!(log, "{:.12e} {:.12e}", tau.abs().ln(), r.ln()).map_err(io)?;
        }
    }
    Ok(())
}

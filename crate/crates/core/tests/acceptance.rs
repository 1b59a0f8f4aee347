//! Acceptance criteria, one pass/fail line each.

use std::f64::consts::PI;
use std::process::ExitCode;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use hopfscope::atlas;
use hopfscope::averaging::{k_integral, pq_numeric, scaled_forcing, DiscriminantSeries};
use hopfscope::canonical::{h_table, hopf_entries_closed_form, HopfEntries, IndexTable};
use hopfscope::classify::{
    classify, default_r_grid, default_tau_window, sufficient_condition, BifurcationKind, ClassifyConfig,
    ConditionVerdict,
};
use hopfscope::quadrature;
use hopfscope::report::{analyze, AnalyzeOptions, InputEcho};
use hopfscope::verify::{find_cycles, geometric_grid, scaling_sweep, ReturnMap, Stability, SweepOptions, VerifyOptions};
use hopfscope::ParamField;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn classified(name: &str) -> Result<hopfscope::classify::Classification, String> {
    let vf = (atlas::by_name(name).unwrap().builder)(1.0);
    classify(&vf, &default_tau_window(), &default_r_grid(), &ClassifyConfig::default()).map_err(|e| format!("{name}: {e}"))
}

fn positive_window() -> Vec<f64> {
    default_tau_window().into_iter().filter(|t| *t > 0.0).collect()
}

fn k_table() -> Outcome {
    let expected = [((0, 3), 3.0 * PI / 4.0), ((2, 1), PI / 4.0), ((0, 5), 5.0 * PI / 8.0), ((2, 3), PI / 8.0), ((4, 1), PI / 8.0)];
    let exact = expected.iter().all(|&((m, n), v)| k_integral(m, n) == v);
    let mut worst: f64 = 0.0;
    for m in 0..=12u32 {
        for n in 0..=12 - m {
            let q = quadrature::integrate(|x: f64| x.cos().powi(m as i32) * x.sin().powi(n as i32 + 1), 0.0, 2.0 * PI, 1e-14)
                .map_err(|e| e.to_string())?;
            worst = worst.max((q - k_integral(m, n)).abs());
        }
    }
    check(exact && worst <= 1e-12, format!("tabulated values exact: {exact}, max |K − quadrature| = {worst:.1e}"))
}

fn h_equivalence() -> Outcome {
    let mut rng = StdRng::seed_from_u64(20_240_611);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let mut r = IndexTable::default();
        for deg in [2u32, 3, 4, 5, 6] {
            for m in 0..=deg {
                r.set(m, deg - m, rng.random_range(-1.0..1.0));
            }
        }
        let mu: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let direct = HopfEntries::from_table(&h_table(&r, mu));
        let closed = hopf_entries_closed_form(&r, mu);
        for (d, c) in direct.as_array().iter().zip(closed.as_array()) {
            worst = worst.max((d - c).abs() / c.abs().max(f64::MIN_POSITIVE));
        }
    }
    check(worst <= 1e-12, format!("1000 draws, max relative error {worst:.1e}"))
}

fn series_quadrature() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let mut h = IndexTable::default();
        for deg in 2..=5u32 {
            for m in 0..=deg {
                h.set(m, deg - m, rng.random_range(-1.0..1.0));
            }
        }
        let ds = DiscriminantSeries::from_h_table(&h);
        for (r, eps) in [(1.0, 0.1), (0.5, 0.1), (1.0, 0.02)] {
            let (p, q) = pq_numeric(scaled_forcing(&h, eps), r, eps).map_err(|e| e.to_string())?;
            let amp = eps * r;
            worst = worst.max((p - ds.p(amp)).abs() / ds.p(amp).abs());
            worst = worst.max((q - ds.q(amp)).abs() / ds.q(amp).abs());
        }
    }
    check(worst <= 1e-3, format!("150 (G, r, ε) cases with εr ≤ 0.1, max relative error {worst:.1e}"))
}

fn multi2_radii() -> Outcome {
    let a: f64 = 0.04;
    let cycles = find_cycles(&atlas::multi2(), a, 1e-3, 1.5, &VerifyOptions::default()).map_err(|e| e.to_string())?;
    let expected = [(2.0 / 3f64.sqrt() * a.sqrt(), Stability::Stable), (2.0 * a.sqrt(), Stability::Unstable)];
    let ok = cycles.len() == 2
        && cycles.iter().zip(expected).all(|(c, (r, s))| (c.radius / r - 1.0).abs() <= 0.005 && c.stability == s);
    let found: Vec<String> = cycles.iter().map(|c| format!("{:.5} {}", c.radius, c.stability)).collect();
    check(ok, format!("cycles [{}]", found.join(", ")))
}

fn multi2_scaling() -> Outcome {
    let sweep = scaling_sweep(&atlas::multi2(), &geometric_grid(2e-6, 2e-3, 8), &SweepOptions::default())
        .map_err(|e| e.to_string())?;
    let e = sweep.fitted_radius_exponent.ok_or("no emerging family")?;
    let c = classified("multi2")?;
    let ok = (e - 1.0 / 6.0).abs() <= 0.02
        && c.kind == BifurcationKind::DegenerateSecondKind
        && c.leading_index == Some(1)
        && (c.gamma - 2.0 / 3.0).abs() <= 0.05;
    check(ok, format!("radius exponent {e:.4}, {:?}, N = {:?}, γ = {:.4}", c.kind, c.leading_index, c.gamma))
}

fn semistable() -> Outcome {
    let vf = atlas::semistable2();
    let opts = VerifyOptions::default();
    let cycles = find_cycles(&vf, 0.04, 1e-3, 1.5, &opts).map_err(|e| e.to_string())?;
    let [c] = cycles[..] else {
        return Err(format!("{} cycles found", cycles.len()));
    };
    let map = ReturnMap::new(&vf, 0.04, opts).map_err(|e| e.to_string())?;
    let inside = map.displacement(0.95 * c.section_radius).map_err(|e| e.to_string())?;
    let outside = map.displacement(1.05 * c.section_radius).map_err(|e| e.to_string())?;
    let ok = c.stability == Stability::Semistable && (c.radius / 0.2 - 1.0).abs() <= 0.005 && inside.signum() == outside.signum();
    check(ok, format!("{} at {:.5}, displacement {inside:.2e} inside, {outside:.2e} outside", c.stability, c.radius))
}

fn persistence() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for name in ["persist1", "persist-semi"] {
        let vf = (atlas::by_name(name).unwrap().builder)(1.0);
        let c = classified(name)?;
        let taus = default_tau_window();
        let sweep = scaling_sweep(&vf, &taus, &SweepOptions::default()).map_err(|e| e.to_string())?;
        let worst = sweep
            .points
            .iter()
            .map(|p| match p.cycles[..] {
                [c] => (c.radius - 1.0).abs(),
                _ => f64::INFINITY,
            })
            .fold(0.0, f64::max);
        ok &= c.kind == BifurcationKind::DegenerateFirstKind && worst <= 1e-3 && sweep.emerging_families == 0;
        details.push(format!("{name}: {:?}, max |r − 1| = {worst:.1e} over {} τ, {} emerging", c.kind, taus.len(), sweep.emerging_families));
    }
    check(ok, details.join("; "))
}

fn infinity() -> Outcome {
    let c = classified("infinity")?;
    let opts = VerifyOptions { disk_radius: 20.0, ..VerifyOptions::default() };
    let cycles = find_cycles(&atlas::infinity(1.0), 0.01, 1e-2, 15.0, &opts).map_err(|e| e.to_string())?;
    let [cyc] = cycles[..] else {
        return Err(format!("{:?}, {} cycles found", c.kind, cycles.len()));
    };
    let ok = c.kind == BifurcationKind::DegenerateFirstKind
        && (cyc.radius / 10.0 - 1.0).abs() <= 0.01
        && cyc.stability == Stability::Unstable;
    check(ok, format!("{:?}, cycle at {:.4} is {} (required unstable), P' = {:.6}", c.kind, cyc.radius, cyc.stability, cyc.return_derivative))
}

fn sufficient() -> Outcome {
    let sc = sufficient_condition(2f64.cbrt(), 0.375 / 2f64.cbrt(), 2.0 / 3.0).map_err(|e| e.to_string())?;
    let a: f64 = 0.04;
    let radii = sc.radii_at(2.0 * a.powi(3));
    let expected = [2.0 / 3f64.sqrt() * a.sqrt(), 2.0 * a.sqrt()];
    let ok = sc.verdict == ConditionVerdict::TwoCycles
        && (sc.delta - 2f64.powf(-4.0 / 3.0)).abs() < 1e-12
        && (sc.delta - 0.3968).abs() < 1e-4
        && radii.len() == 2
        && radii.iter().zip(expected).all(|(r, e)| (r / e - 1.0).abs() <= 0.01);
    check(ok, format!("Δ = {:.5}, {:?}, radii {radii:.5?}", sc.delta, sc.verdict))
}

fn non_degenerate() -> Outcome {
    let vf: ParamField = atlas::cubic_std();
    let c = classified("cubic-std")?;
    let sweep = scaling_sweep(&vf, &positive_window(), &SweepOptions::default()).map_err(|e| e.to_string())?;
    let mut radius_err: f64 = 0.0;
    let mut period_err: f64 = 0.0;
    for p in &sweep.points {
        let [cyc] = p.cycles[..] else {
            return Err(format!("τ = {:e}: {} cycles", p.tau, p.cycles.len()));
        };
        radius_err = radius_err.max((cyc.radius / p.a.sqrt() - 1.0).abs());
        period_err = period_err.max((cyc.period - 2.0 * PI).abs());
    }
    let e = sweep.fitted_radius_exponent.ok_or("no emerging family")?;
    let ok = c.kind == BifurcationKind::NonDegenerate
        && c.leading_index == Some(1)
        && radius_err <= 0.01
        && (e - 0.5).abs() <= 0.02
        && period_err <= 1e-6;
    check(ok, format!("{:?}, N = {:?}, max |r/√a − 1| = {radius_err:.1e}, exponent {e:.4}, max |T − 2π| = {period_err:.1e}", c.kind, c.leading_index))
}

fn pipeline_ratio() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for (name, a) in [("multi2", 0.1), ("cubic-std", 0.04)] {
        let vf = (atlas::by_name(name).unwrap().builder)(1.0);
        let opts = AnalyzeOptions { tau_window: None, ..AnalyzeOptions::default() };
        let r = analyze(&vf, a, InputEcho::default(), &opts).map_err(|e| e.to_string())?;
        let ratio = r.pipeline.p3 / r.empirical.c3;
        let warned = r.warnings.iter().any(|w| w.starts_with("pipeline/empirical ratio 0.50 for p3"));
        ok &= (ratio - 0.5).abs() <= 0.025 && warned;
        details.push(format!("{name}: ratio {ratio:.4}, warning {warned}"));
    }
    check(ok, details.join("; "))
}

fn one_sided() -> Outcome {
    let mut total = 0;
    for vf in [atlas::multi2(), atlas::semistable2()] {
        for a in [-0.1, -0.04] {
            total += find_cycles(&vf, a, 1e-4, 1.5, &VerifyOptions::default()).map_err(|e| e.to_string())?.len();
        }
    }
    check(total == 0, format!("{total} cycles for a < 0"))
}

fn frequency_bound() -> Outcome {
    let sweep = scaling_sweep(&atlas::multi2(), &geometric_grid(2e-6, 2e-3, 8), &SweepOptions::default())
        .map_err(|e| e.to_string())?;
    let k = sweep
        .all_cycles()
        .map(|c| (c.frequency - 1.0).abs() / c.tau.abs().cbrt())
        .fold(0.0, f64::max);
    check(k.is_finite(), format!("K = max |ϖ − 1| / |τ|^(1/3) = {k:.2e}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 13] = [
        ("K integral table", k_table),
        ("H-formula equivalence", h_equivalence),
        ("series/quadrature oracle", series_quadrature),
        ("multi2 radii and stability", multi2_radii),
        ("multi2 scaling and classification", multi2_scaling),
        ("semistable2 semistable cycle", semistable),
        ("first kind, persistent unit cycle", persistence),
        ("infinity system", infinity),
        ("sufficient condition", sufficient),
        ("non-degenerate baseline", non_degenerate),
        ("pipeline characterization", pipeline_ratio),
        ("one-sidedness", one_sided),
        ("frequency bound", frequency_bound),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

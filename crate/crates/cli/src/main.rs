use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use hopfscope::atlas;
use hopfscope::classify::{default_r_grid, default_tau_window, ClassifyConfig};
use hopfscope::report::{self, AnalyzeOptions, CycleBlock, InputEcho, SweepBlock, VerifyReport, SCHEMA_VERSION};
use hopfscope::verify::{find_cycles, geometric_grid, scaling_sweep, write_cycles_csv, write_plot_data, SweepOptions, VerifyOptions};
use hopfscope::ParamField;

/// Hopf bifurcation analysis of polynomial planar vector fields.
#[derive(Parser, Debug)]
#[command(name = "hopfscope", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Series coefficients, empirical discriminant, predicted and detected
    /// cycles at one parameter value, plus a classification
    Analyze {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        point: Point,
        /// Trace window for the classification (min:max:count)
        #[arg(long, value_parser = parse_window)]
        tau_window: Option<Window>,
        /// Skip the classification
        #[arg(long)]
        no_classify: bool,
        #[command(flatten)]
        numerics: Numerics,
        #[command(flatten)]
        output: Output,
    },
    /// Classify the bifurcation at the critical parameter value
    Classify {
        #[command(flatten)]
        source: Source,
        /// Trace window (min:max:count); a positive window is mirrored to
        /// negative traces
        #[arg(long, value_parser = parse_window)]
        tau_window: Option<Window>,
        #[command(flatten)]
        numerics: Numerics,
        #[command(flatten)]
        output: Output,
    },
    /// Locate limit cycles by the return map at one parameter value
    Verify {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        point: Point,
        #[command(flatten)]
        search: Search,
        #[command(flatten)]
        numerics: Numerics,
        #[command(flatten)]
        output: Output,
    },
    /// Detect cycles over a range of traces and fit their scaling
    Sweep {
        #[command(flatten)]
        source: Source,
        /// Trace values (min:max:count, geometric)
        #[arg(long, value_parser = parse_window)]
        tau: Window,
        #[command(flatten)]
        search: Search,
        /// Write every detected cycle as CSV to this file
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write two-column plot data files into this directory
        #[arg(long)]
        plot_data: Option<PathBuf>,
        #[command(flatten)]
        numerics: Numerics,
        #[command(flatten)]
        output: Output,
    },
    /// List the built-in systems
    AtlasList {
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Args, Debug)]
struct Source {
    /// System description file (JSON)
    #[arg(long, conflicts_with = "atlas", required_unless_present = "atlas")]
    system: Option<PathBuf>,
    /// Built-in system name
    #[arg(long)]
    atlas: Option<String>,
    /// Exponent of the `infinity` system
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Parameter window used to invert the trace (min:max)
    #[arg(long, value_parser = parse_range)]
    a_window: Option<(f64, f64)>,
}

#[derive(Args, Debug)]
struct Point {
    /// Parameter value
    #[arg(long, allow_hyphen_values = true, conflicts_with = "tau", required_unless_present = "tau")]
    a: Option<f64>,
    /// Trace value, converted to a parameter value
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<f64>,
}

#[derive(Args, Debug)]
struct Search {
    /// Smallest probe radius
    #[arg(long, default_value_t = 1e-4)]
    r_min: f64,
    /// Largest probe radius
    #[arg(long, default_value_t = 1.5)]
    r_max: f64,
}

#[derive(Args, Debug)]
struct Numerics {
    /// Integrator tolerance
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Orbits leaving this disk are reported as escapes
    #[arg(long, default_value_t = 10.0)]
    disk_radius: f64,
    /// Radii for the empirical discriminant (min:max:count)
    #[arg(long, value_parser = parse_window)]
    r_grid: Option<Window>,
}

impl Numerics {
    fn verify(&self) -> Result<VerifyOptions, CliError> {
        if !(1e-14..=1e-6).contains(&self.tol) {
            return Err(CliError::Input(format!("--tol {} outside [1e-14, 1e-6]", self.tol)));
        }
        Ok(VerifyOptions { tol: self.tol, disk_radius: self.disk_radius, ..VerifyOptions::default() })
    }

    fn r_grid(&self) -> Vec<f64> {
        self.r_grid.map_or_else(default_r_grid, |w| w.grid())
    }
}

#[derive(Args, Debug)]
struct Output {
    /// Output file; standard output when absent
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Window {
    min: f64,
    max: f64,
    count: usize,
}

impl Window {
    /// Geometric grid; a negative window is spaced in `|τ|`.
    fn grid(&self) -> Vec<f64> {
        if self.max < 0.0 {
            geometric_grid(-self.max, -self.min, self.count).into_iter().rev().map(|t| -t).collect()
        } else {
            geometric_grid(self.min, self.max, self.count)
        }
    }

    /// Positive windows are mirrored to both signs.
    fn signed_grid(&self) -> Vec<f64> {
        let g = self.grid();
        if self.min > 0.0 {
            g.iter().rev().map(|t| -t).chain(g.iter().copied()).collect()
        } else {
            g
        }
    }
}

fn parse_window(s: &str) -> Result<Window, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts[..] else {
        return Err(format!("expected min:max:count, got `{s}`"));
    };
    let min: f64 = lo.parse().map_err(|e| format!("bad min `{lo}`: {e}"))?;
    let max: f64 = hi.parse().map_err(|e| format!("bad max `{hi}`: {e}"))?;
    let count: usize = n.parse().map_err(|e| format!("bad count `{n}`: {e}"))?;
    let same_sign = (min > 0.0 && max > 0.0) || (min < 0.0 && max < 0.0);
    if !same_sign || min >= max || count < 2 {
        return Err(format!("need 0 < min < max or min < max < 0, and count >= 2, got `{s}`"));
    }
    Ok(Window { min, max, count })
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected min:max, got `{s}`"))?;
    let lo: f64 = lo.parse().map_err(|e| format!("bad min `{lo}`: {e}"))?;
    let hi: f64 = hi.parse().map_err(|e| format!("bad max `{hi}`: {e}"))?;
    if lo >= hi {
        return Err(format!("min must be below max in `{s}`"));
    }
    Ok((lo, hi))
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Numeric(hopfscope::Error),
}

impl From<hopfscope::Error> for CliError {
    fn from(e: hopfscope::Error) -> Self {
        if e.is_input_error() {
            CliError::Input(format!("{}: {e}", e.name()))
        } else {
            CliError::Numeric(e)
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

impl Source {
    fn load(&self) -> Result<(ParamField, InputEcho), CliError> {
        let (vf, echo) = if let Some(path) = &self.system {
            let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            let vf: ParamField = serde_json::from_str(&text).map_err(|e| {
                CliError::Input(format!(
                    "{}: line {}, column {}: {e}",
                    path.display(),
                    e.line(),
                    e.column()
                ))
            })?;
            (vf, InputEcho { system: path.display().to_string(), ..InputEcho::default() })
        } else {
            let name = self.atlas.as_deref().expect("clap requires --system or --atlas");
            let entry = atlas::by_name(name).ok_or_else(|| {
                let names: Vec<&str> = atlas::entries().iter().map(|e| e.name).collect();
                CliError::Input(format!("unknown atlas system `{name}` (known: {})", names.join(", ")))
            })?;
            let beta = (name == "infinity").then_some(self.beta);
            if beta.is_some_and(|b| b <= 0.0) {
                return Err(CliError::Input(format!("--beta must be positive, got {}", self.beta)));
            }
            ((entry.builder)(self.beta), InputEcho { system: name.to_string(), beta, ..InputEcho::default() })
        };
        let vf = match self.a_window {
            Some((lo, hi)) => vf.with_window(lo, hi)?,
            None => vf,
        };
        Ok((vf, echo))
    }
}

impl Point {
    fn resolve(&self, vf: &ParamField, echo: &mut InputEcho) -> Result<f64, CliError> {
        let a = match (self.a, self.tau) {
            (Some(a), _) => a,
            (None, Some(tau)) => {
                echo.tau = Some(tau);
                vf.a_of_tau(tau)?
            }
            (None, None) => unreachable!("clap requires --a or --tau"),
        };
        echo.a = Some(a);
        Ok(a)
    }
}

fn emit<T: Serialize>(value: &T, output: &Output) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    write_text(&text, output.out.as_deref())
}

fn write_text(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| io_error(path, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Input(format!("stdout: {e}"))),
    }
}

fn csv_text(cycles: &[hopfscope::verify::CycleRecord]) -> Result<String, CliError> {
    let mut buf = Vec::new();
    write_cycles_csv(cycles, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

fn reject_csv(output: &Output, command: &str) -> Result<(), CliError> {
    if output.format == Format::Csv {
        return Err(CliError::Input(format!("{command} has no CSV output; use --format json")));
    }
    Ok(())
}

#[derive(Serialize)]
struct AtlasListing {
    name: &'static str,
    citation: &'static str,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze { source, point, tau_window, no_classify, numerics, output } => {
            reject_csv(&output, "analyze")?;
            let (vf, mut echo) = source.load()?;
            let a = point.resolve(&vf, &mut echo)?;
            let r_grid = numerics.r_grid();
            let window = (!no_classify).then(|| tau_window.map_or_else(default_tau_window, |w| w.signed_grid()));
            echo.tau_window = window.clone();
            echo.r_grid = Some(r_grid.clone());
            let opts = AnalyzeOptions {
                r_grid,
                tau_window: window,
                config: ClassifyConfig { verify: numerics.verify()?, ..ClassifyConfig::default() },
                ..AnalyzeOptions::default()
            };
            emit(&report::analyze(&vf, a, echo, &opts)?, &output)
        }
        Command::Classify { source, tau_window, numerics, output } => {
            reject_csv(&output, "classify")?;
            let (vf, mut echo) = source.load()?;
            let window = tau_window.map_or_else(default_tau_window, |w| w.signed_grid());
            let r_grid = numerics.r_grid();
            echo.tau_window = Some(window.clone());
            echo.r_grid = Some(r_grid.clone());
            let config = ClassifyConfig { verify: numerics.verify()?, ..ClassifyConfig::default() };
            emit(&report::classify_report(&vf, echo, &window, &r_grid, &config)?, &output)
        }
        Command::Verify { source, point, search, numerics, output } => {
            let (vf, mut echo) = source.load()?;
            let a = point.resolve(&vf, &mut echo)?;
            let cycles = find_cycles(&vf, a, search.r_min, search.r_max, &numerics.verify()?)?;
            match output.format {
                Format::Csv => write_text(&csv_text(&cycles)?, output.out.as_deref()),
                Format::Json => emit(
                    &VerifyReport {
                        schema_version: SCHEMA_VERSION,
                        input: echo,
                        a,
                        tau: vf.tau(a),
                        detected: CycleBlock::new(cycles),
                    },
                    &output,
                ),
            }
        }
        Command::Sweep { source, tau, search, csv, plot_data, numerics, output } => {
            let (vf, mut echo) = source.load()?;
            let taus = tau.grid();
            echo.tau_window = Some(taus.clone());
            let opts = SweepOptions { verify: numerics.verify()?, r_min: search.r_min, r_max: search.r_max, ..SweepOptions::default() };
            let sweep = scaling_sweep(&vf, &taus, &opts)?;
            let cycles: Vec<_> = sweep.all_cycles().copied().collect();
            if let Some(path) = &csv {
                fs::write(path, csv_text(&cycles)?).map_err(|e| io_error(path, e))?;
            }
            if let Some(dir) = &plot_data {
                write_plot_data(&sweep, dir)?;
            }
            match output.format {
                Format::Csv => write_text(&csv_text(&cycles)?, output.out.as_deref()),
                Format::Json => emit(&SweepBlock::new(echo, sweep), &output),
            }
        }
        Command::AtlasList { output } => {
            let entries = atlas::entries();
            match output.format {
                Format::Json => {
                    let list: Vec<AtlasListing> =
                        entries.iter().map(|e| AtlasListing { name: e.name, citation: e.citation }).collect();
                    emit(&list, &output)
                }
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    w.write_record(["name", "citation"]).and_then(|_| {
                        entries.iter().try_for_each(|e| w.write_record([e.name, e.citation]))
                    })
                    .map_err(|e| CliError::Input(format!("csv: {e}")))?;
                    let bytes = w.into_inner().map_err(|e| CliError::Input(format!("csv: {e}")))?;
                    write_text(&String::from_utf8(bytes).expect("csv output is UTF-8"), output.out.as_deref())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(e)) => {
            eprintln!("error: {}: {e}", e.name());
            ExitCode::from(3)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows() {
        let w = parse_window("1e-6:1e-3:4").unwrap();
        let g = w.signed_grid();
        assert_eq!(g.len(), 8);
        assert_eq!((g[0], g[3], g[4], g[7]), (-1e-3, -1e-6, 1e-6, 1e-3));
        let neg = parse_window("-1e-3:-1e-6:4").unwrap();
        assert_eq!(neg.signed_grid(), g[..4].to_vec());
        for bad in ["1e-3:1e-6:4", "0:1:4", "-1:1:4", "1:2", "1:2:1", "a:2:3"] {
            assert!(parse_window(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("-0.2:0.3").unwrap(), (-0.2, 0.3));
        assert!(parse_range("0.3:0.2").is_err());
    }

    #[test]
    fn command_line_shape() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}

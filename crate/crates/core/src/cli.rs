//! The `bsplace` command line.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::continuum::{
    closed_form_lambda, iterate_scheme, max_deviation, optimal_bs_density, Measure1D,
};
use crate::density::{Density, DEFAULT_RESOLUTION_1D};
use crate::oracle::{candidate_grid, consistency_report, ConsistencyReport};
use crate::placement::{optimize, PlacementSolution};
use crate::scenario::{validate_compare, Mode, Overrides, Scenario, ScenarioError, DEFAULT_CANDIDATES, DEFAULT_COMPARE_K};

#[derive(Debug, Parser)]
#[command(name = "bsplace", version, about = "Energy-minimal base-station placement")]
pub struct Cli {
    /// Nodes per axis for every density grid.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Seed for randomized initialization.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Suppress the summary on stdout.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the solver selected by a scenario file.
    Run { file: PathBuf },
    /// Write plot data for the Gaussian and truncated Gaussian scenarios.
    ReproduceFigures {
        #[arg(long, default_value = "figures")]
        out: PathBuf,
    },
    /// Brute-force placements against the continuum prediction.
    Compare { file: PathBuf },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Invalid(String),
    #[error("solver did not converge; outputs in {0} are flagged")]
    NotConverged(PathBuf),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Invalid(_) => 3,
            CliError::NotConverged(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Parse(_) => CliError::Parse(e.to_string()),
            ScenarioError::Invalid(_) => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Parses the process arguments, runs, and returns the exit status.
pub fn main() -> i32 {
    let cli = Cli::parse();
    let quiet = cli.quiet;
    match execute(&cli) {
        Ok(lines) => {
            if !quiet {
                for l in lines {
                    println!("{l}");
                }
            }
            0
        }
        Err(e) => {
            eprintln!("bsplace: {e}");
            e.exit_code()
        }
    }
}

/// Runs one command and returns the summary lines.
pub fn execute(cli: &Cli) -> Result<Vec<String>> {
    let overrides = Overrides {
        grid: cli.grid,
        seed: cli.seed,
    };
    match &cli.command {
        Command::Run { file } => {
            let (scenario, out) = load(file, &overrides)?;
            run_scenario(&scenario, &out)
        }
        Command::Compare { file } => {
            let (scenario, out) = load(file, &overrides)?;
            let (k_list, candidates) = match &scenario.mode {
                Mode::Compare { k_list, candidates } => (k_list.clone(), *candidates),
                _ => (DEFAULT_COMPARE_K.to_vec(), DEFAULT_CANDIDATES),
            };
            validate_compare(&k_list, candidates)?;
            run_compare(&scenario, &k_list, candidates, &out)
        }
        Command::ReproduceFigures { out } => reproduce_figures(out, cli.grid),
    }
}

fn load(file: &Path, overrides: &Overrides) -> Result<(Scenario, PathBuf)> {
    let text = fs::read_to_string(file).map_err(|e| CliError::Io(format!("{}: {e}", file.display())))?;
    let scenario = Scenario::from_json(&text, overrides)?;
    let base = file.parent().unwrap_or(Path::new("."));
    let out = match &scenario.output_dir {
        Some(dir) if dir.is_absolute() => dir.clone(),
        Some(dir) => base.join(dir),
        None => {
            let stem = file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or("scenario".into());
            base.join(format!("{stem}_out"))
        }
    };
    Ok((scenario, out))
}

/// Writes the outputs of a scenario's mode into `out`.
pub fn run_scenario(scenario: &Scenario, out: &Path) -> Result<Vec<String>> {
    fs::create_dir_all(out)?;
    match &scenario.mode {
        Mode::Discrete { k, config } => {
            let sol = optimize(&scenario.field, *k, &scenario.radio, config)?;
            write_placement(&out.join("placement.csv"), &sol)?;
            write_pairs(&out.join("pairs.csv"), &sol)?;
            write_trace(&out.join("trace.csv"), &sol.trace)?;
            let mut summary = base_summary(scenario);
            summary["k"] = json!(k);
            summary["total_power"] = json!(sol.report.total);
            summary["intra_power"] = json!(sol.report.intra_total);
            summary["inter_power"] = json!(sol.report.inter_total);
            summary["converged"] = json!(sol.converged);
            summary["iterations"] = json!(sol.iterations);
            summary["rejected_steps"] = json!(sol.rejected_steps);
            summary["files"] = json!(["placement.csv", "pairs.csv", "trace.csv"]);
            write_summary(out, &summary)?;
            if !sol.converged {
                return Err(CliError::NotConverged(out.to_path_buf()));
            }
            Ok(vec![format!(
                "discrete K={k}: total power {:.10e} after {} iterations",
                sol.report.total, sol.iterations
            )])
        }
        Mode::Continuum {
            tolerance,
            max_iterations,
        } => {
            let field = &scenario.field;
            let nu0 = Measure1D::from_density(field, field.theta())?;
            let outcome = iterate_scheme(field, &nu0, &scenario.radio, *tolerance, *max_iterations)?;
            let v = outcome.measure.normalized()?;
            write_measure(&out.join("bs_density.csv"), "v", &v)?;
            let mut summary = base_summary(scenario);
            summary["lambda"] = json!(closed_form_lambda(field.theta())?);
            summary["iterations"] = json!(outcome.iterations);
            summary["converged"] = json!(outcome.converged);
            summary["last_change"] = json!(outcome.last_change);
            summary["mass"] = json!(outcome.measure.total_mass());
            summary["support"] = json!([v.support().0, v.support().1]);
            summary["std_dev"] = json!(v.std_dev());
            summary["files"] = json!(["bs_density.csv"]);
            write_summary(out, &summary)?;
            if !outcome.converged {
                return Err(CliError::NotConverged(out.to_path_buf()));
            }
            Ok(vec![format!(
                "continuum: {} scheme steps, last change {:.3e}",
                outcome.iterations, outcome.last_change
            )])
        }
        Mode::ClosedForm => {
            let field = &scenario.field;
            let v = optimal_bs_density(field, field.theta())?;
            write_measure(&out.join("bs_density.csv"), "v", &v)?;
            let lambda = closed_form_lambda(field.theta())?;
            let mut summary = base_summary(scenario);
            summary["lambda"] = json!(lambda);
            summary["support"] = json!([v.support().0, v.support().1]);
            summary["mass"] = json!(v.total_mass());
            summary["std_dev"] = json!(v.std_dev());
            summary["files"] = json!(["bs_density.csv"]);
            write_summary(out, &summary)?;
            Ok(vec![format!(
                "closed form: lambda {lambda:.10e}, support [{:.6}, {:.6}]",
                v.support().0,
                v.support().1
            )])
        }
        Mode::Compare { k_list, candidates } => run_compare(scenario, k_list, *candidates, out),
    }
}

fn run_compare(scenario: &Scenario, k_list: &[usize], candidates: usize, out: &Path) -> Result<Vec<String>> {
    fs::create_dir_all(out)?;
    let field = &scenario.field;
    let grid = candidate_grid(field, candidates)?;
    let rows = consistency_report(field, &scenario.radio, k_list, &grid)?;
    write_consistency(&out.join("consistency.csv"), &rows)?;
    let mut files = vec!["consistency.csv".to_string()];
    for r in &rows {
        let name = format!("placement_k{}.csv", r.k);
        write_report_placement(&out.join(&name), r)?;
        files.push(name);
    }
    let mut summary = base_summary(scenario);
    summary["mode"] = json!("compare");
    summary["k_list"] = json!(k_list);
    summary["candidates"] = json!(candidates);
    summary["files"] = json!(files);
    write_summary(out, &summary)?;
    Ok(rows
        .iter()
        .map(|r| {
            format!(
                "K={}: discrete spread {:.6e}, continuum spread {:.6e}, f spread {:.6e}",
                r.k, r.discrete_spread, r.continuum_spread, r.f_spread
            )
        })
        .collect())
}

fn base_summary(s: &Scenario) -> Value {
    json!({
        "name": s.name,
        "mode": s.mode.name(),
        "theta": s.field.theta(),
        "theta_label": s.theta_label,
        "sigma2": s.radio.sigma2(),
        "terminals": s.terminals,
        "seed": s.seed,
        "dim": s.field.dim(),
        "resolution": s.field.domain().axes().iter().map(|a| a.len()).collect::<Vec<_>>(),
    })
}

fn write_summary(out: &Path, summary: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    let mut f = fs::File::create(out.join("summary.json"))?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

/// Full-precision number formatting used in every CSV.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::Writer::from_path(path)?)
}

const AXES: [&str; 2] = ["x", "y"];

fn write_placement(path: &Path, sol: &PlacementSolution) -> Result<()> {
    let dim = sol.positions.first().map(|p| p.dim()).unwrap_or(1);
    let mut w = writer(path)?;
    let mut header = vec!["index".to_string()];
    header.extend(AXES[..dim].iter().map(|s| s.to_string()));
    header.extend(["m".to_string(), "intra".to_string()]);
    w.write_record(&header)?;
    for (i, p) in sol.positions.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(p.coords().iter().map(|c| num(*c)));
        row.push(num(sol.traffic.per_station[i]));
        row.push(num(sol.report.intra_per_cell[i]));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_pairs(path: &Path, sol: &PlacementSolution) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["i", "j", "d", "power"])?;
    let k = sol.positions.len();
    for i in 0..k {
        for j in 0..k {
            if i != j {
                w.write_record([
                    i.to_string(),
                    j.to_string(),
                    num(sol.positions[i].dist(&sol.positions[j])),
                    num(sol.report.inter_per_pair[i][j]),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn write_trace(path: &Path, trace: &[f64]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["iter", "total"])?;
    for (i, t) in trace.iter().enumerate() {
        w.write_record([i.to_string(), num(*t)])?;
    }
    w.flush()?;
    Ok(())
}

fn write_measure(path: &Path, column: &str, v: &Measure1D) -> Result<()> {
    let grid = v.grid();
    write_xy(path, column, (0..grid.len()).map(|k| (grid.node(k), v.values()[k])))
}

fn write_density(path: &Path, f: &Density) -> Result<()> {
    let axis = f.domain().axis(0);
    write_xy(path, "f", (0..axis.len()).map(|k| (axis.node(k), f.values()[k])))
}

fn write_xy(path: &Path, column: &str, rows: impl Iterator<Item = (f64, f64)>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["y", column])?;
    for (y, v) in rows {
        w.write_record([num(y), num(v)])?;
    }
    w.flush()?;
    Ok(())
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn write_consistency(path: &Path, rows: &[ConsistencyReport]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "k",
        "theta",
        "discrete_spread",
        "continuum_spread",
        "ratio",
        "f_spread",
        "lambda",
        "continuum_ratio",
        "power",
    ])?;
    for r in rows {
        w.write_record([
            r.k.to_string(),
            num(r.theta),
            num(r.discrete_spread),
            num(r.continuum_spread),
            opt(r.ratio),
            num(r.f_spread),
            num(r.lambda),
            opt(r.continuum_ratio()),
            num(r.power),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_report_placement(path: &Path, r: &ConsistencyReport) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["index", "x", "m"])?;
    for (i, (p, m)) in r.positions.iter().zip(&r.traffic).enumerate() {
        w.write_record([i.to_string(), num(*p), num(*m)])?;
    }
    w.flush()?;
    Ok(())
}

/// Throughputs used for figure data: two with a visible dilation and the
/// large value quoted for the Gaussian scenario.
pub const FIGURE_THETAS: [f64; 3] = [1.0, 2.0, 24.0];

/// Terminal densities of the two figure scenarios at `resolution` nodes.
pub fn figure_densities(resolution: usize) -> crate::Result<Vec<(&'static str, Density)>> {
    Ok(vec![
        ("normal", Density::normal_1d(0.0, 1.0, resolution)?),
        ("truncated_normal", Density::truncated_normal_1d(0.0, 1.0, -1.0, 1.0, resolution)?),
    ])
}

fn reproduce_figures(out: &Path, grid: Option<usize>) -> Result<Vec<String>> {
    fs::create_dir_all(out)?;
    let resolution = grid.unwrap_or(DEFAULT_RESOLUTION_1D);
    let mut entries = Vec::new();
    let mut lines = Vec::new();
    for (name, f) in figure_densities(resolution)? {
        for theta in FIGURE_THETAS {
            let tag = format!("{name}_theta{theta}");
            let v = optimal_bs_density(&f, theta)?;
            let f_file = format!("{tag}_f.csv");
            let v_file = format!("{tag}_v.csv");
            write_density(&out.join(&f_file), &f)?;
            write_measure(&out.join(&v_file), "v", &v)?;
            let lambda = closed_form_lambda(theta)?;
            let deviation = max_deviation(&v, &f)?;
            let f_spread = f.std_dev_1d()?;
            entries.push(json!({
                "density": name,
                "theta": theta,
                "lambda": lambda,
                "lambda_minus_one": lambda - 1.0,
                "support": [v.support().0, v.support().1],
                "mass": v.total_mass(),
                "f_spread": f_spread,
                "v_spread": v.std_dev(),
                "max_abs_v_minus_f": deviation,
                "files": [f_file, v_file],
            }));
            lines.push(format!(
                "{name} theta={theta}: lambda {lambda:.10e}, max |v - f| {deviation:.3e}"
            ));
        }
    }
    let summary = json!({
        "resolution": resolution,
        "theta_note": "theta = 24 is the value quoted as 24 Kbps; it is used here as a dimensionless rate",
        "figures": entries,
    });
    let mut text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    fs::write(out.join("figures.json"), text)?;
    Ok(lines)
}

use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use bargmann_cli::config::{parse_raise, CheckSelection, ConfigError, PipelineConfig};
use bargmann_cli::{run_pipeline, RunReport};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bargmann", version, about = "Coupled-channel inverse scattering pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run kernel, Marchenko solve, σ, chain and checks; write CSV tables and report.json.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` configuration file.
    #[arg(long, value_name = "PATH", conflicts_with = "golden")]
    config: Option<PathBuf>,
    /// Use the reference parameters χ = 0.26, φ = 0.944, κ = 0.232 fm⁻¹.
    #[arg(long)]
    golden: bool,
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// all, none, or a comma list such as AC-1,AC-3.
    #[arg(long, value_name = "all|none|LIST")]
    checks: Option<String>,
    /// Add the ℓ-raising step and its V4 table.
    #[arg(long, value_name = "inverse|direct")]
    raise: Option<String>,
    #[arg(long)]
    chi: Option<f64>,
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    x_min: Option<f64>,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    intervals: Option<usize>,
    #[arg(long)]
    per_decade: Option<usize>,
    #[arg(long)]
    sigma_max: Option<f64>,
    /// Comma list of tables to write (V0..V4, Phi0, Phi3, asymptotic_D).
    #[arg(long)]
    outputs: Option<String>,
}

fn build_config(a: &RunArgs) -> Result<PipelineConfig, ConfigError> {
    let mut cfg = match &a.config {
        Some(p) => PipelineConfig::from_file(p)?,
        None => PipelineConfig::default(),
    };
    let overrides: [(&str, Option<String>); 9] = [
        ("chi", a.chi.map(|v| v.to_string())),
        ("phi", a.phi.map(|v| v.to_string())),
        ("kappa", a.kappa.map(|v| v.to_string())),
        ("x_min", a.x_min.map(|v| v.to_string())),
        ("r_max", a.r_max.map(|v| v.to_string())),
        ("intervals", a.intervals.map(|v| v.to_string())),
        ("per_decade", a.per_decade.map(|v| v.to_string())),
        ("sigma_max", a.sigma_max.map(|v| v.to_string())),
        ("outputs", a.outputs.clone()),
    ];
    for (k, v) in overrides {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
    }
    if let Some(c) = &a.checks {
        cfg.checks = CheckSelection::parse(c)?;
    }
    if let Some(r) = &a.raise {
        cfg.raise = parse_raise(r)?;
    }
    Ok(cfg)
}

struct Style {
    color: bool,
}

impl Style {
    fn paint(&self, code: &str, s: &str) -> String {
        if self.color {
            format!("\x1b[{code}m{s}\x1b[0m")
        } else {
            s.to_string()
        }
    }
}

fn render(report: &RunReport, style: &Style) {
    match report.sigma {
        Some(s) => println!("sigma = {s:.10} fm^-1 ({} root(s) found)", report.sigma_roots.len()),
        None => println!("sigma: none (no transformation)"),
    }
    for c in &report.checks {
        let tag = if c.passed { style.paint("32", "PASS") } else { style.paint("31", "FAIL") };
        let res = c.residual.map_or("n/a".to_string(), |r| format!("{r:.3e}"));
        println!("{tag} {} {}: residual {res} (tol {:.0e}) {}", c.id, c.title, c.tolerance, c.detail);
    }
    for m in &report.manifest {
        println!("wrote {} ({} rows)", m.file, m.rows);
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let color = std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty()) && std::io::stdout().is_terminal();
    let style = Style { color };
    let Command::Run(args) = cli.command;
    let cfg = match build_config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{} {e}", style.paint("31", "config error:"));
            return ExitCode::from(3);
        }
    };
    match run_pipeline(&cfg, &args.out) {
        Ok(report) => {
            render(&report, &style);
            ExitCode::from(report.exit_code())
        }
        Err(e) => {
            eprintln!("{} {e}", style.paint("31", "error:"));
            ExitCode::from(e.exit_code())
        }
    }
}

use std::path::{Path, PathBuf};
use std::sync::Arc;

use bargmann::chain::{mpet_raise, track_bound_state, ChainOptions};
use bargmann::marchenko::PotentialTable;
use bargmann::numerics::WaveTable;
use bargmann::verify::acceptance::{run_check, CheckContext, CheckError, CheckRecord};
use serde::Serialize;

use crate::config::{ConfigError, PipelineConfig};
use crate::table::{emit_table, TableError};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("stage {stage}: {message}")]
    Stage { stage: &'static str, message: String },
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl PipelineError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 3,
            _ => 2,
        }
    }
}

fn stage(stage: &'static str) -> impl Fn(CheckError) -> PipelineError {
    move |e| PipelineError::Stage { stage, message: e.to_string() }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckEntry {
    pub id: String,
    pub title: String,
    pub passed: bool,
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub detail: String,
}

impl From<CheckRecord> for CheckEntry {
    fn from(r: CheckRecord) -> Self {
        Self {
            id: r.id,
            title: r.title,
            passed: r.passed,
            residual: r.residual.is_finite().then_some(r.residual),
            tolerance: r.tolerance,
            detail: r.detail,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ManifestEntry {
    pub name: String,
    pub file: String,
    pub rows: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub chi: f64,
    pub phi: f64,
    pub kappa: f64,
    pub grid_nodes: usize,
    pub sigma: Option<f64>,
    /// All σ roots found by the scan; more than one is reported, not resolved.
    pub sigma_roots: Vec<f64>,
    pub sigma_residual: Option<f64>,
    pub raise: Option<String>,
    pub checks: Vec<CheckEntry>,
    pub manifest: Vec<ManifestEntry>,
}

impl RunReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn exit_code(&self) -> u8 {
        if self.all_passed() {
            0
        } else {
            1
        }
    }
}

fn potential_columns(p: &PotentialTable) -> Vec<(&'static str, Vec<f64>)> {
    vec![
        ("V11", p.values.iter().map(|v| v.m[0][0]).collect()),
        ("V12", p.values.iter().map(|v| v.m[0][1]).collect()),
        ("V22", p.values.iter().map(|v| v.m[1][1]).collect()),
    ]
}

fn wave_columns(w: &WaveTable) -> Vec<(&'static str, Vec<f64>)> {
    vec![("phi_S", w.values.iter().map(|v| v[0]).collect()), ("phi_D", w.values.iter().map(|v| v[1]).collect())]
}

/// Runs the chain, writes the requested tables and `report.json` into
/// `out`, and evaluates the enabled checks.
pub fn run_pipeline(cfg: &PipelineConfig, out: &Path) -> Result<RunReport, PipelineError> {
    cfg.validate()?;
    let params = cfg.params()?;
    let grid = Arc::new(cfg.grid()?);
    std::fs::create_dir_all(out).map_err(|source| PipelineError::Io { path: out.display().to_string(), source })?;

    let opts = ChainOptions { sigma_max: cfg.sigma_max };
    let ctx = CheckContext::new(params, Arc::clone(&grid), &opts).map_err(stage("chain"))?;
    let chain = &ctx.chain;
    let v4 = match cfg.raise {
        Some(variant) => Some(
            mpet_raise(chain.last(), variant)
                .map_err(|e| PipelineError::Stage { stage: "mpet_raise", message: e.to_string() })?,
        ),
        None => None,
    };
    let phis = track_bound_state(chain.last());

    let x = grid.points();
    let mut manifest = Vec::new();
    let mut write = |name: &str, cols: Vec<(&str, Vec<f64>)>| -> Result<(), PipelineError> {
        let path: PathBuf = emit_table(out, name, x, &cols)?;
        let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        manifest.push(ManifestEntry { name: name.into(), file, rows: x.len() });
        Ok(())
    };
    for name in cfg.outputs() {
        match name.as_str() {
            "V0" | "V1" | "V2" | "V3" => {
                let n: usize = name[1..].parse().expect("stage digit");
                write(&name, potential_columns(&chain.stages[n].potential))?;
            }
            "V4" => {
                let s = v4.as_ref().expect("validated: V4 needs a raise variant");
                write(&name, potential_columns(&s.potential))?;
            }
            "Phi0" | "Phi3" => {
                let n = if name == "Phi0" { 0 } else { 3 };
                let w = phis.get(n).ok_or_else(|| PipelineError::Stage {
                    stage: "track_bound_state",
                    message: "no bound-state wavefunction".into(),
                })?;
                write(&name, wave_columns(w))?;
            }
            "asymptotic_D" => {
                let (p0, p3) = match (phis.first(), phis.get(3)) {
                    (Some(a), Some(b)) => (a, b),
                    _ => {
                        return Err(PipelineError::Stage {
                            stage: "track_bound_state",
                            message: "no bound-state wavefunction".into(),
                        })
                    }
                };
                let a2 = chain.norms.map_or(0.0, |n| n.a2);
                let kappa = params.kappa;
                write(
                    &name,
                    vec![
                        ("phi0_D", p0.values.iter().map(|v| v[1]).collect()),
                        ("phi3_D", p3.values.iter().map(|v| v[1]).collect()),
                        ("A2_exp", x.iter().map(|x| a2 * (-kappa * x).exp()).collect()),
                    ],
                )?;
            }
            other => unreachable!("validated output name {other}"),
        }
    }

    let mut checks = Vec::new();
    for id in cfg.checks.ids() {
        let entry = match run_check(id, &ctx) {
            Ok(r) => CheckEntry::from(r),
            Err(e) => CheckEntry {
                id: id.into(),
                title: "error".into(),
                passed: false,
                residual: None,
                tolerance: 0.0,
                detail: e.to_string(),
            },
        };
        checks.push(entry);
    }

    let report = RunReport {
        chi: params.chi,
        phi: params.phi,
        kappa: params.kappa,
        grid_nodes: grid.len(),
        sigma: chain.sigma.as_ref().map(|s| s.sigma),
        sigma_roots: chain.sigma.as_ref().map(|s| s.all.clone()).unwrap_or_default(),
        sigma_residual: chain.sigma.as_ref().map(|s| s.residual),
        raise: cfg.raise.map(|v| format!("{v:?}").to_lowercase()),
        checks,
        manifest,
    };
    let path = out.join("report.json");
    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    std::fs::write(&path, json).map_err(|source| PipelineError::Io { path: path.display().to_string(), source })?;
    Ok(report)
}

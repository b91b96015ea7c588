//! Command-line front end: built-in problems, scheme options, convergence
//! studies and CSV artifacts.

pub mod config;
pub mod study;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Parser;

pub use config::{Mode, RunConfig, Settings};
pub use study::run_study;

#[derive(Parser, Debug, Default)]
#[command(name = "ppifem", version, about = "Convergence studies for bilinear immersed finite elements with triple junctions")]
pub struct Cli {
    /// Built-in problem: 1 (three straight lines) or 2 (circle and line).
    #[arg(long)]
    pub example: Option<String>,
    /// Flat `key = value` config file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Diffusion coefficients of the three subdomains, e.g. `10,1,100`.
    #[arg(long, allow_hyphen_values = true)]
    pub betas: Option<String>,
    /// `ppifem` or `galerkin`.
    #[arg(long)]
    pub scheme: Option<String>,
    /// `solve` (default) or `interpolate` for interpolation errors only.
    #[arg(long)]
    pub mode: Option<String>,
    /// Symmetrization parameter: -1, 0 or 1.
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: Option<String>,
    /// Penalty scale; the edge penalty is `sigma0 · max β`.
    #[arg(long)]
    pub sigma0: Option<String>,
    /// Coarsest mesh subdivision.
    #[arg(long)]
    pub n_start: Option<String>,
    /// Number of meshes, doubling the subdivision each time.
    #[arg(long)]
    pub refinements: Option<String>,
    /// One quadrature order, or `volume,segment,error`.
    #[arg(long)]
    pub quad_order: Option<String>,
    /// Extend the study to N = 512.
    #[arg(long)]
    pub full: bool,
    #[arg(long)]
    pub out_errors: Option<PathBuf>,
    #[arg(long)]
    pub out_classification: Option<PathBuf>,
    #[arg(long)]
    pub out_surface: Option<PathBuf>,
    /// Surface field: `solution` or `error`.
    #[arg(long)]
    pub field: Option<String>,
    /// Subdivision for the classification map, surface and system dump (default: first mesh).
    #[arg(long)]
    pub emit_n: Option<String>,
    /// Write the reduced matrix (Matrix Market) here and the rhs to `PATH.rhs`.
    #[arg(long)]
    pub dump_system: Option<PathBuf>,
}

impl Cli {
    /// Settings given on the command line.
    pub fn settings(&self) -> Result<Settings> {
        let mut s = Settings::default();
        let text = [
            ("example", &self.example),
            ("betas", &self.betas),
            ("scheme", &self.scheme),
            ("mode", &self.mode),
            ("epsilon", &self.epsilon),
            ("sigma0", &self.sigma0),
            ("n_start", &self.n_start),
            ("refinements", &self.refinements),
            ("quad_order", &self.quad_order),
            ("field", &self.field),
            ("emit_n", &self.emit_n),
        ];
        for (key, value) in text {
            if let Some(v) = value {
                s.set(key, v).with_context(|| format!("--{}", key.replace('_', "-")))?;
            }
        }
        if self.full {
            s.full = Some(true);
        }
        s.out_errors = self.out_errors.clone();
        s.out_classification = self.out_classification.clone();
        s.out_surface = self.out_surface.clone();
        s.dump_system = self.dump_system.clone();
        Ok(s)
    }

    /// Config file (if any) overlaid with the flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let base = match &self.config {
            Some(path) => Settings::from_file(path)?,
            None => Settings::default(),
        };
        base.overlay(self.settings()?).resolve()
    }
}

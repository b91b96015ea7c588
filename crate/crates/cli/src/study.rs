//! Convergence-study driver and artifact emission.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use ppifem_core::analysis::{self, attach_rates, errors_csv, format_table, sample_surface, surface_csv, surface_maxima};
use ppifem_core::assembly::build_bases;
use ppifem_core::mesh::classification_csv;
use ppifem_core::{
    build_mesh, compute_errors, interpolate, solve_problem, CartesianMesh, DiscreteFunction, ErrorReport, LocalBasis,
    ProblemSpec, SolveStats, SparseSystem,
};

use crate::config::{field_name, mode_name, Mode, RunConfig};

/// Discrete function on one mesh together with what produced it.
pub struct Evaluation {
    pub mesh: CartesianMesh,
    pub bases: Vec<LocalBasis>,
    pub function: DiscreteFunction,
    /// Reduced system and solver statistics; absent in interpolation mode.
    pub solve: Option<(SparseSystem, SolveStats)>,
}

pub fn evaluate(config: &RunConfig, spec: &ProblemSpec, n: usize) -> Result<Evaluation> {
    let params = config.params();
    match config.mode {
        Mode::Solve => {
            let sol = solve_problem(spec, n, &params).with_context(|| format!("solving on N={n}"))?;
            Ok(Evaluation {
                mesh: sol.mesh,
                bases: sol.bases,
                function: sol.function,
                solve: Some((sol.system, sol.stats)),
            })
        }
        Mode::Interpolate => {
            let mesh = build_mesh(spec.domain, n, &spec.geom).with_context(|| format!("meshing N={n}"))?;
            let bases = build_bases(&mesh, spec.beta)?;
            let function = interpolate(&mesh, &bases, spec, params.orders.segment)?;
            Ok(Evaluation {
                mesh,
                bases,
                function,
                solve: None,
            })
        }
    }
}

/// Runs the study, prints progress and the rate table to `log`, and writes the
/// requested artifacts.
pub fn run_study(config: &RunConfig, log: &mut dyn Write) -> Result<Vec<ErrorReport>> {
    config.validate()?;
    if config.dump_system.is_some() && config.mode == Mode::Interpolate {
        bail!("key 'dump_system': no linear system is assembled in interpolate mode");
    }
    let spec = config.example.problem(config.betas)?;
    let ns = config.subdivisions();
    let emit_n = config.emit_subdivision();
    writeln!(
        log,
        "example {} | betas {:?} | {} | scheme {} | epsilon {} | sigma0 {}",
        config.example,
        config.betas,
        mode_name(config.mode),
        config.scheme,
        config.epsilon,
        config.sigma0
    )?;
    let mut reports = Vec::with_capacity(ns.len());
    let mut emitted = false;
    for &n in &ns {
        let ev = evaluate(config, &spec, n)?;
        let report = compute_errors(&ev.mesh, &ev.bases, &spec, &ev.function, config.orders.error)?;
        match &ev.solve {
            Some((system, stats)) => writeln!(
                log,
                "N={n:<4} unknowns {:>6}  solver {} ({} iterations, residual {:.1e})",
                system.rhs.len(),
                stats.method,
                stats.iterations,
                stats.relative_residual
            )?,
            None => writeln!(log, "N={n:<4} interpolated")?,
        }
        reports.push(report);
        if n == emit_n {
            emit_artifacts(config, &spec, &ev, log)?;
            emitted = true;
        }
    }
    attach_rates(&mut reports);
    write!(log, "{}", format_table(&reports))?;
    if let Some(path) = &config.out_errors {
        write_text(path, &errors_csv(&reports))?;
        writeln!(log, "errors written to {}", path.display())?;
    }
    if !emitted && wants_artifacts(config) {
        let ev = evaluate(config, &spec, emit_n)?;
        emit_artifacts(config, &spec, &ev, log)?;
    }
    Ok(reports)
}

fn wants_artifacts(config: &RunConfig) -> bool {
    config.out_classification.is_some() || config.out_surface.is_some() || config.dump_system.is_some()
}

/// Classification map, surface samples and system dump on one mesh.
pub fn emit_artifacts(config: &RunConfig, spec: &ProblemSpec, ev: &Evaluation, log: &mut dyn Write) -> Result<()> {
    let n = ev.mesh.n;
    if let Some(path) = &config.out_classification {
        write_text(path, &classification_csv(&ev.mesh.classification_map()))?;
        let [r, one, two, three] = ev.mesh.class_counts();
        writeln!(
            log,
            "classification N={n} (regular {r}, one {one}, two {two}, junction {three}) written to {}",
            path.display()
        )?;
    }
    if let Some(path) = &config.out_surface {
        let points = emit_surface(spec, ev, config.field)?;
        write_text(path, &surface_csv(&points))?;
        let (all, band) = surface_maxima(&points);
        writeln!(
            log,
            "{} surface N={n}: max |value| {all:.4e}, in interface elements {band:.4e}; written to {}",
            field_name(config.field),
            path.display()
        )?;
    }
    if let Some(path) = &config.dump_system {
        let Some((system, _)) = &ev.solve else {
            bail!("key 'dump_system': no linear system available");
        };
        dump_system(system, path)?;
        writeln!(log, "system N={n} written to {} and {}", path.display(), rhs_path(path).display())?;
    }
    Ok(())
}

/// Surface samples of the solution or its error on the `(4n + 1)²` grid.
pub fn emit_surface(
    spec: &ProblemSpec,
    ev: &Evaluation,
    field: ppifem_core::SurfaceField,
) -> Result<Vec<analysis::SurfacePoint>> {
    Ok(sample_surface(&ev.mesh, &ev.bases, spec, &ev.function, field)?)
}

/// `path.rhs`, holding one rhs entry per line.
pub fn rhs_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".rhs");
    s.into()
}

fn dump_system(system: &SparseSystem, path: &Path) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    system.matrix.write_matrix_market(&mut w)?;
    w.flush()?;
    let mut rhs = String::with_capacity(system.rhs.len() * 25);
    for v in &system.rhs {
        rhs.push_str(&format!("{v:.17e}\n"));
    }
    write_text(&rhs_path(path), &rhs)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

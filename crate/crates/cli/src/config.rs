//! Run configuration: a flat `key = value` file format mirroring the flags.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use ppifem_core::{BuiltinExample, QuadOrders, Scheme, SchemeParams, SurfaceField, DEFAULT_SIGMA0};

/// Largest subdivision run without `full`.
pub const DEFAULT_MAX_N: usize = 256;

/// What the study measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Solve,
    /// Errors of the IFE interpolant of the exact solution; no linear solve.
    Interpolate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub example: BuiltinExample,
    pub betas: [f64; 3],
    pub scheme: Scheme,
    pub mode: Mode,
    pub epsilon: i8,
    pub sigma0: f64,
    pub n_start: usize,
    pub refinements: usize,
    pub orders: QuadOrders,
    /// Extend the study to N = 512.
    pub full: bool,
    pub out_errors: Option<PathBuf>,
    pub out_classification: Option<PathBuf>,
    pub out_surface: Option<PathBuf>,
    pub field: SurfaceField,
    /// Subdivision for classification, surface and system dumps.
    pub emit_n: Option<usize>,
    /// Matrix Market file for the reduced system; the rhs goes next to it.
    pub dump_system: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            example: BuiltinExample::StraightLines,
            betas: [10.0, 1.0, 100.0],
            scheme: Scheme::Ppifem,
            mode: Mode::Solve,
            epsilon: -1,
            sigma0: DEFAULT_SIGMA0,
            n_start: 16,
            refinements: 5,
            orders: QuadOrders::default(),
            full: false,
            out_errors: None,
            out_classification: None,
            out_surface: None,
            field: SurfaceField::Error,
            emit_n: None,
            dump_system: None,
        }
    }
}

/// Partial settings from a config file or the command line; `None` means unset.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Settings {
    pub example: Option<BuiltinExample>,
    pub betas: Option<[f64; 3]>,
    pub scheme: Option<Scheme>,
    pub mode: Option<Mode>,
    pub epsilon: Option<i8>,
    pub sigma0: Option<f64>,
    pub n_start: Option<usize>,
    pub refinements: Option<usize>,
    pub orders: Option<QuadOrders>,
    pub full: Option<bool>,
    pub out_errors: Option<PathBuf>,
    pub out_classification: Option<PathBuf>,
    pub out_surface: Option<PathBuf>,
    pub field: Option<SurfaceField>,
    pub emit_n: Option<usize>,
    pub dump_system: Option<PathBuf>,
}

macro_rules! overlay_fields {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f; } )*
    };
}

impl Settings {
    /// Fields set in `other` replace those in `self`.
    pub fn overlay(mut self, other: Settings) -> Settings {
        overlay_fields!(self, other; example, betas, scheme, mode, epsilon, sigma0, n_start, refinements,
            orders, full, out_errors, out_classification, out_surface, field, emit_n, dump_system);
        self
    }

    /// Applies one `key = value` pair.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let path = || Some(PathBuf::from(v));
        match key.trim() {
            "example" => self.example = Some(parse_example(v)?),
            "betas" => self.betas = Some(parse_betas(v)?),
            "scheme" => self.scheme = Some(parse_scheme(v)?),
            "mode" => self.mode = Some(parse_mode(v)?),
            "epsilon" => self.epsilon = Some(parse_epsilon(v)?),
            "sigma0" => self.sigma0 = Some(parse_positive(v)?),
            "n_start" => self.n_start = Some(parse_count(v)?),
            "refinements" => self.refinements = Some(parse_count(v)?),
            "quad_order" => self.orders = Some(parse_orders(v)?),
            "full" => self.full = Some(v.parse().map_err(|_| anyhow!("expected true or false, got '{v}'"))?),
            "out_errors" => self.out_errors = path(),
            "out_classification" => self.out_classification = path(),
            "out_surface" => self.out_surface = path(),
            "field" => self.field = Some(parse_field(v)?),
            "emit_n" => self.emit_n = Some(parse_count(v)?),
            "dump_system" => self.dump_system = path(),
            other => bail!("unknown key '{other}'"),
        }
        Ok(())
    }

    /// Parses config text; errors name the line and key.
    pub fn parse(text: &str) -> Result<Settings> {
        let mut s = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected 'key = value', got '{line}'", i + 1))?;
            s.set(key, value)
                .with_context(|| format!("line {}: invalid value for key '{}'", i + 1, key.trim()))?;
        }
        Ok(s)
    }

    pub fn from_file(path: &Path) -> Result<Settings> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Settings::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    /// Fills unset fields with defaults and validates the result.
    pub fn resolve(self) -> Result<RunConfig> {
        let d = RunConfig::default();
        let config = RunConfig {
            example: self.example.unwrap_or(d.example),
            betas: self.betas.unwrap_or(d.betas),
            scheme: self.scheme.unwrap_or(d.scheme),
            mode: self.mode.unwrap_or(d.mode),
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            sigma0: self.sigma0.unwrap_or(d.sigma0),
            n_start: self.n_start.unwrap_or(d.n_start),
            refinements: self.refinements.unwrap_or(d.refinements),
            orders: self.orders.unwrap_or(d.orders),
            full: self.full.unwrap_or(d.full),
            out_errors: self.out_errors,
            out_classification: self.out_classification,
            out_surface: self.out_surface,
            field: self.field.unwrap_or(d.field),
            emit_n: self.emit_n,
            dump_system: self.dump_system,
        };
        config.validate()?;
        Ok(config)
    }
}

impl RunConfig {
    pub fn params(&self) -> SchemeParams {
        SchemeParams {
            scheme: self.scheme,
            epsilon: self.epsilon,
            sigma0: self.sigma0,
            orders: self.orders,
        }
    }

    /// Mesh subdivisions of the study.
    pub fn subdivisions(&self) -> Vec<usize> {
        let mut ns: Vec<usize> = (0..self.refinements).map(|k| self.n_start << k).collect();
        if self.full {
            while ns.last().is_some_and(|&n| n < 2 * DEFAULT_MAX_N) {
                let next = ns.last().unwrap() * 2;
                ns.push(next);
            }
        }
        ns
    }

    /// Subdivision used for the classification map, surface and system dump.
    pub fn emit_subdivision(&self) -> usize {
        self.emit_n.unwrap_or(self.n_start)
    }

    pub fn validate(&self) -> Result<()> {
        if self.betas.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
            bail!("key 'betas': coefficients must be positive, got {:?}", self.betas);
        }
        self.params().validate().context("key 'epsilon', 'sigma0' or 'quad_order'")?;
        if self.n_start < 2 {
            bail!("key 'n_start': need at least 2 subdivisions, got {}", self.n_start);
        }
        if self.refinements == 0 {
            bail!("key 'refinements': need at least one mesh");
        }
        if self.refinements > 12 {
            bail!("key 'refinements': {} doublings is too many", self.refinements);
        }
        let last = *self.subdivisions().last().unwrap();
        let cap = if self.full { 2 * DEFAULT_MAX_N } else { DEFAULT_MAX_N };
        if last > cap {
            bail!("key 'refinements': finest mesh N={last} exceeds {cap}; pass --full for N=512");
        }
        if let Some(n) = self.emit_n {
            if n < 2 {
                bail!("key 'emit_n': need at least 2 subdivisions, got {n}");
            }
        }
        Ok(())
    }

    /// Config text that parses back to this configuration.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let o = &self.orders;
        let _ = writeln!(s, "example = {}", self.example);
        let _ = writeln!(s, "betas = {:?},{:?},{:?}", self.betas[0], self.betas[1], self.betas[2]);
        let _ = writeln!(s, "scheme = {}", self.scheme);
        let _ = writeln!(s, "mode = {}", mode_name(self.mode));
        let _ = writeln!(s, "epsilon = {}", self.epsilon);
        let _ = writeln!(s, "sigma0 = {:?}", self.sigma0);
        let _ = writeln!(s, "n_start = {}", self.n_start);
        let _ = writeln!(s, "refinements = {}", self.refinements);
        let _ = writeln!(s, "quad_order = {},{},{}", o.volume, o.segment, o.error);
        let _ = writeln!(s, "full = {}", self.full);
        let _ = writeln!(s, "field = {}", field_name(self.field));
        let paths = [
            ("out_errors", &self.out_errors),
            ("out_classification", &self.out_classification),
            ("out_surface", &self.out_surface),
            ("dump_system", &self.dump_system),
        ];
        for (key, p) in paths {
            if let Some(p) = p {
                let _ = writeln!(s, "{key} = {}", p.display());
            }
        }
        if let Some(n) = self.emit_n {
            let _ = writeln!(s, "emit_n = {n}");
        }
        s
    }
}

pub fn parse_example(v: &str) -> Result<BuiltinExample> {
    v.parse::<BuiltinExample>().map_err(|e| anyhow!("{e}"))
}

pub fn parse_betas(v: &str) -> Result<[f64; 3]> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        bail!("expected three comma-separated coefficients, got '{v}'");
    }
    let mut out = [0.0; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = parse_positive(p)?;
    }
    Ok(out)
}

pub fn parse_scheme(v: &str) -> Result<Scheme> {
    match v.to_ascii_lowercase().as_str() {
        "ppifem" => Ok(Scheme::Ppifem),
        "galerkin" => Ok(Scheme::Galerkin),
        _ => bail!("expected 'ppifem' or 'galerkin', got '{v}'"),
    }
}

pub fn parse_mode(v: &str) -> Result<Mode> {
    match v.to_ascii_lowercase().as_str() {
        "solve" => Ok(Mode::Solve),
        "interpolate" => Ok(Mode::Interpolate),
        _ => bail!("expected 'solve' or 'interpolate', got '{v}'"),
    }
}

pub fn parse_field(v: &str) -> Result<SurfaceField> {
    match v.to_ascii_lowercase().as_str() {
        "solution" => Ok(SurfaceField::Solution),
        "error" => Ok(SurfaceField::Error),
        _ => bail!("expected 'solution' or 'error', got '{v}'"),
    }
}

pub fn parse_epsilon(v: &str) -> Result<i8> {
    match v.parse::<i8>() {
        Ok(e @ -1..=1) => Ok(e),
        _ => bail!("expected -1, 0 or 1, got '{v}'"),
    }
}

pub fn parse_positive(v: &str) -> Result<f64> {
    match v.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => bail!("expected a positive number, got '{v}'"),
    }
}

pub fn parse_count(v: &str) -> Result<usize> {
    v.parse::<usize>().map_err(|_| anyhow!("expected a non-negative integer, got '{v}'"))
}

/// Either one order for everything or `volume,segment,error`.
pub fn parse_orders(v: &str) -> Result<QuadOrders> {
    let parts = v.split(',').map(|p| parse_count(p.trim())).collect::<Result<Vec<_>>>()?;
    let orders = match parts[..] {
        [k] => QuadOrders::uniform(k),
        [volume, segment, error] => QuadOrders { volume, segment, error },
        _ => bail!("expected one order or 'volume,segment,error', got '{v}'"),
    };
    orders.validate().map_err(|e| anyhow!("{e}"))?;
    Ok(orders)
}

pub fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Solve => "solve",
        Mode::Interpolate => "interpolate",
    }
}

pub fn field_name(f: SurfaceField) -> &'static str {
    match f {
        SurfaceField::Solution => "solution",
        SurfaceField::Error => "error",
    }
}

//! Run configuration: line-oriented `section.key = value` text.
//!
//! ```text
//! # comment
//! grid.step_nm = 0.5
//! well.w = 0.2          # trailing comments are allowed
//! cnot.separations_nm = 50, 60, 70
//! ```
//!
//! Every key has a default; unknown keys, unparsable values and values
//! outside their validity range are reported with the line they came from.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;

use qdot_core::constants::{ELECTRON_MASS, MEV};
use qdot_core::potentials::OmegaConvention;
use qdot_core::{
    make_grid, CnotGeometry, DoubleWellParams, Eq57Variant, Grid, Materials, QuadratureSpec, SolverOptions,
};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: Option<usize>, message: impl Into<String>) -> Self {
        Self { line, message: message.into() }
    }
}

/// Range recommended for the relative barrier width.
pub const W_RECOMMENDED: (f64, f64) = (0.08, 0.34);
/// Range accepted for the relative barrier width.
pub const W_ACCEPTED: (f64, f64) = (0.05, 0.5);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    W,
    BigR,
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::W => "w",
            Self::BigR => "R",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    /// Barrier widths of the curves of an R-sweep; empty means `well.w`.
    pub w_values: Vec<f64>,
}

impl SweepSpec {
    pub fn values(&self) -> Vec<f64> {
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count).map(|k| if k + 1 == self.count { self.stop } else { self.start + step * k as f64 }).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Default,
    Explicit { line: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub half_width_x_nm: f64,
    pub half_width_y_nm: f64,
    pub step_nm: f64,
    pub well: DoubleWellParams,
    pub convention: OmegaConvention,
    pub materials: Materials,
    /// Dot-centre separations for CNOT timings, nm; empty disables them.
    pub separations_nm: Vec<f64>,
    /// Pulse barrier search interval as fractions of `well.v_b`.
    pub pulse_interval: (f64, f64),
    pub sweep: SweepSpec,
    pub solver: SolverOptions,
    /// Solver tolerance for the conditional spectra of CNOT tuning.
    pub cnot_tol: f64,
    pub quadrature: QuadratureSpec,
    pub out_dir: PathBuf,
    pub emit_svg: bool,
    pub eq57: Eq57Variant,
    pub provenance: BTreeMap<&'static str, Provenance>,
    pub warnings: Vec<String>,
}

impl RunConfig {
    pub fn grid(&self) -> Grid {
        make_grid(self.half_width_x_nm, self.half_width_y_nm, self.step_nm).expect("validated grid")
    }

    pub fn well_at(&self, w: f64) -> DoubleWellParams {
        DoubleWellParams { w, ..self.well }
    }

    pub fn geometry(&self, big_r_nm: f64, r_nm: f64) -> qdot_core::Result<CnotGeometry> {
        CnotGeometry::new(big_r_nm, r_nm, self.materials.kappa)
    }

    /// Barrier widths of the curves of an R-sweep.
    pub fn curve_widths(&self) -> Vec<f64> {
        if self.sweep.w_values.is_empty() {
            vec![self.well.w]
        } else {
            self.sweep.w_values.clone()
        }
    }

    pub fn cnot_solver(&self) -> SolverOptions {
        SolverOptions { tol: self.cnot_tol, ..self.solver }
    }

    /// Every setting in `key = value` form, one per line, in key order.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (key, value) in self.entries() {
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }

    /// SHA-256 of [`RunConfig::canonical`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(", ");
        let mut e = vec![
            ("grid.half_width_x_nm", format!("{:e}", self.half_width_x_nm)),
            ("grid.half_width_y_nm", format!("{:e}", self.half_width_y_nm)),
            ("grid.step_nm", format!("{:e}", self.step_nm)),
            ("well.mass_ratio", format!("{:e}", self.well.m_eff / ELECTRON_MASS)),
            ("well.l_nm", format!("{:e}", self.well.l * 1e9)),
            ("well.v_b", format!("{:e}", self.well.v_b)),
            ("well.w", format!("{:e}", self.well.w)),
            ("well.omega_convention", self.convention.to_string()),
            ("material.s", format!("{:e}", self.materials.s)),
            ("material.rho", format!("{:e}", self.materials.rho)),
            ("material.e14", format!("{:e}", self.materials.e14)),
            ("material.kappa0", format!("{:e}", self.materials.kappa0)),
            ("material.xi_ev", format!("{:e}", self.materials.xi / (1e3 * MEV))),
            ("material.kappa", format!("{:e}", self.materials.kappa)),
            ("material.c", format!("{:e}", self.materials.c)),
            ("cnot.separations_nm", list(&self.separations_nm)),
            ("cnot.pulse_lo", format!("{:e}", self.pulse_interval.0)),
            ("cnot.pulse_hi", format!("{:e}", self.pulse_interval.1)),
            ("cnot.solver_tol", format!("{:e}", self.cnot_tol)),
            ("sweep.parameter", self.sweep.parameter.to_string()),
            ("sweep.start", format!("{:e}", self.sweep.start)),
            ("sweep.stop", format!("{:e}", self.sweep.stop)),
            ("sweep.count", self.sweep.count.to_string()),
            ("sweep.w_values", list(&self.sweep.w_values)),
            ("solver.tol", format!("{:e}", self.solver.tol)),
            ("solver.max_iter", self.solver.max_iter.to_string()),
            ("solver.ritz_interval", self.solver.ritz_interval.to_string()),
            ("quadrature.theta_nodes", self.quadrature.theta_nodes.to_string()),
            ("quadrature.phi_nodes", self.quadrature.phi_nodes.to_string()),
            ("output.svg", self.emit_svg.to_string()),
            ("output.paper_literal_eq57", (self.eq57 == Eq57Variant::PaperLiteral).to_string()),
        ];
        e.sort_by_key(|(k, _)| *k);
        e
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        parse_config("").expect("defaults are valid")
    }
}

const KEYS: &[&str] = &[
    "grid.half_width_x_nm",
    "grid.half_width_y_nm",
    "grid.step_nm",
    "well.mass_ratio",
    "well.l_nm",
    "well.v_b",
    "well.w",
    "well.omega_convention",
    "material.s",
    "material.rho",
    "material.e14",
    "material.kappa0",
    "material.xi_ev",
    "material.kappa",
    "material.c",
    "cnot.separations_nm",
    "cnot.pulse_lo",
    "cnot.pulse_hi",
    "cnot.solver_tol",
    "sweep.parameter",
    "sweep.start",
    "sweep.stop",
    "sweep.count",
    "sweep.w_values",
    "solver.tol",
    "solver.max_iter",
    "solver.ritz_interval",
    "quadrature.theta_nodes",
    "quadrature.phi_nodes",
    "output.dir",
    "output.svg",
    "output.paper_literal_eq57",
];

struct Entries {
    values: BTreeMap<&'static str, (String, usize)>,
    provenance: BTreeMap<&'static str, Provenance>,
}

impl Entries {
    fn raw(&mut self, key: &'static str) -> Option<(&str, usize)> {
        match self.values.get(key) {
            Some((v, line)) => {
                self.provenance.insert(key, Provenance::Explicit { line: *line });
                Some((v.as_str(), *line))
            }
            None => {
                self.provenance.insert(key, Provenance::Default);
                None
            }
        }
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &'static str, default: T) -> Result<T, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some((v, line)) => v.parse().map_err(|_| ConfigError::at(Some(line), format!("{key}: cannot parse {v:?}"))),
        }
    }

    fn list(&mut self, key: &'static str, default: Vec<f64>) -> Result<Vec<f64>, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some((v, line)) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().map_err(|_| ConfigError::at(Some(line), format!("{key}: cannot parse {s:?}"))))
                .collect(),
        }
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.values.get(key).map(|(_, l)| *l)
    }
}

/// Parses and validates configuration text; missing keys take defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut values = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::at(Some(line), format!("expected `key = value`, got {content:?}")))?;
        let key = key.trim();
        let known = KEYS
            .iter()
            .find(|k| **k == key)
            .ok_or_else(|| ConfigError::at(Some(line), format!("unknown key {key:?}")))?;
        if values.insert(*known, (value.trim().to_string(), line)).is_some() {
            return Err(ConfigError::at(Some(line), format!("duplicate key {key:?}")));
        }
    }
    let mut e = Entries { values, provenance: BTreeMap::new() };

    let half_width_x_nm = e.parse("grid.half_width_x_nm", 30.0)?;
    let half_width_y_nm = e.parse("grid.half_width_y_nm", 20.0)?;
    let step_nm = e.parse("grid.step_nm", 0.5)?;
    if let Err(err) = make_grid(half_width_x_nm, half_width_y_nm, step_nm) {
        let line = e.line("grid.step_nm").or(e.line("grid.half_width_x_nm")).or(e.line("grid.half_width_y_nm"));
        return Err(ConfigError::at(line, format!("grid: {err}")));
    }

    let mass_ratio: f64 = e.parse("well.mass_ratio", DoubleWellParams::DEFAULT_MASS_RATIO)?;
    let l_nm: f64 = e.parse("well.l_nm", DoubleWellParams::DEFAULT_L_NM)?;
    let v_b: f64 = e.parse("well.v_b", DoubleWellParams::DEFAULT_V_B)?;
    let w: f64 = e.parse("well.w", 0.2)?;
    let convention: OmegaConvention = e.parse("well.omega_convention", OmegaConvention::default())?;
    let mut warnings = Vec::new();
    check_w(&e, "well.w", w, &mut warnings)?;
    let positive = |e: &Entries, key: &'static str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(ConfigError::at(e.line(key), format!("{key} must be positive, got {v}")))
        }
    };
    positive(&e, "well.mass_ratio", mass_ratio)?;
    positive(&e, "well.l_nm", l_nm)?;
    positive(&e, "well.v_b", v_b)?;
    let well = DoubleWellParams::new(mass_ratio * ELECTRON_MASS, l_nm, v_b, w, convention)
        .map_err(|err| ConfigError::at(e.line("well.w"), err.to_string()))?;

    let gaas = Materials::gaas();
    let materials = Materials {
        m_eff: well.m_eff,
        s: e.parse("material.s", gaas.s)?,
        rho: e.parse("material.rho", gaas.rho)?,
        e14: e.parse("material.e14", gaas.e14)?,
        kappa0: e.parse("material.kappa0", gaas.kappa0)?,
        xi: e.parse::<f64>("material.xi_ev", gaas.xi / (1e3 * MEV))? * 1e3 * MEV,
        kappa: e.parse("material.kappa", CnotGeometry::GAAS_KAPPA)?,
        c: e.parse("material.c", gaas.c)?,
    };
    for key in ["material.s", "material.rho", "material.kappa0", "material.kappa", "material.c"] {
        let v = match key {
            "material.s" => materials.s,
            "material.rho" => materials.rho,
            "material.kappa0" => materials.kappa0,
            "material.kappa" => materials.kappa,
            _ => materials.c,
        };
        positive(&e, key, v)?;
    }
    for (key, v) in [("material.e14", materials.e14), ("material.xi_ev", materials.xi)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(ConfigError::at(e.line(key), format!("{key} must be non-negative, got {v}")));
        }
    }

    let separations_nm = e.list("cnot.separations_nm", vec![60.0])?;
    for &big_r in &separations_nm {
        positive(&e, "cnot.separations_nm", big_r)?;
    }
    let pulse_interval: (f64, f64) = (e.parse("cnot.pulse_lo", 0.9)?, e.parse("cnot.pulse_hi", 1.1)?);
    if !(pulse_interval.0 > 0.0 && pulse_interval.0 < pulse_interval.1 && pulse_interval.1.is_finite()) {
        return Err(ConfigError::at(
            e.line("cnot.pulse_hi").or(e.line("cnot.pulse_lo")),
            format!("cnot.pulse_lo/pulse_hi must satisfy 0 < lo < hi, got {pulse_interval:?}"),
        ));
    }
    let cnot_tol: f64 = e.parse("cnot.solver_tol", 1e-10)?;
    positive(&e, "cnot.solver_tol", cnot_tol)?;

    let parameter = match e.raw("sweep.parameter") {
        None | Some(("w", _)) => SweepParameter::W,
        Some(("R", _)) => SweepParameter::BigR,
        Some((other, line)) => {
            return Err(ConfigError::at(Some(line), format!("sweep.parameter must be `w` or `R`, got {other:?}")))
        }
    };
    let (start_default, stop_default) = match parameter {
        SweepParameter::W => W_RECOMMENDED,
        SweepParameter::BigR => (50.0, 80.0),
    };
    let sweep = SweepSpec {
        parameter,
        start: e.parse("sweep.start", start_default)?,
        stop: e.parse("sweep.stop", stop_default)?,
        count: e.parse("sweep.count", 6)?,
        w_values: e.list("sweep.w_values", Vec::new())?,
    };
    if sweep.count < 2 {
        return Err(ConfigError::at(
            e.line("sweep.count"),
            format!("sweep.count must be at least 2, got {}", sweep.count),
        ));
    }
    if !(sweep.start.is_finite() && sweep.stop.is_finite()) {
        return Err(ConfigError::at(e.line("sweep.start"), "sweep bounds must be finite"));
    }
    match parameter {
        SweepParameter::W => {
            check_w(&e, "sweep.start", sweep.start, &mut warnings)?;
            check_w(&e, "sweep.stop", sweep.stop, &mut warnings)?;
        }
        SweepParameter::BigR => {
            positive(&e, "sweep.start", sweep.start)?;
            positive(&e, "sweep.stop", sweep.stop)?;
            for &wv in &sweep.w_values {
                check_w(&e, "sweep.w_values", wv, &mut warnings)?;
            }
        }
    }

    let defaults = SolverOptions::default();
    let solver = SolverOptions {
        k: defaults.k,
        tol: e.parse("solver.tol", defaults.tol)?,
        max_iter: e.parse("solver.max_iter", defaults.max_iter)?,
        ritz_interval: e.parse("solver.ritz_interval", defaults.ritz_interval)?,
    };
    positive(&e, "solver.tol", solver.tol)?;
    if solver.max_iter == 0 || solver.ritz_interval == 0 {
        return Err(ConfigError::at(
            e.line("solver.max_iter").or(e.line("solver.ritz_interval")),
            "solver.max_iter and solver.ritz_interval must be positive",
        ));
    }
    let q = QuadratureSpec::default();
    let quadrature = QuadratureSpec {
        theta_nodes: e.parse("quadrature.theta_nodes", q.theta_nodes)?,
        phi_nodes: e.parse("quadrature.phi_nodes", q.phi_nodes)?,
    };
    quadrature.validate().map_err(|err| {
        ConfigError::at(e.line("quadrature.theta_nodes").or(e.line("quadrature.phi_nodes")), err.to_string())
    })?;

    let out_dir = PathBuf::from(e.parse::<String>("output.dir", "out".into())?);
    let emit_svg = e.parse("output.svg", true)?;
    let eq57 =
        if e.parse("output.paper_literal_eq57", false)? { Eq57Variant::PaperLiteral } else { Eq57Variant::Derived };

    Ok(RunConfig {
        half_width_x_nm,
        half_width_y_nm,
        step_nm,
        well,
        convention,
        materials,
        separations_nm,
        pulse_interval,
        sweep,
        solver,
        cnot_tol,
        quadrature,
        out_dir,
        emit_svg,
        eq57,
        provenance: e.provenance,
        warnings,
    })
}

fn check_w(e: &Entries, key: &'static str, w: f64, warnings: &mut Vec<String>) -> Result<(), ConfigError> {
    if !(w >= W_ACCEPTED.0 && w <= W_ACCEPTED.1) {
        return Err(ConfigError::at(
            e.line(key),
            format!("{key} = {w} is outside the accepted range [{}, {}]", W_ACCEPTED.0, W_ACCEPTED.1),
        ));
    }
    if w < W_RECOMMENDED.0 || w > W_RECOMMENDED.1 {
        warnings
            .push(format!("{key} = {w} is outside the recommended range [{}, {}]", W_RECOMMENDED.0, W_RECOMMENDED.1));
    }
    Ok(())
}

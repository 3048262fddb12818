//! Model confinement potentials and the Coulomb field of the control qubit.

use rayon::prelude::*;

use crate::constants::{coulomb_constant, ELECTRON_MASS, HBAR, NM};
use crate::error::{Error, Result};
use crate::fields::{FieldKind, Grid, ScalarField, NORM_TOLERANCE};

/// How the harmonic frequency ω is tied to the characteristic size `l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OmegaConvention {
    /// `m ω² l² / 2 = V_B`: the harmonic confinement reaches the barrier
    /// height at distance `l`.
    #[default]
    BarrierMatched,
    /// `ω = ħ / (m l²)`: `l` is the oscillator length.
    OscillatorLength,
}

impl OmegaConvention {
    pub fn omega(self, m_eff: f64, l: f64, v_b: f64) -> f64 {
        match self {
            Self::BarrierMatched => (2.0 * v_b / m_eff).sqrt() / l,
            Self::OscillatorLength => HBAR / (m_eff * l * l),
        }
    }
}

impl std::str::FromStr for OmegaConvention {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "barrier" | "barrier-matched" => Ok(Self::BarrierMatched),
            "oscillator" | "oscillator-length" => Ok(Self::OscillatorLength),
            other => Err(format!("unknown omega convention {other:?} (expected barrier|oscillator)")),
        }
    }
}

impl std::fmt::Display for OmegaConvention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::BarrierMatched => "barrier",
            Self::OscillatorLength => "oscillator",
        })
    }
}

/// Parameters of `V = mω²(x²+y²)/2 + V_B·exp[−x²/(wl)²]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleWellParams {
    /// Effective mass, kg.
    pub m_eff: f64,
    /// Characteristic size, m.
    pub l: f64,
    /// Barrier height, J.
    pub v_b: f64,
    /// Relative barrier width.
    pub w: f64,
    /// Harmonic frequency, rad/s.
    pub omega: f64,
}

impl DoubleWellParams {
    pub const DEFAULT_MASS_RATIO: f64 = 0.065;
    pub const DEFAULT_L_NM: f64 = 20.0;
    pub const DEFAULT_V_B: f64 = 1.5e-19;

    pub fn new(m_eff: f64, l_nm: f64, v_b: f64, w: f64, convention: OmegaConvention) -> Result<Self> {
        let l = l_nm * NM;
        let p = Self { m_eff, l, v_b, w, omega: convention.omega(m_eff, l, v_b) };
        p.validate()?;
        Ok(p)
    }

    /// GaAs dot with the default size and barrier and the given width.
    pub fn gaas(w: f64) -> Result<Self> {
        Self::new(
            Self::DEFAULT_MASS_RATIO * ELECTRON_MASS,
            Self::DEFAULT_L_NM,
            Self::DEFAULT_V_B,
            w,
            OmegaConvention::default(),
        )
    }

    /// Same dot with a different barrier height; ω is kept fixed.
    pub fn with_barrier(&self, v_b: f64) -> Self {
        Self { v_b, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("m_eff", self.m_eff), ("l", self.l), ("omega", self.omega), ("w", self.w)];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("double-well {name} must be positive, got {v}")));
            }
        }
        if !(self.v_b >= 0.0) || !self.v_b.is_finite() {
            return Err(Error::Config(format!("barrier height must be non-negative, got {}", self.v_b)));
        }
        if self.w >= 1.0 {
            return Err(Error::Config(format!("relative barrier width must lie in (0, 1), got {}", self.w)));
        }
        Ok(())
    }

    /// `ħω`, J.
    pub fn quantum(&self) -> f64 {
        HBAR * self.omega
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        let wl = self.w * self.l;
        0.5 * self.m_eff * self.omega * self.omega * (x * x + y * y) + self.v_b * (-(x * x) / (wl * wl)).exp()
    }

    /// Position `x_min ≥ 0` of the potential minimum on `y = 0`, metres.
    pub fn minimum_x(&self) -> f64 {
        let wl = self.w * self.l;
        let k = self.m_eff * self.omega * self.omega;
        let ratio = k * wl * wl / (2.0 * self.v_b);
        if self.v_b <= 0.0 || ratio >= 1.0 {
            0.0
        } else {
            wl * (-ratio.ln()).sqrt()
        }
    }
}

pub fn double_well_potential(p: &DoubleWellParams, grid: Grid) -> ScalarField {
    ScalarField::from_fn(grid, FieldKind::Potential, |x, y| p.value(x, y))
}

/// Quartic double well `V = (mω²/2)·[(x²−a²)²/(4a²) + y²]` with minima at `±a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticParams {
    pub m: f64,
    pub omega: f64,
    /// Minimum position, m.
    pub a: f64,
}

impl QuarticParams {
    pub fn new(m: f64, omega: f64, a_nm: f64) -> Result<Self> {
        if !(m > 0.0 && omega > 0.0 && a_nm > 0.0) {
            return Err(Error::Config(format!("quartic parameters must be positive: m={m}, omega={omega}, a={a_nm}")));
        }
        Ok(Self { m, omega, a: a_nm * NM })
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        let a2 = self.a * self.a;
        let dx = x * x - a2;
        0.5 * self.m * self.omega * self.omega * (dx * dx / (4.0 * a2) + y * y)
    }
}

pub fn quartic_potential(p: &QuarticParams, grid: Grid) -> ScalarField {
    ScalarField::from_fn(grid, FieldKind::Potential, |x, y| p.value(x, y))
}

/// Placement of the control qubit relative to the target.
///
/// The control dot is rotated by 90° in the plane: its long axis `u` runs
/// along the target's `y` axis and points away from the target, so a control
/// node `(u, v)` sits at target coordinates `(−v, −R − u)`. The control's
/// `|0⟩` maximum (`u = +r/2`) is then at distance `R + r/2` from the target
/// centre line and `|1⟩` at `R − r/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnotGeometry {
    /// Separation between qubit centres, m.
    pub big_r: f64,
    /// Separation between the control's density maxima, m.
    pub r: f64,
    /// Static dielectric constant.
    pub kappa: f64,
}

impl CnotGeometry {
    pub const GAAS_KAPPA: f64 = 12.8;

    pub fn new(big_r_nm: f64, r_nm: f64, kappa: f64) -> Result<Self> {
        let g = Self { big_r: big_r_nm * NM, r: r_nm * NM, kappa };
        if !(kappa > 0.0) || !(r_nm > 0.0) || !(big_r_nm > r_nm / 2.0) {
            return Err(Error::Config(format!(
                "CNOT geometry requires R > r/2 > 0 and kappa > 0 (R={big_r_nm} nm, r={r_nm} nm, kappa={kappa})"
            )));
        }
        Ok(g)
    }
}

/// Which logical state the control qubit is in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlState {
    Zero,
    One,
}

impl ControlState {
    /// The `s = ±1` of the point-charge estimate.
    pub fn sign(self) -> f64 {
        match self {
            Self::Zero => 1.0,
            Self::One => -1.0,
        }
    }
}

/// Point-charge estimate of the control's Coulomb energy on the target's
/// symmetry axis: `e²/(4πε₀κ(y + R + s·r/2))`, J. `y` in nm.
pub fn coulomb_point_estimate(y_nm: f64, geom: &CnotGeometry, state: ControlState) -> Result<f64> {
    let d = y_nm * NM + geom.big_r + state.sign() * geom.r / 2.0;
    if !(d > 0.0) {
        return Err(Error::NonPositiveDistance { distance_nm: d / NM });
    }
    Ok(coulomb_constant() / (geom.kappa * d))
}

/// Largest control charge (in units of e) allowed to coincide with one
/// target node before the dots are considered overlapping.
pub const OVERLAP_CHARGE_LIMIT: f64 = 1e-3;

/// Control-charge weights below this fraction of an electron are dropped
/// from the Coulomb sum.
const NEGLIGIBLE_CHARGE: f64 = 1e-16;

/// Potential energy on the target grid from the control electron's charge
/// cloud, summed node by node with Coulomb's law.
///
/// Each control node carries charge `e·ρ·h²`. Pairs closer than half a step
/// are skipped; if the skipped charge at any target node exceeds
/// [`OVERLAP_CHARGE_LIMIT`] the dots overlap and an error is returned.
/// Every target value is an independent fixed-order sum, so the result does
/// not depend on thread scheduling.
pub fn coulomb_field_from_density(
    control_density: &ScalarField,
    geom: &CnotGeometry,
    target_grid: Grid,
) -> Result<ScalarField> {
    let cg = control_density.grid();
    let total = cg.cell_area() * control_density.values().iter().sum::<f64>();
    if (total - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::NotNormalized { norm: total });
    }
    // control charges mapped into target coordinates
    let sources: Vec<(f64, f64, f64)> = (0..cg.len())
        .filter_map(|k| {
            let q = control_density.values()[k] * cg.cell_area();
            (q.abs() > NEGLIGIBLE_CHARGE).then(|| {
                let (u, v) = (cg.x(k % cg.nx()), cg.y(k / cg.nx()));
                (-v, -geom.big_r - u, q)
            })
        })
        .collect();
    let min_dist = 0.5 * cg.step().min(target_grid.step());
    let prefactor = coulomb_constant() / geom.kappa;

    let rows: Vec<Result<Vec<f64>>> = (0..target_grid.ny())
        .into_par_iter()
        .map(|j| {
            let y = target_grid.y(j);
            (0..target_grid.nx())
                .map(|i| {
                    let x = target_grid.x(i);
                    let mut acc = 0.0;
                    let mut skipped = 0.0;
                    for &(sx, sy, q) in &sources {
                        let d = ((x - sx).powi(2) + (y - sy).powi(2)).sqrt();
                        if d < min_dist {
                            skipped += q;
                        } else {
                            acc += q / d;
                        }
                    }
                    if skipped > OVERLAP_CHARGE_LIMIT {
                        return Err(Error::DotOverlap { i, j, weight: skipped });
                    }
                    Ok(prefactor * acc)
                })
                .collect()
        })
        .collect();
    let mut values = Vec::with_capacity(target_grid.len());
    for row in rows {
        values.extend(row?);
    }
    ScalarField::from_values(target_grid, FieldKind::Potential, values)
}

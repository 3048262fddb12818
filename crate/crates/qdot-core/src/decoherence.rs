//! Spontaneous relaxation `|1⟩ → |0⟩` of the tunnel doublet at zero
//! temperature: photon emission and acoustic-phonon emission through the
//! deformation potential and the piezoelectric field.
//!
//! Phonon rates come from the golden rule with the delta function already
//! integrated out, so the emitted wavenumber is `q = ε₁₀/(ħs)` and only the
//! direction `(θ, φ)` is integrated: Gauss–Legendre in `θ ∈ [−π/2, π/2]`
//! (measured from the plane) times the trapezoid rule in `φ`. The in-plane
//! wavevector entering the form factor is `q cosθ (cosφ, sinφ)`.

use std::f64::consts::PI;
use std::fmt;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::constants::{ELECTRON_MASS, ELEMENTARY_CHARGE, EPSILON_0, HBAR, MEV, NM, SPEED_OF_LIGHT};
use crate::eigensolver::SpectrumResult;
use crate::error::{Error, Result};
use crate::fields::ScalarField;

/// Largest relative change allowed when the angular node counts double.
pub const QUADRATURE_TOLERANCE: f64 = 5e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Materials {
    pub m_eff: f64,
    /// Sound velocity, m/s.
    pub s: f64,
    /// Mass density, kg/m³.
    pub rho: f64,
    /// Piezoelectric modulus, C/m².
    pub e14: f64,
    /// Static dielectric constant in the piezoelectric coupling.
    pub kappa0: f64,
    /// Deformation potential, J.
    pub xi: f64,
    /// Dielectric constant for the Coulomb interaction.
    pub kappa: f64,
    /// Light speed, m/s.
    pub c: f64,
}

impl Materials {
    pub fn gaas() -> Self {
        Self {
            m_eff: 0.065 * ELECTRON_MASS,
            s: 5.2e3,
            rho: 5317.0,
            e14: 0.16,
            kappa0: 12.8,
            xi: 7e3 * MEV,
            kappa: 12.8,
            c: SPEED_OF_LIGHT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("m_eff", self.m_eff),
            ("s", self.s),
            ("rho", self.rho),
            ("kappa0", self.kappa0),
            ("kappa", self.kappa),
            ("c", self.c),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("material constant {name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("e14", self.e14), ("xi", self.xi)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("material constant {name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// Piezoelectric field constant `e₁₄/(ε₀κ₀)`, V/m.
    pub fn piezo_field(&self) -> f64 {
        self.e14 / (EPSILON_0 * self.kappa0)
    }
}

impl Default for Materials {
    fn default() -> Self {
        Self::gaas()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureSpec {
    pub theta_nodes: usize,
    pub phi_nodes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { theta_nodes: 64, phi_nodes: 128 }
    }
}

impl QuadratureSpec {
    pub fn doubled(self) -> Self {
        Self { theta_nodes: 2 * self.theta_nodes, phi_nodes: 2 * self.phi_nodes }
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta_nodes < 2 || self.phi_nodes < 4 {
            return Err(Error::Config(format!("quadrature too coarse: {self:?}")));
        }
        Ok(())
    }
}

/// Angular integrand of the longitudinal piezoelectric channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Eq57Variant {
    /// `cosθ` solid-angle weight times the `cos⁴θ` coupling: `cos⁵θ`.
    #[default]
    Derived,
    /// The `cos⁴θ` integrand as printed, without the extra weight.
    PaperLiteral,
}

impl fmt::Display for Eq57Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Derived => "derived-cos5",
            Self::PaperLiteral => "paper-literal-cos4",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mechanism {
    Photon,
    Deformation,
    Piezoelectric,
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Photon => "photon",
            Self::Deformation => "deformation",
            Self::Piezoelectric => "piezoelectric",
        })
    }
}

impl std::str::FromStr for Mechanism {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "photon" => Ok(Self::Photon),
            "deformation" => Ok(Self::Deformation),
            "piezoelectric" => Ok(Self::Piezoelectric),
            other => Err(format!("unknown mechanism {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBreakdown {
    /// All rates in 1/s.
    pub w_photon: f64,
    pub w_photon_bound: f64,
    pub w_da: f64,
    pub w_pa_t: f64,
    pub w_pa_l: f64,
    /// Sum of the exact channels (the photon bound is excluded).
    pub total: f64,
    pub dominant: Mechanism,
    /// Transition dipole, C·m.
    pub d_x: f64,
    /// Largest relative change of a phonon rate under node doubling.
    pub quadrature_change: f64,
}

/// `I(q) = h²·Σ ψ₀ψ₁ e^{i(q_x x + q_y y)}`.
pub fn form_factor(psi_ground: &ScalarField, psi_excited: &ScalarField, qx: f64, qy: f64) -> Result<Complex64> {
    let product = transition_density(psi_ground, psi_excited)?;
    Ok(product.at(qx, qy))
}

/// `ψ₀ψ₁` on the grid, with the per-axis coordinates, for repeated form
/// factor evaluation.
struct TransitionDensity {
    xs: Vec<f64>,
    ys: Vec<f64>,
    values: Vec<f64>,
    area: f64,
}

impl TransitionDensity {
    fn at(&self, qx: f64, qy: f64) -> Complex64 {
        let nx = self.xs.len();
        let ex: Vec<Complex64> = self.xs.iter().map(|&x| Complex64::cis(qx * x)).collect();
        let mut total = Complex64::new(0.0, 0.0);
        for (j, &y) in self.ys.iter().enumerate() {
            let row = &self.values[j * nx..(j + 1) * nx];
            let mut s = Complex64::new(0.0, 0.0);
            for (p, e) in row.iter().zip(&ex) {
                s += e * *p;
            }
            total += s * Complex64::cis(qy * y);
        }
        total * self.area
    }
}

fn transition_density(a: &ScalarField, b: &ScalarField) -> Result<TransitionDensity> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch("form factor of states on different grids".into()));
    }
    let g = a.grid();
    Ok(TransitionDensity {
        xs: (0..g.nx()).map(|i| g.x(i)).collect(),
        ys: (0..g.ny()).map(|j| g.y(j)).collect(),
        values: a.values().iter().zip(b.values()).map(|(p, q)| p * q).collect(),
        area: g.cell_area(),
    })
}

/// Transition dipole `e·h²·Σ x ψ₀ψ₁`, C·m. The `y` component must vanish.
pub fn dipole_moment_x(psi_ground: &ScalarField, psi_excited: &ScalarField) -> Result<f64> {
    let t = transition_density(psi_ground, psi_excited)?;
    let nx = t.xs.len();
    let (mut dx, mut dy) = (0.0, 0.0);
    for (k, p) in t.values.iter().enumerate() {
        dx += t.xs[k % nx] * p;
        dy += t.ys[k / nx] * p;
    }
    let (dx, dy) = (ELEMENTARY_CHARGE * t.area * dx, ELEMENTARY_CHARGE * t.area * dy);
    let size = psi_ground.grid().half_width_x().max(psi_ground.grid().half_width_y());
    if dy.abs() > 1e-6 * dx.abs() && dy.abs() > 1e-10 * ELEMENTARY_CHARGE * size {
        return Err(Error::Parity(format!("transition dipole has a y component: d_y = {dy:e}, d_x = {dx:e}")));
    }
    Ok(dx)
}

/// Dipole emission rate `ω³d²/(3πε₀ħc³)` with `ω = ε₁₀/ħ`.
pub fn photon_rate(eps10: f64, d_x: f64) -> f64 {
    let omega = eps10 / HBAR;
    omega.powi(3) * d_x * d_x / (3.0 * PI * EPSILON_0 * HBAR * SPEED_OF_LIGHT.powi(3))
}

/// Upper bound `4ε₁₀³e²r²/(3πε₀ħ⁴c³)` from `|d_x| ≤ 2er`; `r` in nm.
pub fn photon_rate_bound(eps10: f64, r_nm: f64) -> f64 {
    let r = r_nm * NM;
    4.0 * eps10.powi(3) * (ELEMENTARY_CHARGE * r).powi(2)
        / (3.0 * PI * EPSILON_0 * HBAR.powi(4) * SPEED_OF_LIGHT.powi(3))
}

/// Wavevector with polar angle `θ` measured from the plane.
pub fn wavevector(q: f64, theta: f64, phi: f64) -> [f64; 3] {
    [q * theta.cos() * phi.cos(), q * theta.cos() * phi.sin(), q * theta.sin()]
}

/// In-plane transverse polarization `(q_y, −q_x, 0)/q_∥`.
pub fn polarization_t1(q: [f64; 3]) -> [f64; 3] {
    let rho = q[0].hypot(q[1]);
    [q[1] / rho, -q[0] / rho, 0.0]
}

/// Second transverse polarization, orthogonal to `q` and to
/// [`polarization_t1`], oriented with the sign of `q_y`.
pub fn polarization_t2(q: [f64; 3]) -> [f64; 3] {
    let rho = q[0].hypot(q[1]);
    let norm = rho.hypot(q[2]);
    let sign = if q[1] < 0.0 { -1.0 } else { 1.0 };
    [sign * q[0] * q[2] / (norm * rho), sign * q[1] * q[2] / (norm * rho), -sign * rho / norm]
}

pub fn polarization_l(q: [f64; 3]) -> [f64; 3] {
    let norm = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
    [q[0] / norm, q[1] / norm, q[2] / norm]
}

/// Piezoelectric coupling of a T_d crystal for polarization `d`, in units
/// of `e₁₄/(ε₀κ₀)`: `(q_x q_y d_z + q_y q_z d_x + q_z q_x d_y)/q²`.
pub fn piezo_coupling(d: [f64; 3], q: [f64; 3]) -> f64 {
    (q[0] * q[1] * d[2] + q[1] * q[2] * d[0] + q[2] * q[0] * d[1]) / (q[0] * q[0] + q[1] * q[1] + q[2] * q[2])
}

/// Squared first transverse coupling, units of `(e·e₁₄/(ε₀κ₀))²`.
pub fn transverse_t1_factor(theta: f64, phi: f64) -> f64 {
    (theta.cos() * (2.0 * phi).cos() * theta.sin()).powi(2)
}

/// Squared second transverse coupling, same units.
pub fn transverse_t2_factor(theta: f64, phi: f64) -> f64 {
    (theta.cos() + 3.0 * (3.0 * theta).cos()).powi(2) * (phi.cos() * phi.sin()).powi(2) / 16.0
}

/// Both transverse branches summed, in closed form.
pub fn transverse_factor(theta: f64, phi: f64) -> f64 {
    let c2 = theta.cos().powi(2);
    c2 * (4.0 * (7.0 - 9.0 * (2.0 * theta).cos()) * (4.0 * phi).cos() * c2 - 28.0 * (2.0 * theta).cos()
        + 9.0 * (4.0 * theta).cos()
        + 27.0)
        / 64.0
}

/// Squared longitudinal coupling, same units.
pub fn longitudinal_factor(theta: f64, phi: f64) -> f64 {
    9.0 * theta.cos().powi(4) * theta.sin().powi(2) * (phi.cos() * phi.sin()).powi(2)
}

/// `|I(q cosθ (cosφ, sinφ))|²` on the nodes of one quadrature rule.
struct AngularTable {
    thetas: Vec<(f64, f64)>,
    phis: Vec<f64>,
    phi_weight: f64,
    form2: Vec<f64>,
}

impl AngularTable {
    fn new(t: &TransitionDensity, q: f64, spec: QuadratureSpec) -> Result<Self> {
        spec.validate()?;
        let rule = GaussLegendre::new(spec.theta_nodes)
            .map_err(|e| Error::Config(format!("Gauss-Legendre rule with {} nodes: {e}", spec.theta_nodes)))?;
        let thetas: Vec<(f64, f64)> =
            rule.as_node_weight_pairs().iter().map(|&(x, w)| (0.5 * PI * x, 0.5 * PI * w)).collect();
        let phis: Vec<f64> = (0..spec.phi_nodes).map(|k| 2.0 * PI * k as f64 / spec.phi_nodes as f64).collect();
        let form2 = thetas
            .par_iter()
            .flat_map_iter(|&(theta, _)| {
                let q_par = q * theta.cos();
                debug_assert!(q_par.abs() <= q);
                phis.iter().map(move |&phi| t.at(q_par * phi.cos(), q_par * phi.sin()).norm_sqr())
            })
            .collect();
        Ok(Self { thetas, phi_weight: 2.0 * PI / spec.phi_nodes as f64, phis, form2 })
    }

    /// `∫dθ dφ g(θ, φ) |I|²`.
    fn integrate(&self, g: impl Fn(f64, f64) -> f64) -> f64 {
        let np = self.phis.len();
        let mut total = 0.0;
        for (a, &(theta, wt)) in self.thetas.iter().enumerate() {
            let row: f64 =
                self.phis.iter().zip(&self.form2[a * np..(a + 1) * np]).map(|(&phi, f)| g(theta, phi) * f).sum();
            total += wt * row;
        }
        total * self.phi_weight
    }
}

/// One table at the configured resolution and one at double resolution.
struct AngularTables {
    base: AngularTable,
    fine: AngularTable,
}

impl AngularTables {
    fn new(spectrum: &SpectrumResult, mat: &Materials, spec: QuadratureSpec) -> Result<(Self, f64)> {
        mat.validate()?;
        let eps10 = check_splitting(spectrum)?;
        let t = transition_density(&spectrum.states[0], &spectrum.states[1])?;
        let q = eps10 / (HBAR * mat.s);
        Ok((Self { base: AngularTable::new(&t, q, spec)?, fine: AngularTable::new(&t, q, spec.doubled())? }, eps10))
    }

    /// Integral at the configured resolution, and its relative change under
    /// node doubling.
    fn integrate(&self, channel: &'static str, g: impl Fn(f64, f64) -> f64 + Copy) -> Result<(f64, f64)> {
        let coarse = self.base.integrate(g);
        let fine = self.fine.integrate(g);
        let change = if coarse == fine { 0.0 } else { (fine - coarse).abs() / fine.abs().max(coarse.abs()) };
        if !(change < QUADRATURE_TOLERANCE) {
            return Err(Error::Quadrature { channel, coarse, fine, change });
        }
        Ok((coarse, change))
    }
}

fn check_splitting(spectrum: &SpectrumResult) -> Result<f64> {
    let eps10 = spectrum.eps10();
    if spectrum.states.len() < 2 || !(eps10 > 0.0) {
        return Err(Error::DoubletUnresolved(eps10));
    }
    Ok(eps10)
}

fn deformation_prefactor(eps10: f64, mat: &Materials) -> f64 {
    mat.xi * mat.xi * eps10.powi(3) / (8.0 * PI * PI * mat.rho * HBAR.powi(4) * mat.s.powi(5))
}

fn piezo_prefactor(eps10: f64, mat: &Materials) -> f64 {
    let coupling = ELEMENTARY_CHARGE * mat.piezo_field();
    eps10 * coupling * coupling / (8.0 * PI * PI * mat.rho * HBAR * HBAR * mat.s.powi(3))
}

fn longitudinal_integrand(variant: Eq57Variant) -> impl Fn(f64, f64) -> f64 + Copy {
    move |theta: f64, phi: f64| {
        let weight = match variant {
            Eq57Variant::Derived => theta.cos(),
            Eq57Variant::PaperLiteral => 1.0,
        };
        weight * longitudinal_factor(theta, phi)
    }
}

/// Deformation-potential acoustic phonon emission rate, 1/s.
pub fn deformation_phonon_rate(spectrum: &SpectrumResult, mat: &Materials, spec: QuadratureSpec) -> Result<f64> {
    let (tables, eps10) = AngularTables::new(spectrum, mat, spec)?;
    let (integral, _) = tables.integrate("deformation", |theta, _| theta.cos())?;
    Ok(deformation_prefactor(eps10, mat) * integral)
}

/// Piezoelectric emission rate into both transverse branches, 1/s.
pub fn piezo_transverse_rate(spectrum: &SpectrumResult, mat: &Materials, spec: QuadratureSpec) -> Result<f64> {
    let (tables, eps10) = AngularTables::new(spectrum, mat, spec)?;
    let (integral, _) = tables.integrate("piezoelectric transverse", |t, p| t.cos() * transverse_factor(t, p))?;
    Ok(piezo_prefactor(eps10, mat) * integral)
}

/// Piezoelectric emission rate into the longitudinal branch, 1/s.
pub fn piezo_longitudinal_rate(
    spectrum: &SpectrumResult,
    mat: &Materials,
    spec: QuadratureSpec,
    variant: Eq57Variant,
) -> Result<f64> {
    let (tables, eps10) = AngularTables::new(spectrum, mat, spec)?;
    let (integral, _) = tables.integrate("piezoelectric longitudinal", longitudinal_integrand(variant))?;
    Ok(piezo_prefactor(eps10, mat) * integral)
}

/// All channels from one form-factor table; `r_nm` feeds the photon bound.
pub fn rate_breakdown(
    spectrum: &SpectrumResult,
    mat: &Materials,
    r_nm: f64,
    spec: QuadratureSpec,
    variant: Eq57Variant,
) -> Result<RateBreakdown> {
    let (tables, eps10) = AngularTables::new(spectrum, mat, spec)?;
    let d_x = dipole_moment_x(&spectrum.states[0], &spectrum.states[1])?;
    let (da, c_da) = tables.integrate("deformation", |theta, _| theta.cos())?;
    let (pt, c_pt) = tables.integrate("piezoelectric transverse", |t, p| t.cos() * transverse_factor(t, p))?;
    let (pl, c_pl) = tables.integrate("piezoelectric longitudinal", longitudinal_integrand(variant))?;

    let w_photon = photon_rate(eps10, d_x);
    let w_da = deformation_prefactor(eps10, mat) * da;
    let w_pa_t = piezo_prefactor(eps10, mat) * pt;
    let w_pa_l = piezo_prefactor(eps10, mat) * pl;
    let channels =
        [(Mechanism::Photon, w_photon), (Mechanism::Deformation, w_da), (Mechanism::Piezoelectric, w_pa_t + w_pa_l)];
    let dominant = channels.iter().fold(channels[0], |best, &c| if c.1 > best.1 { c } else { best }).0;
    Ok(RateBreakdown {
        w_photon,
        w_photon_bound: photon_rate_bound(eps10, r_nm),
        w_da,
        w_pa_t,
        w_pa_l,
        total: w_photon + w_da + w_pa_t + w_pa_l,
        dominant,
        d_x,
        quadrature_change: c_da.max(c_pt).max(c_pl),
    })
}

//! Uniform node-centred 2D grids, real fields on them, and the finite-difference
//! Hamiltonian `H = −ħ²/(2m)Δ + V` with Dirichlet boundary.
//!
//! Grids are stored in SI units; lengths are accepted in nanometres at
//! construction and converted once. Node coordinates are generated as
//! `(i − (n−1)/2)·h`, so the grid is bitwise symmetric about the origin and the
//! centre column `x = 0` is a node.

use crate::constants::{HBAR, NM};
use crate::error::{Error, Result};

/// Tolerance for `h²·Σ|ψ|² = 1` checks on user-supplied fields.
pub const NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    half_width_x: f64,
    half_width_y: f64,
    step: f64,
    nx: usize,
    ny: usize,
}

impl Grid {
    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Mesh step in metres.
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn step_nm(&self) -> f64 {
        self.step / NM
    }

    pub fn half_width_x(&self) -> f64 {
        self.half_width_x
    }

    pub fn half_width_y(&self) -> f64 {
        self.half_width_y
    }

    /// Area element h², m².
    pub fn cell_area(&self) -> f64 {
        self.step * self.step
    }

    /// x coordinate of column `i`, metres.
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - ((self.nx - 1) / 2) as f64) * self.step
    }

    /// y coordinate of row `j`, metres.
    pub fn y(&self, j: usize) -> f64 {
        (j as f64 - ((self.ny - 1) / 2) as f64) * self.step
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }

    pub fn interior_len(&self) -> usize {
        self.nx.saturating_sub(2) * self.ny.saturating_sub(2)
    }

    /// Index of the node mirrored through `x = 0`.
    #[inline]
    pub fn mirror_x(&self, idx: usize) -> usize {
        let (i, j) = (idx % self.nx, idx / self.nx);
        self.index(self.nx - 1 - i, j)
    }

    /// Index of the node mirrored through `y = 0`.
    #[inline]
    pub fn mirror_y(&self, idx: usize) -> usize {
        let (i, j) = (idx % self.nx, idx / self.nx);
        self.index(i, self.ny - 1 - j)
    }

    /// Node nearest to `(x, y)` (metres), clamped to the grid.
    pub fn nearest_node(&self, x: f64, y: f64) -> (usize, usize) {
        let clamp = |v: f64, n: usize| -> usize {
            let c = ((n - 1) / 2) as f64;
            (v / self.step + c).round().clamp(0.0, (n - 1) as f64) as usize
        };
        (clamp(x, self.nx), clamp(y, self.ny))
    }

    fn check_same(&self, other: &Grid, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: {}x{} @ {} nm vs {}x{} @ {} nm",
                self.nx,
                self.ny,
                self.step_nm(),
                other.nx,
                other.ny,
                other.step_nm()
            )))
        }
    }
}

/// Builds the node-centred grid spanning `[−hx, hx] × [−hy, hy]` (nm).
///
/// Each half-width must be an integer multiple of the step so that the
/// origin is a node and the node counts are odd.
pub fn make_grid(half_width_x_nm: f64, half_width_y_nm: f64, step_nm: f64) -> Result<Grid> {
    if !(step_nm > 0.0) || !step_nm.is_finite() {
        return Err(Error::Config(format!("grid step must be positive, got {step_nm}")));
    }
    let count = |half: f64, axis: &str| -> Result<usize> {
        if !(half > 0.0) || !half.is_finite() {
            return Err(Error::Config(format!("grid half-width along {axis} must be positive, got {half}")));
        }
        let cells = half / step_nm;
        let rounded = cells.round();
        if (cells - rounded).abs() > 1e-9 * cells.max(1.0) || rounded < 1.0 {
            return Err(Error::Config(format!(
                "grid extent along {axis} ({} nm) is not divisible by step {step_nm} nm",
                2.0 * half
            )));
        }
        Ok(2 * rounded as usize + 1)
    };
    let nx = count(half_width_x_nm, "x")?;
    let ny = count(half_width_y_nm, "y")?;
    Ok(Grid { half_width_x: half_width_x_nm * NM, half_width_y: half_width_y_nm * NM, step: step_nm * NM, nx, ny })
}

/// What the values of a [`ScalarField`] represent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    /// Potential energy, J.
    Potential,
    /// 2D wavefunction amplitude, m⁻¹.
    Amplitude,
    /// Probability density, m⁻².
    Density,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
    kind: FieldKind,
}

impl ScalarField {
    pub fn zeros(grid: Grid, kind: FieldKind) -> Self {
        Self { grid, values: vec![0.0; grid.len()], kind }
    }

    pub fn from_values(grid: Grid, kind: FieldKind, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for a {}-node grid", values.len(), grid.len())));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Config(format!("non-finite field value at node {bad}")));
        }
        Ok(Self { grid, values, kind })
    }

    /// Samples `f(x, y)` (metres) at every node. Amplitude fields get a zero
    /// boundary regardless of `f`.
    pub fn from_fn(grid: Grid, kind: FieldKind, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                let v =
                    if kind == FieldKind::Amplitude && grid.is_boundary(i, j) { 0.0 } else { f(grid.x(i), grid.y(j)) };
                values.push(v);
            }
        }
        Self { grid, values, kind }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// `h²·Σ f²`.
    pub fn norm_squared(&self) -> f64 {
        self.grid.cell_area() * self.values.iter().map(|v| v * v).sum::<f64>()
    }

    /// Returns a copy scaled to unit `h²·Σ f²`.
    pub fn normalized(&self) -> Self {
        let scale = 1.0 / self.norm_squared().sqrt();
        self.map(|v| v * scale)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect(), kind: self.kind }
    }

    /// Node-wise `|ψ|²` as a density field.
    pub fn density(&self) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|v| v * v).collect(), kind: FieldKind::Density }
    }

    /// Adds another field of the same grid node-wise; keeps `self`'s kind.
    pub fn add(&self, other: &ScalarField) -> Result<Self> {
        self.grid.check_same(&other.grid, "add")?;
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
            kind: self.kind,
        })
    }

    /// Largest `|f(x,y) − f(−x,y)|` relative to `max |f|`.
    pub fn x_asymmetry(&self) -> f64 {
        self.mirror_mismatch(|g, k| g.mirror_x(k), 1.0)
    }

    /// Largest `|f(x,y) + f(−x,y)|` relative to `max |f|`.
    pub fn x_antisymmetry(&self) -> f64 {
        self.mirror_mismatch(|g, k| g.mirror_x(k), -1.0)
    }

    fn mirror_mismatch(&self, mirror: impl Fn(&Grid, usize) -> usize, sign: f64) -> f64 {
        let scale = self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        (0..self.values.len())
            .map(|k| (self.values[k] - sign * self.values[mirror(&self.grid, k)]).abs())
            .fold(0.0, f64::max)
            / scale
    }

    pub(crate) fn check_zero_boundary(&self) -> Result<()> {
        let g = &self.grid;
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                if g.is_boundary(i, j) {
                    let v = self.at(i, j);
                    if v != 0.0 {
                        return Err(Error::NonzeroBoundary { i, j, value: v });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Discrete L² pairing `h²·Σ f_i g_i`.
pub fn inner_product(f: &ScalarField, g: &ScalarField) -> Result<f64> {
    f.grid.check_same(&g.grid, "inner product")?;
    Ok(dot(f.grid.cell_area(), &f.values, &g.values))
}

#[inline]
pub(crate) fn dot(area: f64, a: &[f64], b: &[f64]) -> f64 {
    area * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

/// Kinetic coefficient `ħ²/(2m h²)` of the 5-point stencil.
pub fn kinetic_coefficient(grid: &Grid, m_eff: f64) -> f64 {
    HBAR * HBAR / (2.0 * m_eff * grid.cell_area())
}

/// Compensated (Kahan–Babuška–Neumaier) running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct NeumaierSum {
    sum: f64,
    carry: f64,
}

impl NeumaierSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Borrowed discrete Hamiltonian used by the solvers; no per-call checks.
#[derive(Debug, Clone)]
pub struct Hamiltonian<'a> {
    grid: Grid,
    potential: &'a [f64],
    kinetic: f64,
}

impl<'a> Hamiltonian<'a> {
    pub fn new(potential: &'a ScalarField, m_eff: f64) -> Self {
        Self {
            grid: potential.grid,
            potential: &potential.values,
            kinetic: kinetic_coefficient(&potential.grid, m_eff),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kinetic(&self) -> f64 {
        self.kinetic
    }

    pub fn potential(&self) -> &[f64] {
        self.potential
    }

    /// Writes `H f` into `out`; boundary entries of `out` are set to zero.
    pub fn apply(&self, f: &[f64], out: &mut [f64]) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let c = self.kinetic;
        out[..nx].fill(0.0);
        out[(ny - 1) * nx..].fill(0.0);
        for j in 1..ny - 1 {
            let row = j * nx;
            out[row] = 0.0;
            out[row + nx - 1] = 0.0;
            for k in row + 1..row + nx - 1 {
                let lap = f[k + 1] + f[k - 1] + f[k + nx] + f[k - nx] - 4.0 * f[k];
                out[k] = -c * lap + self.potential[k] * f[k];
            }
        }
    }

    /// `⟨f|H|f⟩` in summation-by-parts form: `c·Σ_edges (f_a − f_b)² + h²·Σ V f²`
    /// (with `c = ħ²/2m`), identical to `h²·Σ f·Hf` for zero-boundary `f`
    /// but free of the stencil's cancellation error.
    pub fn expectation(&self, f: &[f64]) -> f64 {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let mut grad = NeumaierSum::default();
        for j in 0..ny {
            let row = j * nx;
            for k in row..row + nx - 1 {
                let d = f[k + 1] - f[k];
                grad.add(d * d);
            }
        }
        for k in 0..(ny - 1) * nx {
            let d = f[k + nx] - f[k];
            grad.add(d * d);
        }
        let mut pot = NeumaierSum::default();
        for (v, p) in f.iter().zip(self.potential) {
            pot.add(p * v * v);
        }
        self.grid.cell_area() * (self.kinetic * grad.total() + pot.total())
    }

    /// `E[upper] − E[lower]` for two (not necessarily normalized) fields,
    /// evaluated term by term as `(u − l)(u + l)` with the potential shifted
    /// by `E[lower]`, so that nearly degenerate pairs keep full relative
    /// precision in the splitting.
    pub fn energy_difference(&self, upper: &[f64], lower: &[f64]) -> f64 {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let norm_l = self.grid.cell_area() * lower.iter().map(|v| v * v).sum::<f64>();
        let shift = self.expectation(lower) / norm_l;
        let mut grad = NeumaierSum::default();
        let edge = |a: usize, b: usize| {
            let du = upper[b] - upper[a];
            let dl = lower[b] - lower[a];
            (du - dl) * (du + dl)
        };
        for j in 0..ny {
            let row = j * nx;
            for k in row..row + nx - 1 {
                grad.add(edge(k, k + 1));
            }
        }
        for k in 0..(ny - 1) * nx {
            grad.add(edge(k, k + nx));
        }
        let mut pot = NeumaierSum::default();
        let mut norm_u = NeumaierSum::default();
        for k in 0..upper.len() {
            let (u, l) = (upper[k], lower[k]);
            pot.add((self.potential[k] - shift) * ((u - l) * (u + l)));
            norm_u.add(u * u);
        }
        (self.kinetic * grad.total() + pot.total()) / norm_u.total()
    }

    /// Gershgorin upper bound on the spectrum of H restricted to interior nodes.
    pub fn gershgorin_upper(&self) -> f64 {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let mut vmax = f64::NEG_INFINITY;
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                vmax = vmax.max(self.potential[j * nx + i]);
            }
        }
        vmax + 8.0 * self.kinetic
    }
}

/// `H ψ` with the 5-point Laplacian and Dirichlet boundary.
pub fn apply_hamiltonian(potential: &ScalarField, psi: &ScalarField, m_eff: f64) -> Result<ScalarField> {
    potential.grid.check_same(&psi.grid, "hamiltonian")?;
    psi.check_zero_boundary()?;
    let mut out = vec![0.0; psi.grid.len()];
    Hamiltonian::new(potential, m_eff).apply(&psi.values, &mut out);
    Ok(ScalarField { grid: psi.grid, values: out, kind: psi.kind })
}

/// Mean energy `⟨ψ|H|ψ⟩` of a normalized amplitude field, J.
pub fn energy_expectation(potential: &ScalarField, psi: &ScalarField, m_eff: f64) -> Result<f64> {
    potential.grid.check_same(&psi.grid, "energy")?;
    psi.check_zero_boundary()?;
    let norm = psi.norm_squared();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::NotNormalized { norm });
    }
    Ok(Hamiltonian::new(potential, m_eff).expectation(&psi.values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::ELECTRON_MASS;
    use std::f64::consts::PI;

    const M: f64 = 0.065 * ELECTRON_MASS;

    #[test]
    fn grid_node_counts() {
        let g = make_grid(30.0, 20.0, 0.5).unwrap();
        assert_eq!((g.nx(), g.ny()), (121, 81));
        let g = make_grid(30.0, 20.0, 10.0).unwrap();
        assert_eq!((g.nx(), g.ny()), (7, 5));
        assert_eq!(g.x(0), -30.0 * NM);
        assert_eq!(g.x(3), 0.0);
        assert_eq!(g.y(4), 20.0 * NM);
    }

    #[test]
    fn grid_rejects_non_divisible_extent() {
        let err = make_grid(30.0, 20.0, 0.7).unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("along x")), "{err}");
        let err = make_grid(30.0, 20.5, 1.0).unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("along y")), "{err}");
        assert!(make_grid(-1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn grid_is_bitwise_symmetric() {
        let g = make_grid(30.0, 20.0, 0.5).unwrap();
        for i in 0..g.nx() {
            assert_eq!(g.x(i), -g.x(g.nx() - 1 - i));
        }
    }

    #[test]
    fn inner_product_basics() {
        let g = make_grid(30.0, 20.0, 0.5).unwrap();
        let one = ScalarField::from_fn(g, FieldKind::Density, |_, _| 1.0);
        // node-centred sum over 121x81 nodes; the "area" counts boundary nodes fully
        let area = inner_product(&one, &one).unwrap() / (NM * NM);
        assert!((area - 121.0 * 81.0 * 0.25).abs() < 1e-9);

        let even = ScalarField::from_fn(g, FieldKind::Amplitude, |x, y| (-(x * x + y * y) / (50.0 * NM * NM)).exp());
        let odd =
            ScalarField::from_fn(g, FieldKind::Amplitude, |x, y| x / NM * (-(x * x + y * y) / (50.0 * NM * NM)).exp());
        let even = even.normalized();
        assert!((inner_product(&even, &even).unwrap() - 1.0).abs() < 1e-12);
        assert!(inner_product(&even, &odd).unwrap().abs() < 1e-12);
    }

    #[test]
    fn inner_product_grid_mismatch() {
        let a = ScalarField::zeros(make_grid(30.0, 20.0, 1.0).unwrap(), FieldKind::Amplitude);
        let b = ScalarField::zeros(make_grid(30.0, 20.0, 0.5).unwrap(), FieldKind::Amplitude);
        assert!(matches!(inner_product(&a, &b), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn hamiltonian_of_zero_and_shift() {
        let g = make_grid(10.0, 10.0, 1.0).unwrap();
        let v = ScalarField::from_fn(g, FieldKind::Potential, |x, y| 1e-3 * (x * x + y * y) / (NM * NM) * 1e-20);
        let zero = ScalarField::zeros(g, FieldKind::Amplitude);
        let hz = apply_hamiltonian(&v, &zero, M).unwrap();
        assert!(hz.values().iter().all(|&x| x == 0.0));

        let psi =
            ScalarField::from_fn(g, FieldKind::Amplitude, |x, y| (-(x * x + 2.0 * y * y) / (9.0 * NM * NM)).exp());
        let c = 3.0e-21;
        let shifted = v.map(|p| p + c);
        let h1 = apply_hamiltonian(&v, &psi, M).unwrap();
        let h2 = apply_hamiltonian(&shifted, &psi, M).unwrap();
        for k in 0..g.len() {
            let (i, j) = (k % g.nx(), k / g.nx());
            if g.is_boundary(i, j) {
                continue;
            }
            let diff = h2.values()[k] - h1.values()[k];
            assert!((diff - c * psi.values()[k]).abs() <= 1e-12 * h1.values()[k].abs().max(c * psi.values()[k].abs()));
        }
    }

    #[test]
    fn hamiltonian_rejects_nonzero_boundary() {
        let g = make_grid(5.0, 5.0, 1.0).unwrap();
        let v = ScalarField::zeros(g, FieldKind::Potential);
        let psi = ScalarField::from_values(g, FieldKind::Amplitude, vec![1.0; g.len()]).unwrap();
        assert!(matches!(apply_hamiltonian(&v, &psi, M), Err(Error::NonzeroBoundary { .. })));
    }

    fn box_mode(g: Grid) -> (ScalarField, f64) {
        let lx = 2.0 * g.half_width_x();
        let ly = 2.0 * g.half_width_y();
        let psi = ScalarField::from_fn(g, FieldKind::Amplitude, |x, y| {
            (PI * (x + g.half_width_x()) / lx).sin() * (PI * (y + g.half_width_y()) / ly).sin()
        });
        let e = HBAR * HBAR * PI * PI / (2.0 * M) * (1.0 / (lx * lx) + 1.0 / (ly * ly));
        (psi.normalized(), e)
    }

    #[test]
    fn box_mode_is_eigenfunction_to_second_order() {
        let g = make_grid(30.0, 20.0, 0.5).unwrap();
        let (psi, e) = box_mode(g);
        let v = ScalarField::zeros(g, FieldKind::Potential);
        let hpsi = apply_hamiltonian(&v, &psi, M).unwrap();
        // the discrete eigenvalue differs from the continuum one by O(h²)
        let h = g.step();
        let lx = 2.0 * g.half_width_x();
        let rel_h2 = (PI * h / lx).powi(2);
        let mut worst: f64 = 0.0;
        for j in 1..g.ny() - 1 {
            for i in 1..g.nx() - 1 {
                let k = g.index(i, j);
                if psi.values()[k].abs() > 1e-3 * 1e8 {
                    worst = worst.max((hpsi.values()[k] / psi.values()[k] - e).abs() / e);
                }
            }
        }
        assert!(worst < rel_h2, "worst {worst} vs {rel_h2}");
        let energy = energy_expectation(&v, &psi, M).unwrap();
        assert!((energy - e).abs() / e < 5e-3);
    }

    #[test]
    fn box_energy_converges_at_second_order() {
        let errs: Vec<f64> = [1.0, 0.5, 0.25]
            .iter()
            .map(|&h| {
                let g = make_grid(30.0, 20.0, h).unwrap();
                let (psi, e) = box_mode(g);
                let v = ScalarField::zeros(g, FieldKind::Potential);
                (energy_expectation(&v, &psi, M).unwrap() - e).abs()
            })
            .collect();
        for pair in errs.windows(2) {
            let order = (pair[0] / pair[1]).log2();
            assert!((1.7..=2.3).contains(&order), "order {order}");
        }
    }

    #[test]
    fn expectation_matches_inner_product_form() {
        let g = make_grid(20.0, 15.0, 0.5).unwrap();
        let v =
            ScalarField::from_fn(g, FieldKind::Potential, |x, y| 2e-21 + 1e-4 * (x * x + y * y) / (NM * NM) * 1e-20);
        let psi = ScalarField::from_fn(g, FieldKind::Amplitude, |x, y| {
            (1.0 + x / (7.0 * NM)) * (-(x * x + y * y) / (30.0 * NM * NM)).exp()
        })
        .normalized();
        let direct = inner_product(&psi, &apply_hamiltonian(&v, &psi, M).unwrap()).unwrap();
        let by_parts = energy_expectation(&v, &psi, M).unwrap();
        assert!((direct - by_parts).abs() / by_parts < 1e-12);
    }

    #[test]
    fn energy_requires_normalization() {
        let g = make_grid(10.0, 10.0, 1.0).unwrap();
        let v = ScalarField::zeros(g, FieldKind::Potential);
        let psi = ScalarField::from_fn(g, FieldKind::Amplitude, |_, _| 1.0);
        assert!(matches!(energy_expectation(&v, &psi, M), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn energy_constant_shift_is_exact() {
        let g = make_grid(10.0, 10.0, 0.5).unwrap();
        let (psi, _) = box_mode(g);
        let v = ScalarField::from_fn(g, FieldKind::Potential, |x, _| 1e-21 * (x / NM).powi(2));
        let c = 4.0e-21;
        let e1 = energy_expectation(&v, &psi, M).unwrap();
        let e2 = energy_expectation(&v.map(|p| p + c), &psi, M).unwrap();
        assert!(((e2 - e1) - c).abs() < 1e-12 * e2);
    }

    #[test]
    fn energy_difference_matches_subtraction() {
        let g = make_grid(10.0, 8.0, 0.5).unwrap();
        let v = ScalarField::from_fn(g, FieldKind::Potential, |x, y| {
            1e-3 * crate::constants::MEV * (x * x + 2.0 * y * y) / 1e-18
        });
        let h = Hamiltonian::new(&v, M);
        let a = ScalarField::from_fn(g, FieldKind::Amplitude, |x, y| (-(x * x + y * y) / 2e-17).exp()).normalized();
        let b = ScalarField::from_fn(g, FieldKind::Amplitude, |x, y| x * (-(x * x + y * y) / 2e-17).exp()).normalized();
        let direct = h.expectation(b.values()) - h.expectation(a.values());
        let diff = h.energy_difference(b.values(), a.values());
        assert!((diff - direct).abs() < 1e-12 * direct.abs());
        // unnormalized upper field: the ratio form divides out its norm
        let b3 = b.map(|x| 3.0 * x);
        assert!((h.energy_difference(b3.values(), a.values()) - direct).abs() < 1e-12 * direct.abs());
    }
}

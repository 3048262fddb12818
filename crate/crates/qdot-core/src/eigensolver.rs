//! Lowest eigenpairs of the discrete Hamiltonian.
//!
//! [`lowest_states`] runs simple iterations on `σI − H`, with `σ` the
//! Gershgorin upper bound of `H`, so the lowest states of `H` become the
//! dominant ones. The `k` iterates are re-orthonormalized by modified
//! Gram–Schmidt after every step. Every `ritz_interval` steps a `k × k`
//! Rayleigh–Ritz rotation separates nearly degenerate pairs (such as the
//! tunnel doublet), and the residuals are checked.
//!
//! [`dense_oracle`] assembles the full interior matrix and diagonalizes it.
//! It is only feasible on coarse grids and exists to cross-check the
//! iterative solver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fields::{dot, energy_expectation, FieldKind, Grid, Hamiltonian, ScalarField};
use crate::linalg::SymmetricEigen;

pub const MAX_STATES: usize = 8;
/// Interior-node limit for [`dense_oracle`].
pub const DENSE_LIMIT: usize = 2500;

/// Extra vectors carried in the block so that a requested state sitting in a
/// near-degenerate cluster converges at the rate set by the next gap.
const GUARD_VECTORS: usize = 2;
const SEED_NOISE: f64 = 1e-3;
const SEED: u64 = 0x5eed_d07;
/// States whose wrong-parity weight is below this are projected onto their
/// parity after convergence (only for reflection-symmetric potentials).
const PARITY_PURITY: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub k: usize,
    /// Converged when `‖Hψ − Eψ‖ < tol·|E|` for every state.
    pub tol: f64,
    pub max_iter: usize,
    pub ritz_interval: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { k: 4, tol: 1e-8, max_iter: 200_000, ritz_interval: 10 }
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    /// Ascending energies, J.
    pub energies: Vec<f64>,
    /// Orthonormal amplitude fields, one per energy.
    pub states: Vec<ScalarField>,
    /// Absolute residuals `‖Hψ − Eψ‖`, J·m⁻¹ in the discrete L² norm.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    /// `ε₁ − ε₀` evaluated directly from the two states (see
    /// [`Hamiltonian::energy_difference`]); more precise than subtracting
    /// the energies.
    pub splitting: f64,
}

impl SpectrumResult {
    /// Tunnel splitting `ε₁ − ε₀`, J.
    pub fn eps10(&self) -> f64 {
        self.splitting
    }

    pub fn relative_residuals(&self) -> Vec<f64> {
        self.residuals.iter().zip(&self.energies).map(|(r, e)| r / e.abs().max(f64::MIN_POSITIVE)).collect()
    }

    /// Largest `|⟨ψ_i|ψ_j⟩ − δ_ij|`.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.states.iter().enumerate() {
            for (j, b) in self.states.iter().enumerate() {
                let area = a.grid().cell_area();
                let d = dot(area, a.values(), b.values()) - if i == j { 1.0 } else { 0.0 };
                worst = worst.max(d.abs());
            }
        }
        worst
    }
}

/// Lowest `opts.k` eigenpairs from deterministic parity-seeded start vectors.
pub fn lowest_states(potential: &ScalarField, m_eff: f64, opts: &SolverOptions) -> Result<SpectrumResult> {
    check_request(potential, opts)?;
    let seeds = seed_vectors(potential.grid(), block_size(potential, opts));
    iterate(potential, m_eff, opts, seeds)
}

/// Same as [`lowest_states`] but starts from previously converged states,
/// typically of a slightly different potential on the same grid.
pub fn lowest_states_from(
    potential: &ScalarField,
    m_eff: f64,
    opts: &SolverOptions,
    start: &[ScalarField],
) -> Result<SpectrumResult> {
    check_request(potential, opts)?;
    let mut seeds = seed_vectors(potential.grid(), block_size(potential, opts));
    for (seed, s) in seeds.iter_mut().zip(start) {
        if s.grid() != potential.grid() {
            return Err(Error::GridMismatch("warm-start state on a different grid".into()));
        }
        seed.copy_from_slice(s.values());
    }
    iterate(potential, m_eff, opts, seeds)
}

fn block_size(potential: &ScalarField, opts: &SolverOptions) -> usize {
    (opts.k + GUARD_VECTORS).min(potential.grid().interior_len())
}

fn check_request(potential: &ScalarField, opts: &SolverOptions) -> Result<()> {
    let available = potential.grid().interior_len().min(MAX_STATES);
    if opts.k == 0 || opts.k > available {
        return Err(Error::TooManyStates { requested: opts.k, available });
    }
    if !(opts.tol > 0.0) || opts.ritz_interval == 0 {
        return Err(Error::Config(format!("invalid solver options {opts:?}")));
    }
    if potential.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("potential has non-finite values".into()));
    }
    Ok(())
}

/// State `j` starts as a Gaussian envelope times a profile with x-parity
/// `(−1)^j` (and y-parity `(−1)^⌊j/2⌋`), plus a small fixed-seed
/// perturbation so that every symmetry sector is represented.
fn seed_vectors(grid: &Grid, k: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let sx = 0.5 * grid.half_width_x();
    let sy = 0.5 * grid.half_width_y();
    (0..k)
        .map(|j| {
            let mut v = vec![0.0; grid.len()];
            for jj in 1..grid.ny() - 1 {
                for ii in 1..grid.nx() - 1 {
                    let (x, y) = (grid.x(ii) / sx, grid.y(jj) / sy);
                    let envelope = (-0.5 * (x * x + y * y)).exp();
                    let px = if j % 2 == 1 { x } else { 1.0 };
                    let py = if (j / 2) % 2 == 1 { y } else { 1.0 };
                    let noise: f64 = rng.gen_range(-1.0..1.0);
                    v[grid.index(ii, jj)] = envelope * (px * py + SEED_NOISE * noise);
                }
            }
            v
        })
        .collect()
}

fn iterate(potential: &ScalarField, m_eff: f64, opts: &SolverOptions, mut q: Vec<Vec<f64>>) -> Result<SpectrumResult> {
    let grid = *potential.grid();
    let area = grid.cell_area();
    let ham = Hamiltonian::new(potential, m_eff);
    let sigma = ham.gershgorin_upper();
    let k = opts.k;
    let mut hq = vec![vec![0.0; grid.len()]; q.len()];
    let mut residuals = vec![f64::INFINITY; k];
    let mut ritz = vec![0.0; q.len()];

    orthonormalize(&mut q, area);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        for (v, hv) in q.iter_mut().zip(hq.iter_mut()) {
            ham.apply(v, hv);
            for (a, b) in v.iter_mut().zip(hv.iter()) {
                *a = sigma * *a - b;
            }
        }
        orthonormalize(&mut q, area);
        iterations += 1;

        if iterations % opts.ritz_interval == 0 || iterations == opts.max_iter {
            rayleigh_ritz(&ham, &mut q, &mut hq, &mut ritz, area);
            for s in 0..k {
                let r2: f64 = hq[s].iter().zip(&q[s]).map(|(h, v)| (h - ritz[s] * v).powi(2)).sum();
                residuals[s] = (area * r2).sqrt();
            }
            if residuals.iter().zip(&ritz[..k]).all(|(r, e)| *r < opts.tol * e.abs()) {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        let relative = residuals.iter().zip(&ritz).map(|(r, e)| r / e.abs()).collect();
        return Err(Error::NotConverged { iterations, residuals: relative });
    }

    q.truncate(k);
    polish_parity(potential, &mut q, area);
    finish(potential, m_eff, q, iterations)
}

fn orthonormalize(q: &mut [Vec<f64>], area: f64) {
    for s in 0..q.len() {
        let (done, rest) = q.split_at_mut(s);
        let v = &mut rest[0];
        for u in done.iter() {
            let c = dot(area, u, v);
            for (a, b) in v.iter_mut().zip(u) {
                *a -= c * b;
            }
        }
        let n = dot(area, v, v).sqrt();
        for a in v.iter_mut() {
            *a /= n;
        }
    }
}

/// Rotates `q` onto the Ritz vectors of `H` in span(q); fills `hq = H q`.
fn rayleigh_ritz(ham: &Hamiltonian<'_>, q: &mut [Vec<f64>], hq: &mut [Vec<f64>], ritz: &mut [f64], area: f64) {
    let k = q.len();
    for (v, hv) in q.iter().zip(hq.iter_mut()) {
        ham.apply(v, hv);
    }
    let mut a = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let v = 0.5 * (dot(area, &q[i], &hq[j]) + dot(area, &q[j], &hq[i]));
            a[i * k + j] = v;
            a[j * k + i] = v;
        }
    }
    let eig = SymmetricEigen::new(&a, k);
    let rotate = |vs: &mut [Vec<f64>]| {
        let old: Vec<Vec<f64>> = vs.to_vec();
        for (t, target) in vs.iter_mut().enumerate() {
            target.fill(0.0);
            for (s, src) in old.iter().enumerate() {
                let c = eig.vectors[s * k + t];
                for (a, b) in target.iter_mut().zip(src) {
                    *a += c * b;
                }
            }
        }
    };
    rotate(q);
    rotate(hq);
    ritz.copy_from_slice(&eig.values);
}

/// Weight of the part of `v` that is odd (`sign = −1`) or even (`+1`) under
/// the mirror map.
fn parity_weight(v: &[f64], mirror: impl Fn(usize) -> usize, sign: f64) -> f64 {
    let total: f64 = v.iter().map(|a| a * a).sum();
    let part: f64 = (0..v.len()).map(|k| (0.5 * (v[k] + sign * v[mirror(k)])).powi(2)).sum();
    part / total
}

fn is_symmetric_under(values: &[f64], mirror: impl Fn(usize) -> usize) -> bool {
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    (0..values.len()).all(|k| (values[k] - values[mirror(k)]).abs() <= 1e-12 * scale)
}

/// For mirror-symmetric potentials, projects states that are parity-pure up
/// to convergence noise onto that parity, then re-orthonormalizes.
fn polish_parity(potential: &ScalarField, q: &mut [Vec<f64>], area: f64) {
    let grid = *potential.grid();
    let mirrors: [&dyn Fn(usize) -> usize; 2] = [&|k| grid.mirror_x(k), &|k| grid.mirror_y(k)];
    let mut changed = false;
    for mirror in mirrors {
        if !is_symmetric_under(potential.values(), mirror) {
            continue;
        }
        for v in q.iter_mut() {
            for sign in [1.0, -1.0] {
                if parity_weight(v, mirror, -sign) < PARITY_PURITY {
                    let projected: Vec<f64> = (0..v.len()).map(|k| 0.5 * (v[k] + sign * v[mirror(k)])).collect();
                    *v = projected;
                    changed = true;
                    break;
                }
            }
        }
    }
    if changed {
        orthonormalize(q, area);
    }
}

/// Applies the sign convention, computes energies and residuals, sorts.
fn finish(potential: &ScalarField, m_eff: f64, q: Vec<Vec<f64>>, iterations: usize) -> Result<SpectrumResult> {
    let grid = *potential.grid();
    let ham = Hamiltonian::new(potential, m_eff);
    let reference = sign_reference_node(potential);
    let mut pairs = Vec::with_capacity(q.len());
    for mut v in q {
        if sign_of(&v, reference) < 0.0 {
            v.iter_mut().for_each(|a| *a = -*a);
        }
        let field = ScalarField::from_values(grid, FieldKind::Amplitude, v)?;
        let e = energy_expectation(potential, &field, m_eff)?;
        let mut hv = vec![0.0; grid.len()];
        ham.apply(field.values(), &mut hv);
        let r2: f64 = hv.iter().zip(field.values()).map(|(h, f)| (h - e * f).powi(2)).sum();
        pairs.push((e, field, (grid.cell_area() * r2).sqrt()));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = SpectrumResult { energies: vec![], states: vec![], residuals: vec![], iterations, splitting: 0.0 };
    for (e, f, r) in pairs {
        out.energies.push(e);
        out.states.push(f);
        out.residuals.push(r);
    }
    out.splitting = match out.states.as_slice() {
        [lower, upper, ..] => ham.energy_difference(upper.values(), lower.values()),
        _ => f64::NAN,
    };
    Ok(out)
}

/// Node nearest to the right-hand potential minimum on `y = 0`.
fn sign_reference_node(potential: &ScalarField) -> usize {
    let g = potential.grid();
    let j0 = (g.ny() - 1) / 2;
    let i0 = (g.nx() - 1) / 2;
    let mut best = i0;
    for i in i0..g.nx() - 1 {
        if potential.at(i, j0) < potential.at(best, j0) {
            best = i;
        }
    }
    g.index(best, j0)
}

/// Sign used to orient a state: its value at the reference node, falling
/// back to the first node (in storage order) of significant magnitude when
/// the state vanishes there.
fn sign_of(v: &[f64], reference: usize) -> f64 {
    let scale = v.iter().fold(0.0_f64, |m, a| m.max(a.abs()));
    if v[reference].abs() > 1e-6 * scale {
        return v[reference].signum();
    }
    v.iter().find(|a| a.abs() > 1e-3 * scale).map_or(1.0, |a| a.signum())
}

/// Full diagonalization of the interior Hamiltonian matrix; returns the
/// lowest `k` pairs with the same sign convention as [`lowest_states`].
pub fn dense_oracle(potential: &ScalarField, m_eff: f64, k: usize) -> Result<SpectrumResult> {
    let grid = *potential.grid();
    let n = grid.interior_len();
    if n > DENSE_LIMIT {
        return Err(Error::GridTooLarge { interior: n, limit: DENSE_LIMIT });
    }
    if k == 0 || k > n {
        return Err(Error::TooManyStates { requested: k, available: n });
    }
    let (ix, iy) = (grid.nx() - 2, grid.ny() - 2);
    let c = crate::fields::kinetic_coefficient(&grid, m_eff);
    let mut a = vec![0.0; n * n];
    let interior = |i: usize, j: usize| (j - 1) * ix + (i - 1);
    for j in 1..=iy {
        for i in 1..=ix {
            let p = interior(i, j);
            a[p * n + p] = 4.0 * c + potential.at(i, j);
            if i > 1 {
                a[p * n + interior(i - 1, j)] = -c;
            }
            if i < ix {
                a[p * n + interior(i + 1, j)] = -c;
            }
            if j > 1 {
                a[p * n + interior(i, j - 1)] = -c;
            }
            if j < iy {
                a[p * n + interior(i, j + 1)] = -c;
            }
        }
    }
    let eig = SymmetricEigen::new(&a, n);
    let scale = 1.0 / grid.step();
    let q = (0..k)
        .map(|s| {
            let mut v = vec![0.0; grid.len()];
            for j in 1..=iy {
                for i in 1..=ix {
                    v[grid.index(i, j)] = eig.vectors[interior(i, j) * n + s] * scale;
                }
            }
            v
        })
        .collect();
    finish(potential, m_eff, q, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{ELECTRON_MASS, HBAR, NM};
    use crate::fields::make_grid;
    use crate::potentials::{double_well_potential, DoubleWellParams};
    use std::f64::consts::PI;

    const M: f64 = 0.065 * ELECTRON_MASS;

    fn coarse_double_well() -> ScalarField {
        let g = make_grid(30.0, 20.0, 2.0).unwrap();
        double_well_potential(&DoubleWellParams::gaas(0.2).unwrap(), g)
    }

    #[test]
    fn rejects_bad_requests() {
        let v = coarse_double_well();
        let opts = SolverOptions { k: 9, ..Default::default() };
        assert!(matches!(lowest_states(&v, M, &opts), Err(Error::TooManyStates { .. })));
        let tiny = ScalarField::zeros(make_grid(1.0, 1.0, 1.0).unwrap(), FieldKind::Potential);
        let opts = SolverOptions { k: 4, ..Default::default() };
        assert!(matches!(lowest_states(&tiny, M, &opts), Err(Error::TooManyStates { .. })));
        let big = ScalarField::zeros(make_grid(30.0, 20.0, 0.5).unwrap(), FieldKind::Potential);
        assert!(matches!(dense_oracle(&big, M, 4), Err(Error::GridTooLarge { .. })));
    }

    #[test]
    fn reports_non_convergence() {
        let v = coarse_double_well();
        let opts = SolverOptions { max_iter: 20, ..Default::default() };
        match lowest_states(&v, M, &opts) {
            Err(Error::NotConverged { iterations, residuals }) => {
                assert_eq!(iterations, 20);
                assert_eq!(residuals.len(), 4);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn matches_dense_oracle_on_coarse_grid() {
        let v = coarse_double_well();
        let it = lowest_states(&v, M, &SolverOptions::default()).unwrap();
        let dense = dense_oracle(&v, M, 4).unwrap();
        for (a, b) in it.energies.iter().zip(&dense.energies) {
            assert!((a - b).abs() / b.abs() < 1e-10, "{a} vs {b}");
        }
        assert!(it.orthonormality_error() < 1e-8);
        assert!(dense.orthonormality_error() < 1e-10);
    }

    #[test]
    fn box_strip_matches_analytic_levels() {
        // three interior rows: the lowest states are the x-modes of the first y-mode
        let g = make_grid(30.0, 2.0, 1.0).unwrap();
        let v = ScalarField::zeros(g, FieldKind::Potential);
        let dense = dense_oracle(&v, M, 4).unwrap();
        let (lx, ly) = (60.0 * NM, 4.0 * NM);
        let c = HBAR * HBAR / (2.0 * M);
        let h = g.step();
        for (n, e) in dense.energies.iter().enumerate() {
            let kx = (n + 1) as f64 * PI / lx;
            let exact = c * (kx * kx + (PI / ly).powi(2));
            // discrete-Laplacian error ~ (kh)²/12 of each term
            let tol = c * ((kx * h).powi(2) * kx * kx + (PI * h / ly).powi(2) * (PI / ly).powi(2)) / 12.0 * 1.1;
            assert!((e - exact).abs() < tol, "level {n}: {e} vs {exact}");
        }
    }

    #[test]
    fn box_with_three_even_states_is_found() {
        // 60x40 box: the lowest four states have x-parities (+, −, +, +)
        let g = make_grid(30.0, 20.0, 2.0).unwrap();
        let v = ScalarField::zeros(g, FieldKind::Potential);
        let it = lowest_states(&v, M, &SolverOptions::default()).unwrap();
        let dense = dense_oracle(&v, M, 4).unwrap();
        for (a, b) in it.energies.iter().zip(&dense.energies) {
            assert!((a - b).abs() / b < 1e-10);
        }
    }

    #[test]
    fn parity_and_sign_convention_for_double_well() {
        let v = coarse_double_well();
        let s = lowest_states(&v, M, &SolverOptions::default()).unwrap();
        assert!(s.states[0].x_asymmetry() < 1e-8);
        assert!(s.states[1].x_antisymmetry() < 1e-8);
        let r = sign_reference_node(&v);
        assert!(s.states[0].values()[r] >= 0.0 && s.states[1].values()[r] >= 0.0);
        assert!(s.relative_residuals().iter().all(|&x| x < 1e-8));
    }

    #[test]
    fn variational_bound_on_coarse_grid() {
        let v = coarse_double_well();
        let dense = dense_oracle(&v, M, 1).unwrap();
        let g = *v.grid();
        for width in [3.0, 6.0, 12.0] {
            let trial = ScalarField::from_fn(g, FieldKind::Amplitude, |x, y| {
                (-((x.abs() - 6.0 * NM).powi(2) + y * y) / (width * NM * NM)).exp()
            })
            .normalized();
            let e = energy_expectation(&v, &trial, M).unwrap();
            assert!(e >= dense.energies[0] * (1.0 - 1e-12));
        }
    }

    #[test]
    fn warm_start_converges_quickly() {
        let v = coarse_double_well();
        let opts = SolverOptions::default();
        let cold = lowest_states(&v, M, &opts).unwrap();
        let v2 = v.map(|p| p * 1.001);
        let warm = lowest_states_from(&v2, M, &opts, &cold.states).unwrap();
        let fresh = lowest_states(&v2, M, &opts).unwrap();
        assert!(warm.iterations < fresh.iterations);
        for (a, b) in warm.energies.iter().zip(&fresh.energies) {
            assert!((a - b).abs() / b < 1e-10);
        }
    }

    #[test]
    fn direct_splitting_agrees_with_energy_difference() {
        let v = coarse_double_well();
        let dense = dense_oracle(&v, M, 2).unwrap();
        let it = lowest_states(&v, M, &SolverOptions { k: 4, tol: 1e-10, ..Default::default() }).unwrap();
        let naive = dense.energies[1] - dense.energies[0];
        assert!((dense.eps10() - naive).abs() < 1e-6 * naive);
        assert!((it.eps10() - dense.eps10()).abs() < 1e-8 * naive);
    }
}

//! Logical basis, localization diagnostics and the two-level dynamics of a
//! single charge qubit.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

use crate::constants::{HBAR, NM};
use crate::eigensolver::SpectrumResult;
use crate::error::{Error, Result};
use crate::fields::{FieldKind, ScalarField};

/// Tolerance on `|c0|² + |c1|² = 1`.
pub const STATE_NORM_TOLERANCE: f64 = 1e-12;
/// Node-wise parity mismatch (relative to the peak) accepted for the
/// eigenstates entering [`logical_basis`].
pub const PARITY_TOLERANCE: f64 = 1e-6;
/// A doublet is unresolved when `ε₁₀` is within this many ulps of `ε₁`.
const DOUBLET_ULPS: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogicalState {
    pub c0: Complex64,
    pub c1: Complex64,
}

impl LogicalState {
    pub fn new(c0: Complex64, c1: Complex64) -> Result<Self> {
        let norm = c0.norm_sqr() + c1.norm_sqr();
        if (norm - 1.0).abs() > STATE_NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { c0, c1 })
    }

    pub fn zero() -> Self {
        Self { c0: Complex64::new(1.0, 0.0), c1: Complex64::new(0.0, 0.0) }
    }

    pub fn one() -> Self {
        Self { c0: Complex64::new(0.0, 0.0), c1: Complex64::new(1.0, 0.0) }
    }

    pub fn probabilities(&self) -> (f64, f64) {
        (self.c0.norm_sqr(), self.c1.norm_sqr())
    }

    /// `|⟨self|other⟩|²`, insensitive to global phase.
    pub fn fidelity(&self, other: &LogicalState) -> f64 {
        (self.c0.conj() * other.c0 + self.c1.conj() * other.c1).norm_sqr()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitCharacterization {
    /// Tunnel splitting, J.
    pub eps10: f64,
    /// rad/s.
    pub delta_omega: f64,
    /// s.
    pub t_not: f64,
    /// Distance between the density maxima of |0⟩ and |1⟩, nm.
    pub r: f64,
    /// Probability of |0⟩ in x > 0.
    pub loc0: f64,
    /// Probability of |1⟩ in x < 0.
    pub loc1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Half {
    /// x > 0
    Right,
    /// x < 0
    Left,
}

/// `|0⟩ = (ψ₁ + ψ₂)/√2`, `|1⟩ = (ψ₁ − ψ₂)/√2`.
///
/// The inputs must have opposite x-parity. If the sum happens to localize
/// on the left (other sign conventions), the two are exchanged so that |0⟩
/// always sits in x > 0.
pub fn logical_basis(psi1: &ScalarField, psi2: &ScalarField) -> Result<(ScalarField, ScalarField)> {
    if psi1.grid() != psi2.grid() {
        return Err(Error::GridMismatch("logical basis from states on different grids".into()));
    }
    let even_odd = psi1.x_asymmetry() < PARITY_TOLERANCE && psi2.x_antisymmetry() < PARITY_TOLERANCE;
    let odd_even = psi1.x_antisymmetry() < PARITY_TOLERANCE && psi2.x_asymmetry() < PARITY_TOLERANCE;
    if !(even_odd || odd_even) {
        return Err(Error::Parity(format!(
            "states do not have opposite x-parity (asymmetries {:.3e}/{:.3e}, antisymmetries {:.3e}/{:.3e})",
            psi1.x_asymmetry(),
            psi2.x_asymmetry(),
            psi1.x_antisymmetry(),
            psi2.x_antisymmetry()
        )));
    }
    let combine = |s: f64| {
        let values = psi1.values().iter().zip(psi2.values()).map(|(a, b)| FRAC_1_SQRT_2 * (a + s * b)).collect();
        ScalarField::from_values(*psi1.grid(), FieldKind::Amplitude, values)
    };
    let (zero, one) = (combine(1.0)?, combine(-1.0)?);
    if localization(&zero, Half::Right) >= localization(&one, Half::Right) {
        Ok((zero, one))
    } else {
        Ok((one, zero))
    }
}

/// Probability `h²·Σ|ψ|²` in one half-plane; the `x = 0` column counts half
/// to each side.
pub fn localization(psi: &ScalarField, half: Half) -> f64 {
    let g = psi.grid();
    let mid = (g.nx() - 1) / 2;
    // columns visited outward from the centre, so mirror images sum identically
    let column = |k: usize| match half {
        Half::Right => mid + k,
        Half::Left => mid - k,
    };
    let mut p = 0.0;
    for j in 0..g.ny() {
        p += 0.5 * psi.at(mid, j).powi(2);
        for k in 1..=mid {
            p += psi.at(column(k), j).powi(2);
        }
    }
    p * g.cell_area()
}

/// Sub-grid position (m) of the density maximum: argmax node, refined by a
/// three-point parabola along each axis.
fn density_maximum(psi: &ScalarField) -> (f64, f64) {
    let g = psi.grid();
    let (mut bi, mut bj, mut best) = (0, 0, f64::NEG_INFINITY);
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            let d = psi.at(i, j).powi(2);
            if d > best {
                (bi, bj, best) = (i, j, d);
            }
        }
    }
    let vertex = |fm: f64, f0: f64, fp: f64| {
        let curvature = fm - 2.0 * f0 + fp;
        if curvature < 0.0 {
            0.5 * (fm - fp) / curvature
        } else {
            0.0
        }
    };
    let d = |i: usize, j: usize| psi.at(i, j).powi(2);
    let dx = if bi > 0 && bi + 1 < g.nx() { vertex(d(bi - 1, bj), best, d(bi + 1, bj)) } else { 0.0 };
    let dy = if bj > 0 && bj + 1 < g.ny() { vertex(d(bi, bj - 1), best, d(bi, bj + 1)) } else { 0.0 };
    (g.x(bi) + dx * g.step(), g.y(bj) + dy * g.step())
}

/// Distance between the density maxima of the two logical states, nm.
pub fn density_maxima_separation(zero: &ScalarField, one: &ScalarField) -> Result<f64> {
    if zero.grid() != one.grid() {
        return Err(Error::GridMismatch("logical states on different grids".into()));
    }
    let (x0, y0) = density_maximum(zero);
    let (x1, y1) = density_maximum(one);
    if x0 * x1 >= 0.0 {
        return Err(Error::NotLocalized(format!(
            "density maxima at x = {:.3} nm and x = {:.3} nm are not on opposite sides",
            x0 / NM,
            x1 / NM
        )));
    }
    Ok((x0 - x1).hypot(y0 - y1) / NM)
}

/// Closed-form evolution of `c0|0⟩ + c1|1⟩` in the doublet with level
/// frequencies `ω₁ ≤ ω₂`.
pub fn evolve(state: LogicalState, omega1: f64, omega2: f64, t: f64) -> LogicalState {
    let phase = Complex64::from_polar(1.0, -0.5 * (omega1 + omega2) * t);
    let half = 0.5 * (omega2 - omega1) * t;
    let (c, s) = (Complex64::new(half.cos(), 0.0), Complex64::new(0.0, half.sin()));
    LogicalState { c0: phase * (state.c0 * c + state.c1 * s), c1: phase * (state.c1 * c + state.c0 * s) }
}

/// `π/Δω` for a splitting `ε₁₀`.
pub fn not_duration(eps10: f64) -> f64 {
    PI * HBAR / eps10
}

pub(crate) fn check_doublet(spectrum: &SpectrumResult) -> Result<f64> {
    if spectrum.energies.len() < 2 {
        return Err(Error::TooManyStates { requested: 2, available: spectrum.energies.len() });
    }
    let eps10 = spectrum.eps10();
    let resolution = DOUBLET_ULPS * f64::EPSILON * spectrum.energies[1].abs();
    if !(eps10 > resolution) {
        return Err(Error::DoubletUnresolved(eps10));
    }
    Ok(eps10)
}

pub fn characterize(spectrum: &SpectrumResult) -> Result<QubitCharacterization> {
    let eps10 = check_doublet(spectrum)?;
    let (zero, one) = logical_basis(&spectrum.states[0], &spectrum.states[1])?;
    let r = density_maxima_separation(&zero, &one)?;
    let delta_omega = eps10 / HBAR;
    Ok(QubitCharacterization {
        eps10,
        delta_omega,
        t_not: PI / delta_omega,
        r,
        loc0: localization(&zero, Half::Right),
        loc1: localization(&one, Half::Left),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::MEV;
    use crate::eigensolver::{lowest_states, SolverOptions};
    use crate::fields::{inner_product, make_grid, Grid};
    use crate::potentials::{double_well_potential, DoubleWellParams};
    use proptest::prelude::*;

    fn coarse() -> Grid {
        make_grid(30.0, 20.0, 1.0).unwrap()
    }

    fn spectrum(w: f64) -> SpectrumResult {
        let p = DoubleWellParams::gaas(w).unwrap();
        lowest_states(&double_well_potential(&p, coarse()), p.m_eff, &SolverOptions::default()).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn logical_basis_is_orthonormal_and_localized() {
        let s = spectrum(0.2);
        let (zero, one) = logical_basis(&s.states[0], &s.states[1]).unwrap();
        assert!(inner_product(&zero, &one).unwrap().abs() < 1e-10);
        assert!((zero.norm_squared() - 1.0).abs() < 1e-10);
        assert!((one.norm_squared() - 1.0).abs() < 1e-10);
        assert!(localization(&zero, Half::Right) > 0.95);
        assert!(localization(&one, Half::Left) > 0.95);
        let total = zero.density().add(&one.density()).unwrap();
        let direct = s.states[0].density().add(&s.states[1].density()).unwrap();
        for (a, b) in total.values().iter().zip(direct.values()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300) + 1e-30);
        }
    }

    #[test]
    fn logical_basis_rejects_same_parity() {
        let s = spectrum(0.2);
        assert!(matches!(logical_basis(&s.states[0], &s.states[2]), Err(Error::Parity(_))));
    }

    #[test]
    fn localization_examples() {
        let g = coarse();
        let even = ScalarField::from_fn(g, FieldKind::Amplitude, |x, y| (-(x * x + y * y) / 1e-16).exp()).normalized();
        assert_eq!(localization(&even, Half::Right), localization(&even, Half::Left));
        assert!((localization(&even, Half::Right) - 0.5).abs() < 1e-15);

        let mut point = ScalarField::zeros(g, FieldKind::Amplitude);
        point.values_mut()[g.index(40, 20)] = 1.0 / g.step();
        assert!((localization(&point, Half::Right) - 1.0).abs() < 1e-15);

        let lopsided =
            ScalarField::from_fn(g, FieldKind::Amplitude, |x, y| (-((x - 3e-9).powi(2) + y * y) / 5e-17).exp())
                .normalized();
        let sum = localization(&lopsided, Half::Right) + localization(&lopsided, Half::Left);
        assert!((sum - 1.0).abs() < 1e-14);
    }

    #[test]
    fn maxima_refinement_is_sub_grid() {
        let g = coarse();
        let bump = |cx: f64| {
            ScalarField::from_fn(g, FieldKind::Amplitude, move |x, y| (-((x - cx).powi(2) + y * y) / 2e-17).exp())
        };
        let r = density_maxima_separation(&bump(7.3e-9), &bump(-7.3e-9)).unwrap();
        assert!((r - 14.6).abs() < 0.05, "r = {r}");
        assert!(matches!(density_maxima_separation(&bump(5e-9), &bump(8e-9)), Err(Error::NotLocalized(_))));
    }

    #[test]
    fn separation_grows_with_barrier_width() {
        let rs: Vec<f64> = [0.1, 0.2, 0.3].iter().map(|&w| characterize(&spectrum(w)).unwrap().r).collect();
        assert!(rs.windows(2).all(|p| p[1] > p[0]), "{rs:?}");
    }

    #[test]
    fn not_duration_arithmetic() {
        assert!((not_duration(4.136e-3 * MEV) - 0.5e-9).abs() / 0.5e-9 < 1e-3);
        let delta_omega = PI * 1e9;
        assert!((not_duration(HBAR * delta_omega) - 1e-9).abs() < 1e-24);
    }

    #[test]
    fn characterize_fills_consistent_fields() {
        let q = characterize(&spectrum(0.2)).unwrap();
        assert!((q.t_not - PI / q.delta_omega).abs() <= 1e-15 * q.t_not);
        assert!((q.eps10 - HBAR * q.delta_omega).abs() <= 1e-15 * q.eps10);
        assert!(q.loc0 >= 0.5 && q.loc0 <= 1.0 && q.loc1 >= 0.5 && q.loc1 <= 1.0);
    }

    #[test]
    fn unresolved_doublet_is_rejected() {
        let mut s = spectrum(0.2);
        s.energies[1] = s.energies[0];
        s.splitting = 0.0;
        assert!(matches!(characterize(&s), Err(Error::DoubletUnresolved(_))));
    }

    #[test]
    fn not_pulse_swaps_and_double_pulse_restores() {
        let s = LogicalState::new(c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        let (w1, w2) = (3.0e12, 3.0e12 + 2.0e9);
        let t_not = PI / (w2 - w1);
        let once = evolve(s, w1, w2, t_not);
        assert!((once.c0.norm() - s.c1.norm()).abs() < 1e-12);
        assert!((once.c1.norm() - s.c0.norm()).abs() < 1e-12);
        let twice = evolve(s, w1, w2, 2.0 * t_not);
        assert!((twice.c0.norm() - s.c0.norm()).abs() < 1e-12);
        assert!((twice.c1.norm() - s.c1.norm()).abs() < 1e-12);
        assert_eq!(evolve(s, w1, w2, 0.0), s);
    }

    fn arb_state() -> impl Strategy<Value = LogicalState> {
        (0.0..PI, 0.0..2.0 * PI, 0.0..2.0 * PI).prop_map(|(theta, a, b)| LogicalState {
            c0: Complex64::from_polar((0.5 * theta).cos(), a),
            c1: Complex64::from_polar((0.5 * theta).sin(), b),
        })
    }

    proptest! {
        #[test]
        fn evolution_is_unitary(s in arb_state(), w1 in 0.0..1e12f64, dw in 0.0..1e10f64, t in 0.0..1e-8f64) {
            let e = evolve(s, w1, w1 + dw, t);
            let (p0, p1) = e.probabilities();
            prop_assert!((p0 + p1 - 1.0).abs() < 1e-14);
        }

        #[test]
        fn equal_frequencies_only_change_phase(s in arb_state(), w in 0.0..1e12f64, t in 0.0..1e-8f64) {
            let e = evolve(s, w, w, t);
            prop_assert!((e.c0.norm_sqr() - s.c0.norm_sqr()).abs() < 1e-14);
            prop_assert!((e.c1.norm_sqr() - s.c1.norm_sqr()).abs() < 1e-14);
        }

        #[test]
        fn evolution_composes(s in arb_state(), dw in 1e8..1e10f64, t1 in 0.0..1e-9f64, t2 in 0.0..1e-9f64) {
            let (w1, w2) = (1e10, 1e10 + dw);
            let a = evolve(evolve(s, w1, w2, t1), w1, w2, t2);
            let b = evolve(s, w1, w2, t1 + t2);
            prop_assert!((a.c0 - b.c0).norm() < 1e-12 && (a.c1 - b.c1).norm() < 1e-12);
        }

        #[test]
        fn not_twice_restores_probabilities(s in arb_state(), dw in 1e8..1e11f64) {
            let t = PI / dw;
            let e = evolve(evolve(s, 0.0, dw, t), 0.0, dw, t);
            prop_assert!((e.c0.norm_sqr() - s.c0.norm_sqr()).abs() < 1e-12);
            prop_assert!((e.c1.norm_sqr() - s.c1.norm_sqr()).abs() < 1e-12);
        }
    }
}

//! Controlled NOT between two laterally coupled double dots.
//!
//! The control electron is a frozen charge cloud: the density of its |0⟩ or
//! |1⟩ logical state, placed by [`CnotGeometry`], adds a Coulomb term to the
//! target's potential. The two conditional tunnel splittings give two NOT
//! durations; a single target pulse of length `t_cnot` performs an even
//! number of half-oscillations for one control state and an odd number for
//! the other. The pulse barrier height is tuned so that number is an
//! integer.

use std::f64::consts::PI;

use crate::eigensolver::{lowest_states, lowest_states_from, SolverOptions, SpectrumResult};
use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField};
use crate::potentials::{
    coulomb_field_from_density, double_well_potential, CnotGeometry, ControlState, DoubleWellParams,
};
use crate::qubit::{check_doublet, evolve, logical_basis, not_duration, LogicalState};

/// Target accuracy of `|n_real − n|` after tuning.
pub const TUNING_TOLERANCE: f64 = 1e-6;
pub const MAX_TUNING_EVALUATIONS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnotSchedule {
    /// s.
    pub t_cnot: f64,
    pub n_real: f64,
    /// The shorter duration belonged to control |1⟩, so the even (identity)
    /// branch is control |1⟩.
    pub swapped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnotTimings {
    /// NOT duration with control in |0⟩, s.
    pub t_not0: f64,
    /// NOT duration with control in |1⟩, s.
    pub t_not1: f64,
    pub t_cnot: f64,
    pub n_real: f64,
    pub n: u64,
    /// Pulse barrier height, J.
    pub v_b_tuned: f64,
    pub swapped: bool,
    /// Conditional spectrum pairs computed during tuning.
    pub evaluations: usize,
}

impl CnotTimings {
    /// `(t_short, t_long)`.
    pub fn ordered(&self) -> (f64, f64) {
        if self.swapped {
            (self.t_not1, self.t_not0)
        } else {
            (self.t_not0, self.t_not1)
        }
    }

    /// Largest relative violation of `t_cnot/t_short = 2n`,
    /// `t_cnot/t_long = 2n − 1` and `|n_real − n|`.
    pub fn consistency_error(&self) -> f64 {
        let (short, long) = self.ordered();
        let n = self.n as f64;
        let even = (self.t_cnot / short - 2.0 * n).abs() / (2.0 * n);
        let odd = (self.t_cnot / long - (2.0 * n - 1.0)).abs() / (2.0 * n - 1.0);
        even.max(odd).max((self.n_real - n).abs())
    }
}

/// Densities `|⟨r|0⟩|²` and `|⟨r|1⟩|²` of an unperturbed control dot.
pub fn control_densities(
    dw: &DoubleWellParams,
    grid: Grid,
    opts: &SolverOptions,
) -> Result<(ScalarField, ScalarField)> {
    let spectrum = lowest_states(&double_well_potential(dw, grid), dw.m_eff, opts)?;
    let (zero, one) = logical_basis(&spectrum.states[0], &spectrum.states[1])?;
    Ok((zero.density(), one.density()))
}

/// Fraction of a density on the `x > 0` side (centre column split evenly).
fn right_weight(density: &ScalarField) -> f64 {
    let g = density.grid();
    let mid = (g.nx() - 1) / 2;
    let mut p = 0.0;
    for j in 0..g.ny() {
        p += 0.5 * density.at(mid, j);
        for i in mid + 1..g.nx() {
            p += density.at(i, j);
        }
    }
    p * g.cell_area()
}

fn target_potential(dw: &DoubleWellParams, coulomb: &ScalarField) -> Result<ScalarField> {
    double_well_potential(dw, *coulomb.grid()).add(coulomb)
}

fn solve_target(
    dw: &DoubleWellParams,
    coulomb: &ScalarField,
    opts: &SolverOptions,
    warm: Option<&[ScalarField]>,
) -> Result<SpectrumResult> {
    let v = target_potential(dw, coulomb)?;
    let spectrum = match warm {
        Some(states) => lowest_states_from(&v, dw.m_eff, opts, states)?,
        None => lowest_states(&v, dw.m_eff, opts)?,
    };
    check_doublet(&spectrum)?;
    Ok(spectrum)
}

/// NOT duration of the target dot (on the control density's grid) while the
/// control electron sits in `control_state`.
pub fn conditional_not_duration(
    dw: &DoubleWellParams,
    geom: &CnotGeometry,
    control_state: ControlState,
    control_density: &ScalarField,
    opts: &SolverOptions,
) -> Result<f64> {
    let right = right_weight(control_density);
    let localized = match control_state {
        ControlState::Zero => right > 0.5,
        ControlState::One => right < 0.5,
    };
    if !localized {
        return Err(Error::NotLocalized(format!(
            "control density for {control_state:?} has weight {right:.4} at x > 0"
        )));
    }
    let coulomb = coulomb_field_from_density(control_density, geom, *control_density.grid())?;
    let spectrum = solve_target(dw, &coulomb, opts, None)?;
    Ok(not_duration(spectrum.eps10()))
}

/// Pulse length and half-oscillation count from the two conditional NOT
/// durations. The shorter one is taken as the even branch.
pub fn cnot_schedule(t_not0: f64, t_not1: f64) -> Result<CnotSchedule> {
    if !(t_not0 > 0.0 && t_not1 > 0.0) || !t_not0.is_finite() || !t_not1.is_finite() {
        return Err(Error::Config(format!("NOT durations must be positive, got {t_not0:e} and {t_not1:e}")));
    }
    if t_not0 == t_not1 {
        return Err(Error::NoContrast(t_not0));
    }
    let swapped = t_not1 < t_not0;
    let (short, long) = if swapped { (t_not1, t_not0) } else { (t_not0, t_not1) };
    Ok(CnotSchedule { t_cnot: short * long / (long - short), n_real: long / (2.0 * (long - short)), swapped })
}

/// Result of [`bracketed_root`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    pub evaluations: usize,
}

/// Finds `f(x) ≈ 0` (to `|f| < tol`) inside a sign-change bracket with the
/// Illinois variant of regula falsi, falling back to bisection whenever the
/// bracket fails to halve. `f(a)` and `f(b)` are supplied by the caller.
pub fn bracketed_root(
    mut f: impl FnMut(f64) -> Result<f64>,
    (mut a, mut fa): (f64, f64),
    (mut b, mut fb): (f64, f64),
    tol: f64,
    max_evaluations: usize,
) -> Result<Root> {
    if fa.abs() < tol {
        return Ok(Root { x: a, fx: fa, evaluations: 0 });
    }
    if fb.abs() < tol {
        return Ok(Root { x: b, fx: fb, evaluations: 0 });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Config("root bracket has no sign change".into()));
    }
    let mut best = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
    let mut evaluations = 0;
    let mut stale = 0;
    while evaluations < max_evaluations {
        let (lo, hi) = (a.min(b), a.max(b));
        let secant = b - fb * (b - a) / (fb - fa);
        let x = if stale < 3 && secant > lo && secant < hi { secant } else { 0.5 * (a + b) };
        if x <= lo || x >= hi {
            break;
        }
        let fx = f(x)?;
        evaluations += 1;
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
        if fx.abs() < tol {
            return Ok(Root { x, fx, evaluations });
        }
        let width = hi - lo;
        if fx.signum() == fb.signum() {
            fa *= 0.5;
        } else {
            (a, fa) = (b, fb);
        }
        (b, fb) = (x, fx);
        stale = if (b - a).abs() > 0.5 * width { stale + 1 } else { 0 };
    }
    Err(Error::TuningStalled { residual: best.1.abs(), evaluations })
}

fn timings_from(t_not0: f64, t_not1: f64, n: u64, v_b: f64, evaluations: usize) -> Result<CnotTimings> {
    let s = cnot_schedule(t_not0, t_not1)?;
    Ok(CnotTimings {
        t_not0,
        t_not1,
        t_cnot: s.t_cnot,
        n_real: s.n_real,
        n,
        v_b_tuned: v_b,
        swapped: s.swapped,
        evaluations,
    })
}

/// Tunes the barrier height inside `v_b_interval` so that the schedule's
/// `n_real` is an integer. `model` maps a barrier height to the
/// conditional NOT durations `(t_not0, t_not1)`.
///
/// The target integer is `n_real` at the interval midpoint, rounded and
/// clamped to the integers the interval can reach.
pub fn tune_with(mut model: impl FnMut(f64) -> Result<(f64, f64)>, v_b_interval: (f64, f64)) -> Result<CnotTimings> {
    let (lo, hi) = v_b_interval;
    if !(lo < hi) {
        return Err(Error::Config(format!("barrier interval must be increasing, got ({lo:e}, {hi:e})")));
    }
    let mut evaluations = 0;
    let mut eval = |v_b: f64| -> Result<(f64, f64, f64)> {
        let (t0, t1) = model(v_b)?;
        evaluations += 1;
        Ok((t0, t1, cnot_schedule(t0, t1)?.n_real))
    };
    let at_lo = eval(lo)?;
    let at_hi = eval(hi)?;
    for (v_b, (t0, t1, n)) in [(lo, at_lo), (hi, at_hi)] {
        if (n - n.round()).abs() < TUNING_TOLERANCE {
            return timings_from(t0, t1, n.round() as u64, v_b, 2);
        }
    }
    let (n_lo, n_hi) = (at_lo.2, at_hi.2);
    let (first, last) = (n_lo.min(n_hi).ceil(), n_lo.max(n_hi).floor());
    if first > last || last < 1.0 {
        return Err(Error::NoSignChange { vb_lo: lo, vb_hi: hi, n_lo, n_hi });
    }
    let mid = 0.5 * (lo + hi);
    let at_mid = eval(mid)?;
    let target = at_mid.2.round().clamp(first.max(1.0), last);

    let mut seen = vec![(lo, at_lo), (mid, at_mid), (hi, at_hi)];
    let (fa, fm, fb) = (n_lo - target, at_mid.2 - target, n_hi - target);
    let root = if fm.abs() < TUNING_TOLERANCE {
        Root { x: mid, fx: fm, evaluations: 0 }
    } else {
        let (a, b) = if fa.signum() != fm.signum() { ((lo, fa), (mid, fm)) } else { ((mid, fm), (hi, fb)) };
        bracketed_root(
            |v_b| {
                let r = eval(v_b)?;
                seen.push((v_b, r));
                Ok(r.2 - target)
            },
            a,
            b,
            TUNING_TOLERANCE,
            MAX_TUNING_EVALUATIONS,
        )?
    };
    let (_, (t0, t1, _)) = *seen.iter().rev().find(|(v, _)| *v == root.x).expect("root was evaluated");
    timings_from(t0, t1, target as u64, root.x, evaluations)
}

/// Full tuning: every trial barrier height re-solves both conditional
/// target spectra, warm-started from the previous trial.
pub fn tune_amplitude(
    dw: &DoubleWellParams,
    geom: &CnotGeometry,
    control_densities: (&ScalarField, &ScalarField),
    v_b_interval: (f64, f64),
    opts: &SolverOptions,
) -> Result<CnotTimings> {
    let (rho0, rho1) = control_densities;
    let grid = *rho0.grid();
    let coulomb0 = coulomb_field_from_density(rho0, geom, grid)?;
    let coulomb1 = coulomb_field_from_density(rho1, geom, grid)?;
    let mut warm: [Option<Vec<ScalarField>>; 2] = [None, None];
    tune_with(
        |v_b| {
            let pulse = dw.with_barrier(v_b);
            pulse.validate()?;
            let mut durations = [0.0; 2];
            for (k, coulomb) in [&coulomb0, &coulomb1].into_iter().enumerate() {
                let s = solve_target(&pulse, coulomb, opts, warm[k].as_deref())?;
                durations[k] = not_duration(s.eps10());
                warm[k] = Some(s.states);
            }
            Ok((durations[0], durations[1]))
        },
        v_b_interval,
    )
}

/// Closed-form check of the pulse: `(identity fidelity of the even branch,
/// NOT fidelity of the odd branch)`. Unless `swapped`, the even branch is
/// control |0⟩ and the odd branch control |1⟩. Each fidelity is the worst
/// case over the two target basis states.
pub fn verify_cnot(timings: &CnotTimings) -> (f64, f64) {
    let (short, long) = timings.ordered();
    let branch = |t_not: f64, expect_flip: bool| {
        let dw = PI / t_not;
        [LogicalState::zero(), LogicalState::one()]
            .into_iter()
            .map(|input| {
                let out = evolve(input, 0.0, dw, timings.t_cnot);
                let expected = if expect_flip { LogicalState { c0: input.c1, c1: input.c0 } } else { input };
                out.fidelity(&expected)
            })
            .fold(1.0, f64::min)
    };
    (branch(short, false), branch(long, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::make_grid;
    use crate::potentials::DoubleWellParams;

    fn grid() -> Grid {
        make_grid(30.0, 20.0, 1.0).unwrap()
    }

    fn timings(t_not0: f64, t_not1: f64) -> CnotTimings {
        let s = cnot_schedule(t_not0, t_not1).unwrap();
        CnotTimings {
            t_not0,
            t_not1,
            t_cnot: s.t_cnot,
            n_real: s.n_real,
            n: s.n_real.round() as u64,
            v_b_tuned: 0.0,
            swapped: s.swapped,
            evaluations: 0,
        }
    }

    #[test]
    fn schedule_arithmetic() {
        let s = cnot_schedule(1.0, 4.0 / 3.0).unwrap();
        assert!((s.t_cnot - 4.0).abs() < 1e-14 && (s.n_real - 2.0).abs() < 1e-14 && !s.swapped);
        let s = cnot_schedule(1.0, 1.25).unwrap();
        assert!((s.t_cnot - 5.0).abs() < 1e-14 && (s.n_real - 2.5).abs() < 1e-14);
        assert!(matches!(cnot_schedule(1.0, 1.0), Err(Error::NoContrast(_))));
        let s = cnot_schedule(4.0 / 3.0, 1.0).unwrap();
        assert!(s.swapped && (s.n_real - 2.0).abs() < 1e-14);
    }

    #[test]
    fn verify_integer_and_half_integer_schedules() {
        let (id, not) = verify_cnot(&timings(1.0, 4.0 / 3.0));
        assert!((id - 1.0).abs() < 1e-10 && (not - 1.0).abs() < 1e-10);
        assert!(timings(1.0, 4.0 / 3.0).consistency_error() < 1e-12);
        let (id, _) = verify_cnot(&timings(1.0, 1.25));
        assert!(id < 1e-10);
    }

    #[test]
    fn linear_model_tunes_to_analytic_root() {
        // n_real(v) = 2.3 + 0.8 v with t_not0 = 1: t_not1 = 2n/(2n - 1)
        let model = |v: f64| {
            let n = 2.3 + 0.8 * v;
            Ok((1.0, 2.0 * n / (2.0 * n - 1.0)))
        };
        let t = tune_with(model, (0.0, 1.0)).unwrap();
        assert_eq!(t.n, 3);
        assert!((t.v_b_tuned - 0.7 / 0.8).abs() < 1e-6);
        assert!((t.n_real - 3.0).abs() < TUNING_TOLERANCE);
        assert!(t.consistency_error() < 1e-6);
    }

    #[test]
    fn nonlinear_model_tunes() {
        let model = |v: f64| {
            let n = 40.0 + 25.0 * (v * v * v) + 3.0 * v.sin();
            Ok((2e-9, 2e-9 * 2.0 * n / (2.0 * n - 1.0)))
        };
        let t = tune_with(model, (0.2, 1.3)).unwrap();
        assert!((t.n_real - t.n as f64).abs() < TUNING_TOLERANCE);
        assert!(t.evaluations < 20, "{} evaluations", t.evaluations);
    }

    #[test]
    fn integer_endpoint_returns_immediately() {
        let model = |v: f64| {
            let n = 2.0 + v;
            Ok((1.0, 2.0 * n / (2.0 * n - 1.0)))
        };
        let t = tune_with(model, (0.0, 0.5)).unwrap();
        assert_eq!((t.n, t.v_b_tuned, t.evaluations), (2, 0.0, 2));
    }

    #[test]
    fn interval_without_integer_is_rejected() {
        let model = |v: f64| {
            let n = 2.1 + 0.5 * v;
            Ok((1.0, 2.0 * n / (2.0 * n - 1.0)))
        };
        assert!(matches!(tune_with(model, (0.0, 1.0)), Err(Error::NoSignChange { .. })));
    }

    #[test]
    fn conditional_durations_differ_and_decouple_far_away() {
        let dw = DoubleWellParams::gaas(0.2).unwrap();
        let opts = SolverOptions { tol: 1e-10, ..Default::default() };
        let (rho0, rho1) = control_densities(&dw, grid(), &opts).unwrap();
        let near = CnotGeometry::new(60.0, 15.0, 12.8).unwrap();
        let t0 = conditional_not_duration(&dw, &near, ControlState::Zero, &rho0, &opts).unwrap();
        let t1 = conditional_not_duration(&dw, &near, ControlState::One, &rho1, &opts).unwrap();
        assert!(t0 != t1);

        let bare = lowest_states(&double_well_potential(&dw, grid()), dw.m_eff, &opts).unwrap();
        let t_bare = not_duration(bare.eps10());
        let far = CnotGeometry::new(600.0, 15.0, 12.8).unwrap();
        for (state, rho) in [(ControlState::Zero, &rho0), (ControlState::One, &rho1)] {
            let t = conditional_not_duration(&dw, &far, state, rho, &opts).unwrap();
            assert!((t - t_bare).abs() / t_bare < 1e-3);
        }
        assert!(matches!(
            conditional_not_duration(&dw, &near, ControlState::One, &rho0, &opts),
            Err(Error::NotLocalized(_))
        ));
    }

    #[test]
    fn control_field_keeps_target_mirror_symmetric() {
        let dw = DoubleWellParams::gaas(0.2).unwrap();
        let (rho0, rho1) = control_densities(&dw, grid(), &SolverOptions::default()).unwrap();
        let geom = CnotGeometry::new(60.0, 15.0, 12.8).unwrap();
        for rho in [&rho0, &rho1] {
            let v = target_potential(&dw, &coulomb_field_from_density(rho, &geom, grid()).unwrap()).unwrap();
            assert!(v.x_asymmetry() < 1e-10);
        }
    }
}

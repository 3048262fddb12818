//! End-to-end pipeline for one parameter point and for a whole sweep.

use qdot_core::{
    characterize, double_well_potential, logical_basis, lowest_states, rate_breakdown, tune_amplitude, verify_cnot,
    CnotTimings, Mechanism, QubitCharacterization, RateBreakdown, SpectrumResult,
};
use rayon::prelude::*;

use crate::config::{RunConfig, SweepParameter};

/// Lowest fidelity accepted from a tuned CNOT pulse.
pub const MIN_CNOT_FIDELITY: f64 = 0.999;
/// Largest violation accepted in the CNOT schedule identities.
pub const MAX_SCHEDULE_ERROR: f64 = 1e-6;

/// One sweep point. Fields stay `None` when the stage that fills them was
/// not run or failed; `error` then says why.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepRow {
    pub index: usize,
    pub w: f64,
    /// Dot-centre separation used for the CNOT columns, nm.
    pub big_r_nm: Option<f64>,
    pub r_nm: Option<f64>,
    pub eps10_j: Option<f64>,
    pub t_not_s: Option<f64>,
    pub t_not0_s: Option<f64>,
    pub t_not1_s: Option<f64>,
    pub t_cnot_s: Option<f64>,
    pub n_real: Option<f64>,
    pub n: Option<u64>,
    pub v_b_tuned_j: Option<f64>,
    pub fidelity_identity: Option<f64>,
    pub fidelity_not: Option<f64>,
    pub w_photon: Option<f64>,
    pub w_photon_bound: Option<f64>,
    pub w_da: Option<f64>,
    pub w_pa_t: Option<f64>,
    pub w_pa_l: Option<f64>,
    pub total: Option<f64>,
    pub dominant: Option<Mechanism>,
    pub solver_iterations: Option<usize>,
    pub quadrature_nodes: Option<usize>,
    /// Relative change of the phonon rates when the quadrature is doubled.
    pub quadrature_change: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

/// Solve, characterize and compute rates at barrier width `w`.
pub fn analyze_qubit(
    cfg: &RunConfig,
    w: f64,
) -> qdot_core::Result<(SpectrumResult, QubitCharacterization, RateBreakdown)> {
    let dw = cfg.well_at(w);
    let spectrum = lowest_states(&double_well_potential(&dw, cfg.grid()), dw.m_eff, &cfg.solver)?;
    let qubit = characterize(&spectrum)?;
    let rates = rate_breakdown(&spectrum, &cfg.materials, qubit.r, cfg.quadrature, cfg.eq57)?;
    Ok((spectrum, qubit, rates))
}

/// CNOT tuning for a control/target pair of identical dots described by
/// `spectrum` (the control's unperturbed states) at separation `big_r_nm`.
pub fn analyze_cnot(
    cfg: &RunConfig,
    w: f64,
    spectrum: &SpectrumResult,
    r_nm: f64,
    big_r_nm: f64,
) -> qdot_core::Result<(CnotTimings, (f64, f64))> {
    let dw = cfg.well_at(w);
    let (zero, one) = logical_basis(&spectrum.states[0], &spectrum.states[1])?;
    let geom = cfg.geometry(big_r_nm, r_nm)?;
    let interval = (cfg.pulse_interval.0 * dw.v_b, cfg.pulse_interval.1 * dw.v_b);
    let timings = tune_amplitude(&dw, &geom, (&zero.density(), &one.density()), interval, &cfg.cnot_solver())?;
    Ok((timings, verify_cnot(&timings)))
}

/// Runs the full pipeline for one point and records any failure in the row.
pub fn run_point(cfg: &RunConfig, index: usize, w: f64, big_r_nm: Option<f64>) -> SweepRow {
    let mut row = SweepRow { index, w, big_r_nm, ..Default::default() };
    let (spectrum, qubit, rates) = match analyze_qubit(cfg, w) {
        Ok(v) => v,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.r_nm = Some(qubit.r);
    row.eps10_j = Some(qubit.eps10);
    row.t_not_s = Some(qubit.t_not);
    row.solver_iterations = Some(spectrum.iterations);
    row.quadrature_nodes = Some(cfg.quadrature.theta_nodes * cfg.quadrature.phi_nodes);
    row.quadrature_change = Some(rates.quadrature_change);
    row.w_photon = Some(rates.w_photon);
    row.w_photon_bound = Some(rates.w_photon_bound);
    row.w_da = Some(rates.w_da);
    row.w_pa_t = Some(rates.w_pa_t);
    row.w_pa_l = Some(rates.w_pa_l);
    row.total = Some(rates.total);
    row.dominant = Some(rates.dominant);

    let mut problems = Vec::new();
    if rates.w_photon > rates.w_photon_bound {
        problems.push(format!("photon rate {:e} exceeds its bound {:e}", rates.w_photon, rates.w_photon_bound));
    }
    if [rates.w_photon, rates.w_da, rates.w_pa_t, rates.w_pa_l].iter().any(|r| !(*r >= 0.0)) {
        problems.push("negative or undefined rate".to_string());
    }

    if let Some(big_r) = big_r_nm {
        match analyze_cnot(cfg, w, &spectrum, qubit.r, big_r) {
            Ok((t, (id, not))) => {
                row.t_not0_s = Some(t.t_not0);
                row.t_not1_s = Some(t.t_not1);
                row.t_cnot_s = Some(t.t_cnot);
                row.n_real = Some(t.n_real);
                row.n = Some(t.n);
                row.v_b_tuned_j = Some(t.v_b_tuned);
                row.fidelity_identity = Some(id);
                row.fidelity_not = Some(not);
                if t.consistency_error() > MAX_SCHEDULE_ERROR {
                    problems.push(format!("CNOT schedule identities violated by {:e}", t.consistency_error()));
                }
                if id.min(not) < MIN_CNOT_FIDELITY {
                    problems.push(format!("CNOT fidelities ({id:.6}, {not:.6}) below {MIN_CNOT_FIDELITY}"));
                }
            }
            Err(e) => problems.push(format!("cnot: {e}")),
        }
    }
    if !problems.is_empty() {
        row.error = Some(problems.join("; "));
    }
    row
}

/// `(w, R)` of every sweep point, in output order.
pub fn sweep_points(cfg: &RunConfig) -> Vec<(f64, Option<f64>)> {
    let values = cfg.sweep.values();
    match cfg.sweep.parameter {
        SweepParameter::W => {
            let big_r = cfg.separations_nm.first().copied();
            values.into_iter().map(|w| (w, big_r)).collect()
        }
        SweepParameter::BigR => {
            cfg.curve_widths().into_iter().flat_map(|w| values.iter().map(move |&r| (w, Some(r)))).collect()
        }
    }
}

/// Every sweep point, evaluated concurrently on the current rayon pool;
/// rows come back in sweep order.
pub fn run_sweep(cfg: &RunConfig) -> Vec<SweepRow> {
    sweep_points(cfg).into_par_iter().enumerate().map(|(index, (w, big_r))| run_point(cfg, index, w, big_r)).collect()
}

//! Adiabatic validity criteria and runtime bounds.
//!
//! Derivatives denoted by a dot are taken with respect to `s = t / tau`.
//! The `>>` of the adiabatic conditions is never enforced here: every
//! function returns the bound and callers pick a safety factor.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{eig_nonhermitian, ComplexSquareMatrix, EigenSystem, LinalgError};
use crate::model::{grid, total_hamiltonian, AnnealSpec, Schedule};
use crate::reduction::TwoLevelParams;
use crate::spectrum::{
    minimize_sampled, GapTrace, SpectrumError, CROSSOVER_TOLERANCE, DEFAULT_GRID_POINTS, EP_GAP_TOLERANCE,
};

/// Suggested margin for the `>>` inequalities.
pub const DEFAULT_SAFETY_FACTOR: f64 = 10.0;

const DEGENERACY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdiabaticError {
    #[error("spectrum is degenerate at s = {s} (gap {gap:e})")]
    DegenerateSpectrum { s: f64, gap: f64 },
    #[error("minimum gap {0:e} vanishes; an exceptional point lies on the path")]
    ZeroGap(f64),
    #[error("this criterion needs a Hermitian schedule (f2 = 0), found max |f2| = {0}")]
    NonHermitianSchedule(f64),
    #[error("delta_qubit must be finite and non-negative, got {0}")]
    InvalidDeltaQubit(f64),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Terms `|<psi_m| dH/dt |psi_g>| / |E_m - E_g|^2` for every `m != g`,
/// ordered by eigenvalue, with `dH/dt = (1/tau) dH/ds`.
pub fn criterion_terms(spec: &AnnealSpec, s: f64) -> Result<Vec<f64>, AdiabaticError> {
    let h = total_hamiltonian(spec, s);
    let es = eig_nonhermitian(&h).map_err(|source| SpectrumError::Eigen { s, source })?;
    let dh = spec.hamiltonian_derivative(s).scale(C64::new(1.0 / spec.tau(), 0.0));
    let floor = DEGENERACY_TOLERANCE * h.max_norm();
    (1..es.dim())
        .map(|m| {
            let gap = (es.eigenvalues[m] - es.eigenvalues[0]).norm();
            if gap <= floor {
                return Err(AdiabaticError::DegenerateSpectrum { s, gap });
            }
            Ok(es.matrix_element(&dh, m, 0).norm() / (gap * gap))
        })
        .collect()
}

/// Left side of the general adiabatic condition at `s`; small means
/// adiabatic.
pub fn hermitian_criterion_lhs(spec: &AnnealSpec, s: f64) -> Result<f64, AdiabaticError> {
    Ok(criterion_terms(spec, s)?.iter().sum())
}

/// Runtime estimate `max|<psi_e|dH/ds|psi_g>| / min|E_e - E_g|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuntimeEstimate {
    /// Maximum of the numerator over the grid divided by the squared
    /// minimum gap (the primary form).
    pub separate_extrema: f64,
    /// Maximum over the grid of the pointwise ratio.
    pub ratio_max: f64,
    pub max_matrix_element: f64,
    pub min_gap: f64,
}

/// Hermitian runtime estimate over the points of `trace`.
pub fn min_time_hermitian(spec: &AnnealSpec, trace: &GapTrace) -> Result<RuntimeEstimate, AdiabaticError> {
    let f2 = spec.schedule().max_nonhermitian_weight();
    if f2 != 0.0 {
        return Err(AdiabaticError::NonHermitianSchedule(f2));
    }
    let rows: Vec<(f64, f64)> = trace
        .snapshots
        .par_iter()
        .map(|snap| {
            let s = snap.s;
            let h = total_hamiltonian(spec, s);
            let es = eig_nonhermitian(&h).map_err(|source| SpectrumError::Eigen { s, source })?;
            let element = excited_element(&es, &spec.hamiltonian_derivative(s), h.max_norm());
            Ok::<_, AdiabaticError>((element, snap.gap))
        })
        .collect::<Result<_, _>>()?;
    let max_matrix_element = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let g_m = trace.g_m;
    if g_m <= 0.0 {
        return Err(AdiabaticError::ZeroGap(g_m));
    }
    let ratio_max = rows
        .iter()
        .map(|&(e, g)| if g > 0.0 { e / (g * g) } else { f64::INFINITY })
        .fold(0.0, f64::max);
    Ok(RuntimeEstimate {
        separate_extrema: max_matrix_element / (g_m * g_m),
        ratio_max,
        max_matrix_element,
        min_gap: g_m,
    })
}

/// `|<psi_e|dh|psi_g>|` where a degenerate first excited level contributes
/// the norm over its whole eigenspace, which does not depend on the basis
/// chosen inside it.
fn excited_element(es: &EigenSystem, dh: &ComplexSquareMatrix, scale: f64) -> f64 {
    let e1 = es.eigenvalues[1];
    (1..es.dim())
        .filter(|&m| (es.eigenvalues[m] - e1).norm() <= DEGENERACY_TOLERANCE * scale)
        .map(|m| es.matrix_element(dh, m, 0).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Non-Hermitian runtime bound and the admissible window for `tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdiabaticBudget {
    /// `sin(alpha) max|J dg~/ds - g~ dJ/ds| / |dE|_min^3`.
    pub tau_min: f64,
    /// `1 / delta_qubit` when a level width is supplied.
    pub tau_max: Option<f64>,
    pub delta_qubit: Option<f64>,
    pub feasible: bool,
    /// `|dE|_min` of the two-level model along the schedule.
    pub min_gap: f64,
    /// Where that minimum sits.
    pub s_min_gap: f64,
    /// `max|J dg~/ds - g~ dJ/ds|`.
    pub max_cross_derivative: f64,
    /// The `sin(alpha)` entering `tau_min`: `2^(-n/2)` for `n >= 2`,
    /// otherwise the measured value.
    pub sin_alpha_used: f64,
    pub sin_alpha_measured: f64,
    /// `max|J dg~/ds - g~ dJ/ds| sin(alpha) / |dE|_min` with the measured
    /// `sin(alpha)`.
    pub matrix_element_estimate: f64,
    /// `max |<psi~_e| dH~/ds |psi_g>|` from the bi-orthonormal eigensystem of
    /// the effective Hamiltonian on the grid.
    pub matrix_element_measured: f64,
}

impl AdiabaticBudget {
    /// A bare window from a known `tau_min`.
    pub fn window(tau_min: f64, delta_qubit: f64) -> Result<Self, AdiabaticError> {
        let budget = Self {
            tau_min,
            tau_max: None,
            delta_qubit: None,
            feasible: true,
            min_gap: f64::NAN,
            s_min_gap: f64::NAN,
            max_cross_derivative: f64::NAN,
            sin_alpha_used: f64::NAN,
            sin_alpha_measured: f64::NAN,
            matrix_element_estimate: f64::NAN,
            matrix_element_measured: f64::NAN,
        };
        budget.with_delta_qubit(delta_qubit)
    }

    /// Sets `tau_max = 1 / delta_qubit` and the feasibility flag.
    pub fn with_delta_qubit(mut self, delta_qubit: f64) -> Result<Self, AdiabaticError> {
        if !(delta_qubit >= 0.0 && delta_qubit.is_finite()) {
            return Err(AdiabaticError::InvalidDeltaQubit(delta_qubit));
        }
        let tau_max = 1.0 / delta_qubit;
        self.delta_qubit = Some(delta_qubit);
        self.tau_max = Some(tau_max);
        self.feasible = self.tau_min < tau_max;
        Ok(self)
    }
}

/// Runtime bound of the spec's schedule for the reduced model `params`,
/// using the spec's qubit count for the `2^(-n/2)` factor.
pub fn min_time_nonhermitian(spec: &AnnealSpec, params: &TwoLevelParams) -> Result<AdiabaticBudget, AdiabaticError> {
    runtime_bound(spec.schedule(), params, spec.n_qubits())
}

/// `2^(-n/2) max|J dg~/ds - g~ dJ/ds| / |dE|_min^3` for the two-level model
/// along `schedule`, with `n = n_qubits`.
///
/// For `n_qubits < 2` the measured `sin(alpha)` of `params` replaces
/// `2^(-n/2)`.
pub fn runtime_bound(
    schedule: &Schedule,
    params: &TwoLevelParams,
    n_qubits: u32,
) -> Result<AdiabaticBudget, AdiabaticError> {
    let points: Vec<f64> = grid(DEFAULT_GRID_POINTS).collect();
    let samples: Vec<(f64, f64)> = points.iter().map(|&s| (s, params.gap(schedule, s))).collect();
    let crossover = minimize_sampled(
        &samples,
        |s| Ok::<_, AdiabaticError>(params.gap(schedule, s)),
        CROSSOVER_TOLERANCE,
    )?;
    let min_gap = crossover.g_m;
    if min_gap <= EP_GAP_TOLERANCE * (params.r0_norm() + params.r1_norm()) {
        return Err(AdiabaticError::ZeroGap(min_gap));
    }

    let max_cross_derivative = points
        .iter()
        .map(|&s| {
            let j = C64::new(params.j(schedule, s), 0.0);
            let j_dot = C64::new(params.j_dot(schedule, s), 0.0);
            (j * params.g_tilde_dot(schedule, s) - params.g_tilde(schedule, s) * j_dot).norm()
        })
        .fold(0.0, f64::max);

    let sin_alpha_measured = params.sin_alpha();
    let sin_alpha_used = if n_qubits >= 2 {
        2f64.powf(-(n_qubits as f64) / 2.0)
    } else {
        sin_alpha_measured
    };

    let mut matrix_element_measured: f64 = 0.0;
    for &s in &points {
        let h = params.effective_hamiltonian(schedule, s);
        let es = eig_nonhermitian(&h)?;
        if es.any_defective() {
            continue;
        }
        let d = schedule.derivative(s).driver();
        let f0_dot = schedule.derivative(s).f0;
        let v = |k: usize| C64::new(f0_dot * params.r0[k], 0.0) + d * params.r1[k];
        let dh = crate::linalg::pauli::bloch([v(0), v(1), v(2)]);
        matrix_element_measured = matrix_element_measured.max(es.matrix_element(&dh, 1, 0).norm());
    }

    Ok(AdiabaticBudget {
        tau_min: sin_alpha_used * max_cross_derivative / min_gap.powi(3),
        tau_max: None,
        delta_qubit: None,
        feasible: true,
        min_gap,
        s_min_gap: crossover.s_c,
        max_cross_derivative,
        sin_alpha_used,
        sin_alpha_measured,
        matrix_element_estimate: max_cross_derivative * sin_alpha_measured / min_gap,
        matrix_element_measured,
    })
}

/// The window `tau_min << tau << 1 / delta_qubit`.
pub fn tau_window(
    spec: &AnnealSpec,
    params: &TwoLevelParams,
    delta_qubit: f64,
) -> Result<AdiabaticBudget, AdiabaticError> {
    min_time_nonhermitian(spec, params)?.with_delta_qubit(delta_qubit)
}

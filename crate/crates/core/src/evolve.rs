//! Time evolution under `i d|psi>/dt = H(t/tau) |psi>` and its adjoint
//! `-i d<psi~|/dt = <psi~| H(t/tau)`.
//!
//! Integration uses the Dormand-Prince 5(4) embedded pair with an absolute
//! per-component error tolerance. The state is never renormalized: with a
//! non-Hermitian driver the norm carries the loss.
//!
//! Adjoint states are stored as the row components `phi` with
//! `<psi~|psi> = sum_i phi_i psi_i`, so they obey `dphi/dt = i H^T phi`.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::linalg::{eig_nonhermitian, inner, norm, pair, ComplexSquareMatrix, LinalgError};
use crate::model::{AnnealSpec, ScheduleWeights};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
/// Smallest admissible step as a fraction of `tau`.
pub const MIN_STEP_FRACTION: f64 = 1e-12;
pub const DEFAULT_SAMPLES: usize = 201;
/// Guards against runs the absolute tolerance makes impractically stiff,
/// such as adjoint states with strong gain.
pub const DEFAULT_MAX_STEPS: usize = 10_000_000;

const NORMALIZATION_TOLERANCE: f64 = 1e-10;
const DEGENERACY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvolveError {
    #[error("initial state has norm {0}, expected 1")]
    NotNormalized(f64),
    #[error("state has {state} components but the Hamiltonian is {dim}x{dim}")]
    DimensionMismatch { state: usize, dim: usize },
    #[error("step size {step:e} below minimum {min_step:e} at s = {s}")]
    StepUnderflow { s: f64, step: f64, min_step: f64 },
    #[error("step budget of {steps} exhausted at s = {s}")]
    StepBudgetExceeded { s: f64, steps: usize },
    #[error("state became non-finite at s = {0}")]
    NonFiniteState(f64),
    #[error("two lowest eigenvalues have equal real part within {gap:e}; ground state is ambiguous")]
    AmbiguousGround { gap: f64 },
    #[error("target Hamiltonian is not Hermitian")]
    NonHermitianTarget,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveConfig {
    /// Absolute local error tolerance per component.
    pub tolerance: f64,
    /// Number of evenly spaced `s` values at which the norm is recorded.
    pub samples: usize,
    /// Attempted steps (accepted plus rejected) before giving up.
    pub max_steps: usize,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            samples: DEFAULT_SAMPLES,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionResult {
    /// `|psi(tau)>`, or the adjoint row components when `adjoint` is set.
    pub final_state: Vec<C64>,
    /// `(s, |state|)` on the sampling grid.
    pub norm_history: Vec<(f64, f64)>,
    pub success_probability: f64,
    /// Set when `h0` has a degenerate ground space; the probability is then
    /// the weight on the whole ground space.
    pub degenerate_target: bool,
    pub steps_taken: usize,
    pub rejected_steps: usize,
    /// Largest accepted local error estimate.
    pub max_local_error: f64,
    pub adjoint: bool,
}

impl EvolutionResult {
    pub fn final_norm(&self) -> f64 {
        norm(&self.final_state)
    }
}

/// Which vector starts the anneal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialState {
    /// Ground state of the full `H(0)`, including any `f0(0) h0` admixture.
    #[default]
    FullHamiltonian,
    /// Ground state of the driver term `(f1(0) - i f2(0)) h1` alone.
    DriverOnly,
}

/// Smallest-real-part right eigenvector of `H(0)`, unit normalized.
pub fn initial_ground_state(spec: &AnnealSpec) -> Result<Vec<C64>, EvolveError> {
    initial_state(spec, InitialState::FullHamiltonian)
}

pub fn initial_state(spec: &AnnealSpec, which: InitialState) -> Result<Vec<C64>, EvolveError> {
    let w = spec.schedule().weights(0.0);
    let w = match which {
        InitialState::FullHamiltonian => w,
        InitialState::DriverOnly => ScheduleWeights { f0: 0.0, ..w },
    };
    let h = spec.hamiltonian_from_weights(w);
    let es = eig_nonhermitian(&h)?;
    let gap = es.eigenvalues[1].re - es.eigenvalues[0].re;
    if gap <= DEGENERACY_TOLERANCE * h.max_norm() {
        return Err(EvolveError::AmbiguousGround { gap });
    }
    let mut v = es.right_vectors[0].clone();
    let n = norm(&v);
    v.iter_mut().for_each(|z| *z /= n);
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetOverlap {
    pub probability: f64,
    pub degenerate: bool,
}

/// `|<g0|psi>|^2 / <psi|psi>` for the ground state `g0` of `h0`.
///
/// If the ground space of `h0` is degenerate the weight on the whole ground
/// space is returned and `degenerate` is set.
pub fn success_probability(state: &[C64], h0: &ComplexSquareMatrix) -> Result<TargetOverlap, EvolveError> {
    if state.len() != h0.dim() {
        return Err(EvolveError::DimensionMismatch {
            state: state.len(),
            dim: h0.dim(),
        });
    }
    if !h0.is_hermitian() {
        return Err(EvolveError::NonHermitianTarget);
    }
    let es = eig_nonhermitian(h0)?;
    let threshold = DEGENERACY_TOLERANCE * h0.max_norm().max(1.0);
    let ground = es.eigenvalues[0].re;
    let members: Vec<usize> = (0..es.dim())
        .take_while(|&k| es.eigenvalues[k].re - ground <= threshold)
        .collect();
    let total = inner(state, state).re;
    if total == 0.0 {
        return Ok(TargetOverlap {
            probability: 0.0,
            degenerate: members.len() > 1,
        });
    }
    let weight: f64 = members
        .iter()
        .map(|&k| {
            let v = &es.right_vectors[k];
            inner(v, state).norm_sqr() / inner(v, v).re
        })
        .sum();
    Ok(TargetOverlap {
        probability: (weight / total).clamp(0.0, 1.0),
        degenerate: members.len() > 1,
    })
}

pub fn evolve(spec: &AnnealSpec, initial: &[C64], adjoint: bool) -> Result<EvolutionResult, EvolveError> {
    evolve_with(spec, initial, adjoint, &EvolveConfig::default())
}

pub fn evolve_with(
    spec: &AnnealSpec,
    initial: &[C64],
    adjoint: bool,
    config: &EvolveConfig,
) -> Result<EvolutionResult, EvolveError> {
    check_initial(spec, initial)?;
    let generator = Generator::new(spec, adjoint);
    let mut norm_history = Vec::with_capacity(config.samples);
    let stats = integrate(
        spec,
        |t, y, out| generator.apply(t, y, out),
        initial.to_vec(),
        config,
        |s, y| norm_history.push((s, norm(y))),
    )?;
    // the ket associated with an adjoint row vector is its conjugate
    let ket: Vec<C64> = if adjoint {
        stats.state.iter().map(|z| z.conj()).collect()
    } else {
        stats.state.clone()
    };
    let target = success_probability(&ket, spec.h0())?;
    Ok(EvolutionResult {
        final_state: stats.state,
        norm_history,
        success_probability: target.probability,
        degenerate_target: target.degenerate,
        steps_taken: stats.steps,
        rejected_steps: stats.rejected,
        max_local_error: stats.max_error,
        adjoint,
    })
}

/// Joint evolution of a right state and an adjoint row state.
#[derive(Debug, Clone, PartialEq)]
pub struct PairEvolution {
    pub right: Vec<C64>,
    pub left: Vec<C64>,
    /// `(s, <psi~|psi>)` on the sampling grid.
    pub pairing_history: Vec<(f64, C64)>,
    pub steps_taken: usize,
}

impl PairEvolution {
    /// Largest deviation of the pairing from its initial value.
    pub fn pairing_drift(&self) -> f64 {
        let start = self.pairing_history[0].1;
        self.pairing_history
            .iter()
            .map(|(_, p)| (p - start).norm())
            .fold(0.0, f64::max)
    }
}

/// Integrates `|psi>` and `<psi~|` together so the bi-orthogonal pairing
/// `<psi~(t)|psi(t)>` can be monitored on a common step sequence.
pub fn evolve_pair(
    spec: &AnnealSpec,
    right: &[C64],
    left: &[C64],
    config: &EvolveConfig,
) -> Result<PairEvolution, EvolveError> {
    check_initial(spec, right)?;
    check_initial(spec, left)?;
    let n = spec.dim();
    let forward = Generator::new(spec, false);
    let backward = Generator::new(spec, true);
    let mut y0 = right.to_vec();
    y0.extend_from_slice(left);
    let mut pairing_history = Vec::with_capacity(config.samples);
    let stats = integrate(
        spec,
        |t, y, out| {
            let (yr, yl) = y.split_at(n);
            let (or, ol) = out.split_at_mut(n);
            forward.apply(t, yr, or);
            backward.apply(t, yl, ol);
        },
        y0,
        config,
        |s, y| pairing_history.push((s, pair(&y[n..], &y[..n]))),
    )?;
    let (r, l) = stats.state.split_at(n);
    Ok(PairEvolution {
        right: r.to_vec(),
        left: l.to_vec(),
        pairing_history,
        steps_taken: stats.steps,
    })
}

fn check_initial(spec: &AnnealSpec, v: &[C64]) -> Result<(), EvolveError> {
    if v.len() != spec.dim() {
        return Err(EvolveError::DimensionMismatch {
            state: v.len(),
            dim: spec.dim(),
        });
    }
    let n = norm(v);
    if (n - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(EvolveError::NotNormalized(n));
    }
    Ok(())
}

/// Right-hand side `-i H(s) y` (or `i H(s)^T y` for the adjoint), applied
/// from the fixed operators without assembling `H(s)`.
struct Generator<'a> {
    spec: &'a AnnealSpec,
    h0: ComplexSquareMatrix,
    h1: ComplexSquareMatrix,
    adjoint: bool,
}

impl<'a> Generator<'a> {
    fn new(spec: &'a AnnealSpec, adjoint: bool) -> Self {
        let (h0, h1) = if adjoint {
            (spec.h0().transpose(), spec.h1().transpose())
        } else {
            (spec.h0().clone(), spec.h1().clone())
        };
        Self { spec, h0, h1, adjoint }
    }

    fn apply(&self, t: f64, y: &[C64], out: &mut [C64]) {
        let s = (t / self.spec.tau()).clamp(0.0, 1.0);
        let w = self.spec.schedule().weights(s);
        let driver = w.driver();
        let shift = C64::new(0.0, -w.f2 * self.spec.driver_shift().unwrap_or(0.0));
        let factor = if self.adjoint {
            C64::new(0.0, 1.0)
        } else {
            C64::new(0.0, -1.0)
        };
        let n = y.len();
        let a = self.h0.as_slice();
        let b = self.h1.as_slice();
        for i in 0..n {
            let (ra, rb) = (&a[i * n..(i + 1) * n], &b[i * n..(i + 1) * n]);
            let mut h0y = C64::new(0.0, 0.0);
            let mut h1y = C64::new(0.0, 0.0);
            for j in 0..n {
                h0y += ra[j] * y[j];
                h1y += rb[j] * y[j];
            }
            out[i] = factor * (w.f0 * h0y + driver * h1y + shift * y[i]);
        }
    }
}

struct IntegrationStats {
    state: Vec<C64>,
    steps: usize,
    rejected: usize,
    max_error: f64,
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights minus the embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn integrate<F, S>(
    spec: &AnnealSpec,
    rhs: F,
    mut y: Vec<C64>,
    config: &EvolveConfig,
    mut sample: S,
) -> Result<IntegrationStats, EvolveError>
where
    F: Fn(f64, &[C64], &mut [C64]),
    S: FnMut(f64, &[C64]),
{
    let tau = spec.tau();
    let tol = config.tolerance;
    let min_step = tau * MIN_STEP_FRACTION;
    let samples = config.samples.max(2);
    let n = y.len();
    let sample_time = |k: usize| tau * k as f64 / (samples - 1) as f64;

    let mut k: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); n]; 7];
    let mut stage = vec![C64::new(0.0, 0.0); n];
    let mut y_new = vec![C64::new(0.0, 0.0); n];

    let mut t = 0.0;
    rhs(t, &y, &mut k[0]);
    let rate = norm(&k[0]) / norm(&y).max(f64::MIN_POSITIVE);
    let mut h = if rate > 0.0 { (0.01 / rate).min(tau) } else { tau };
    let (mut steps, mut rejected, mut max_error) = (0, 0, 0.0f64);

    sample(0.0, &y);
    let mut next_sample = 1;
    while next_sample < samples {
        let target = sample_time(next_sample);
        let remaining = target - t;
        if remaining <= min_step {
            // roundoff left a sliver; the state at t stands in for target
            t = target;
            sample(t / tau, &y);
            next_sample += 1;
            continue;
        }
        if steps + rejected >= config.max_steps {
            return Err(EvolveError::StepBudgetExceeded {
                s: t / tau,
                steps: config.max_steps,
            });
        }
        let step = h.min(remaining);
        for s in 1..7 {
            for i in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                stage[i] = y[i] + step * acc;
            }
            if s == 6 {
                y_new.copy_from_slice(&stage);
            }
            let mut slope = std::mem::take(&mut k[s]);
            rhs(t + C[s] * step, &stage, &mut slope);
            k[s] = slope;
        }
        let mut err: f64 = 0.0;
        for i in 0..n {
            let mut e = C64::new(0.0, 0.0);
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            err = err.max((step * e).norm());
        }
        if !err.is_finite() || y_new.iter().any(|z| !z.is_finite()) {
            if step > min_step {
                h = step * 0.2;
                rejected += 1;
                continue;
            }
            return Err(EvolveError::NonFiniteState(t / tau));
        }
        let ratio = err / tol;
        let factor = if ratio == 0.0 {
            5.0
        } else {
            (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
        };
        if ratio <= 1.0 {
            t = if step == remaining { target } else { t + step };
            std::mem::swap(&mut y, &mut y_new);
            // first-same-as-last: the final stage is the next step's first
            k.swap(0, 6);
            steps += 1;
            max_error = max_error.max(err);
            if t == target {
                sample(t / tau, &y);
                next_sample += 1;
            }
            // a step shortened to hit a sample point says little about the
            // admissible size, so keep the larger of the two
            h = if step < h { h.max(step * factor) } else { step * factor };
        } else {
            rejected += 1;
            h = step * factor;
            if h < min_step {
                return Err(EvolveError::StepUnderflow {
                    s: t / tau,
                    step: h,
                    min_step,
                });
            }
        }
    }
    Ok(IntegrationStats {
        state: y,
        steps,
        rejected,
        max_error,
    })
}

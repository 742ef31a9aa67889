//! Problem/driver Hamiltonians, annealing schedules and the total
//! time-dependent Hamiltonian `f0(s) H0 + (f1(s) - i f2(s)) H1`.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{eig_nonhermitian, pauli, ComplexSquareMatrix, LinalgError};

/// Grid used by [`validate_schedule`].
pub const VALIDATION_GRID_POINTS: usize = 1001;
/// Operational form of `f1(0) >> f0(0)`.
pub const DOMINANCE_FACTOR: f64 = 10.0;
/// Step for centered differences of schedule weights.
pub const DERIVATIVE_STEP: f64 = 1e-6;

const COMMUTATOR_TOLERANCE: f64 = 1e-9;
const BOUNDARY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{which} is not Hermitian (deviation {deviation:e})")]
    NotHermitian { which: &'static str, deviation: f64 },
    #[error("h0 is {h0}x{h0} but h1 is {h1}x{h1}")]
    DimensionMismatch { h0: usize, h1: usize },
    #[error("dimension {0} is not a power of two")]
    NotQubitDimension(usize),
    #[error("h0 and h1 commute (commutator max entry {0:e})")]
    CommutingHamiltonians(f64),
    #[error("tau must be positive and finite, got {0}")]
    InvalidTau(f64),
    #[error("expected {expected} fields, got {actual}")]
    FieldCount { expected: usize, actual: usize },
    #[error("coupling ({i}, {j}) is invalid for {n} qubits (need i < j < n)")]
    InvalidCoupling { i: usize, j: usize, n: usize },
    #[error("coupling ({0}, {1}) appears more than once")]
    DuplicateCoupling(usize, usize),
    #[error("qubit count must be between 1 and 20, got {0}")]
    QubitCount(usize),
    #[error("sampled schedule needs at least two increasing knots spanning [0, 1]")]
    BadSamples,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Values of the three schedule weights at one `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleWeights {
    pub f0: f64,
    pub f1: f64,
    pub f2: f64,
}

impl ScheduleWeights {
    /// `f1 - i f2`, the complex driver weight.
    pub fn driver(&self) -> C64 {
        C64::new(self.f1, -self.f2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    Linear,
    CustomSampled,
    Custom,
}

type WeightFn = dyn Fn(f64) -> ScheduleWeights + Send + Sync;

/// Annealing schedule `(f0, f1, f2)` as a function of `s = t / tau`.
#[derive(Clone)]
pub enum Schedule {
    /// `f0 = s`, `f1 = 1 - s`, `f2 = delta0 (1 - s)` with `delta0` in units of `J*`.
    Linear { delta0: f64 },
    /// Piecewise-linear interpolation of tabulated weights.
    Sampled(SampledSchedule),
    /// Arbitrary closure.
    Custom(Arc<WeightFn>),
}

impl fmt::Debug for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Linear { delta0 } => f.debug_struct("Linear").field("delta0", delta0).finish(),
            Self::Sampled(s) => f.debug_tuple("Sampled").field(s).finish(),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledSchedule {
    knots: Vec<f64>,
    values: Vec<ScheduleWeights>,
}

impl SampledSchedule {
    /// Knots must be strictly increasing, start at 0 and end at 1.
    pub fn new(knots: Vec<f64>, values: Vec<ScheduleWeights>) -> Result<Self, ModelError> {
        let ok = knots.len() >= 2
            && knots.len() == values.len()
            && knots[0] == 0.0
            && *knots.last().unwrap() == 1.0
            && knots.windows(2).all(|w| w[1] > w[0]);
        if !ok {
            return Err(ModelError::BadSamples);
        }
        Ok(Self { knots, values })
    }

    fn eval(&self, s: f64) -> ScheduleWeights {
        let k = match self.knots.partition_point(|&x| x <= s) {
            0 => 0,
            p if p >= self.knots.len() => self.knots.len() - 2,
            p => p - 1,
        };
        let (a, b) = (self.knots[k], self.knots[k + 1]);
        let t = (s - a) / (b - a);
        let (va, vb) = (self.values[k], self.values[k + 1]);
        ScheduleWeights {
            f0: va.f0 + t * (vb.f0 - va.f0),
            f1: va.f1 + t * (vb.f1 - va.f1),
            f2: va.f2 + t * (vb.f2 - va.f2),
        }
    }
}

impl Schedule {
    pub fn linear(delta0: f64) -> Self {
        assert!(
            delta0 >= 0.0 && delta0.is_finite(),
            "delta0 must be finite and non-negative"
        );
        Self::Linear { delta0 }
    }

    /// Constant weights for all `s` (a frozen Hamiltonian).
    pub fn frozen(weights: ScheduleWeights) -> Self {
        Self::Sampled(SampledSchedule {
            knots: vec![0.0, 1.0],
            values: vec![weights, weights],
        })
    }

    /// Weights varying linearly from `start` at `s = 0` to `end` at `s = 1`.
    pub fn affine(start: ScheduleWeights, end: ScheduleWeights) -> Self {
        Self::Sampled(SampledSchedule {
            knots: vec![0.0, 1.0],
            values: vec![start, end],
        })
    }

    pub fn custom<F>(f: F) -> Self
    where
        F: Fn(f64) -> ScheduleWeights + Send + Sync + 'static,
    {
        Self::Custom(Arc::new(f))
    }

    pub fn kind(&self) -> ScheduleKind {
        match self {
            Self::Linear { .. } => ScheduleKind::Linear,
            Self::Sampled(_) => ScheduleKind::CustomSampled,
            Self::Custom(_) => ScheduleKind::Custom,
        }
    }

    pub fn weights(&self, s: f64) -> ScheduleWeights {
        match self {
            Self::Linear { delta0 } => ScheduleWeights {
                f0: s,
                f1: 1.0 - s,
                f2: delta0 * (1.0 - s),
            },
            Self::Sampled(table) => table.eval(s),
            Self::Custom(f) => f(s),
        }
    }

    /// `d(f0, f1, f2)/ds` by centered differences, one-sided at the ends of
    /// `[0, 1]`.
    pub fn derivative(&self, s: f64) -> ScheduleWeights {
        let h = DERIVATIVE_STEP;
        let lo = (s - h).max(0.0);
        let hi = (s + h).min(1.0);
        let a = self.weights(lo);
        let b = self.weights(hi);
        let span = hi - lo;
        ScheduleWeights {
            f0: (b.f0 - a.f0) / span,
            f1: (b.f1 - a.f1) / span,
            f2: (b.f2 - a.f2) / span,
        }
    }

    /// Largest `|f2|` on the validation grid; zero means a Hermitian anneal.
    pub fn max_nonhermitian_weight(&self) -> f64 {
        grid(VALIDATION_GRID_POINTS)
            .map(|s| self.weights(s).f2.abs())
            .fold(0.0, f64::max)
    }
}

/// `n` uniformly spaced points on `[0, 1]`, computed as `i / (n - 1)` so that
/// grids of different resolution share bit-identical points.
pub fn grid(points: usize) -> impl Iterator<Item = f64> + Clone {
    assert!(points >= 2, "grid needs at least two points");
    let last = (points - 1) as f64;
    (0..points).map(move |i| i as f64 / last)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ScheduleCondition {
    F0Monotonic,
    F1Monotonic,
    F2Monotonic,
    F0EndsAtOne,
    F1EndsAtZero,
    F2EndsAtZero,
    DriverDominance,
}

impl fmt::Display for ScheduleCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::F0Monotonic => "f0 not monotonic",
            Self::F1Monotonic => "f1 not monotonic",
            Self::F2Monotonic => "f2 not monotonic",
            Self::F0EndsAtOne => "f0(1) ≠ 1",
            Self::F1EndsAtZero => "f1(1) ≠ 0",
            Self::F2EndsAtZero => "f2(1) ≠ 0",
            Self::DriverDominance => "f1(0) < 10·f0(0)",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleViolation {
    pub condition: ScheduleCondition,
    /// First grid point where the condition fails.
    pub s: f64,
}

impl fmt::Display for ScheduleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at s = {}", self.condition, self.s)
    }
}

/// Checks the schedule invariants on a 1001-point grid. An empty result
/// means the schedule is admissible.
pub fn validate_schedule(schedule: &Schedule) -> Vec<ScheduleViolation> {
    let points: Vec<f64> = grid(VALIDATION_GRID_POINTS).collect();
    let w: Vec<ScheduleWeights> = points.iter().map(|&s| schedule.weights(s)).collect();
    let scale = w
        .iter()
        .map(|x| x.f0.abs().max(x.f1.abs()).max(x.f2.abs()))
        .fold(1.0, f64::max);
    let tol = BOUNDARY_TOLERANCE * scale;
    let mut out = Vec::new();

    let mut monotone = |cond, get: fn(&ScheduleWeights) -> f64, increasing: bool| {
        let bad = w.windows(2).position(|p| {
            let d = get(&p[1]) - get(&p[0]);
            if increasing {
                d < -tol
            } else {
                d > tol
            }
        });
        if let Some(k) = bad {
            out.push(ScheduleViolation {
                condition: cond,
                s: points[k],
            });
        }
    };
    monotone(ScheduleCondition::F0Monotonic, |x| x.f0, true);
    monotone(ScheduleCondition::F1Monotonic, |x| x.f1, false);
    monotone(ScheduleCondition::F2Monotonic, |x| x.f2, false);

    let end = w[w.len() - 1];
    if (end.f0 - 1.0).abs() > tol {
        out.push(ScheduleViolation {
            condition: ScheduleCondition::F0EndsAtOne,
            s: 1.0,
        });
    }
    if end.f1.abs() > tol {
        out.push(ScheduleViolation {
            condition: ScheduleCondition::F1EndsAtZero,
            s: 1.0,
        });
    }
    if end.f2.abs() > tol {
        out.push(ScheduleViolation {
            condition: ScheduleCondition::F2EndsAtZero,
            s: 1.0,
        });
    }
    let start = w[0];
    if start.f0 != 0.0 && start.f1 < DOMINANCE_FACTOR * start.f0 {
        out.push(ScheduleViolation {
            condition: ScheduleCondition::DriverDominance,
            s: 0.0,
        });
    }
    out
}

/// Problem Hamiltonian, driver, schedule and total time.
#[derive(Debug, Clone)]
pub struct AnnealSpec {
    h0: ComplexSquareMatrix,
    h1: ComplexSquareMatrix,
    schedule: Schedule,
    tau: f64,
    n_qubits: u32,
    driver_shift: Option<f64>,
}

impl AnnealSpec {
    /// Validates Hermiticity of both Hamiltonians, matching `2^n` dimensions,
    /// a positive `tau`, and `[h0, h1] != 0`.
    pub fn new(
        h0: ComplexSquareMatrix,
        h1: ComplexSquareMatrix,
        schedule: Schedule,
        tau: f64,
    ) -> Result<Self, ModelError> {
        let spec = Self::new_allow_commuting(h0, h1, schedule, tau)?;
        let comm = spec.h0.commutator(&spec.h1).max_norm();
        if comm <= COMMUTATOR_TOLERANCE * spec.h0.max_norm() * spec.h1.max_norm() {
            return Err(ModelError::CommutingHamiltonians(comm));
        }
        Ok(spec)
    }

    /// Same checks as [`AnnealSpec::new`] except the commutator condition,
    /// for reduced two-level models where aligned Bloch vectors
    /// (`alpha = 0`, an exact crossing) are a legitimate limit.
    pub fn new_allow_commuting(
        h0: ComplexSquareMatrix,
        h1: ComplexSquareMatrix,
        schedule: Schedule,
        tau: f64,
    ) -> Result<Self, ModelError> {
        if h0.dim() != h1.dim() {
            return Err(ModelError::DimensionMismatch {
                h0: h0.dim(),
                h1: h1.dim(),
            });
        }
        let dim = h0.dim();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(ModelError::NotQubitDimension(dim));
        }
        let h0 = h0.mark_hermitian().map_err(|e| hermitian_err("h0", e))?;
        let h1 = h1.mark_hermitian().map_err(|e| hermitian_err("h1", e))?;
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(ModelError::InvalidTau(tau));
        }
        Ok(Self {
            h0,
            h1,
            schedule,
            tau,
            n_qubits: dim.trailing_zeros(),
            driver_shift: None,
        })
    }

    /// Reduced two-level model: `h0 = J* sigma_z` and
    /// `h1 = J* (sin(alpha) sigma_x - cos(alpha) sigma_z)`, so that
    /// `cos(alpha) = -r0.r1 / (|r0||r1|)` and `|r0| = |r1| = J*`.
    pub fn two_level(j_star: f64, cos_alpha: f64, schedule: Schedule, tau: f64) -> Result<Self, ModelError> {
        let (h0, h1) = two_level_hamiltonians(j_star, cos_alpha);
        Self::new_allow_commuting(h0, h1, schedule, tau)
    }

    /// Enables the decaying-driver mode: inside the non-Hermitian term the
    /// driver is shifted by `|lambda_min(h1)|` so it is positive semidefinite.
    pub fn with_decaying_driver(mut self, enabled: bool) -> Result<Self, ModelError> {
        self.driver_shift = if enabled {
            let es = eig_nonhermitian(&self.h1)?;
            Some(es.eigenvalues[0].re.abs())
        } else {
            None
        };
        Ok(self)
    }

    pub fn with_tau(mut self, tau: f64) -> Result<Self, ModelError> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(ModelError::InvalidTau(tau));
        }
        self.tau = tau;
        Ok(self)
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn h0(&self) -> &ComplexSquareMatrix {
        &self.h0
    }

    pub fn h1(&self) -> &ComplexSquareMatrix {
        &self.h1
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn n_qubits(&self) -> u32 {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    pub fn driver_shift(&self) -> Option<f64> {
        self.driver_shift
    }

    /// `maxnorm(h0) + maxnorm(h1)`, the scale used for relative tolerances.
    pub fn energy_scale(&self) -> f64 {
        self.h0.max_norm() + self.h1.max_norm()
    }

    /// Assembles `f0 h0 + f1 h1 - i f2 (h1 + shift)` for given weights.
    pub fn hamiltonian_from_weights(&self, w: ScheduleWeights) -> ComplexSquareMatrix {
        let mut m = self.h0.scale(C64::new(w.f0, 0.0)).add_scaled(&self.h1, w.driver());
        if let Some(shift) = self.driver_shift {
            if w.f2 != 0.0 {
                let n = m.dim();
                for i in 0..n {
                    m[(i, i)] -= C64::new(0.0, w.f2 * shift);
                }
            }
        }
        m.set_hermitian_flag(w.f2 == 0.0);
        m
    }

    /// `dH/ds` from centered differences of the schedule weights.
    pub fn hamiltonian_derivative(&self, s: f64) -> ComplexSquareMatrix {
        let d = self.schedule.derivative(s);
        let mut m = self.hamiltonian_from_weights(d);
        // The shift enters linearly in f2, so the same assembly applies.
        m.set_hermitian_flag(d.f2 == 0.0);
        m
    }
}

fn hermitian_err(which: &'static str, e: LinalgError) -> ModelError {
    match e {
        LinalgError::NotHermitian { deviation } => ModelError::NotHermitian { which, deviation },
        other => ModelError::Linalg(other),
    }
}

/// `f0(s) h0 + (f1(s) - i f2(s)) h1`; Hermitian flag set iff `f2(s) = 0`.
///
/// Panics if `s` lies outside `[0, 1]`.
pub fn total_hamiltonian(spec: &AnnealSpec, s: f64) -> ComplexSquareMatrix {
    assert!((0.0..=1.0).contains(&s), "s = {s} outside [0, 1]");
    spec.hamiltonian_from_weights(spec.schedule.weights(s))
}

pub fn linear_schedule(delta0: f64) -> Schedule {
    Schedule::linear(delta0)
}

pub fn two_level_hamiltonians(j_star: f64, cos_alpha: f64) -> (ComplexSquareMatrix, ComplexSquareMatrix) {
    let c = cos_alpha.clamp(-1.0, 1.0);
    let s = (1.0 - c * c).sqrt();
    let h0 = pauli::sigma_z().scale(C64::new(j_star, 0.0));
    let h1 = pauli::bloch([
        C64::new(j_star * s, 0.0),
        C64::new(0.0, 0.0),
        C64::new(-j_star * c, 0.0),
    ]);
    (h0, h1)
}

/// `sum_i h_i Z_i + sum_(i<j) J_ij Z_i Z_j` in the computational basis.
/// Qubit 0 is the most significant bit of the basis index; `Z = diag(1, -1)`.
pub fn build_ising(
    n: usize,
    fields: &[f64],
    couplings: &[(usize, usize, f64)],
) -> Result<ComplexSquareMatrix, ModelError> {
    check_qubits(n)?;
    if fields.len() != n {
        return Err(ModelError::FieldCount {
            expected: n,
            actual: fields.len(),
        });
    }
    let mut seen = BTreeSet::new();
    for &(i, j, _) in couplings {
        if !(i < j && j < n) {
            return Err(ModelError::InvalidCoupling { i, j, n });
        }
        if !seen.insert((i, j)) {
            return Err(ModelError::DuplicateCoupling(i, j));
        }
    }
    let dim = 1usize << n;
    let z = |b: usize, q: usize| if (b >> (n - 1 - q)) & 1 == 0 { 1.0 } else { -1.0 };
    let diag: Vec<C64> = (0..dim)
        .map(|b| {
            let field: f64 = fields.iter().enumerate().map(|(q, h)| h * z(b, q)).sum();
            let coupling: f64 = couplings.iter().map(|&(i, j, c)| c * z(b, i) * z(b, j)).sum();
            C64::new(field + coupling, 0.0)
        })
        .collect();
    Ok(ComplexSquareMatrix::from_diagonal(&diag))
}

/// `-sum_i X_i`; ground state is the uniform superposition with energy `-n`.
pub fn build_transverse(n: usize) -> Result<ComplexSquareMatrix, ModelError> {
    check_qubits(n)?;
    let dim = 1usize << n;
    let mut m = ComplexSquareMatrix::zeros(dim);
    for b in 0..dim {
        for q in 0..n {
            m[(b ^ (1 << q), b)] -= C64::new(1.0, 0.0);
        }
    }
    m.set_hermitian_flag(true);
    Ok(m)
}

fn check_qubits(n: usize) -> Result<(), ModelError> {
    if (1..=20).contains(&n) {
        Ok(())
    } else {
        Err(ModelError::QubitCount(n))
    }
}

/// Fields and all-to-all couplings drawn uniformly from `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingInstance {
    pub n: usize,
    pub fields: Vec<f64>,
    pub couplings: Vec<(usize, usize, f64)>,
}

impl IsingInstance {
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fields = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let mut couplings = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                couplings.push((i, j, rng.random_range(-1.0..=1.0)));
            }
        }
        Self { n, fields, couplings }
    }

    pub fn hamiltonian(&self) -> Result<ComplexSquareMatrix, ModelError> {
        build_ising(self.n, &self.fields, &self.couplings)
    }

    /// Ising problem with a transverse-field driver.
    pub fn anneal_spec(&self, schedule: Schedule, tau: f64) -> Result<AnnealSpec, ModelError> {
        AnnealSpec::new(self.hamiltonian()?, build_transverse(self.n)?, schedule, tau)
    }
}

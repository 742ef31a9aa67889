//! Effective two-level model near the crossover.
//!
//! In an orthonormal basis `{|0>, |1>}` of the two lowest eigenvectors at
//! `s_c` every operator is compressed to `lambda 1 + X sx + Y sy + Z sz`.
//! Doing this for `h0` and `h1` separately gives `(lambda0, R0)` and
//! `(lambda1, R1)`, from which `J(s) = f0(s)|R0|`,
//! `g~(s) = (f1(s) - i f2(s))|R1|` and `cos(alpha) = -R0.R1 / (|R0||R1|)`.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::linalg::{eig_nonhermitian, fix_phase, inner, norm, pauli, ComplexSquareMatrix, DEFECT_TOLERANCE};
use crate::model::{total_hamiltonian, AnnealSpec, Schedule};
use crate::spectrum::SpectrumError;

/// Bloch vectors shorter than this fraction of `maxnorm(h0) + maxnorm(h1)`
/// are treated as zero.
const ZERO_BLOCH_TOLERANCE: f64 = 1e-12;
const DEGENERATE_SCHEDULE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReductionError {
    #[error("s = {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("lowest eigenvectors coalesce at s = {s} (residual after orthogonalization {residual:e})")]
    DefectiveAtCrossover { s: f64, residual: f64 },
    #[error("Bloch vector of {which} vanishes (|R| = {norm:e}); alpha is undefined")]
    ZeroBlochVector { which: &'static str, norm: f64 },
    #[error("gdot - jdot cos(alpha) = {0:e} vanishes; crossover undefined")]
    DegenerateSchedule(f64),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

/// Orthonormal pair spanning the two lowest eigenvectors at `s_ref`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLevelBasis {
    pub v0: Vec<C64>,
    pub v1: Vec<C64>,
    pub s_ref: f64,
}

impl TwoLevelBasis {
    /// Standard basis of a 2-dimensional space.
    pub fn standard() -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        Self {
            v0: vec![one, zero],
            v1: vec![zero, one],
            s_ref: 0.0,
        }
    }

    /// The 2x2 compression `<a|h|b>` for `a, b` in `{v0, v1}`.
    pub fn compress(&self, h: &ComplexSquareMatrix) -> [[C64; 2]; 2] {
        let h0 = h.mul_vec(&self.v0);
        let h1 = h.mul_vec(&self.v1);
        [
            [inner(&self.v0, &h0), inner(&self.v0, &h1)],
            [inner(&self.v1, &h0), inner(&self.v1, &h1)],
        ]
    }
}

/// Pauli coefficients of a compressed operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliCoefficients {
    pub lambda: C64,
    pub x: C64,
    pub y: C64,
    pub z: C64,
}

impl PauliCoefficients {
    /// `lambda 1 + X sx + Y sy + Z sz`
    pub fn reassemble(&self) -> ComplexSquareMatrix {
        pauli::bloch([self.x, self.y, self.z]).add_scaled(&ComplexSquareMatrix::identity(2), self.lambda)
    }
}

/// Builds the crossover basis from the two lowest right eigenvectors of the
/// total Hamiltonian at `s_c`: the ground vector is kept, the excited one is
/// orthogonalized against it, and both get the phase convention.
pub fn build_crossover_basis(spec: &AnnealSpec, s_c: f64) -> Result<TwoLevelBasis, ReductionError> {
    if !(0.0..=1.0).contains(&s_c) {
        return Err(ReductionError::OutOfRange(s_c));
    }
    let h = total_hamiltonian(spec, s_c);
    let es = eig_nonhermitian(&h).map_err(|source| SpectrumError::Eigen { s: s_c, source })?;
    let mut v0 = es.right_vectors[0].clone();
    let n0 = norm(&v0);
    v0.iter_mut().for_each(|z| *z /= n0);
    let mut v1 = es.right_vectors[1].clone();
    let n1 = norm(&v1);
    v1.iter_mut().for_each(|z| *z /= n1);
    let c = inner(&v0, &v1);
    for (a, b) in v1.iter_mut().zip(&v0) {
        *a -= c * b;
    }
    let residual = norm(&v1);
    if residual < DEFECT_TOLERANCE || es.defect_flags[0] || es.defect_flags[1] {
        return Err(ReductionError::DefectiveAtCrossover { s: s_c, residual });
    }
    v1.iter_mut().for_each(|z| *z /= residual);
    fix_phase(&mut v0);
    fix_phase(&mut v1);
    Ok(TwoLevelBasis { v0, v1, s_ref: s_c })
}

pub fn project_effective(h: &ComplexSquareMatrix, basis: &TwoLevelBasis) -> PauliCoefficients {
    assert_eq!(h.dim(), basis.v0.len(), "basis dimension mismatch");
    let [[a00, a01], [a10, a11]] = basis.compress(h);
    let half = 0.5;
    PauliCoefficients {
        lambda: (a00 + a11) * half,
        x: (a01 + a10) * half,
        y: C64::new(0.0, 0.5) * (a01 - a10),
        z: (a00 - a11) * half,
    }
}

/// Parameters of the effective two-level Hamiltonian
/// `lambda(s) + f0(s) R0.sigma + (f1(s) - i f2(s)) R1.sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelParams {
    pub lambda0: f64,
    pub lambda1: f64,
    pub r0: [f64; 3],
    pub r1: [f64; 3],
    /// In `[0, pi]`.
    pub alpha: f64,
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn length(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

impl TwoLevelParams {
    /// Derives `alpha` from the Bloch vectors.
    pub fn from_vectors(lambda0: f64, lambda1: f64, r0: [f64; 3], r1: [f64; 3]) -> Self {
        let cos = (-dot(&r0, &r1) / (length(&r0) * length(&r1))).clamp(-1.0, 1.0);
        Self {
            lambda0,
            lambda1,
            r0,
            r1,
            alpha: cos.acos(),
        }
    }

    /// The reduced model used by [`AnnealSpec::two_level`]:
    /// `R0 = J* (0, 0, 1)`, `R1 = J* (sin(alpha), 0, -cos(alpha))`.
    pub fn symmetric(j_star: f64, cos_alpha: f64) -> Self {
        let c = cos_alpha.clamp(-1.0, 1.0);
        let s = (1.0 - c * c).sqrt();
        Self {
            lambda0: 0.0,
            lambda1: 0.0,
            r0: [0.0, 0.0, j_star],
            r1: [j_star * s, 0.0, -j_star * c],
            alpha: c.acos(),
        }
    }

    pub fn cos_alpha(&self) -> f64 {
        self.alpha.cos()
    }

    pub fn sin_alpha(&self) -> f64 {
        self.alpha.sin()
    }

    pub fn r0_norm(&self) -> f64 {
        length(&self.r0)
    }

    pub fn r1_norm(&self) -> f64 {
        length(&self.r1)
    }

    /// `J(s) = f0(s) |R0|`
    pub fn j(&self, schedule: &Schedule, s: f64) -> f64 {
        schedule.weights(s).f0 * self.r0_norm()
    }

    /// `g~(s) = (f1(s) - i f2(s)) |R1| = g(s) - i delta(s)`
    pub fn g_tilde(&self, schedule: &Schedule, s: f64) -> C64 {
        schedule.weights(s).driver() * self.r1_norm()
    }

    /// `dJ/ds` from the schedule derivative.
    pub fn j_dot(&self, schedule: &Schedule, s: f64) -> f64 {
        schedule.derivative(s).f0 * self.r0_norm()
    }

    /// `dg~/ds` from the schedule derivative.
    pub fn g_tilde_dot(&self, schedule: &Schedule, s: f64) -> C64 {
        schedule.derivative(s).driver() * self.r1_norm()
    }

    /// Two-level gap along `schedule` at `s`.
    pub fn gap(&self, schedule: &Schedule, s: f64) -> f64 {
        let g = self.g_tilde(schedule, s);
        gap_two_level(self, self.j(schedule, s), g.re, -g.im)
    }

    /// The effective 2x2 Hamiltonian at `s`, without the `lambda` shift.
    pub fn effective_hamiltonian(&self, schedule: &Schedule, s: f64) -> ComplexSquareMatrix {
        let w = schedule.weights(s);
        let d = w.driver();
        let v = |k: usize| C64::new(w.f0 * self.r0[k], 0.0) + d * self.r1[k];
        pauli::bloch([v(0), v(1), v(2)])
    }
}

/// Projects `h0` and `h1` onto the basis and extracts the Bloch parameters.
pub fn decompose_schedule_params(spec: &AnnealSpec, basis: &TwoLevelBasis) -> Result<TwoLevelParams, ReductionError> {
    let p0 = project_effective(spec.h0(), basis);
    let p1 = project_effective(spec.h1(), basis);
    let r0 = [p0.x.re, p0.y.re, p0.z.re];
    let r1 = [p1.x.re, p1.y.re, p1.z.re];
    let scale = spec.energy_scale();
    for (which, r) in [("h0", &r0), ("h1", &r1)] {
        let len = length(r);
        if len <= ZERO_BLOCH_TOLERANCE * scale {
            return Err(ReductionError::ZeroBlochVector { which, norm: len });
        }
    }
    Ok(TwoLevelParams::from_vectors(p0.lambda.re, p1.lambda.re, r0, r1))
}

/// `|dE| = 2 |sqrt(g^2 - 2 g J cos(a) + J^2 - delta^2 - 2 i delta (g - J cos(a)))|`
pub fn gap_two_level(params: &TwoLevelParams, j: f64, g: f64, delta: f64) -> f64 {
    gap_formula(params.cos_alpha(), j, g, delta)
}

/// [`gap_two_level`] for an explicit `cos(alpha)`.
pub fn gap_formula(cos_alpha: f64, j: f64, g: f64, delta: f64) -> f64 {
    let radicand = C64::new(
        g * g - 2.0 * g * j * cos_alpha + j * j - delta * delta,
        -2.0 * delta * (g - j * cos_alpha),
    );
    2.0 * radicand.sqrt().norm()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermitianCrossover {
    pub g_c: f64,
    pub gap_min: f64,
}

/// Crossover of a Hermitian two-level path with constant slopes `gdot`,
/// `jdot`, given `J` at the crossover.
pub fn hermitian_crossover(
    params: &TwoLevelParams,
    gdot: f64,
    jdot: f64,
    j_c: f64,
) -> Result<HermitianCrossover, ReductionError> {
    let c = params.cos_alpha();
    let denom = gdot - jdot * c;
    if denom.abs() <= DEGENERATE_SCHEDULE_TOLERANCE {
        return Err(ReductionError::DegenerateSchedule(denom));
    }
    let g_c = -j_c * (jdot - gdot * c) / denom;
    let speed = (gdot * gdot - 2.0 * gdot * jdot * c + jdot * jdot).max(0.0).sqrt();
    let gap_min = speed / denom.abs() * 2.0 * j_c.abs() * params.sin_alpha();
    Ok(HermitianCrossover { g_c, gap_min })
}

/// Minimum gap `2 J* delta0 / sqrt(delta0^2 + 4 J*^2)` of the linear
/// non-Hermitian ramp in the aligned limit.
pub fn nonhermitian_min_gap(j_star: f64, delta0: f64) -> f64 {
    2.0 * j_star * delta0 / (delta0 * delta0 + 4.0 * j_star * j_star).sqrt()
}

/// Location `s* = (2 J*^2 + delta0^2) / (4 J*^2 + delta0^2)` of that minimum.
pub fn nonhermitian_min_gap_location(j_star: f64, delta0: f64) -> f64 {
    let (j2, d2) = (j_star * j_star, delta0 * delta0);
    (2.0 * j2 + d2) / (4.0 * j2 + d2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pauli::{sigma_x, sigma_z};
    use crate::model::linear_schedule;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_projects_to_identity() {
        let p = project_effective(&ComplexSquareMatrix::identity(2), &TwoLevelBasis::standard());
        assert_eq!(
            (p.lambda, p.x, p.y, p.z),
            (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0))
        );
    }

    #[test]
    fn sigma_z_projects_to_z() {
        let p = project_effective(&sigma_z(), &TwoLevelBasis::standard());
        assert_eq!(p.z, c(1.0, 0.0));
        assert_eq!(p.lambda + p.x + p.y, c(0.0, 0.0));
    }

    #[test]
    fn midpoint_hamiltonian_coefficients() {
        let h = ComplexSquareMatrix::from_rows(&[vec![c(0.5, 0.0), c(0.5, -0.25)], vec![c(0.5, -0.25), c(-0.5, 0.0)]])
            .unwrap();
        let p = project_effective(&h, &TwoLevelBasis::standard());
        assert_eq!(p.lambda, c(0.0, 0.0));
        assert_eq!(p.x, c(0.5, -0.25));
        assert_eq!(p.y, c(0.0, 0.0));
        assert_eq!(p.z, c(0.5, 0.0));
        assert_eq!(p.reassemble(), h);
    }

    #[test]
    fn orthogonal_pauli_axes() {
        let spec = AnnealSpec::new(sigma_z(), sigma_x(), linear_schedule(0.0), 1.0).unwrap();
        let params = decompose_schedule_params(&spec, &TwoLevelBasis::standard()).unwrap();
        assert_eq!(params.r0, [0.0, 0.0, 1.0]);
        assert_eq!(params.r1, [1.0, 0.0, 0.0]);
        assert!((params.alpha - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn anti_aligned_axes_give_alpha_zero() {
        let minus_z = sigma_z().scale(c(-1.0, 0.0));
        let spec = AnnealSpec::new_allow_commuting(sigma_z(), minus_z, linear_schedule(0.0), 1.0).unwrap();
        let params = decompose_schedule_params(&spec, &TwoLevelBasis::standard()).unwrap();
        assert_eq!(params.cos_alpha(), 1.0);
        assert_eq!(params.alpha, 0.0);
    }

    #[test]
    fn zero_driver_is_rejected() {
        let zero = ComplexSquareMatrix::zeros(2);
        let spec = AnnealSpec::new_allow_commuting(sigma_z(), zero, linear_schedule(0.0), 1.0).unwrap();
        assert!(matches!(
            decompose_schedule_params(&spec, &TwoLevelBasis::standard()),
            Err(ReductionError::ZeroBlochVector { which: "h1", .. })
        ));
    }

    #[test]
    fn two_by_two_basis_spans_eigenvectors() {
        let spec = AnnealSpec::two_level(1.0, 0.3, linear_schedule(0.0), 1.0).unwrap();
        let basis = build_crossover_basis(&spec, 0.4).unwrap();
        let h = total_hamiltonian(&spec, 0.4);
        let es = eig_nonhermitian(&h).unwrap();
        for (v, e) in [(&basis.v0, es.eigenvalues[0]), (&basis.v1, es.eigenvalues[1])] {
            let hv = h.mul_vec(v);
            let res: f64 = hv.iter().zip(v).map(|(a, b)| (a - e * b).norm_sqr()).sum();
            assert!(res.sqrt() < 1e-12);
        }
        assert!(inner(&basis.v0, &basis.v1).norm() < 1e-14);
    }

    #[test]
    fn basis_at_exceptional_point_is_defective() {
        use crate::model::ScheduleWeights;
        let w = ScheduleWeights {
            f0: 1.0,
            f1: 0.8,
            f2: 0.6,
        };
        let spec = AnnealSpec::two_level(1.0, 0.8, Schedule::frozen(w), 1.0).unwrap();
        assert!(matches!(
            build_crossover_basis(&spec, 0.5),
            Err(ReductionError::DefectiveAtCrossover { .. })
        ));
    }

    #[test]
    fn gap_formula_limits() {
        let aligned = TwoLevelParams::symmetric(1.0, 1.0);
        assert_eq!(gap_two_level(&aligned, 0.7, 0.7, 0.0), 0.0);
        let (g, j, d): (f64, f64, f64) = (0.3, 0.8, 0.25);
        let expected = 2.0 * ((g - j) * (g - j) + d * d).sqrt();
        assert!((gap_two_level(&aligned, j, g, d) - expected).abs() < 1e-15);
        // exceptional point: g = J cos(a), g^2 + delta^2 = J^2
        let p = TwoLevelParams::symmetric(1.0, 0.8);
        assert!(gap_two_level(&p, 1.0, 0.8, 0.6) < 1e-7);
    }

    #[test]
    fn symmetric_crossover_example() {
        let p = TwoLevelParams::symmetric(1.0, 0.5);
        let x = hermitian_crossover(&p, -1.0, 1.0, 0.5).unwrap();
        assert!((x.g_c - 0.5).abs() < 1e-15);
        assert!((x.gap_min - 1.0).abs() < 1e-14);
        let flat = TwoLevelParams::symmetric(1.0, 1.0);
        assert!(matches!(
            hermitian_crossover(&flat, 1.0, 1.0, 0.5),
            Err(ReductionError::DegenerateSchedule(_))
        ));
    }

    #[test]
    fn closed_form_min_gaps() {
        assert_eq!(nonhermitian_min_gap(1.0, 0.0), 0.0);
        assert!((nonhermitian_min_gap(1.0, 1.0) - 2.0 / 5f64.sqrt()).abs() < 1e-15);
        assert!((nonhermitian_min_gap(1.0, 0.5) - 1.0 / 4.25f64.sqrt()).abs() < 1e-15);
        assert!((nonhermitian_min_gap_location(1.0, 1.0) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn linear_two_level_gap_matches_spectrum() {
        let spec = AnnealSpec::two_level(1.0, 0.9, linear_schedule(0.5), 1.0).unwrap();
        let params = TwoLevelParams::symmetric(1.0, 0.9);
        for s in [0.0, 0.2, 0.55, 0.9, 1.0] {
            let full = crate::spectrum::gap_at(&spec, s).unwrap();
            assert!((params.gap(spec.schedule(), s) - full).abs() < 1e-12, "s = {s}");
        }
    }
}

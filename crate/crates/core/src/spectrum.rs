//! Instantaneous spectra along the anneal, gap traces, crossover location and
//! exceptional-point detection.
//!
//! The "ground state" of a non-Hermitian Hamiltonian is the eigenvalue with
//! the smallest real part (ties broken by imaginary part); the gap is the
//! modulus of the complex difference between the two lowest eigenvalues.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{eig_nonhermitian, inner, norm, LinalgError};
use crate::model::{grid, total_hamiltonian, AnnealSpec};

pub const DEFAULT_GRID_POINTS: usize = 1001;
/// Resolution of the golden-section refinement in [`find_crossover`].
pub const CROSSOVER_TOLERANCE: f64 = 1e-8;
/// Two minima closer than this fraction of `g_m` are reported as ambiguous.
pub const MULTIPLE_MINIMA_FRACTION: f64 = 0.01;
/// Gap threshold for an exceptional point, relative to `maxnorm(h0) + maxnorm(h1)`.
pub const EP_GAP_TOLERANCE: f64 = 1e-6;
/// Unit-normalized right-eigenvector overlap required for coalescence.
pub const EP_OVERLAP_THRESHOLD: f64 = 0.99;

/// Gaps below this fraction of `maxnorm(H)` are reported as exactly zero.
const ZERO_GAP_TOLERANCE: f64 = 1e-10;
/// Maximum number of interval bisections used to resolve a jump.
const MAX_REFINE_DEPTH: usize = 6;
/// Slack on the Lipschitz bound of sorted eigenvalues.
const LIPSCHITZ_SLACK: f64 = 1.25;
/// Bracket resolution used when homing in on a candidate exceptional point;
/// near an EP the gap grows like `sqrt|s - s_ep|`, so the search has to go
/// far below [`CROSSOVER_TOLERANCE`].
const EP_SEARCH_TOLERANCE: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectrumError {
    #[error("need at least 3 grid points, got {0}")]
    GridTooSmall(usize),
    #[error("s = {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("eigensolver failed at s = {s}: {source}")]
    Eigen { s: f64, source: LinalgError },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSnapshot {
    pub s: f64,
    /// Sorted by real part, then imaginary part.
    pub eigenvalues: Vec<C64>,
    /// `|E_e - E_g|`.
    pub gap: f64,
    pub defective: bool,
}

impl SpectrumSnapshot {
    pub fn ground(&self) -> C64 {
        self.eigenvalues[0]
    }

    pub fn excited(&self) -> C64 {
        self.eigenvalues[1]
    }
}

/// Two (refined) local minima of the gap whose values lie within
/// [`MULTIPLE_MINIMA_FRACTION`] of each other.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultipleMinima {
    /// `(s, gap)` of the global minimum.
    pub primary: (f64, f64),
    /// `(s, gap)` of the competing minimum.
    pub competing: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossover {
    pub s_c: f64,
    pub g_m: f64,
    pub multiple_minima: Option<MultipleMinima>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapTrace {
    /// Ordered by `s`; the uniform grid plus any points inserted where
    /// sorted eigenvalues moved faster than the Lipschitz bound allows.
    pub snapshots: Vec<SpectrumSnapshot>,
    pub s_c: f64,
    pub g_m: f64,
    pub multiple_minima: Option<MultipleMinima>,
    /// Number of points added by refinement.
    pub refined_points: usize,
}

impl GapTrace {
    pub fn gaps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.snapshots.iter().map(|snap| (snap.s, snap.gap))
    }
}

pub fn instantaneous_spectrum(spec: &AnnealSpec, s: f64) -> Result<SpectrumSnapshot, SpectrumError> {
    if !(0.0..=1.0).contains(&s) {
        return Err(SpectrumError::OutOfRange(s));
    }
    let h = total_hamiltonian(spec, s);
    let es = eig_nonhermitian(&h).map_err(|source| SpectrumError::Eigen { s, source })?;
    let mut gap = if es.dim() > 1 {
        (es.eigenvalues[1] - es.eigenvalues[0]).norm()
    } else {
        0.0
    };
    if gap <= ZERO_GAP_TOLERANCE * h.max_norm() {
        gap = 0.0;
    }
    Ok(SpectrumSnapshot {
        s,
        defective: es.any_defective(),
        eigenvalues: es.eigenvalues,
        gap,
    })
}

/// Gap `|E_e - E_g|` at `s` without the zero snapping of
/// [`instantaneous_spectrum`], so minimizers see a smooth function.
pub fn gap_at(spec: &AnnealSpec, s: f64) -> Result<f64, SpectrumError> {
    if !(0.0..=1.0).contains(&s) {
        return Err(SpectrumError::OutOfRange(s));
    }
    let h = total_hamiltonian(spec, s);
    let es = eig_nonhermitian(&h).map_err(|source| SpectrumError::Eigen { s, source })?;
    Ok((es.eigenvalues[1] - es.eigenvalues[0]).norm())
}

/// Samples the spectrum on a uniform grid (in parallel), refines intervals
/// where an eigenvalue jumps, and locates the minimum gap.
pub fn trace_gap(spec: &AnnealSpec, grid_points: usize) -> Result<GapTrace, SpectrumError> {
    if grid_points < 3 {
        return Err(SpectrumError::GridTooSmall(grid_points));
    }
    let points: Vec<f64> = grid(grid_points).collect();
    let uniform: Vec<SpectrumSnapshot> = points
        .par_iter()
        .map(|&s| instantaneous_spectrum(spec, s))
        .collect::<Result<_, _>>()?;

    let mut snapshots = Vec::with_capacity(uniform.len());
    let mut refined_points = 0;
    for pair in uniform.windows(2) {
        snapshots.push(pair[0].clone());
        let mut inserted = Vec::new();
        refine_interval(spec, &pair[0], &pair[1], 0, &mut inserted)?;
        refined_points += inserted.len();
        snapshots.extend(inserted);
    }
    snapshots.push(uniform.last().cloned().expect("grid is non-empty"));

    let crossover = find_crossover(spec, &snapshots)?;
    Ok(GapTrace {
        snapshots,
        s_c: crossover.s_c,
        g_m: crossover.g_m,
        multiple_minima: crossover.multiple_minima,
        refined_points,
    })
}

fn refine_interval(
    spec: &AnnealSpec,
    a: &SpectrumSnapshot,
    b: &SpectrumSnapshot,
    depth: usize,
    out: &mut Vec<SpectrumSnapshot>,
) -> Result<(), SpectrumError> {
    if depth >= MAX_REFINE_DEPTH {
        return Ok(());
    }
    let ds = b.s - a.s;
    let bound = lipschitz_bound(spec, a.s, b.s) * ds;
    let jumped = a
        .eigenvalues
        .iter()
        .zip(&b.eigenvalues)
        .any(|(x, y)| (x - y).norm() > bound);
    if !jumped {
        return Ok(());
    }
    let mid = instantaneous_spectrum(spec, 0.5 * (a.s + b.s))?;
    refine_interval(spec, a, &mid, depth + 1, out)?;
    out.push(mid.clone());
    refine_interval(spec, &mid, b, depth + 1, out)
}

/// Upper bound on `||dH/ds||` over `[lo, hi]` from the schedule derivatives
/// at the ends and midpoint, with slack for curvature.
fn lipschitz_bound(spec: &AnnealSpec, lo: f64, hi: f64) -> f64 {
    let h0 = spec.h0().inf_norm();
    let h1 = spec.h1().inf_norm();
    let shift = spec.driver_shift().unwrap_or(0.0);
    [lo, 0.5 * (lo + hi), hi]
        .iter()
        .map(|&s| {
            let d = spec.schedule().derivative(s);
            d.f0.abs() * h0 + (d.f1.abs() + d.f2.abs()) * h1 + d.f2.abs() * shift
        })
        .fold(0.0, f64::max)
        * LIPSCHITZ_SLACK
        + f64::EPSILON * spec.energy_scale()
}

/// Refines the grid minimum of `snapshots` by golden-section search on the
/// spectral gap of `spec`.
pub fn find_crossover(spec: &AnnealSpec, snapshots: &[SpectrumSnapshot]) -> Result<Crossover, SpectrumError> {
    let samples: Vec<(f64, f64)> = snapshots.iter().map(|snap| (snap.s, snap.gap)).collect();
    minimize_sampled(&samples, |s| gap_at(spec, s), CROSSOVER_TOLERANCE)
}

/// Locates the minimum of `f` from its samples: every strict local minimum
/// of the samples is refined by golden-section search within its
/// neighbouring samples, and the smallest refined value wins.
///
/// `samples` must be sorted by abscissa and contain at least 3 entries.
pub fn minimize_sampled<F, E>(samples: &[(f64, f64)], f: F, tol: f64) -> Result<Crossover, E>
where
    F: Fn(f64) -> Result<f64, E>,
{
    assert!(samples.len() >= 3, "need at least 3 samples");
    let n = samples.len();
    let g = |i: usize| samples[i].1;
    let mut candidates: Vec<usize> = Vec::new();
    if g(0) < g(1) {
        candidates.push(0);
    }
    for i in 1..n - 1 {
        let (l, c, r) = (g(i - 1), g(i), g(i + 1));
        if c <= l && c <= r && (c < l || c < r) {
            candidates.push(i);
        }
    }
    if g(n - 1) < g(n - 2) {
        candidates.push(n - 1);
    }

    let mut minima: Vec<(f64, f64)> = Vec::with_capacity(candidates.len());
    for &i in &candidates {
        let lo = samples[i.saturating_sub(1)].0;
        let hi = samples[(i + 1).min(n - 1)].0;
        let (mut s, mut v) = golden_section(&f, lo, hi, tol)?;
        // the bracket search never lands exactly on an endpoint
        for end in [lo, hi] {
            let fe = if end == samples[i].0 { samples[i].1 } else { f(end)? };
            if fe < v {
                s = end;
                v = fe;
            }
        }
        if samples[i].1 < v {
            s = samples[i].0;
            v = samples[i].1;
        }
        minima.push((s, v));
    }
    if minima.is_empty() {
        // flat profile: the first grid minimum is as good as any
        let (i, _) = samples
            .iter()
            .enumerate()
            .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
            .expect("non-empty");
        minima.push(samples[i]);
    }
    minima.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
    let primary = minima[0];
    let spacing = samples[1].0 - samples[0].0;
    let competing = minima[1..]
        .iter()
        .copied()
        .find(|m| (m.1 - primary.1).abs() <= MULTIPLE_MINIMA_FRACTION * primary.1 && (m.0 - primary.0).abs() > spacing);
    Ok(Crossover {
        s_c: primary.0,
        g_m: primary.1,
        multiple_minima: competing.map(|c| MultipleMinima { primary, competing: c }),
    })
}

/// Golden-section minimization of a unimodal `f` on `[a, b]` down to a
/// bracket of width `tol`. Returns the best `(x, f(x))` evaluated.
pub fn golden_section<F, E>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64), E>
where
    F: Fn(f64) -> Result<f64, E>,
{
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            if c == d {
                break;
            }
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            if c == d {
                break;
            }
            fd = f(d)?;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

/// Measurements backing an exceptional-point detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExceptionalPoint {
    pub s: f64,
    pub gap: f64,
    /// `|<psi_g|psi_e>|` of the unit-normalized right eigenvectors.
    pub overlap: f64,
}

/// Coalescence measurements for the two lowest eigenpairs at `s`.
pub fn coalescence_at(spec: &AnnealSpec, s: f64) -> Result<ExceptionalPoint, SpectrumError> {
    let h = total_hamiltonian(spec, s);
    let es = eig_nonhermitian(&h).map_err(|source| SpectrumError::Eigen { s, source })?;
    let (g, e) = (&es.right_vectors[0], &es.right_vectors[1]);
    let overlap = inner(g, e).norm() / (norm(g) * norm(e));
    Ok(ExceptionalPoint {
        s,
        gap: (es.eigenvalues[1] - es.eigenvalues[0]).norm(),
        overlap,
    })
}

/// Searches for a point where the two lowest eigenvalues and their right
/// eigenvectors coalesce.
///
/// Every local minimum of the sampled gap is refined far below the grid
/// resolution; the first one whose gap is below
/// `EP_GAP_TOLERANCE * (maxnorm(h0) + maxnorm(h1))` and whose eigenvector
/// overlap exceeds [`EP_OVERLAP_THRESHOLD`] is returned.
pub fn detect_exceptional_point(
    spec: &AnnealSpec,
    grid_points: usize,
) -> Result<Option<ExceptionalPoint>, SpectrumError> {
    if grid_points < 3 {
        return Err(SpectrumError::GridTooSmall(grid_points));
    }
    let points: Vec<f64> = grid(grid_points).collect();
    let gaps: Vec<f64> = points.par_iter().map(|&s| gap_at(spec, s)).collect::<Result<_, _>>()?;
    let tolerance = EP_GAP_TOLERANCE * spec.energy_scale();

    let n = points.len();
    for i in 0..n {
        let left = if i > 0 { gaps[i - 1] } else { f64::INFINITY };
        let right = if i + 1 < n { gaps[i + 1] } else { f64::INFINITY };
        if !(gaps[i] <= left && gaps[i] <= right) {
            continue;
        }
        let lo = points[i.saturating_sub(1)];
        let hi = points[(i + 1).min(n - 1)];
        let (s, _) = golden_section(|s| gap_at(spec, s), lo, hi, EP_SEARCH_TOLERANCE)?;
        let s = if gaps[i] < gap_at(spec, s)? { points[i] } else { s };
        let evidence = coalescence_at(spec, s)?;
        if evidence.gap < tolerance && evidence.overlap > EP_OVERLAP_THRESHOLD {
            return Ok(Some(evidence));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ComplexSquareMatrix;
    use crate::model::{linear_schedule, Schedule, ScheduleWeights};

    fn two_level(delta0: f64, cos_alpha: f64) -> AnnealSpec {
        AnnealSpec::two_level(1.0, cos_alpha, linear_schedule(delta0), 1.0).unwrap()
    }

    #[test]
    fn diagonal_endpoint_spectrum() {
        let h0 = ComplexSquareMatrix::from_real_rows(&[
            vec![-1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, 2.0],
        ])
        .unwrap();
        let h1 = crate::model::build_transverse(2).unwrap();
        let spec = AnnealSpec::new(h0, h1, linear_schedule(0.0), 1.0).unwrap();
        let snap = instantaneous_spectrum(&spec, 1.0).unwrap();
        let re: Vec<f64> = snap.eigenvalues.iter().map(|e| e.re).collect();
        assert_eq!(re, vec![-1.0, 0.0, 1.0, 2.0]);
        assert_eq!(snap.gap, 1.0);
    }

    #[test]
    fn aligned_two_level_crosses_exactly() {
        let snap = instantaneous_spectrum(&two_level(0.0, 1.0), 0.5).unwrap();
        assert_eq!(snap.gap, 0.0);
    }

    #[test]
    fn out_of_range_s_is_rejected() {
        assert_eq!(
            instantaneous_spectrum(&two_level(0.0, 0.5), 1.5).unwrap_err(),
            SpectrumError::OutOfRange(1.5)
        );
        assert_eq!(
            trace_gap(&two_level(0.0, 0.5), 2).unwrap_err(),
            SpectrumError::GridTooSmall(2)
        );
    }

    #[test]
    fn crossover_of_symmetric_hermitian_ramp() {
        let trace = trace_gap(&two_level(0.0, 0.6), 101).unwrap();
        assert!((trace.s_c - 0.5).abs() < 1e-7);
        assert!(trace.multiple_minima.is_none());
    }

    #[test]
    fn monotone_gap_has_boundary_minimum() {
        let samples: Vec<(f64, f64)> = (0..11).map(|i| (i as f64 / 10.0, 2.0 - i as f64 / 10.0)).collect();
        let c = minimize_sampled(&samples, |s| Ok::<_, ()>(2.0 - s), 1e-8).unwrap();
        assert_eq!(c.s_c, 1.0);
        assert_eq!(c.g_m, 1.0);
        assert!(c.multiple_minima.is_none());
    }

    #[test]
    fn twin_minima_are_reported() {
        let f = |s: f64| Ok::<_, ()>(((s - 0.25) * (s - 0.75)).powi(2) + 0.1);
        let samples: Vec<(f64, f64)> = grid(101).map(|s| (s, f(s).unwrap())).collect();
        let c = minimize_sampled(&samples, f, 1e-8).unwrap();
        let mm = c.multiple_minima.expect("both minima reported");
        assert!((mm.primary.0 - 0.25).abs() < 1e-6 || (mm.primary.0 - 0.75).abs() < 1e-6);
        assert!((mm.primary.0 - mm.competing.0).abs() > 0.4);
    }

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let (x, fx) = golden_section(|x: f64| Ok::<_, ()>((x - 0.3).powi(2)), 0.0, 1.0, 1e-10).unwrap();
        assert!((x - 0.3).abs() < 1e-9);
        assert!(fx < 1e-18);
    }

    #[test]
    fn hermitian_snapshots_have_real_spectrum() {
        let spec = crate::model::IsingInstance::random(3, 7)
            .anneal_spec(linear_schedule(0.0), 1.0)
            .unwrap();
        let trace = trace_gap(&spec, 51).unwrap();
        for snap in &trace.snapshots {
            assert!(snap.eigenvalues.iter().all(|e| e.im == 0.0));
        }
        assert_eq!(trace.refined_points, 0);
    }

    #[test]
    fn frozen_exceptional_point_is_detected_everywhere() {
        // g = J cos(alpha), delta = J sin(alpha) with J = 1, cos(alpha) = 0.8
        let w = ScheduleWeights {
            f0: 1.0,
            f1: 0.8,
            f2: 0.6,
        };
        let spec = AnnealSpec::two_level(1.0, 0.8, Schedule::frozen(w), 1.0).unwrap();
        let ep = detect_exceptional_point(&spec, 11).unwrap().expect("EP");
        assert!(ep.overlap > 0.99);
    }

    #[test]
    fn hermitian_avoided_crossing_is_not_an_ep() {
        let spec = two_level(0.0, 0.999);
        assert!(detect_exceptional_point(&spec, 201).unwrap().is_none());
    }
}

//! Dense non-Hermitian eigendecomposition.
//!
//! Eigenvalues come from a complex Schur form (Householder reduction to
//! Hessenberg form followed by single-shift QR sweeps with Wilkinson shifts).
//! Right eigenvectors are recovered by back substitution on the triangular
//! factor. Left eigenvectors are computed independently from the conjugate
//! transpose and then paired with the right system by eigenvalue proximity.
//!
//! Normal matrices (Hermitian ones in particular) skip the back substitution:
//! their Schur vectors already are an orthonormal eigenbasis, which keeps
//! degenerate eigenspaces well conditioned.

use num_complex::Complex64 as C64;

use super::matrix::{fix_phase, norm, normalize, pair, ComplexSquareMatrix};
use super::LinalgError;

/// Pairs with a unit-normalized overlap `|<left|right>|` below this are
/// flagged as coalesced (defective).
pub const DEFECT_TOLERANCE: f64 = 1e-6;

/// Relative guard on left/right eigenvalue matching.
pub const PAIRING_TOLERANCE: f64 = 1e-6;

/// Default share of defective pairs tolerated by [`biorthonormalize`].
pub const DEFAULT_MAX_DEFECTIVE_FRACTION: f64 = 0.5;

const NORMALITY_TOLERANCE: f64 = 1e-12;
const CLUSTER_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenConfig {
    /// QR sweeps allowed per eigenvalue before giving up.
    pub iterations_per_eigenvalue: usize,
    pub defect_tolerance: f64,
    pub max_defective_fraction: f64,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self {
            iterations_per_eigenvalue: 60,
            defect_tolerance: DEFECT_TOLERANCE,
            max_defective_fraction: DEFAULT_MAX_DEFECTIVE_FRACTION,
        }
    }
}

/// Eigenvalues with paired right (column) and left (row) eigenvectors.
///
/// Left vectors are stored as the row entries `l` such that `l^T M = E l^T`;
/// the pairing `<left_m|right_n>` is the bilinear product `sum_i l_i r_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub eigenvalues: Vec<C64>,
    pub right_vectors: Vec<Vec<C64>>,
    pub left_vectors: Vec<Vec<C64>>,
    pub defect_flags: Vec<bool>,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn any_defective(&self) -> bool {
        self.defect_flags.iter().any(|&d| d)
    }

    /// `<left_m|right_n>`
    pub fn overlap(&self, m: usize, n: usize) -> C64 {
        pair(&self.left_vectors[m], &self.right_vectors[n])
    }

    /// `<left_m| op |right_n>`
    pub fn matrix_element(&self, op: &ComplexSquareMatrix, m: usize, n: usize) -> C64 {
        pair(&self.left_vectors[m], &op.mul_vec(&self.right_vectors[n]))
    }
}

pub fn eig_nonhermitian(m: &ComplexSquareMatrix) -> Result<EigenSystem, LinalgError> {
    eig_with_config(m, &EigenConfig::default())
}

pub fn eig_with_config(m: &ComplexSquareMatrix, config: &EigenConfig) -> Result<EigenSystem, LinalgError> {
    m.check_finite()?;
    let scale = m.max_norm();
    if scale == 0.0 {
        return Ok(zero_system(m.dim()));
    }

    let mut system = if m.is_hermitian() {
        normal_system(m, config, true)?
    } else if m.normality_defect() <= NORMALITY_TOLERANCE * scale * scale * m.dim() as f64 {
        normal_system(m, config, false)?
    } else {
        general_system(m, config)?
    };
    sort_system(&mut system);
    let flags = biorthonormalize_in_place(&mut system, scale, config.defect_tolerance);
    system.defect_flags = flags;
    Ok(system)
}

/// Rescales left vectors so that `<left_m|right_n> = delta_mn` for every
/// pair that is not coalesced, flagging the coalesced ones.
///
/// Fails with [`LinalgError::DefectiveSystem`] when more than
/// `max_defective_fraction` of the pairs are defective.
pub fn biorthonormalize(es: &EigenSystem) -> Result<EigenSystem, LinalgError> {
    biorthonormalize_with(es, &EigenConfig::default())
}

pub fn biorthonormalize_with(es: &EigenSystem, config: &EigenConfig) -> Result<EigenSystem, LinalgError> {
    let mut out = es.clone();
    let scale = es
        .eigenvalues
        .iter()
        .map(|e| e.norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let flags = biorthonormalize_in_place(&mut out, scale, config.defect_tolerance);
    let defective = flags.iter().filter(|&&f| f).count();
    out.defect_flags = flags;
    let fraction = defective as f64 / out.dim() as f64;
    if fraction > config.max_defective_fraction {
        return Err(LinalgError::DefectiveSystem {
            defective,
            total: out.dim(),
        });
    }
    Ok(out)
}

fn zero_system(n: usize) -> EigenSystem {
    let basis: Vec<Vec<C64>> = (0..n)
        .map(|k| {
            let mut e = vec![C64::new(0.0, 0.0); n];
            e[k] = C64::new(1.0, 0.0);
            e
        })
        .collect();
    EigenSystem {
        eigenvalues: vec![C64::new(0.0, 0.0); n],
        right_vectors: basis.clone(),
        left_vectors: basis,
        defect_flags: vec![false; n],
    }
}

fn normal_system(m: &ComplexSquareMatrix, config: &EigenConfig, hermitian: bool) -> Result<EigenSystem, LinalgError> {
    let (_, z) = schur(m, config)?;
    let n = m.dim();
    let mut eigenvalues = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    for k in 0..n {
        let mut v: Vec<C64> = (0..n).map(|i| z[(i, k)]).collect();
        normalize(&mut v);
        // Rayleigh quotient is exact to O(eps) for normal matrices.
        let mut e = super::matrix::inner(&v, &m.mul_vec(&v));
        if hermitian {
            e = C64::new(e.re, 0.0);
        }
        eigenvalues.push(e);
        right.push(v);
    }
    let left = right.iter().map(|v| v.iter().map(|z| z.conj()).collect()).collect();
    Ok(EigenSystem {
        eigenvalues,
        right_vectors: right,
        left_vectors: left,
        defect_flags: vec![false; n],
    })
}

fn general_system(m: &ComplexSquareMatrix, config: &EigenConfig) -> Result<EigenSystem, LinalgError> {
    let (right_values, right_vectors) = right_eigenpairs(m, config)?;
    let (adj_values, adj_vectors) = right_eigenpairs(&m.adjoint(), config)?;

    // y^H M = E y^H  <=>  M^H y = conj(E) y, so the left row is conj(y).
    let left_values: Vec<C64> = adj_values.iter().map(|z| z.conj()).collect();
    let left_rows: Vec<Vec<C64>> = adj_vectors
        .iter()
        .map(|y| y.iter().map(|z| z.conj()).collect())
        .collect();

    let scale = m.max_norm();
    let n = m.dim();
    let mut used = vec![false; n];
    let mut left_vectors = Vec::with_capacity(n);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eigen_order(right_values[a], right_values[b]));
    let mut paired = vec![Vec::new(); n];
    for &i in &order {
        let target = right_values[i];
        let (best, dist) = (0..n)
            .filter(|&j| !used[j])
            .map(|j| (j, (left_values[j] - target).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("as many left as right eigenvalues");
        if dist > PAIRING_TOLERANCE * scale {
            return Err(LinalgError::PairingFailure {
                eigenvalue: target,
                distance: dist,
            });
        }
        used[best] = true;
        paired[i] = left_rows[best].clone();
    }
    left_vectors.extend(paired);

    Ok(EigenSystem {
        eigenvalues: right_values,
        right_vectors,
        left_vectors,
        defect_flags: vec![false; n],
    })
}

fn eigen_order(a: C64, b: C64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

fn sort_system(es: &mut EigenSystem) {
    let n = es.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eigen_order(es.eigenvalues[a], es.eigenvalues[b]));
    es.eigenvalues = order.iter().map(|&i| es.eigenvalues[i]).collect();
    es.right_vectors = order.iter().map(|&i| es.right_vectors[i].clone()).collect();
    es.left_vectors = order.iter().map(|&i| es.left_vectors[i].clone()).collect();
    es.defect_flags = order.iter().map(|&i| es.defect_flags[i]).collect();
}

/// Groups consecutive (sorted) eigenvalues closer than the cluster tolerance,
/// then inverts the left/right Gram block of each group.
fn biorthonormalize_in_place(es: &mut EigenSystem, scale: f64, defect_tolerance: f64) -> Vec<bool> {
    let n = es.dim();
    for v in es.right_vectors.iter_mut() {
        normalize(v);
        fix_phase(v);
    }
    for v in es.left_vectors.iter_mut() {
        normalize(v);
    }

    let mut flags = vec![false; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (es.eigenvalues[end] - es.eigenvalues[end - 1]).norm() <= CLUSTER_TOLERANCE * scale {
            end += 1;
        }
        let members: Vec<usize> = (start..end).collect();
        let gram: Vec<Vec<C64>> = members
            .iter()
            .map(|&a| members.iter().map(|&b| es.overlap(a, b)).collect())
            .collect();
        match invert_small(&gram, defect_tolerance) {
            Some(inv) => {
                let old: Vec<Vec<C64>> = members.iter().map(|&a| es.left_vectors[a].clone()).collect();
                for (row, &a) in members.iter().enumerate() {
                    let mut l = vec![C64::new(0.0, 0.0); n];
                    for (col, src) in old.iter().enumerate() {
                        let w = inv[row][col];
                        for (li, si) in l.iter_mut().zip(src) {
                            *li += w * si;
                        }
                    }
                    es.left_vectors[a] = l;
                }
            }
            None => {
                for &a in &members {
                    flags[a] = true;
                }
            }
        }
        start = end;
    }
    flags
}

/// Gauss-Jordan inverse with partial pivoting; `None` if a pivot falls below
/// `min_pivot` (the block is numerically singular).
fn invert_small(a: &[Vec<C64>], min_pivot: f64) -> Option<Vec<Vec<C64>>> {
    let k = a.len();
    let mut work: Vec<Vec<C64>> = a.to_vec();
    let mut inv: Vec<Vec<C64>> = (0..k)
        .map(|i| {
            let mut r = vec![C64::new(0.0, 0.0); k];
            r[i] = C64::new(1.0, 0.0);
            r
        })
        .collect();
    for col in 0..k {
        let pivot_row = (col..k).max_by(|&x, &y| work[x][col].norm().total_cmp(&work[y][col].norm()))?;
        if work[pivot_row][col].norm() < min_pivot {
            return None;
        }
        work.swap(col, pivot_row);
        inv.swap(col, pivot_row);
        let p = work[col][col];
        for j in 0..k {
            work[col][j] /= p;
            inv[col][j] /= p;
        }
        for r in 0..k {
            if r == col {
                continue;
            }
            let f = work[r][col];
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..k {
                let wc = work[col][j];
                let ic = inv[col][j];
                work[r][j] -= f * wc;
                inv[r][j] -= f * ic;
            }
        }
    }
    Some(inv)
}

fn right_eigenpairs(m: &ComplexSquareMatrix, config: &EigenConfig) -> Result<(Vec<C64>, Vec<Vec<C64>>), LinalgError> {
    let (t, z) = schur(m, config)?;
    let n = m.dim();
    let values: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    let small = f64::EPSILON * t.max_norm().max(f64::MIN_POSITIVE);

    let mut vectors = Vec::with_capacity(n);
    for k in 0..n {
        // Solve (T - t_kk) x = 0 with x_k = 1 by back substitution.
        let mut x = vec![C64::new(0.0, 0.0); n];
        x[k] = C64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut acc = C64::new(0.0, 0.0);
            for j in (i + 1)..=k {
                acc += t[(i, j)] * x[j];
            }
            let mut den = t[(i, i)] - t[(k, k)];
            if den.norm() < small {
                den = C64::new(small, 0.0);
            }
            x[i] = -acc / den;
            let big = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if big > 1e100 {
                x.iter_mut().for_each(|z| *z /= big);
            }
        }
        let mut v = vec![C64::new(0.0, 0.0); n];
        for (i, vi) in v.iter_mut().enumerate() {
            for (j, xj) in x.iter().enumerate().take(k + 1) {
                *vi += z[(i, j)] * xj;
            }
        }
        let nv = norm(&v);
        if nv == 0.0 || !nv.is_finite() {
            return Err(LinalgError::ConvergenceFailure {
                dim: n,
                norm: m.max_norm(),
            });
        }
        normalize(&mut v);
        vectors.push(v);
    }
    Ok((values, vectors))
}

/// Complex Schur decomposition `M = Z T Z^H` with `T` upper triangular.
pub(crate) fn schur(
    m: &ComplexSquareMatrix,
    config: &EigenConfig,
) -> Result<(ComplexSquareMatrix, ComplexSquareMatrix), LinalgError> {
    let n = m.dim();
    let (mut h, mut z) = hessenberg(m);
    if n == 1 {
        return Ok((h, z));
    }
    let norm_h = h.max_norm().max(f64::MIN_POSITIVE);
    let eps = f64::EPSILON;
    let budget = config.iterations_per_eigenvalue * n;

    let mut hi = n - 1;
    let mut iter_since_deflation = 0usize;
    let mut total = 0usize;
    while hi > 0 {
        // Locate the start of the active unreduced block.
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let mut diag = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if diag == 0.0 {
                diag = norm_h;
            }
            if sub <= eps * diag || sub <= f64::MIN_POSITIVE * 1e3 {
                h[(lo, lo - 1)] = C64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            iter_since_deflation = 0;
            continue;
        }

        total += 1;
        iter_since_deflation += 1;
        if total > budget {
            return Err(LinalgError::ConvergenceFailure {
                dim: n,
                norm: m.max_norm(),
            });
        }

        let shift = if iter_since_deflation % 11 == 10 {
            // exceptional shift to break cycles
            h[(hi, hi)] + C64::new(h[(hi, hi - 1)].norm() * 0.75, h[(hi, hi - 1)].norm() * 0.25)
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };

        qr_sweep(&mut h, &mut z, lo, hi, shift);
    }

    // Clean the strictly lower part left over from deflation.
    for i in 1..n {
        for j in 0..i {
            h[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    Ok((h, z))
}

/// Eigenvalue of the trailing 2x2 block closest to its last diagonal entry.
fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let tr = a + d;
    let det = a * d - b * c;
    let half = tr * 0.5;
    let disc = (half * half - det).sqrt();
    let e1 = half + disc;
    let e2 = half - disc;
    if (e1 - d).norm() <= (e2 - d).norm() {
        e1
    } else {
        e2
    }
}

/// Explicitly shifted QR step on the block `lo..=hi` via Givens rotations,
/// applied as a similarity transform to the whole matrix.
fn qr_sweep(h: &mut ComplexSquareMatrix, z: &mut ComplexSquareMatrix, lo: usize, hi: usize, shift: C64) {
    let n = h.dim();
    for k in lo..=hi {
        h[(k, k)] -= shift;
    }
    let mut rotations = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let a = h[(k, k)];
        let b = h[(k + 1, k)];
        let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let (c1, c2) = if r == 0.0 {
            (C64::new(1.0, 0.0), C64::new(0.0, 0.0))
        } else {
            (a / r, b / r)
        };
        // rows k, k+1: [conj(c1) conj(c2); -c2 c1]
        for j in k..n {
            let x = h[(k, j)];
            let y = h[(k + 1, j)];
            h[(k, j)] = c1.conj() * x + c2.conj() * y;
            h[(k + 1, j)] = -c2 * x + c1 * y;
        }
        h[(k + 1, k)] = C64::new(0.0, 0.0);
        rotations.push((k, c1, c2));
    }
    for &(k, c1, c2) in &rotations {
        let top = (k + 2).min(hi);
        for i in 0..=top {
            let x = h[(i, k)];
            let y = h[(i, k + 1)];
            h[(i, k)] = x * c1 + y * c2;
            h[(i, k + 1)] = -x * c2.conj() + y * c1.conj();
        }
        for i in 0..n {
            let x = z[(i, k)];
            let y = z[(i, k + 1)];
            z[(i, k)] = x * c1 + y * c2;
            z[(i, k + 1)] = -x * c2.conj() + y * c1.conj();
        }
    }
    for k in lo..=hi {
        h[(k, k)] += shift;
    }
}

/// Householder reduction to upper Hessenberg form, returning `(H, Q)` with
/// `M = Q H Q^H`.
fn hessenberg(m: &ComplexSquareMatrix) -> (ComplexSquareMatrix, ComplexSquareMatrix) {
    let n = m.dim();
    let mut h = m.clone();
    let mut q = ComplexSquareMatrix::identity(n);
    if n < 3 {
        return (h, q);
    }
    for k in 0..n - 2 {
        let mut v: Vec<C64> = ((k + 1)..n).map(|i| h[(i, k)]).collect();
        let alpha_norm = norm(&v);
        if alpha_norm == 0.0 {
            continue;
        }
        let x0 = v[0];
        let phase = if x0.norm() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        v[0] += phase * alpha_norm;
        let vn = norm(&v);
        if vn == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|z| *z /= vn);
        // H <- (I - 2vv^H) H (I - 2vv^H)
        for j in 0..n {
            let mut s = C64::new(0.0, 0.0);
            for (idx, vi) in v.iter().enumerate() {
                s += vi.conj() * h[(k + 1 + idx, j)];
            }
            for (idx, vi) in v.iter().enumerate() {
                h[(k + 1 + idx, j)] -= *vi * s * 2.0;
            }
        }
        for i in 0..n {
            let mut s = C64::new(0.0, 0.0);
            for (idx, vi) in v.iter().enumerate() {
                s += h[(i, k + 1 + idx)] * vi;
            }
            for (idx, vi) in v.iter().enumerate() {
                h[(i, k + 1 + idx)] -= s * vi.conj() * 2.0;
            }
        }
        for i in 0..n {
            let mut s = C64::new(0.0, 0.0);
            for (idx, vi) in v.iter().enumerate() {
                s += q[(i, k + 1 + idx)] * vi;
            }
            for (idx, vi) in v.iter().enumerate() {
                q[(i, k + 1 + idx)] -= s * vi.conj() * 2.0;
            }
        }
        for i in (k + 2)..n {
            h[(i, k)] = C64::new(0.0, 0.0);
        }
    }
    (h, q)
}

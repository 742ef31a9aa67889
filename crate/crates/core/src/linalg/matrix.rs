use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64 as C64;

use super::LinalgError;

const HERMITIAN_RELATIVE_TOLERANCE: f64 = 1e-12;

/// Dense square complex matrix stored row-major.
///
/// The `hermitian` flag records that the matrix is known to be Hermitian
/// (within `1e-12 * maxnorm`); it is set by constructors that can guarantee
/// it and checked by [`ComplexSquareMatrix::mark_hermitian`].
#[derive(Clone, PartialEq)]
pub struct ComplexSquareMatrix {
    dim: usize,
    data: Vec<C64>,
    hermitian: bool,
}

impl ComplexSquareMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
            hermitian: true,
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m.hermitian = diag.iter().all(|d| d.im == 0.0);
        m
    }

    /// Builds a matrix from rows. Fails if the rows do not form a square
    /// array or contain non-finite entries.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self, LinalgError> {
        let dim = rows.len();
        if dim == 0 {
            return Err(LinalgError::EmptyMatrix);
        }
        let mut data = Vec::with_capacity(dim * dim);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(LinalgError::NonSquare {
                    row: r,
                    len: row.len(),
                    dim,
                });
            }
            data.extend_from_slice(row);
        }
        let m = Self {
            dim,
            data,
            hermitian: false,
        };
        m.check_finite()?;
        Ok(m)
    }

    /// Real-valued convenience constructor.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn is_flagged_hermitian(&self) -> bool {
        self.hermitian
    }

    pub(crate) fn set_hermitian_flag(&mut self, flag: bool) {
        self.hermitian = flag;
    }

    /// Sets the Hermitian flag after verifying the matrix against the
    /// flag tolerance.
    pub fn mark_hermitian(mut self) -> Result<Self, LinalgError> {
        let deviation = self.hermitian_deviation();
        if deviation > HERMITIAN_RELATIVE_TOLERANCE * self.max_norm() {
            return Err(LinalgError::NotHermitian { deviation });
        }
        self.hermitian = true;
        Ok(self)
    }

    /// max |M[i][j] - conj(M[j][i])|
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian || self.hermitian_deviation() <= HERMITIAN_RELATIVE_TOLERANCE * self.max_norm()
    }

    /// Largest entry modulus.
    pub fn max_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    /// Induced infinity norm (maximum absolute row sum).
    pub fn inf_norm(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.row(i).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub(crate) fn check_finite(&self) -> Result<(), LinalgError> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(LinalgError::NonFinite)
        }
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out.hermitian = self.hermitian;
        out
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)];
            }
        }
        out.hermitian = false;
        out
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * factor).collect(),
            hermitian: self.hermitian && factor.im == 0.0,
        }
    }

    /// `self + factor * other`
    pub fn add_scaled(&self, other: &Self, factor: C64) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a + factor * b)
                .collect(),
            hermitian: self.hermitian && other.hermitian && factor.im == 0.0,
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out.hermitian = false;
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.dim, v.len(), "dimension mismatch");
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Row vector times matrix: `v^T M` (no conjugation).
    pub fn vec_mul(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.dim, v.len(), "dimension mismatch");
        let n = self.dim;
        let mut out = vec![C64::new(0.0, 0.0); n];
        for (i, &vi) in v.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate() {
                *o += vi * self.data[i * n + j];
            }
        }
        out
    }

    /// `self * other - other * self`
    pub fn commutator(&self, other: &Self) -> Self {
        let ab = self.matmul(other);
        let ba = other.matmul(self);
        ab.add_scaled(&ba, C64::new(-1.0, 0.0))
    }

    /// Max entry of `M M^H - M^H M`.
    pub fn normality_defect(&self) -> f64 {
        let adj = self.adjoint();
        self.matmul(&adj)
            .add_scaled(&adj.matmul(self), C64::new(-1.0, 0.0))
            .max_norm()
    }
}

impl Index<(usize, usize)> for ComplexSquareMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexSquareMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        self.hermitian = false;
        &mut self.data[i * self.dim + j]
    }
}

impl fmt::Debug for ComplexSquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "ComplexSquareMatrix {}x{} (hermitian={})",
            self.dim, self.dim, self.hermitian
        )?;
        for i in 0..self.dim {
            let row: Vec<String> = self
                .row(i)
                .iter()
                .map(|z| format!("{:+.6}{:+.6}i", z.re, z.im))
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Pauli matrices and small helpers used throughout the crate.
pub mod pauli {
    use super::ComplexSquareMatrix;
    use num_complex::Complex64 as C64;

    pub fn sigma_x() -> ComplexSquareMatrix {
        let mut m = ComplexSquareMatrix::zeros(2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        m[(1, 0)] = C64::new(1.0, 0.0);
        m.set_hermitian_flag(true);
        m
    }

    pub fn sigma_y() -> ComplexSquareMatrix {
        let mut m = ComplexSquareMatrix::zeros(2);
        m[(0, 1)] = C64::new(0.0, -1.0);
        m[(1, 0)] = C64::new(0.0, 1.0);
        m.set_hermitian_flag(true);
        m
    }

    pub fn sigma_z() -> ComplexSquareMatrix {
        let mut m = ComplexSquareMatrix::zeros(2);
        m[(0, 0)] = C64::new(1.0, 0.0);
        m[(1, 1)] = C64::new(-1.0, 0.0);
        m.set_hermitian_flag(true);
        m
    }

    /// `v . sigma` for a complex 3-vector.
    pub fn bloch(v: [C64; 3]) -> ComplexSquareMatrix {
        let mut m = ComplexSquareMatrix::zeros(2);
        m[(0, 0)] = v[2];
        m[(1, 1)] = -v[2];
        m[(0, 1)] = v[0] - C64::i() * v[1];
        m[(1, 0)] = v[0] + C64::i() * v[1];
        let hermitian = v.iter().all(|z| z.im == 0.0);
        m.set_hermitian_flag(hermitian);
        m
    }
}

/// `<a|b>` with conjugation of `a`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Bilinear pairing `a^T b` used for left (row) vectors against right vectors.
pub fn pair(left: &[C64], right: &[C64]) -> C64 {
    left.iter().zip(right).map(|(x, y)| x * y).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalize(v: &mut [C64]) {
    let n = norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|z| *z /= n);
    }
}

/// Rotates the vector so its largest-magnitude entry is real and positive.
pub fn fix_phase(v: &mut [C64]) {
    let Some(pivot) = v
        .iter()
        .copied()
        .enumerate()
        .fold(None::<(usize, f64)>, |best, (i, z)| match best {
            // first index wins ties, so the result is deterministic
            Some((_, m)) if z.norm() <= m * (1.0 + 1e-12) => best,
            _ => Some((i, z.norm())),
        })
        .map(|(i, _)| v[i])
    else {
        return;
    };
    if pivot.norm() == 0.0 {
        return;
    }
    let phase = pivot.conj() / pivot.norm();
    v.iter_mut().for_each(|z| *z *= phase);
}

use num_complex::Complex64 as C64;

use super::matrix::ComplexSquareMatrix;
use super::LinalgError;

/// Limit on the number of squarings in [`expm_apply`].
pub const DEFAULT_MAX_SQUARINGS: u32 = 60;

/// `exp(-i * m * dt) * v` by scaling and squaring a truncated Taylor series.
pub fn expm_apply(m: &ComplexSquareMatrix, v: &[C64], dt: f64) -> Result<Vec<C64>, LinalgError> {
    expm_apply_with_limit(m, v, dt, DEFAULT_MAX_SQUARINGS)
}

pub fn expm_apply_with_limit(
    m: &ComplexSquareMatrix,
    v: &[C64],
    dt: f64,
    max_squarings: u32,
) -> Result<Vec<C64>, LinalgError> {
    assert_eq!(m.dim(), v.len(), "dimension mismatch");
    m.check_finite()?;
    if !dt.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let generator = m.scale(C64::new(0.0, -dt));
    let propagator = expm(&generator, max_squarings)?;
    Ok(propagator.mul_vec(v))
}

/// Matrix exponential `exp(a)`.
pub fn expm(a: &ComplexSquareMatrix, max_squarings: u32) -> Result<ComplexSquareMatrix, LinalgError> {
    let n = a.dim();
    let norm = a.inf_norm();
    // scale so that the series argument has norm <= 1/2
    let mut squarings: u32 = 0;
    if norm > 0.5 {
        let needed = (norm / 0.5).log2().ceil();
        if needed > max_squarings as f64 {
            return Err(LinalgError::ScalingOverflow {
                required: needed as u64,
                limit: max_squarings,
            });
        }
        squarings = needed as u32;
    }
    let scaled = a.scale(C64::new(0.5f64.powi(squarings as i32), 0.0));

    let mut sum = ComplexSquareMatrix::identity(n);
    let mut term = ComplexSquareMatrix::identity(n);
    for k in 1..=40 {
        term = term.matmul(&scaled).scale(C64::new(1.0 / k as f64, 0.0));
        sum = sum.add_scaled(&term, C64::new(1.0, 0.0));
        if term.max_norm() <= f64::EPSILON * 1e-3 * sum.max_norm() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum);
    }
    Ok(sum)
}

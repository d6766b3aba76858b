//! Linear operators given by their forward and adjoint products.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub trait LinearOperator: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;

    /// `A x`.
    fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>>;

    /// `Aᴴ y`.
    fn apply_adjoint(&self, y: &[Complex64]) -> Result<Vec<Complex64>>;

    fn column(&self, j: usize) -> Result<Vec<Complex64>> {
        if j >= self.ncols() {
            return Err(Error::IndexOutOfRange {
                index: j,
                size: self.ncols(),
            });
        }
        let mut e = vec![Complex64::new(0.0, 0.0); self.ncols()];
        e[j] = Complex64::new(1.0, 0.0);
        self.apply(&e)
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

impl LinearOperator for DMatrix<Complex64> {
    fn nrows(&self) -> usize {
        self.shape().0
    }

    fn ncols(&self) -> usize {
        self.shape().1
    }

    fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.shape().1, x.len())?;
        Ok((self * DVector::from_column_slice(x)).as_slice().to_vec())
    }

    fn apply_adjoint(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.shape().0, y.len())?;
        Ok(self.ad_mul(&DVector::from_column_slice(y)).as_slice().to_vec())
    }

    fn column(&self, j: usize) -> Result<Vec<Complex64>> {
        if j >= self.shape().1 {
            return Err(Error::IndexOutOfRange {
                index: j,
                size: self.shape().1,
            });
        }
        Ok(self.column(j).as_slice().to_vec())
    }
}

/// `A D⁻¹` for a diagonal `D` given by its (positive) entries.
pub struct Normalized<'a, O: ?Sized> {
    inner: &'a O,
    scale: Vec<f64>,
}

impl<'a, O: LinearOperator + ?Sized> Normalized<'a, O> {
    pub fn new(inner: &'a O, norms: &[f64]) -> Result<Self> {
        check_len(inner.ncols(), norms.len())?;
        if let Some(bad) = norms.iter().position(|&d| !(d > 0.0 && d.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "column scaling must be positive and finite (entry {bad} is {})",
                norms[bad]
            )));
        }
        Ok(Normalized {
            inner,
            scale: norms.iter().map(|d| 1.0 / d).collect(),
        })
    }

    /// Diagonal of `D⁻¹`.
    pub fn inverse_scaling(&self) -> &[f64] {
        &self.scale
    }
}

impl<O: LinearOperator + ?Sized> LinearOperator for Normalized<'_, O> {
    fn nrows(&self) -> usize {
        self.inner.nrows()
    }

    fn ncols(&self) -> usize {
        self.inner.ncols()
    }

    fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.ncols(), x.len())?;
        let scaled: Vec<Complex64> = x.iter().zip(&self.scale).map(|(v, s)| v * s).collect();
        self.inner.apply(&scaled)
    }

    fn apply_adjoint(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = self.inner.apply_adjoint(y)?;
        for (v, s) in out.iter_mut().zip(&self.scale) {
            *v *= s;
        }
        Ok(out)
    }

    fn column(&self, j: usize) -> Result<Vec<Complex64>> {
        let mut c = self.inner.column(j)?;
        let s = self.scale[j];
        for v in &mut c {
            *v *= s;
        }
        Ok(c)
    }
}

/// Materializes any operator column by column.
pub fn dense_from_columns<O: LinearOperator + ?Sized>(op: &O) -> Result<DMatrix<Complex64>> {
    let mut m = DMatrix::zeros(op.nrows(), op.ncols());
    for j in 0..op.ncols() {
        let c = op.column(j)?;
        m.column_mut(j).copy_from_slice(&c);
    }
    Ok(m)
}

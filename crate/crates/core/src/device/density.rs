use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance for trace, Hermiticity and positivity checks.
pub const STATE_TOL: f64 = 1e-10;

/// Single-qubit density matrix in the `{|0>, |1>}` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(Matrix2<Complex64>);

impl DensityMatrix {
    pub fn new(m: Matrix2<Complex64>) -> Result<Self> {
        let rho = Self(m);
        rho.check(1e-12)?;
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(m: Matrix2<Complex64>) -> Self {
        Self(m)
    }

    /// `|psi><psi|` for a normalised pure state.
    pub fn pure(a0: Complex64, a1: Complex64) -> Result<Self> {
        let v = nalgebra::Vector2::new(a0, a1);
        Self::new(v * v.adjoint())
    }

    pub fn ground() -> Self {
        Self(Matrix2::new(c(1.0), c(0.0), c(0.0), c(0.0)))
    }

    pub fn excited() -> Self {
        Self(Matrix2::new(c(0.0), c(0.0), c(0.0), c(1.0)))
    }

    /// `(|0> + |1>) / sqrt(2)`.
    pub fn plus() -> Self {
        let a = c(FRAC_1_SQRT_2);
        Self::pure(a, a).expect("normalised")
    }

    pub fn maximally_mixed() -> Self {
        Self(Matrix2::new(c(0.5), c(0.0), c(0.0), c(0.5)))
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.0
    }

    pub fn trace(&self) -> Complex64 {
        self.0[(0, 0)] + self.0[(1, 1)]
    }

    pub fn ground_population(&self) -> f64 {
        self.0[(0, 0)].re
    }

    pub fn excited_population(&self) -> f64 {
        self.0[(1, 1)].re
    }

    /// Eigenvalues, ascending, of the Hermitian part.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let a = self.0[(0, 0)].re;
        let d = self.0[(1, 1)].re;
        let b = (self.0[(0, 1)] + self.0[(1, 0)].conj()) / 2.0;
        let mean = (a + d) / 2.0;
        let radius = (((a - d) / 2.0).powi(2) + b.norm_sqr()).sqrt();
        [mean - radius, mean + radius]
    }

    /// Checks unit trace, Hermiticity and positivity to within `tol`.
    pub fn check(&self, tol: f64) -> Result<()> {
        let tr = self.trace();
        if !((tr - c(1.0)).norm() <= tol) {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let herm = (self.0 - self.0.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !(herm <= tol) {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let [low, _] = self.eigenvalues();
        if !(low >= -tol) {
            return Err(Error::InvalidState(format!("negative eigenvalue {low:e}")));
        }
        Ok(())
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

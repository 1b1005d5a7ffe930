//! Symmetric 2x2 diffusion tensors.

use crate::error::{LbmError, Result};

/// Symmetry tolerance on the off-diagonal entries.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// A 2x2 tensor stored row-major as `[[xx, xy], [yx, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tensor2(pub [[f64; 2]; 2]);

impl Tensor2 {
    pub fn new(xx: f64, xy: f64, yx: f64, yy: f64) -> Self {
        Tensor2([[xx, xy], [yx, yy]])
    }

    pub fn isotropic(d: f64) -> Self {
        Tensor2::new(d, 0.0, 0.0, d)
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Tensor2::new(a, 0.0, 0.0, b)
    }

    pub fn identity() -> Self {
        Tensor2::isotropic(1.0)
    }

    pub fn xx(&self) -> f64 {
        self.0[0][0]
    }
    pub fn xy(&self) -> f64 {
        self.0[0][1]
    }
    pub fn yx(&self) -> f64 {
        self.0[1][0]
    }
    pub fn yy(&self) -> f64 {
        self.0[1][1]
    }

    pub fn det(&self) -> f64 {
        self.xx() * self.yy() - self.xy() * self.yx()
    }

    pub fn trace(&self) -> f64 {
        self.xx() + self.yy()
    }

    pub fn transpose(&self) -> Self {
        Tensor2::new(self.xx(), self.yx(), self.xy(), self.yy())
    }

    pub fn mul(&self, o: &Tensor2) -> Self {
        let a = &self.0;
        let b = &o.0;
        let mut r = [[0.0; 2]; 2];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Tensor2(r)
    }

    pub fn scale(&self, s: f64) -> Self {
        Tensor2::new(self.xx() * s, self.xy() * s, self.yx() * s, self.yy() * s)
    }

    pub fn add(&self, o: &Tensor2) -> Self {
        Tensor2::new(
            self.xx() + o.xx(),
            self.xy() + o.xy(),
            self.yx() + o.yx(),
            self.yy() + o.yy(),
        )
    }

    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        (det != 0.0 && det.is_finite())
            .then(|| Tensor2::new(self.yy() / det, -self.xy() / det, -self.yx() / det, self.xx() / det))
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let off = 0.5 * (self.xy() + self.yx());
        let mean = 0.5 * self.trace();
        let half_gap = (0.25 * (self.xx() - self.yy()).powi(2) + off * off).sqrt();
        [mean - half_gap, mean + half_gap]
    }

    pub fn is_symmetric(&self) -> bool {
        (self.xy() - self.yx()).abs() <= SYMMETRY_TOL
    }

    /// Symmetric with strictly positive eigenvalues.
    pub fn is_spd(&self) -> bool {
        self.is_symmetric() && self.xx() > 0.0 && self.det() > 0.0 && self.eigenvalues()[0] > 0.0
    }

    pub fn ensure_spd(&self, context: impl FnOnce() -> String) -> Result<()> {
        if self.is_spd() && self.0.iter().flatten().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(LbmError::NotSpd { context: context() })
        }
    }

    /// Counterclockwise rotation by `theta`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Tensor2::new(c, -s, s, c)
    }

    /// `R^T D R` with `R` the counterclockwise rotation by `theta`.
    pub fn rotated(&self, theta: f64) -> Self {
        let r = Tensor2::rotation(theta);
        r.transpose().mul(self).mul(&r)
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.xx() * v[0] + self.xy() * v[1],
            self.yx() * v[0] + self.yy() * v[1],
        ]
    }
}

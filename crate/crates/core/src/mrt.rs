//! Moment-space (multiple-relaxation-time) collision for anisotropic diffusion.
//!
//! Two constructions are provided:
//!
//! * a D2Q5 scheme in the style of Yoshida and Nagaoka, where the first-order
//!   (flux) moments relax through the full 2x2 block
//!   `(I/2 + D / (c_s^2 dt))^-1`, recovering the tensor `D` by Chapman-Enskog;
//! * a D2Q9 scheme in the style of Huang and Wu on the Lallemand-Luo moment
//!   basis, with the same tensor-valued flux block and equilibrium moments
//!   parameterised by `(c1, c2, alpha1, alpha2)`:
//!   `j_eq = c1 phi v/c`, `q_eq = (c2/2) phi v/c`, `e_eq = (alpha2/4) phi`,
//!   `eps_eq = (alpha1/4) phi`, `p_xx_eq = p_xy_eq = 0`.
//!
//! All other moments relax with individually configurable rates.
//!
//! Moment rows use unit lattice velocities; the flux block is invariant to
//! that scaling because both flux rows share the factor `c`.

use nalgebra::{DMatrix, DVector};

use crate::error::{LbmError, Result};
use crate::lattice::{LatticeKind, LatticeModel};
use crate::tensor::Tensor2;

/// Invertible map from distributions to moments.
#[derive(Debug, Clone)]
pub struct MomentTransform {
    m: DMatrix<f64>,
    m_inv: DMatrix<f64>,
}

impl MomentTransform {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(LbmError::ShapeMismatch("moment matrix must be square".into()));
        }
        let m_inv = m.clone().try_inverse().ok_or(LbmError::SingularTransform)?;
        Ok(MomentTransform { m, m_inv })
    }

    pub fn identity(q: usize) -> Self {
        MomentTransform {
            m: DMatrix::identity(q, q),
            m_inv: DMatrix::identity(q, q),
        }
    }

    /// D2Q5 basis: density, two fluxes, and two second-order moments.
    pub fn d2q5() -> Self {
        #[rustfmt::skip]
        let rows = [
            1.0,  1.0,  1.0,  1.0,  1.0,
            0.0,  1.0, -1.0,  0.0,  0.0,
            0.0,  0.0,  0.0,  1.0, -1.0,
           -4.0,  1.0,  1.0,  1.0,  1.0,
            0.0,  1.0,  1.0, -1.0, -1.0,
        ];
        MomentTransform::new(DMatrix::from_row_slice(5, 5, &rows)).expect("D2Q5 basis is invertible")
    }

    /// Lallemand-Luo D2Q9 basis `(rho, e, eps, j_x, q_x, j_y, q_y, p_xx, p_xy)`.
    pub fn d2q9() -> Self {
        #[rustfmt::skip]
        let rows = [
             1.0,  1.0,  1.0,  1.0,  1.0,  1.0,  1.0,  1.0,  1.0,
            -4.0, -1.0, -1.0, -1.0, -1.0,  2.0,  2.0,  2.0,  2.0,
             4.0, -2.0, -2.0, -2.0, -2.0,  1.0,  1.0,  1.0,  1.0,
             0.0,  1.0,  0.0, -1.0,  0.0,  1.0, -1.0, -1.0,  1.0,
             0.0, -2.0,  0.0,  2.0,  0.0,  1.0, -1.0, -1.0,  1.0,
             0.0,  0.0,  1.0,  0.0, -1.0,  1.0,  1.0, -1.0, -1.0,
             0.0,  0.0, -2.0,  0.0,  2.0,  1.0,  1.0, -1.0, -1.0,
             0.0,  1.0, -1.0,  1.0, -1.0,  0.0,  0.0,  0.0,  0.0,
             0.0,  0.0,  0.0,  0.0,  0.0,  1.0, -1.0,  1.0, -1.0,
        ];
        MomentTransform::new(DMatrix::from_row_slice(9, 9, &rows)).expect("D2Q9 basis is invertible")
    }

    pub fn q(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn inverse_matrix(&self) -> &DMatrix<f64> {
        &self.m_inv
    }

    pub fn to_moments(&self, f: &[f64]) -> Vec<f64> {
        (&self.m * DVector::from_column_slice(f)).as_slice().to_vec()
    }

    pub fn to_distributions(&self, m: &[f64]) -> Vec<f64> {
        (&self.m_inv * DVector::from_column_slice(m)).as_slice().to_vec()
    }
}

/// Matrix of relaxation rates acting on moments.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationMatrix {
    pub s: DMatrix<f64>,
}

impl RelaxationMatrix {
    /// `S = I / tau`, the single-relaxation-time limit.
    pub fn isotropic(tau: f64, q: usize) -> Self {
        RelaxationMatrix {
            s: DMatrix::identity(q, q) / tau,
        }
    }

    pub fn diagonal(rates: &[f64]) -> Self {
        RelaxationMatrix {
            s: DMatrix::from_diagonal(&DVector::from_column_slice(rates)),
        }
    }

    /// Replaces the `(jx, jy)` block with `block`.
    pub fn with_flux_block(mut self, jx: usize, jy: usize, block: &Tensor2) -> Self {
        self.s[(jx, jx)] = block.xx();
        self.s[(jx, jy)] = block.xy();
        self.s[(jy, jx)] = block.yx();
        self.s[(jy, jy)] = block.yy();
        self
    }
}

/// Linear rule `m_eq = E [phi, phi vx/c, phi vy/c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumMoments {
    pub e: DMatrix<f64>,
}

impl EquilibriumMoments {
    pub fn moments(&self, phi: f64, v_lattice: [f64; 2]) -> Vec<f64> {
        let x = DVector::from_column_slice(&[phi, phi * v_lattice[0], phi * v_lattice[1]]);
        (&self.e * x).as_slice().to_vec()
    }
}

/// Free parameters of the D2Q9 Huang-Wu style scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HwParams {
    pub c1: f64,
    pub c2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    /// Rates `s_0..s_8`; entries at the flux rows are replaced by the
    /// tensor block.
    pub rates: [f64; 9],
}

impl Default for HwParams {
    fn default() -> Self {
        HwParams {
            c1: 1.0,
            c2: -2.0,
            alpha1: 8.0,
            alpha2: -8.0,
            rates: [1.0; 9],
        }
    }
}

impl HwParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.c1, self.c2, self.alpha1, self.alpha2]
            .iter()
            .chain(self.rates.iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(LbmError::InvalidParameter("H-W parameters must be finite".into()));
        }
        if self.rates.iter().any(|&s| !(s > 0.0 && s < 2.0)) {
            return Err(LbmError::InvalidParameter("H-W relaxation rates must lie in (0, 2)".into()));
        }
        Ok(())
    }
}

/// Free parameters of the D2Q5 Yoshida-Nagaoka style scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YnParams {
    /// Rates of the two second-order moments.
    pub rates: [f64; 2],
}

impl Default for YnParams {
    fn default() -> Self {
        YnParams { rates: [1.0, 1.0] }
    }
}

/// `(I/2 + D/(c_s^2 dt))^-1`, the relaxation block of the flux moments.
pub fn flux_block(d: &Tensor2, dt: f64, cs_sq: f64) -> Result<Tensor2> {
    d.ensure_spd(|| format!("{:?}", d.0))?;
    if !(dt > 0.0 && cs_sq > 0.0) {
        return Err(LbmError::InvalidParameter("dt and c_s^2 must be positive".into()));
    }
    Tensor2::identity()
        .scale(0.5)
        .add(&d.scale(1.0 / (cs_sq * dt)))
        .inverse()
        .ok_or_else(|| LbmError::NotSpd { context: "flux block".into() })
}

/// Moment-space collision with the source lifted through `M |w> g`.
pub fn collide_mrt(
    f: &[f64],
    f_eq: &[f64],
    transform: &MomentTransform,
    relax: &RelaxationMatrix,
    g: f64,
    dt: f64,
    model: &LatticeModel,
) -> Result<Vec<f64>> {
    let q = model.q();
    if f.len() != q || f_eq.len() != q || transform.q() != q || relax.s.nrows() != q {
        return Err(LbmError::ShapeMismatch(format!(
            "collide_mrt expects {q} directions"
        )));
    }
    let m = &transform.m * DVector::from_column_slice(f);
    let m_eq = &transform.m * DVector::from_column_slice(f_eq);
    let w = DVector::from_column_slice(&model.weights);
    let source = &transform.m * w * (dt * g);
    let m_post = &m - &relax.s * (&m - m_eq) + source;
    Ok((&transform.m_inv * m_post).as_slice().to_vec())
}

/// D2Q5 transform and relaxation matrix recovering the tensor `d`.
pub fn yn_relaxation(d: &Tensor2, dt: f64, c: f64) -> Result<(MomentTransform, RelaxationMatrix)> {
    yn_relaxation_with(d, dt, c, &YnParams::default())
}

pub fn yn_relaxation_with(
    d: &Tensor2,
    dt: f64,
    c: f64,
    params: &YnParams,
) -> Result<(MomentTransform, RelaxationMatrix)> {
    let cs_sq = c * c / 3.0;
    let block = flux_block(d, dt, cs_sq)?;
    let relax = RelaxationMatrix::diagonal(&[1.0, 0.0, 0.0, params.rates[0], params.rates[1]])
        .with_flux_block(1, 2, &block);
    Ok((MomentTransform::d2q5(), relax))
}

/// D2Q9 transform, relaxation matrix and equilibrium-moment rule.
pub fn hw_relaxation(
    d: &Tensor2,
    params: &HwParams,
    dt: f64,
    c: f64,
) -> Result<(MomentTransform, RelaxationMatrix, EquilibriumMoments)> {
    params.validate()?;
    let cs_sq = c * c / 3.0;
    let block = flux_block(d, dt, cs_sq)?;
    let relax = RelaxationMatrix::diagonal(&params.rates).with_flux_block(3, 5, &block);
    Ok((MomentTransform::d2q9(), relax, hw_equilibrium(params)))
}

pub fn hw_equilibrium(params: &HwParams) -> EquilibriumMoments {
    let mut e = DMatrix::zeros(9, 3);
    e[(0, 0)] = 1.0;
    e[(1, 0)] = params.alpha2 / 4.0;
    e[(2, 0)] = params.alpha1 / 4.0;
    e[(3, 1)] = params.c1;
    e[(4, 1)] = params.c2 / 2.0;
    e[(5, 2)] = params.c1;
    e[(6, 2)] = params.c2 / 2.0;
    EquilibriumMoments { e }
}

/// Standard equilibrium `w_i (1 + e_i.v/(k c^2))` as a `q x 3` matrix acting on
/// `[phi, phi vx/c, phi vy/c]`, with `k` the lattice second moment.
pub fn standard_equilibrium_matrix(model: &LatticeModel) -> DMatrix<f64> {
    let q = model.q();
    let k = model.second_moment();
    DMatrix::from_fn(q, 3, |i, col| {
        let w = model.weights[i];
        match col {
            0 => w,
            c => w * model.e(i)[c - 1] / k,
        }
    })
}

/// Per-node collision operator `f <- f - A (f - E x) + w dt g` with
/// `x = [u, u vx/c, u vy/c]`.
#[derive(Debug, Clone)]
pub struct CollisionKernel {
    q: usize,
    relax: Relax,
    /// Row-major `q x 3`.
    eq: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Relax {
    Scalar(f64),
    /// Row-major `q x q`.
    Matrix(Vec<f64>),
}

impl CollisionKernel {
    pub fn bgk(model: &LatticeModel, tau: f64) -> Self {
        CollisionKernel {
            q: model.q(),
            relax: Relax::Scalar(1.0 / tau),
            eq: row_major(&standard_equilibrium_matrix(model)),
        }
    }

    /// `A = M^-1 S M`, equilibrium mapped back to velocity space.
    pub fn from_moments(
        transform: &MomentTransform,
        relax: &RelaxationMatrix,
        eq_moments: Option<&EquilibriumMoments>,
        model: &LatticeModel,
    ) -> Self {
        let a = &transform.m_inv * &relax.s * &transform.m;
        let eq = match eq_moments {
            Some(em) => &transform.m_inv * &em.e,
            None => standard_equilibrium_matrix(model),
        };
        CollisionKernel {
            q: model.q(),
            relax: Relax::Matrix(row_major(&a)),
            eq: row_major(&eq),
        }
    }

    /// Equilibrium populations for concentration `u` and lattice velocity `vl = v/c`.
    pub fn equilibrium_into(&self, u: f64, vl: [f64; 2], out: &mut [f64]) {
        let x = [u, u * vl[0], u * vl[1]];
        for (i, o) in out.iter_mut().enumerate().take(self.q) {
            let r = &self.eq[3 * i..3 * i + 3];
            *o = r[0] * x[0] + r[1] * x[1] + r[2] * x[2];
        }
    }

    /// In-place collision. `source[i]` is the pre-scaled `w_i dt g`.
    pub fn collide(&self, f: &mut [f64], vl: [f64; 2], source: Option<&[f64]>) {
        const MAXQ: usize = 9;
        let q = self.q;
        let u: f64 = f.iter().sum();
        let mut diff = [0.0; MAXQ];
        self.equilibrium_into(u, vl, &mut diff[..q]);
        for i in 0..q {
            diff[i] = f[i] - diff[i];
        }
        match &self.relax {
            Relax::Scalar(omega) => {
                for i in 0..q {
                    f[i] -= omega * diff[i];
                }
            }
            Relax::Matrix(a) => {
                for i in 0..q {
                    let row = &a[i * q..(i + 1) * q];
                    let mut s = 0.0;
                    for j in 0..q {
                        s += row[j] * diff[j];
                    }
                    f[i] -= s;
                }
            }
        }
        if let Some(src) = source {
            for i in 0..q {
                f[i] += src[i];
            }
        }
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Collision kernel for a scheme on a given lattice at one node.
pub fn kernel_for_tensor(
    model: &LatticeModel,
    scheme: &crate::transport::CollisionScheme,
    d: &Tensor2,
    dt: f64,
    c: f64,
) -> Result<CollisionKernel> {
    use crate::transport::CollisionScheme;
    match scheme {
        CollisionScheme::Srt => {
            if !(d.is_symmetric() && d.xy() == 0.0 && d.xx() == d.yy()) {
                return Err(LbmError::InvalidParameter(
                    "single-relaxation-time collision needs an isotropic diffusivity".into(),
                ));
            }
            let tau = crate::transport::relaxation_time(d.xx(), dt, model.cs_sq_factor * c * c)?;
            Ok(CollisionKernel::bgk(model, tau))
        }
        CollisionScheme::YoshidaNagaoka(p) => {
            if model.kind != LatticeKind::D2Q5 {
                return Err(LbmError::InvalidParameter("Y-N scheme requires D2Q5".into()));
            }
            let (t, s) = yn_relaxation_with(d, dt, c, p)?;
            Ok(CollisionKernel::from_moments(&t, &s, None, model))
        }
        CollisionScheme::HuangWu(p) => {
            if model.kind != LatticeKind::D2Q9 {
                return Err(LbmError::InvalidParameter("H-W scheme requires D2Q9".into()));
            }
            let (t, s, e) = hw_relaxation(d, p, dt, c)?;
            Ok(CollisionKernel::from_moments(&t, &s, Some(&e), model))
        }
    }
}

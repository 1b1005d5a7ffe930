//! Closed-form fields used by the scenarios: exact solutions, velocity
//! fields and diffusion tensors.

use std::f64::consts::PI;

use lbm_core::Tensor2;

use crate::error::BenchError;

/// Accuracy target for the truncated series.
pub const SERIES_TOL: f64 = 1e-12;

/// Bound on the series remainder after the odd term `n_max`.
///
/// For odd `n > n_max` every exponential is at most that of `n_max + 2`, and
/// the odd-reciprocal-cube tail is at most `1 / (4 n_max^2)`.
fn s3_tail_bound(n_max: usize, t: f64, d: f64) -> f64 {
    let n = n_max.max(1) as f64;
    let next = n + 2.0;
    (-d * next * next * PI * PI * t).exp() / (d * PI.powi(3) * n * n)
}

/// Smallest odd term count for which the remainder is below `tol`.
pub fn s3_terms_needed(t: f64, d: f64, tol: f64) -> usize {
    let mut n = 1usize;
    while s3_tail_bound(n, t, d) >= tol {
        n = if n < 64 { n + 2 } else { (n * 3 / 2) | 1 };
        if n > 100_000_000 {
            break;
        }
    }
    n
}

/// Solution of `u_t = D u_xx + 1` on `(0, 1)` with zero ends and zero
/// initial data:
/// `u = x(1-x)/(2D) - sum_{n odd} 4/(D n^3 pi^3) exp(-D n^2 pi^2 t) sin(n pi x)`.
///
/// `terms` is the largest odd index kept; the call fails when the remainder
/// bound exceeds [`SERIES_TOL`].
pub fn exact_solution_s3(x: f64, t: f64, d: f64, terms: usize) -> Result<f64, BenchError> {
    if !(0.0..=1.0).contains(&x) || t < 0.0 || !(d > 0.0) {
        return Err(BenchError::Config(format!("oracle outside its domain: x={x}, t={t}, D={d}")));
    }
    if t == 0.0 || x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    let bound = s3_tail_bound(terms, t, d);
    if bound >= SERIES_TOL {
        return Err(BenchError::Oracle(format!(
            "{terms} terms leave a remainder bound of {bound:e} at t={t}"
        )));
    }
    // summed from the smallest term up
    let mut transient = 0.0;
    let top = if terms.is_multiple_of(2) { terms - 1 } else { terms };
    let mut n = top;
    loop {
        let nf = n as f64;
        transient += 4.0 / (d * nf.powi(3) * PI.powi(3)) * (-d * nf * nf * PI * PI * t).exp() * (nf * PI * x).sin();
        if n == 1 {
            break;
        }
        n -= 2;
    }
    Ok(x * (1.0 - x) / (2.0 * d) - transient)
}

/// Evaluates the S3 solution at several points with one term count.
pub fn exact_profile_s3(xs: &[f64], t: f64, d: f64) -> Result<Vec<f64>, BenchError> {
    let terms = s3_terms_needed(t, d, SERIES_TOL);
    xs.iter().map(|&x| exact_solution_s3(x, t, d, terms)).collect()
}

/// Stream-function velocity field
/// `psi = -y - sum_k alpha_k cos(p_k pi x / L_x - pi/2) sin(q_k pi y / L_y)`
/// with `v = (-d psi/dy, d psi/dx)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamFunction {
    pub p: [f64; 3],
    pub q: [f64; 3],
    pub alpha: [f64; 3],
    pub lx: f64,
    pub ly: f64,
}

impl StreamFunction {
    pub fn psi(&self, x: f64, y: f64) -> f64 {
        let mut s = -y;
        for k in 0..3 {
            s -= self.alpha[k] * (self.p[k] * PI * x / self.lx - PI / 2.0).cos() * (self.q[k] * PI * y / self.ly).sin();
        }
        s
    }

    pub fn velocity(&self, x: f64, y: f64) -> [f64; 2] {
        let mut v = [1.0, 0.0];
        for k in 0..3 {
            let kx = self.p[k] * PI / self.lx;
            let ky = self.q[k] * PI / self.ly;
            let ax = kx * x - PI / 2.0;
            v[0] += self.alpha[k] * ky * ax.cos() * (ky * y).cos();
            v[1] += self.alpha[k] * kx * ax.sin() * (ky * y).sin();
        }
        v
    }
}

pub fn stream_function_velocity(sf: &StreamFunction, x: f64, y: f64) -> [f64; 2] {
    sf.velocity(x, y)
}

/// `base I + beta_T |v| I + (beta_L - beta_T) v v^T / |v|`.
pub fn dispersion_tensor(v: [f64; 2], base: f64, beta_t: f64, beta_l: f64) -> Tensor2 {
    let speed = (v[0] * v[0] + v[1] * v[1]).sqrt();
    let iso = Tensor2::isotropic(base + beta_t * speed);
    if speed == 0.0 {
        return iso;
    }
    let k = (beta_l - beta_t) / speed;
    iso.add(&Tensor2::new(k * v[0] * v[0], k * v[0] * v[1], k * v[1] * v[0], k * v[1] * v[1]))
}

/// `eps' I + [[eps x^2 + y^2, -(1-eps) x y], [-(1-eps) x y, x^2 + eps y^2]]`.
pub fn heterogeneous_tensor(x: f64, y: f64, eps: f64, eps_prime: f64) -> Tensor2 {
    let off = -(1.0 - eps) * x * y;
    Tensor2::new(eps * x * x + y * y, off, off, x * x + eps * y * y).add(&Tensor2::isotropic(eps_prime))
}

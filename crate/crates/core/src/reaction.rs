//! Instantaneous bimolecular reaction `n_A A + n_B B -> n_C C` through two
//! reaction-invariant fields.
//!
//! With `psi_F = u_A/n_A - u_B/n_B` and `psi_G = u_A/n_A + u_C/n_C`, the
//! reaction terms cancel, so both fields obey the plain transport equation.
//! Because A and B cannot coexist, the species follow from the invariants:
//! the sign of `psi_F` says which reactant is left over, and whatever of
//! `psi_G` is not explained by leftover A must be product.

use crate::error::{LbmError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stoichiometry {
    pub n_a: u32,
    pub n_b: u32,
    pub n_c: u32,
}

impl Stoichiometry {
    pub fn new(n_a: u32, n_b: u32, n_c: u32) -> Result<Self> {
        if n_a == 0 || n_b == 0 || n_c == 0 {
            return Err(LbmError::InvalidParameter("stoichiometric coefficients must be positive".into()));
        }
        Ok(Stoichiometry { n_a, n_b, n_c })
    }
}

/// `(psi_F, psi_G)` for one node.
pub fn to_invariants(u_a: f64, u_b: f64, u_c: f64, s: Stoichiometry) -> (f64, f64) {
    let a = u_a / s.n_a as f64;
    (a - u_b / s.n_b as f64, a + u_c / s.n_c as f64)
}

/// `(u_A, u_B, u_C)` for one node.
pub fn from_invariants(psi_f: f64, psi_g: f64, s: Stoichiometry) -> (f64, f64, f64) {
    let excess_a = psi_f.max(0.0);
    let excess_b = psi_f.min(0.0);
    (
        s.n_a as f64 * excess_a,
        -(s.n_b as f64) * excess_b,
        s.n_c as f64 * (psi_g - excess_a),
    )
}

/// Species fields recovered from invariant fields.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesFields {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

pub fn species_from_fields(psi_f: &[f64], psi_g: &[f64], s: Stoichiometry) -> Result<SpeciesFields> {
    if psi_f.len() != psi_g.len() {
        return Err(LbmError::ShapeMismatch("invariant fields differ in length".into()));
    }
    let mut out = SpeciesFields {
        a: Vec::with_capacity(psi_f.len()),
        b: Vec::with_capacity(psi_f.len()),
        c: Vec::with_capacity(psi_f.len()),
    };
    for (&f, &g) in psi_f.iter().zip(psi_g) {
        let (a, b, c) = from_invariants(f, g, s);
        out.a.push(a);
        out.b.push(b);
        out.c.push(c);
    }
    Ok(out)
}

//! Discrete checks of the maximum principle, comparison principle,
//! non-negativity and decay, plus integral monitors and error norms.

use std::io::Write;

use crate::error::{LbmError, Result};
use crate::lattice::Grid;
use crate::reaction::Stoichiometry;
use crate::transport::{Observer, Sample};

/// Default absolute threshold for calling something a violation.
pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    Pass,
    Violated {
        first_time: f64,
        worst_value: f64,
        worst_node: usize,
    },
}

impl Verdict {
    pub fn is_violated(&self) -> bool {
        matches!(self, Verdict::Violated { .. })
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Pass => write!(f, "pass"),
            Verdict::Violated {
                first_time,
                worst_value,
                worst_node,
            } => write!(f, "violated (first t={first_time:e}, worst {worst_value:e} at node {worst_node})"),
        }
    }
}

/// Exact min and max over masked nodes, with the nodes where they occur.
pub fn track_extrema(u: &[f64], mask: &[bool]) -> Result<((f64, usize), (f64, usize))> {
    let mut lo: Option<(f64, usize)> = None;
    let mut hi: Option<(f64, usize)> = None;
    for (n, (&v, &m)) in u.iter().zip(mask).enumerate() {
        if !m {
            continue;
        }
        if lo.is_none_or(|(x, _)| v < x) {
            lo = Some((v, n));
        }
        if hi.is_none_or(|(x, _)| v > x) {
            hi = Some((v, n));
        }
    }
    match (lo, hi) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(LbmError::EmptyMask),
    }
}

pub fn count_negatives(u: &[f64], mask: &[bool], tol: f64) -> usize {
    u.iter().zip(mask).filter(|(&v, &m)| m && v < -tol).count()
}

/// Nodes with `u < -tol`.
pub fn negative_nodes(u: &[f64], mask: &[bool], tol: f64) -> Vec<usize> {
    u.iter()
        .zip(mask)
        .enumerate()
        .filter(|(_, (&v, &m))| m && v < -tol)
        .map(|(n, _)| n)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Integrals {
    pub j1: f64,
    pub j1_pos: f64,
    pub j2: f64,
    pub j2_pos: f64,
}

/// Node-value times cell-volume sums of `u`, `max(u,0)`, `u^2` and `max(u,0)^2`.
pub fn integrals(u: &[f64], mask: &[bool], dx: f64, dim: usize) -> Integrals {
    let vol = dx.powi(dim as i32);
    let mut s = Integrals::default();
    for (&v, &m) in u.iter().zip(mask) {
        if !m {
            continue;
        }
        let p = v.max(0.0);
        s.j1 += v;
        s.j1_pos += p;
        s.j2 += v * v;
        s.j2_pos += p * p;
    }
    Integrals {
        j1: s.j1 * vol,
        j1_pos: s.j1_pos * vol,
        j2: s.j2 * vol,
        j2_pos: s.j2_pos * vol,
    }
}

pub fn clip_negatives(u: &[f64]) -> Vec<f64> {
    u.iter().map(|v| v.max(0.0)).collect()
}

/// `(1/N) sqrt(sum (u - u_exact)^2)` over masked nodes.
pub fn error_norm(u: &[f64], exact: impl Fn(usize) -> f64, mask: &[bool]) -> f64 {
    let mut n = 0usize;
    let mut sum = 0.0;
    for (node, (&v, &m)) in u.iter().zip(mask).enumerate() {
        if m {
            let d = v - exact(node);
            sum += d * d;
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        sum.sqrt() / n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalDt {
    pub threshold: f64,
    pub satisfied: bool,
}

/// `dt >= dx^2 / (6 D)`.
pub fn critical_dt_check(dx: f64, dt: f64, d: f64) -> Result<CriticalDt> {
    if !(dx > 0.0 && dt > 0.0 && d > 0.0) {
        return Err(LbmError::InvalidParameter("dx, dt and D must be positive".into()));
    }
    let threshold = dx * dx / (6.0 * d);
    Ok(CriticalDt {
        threshold,
        satisfied: dt >= threshold,
    })
}

/// One observed sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRow {
    pub step: usize,
    pub t: f64,
    pub u_min: f64,
    pub u_min_node: usize,
    pub u_max: f64,
    pub u_max_node: usize,
    pub n_neg: usize,
    pub integrals: Integrals,
    pub error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Verdicts {
    pub maximum_principle: Option<Verdict>,
    pub non_negativity: Option<Verdict>,
    pub comparison: Option<Verdict>,
    pub decay: Option<Verdict>,
}

impl Verdicts {
    pub fn any_violated(&self) -> bool {
        [&self.maximum_principle, &self.non_negativity, &self.comparison, &self.decay]
            .iter()
            .any(|v| v.is_some_and(|v| v.is_violated()))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PropertyReport {
    pub rows: Vec<SampleRow>,
    /// Number of non-solid nodes.
    pub n: usize,
    pub verdicts: Verdicts,
    pub notes: Vec<String>,
}

impl PropertyReport {
    pub fn last(&self) -> Option<&SampleRow> {
        self.rows.last()
    }

    pub fn global_min(&self) -> Option<&SampleRow> {
        self.rows.iter().min_by(|a, b| a.u_min.total_cmp(&b.u_min))
    }

    pub fn global_max(&self) -> Option<&SampleRow> {
        self.rows.iter().max_by(|a, b| a.u_max.total_cmp(&b.u_max))
    }

    pub fn j2_series(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.t, r.integrals.j2)).collect()
    }

    /// Evaluates the maximum principle and non-negativity verdicts.
    pub fn check_bounds(&mut self, lower: f64, upper: f64, tol: f64) {
        self.verdicts.maximum_principle = Some(check_maximum_principle(self, lower, upper, tol));
        self.verdicts.non_negativity = Some(check_non_negativity(self, tol));
    }

    pub fn check_non_negativity(&mut self, tol: f64) {
        self.verdicts.non_negativity = Some(check_non_negativity(self, tol));
    }

    pub fn check_decay(&mut self, tol: Option<f64>) {
        let j2 = self.j2_series();
        let tol = tol.unwrap_or_else(|| DEFAULT_TOL * j2.first().map_or(0.0, |r| r.1));
        self.verdicts.decay = Some(check_decay(&j2, tol));
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,u_min,u_max,N_neg,J1,J1+,J2,J2+,error")?;
        for r in &self.rows {
            let err = r.error.map(|e| format!("{e:?}")).unwrap_or_default();
            writeln!(
                w,
                "{:?},{:?},{:?},{},{:?},{:?},{:?},{:?},{}",
                r.t,
                r.u_min,
                r.u_max,
                r.n_neg,
                r.integrals.j1,
                r.integrals.j1_pos,
                r.integrals.j2,
                r.integrals.j2_pos,
                err
            )?;
        }
        Ok(())
    }
}

/// Violated iff some sample leaves `[lower - tol, upper + tol]`.
pub fn check_maximum_principle(report: &PropertyReport, lower: f64, upper: f64, tol: f64) -> Verdict {
    let mut first = None;
    let mut worst: Option<(f64, f64, usize)> = None;
    for r in &report.rows {
        let below = lower - r.u_min;
        let above = r.u_max - upper;
        for (excess, value, node) in [(below, r.u_min, r.u_min_node), (above, r.u_max, r.u_max_node)] {
            if excess > tol {
                first.get_or_insert(r.t);
                if worst.is_none_or(|(e, _, _)| excess > e) {
                    worst = Some((excess, value, node));
                }
            }
        }
    }
    match (first, worst) {
        (Some(first_time), Some((_, worst_value, worst_node))) => Verdict::Violated {
            first_time,
            worst_value,
            worst_node,
        },
        _ => Verdict::Pass,
    }
}

pub fn check_non_negativity(report: &PropertyReport, tol: f64) -> Verdict {
    let mut first = None;
    let mut worst: Option<&SampleRow> = None;
    for r in &report.rows {
        if r.u_min < -tol {
            first.get_or_insert(r.t);
            if worst.is_none_or(|w| r.u_min < w.u_min) {
                worst = Some(r);
            }
        }
    }
    match (first, worst) {
        (Some(first_time), Some(w)) => Verdict::Violated {
            first_time,
            worst_value: w.u_min,
            worst_node: w.u_min_node,
        },
        _ => Verdict::Pass,
    }
}

/// Violated iff `J2` rises by more than `tol` between consecutive samples.
/// The worst value is the largest rise.
pub fn check_decay(j2: &[(f64, f64)], tol: f64) -> Verdict {
    let mut first = None;
    let mut worst = 0.0f64;
    for w in j2.windows(2) {
        let rise = w[1].1 - w[0].1;
        if rise > tol {
            first.get_or_insert(w[1].0);
            worst = worst.max(rise);
        }
    }
    match first {
        Some(first_time) => Verdict::Violated {
            first_time,
            worst_value: worst,
            worst_node: 0,
        },
        None => Verdict::Pass,
    }
}

/// Snapshots of two runs on the same grid and sample times.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FieldSeries {
    pub times: Vec<f64>,
    pub fields: Vec<Vec<f64>>,
}

impl Observer for FieldSeries {
    fn observe(&mut self, s: &Sample<'_>) -> Result<()> {
        self.times.push(s.time);
        self.fields.push(s.u.to_vec());
        Ok(())
    }
}

/// Violated iff the run with the smaller data ever exceeds the other by more
/// than `tol`.
pub fn check_comparison(lower: &FieldSeries, upper: &FieldSeries, mask: &[bool], tol: f64) -> Result<Verdict> {
    if lower.fields.len() != upper.fields.len()
        || lower.fields.iter().zip(&upper.fields).any(|(a, b)| a.len() != b.len() || a.len() != mask.len())
    {
        return Err(LbmError::ShapeMismatch("comparison runs differ in shape".into()));
    }
    let mut first = None;
    let mut worst: Option<(f64, usize)> = None;
    for (k, (a, b)) in lower.fields.iter().zip(&upper.fields).enumerate() {
        for (n, ((&x, &y), &m)) in a.iter().zip(b).zip(mask).enumerate() {
            if !m {
                continue;
            }
            let gap = x - y;
            if gap > tol {
                first.get_or_insert(lower.times[k]);
                if worst.is_none_or(|(g, _)| gap > g) {
                    worst = Some((gap, n));
                }
            }
        }
    }
    Ok(match (first, worst) {
        (Some(first_time), Some((worst_value, worst_node))) => Verdict::Violated {
            first_time,
            worst_value,
            worst_node,
        },
        _ => Verdict::Pass,
    })
}

pub type Oracle = Box<dyn Fn([f64; 2], f64) -> f64 + Send + Sync>;

/// Observer that accumulates a [`PropertyReport`].
pub struct Monitor {
    mask: Vec<bool>,
    dx: f64,
    dim: usize,
    tol: f64,
    oracle: Option<Oracle>,
    error_stride: usize,
    report: PropertyReport,
    min_population: f64,
}

impl Monitor {
    pub fn new(grid: &Grid, dim: usize) -> Self {
        let mask = grid.fluid_mask();
        let n = mask.iter().filter(|&&m| m).count();
        Monitor {
            mask,
            dx: grid.dx,
            dim,
            tol: DEFAULT_TOL,
            oracle: None,
            error_stride: 1,
            report: PropertyReport {
                n,
                ..PropertyReport::default()
            },
            min_population: f64::INFINITY,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_oracle(mut self, oracle: Oracle) -> Self {
        self.oracle = Some(oracle);
        self
    }

    /// Evaluates the oracle only on every `stride`-th sample.
    pub fn with_error_stride(mut self, stride: usize) -> Self {
        self.error_stride = stride.max(1);
        self
    }

    /// Fills in the error of the last sample if the stride skipped it.
    pub fn complete_error(&mut self, u: &[f64], grid: &Grid) {
        if let (Some(o), Some(last)) = (self.oracle.as_ref(), self.report.rows.last_mut()) {
            if last.error.is_none() {
                let t = last.t;
                last.error = Some(error_norm(u, |n| o(grid.position(n), t), &self.mask));
            }
        }
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Smallest distribution value seen at any sample.
    pub fn min_population(&self) -> f64 {
        self.min_population
    }

    pub fn record(&mut self, step: usize, t: f64, u: &[f64], grid: &Grid) -> Result<()> {
        let ((u_min, u_min_node), (u_max, u_max_node)) = track_extrema(u, &self.mask)?;
        let error = self
            .oracle
            .as_ref()
            .filter(|_| self.report.rows.len().is_multiple_of(self.error_stride))
            .map(|o| error_norm(u, |n| o(grid.position(n), t), &self.mask));
        self.report.rows.push(SampleRow {
            step,
            t,
            u_min,
            u_min_node,
            u_max,
            u_max_node,
            n_neg: count_negatives(u, &self.mask, self.tol),
            integrals: integrals(u, &self.mask, self.dx, self.dim),
            error,
        });
        Ok(())
    }

    pub fn report(&self) -> &PropertyReport {
        &self.report
    }

    pub fn into_report(self) -> PropertyReport {
        self.report
    }
}

impl Observer for Monitor {
    fn observe(&mut self, s: &Sample<'_>) -> Result<()> {
        for (n, &m) in self.mask.iter().enumerate() {
            if m {
                for &f in s.field.node(n) {
                    self.min_population = self.min_population.min(f);
                }
            }
        }
        self.record(s.step, s.time, s.u, s.grid)
    }
}

/// Attribution of negative product concentration to invariant undershoot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductAttribution {
    /// Nodes with `u_C < -tol`.
    pub negative: usize,
    /// Of those, nodes where `psi_G < max(psi_F, 0)`.
    pub explained: usize,
    /// Most negative value of `psi_G - max(psi_F, 0)`.
    pub worst_undershoot: f64,
}

pub fn attribute_product_negativity(
    psi_f: &[f64],
    psi_g: &[f64],
    u_c: &[f64],
    mask: &[bool],
    _stoich: Stoichiometry,
    tol: f64,
) -> ProductAttribution {
    let mut out = ProductAttribution {
        negative: 0,
        explained: 0,
        worst_undershoot: 0.0,
    };
    for n in 0..u_c.len() {
        if !mask[n] {
            continue;
        }
        let gap = psi_g[n] - psi_f[n].max(0.0);
        out.worst_undershoot = out.worst_undershoot.min(gap);
        if u_c[n] < -tol {
            out.negative += 1;
            if gap < 0.0 {
                out.explained += 1;
            }
        }
    }
    out
}

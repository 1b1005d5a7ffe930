//! Artifact writers: per-series report CSV, structured-points snapshots,
//! negative-node masks and a JSON summary.
//!
//! Floats are written with `{:?}`, which round-trips `f64` exactly, so
//! snapshots reload bit for bit and identical runs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use lbm_core::diagnostics::{negative_nodes, Verdict, DEFAULT_TOL};
use lbm_core::Grid;
use serde_json::{json, Value};

use crate::error::BenchError;
use crate::runner::RunOutput;

/// A scalar field on a structured grid as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub name: String,
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub origin: [f64; 2],
    /// Row-major, `x` fastest.
    pub values: Vec<f64>,
}

impl Snapshot {
    pub fn from_grid(grid: &Grid, name: &str, values: &[f64]) -> Result<Self, BenchError> {
        if values.len() != grid.len() {
            return Err(BenchError::Config(format!(
                "field {name} has {} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Snapshot {
            name: name.to_string(),
            nx: grid.nx,
            ny: grid.ny,
            dx: grid.dx,
            origin: grid.origin,
            values: values.to_vec(),
        })
    }

    /// Legacy VTK `STRUCTURED_POINTS` in ASCII.
    pub fn to_vtk(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# vtk DataFile Version 3.0");
        let _ = writeln!(s, "{}", self.name);
        let _ = writeln!(s, "ASCII");
        let _ = writeln!(s, "DATASET STRUCTURED_POINTS");
        let _ = writeln!(s, "DIMENSIONS {} {} 1", self.nx, self.ny);
        let _ = writeln!(s, "ORIGIN {:?} {:?} 0.0", self.origin[0], self.origin[1]);
        let _ = writeln!(s, "SPACING {:?} {:?} {:?}", self.dx, self.dx, self.dx);
        let _ = writeln!(s, "POINT_DATA {}", self.values.len());
        let _ = writeln!(s, "SCALARS {} double 1", self.name);
        let _ = writeln!(s, "LOOKUP_TABLE default");
        for v in &self.values {
            let _ = writeln!(s, "{v:?}");
        }
        s
    }

    pub fn parse_vtk(text: &str) -> Result<Self, BenchError> {
        let bad = |msg: &str| BenchError::Config(format!("snapshot: {msg}"));
        let mut lines = text.lines();
        let mut header = |key: &str| -> Result<Vec<String>, BenchError> {
            for line in lines.by_ref() {
                let mut parts = line.split_whitespace();
                if parts.next() == Some(key) {
                    return Ok(parts.map(str::to_string).collect());
                }
            }
            Err(bad(&format!("missing {key}")))
        };
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("bad number {s:?}")));
        let int = |s: &str| s.parse::<usize>().map_err(|_| bad(&format!("bad count {s:?}")));

        let dims = header("DIMENSIONS")?;
        let origin = header("ORIGIN")?;
        let spacing = header("SPACING")?;
        let count = header("POINT_DATA")?;
        let scalars = header("SCALARS")?;
        header("LOOKUP_TABLE")?;
        if dims.len() < 2 || origin.len() < 2 || spacing.is_empty() || count.is_empty() || scalars.is_empty() {
            return Err(bad("truncated header"));
        }
        let (nx, ny) = (int(&dims[0])?, int(&dims[1])?);
        let n = int(&count[0])?;
        if n != nx * ny {
            return Err(bad("POINT_DATA does not match DIMENSIONS"));
        }
        let values = lines
            .flat_map(str::split_whitespace)
            .map(num)
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() != n {
            return Err(bad(&format!("expected {n} values, found {}", values.len())));
        }
        Ok(Snapshot {
            name: scalars[0].clone(),
            nx,
            ny,
            dx: num(&spacing[0])?,
            origin: [num(&origin[0])?, num(&origin[1])?],
            values,
        })
    }
}

/// Nodes with `u < -tol` as `node,i,j,x,y,u`.
pub fn negative_mask_csv(grid: &Grid, values: &[f64], tol: f64) -> String {
    let mut s = String::from("node,i,j,x,y,u\n");
    for n in negative_nodes(values, &grid.fluid_mask(), tol) {
        let (i, j) = grid.coords(n);
        let p = grid.position(n);
        let _ = writeln!(s, "{n},{i},{j},{:?},{:?},{:?}", p[0], p[1], values[n]);
    }
    s
}

fn verdict_json(v: &Option<Verdict>) -> Value {
    match v {
        None => Value::Null,
        Some(Verdict::Pass) => json!({ "violated": false }),
        Some(Verdict::Violated {
            first_time,
            worst_value,
            worst_node,
        }) => json!({
            "violated": true,
            "first_time": first_time,
            "worst_value": worst_value,
            "worst_node": worst_node,
        }),
    }
}

/// Key/value pairs describing the resolved run, written at the top of every
/// CSV and into the summary.
pub fn run_metadata(out: &RunOutput) -> Vec<(&'static str, String)> {
    vec![
        ("scenario", out.scenario.to_string()),
        ("title", out.title.clone()),
        ("method", out.method.to_string()),
        ("lattice", out.lattice.to_string()),
        ("case", out.case_index.map_or("explicit".into(), |k| k.to_string())),
        ("dx", format!("{:?}", out.case.dx)),
        ("dt", format!("{:?}", out.case.dt)),
        ("bc", out.bc.name().to_string()),
        ("steps", out.steps.to_string()),
        ("end_time", format!("{:?}", out.end_time)),
        ("requested_end_time", format!("{:?}", out.requested_end_time)),
        ("sample_every", out.sample_every.to_string()),
        ("violation_tol", format!("{DEFAULT_TOL:?}")),
        ("quadrature", "node value times cell volume".into()),
    ]
}

pub fn summary_json(out: &RunOutput) -> Value {
    let series: Vec<Value> = out
        .series
        .iter()
        .map(|s| {
            let r = &s.report;
            let last = r.last();
            json!({
                "name": s.name,
                "nodes": r.n,
                "final": last.map(|l| json!({
                    "t": l.t,
                    "u_min": l.u_min,
                    "u_max": l.u_max,
                    "n_neg": l.n_neg,
                    "n_neg_fraction": l.n_neg as f64 / r.n.max(1) as f64,
                    "error": l.error,
                })),
                "global_min": r.global_min().map(|g| json!({ "t": g.t, "u": g.u_min, "node": g.u_min_node })),
                "global_max": r.global_max().map(|g| json!({ "t": g.t, "u": g.u_max, "node": g.u_max_node })),
                "verdicts": {
                    "maximum_principle": verdict_json(&r.verdicts.maximum_principle),
                    "non_negativity": verdict_json(&r.verdicts.non_negativity),
                    "comparison": verdict_json(&r.verdicts.comparison),
                    "decay": verdict_json(&r.verdicts.decay),
                },
                "notes": r.notes,
            })
        })
        .collect();
    let comparisons: Vec<Value> = out
        .comparisons
        .iter()
        .map(|c| json!({ "lower": c.lower, "upper": c.upper, "verdict": verdict_json(&Some(c.verdict)) }))
        .collect();
    let config: serde_json::Map<String, Value> =
        run_metadata(out).into_iter().map(|(k, v)| (k.to_string(), Value::String(v))).collect();
    json!({
        "config": config,
        "violated": out.violated(),
        "series": series,
        "comparisons": comparisons,
        "min_population": out.min_population,
        "critical_dt": out.critical_dt.map(|c| json!({ "threshold": c.threshold, "satisfied": c.satisfied })),
        "product_attribution": out.attribution.map(|a| json!({
            "negative": a.negative,
            "explained": a.explained,
            "worst_undershoot": a.worst_undershoot,
        })),
        "flow": out.flow.map(|f| json!({
            "steps": f.steps,
            "max_mach": f.max_mach,
            "inlet_flux": f.inlet_flux,
            "outlet_flux": f.outlet_flux,
            "divergence_rms": f.divergence_rms,
        })),
        "notes": out.notes,
    })
}

/// File-name friendly version of a series name.
fn slug(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

fn header(out: &RunOutput) -> String {
    let mut s = String::new();
    for (k, v) in run_metadata(out) {
        let _ = writeln!(s, "# {k} = {v}");
    }
    s
}

/// Writes every artifact of a run into `dir` and returns the paths written.
pub fn write_run(out: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let head = header(out);
    for s in &out.series {
        let path = dir.join(format!("report_{}.csv", slug(&s.name)));
        let mut buf = head.clone().into_bytes();
        s.report.write_csv(&mut buf)?;
        fs::write(&path, buf)?;
        written.push(path);
    }
    for f in &out.fields {
        let snap = Snapshot::from_grid(&out.grid, &slug(&f.name), &f.values)?;
        let path = dir.join(format!("field_{}.vtk", slug(&f.name)));
        fs::write(&path, snap.to_vtk())?;
        written.push(path);
        let path = dir.join(format!("negative_{}.csv", slug(&f.name)));
        let mut buf = head.clone();
        buf.push_str(&negative_mask_csv(&out.grid, &f.values, DEFAULT_TOL));
        fs::write(&path, buf)?;
        written.push(path);
    }
    let path = dir.join("summary.json");
    let mut file = fs::File::create(&path)?;
    serde_json::to_writer_pretty(&mut file, &summary_json(out))?;
    writeln!(file)?;
    written.push(path);
    Ok(written)
}

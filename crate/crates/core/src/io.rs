//! Plain-text outputs: CSV tables, 8-bit PGM rasters and the run summary.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading
//! a CSV back reproduces the exact values.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::cheeger::RefineRecord;
use crate::error::{Error, Result};
use crate::geometry::{Point2, SimplePolygon};
use crate::grid_solver::GridFunction;
use crate::operator::Measurements;
use crate::radial::RadialRow;
use crate::sparse::{AtomicFunction, FWOutcome, FWTrace};

fn writer<W: Write>(w: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(header)?;
    Ok(out)
}

/// `atom_index,vertex_index,x,y`.
pub fn write_polygons_csv<'a, W: Write>(w: W, polygons: impl IntoIterator<Item = &'a SimplePolygon>) -> Result<()> {
    let mut out = writer(w, &["atom_index", "vertex_index", "x", "y"])?;
    for (i, poly) in polygons.into_iter().enumerate() {
        for (j, v) in poly.vertices().iter().enumerate() {
            out.write_record([i.to_string(), j.to_string(), v.x.to_string(), v.y.to_string()])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_atoms_csv<W: Write>(w: W, u: &AtomicFunction) -> Result<()> {
    write_polygons_csv(w, u.atoms().iter().map(|a| &a.support))
}

/// Reads polygons written by [`write_polygons_csv`]; rows must be grouped by
/// atom and ordered by vertex.
pub fn read_polygons_csv<R: Read>(r: R) -> Result<Vec<SimplePolygon>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let mut chains: Vec<Vec<Point2>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let field = |k: usize| -> Result<&str> {
            rec.get(k).ok_or_else(|| Error::Io(format!("polygon CSV row has {} fields", rec.len())))
        };
        let parse_err = |e: &dyn std::fmt::Display| Error::Io(format!("polygon CSV: {e}"));
        let atom: usize = field(0)?.trim().parse().map_err(|e| parse_err(&e))?;
        let vertex: usize = field(1)?.trim().parse().map_err(|e| parse_err(&e))?;
        let x: f64 = field(2)?.trim().parse().map_err(|e| parse_err(&e))?;
        let y: f64 = field(3)?.trim().parse().map_err(|e| parse_err(&e))?;
        if atom == chains.len() {
            chains.push(Vec::new());
        } else if atom + 1 != chains.len() {
            return Err(Error::Io(format!("polygon CSV: atom index {atom} out of order")));
        }
        let chain = chains.last_mut().unwrap();
        if vertex != chain.len() {
            return Err(Error::Io(format!("polygon CSV: vertex index {vertex} out of order")));
        }
        chain.push(Point2::new(x, y));
    }
    chains.into_iter().map(SimplePolygon::new_ccw).collect()
}

/// `j,value`.
pub fn write_measurements_csv<W: Write>(w: W, y: &Measurements) -> Result<()> {
    let mut out = writer(w, &["j", "value"])?;
    for (j, v) in y.values.iter().enumerate() {
        out.write_record([j.to_string(), v.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// `i,j,value` with `i` along x.
pub fn write_grid_csv<W: Write>(w: W, u: &GridFunction) -> Result<()> {
    let mut out = writer(w, &["i", "j", "value"])?;
    for j in 0..u.n() {
        for i in 0..u.n() {
            out.write_record([i.to_string(), j.to_string(), u.get(i, j).to_string()])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Binary 8-bit PGM, min-max scaled, top row = largest y.
pub fn write_pgm<W: Write>(mut w: W, u: &GridFunction) -> Result<()> {
    let n = u.n();
    let (lo, hi) = u
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = hi - lo;
    write!(w, "P5\n{n} {n}\n255\n")?;
    let mut bytes = Vec::with_capacity(n * n);
    for j in (0..n).rev() {
        for i in 0..n {
            let t = if span > 0.0 { (u.get(i, j) - lo) / span } else { 0.0 };
            bytes.push((t * 255.0).round().clamp(0.0, 255.0) as u8);
        }
    }
    w.write_all(&bytes)?;
    Ok(())
}

/// Samples `u` at the cell centers of an `n x n` mesh of `[-R, R]^2`.
pub fn rasterize(u: &AtomicFunction, half_width: f64, n: usize) -> Result<GridFunction> {
    let mut g = GridFunction::zeros(n, half_width)?;
    for j in 0..n {
        for i in 0..n {
            let v = u.value_at(g.cell_center(i, j));
            g.set(i, j, v);
        }
    }
    Ok(g)
}

/// `iter,J,step,grad_norm`.
pub fn write_refine_trace_csv<W: Write>(w: W, trace: &[RefineRecord]) -> Result<()> {
    let mut out = writer(w, &["iter", "J", "step", "grad_norm"])?;
    for r in trace {
        out.write_record([
            r.iter.to_string(),
            r.objective.to_string(),
            r.step.to_string(),
            r.grad_norm.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// `k,objective,tv,residual_norm,cheeger_ratio,n_atoms`.
pub fn write_fw_trace_csv<W: Write>(w: W, trace: &FWTrace) -> Result<()> {
    let mut out = writer(w, &["k", "objective", "tv", "residual_norm", "cheeger_ratio", "n_atoms"])?;
    for r in &trace.records {
        out.write_record([
            r.k.to_string(),
            r.objective.to_string(),
            r.tv.to_string(),
            r.residual_norm.to_string(),
            r.cheeger_ratio.to_string(),
            r.n_atoms.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// `n,R_star_n,G_n(R_star_n),abs_err_vs_R_star`.
pub fn write_radial_table_csv<W: Write>(w: W, rows: &[RadialRow]) -> Result<()> {
    let mut out = writer(w, &["n", "R_star_n", "G_n(R_star_n)", "abs_err_vs_R_star"])?;
    for r in rows {
        out.write_record([
            r.n.to_string(),
            r.r_star_n.to_string(),
            r.g_n_at_r_star_n.to_string(),
            r.abs_err_vs_r_star.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSummary {
    pub amplitude: f64,
    pub n_vertices: usize,
    pub perimeter: f64,
    pub area: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub lambda: f64,
    pub iterations: usize,
    pub stopped_by: String,
    pub final_objective: f64,
    pub atoms: Vec<AtomSummary>,
}

impl RunSummary {
    pub fn new(lambda: f64, out: &FWOutcome) -> Self {
        RunSummary {
            lambda,
            iterations: out.iterations,
            stopped_by: out.stop.as_str().to_string(),
            final_objective: out.final_objective,
            atoms: out
                .u
                .atoms()
                .iter()
                .map(|a| AtomSummary {
                    amplitude: a.amplitude,
                    n_vertices: a.support.len(),
                    perimeter: a.support.perimeter(),
                    area: a.support.area(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }
}

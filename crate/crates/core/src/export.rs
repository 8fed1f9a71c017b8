//! Artifact writers. All floating-point output goes through shortest
//! round-trip formatting and fixed iteration orders, so identical inputs
//! produce byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::json;

use crate::analysis::{ComparisonReport, ConvergenceReport, NodalPartition};
use crate::billiard::{continuum_current, BilliardGrid};
use crate::dual::{expand_interior, DualSystem};
use crate::error::Result;
use crate::graph::MetricGraph;
use crate::scattering::{vertex_current_field, ScatteringSolution, SweepPoint};
use crate::spectral::EigenResult;

/// Shortest round-trip decimal form of `x`.
pub fn fmt_f64(x: f64) -> String {
    let mut buf = ryu::Buffer::new();
    buf.format(x).to_string()
}

fn writer(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Graph as JSON (pretty-printed, stable field order).
pub fn write_graph_json(path: &Path, graph: &MetricGraph) -> Result<()> {
    let mut w = writer(path)?;
    serde_json::to_writer_pretty(&mut w, graph)?;
    writeln!(w)?;
    Ok(())
}

/// Eigenvalue list as a JSON array (vectors go to CSV separately).
pub fn write_eigen_json(path: &Path, modes: &[EigenResult]) -> Result<()> {
    let list: Vec<_> = modes
        .iter()
        .map(|m| {
            json!({
                "k": m.k,
                "energy_graph": m.energy_graph,
                "energy_continuum": m.energy_continuum,
                "residual": m.residual,
                "multiplicity": m.multiplicity,
            })
        })
        .collect();
    let mut w = writer(path)?;
    serde_json::to_writer_pretty(&mut w, &list)?;
    writeln!(w)?;
    Ok(())
}

/// One eigenvector over all vertices: `id,x,y,value` (zeros at Dirichlet
/// vertices).
pub fn write_eigenvector_csv(path: &Path, graph: &MetricGraph, mode: &EigenResult) -> Result<()> {
    let full = expand_interior(graph, &mode.vertex_vector);
    let mut w = writer(path)?;
    writeln!(w, "id,x,y,value")?;
    for v in &graph.vertices {
        let y = v.pos.get(1).copied().unwrap_or(0.0);
        writeln!(
            w,
            "{},{},{},{}",
            v.id,
            fmt_f64(v.pos[0]),
            fmt_f64(y),
            fmt_f64(full[v.id].re)
        )?;
    }
    Ok(())
}

/// Scattering amplitudes as JSON: `{"k", "r": [re, im], "t": [re, im],
/// "flux_error"}`.
pub fn write_scatter_json(path: &Path, sol: &ScatteringSolution) -> Result<()> {
    let value = json!({
        "k": sol.k,
        "r": [sol.reflection.re, sol.reflection.im],
        "t": [sol.transmission.re, sol.transmission.im],
        "flux_error": sol.flux_error,
    });
    let mut w = writer(path)?;
    serde_json::to_writer_pretty(&mut w, &value)?;
    writeln!(w)?;
    Ok(())
}

/// Scattering field over vertices: `id,x,y,abs,arg,jx,jy`.
pub fn write_vertex_field_csv(
    path: &Path,
    graph: &MetricGraph,
    sol: &ScatteringSolution,
) -> Result<()> {
    let field = vertex_current_field(graph, &sol.edge_currents);
    let mut w = writer(path)?;
    writeln!(w, "id,x,y,abs,arg,jx,jy")?;
    for v in &graph.vertices {
        let y = v.pos.get(1).copied().unwrap_or(0.0);
        let psi = sol.vertex_values[v.id];
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            v.id,
            fmt_f64(v.pos[0]),
            fmt_f64(y),
            fmt_f64(psi.norm()),
            fmt_f64(psi.arg()),
            fmt_f64(field[v.id][0]),
            fmt_f64(field[v.id][1])
        )?;
    }
    Ok(())
}

/// Transmission sweep: `k,r2,t2`.
pub fn write_sweep_csv(path: &Path, points: &[SweepPoint]) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "k,r2,t2")?;
    for p in points {
        writeln!(
            w,
            "{},{},{}",
            fmt_f64(p.k),
            fmt_f64(p.reflectance),
            fmt_f64(p.transmittance)
        )?;
    }
    Ok(())
}

/// Billiard field: `ix,iy,x,y,re,im,psi2,jx,jy`, row-major over the grid.
pub fn write_billiard_csv(path: &Path, grid: &BilliardGrid) -> Result<()> {
    let current = continuum_current(grid);
    let mut w = writer(path)?;
    writeln!(w, "ix,iy,x,y,re,im,psi2,jx,jy")?;
    for iy in 0..grid.n {
        for ix in 0..grid.n {
            let idx = iy * grid.n + ix;
            let psi = grid.values[idx];
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                ix,
                iy,
                fmt_f64(ix as f64 * grid.h),
                fmt_f64(iy as f64 * grid.h),
                fmt_f64(psi.re),
                fmt_f64(psi.im),
                fmt_f64(psi.norm_sqr()),
                fmt_f64(current[idx][0]),
                fmt_f64(current[idx][1])
            )?;
        }
    }
    Ok(())
}

/// Nodal labels: `id,x,y,sign,domain` (empty domain field on sign-0
/// vertices).
pub fn write_nodal_csv(path: &Path, graph: &MetricGraph, partition: &NodalPartition) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "id,x,y,sign,domain")?;
    for v in &graph.vertices {
        let y = v.pos.get(1).copied().unwrap_or(0.0);
        let domain = match partition.labels[v.id] {
            Some(d) => d.to_string(),
            None => String::new(),
        };
        writeln!(
            w,
            "{},{},{},{},{}",
            v.id,
            fmt_f64(v.pos[0]),
            fmt_f64(y),
            partition.sign_map[v.id],
            domain
        )?;
    }
    Ok(())
}

pub fn write_comparison_json(path: &Path, report: &ComparisonReport) -> Result<()> {
    let mut w = writer(path)?;
    serde_json::to_writer_pretty(&mut w, report)?;
    writeln!(w)?;
    Ok(())
}

pub fn write_convergence_json(path: &Path, report: &ConvergenceReport) -> Result<()> {
    let mut w = writer(path)?;
    serde_json::to_writer_pretty(&mut w, report)?;
    writeln!(w)?;
    Ok(())
}

/// Assembled vertex system in coordinate form: `row,col,re,im`.
pub fn write_dual_csv(path: &Path, system: &DualSystem) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "row,col,re,im")?;
    for &(r, c, v) in &system.entries {
        writeln!(w, "{},{},{},{}", r, c, fmt_f64(v.re), fmt_f64(v.im))?;
    }
    Ok(())
}

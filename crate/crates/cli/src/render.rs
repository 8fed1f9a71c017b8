//! CSV → PGM rasterizer. Accepts any artifact CSV whose rows carry grid
//! coordinates — `ix,iy` when present, otherwise positions `x,y` snapped to
//! a uniform pitch per axis — plus a renderable column: `psi2` as-is, `abs`
//! squared into a density, or `value` as-is. Cells the table does not
//! mention (obstacle interiors, clipped corners) render as 0, matching the
//! Dirichlet data they carry; coordinates that fit no uniform grid are
//! rejected as ragged.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::CliError;

fn ragged(msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("ragged grid: {msg}"))
}

/// Sorted distinct axis levels (within `tol`) and per-entry indices.
fn snap_axis(coords: &[f64]) -> Result<(usize, Vec<usize>), CliError> {
    let mut levels: Vec<f64> = coords.to_vec();
    levels.sort_by(f64::total_cmp);
    let span = levels[levels.len() - 1] - levels[0];
    let merge_tol = 1e-9 * span.max(1.0);
    levels.dedup_by(|a, b| (*a - *b).abs() <= merge_tol);
    if levels.len() == 1 {
        return Ok((1, vec![0; coords.len()]));
    }

    let pitch = levels
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let origin = levels[0];
    let count = ((levels[levels.len() - 1] - origin) / pitch).round() as usize + 1;
    let tol = 1e-6 * pitch;
    let mut indices = Vec::with_capacity(coords.len());
    for &c in coords {
        let idx = ((c - origin) / pitch).round();
        if idx < 0.0 || (c - (origin + idx * pitch)).abs() > tol {
            return Err(ragged(format!(
                "coordinate {c} does not sit on the pitch-{pitch} grid"
            )));
        }
        indices.push(idx as usize);
    }
    Ok((count, indices))
}

pub fn render(input: &Path, output: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(input)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", input.display())))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| ragged("empty file"))?;
    let columns: Vec<&str> = header.split(',').collect();
    let column = |name: &str| columns.iter().position(|c| *c == name);

    let (value_col, squared) = if let Some(i) = column("psi2") {
        (i, false)
    } else if let Some(i) = column("abs") {
        (i, true)
    } else if let Some(i) = column("value") {
        (i, false)
    } else {
        return Err(CliError::Config(
            "no renderable column; expected psi2, abs, or value".into(),
        ));
    };

    let mut fields: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(str::parse::<f64>).collect();
        let row = row.map_err(|e| ragged(format!("line {}: {e}", lineno + 2)))?;
        if row.len() != columns.len() {
            return Err(ragged(format!(
                "line {} has {} fields, header has {}",
                lineno + 2,
                row.len(),
                columns.len()
            )));
        }
        fields.push(row);
    }
    if fields.is_empty() {
        return Err(ragged("no data rows"));
    }

    let (nx, ny, xi, yi) = if let (Some(cx), Some(cy)) = (column("ix"), column("iy")) {
        let xi: Vec<usize> = fields.iter().map(|r| r[cx] as usize).collect();
        let yi: Vec<usize> = fields.iter().map(|r| r[cy] as usize).collect();
        let nx = xi.iter().max().unwrap() + 1;
        let ny = yi.iter().max().unwrap() + 1;
        (nx, ny, xi, yi)
    } else if let (Some(cx), Some(cy)) = (column("x"), column("y")) {
        let xs: Vec<f64> = fields.iter().map(|r| r[cx]).collect();
        let ys: Vec<f64> = fields.iter().map(|r| r[cy]).collect();
        let (nx, xi) = snap_axis(&xs)?;
        let (ny, yi) = snap_axis(&ys)?;
        (nx, ny, xi, yi)
    } else {
        return Err(CliError::Config(
            "no grid coordinates; expected ix,iy or x,y columns".into(),
        ));
    };

    let mut cells = vec![0.0f64; nx * ny];
    let mut seen = vec![false; nx * ny];
    for (row, (&i, &j)) in fields.iter().zip(xi.iter().zip(&yi)) {
        let v = row[value_col];
        if !v.is_finite() {
            return Err(CliError::Numeric(format!(
                "non-finite value {v} in the field table"
            )));
        }
        let idx = j * nx + i;
        if seen[idx] {
            return Err(ragged(format!("grid cell ({i}, {j}) appears twice")));
        }
        seen[idx] = true;
        cells[idx] = if squared { v * v } else { v };
    }

    let lo = cells.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = cells.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ramp = |v: f64| -> u8 {
        if hi > lo {
            ((v - lo) / (hi - lo) * 255.0).round() as u8
        } else {
            128
        }
    };

    let mut w = std::io::BufWriter::new(fs::File::create(output).map_err(|e| {
        CliError::Numeric(format!("cannot create {}: {e}", output.display()))
    })?);
    let emit = |w: &mut dyn Write| -> std::io::Result<()> {
        write!(w, "P5\n{nx} {ny}\n255\n")?;
        // top raster row = largest y, so images match the plots
        for j in (0..ny).rev() {
            let row: Vec<u8> = (0..nx).map(|i| ramp(cells[j * nx + i])).collect();
            w.write_all(&row)?;
        }
        Ok(())
    };
    emit(&mut w).map_err(|e| CliError::Numeric(format!("cannot write image: {e}")))
}

//! Convergence tables, density images and VTK files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::Mesh2D;
use crate::optimizer::{IterationRecord, RunReport};

pub const CSV_HEADER: &str = "iter,compliance,stationarity,step,ls_trials,volume_error";

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn csv_row(out: &mut impl Write, r: &IterationRecord) -> std::io::Result<()> {
    write!(
        out,
        "{},{:.16e},{:.16e},{:.16e},{},{:.16e}",
        r.iter, r.compliance, r.stationarity, r.step, r.ls_trials, r.volume_error
    )
}

/// One row per recorded iteration, including the initial design.
pub fn write_convergence_csv(report: &RunReport, path: impl AsRef<Path>) -> Result<()> {
    let mut out = create(path.as_ref())?;
    writeln!(out, "{CSV_HEADER}")?;
    for r in &report.records {
        csv_row(&mut out, r)?;
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Histories of several runs in one table, with a leading `method` column.
pub fn write_merged_csv(reports: &[RunReport], path: impl AsRef<Path>) -> Result<()> {
    let mut out = create(path.as_ref())?;
    writeln!(out, "method,{CSV_HEADER}")?;
    for report in reports {
        for r in &report.records {
            write!(out, "{},", report.method)?;
            csv_row(&mut out, r)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Grey levels `round(255 (1 − ρ))`, top image row first.
pub fn density_pixels(rho: &[f64], mesh: &Mesh2D) -> Result<Vec<u8>> {
    if rho.len() != mesh.num_elements() {
        return Err(Error::InvalidArgument(format!(
            "density has {} entries, mesh has {} elements",
            rho.len(),
            mesh.num_elements()
        )));
    }
    let mut pixels = Vec::with_capacity(rho.len());
    for j in (0..mesh.ny()).rev() {
        for i in 0..mesh.nx() {
            let r = rho[mesh.element_index(i, j)];
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::Infeasible(format!("density {r} at element ({i}, {j})")));
            }
            pixels.push((255.0 * (1.0 - r)).round() as u8);
        }
    }
    Ok(pixels)
}

/// Binary PGM (P5), one pixel per element, solid material dark.
pub fn write_density_image(rho: &[f64], mesh: &Mesh2D, path: impl AsRef<Path>) -> Result<()> {
    let pixels = density_pixels(rho, mesh)?;
    let mut out = create(path.as_ref())?;
    write!(out, "P5\n{} {}\n255\n", mesh.nx(), mesh.ny())?;
    out.write_all(&pixels)?;
    out.flush()?;
    Ok(())
}

/// Fields written by [`write_vtk`].
#[derive(Debug, Clone, Copy)]
pub struct VtkFields<'a> {
    pub rho: &'a [f64],
    pub gradient: &'a [f64],
    pub rho_filtered: &'a [f64],
    /// Interleaved `(u_x, u_y)` per node.
    pub displacement: &'a [f64],
}

impl<'a> VtkFields<'a> {
    pub fn from_report(report: &'a RunReport) -> Self {
        Self {
            rho: &report.rho,
            gradient: &report.gradient,
            rho_filtered: &report.rho_filtered,
            displacement: &report.displacement,
        }
    }
}

/// Legacy ASCII VTK structured grid with cell data `rho`, `gradient` and
/// point data `rho_filtered`, `displacement`.
pub fn write_vtk(fields: &VtkFields<'_>, mesh: &Mesh2D, path: impl AsRef<Path>) -> Result<()> {
    let (cells, points) = (mesh.num_elements(), mesh.num_nodes());
    for (name, len, expected) in [
        ("rho", fields.rho.len(), cells),
        ("gradient", fields.gradient.len(), cells),
        ("rho_filtered", fields.rho_filtered.len(), points),
        ("displacement", fields.displacement.len(), 2 * points),
    ] {
        if len != expected {
            return Err(Error::InvalidArgument(format!(
                "{name} has {len} values, expected {expected}"
            )));
        }
    }
    let mut out = create(path.as_ref())?;
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "density design")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET STRUCTURED_GRID")?;
    writeln!(out, "DIMENSIONS {} {} 1", mesh.nx() + 1, mesh.ny() + 1)?;
    writeln!(out, "POINTS {points} double")?;
    for node in 0..points {
        let [x, y] = mesh.node_coords(node);
        writeln!(out, "{x:.17e} {y:.17e} 0")?;
    }
    writeln!(out, "CELL_DATA {cells}")?;
    for (name, values) in [("rho", fields.rho), ("gradient", fields.gradient)] {
        writeln!(out, "SCALARS {name} double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for v in values {
            writeln!(out, "{v:.17e}")?;
        }
    }
    writeln!(out, "POINT_DATA {points}")?;
    writeln!(out, "SCALARS rho_filtered double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for v in fields.rho_filtered {
        writeln!(out, "{v:.17e}")?;
    }
    writeln!(out, "VECTORS displacement double")?;
    for u in fields.displacement.chunks_exact(2) {
        writeln!(out, "{:.17e} {:.17e} 0", u[0], u[1])?;
    }
    out.flush()?;
    Ok(())
}

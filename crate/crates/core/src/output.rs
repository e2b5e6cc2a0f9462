//! Convergence-history CSVs and the flux text format.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::CartesianMesh;
use crate::moments::MomentVector;
use crate::solvers::record::ConvergenceRecord;

pub const FIXED_SOURCE_HEADER: &str = "iter,res_norm,seconds";
pub const EIGEN_HEADER: &str = "outer,k,delta_k,l2_fission,linf_fission,krylov_iters,seconds";
pub const FLUX_HEADER: &str = "g,i,j,k,flux";

/// Renders a record as CSV: the eigenvalue layout when it holds outer
/// iterations, the fixed-source layout otherwise.
pub fn convergence_csv(record: &ConvergenceRecord) -> Result<String> {
    let mut out = String::new();
    if !record.outer.is_empty() {
        out.push_str(EIGEN_HEADER);
        out.push('\n');
        for (i, o) in record.outer.iter().enumerate() {
            let _ = writeln!(
                out,
                "{i},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e}",
                o.k, o.delta_k, o.l2_fission, o.linf_fission, o.krylov_iters, o.seconds
            );
        }
    } else if !record.steps.is_empty() {
        out.push_str(FIXED_SOURCE_HEADER);
        out.push('\n');
        for (i, s) in record.steps.iter().enumerate() {
            let _ = writeln!(out, "{i},{:.16e},{:.16e}", s.res_norm, s.seconds);
        }
    } else {
        return Err(Error::Output("convergence record is empty".into()));
    }
    Ok(out)
}

pub fn emit_convergence_csv(record: &ConvergenceRecord, path: &Path) -> Result<()> {
    let text = convergence_csv(record)?;
    fs::write(path, text)?;
    Ok(())
}

/// One row per group and cell, group-major, cells in lexicographic order
/// (`i` fastest). Values use shortest round-trip formatting.
pub fn flux_text(phi: &MomentVector, mesh: &CartesianMesh) -> Result<String> {
    if phi.num_cells() != mesh.num_cells() {
        return Err(Error::DimensionMismatch {
            expected: mesh.num_cells(),
            actual: phi.num_cells(),
        });
    }
    let mut out = String::from(FLUX_HEADER);
    out.push('\n');
    for (local, g) in phi.groups().enumerate() {
        for (cell, v) in phi.group(local).iter().enumerate() {
            let (i, j, k) = mesh.cell_coords(cell);
            let _ = writeln!(out, "{g},{i},{j},{k},{v:?}");
        }
    }
    Ok(out)
}

pub fn write_flux_output(phi: &MomentVector, mesh: &CartesianMesh, path: &Path) -> Result<()> {
    fs::write(path, flux_text(phi, mesh)?)?;
    Ok(())
}

/// Reads a flux file written by [`write_flux_output`].
pub fn read_flux_output(path: &Path, mesh: &CartesianMesh) -> Result<MomentVector> {
    let text = fs::read_to_string(path)?;
    parse_flux_text(&text, mesh)
}

pub fn parse_flux_text(text: &str, mesh: &CartesianMesh) -> Result<MomentVector> {
    let mut lines = text.lines();
    if lines.next() != Some(FLUX_HEADER) {
        return Err(Error::Output("missing flux header".into()));
    }
    let mut rows: Vec<(usize, usize, f64)> = Vec::new();
    for (n, line) in lines.enumerate() {
        let bad = || Error::Parse {
            line: n + 2,
            message: format!("malformed flux row '{line}'"),
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(bad());
        }
        let idx: Vec<usize> = f[..4]
            .iter()
            .map(|t| t.parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        if idx[1] >= mesh.nx || idx[2] >= mesh.ny || idx[3] >= mesh.nz {
            return Err(bad());
        }
        let value: f64 = f[4].parse().map_err(|_| bad())?;
        rows.push((idx[0], mesh.cell_index(idx[1], idx[2], idx[3]), value));
    }
    let first = rows.first().map_or(0, |r| r.0);
    let last = rows.last().map_or(0, |r| r.0 + 1);
    let mut phi = MomentVector::zeros(first..last.max(first), mesh.num_cells());
    if rows.len() != phi.len() {
        return Err(Error::Output(format!(
            "expected {} flux rows, found {}",
            phi.len(),
            rows.len()
        )));
    }
    for (g, cell, v) in rows {
        phi.group_mut(g - first)[cell] = v;
    }
    Ok(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::BoundaryCondition;
    use crate::solvers::record::IterationStep;

    #[test]
    fn single_row_record() {
        let mut r = ConvergenceRecord::new();
        r.steps.push(IterationStep {
            res_norm: 0.5,
            seconds: 0.01,
        });
        let csv = convergence_csv(&r).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], FIXED_SOURCE_HEADER);
        assert!(lines[1].starts_with("0,5.0000000000000000e-1,"));
    }

    #[test]
    fn empty_record_is_an_error() {
        assert!(convergence_csv(&ConvergenceRecord::new()).is_err());
    }

    #[test]
    fn flux_round_trip() {
        let mesh = CartesianMesh::uniform([2, 1, 2], [1.0; 3], [BoundaryCondition::Vacuum; 6]).unwrap();
        let values: Vec<f64> = (0..8).map(|i| (i as f64 * 0.37).exp() / 3.0).collect();
        let phi = MomentVector::from_values(0..2, 4, values).unwrap();
        let text = flux_text(&phi, &mesh).unwrap();
        assert_eq!(text.lines().count(), 9);
        let back = parse_flux_text(&text, &mesh).unwrap();
        assert_eq!(back, phi);
        let zero = MomentVector::zeros(0..1, 4);
        let text = flux_text(&zero, &mesh).unwrap();
        assert!(text.lines().skip(1).all(|l| l.ends_with(",0.0")));
    }
}

//! Discrete-ordinates transport sweep `T = D L^-1` with step differencing.
//!
//! The moment-to-discrete map for isotropic (P0) sources is multiplication
//! by `1 / 4π`; the discrete-to-moment map is the weighted ordinate sum.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::material::MaterialCrossSections;
use crate::mesh::{BoundaryCondition, CartesianMesh, Face};
use crate::moments::MomentVector;
use crate::quadrature::AngularQuadrature;

/// Reflecting-boundary passes allowed per group before giving up.
pub const MAX_REFLECTION_PASSES: usize = 50;
/// Relative tolerance on boundary angular flux changes between passes.
pub const REFLECTION_TOL: f64 = 1e-10;

const FOUR_PI: f64 = 4.0 * PI;

/// Step (fully upwind) balance for one cell and one ordinate.
///
/// Returns the cell-average angular flux and the three outgoing face fluxes,
/// which equal the cell flux in the step scheme.
pub fn step_cell_kernel(
    sigma_t: f64,
    widths: [f64; 3],
    cosines: [f64; 3],
    incoming: [f64; 3],
    q_angular: f64,
) -> Result<(f64, [f64; 3])> {
    let mut numer = q_angular;
    let mut denom = sigma_t;
    for axis in 0..3 {
        let c = cosines[axis].abs() / widths[axis];
        numer += c * incoming[axis];
        denom += c;
    }
    if denom == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let psi = numer / denom;
    Ok((psi, [psi; 3]))
}

/// Outgoing angular fluxes on reflecting faces, `[face][ordinate][face cell]`.
/// Face cells are numbered with the lower remaining axis fastest.
#[derive(Debug, Clone, Default)]
pub struct BoundaryFluxes {
    faces: [Vec<Vec<f64>>; 6],
}

impl BoundaryFluxes {
    fn new(mesh: &CartesianMesh, num_ordinates: usize) -> Self {
        let mut faces: [Vec<Vec<f64>>; 6] = Default::default();
        for face in Face::ALL {
            if mesh.boundary_at(face) == BoundaryCondition::Reflect {
                let size = face_size(mesh, face.axis());
                faces[face.index()] = vec![vec![0.0; size]; num_ordinates];
            }
        }
        Self { faces }
    }

    pub fn outgoing(&self, face: Face, ordinate: usize) -> Option<&[f64]> {
        self.faces[face.index()].get(ordinate).map(Vec::as_slice)
    }
}

fn face_size(mesh: &CartesianMesh, axis: usize) -> usize {
    match axis {
        0 => mesh.ny * mesh.nz,
        1 => mesh.nx * mesh.nz,
        _ => mesh.nx * mesh.ny,
    }
}

fn ordered(n: usize, forward: bool) -> Vec<usize> {
    if forward {
        (0..n).collect()
    } else {
        (0..n).rev().collect()
    }
}

struct GroupSweep<'a> {
    mesh: &'a CartesianMesh,
    quadrature: &'a AngularQuadrature,
    sigma_t: Vec<f64>,
    q_angular: Vec<f64>,
}

impl GroupSweep<'_> {
    /// Sweeps one ordinate, accumulating into `phi` and updating the stored
    /// outgoing boundary fluxes. Returns the largest boundary change and the
    /// face it occurred on.
    fn ordinate(
        &self,
        m: usize,
        boundary: &mut BoundaryFluxes,
        phi: &mut [f64],
    ) -> Result<(f64, Option<Face>)> {
        let mesh = self.mesh;
        let (nx, ny, nz) = (mesh.nx, mesh.ny, mesh.nz);
        let dir = self.quadrature.ordinates()[m];
        let weight = self.quadrature.weights()[m];
        let widths = mesh.widths();
        let forward = [dir[0] > 0.0, dir[1] > 0.0, dir[2] > 0.0];

        let mut incoming: [Vec<f64>; 3] = [
            vec![0.0; ny * nz],
            vec![0.0; nx * nz],
            vec![0.0; nx * ny],
        ];
        for axis in 0..3 {
            let face = Face::entering(axis, forward[axis]);
            if mesh.boundary_at(face) == BoundaryCondition::Reflect {
                let mirror = self.quadrature.mirror(axis, m);
                incoming[axis].copy_from_slice(&boundary.faces[face.index()][mirror]);
            }
        }
        let [psi_x, psi_y, psi_z] = &mut incoming;

        for &k in &ordered(nz, forward[2]) {
            for &j in &ordered(ny, forward[1]) {
                for &i in &ordered(nx, forward[0]) {
                    let cell = mesh.cell_index(i, j, k);
                    let ix = j + ny * k;
                    let iy = i + nx * k;
                    let iz = i + nx * j;
                    let (psi, out) = step_cell_kernel(
                        self.sigma_t[cell],
                        widths,
                        dir,
                        [psi_x[ix], psi_y[iy], psi_z[iz]],
                        self.q_angular[cell],
                    )?;
                    psi_x[ix] = out[0];
                    psi_y[iy] = out[1];
                    psi_z[iz] = out[2];
                    phi[cell] += weight * psi;
                }
            }
        }

        let mut change = 0.0;
        let mut worst = None;
        for (axis, exiting) in incoming.iter().enumerate() {
            let face = Face::exiting(axis, forward[axis]);
            if mesh.boundary_at(face) != BoundaryCondition::Reflect {
                continue;
            }
            let stored = &mut boundary.faces[face.index()][m];
            for (s, &new) in stored.iter_mut().zip(exiting) {
                let d = (new - *s).abs();
                if d > change {
                    change = d;
                    worst = Some(face);
                }
                *s = new;
            }
        }
        Ok((change, worst))
    }

    fn run(&self) -> Result<Vec<f64>> {
        let mut phi = vec![0.0; self.mesh.num_cells()];
        let mut boundary = BoundaryFluxes::new(self.mesh, self.quadrature.len());
        let reflecting = self.mesh.any_reflecting();
        let mut last = (0.0, None);
        for _ in 0..MAX_REFLECTION_PASSES {
            phi.fill(0.0);
            let mut change = 0.0;
            let mut worst = None;
            for m in 0..self.quadrature.len() {
                let (c, f) = self.ordinate(m, &mut boundary, &mut phi)?;
                if c > change {
                    change = c;
                    worst = f;
                }
            }
            if !reflecting {
                return Ok(phi);
            }
            let scale = 1.0 + phi.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if change <= REFLECTION_TOL * scale {
                return Ok(phi);
            }
            last = (change, worst);
        }
        Err(Error::ReflectionNotConverged {
            face: last.1.map_or("unknown", Face::name),
            passes: MAX_REFLECTION_PASSES,
            change: last.0,
        })
    }
}

/// Applies `D L^-1 M` to a moment-space source, one group at a time.
///
/// `materials[id]` holds data for the source's groups only: local group `g`
/// of `source` uses `materials[id].sigma_t[g]`.
pub fn transport_sweep(
    source: &MomentVector,
    materials: &[MaterialCrossSections],
    quadrature: &AngularQuadrature,
    mesh: &CartesianMesh,
) -> Result<MomentVector> {
    let num_cells = mesh.num_cells();
    if source.num_cells() != num_cells {
        return Err(Error::DimensionMismatch {
            expected: num_cells,
            actual: source.num_cells(),
        });
    }
    if let Some(m) = materials.iter().find(|m| m.num_groups() != source.num_groups()) {
        return Err(Error::DimensionMismatch {
            expected: source.num_groups(),
            actual: m.num_groups(),
        });
    }
    let fluxes = (0..source.num_groups())
        .into_par_iter()
        .map(|g| {
            let sweep = GroupSweep {
                mesh,
                quadrature,
                sigma_t: mesh
                    .material_id
                    .iter()
                    .map(|&id| materials[id].sigma_t[g])
                    .collect(),
                q_angular: source.group(g).iter().map(|q| q / FOUR_PI).collect(),
            };
            sweep.run()
        })
        .collect::<Result<Vec<_>>>()?;
    MomentVector::from_values(source.groups(), num_cells, fluxes.concat())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::build_quadrature;

    fn one_group(sigma_t: f64) -> MaterialCrossSections {
        let mut xs = MaterialCrossSections::zeros(1);
        xs.sigma_t[0] = sigma_t;
        xs
    }

    #[test]
    fn kernel_closed_form() {
        let c = 1.0 / 3f64.sqrt();
        let (psi, out) = step_cell_kernel(1.0, [1.0; 3], [c; 3], [0.0; 3], 1.0).unwrap();
        assert!((psi - 1.0 / (1.0 + 3f64.sqrt())).abs() < 1e-15);
        assert_eq!(out, [psi; 3]);
        let (psi, _) = step_cell_kernel(1.0, [1.0; 3], [c; 3], [0.0; 3], 0.0).unwrap();
        assert_eq!(psi, 0.0);
        let (psi, _) = step_cell_kernel(0.0, [1.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0], 0.0).unwrap();
        assert_eq!(psi, 2.0);
        assert!(step_cell_kernel(0.0, [1.0; 3], [0.0; 3], [0.0; 3], 1.0).is_err());
    }

    #[test]
    fn single_vacuum_cell_s2() {
        let mesh = CartesianMesh::uniform([1, 1, 1], [1.0; 3], [BoundaryCondition::Vacuum; 6]).unwrap();
        let q = build_quadrature(2).unwrap();
        let src = MomentVector::from_values(0..1, 1, vec![1.0]).unwrap();
        let phi = transport_sweep(&src, &[one_group(1.0)], &q, &mesh).unwrap();
        assert!((phi.as_slice()[0] - 1.0 / (1.0 + 3f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn reflecting_box_is_infinite_medium() {
        let mesh = CartesianMesh::uniform([3, 2, 2], [0.7, 1.0, 1.3], [BoundaryCondition::Reflect; 6]).unwrap();
        let q = build_quadrature(4).unwrap();
        let src = MomentVector::from_values(0..1, 12, vec![2.0; 12]).unwrap();
        let phi = transport_sweep(&src, &[one_group(1.6)], &q, &mesh).unwrap();
        for v in phi.as_slice() {
            assert!((v - 2.0 / 1.6).abs() < 1e-9 * 1.25);
        }
    }

    #[test]
    fn zero_source_gives_zero_flux() {
        let mesh = CartesianMesh::uniform([2, 2, 2], [1.0; 3], [BoundaryCondition::Reflect; 6]).unwrap();
        let q = build_quadrature(2).unwrap();
        let src = MomentVector::zeros(0..1, 8);
        let phi = transport_sweep(&src, &[one_group(1.0)], &q, &mesh).unwrap();
        assert!(phi.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn thin_reflecting_void_fails_to_converge() {
        let mesh = CartesianMesh::uniform([1, 1, 1], [1.0; 3], [BoundaryCondition::Reflect; 6]).unwrap();
        let q = build_quadrature(2).unwrap();
        let src = MomentVector::from_values(0..1, 1, vec![1.0]).unwrap();
        let err = transport_sweep(&src, &[one_group(1e-6)], &q, &mesh).unwrap_err();
        assert!(matches!(err, Error::ReflectionNotConverged { .. }), "{err}");
    }
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Vacuum,
    Reflect,
}

impl FromStr for BoundaryCondition {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "vacuum" => Ok(Self::Vacuum),
            "reflect" | "reflecting" => Ok(Self::Reflect),
            other => Err(format!("unknown boundary condition '{other}'")),
        }
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Vacuum => "vacuum",
            Self::Reflect => "reflect",
        })
    }
}

/// Faces in the order xlo, xhi, ylo, yhi, zlo, zhi.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Face {
    XLo,
    XHi,
    YLo,
    YHi,
    ZLo,
    ZHi,
}

impl Face {
    pub const ALL: [Face; 6] = [
        Face::XLo,
        Face::XHi,
        Face::YLo,
        Face::YHi,
        Face::ZLo,
        Face::ZHi,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn axis(self) -> usize {
        self.index() / 2
    }

    /// Face on `axis` through which a particle moving with the given sign enters.
    pub fn entering(axis: usize, positive: bool) -> Face {
        Face::ALL[2 * axis + usize::from(!positive)]
    }

    /// Face on `axis` through which a particle moving with the given sign leaves.
    pub fn exiting(axis: usize, positive: bool) -> Face {
        Face::ALL[2 * axis + usize::from(positive)]
    }

    pub fn name(self) -> &'static str {
        match self {
            Face::XLo => "xlo",
            Face::XHi => "xhi",
            Face::YLo => "ylo",
            Face::YHi => "yhi",
            Face::ZLo => "zlo",
            Face::ZHi => "zhi",
        }
    }
}

/// Uniform Cartesian mesh with per-cell material assignment.
///
/// Cells are numbered lexicographically with `i` fastest:
/// `cell = i + nx * (j + ny * k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartesianMesh {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub material_id: Vec<usize>,
    pub boundary: [BoundaryCondition; 6],
}

impl CartesianMesh {
    /// Single-material mesh.
    pub fn uniform(
        dims: [usize; 3],
        widths: [f64; 3],
        boundary: [BoundaryCondition; 6],
    ) -> Result<Self> {
        let mesh = Self {
            nx: dims[0],
            ny: dims[1],
            nz: dims[2],
            dx: widths[0],
            dy: widths[1],
            dz: widths[2],
            material_id: vec![0; dims.iter().product()],
            boundary,
        };
        mesh.validate(1)?;
        Ok(mesh)
    }

    pub fn num_cells(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    pub fn widths(&self) -> [f64; 3] {
        [self.dx, self.dy, self.dz]
    }

    pub fn cell_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.nx * (j + self.ny * k)
    }

    pub fn cell_coords(&self, cell: usize) -> (usize, usize, usize) {
        let i = cell % self.nx;
        let j = (cell / self.nx) % self.ny;
        let k = cell / (self.nx * self.ny);
        (i, j, k)
    }

    pub fn boundary_at(&self, face: Face) -> BoundaryCondition {
        self.boundary[face.index()]
    }

    pub fn any_reflecting(&self) -> bool {
        self.boundary.contains(&BoundaryCondition::Reflect)
    }

    pub fn validate(&self, num_materials: usize) -> Result<()> {
        if self.nx == 0 || self.ny == 0 || self.nz == 0 {
            return Err(Error::InvalidProblem(
                "mesh cell counts must be at least 1".into(),
            ));
        }
        if !(self.dx > 0.0 && self.dy > 0.0 && self.dz > 0.0)
            || !(self.dx.is_finite() && self.dy.is_finite() && self.dz.is_finite())
        {
            return Err(Error::InvalidProblem("mesh widths must be positive".into()));
        }
        if self.material_id.len() != self.num_cells() {
            return Err(Error::InvalidProblem(format!(
                "mesh has {} cells but {} material assignments",
                self.num_cells(),
                self.material_id.len()
            )));
        }
        if let Some((cell, &id)) = self
            .material_id
            .iter()
            .enumerate()
            .find(|(_, &id)| id >= num_materials)
        {
            return Err(Error::InvalidProblem(format!(
                "cell {cell} refers to undefined material {id}"
            )));
        }
        Ok(())
    }
}

use std::ops::Range;

use crate::error::{Error, Result};

/// Scalar flux (P0 moment) per group per cell, stored group-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    groups: Range<usize>,
    num_cells: usize,
    values: Vec<f64>,
}

impl MomentVector {
    pub fn zeros(groups: Range<usize>, num_cells: usize) -> Self {
        let len = groups.len() * num_cells;
        Self {
            groups,
            num_cells,
            values: vec![0.0; len],
        }
    }

    pub fn from_values(groups: Range<usize>, num_cells: usize, values: Vec<f64>) -> Result<Self> {
        let expected = groups.len() * num_cells;
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: values.len(),
            });
        }
        Ok(Self {
            groups,
            num_cells,
            values,
        })
    }

    pub fn groups(&self) -> Range<usize> {
        self.groups.clone()
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Values of the `local`-th group of this vector (0 = `groups().start`).
    pub fn group(&self, local: usize) -> &[f64] {
        &self.values[local * self.num_cells..(local + 1) * self.num_cells]
    }

    pub fn group_mut(&mut self, local: usize) -> &mut [f64] {
        &mut self.values[local * self.num_cells..(local + 1) * self.num_cells]
    }

    /// Copy of the local groups in `local`, relabelled to start at `start`.
    pub fn slice_groups(&self, local: Range<usize>, start: usize) -> MomentVector {
        let len = local.len();
        Self {
            groups: start..start + len,
            num_cells: self.num_cells,
            values: self.values[local.start * self.num_cells..local.end * self.num_cells].to_vec(),
        }
    }

    /// Writes `part` into the local groups starting at `local_start`.
    pub fn set_groups(&mut self, local_start: usize, part: &MomentVector) {
        let n = self.num_cells;
        self.values[local_start * n..local_start * n + part.len()].copy_from_slice(part.as_slice());
    }

    /// The vector relabelled to a different group range of the same size.
    pub fn relabel(mut self, start: usize) -> Self {
        self.groups = start..start + self.groups.len();
        self
    }

    /// Group-wise concatenation; groups are labelled consecutively from the
    /// first part's start.
    pub fn concat(parts: &[MomentVector]) -> MomentVector {
        let num_cells = parts.first().map_or(0, |p| p.num_cells);
        let start = parts.first().map_or(0, |p| p.groups.start);
        let count: usize = parts.iter().map(|p| p.num_groups()).sum();
        let mut values = Vec::with_capacity(count * num_cells);
        for p in parts {
            values.extend_from_slice(&p.values);
        }
        Self {
            groups: start..start + count,
            num_cells,
            values,
        }
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &MomentVector) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.values.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn norm2(&self) -> f64 {
        norm2(&self.values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

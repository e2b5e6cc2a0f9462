//! Level-symmetric discrete-ordinates quadrature sets.
//!
//! Weights are normalized so that they sum to 4π over the unit sphere.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `(mu1, [(sorted level triple, octant-normalized weight)])` per order.
///
/// The first cosine and the point weights solve the even-moment conditions
/// `sum w mu^(2p) = 1/(2p+1)` over one octant.
/// `(order, mu1, [(octant point class (i, j, k), weight)])`
type LevelSymmetricEntry = (usize, f64, &'static [([usize; 3], f64)]);

#[allow(clippy::excessive_precision)]
const LEVEL_SYMMETRIC: [LevelSymmetricEntry; 4] = [
    (2, 0.577_350_269_189_625_764_5, &[([1, 1, 1], 1.0)]),
    (4, 0.350_021_174_581_540_677_78, &[([1, 1, 2], 1.0 / 3.0)]),
    (
        6,
        0.266_635_401_516_704_720_33,
        &[
            ([1, 1, 3], 0.176_126_130_863_383_433_78),
            ([1, 2, 2], 0.157_207_202_469_949_899_55),
        ],
    ),
    (
        8,
        0.218_217_890_235_992_381_27,
        &[
            ([1, 1, 4], 0.120_987_654_320_987_654_32),
            ([1, 2, 3], 0.090_740_740_740_740_740_741),
            ([2, 2, 2], 0.092_592_592_592_592_592_593),
        ],
    ),
];

pub const SUPPORTED_ORDERS: [usize; 4] = [2, 4, 6, 8];

#[derive(Debug, Clone, PartialEq)]
pub struct AngularQuadrature {
    order: usize,
    ordinates: Vec<[f64; 3]>,
    weights: Vec<f64>,
    /// `mirror[axis][m]` is the ordinate with the `axis` cosine of `m` negated.
    mirror: [Vec<usize>; 3],
}

impl AngularQuadrature {
    /// Builds a quadrature from explicit ordinates. The set must be closed
    /// under sign flips of each cosine.
    pub fn from_parts(order: usize, ordinates: Vec<[f64; 3]>, weights: Vec<f64>) -> Result<Self> {
        if ordinates.len() != weights.len() || ordinates.is_empty() {
            return Err(Error::Config(
                "quadrature needs one weight per ordinate".into(),
            ));
        }
        let find = |target: [f64; 3]| ordinates.iter().position(|o| *o == target);
        let mut mirror: [Vec<usize>; 3] = Default::default();
        for (axis, map) in mirror.iter_mut().enumerate() {
            for o in &ordinates {
                let mut flipped = *o;
                flipped[axis] = -flipped[axis];
                let m = find(flipped).ok_or_else(|| {
                    Error::Config(format!(
                        "quadrature is not closed under reflection on axis {axis}"
                    ))
                })?;
                map.push(m);
            }
        }
        Ok(Self {
            order,
            ordinates,
            weights,
            mirror,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.ordinates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordinates.is_empty()
    }

    pub fn ordinates(&self) -> &[[f64; 3]] {
        &self.ordinates
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mirror(&self, axis: usize, m: usize) -> usize {
        self.mirror[axis][m]
    }
}

/// Level-symmetric S_N set with `N (N + 2)` ordinates.
pub fn build_quadrature(order: usize) -> Result<AngularQuadrature> {
    let &(_, mu1, classes) = LEVEL_SYMMETRIC
        .iter()
        .find(|(n, _, _)| *n == order)
        .ok_or_else(|| {
            Error::Config(format!(
                "unsupported order S{order}; supported orders are 2, 4, 6, 8"
            ))
        })?;

    let levels = order / 2;
    let cosines: Vec<f64> = if levels == 1 {
        vec![mu1]
    } else {
        let spacing = 2.0 * (1.0 - 3.0 * mu1 * mu1) / (order as f64 - 2.0);
        (0..levels)
            .map(|i| (mu1 * mu1 + i as f64 * spacing).sqrt())
            .collect()
    };

    // Octant points are level triples (i, j, k) with i + j + k = levels + 2
    // (1-based).
    let mut octant = Vec::new();
    for i in 1..=levels {
        for j in 1..=levels {
            for k in 1..=levels {
                if i + j + k != levels + 2 {
                    continue;
                }
                let mut key = [i, j, k];
                key.sort_unstable();
                let w = classes
                    .iter()
                    .find(|(c, _)| *c == key)
                    .map(|(_, w)| *w)
                    .expect("every level triple has a weight class");
                octant.push(([cosines[i - 1], cosines[j - 1], cosines[k - 1]], w));
            }
        }
    }

    let mut ordinates = Vec::with_capacity(8 * octant.len());
    let mut weights = Vec::with_capacity(8 * octant.len());
    for signs in 0..8u8 {
        let sign = |bit: u8| if signs & (1 << bit) == 0 { 1.0 } else { -1.0 };
        for &(dir, w) in &octant {
            ordinates.push([sign(0) * dir[0], sign(1) * dir[1], sign(2) * dir[2]]);
            weights.push(w * PI / 2.0);
        }
    }
    AngularQuadrature::from_parts(order, ordinates, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s2_is_the_cube_diagonals() {
        let q = build_quadrature(2).unwrap();
        assert_eq!(q.len(), 8);
        let c = 1.0 / 3f64.sqrt();
        for (o, w) in q.ordinates().iter().zip(q.weights()) {
            for x in o {
                assert!((x.abs() - c).abs() < 1e-15);
            }
            assert!((w - PI / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn ordinate_counts() {
        for n in SUPPORTED_ORDERS {
            assert_eq!(build_quadrature(n).unwrap().len(), n * (n + 2));
        }
    }

    #[test]
    fn unsupported_orders_fail() {
        for n in [0, 1, 3, 10, 16] {
            let err = build_quadrature(n).unwrap_err();
            assert!(err.to_string().contains("unsupported order"));
        }
    }

    #[test]
    fn mirrors_flip_one_cosine() {
        let q = build_quadrature(6).unwrap();
        for m in 0..q.len() {
            for axis in 0..3 {
                let r = q.ordinates()[q.mirror(axis, m)];
                let o = q.ordinates()[m];
                for a in 0..3 {
                    let expect = if a == axis { -o[a] } else { o[a] };
                    assert_eq!(r[a], expect);
                }
                assert_eq!(q.weights()[q.mirror(axis, m)], q.weights()[m]);
            }
        }
    }

    /// Level-symmetric sets of order N integrate every even power of a
    /// single direction cosine up to N exactly; odd moments vanish.
    #[test]
    fn even_moments_are_exact() {
        let four_pi = 4.0 * std::f64::consts::PI;
        for order in SUPPORTED_ORDERS {
            let q = build_quadrature(order).unwrap();
            for axis in 0..3 {
                for p in 0..=order / 2 {
                    let sum: f64 = q
                        .ordinates()
                        .iter()
                        .zip(q.weights())
                        .map(|(o, w)| w * o[axis].powi(2 * p as i32))
                        .sum();
                    let want = four_pi / (2 * p + 1) as f64;
                    assert!((sum - want).abs() <= 1e-13 * want, "S{order} axis {axis} p {p}: {sum} vs {want}");
                }
                let odd: f64 = q.ordinates().iter().zip(q.weights()).map(|(o, w)| w * o[axis]).sum();
                assert!(odd.abs() <= 1e-13);
            }
            for o in q.ordinates() {
                assert!((o.iter().map(|c| c * c).sum::<f64>() - 1.0).abs() <= 1e-14);
            }
            assert!(q.weights().iter().all(|&w| w > 0.0));
        }
    }
}

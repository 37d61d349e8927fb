use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Length of a path in the perturbed digraph: hop count first, then the
/// summed per-arc perturbation. The derived order is lexicographic, so a
/// perturbation can never make a longer path beat a shorter one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PathWeight {
    pub hops: i64,
    pub perturbation: i64,
}

impl PathWeight {
    pub const ZERO: PathWeight = PathWeight {
        hops: 0,
        perturbation: 0,
    };

    pub fn new(hops: i64, perturbation: i64) -> Self {
        PathWeight { hops, perturbation }
    }

    /// Weight of a single arc with perturbation `r`.
    pub fn arc(r: i64) -> Self {
        PathWeight {
            hops: 1,
            perturbation: r,
        }
    }
}

impl Add for PathWeight {
    type Output = PathWeight;

    fn add(self, rhs: PathWeight) -> PathWeight {
        PathWeight {
            hops: self.hops + rhs.hops,
            perturbation: self.perturbation + rhs.perturbation,
        }
    }
}

impl Sub for PathWeight {
    type Output = PathWeight;

    fn sub(self, rhs: PathWeight) -> PathWeight {
        PathWeight {
            hops: self.hops - rhs.hops,
            perturbation: self.perturbation - rhs.perturbation,
        }
    }
}

impl Neg for PathWeight {
    type Output = PathWeight;

    fn neg(self) -> PathWeight {
        PathWeight {
            hops: -self.hops,
            perturbation: -self.perturbation,
        }
    }
}

/// A simple path with its perturbed weight.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Path {
    pub vertices: Vec<usize>,
    pub weight: PathWeight,
}

impl Path {
    pub fn trivial(v: usize) -> Self {
        Path {
            vertices: vec![v],
            weight: PathWeight::ZERO,
        }
    }

    pub fn hops(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }

    pub fn source(&self) -> usize {
        self.vertices[0]
    }

    pub fn target(&self) -> usize {
        *self.vertices.last().expect("paths are nonempty")
    }
}

//! Tangential tensor fields in proxy form and ambient field aliases.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type ScalarField = Vec<f64>;
/// R^3-valued field on the grid.
pub type AmbientField = Vec<Vector3<f64>>;
/// R^3 x R^3-valued field on the grid; tangential 2-tensors use this as their
/// ambient representation (first slot = row).
pub type AmbientTensorField = Vec<Matrix3<f64>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variance {
    Contra,
    Co,
}

/// Rank-n tangential field stored as 2^n proxy component arrays. The
/// component index is the binary number formed by the slot indices, first
/// slot most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentField {
    pub variance: Vec<Variance>,
    pub comps: Vec<Vec<f64>>,
}

impl TangentField {
    pub fn new(variance: Vec<Variance>, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.len() != 1 << variance.len() {
            return Err(Error::RankMismatch {
                expected: 1 << variance.len(),
                got: comps.len(),
            });
        }
        let n = comps[0].len();
        if comps.iter().any(|c| c.len() != n) {
            return Err(Error::BadConfig("proxy components differ in length".into()));
        }
        Ok(TangentField { variance, comps })
    }

    pub fn scalar(f: Vec<f64>) -> Self {
        TangentField {
            variance: vec![],
            comps: vec![f],
        }
    }

    pub fn vector(variance: Variance, c1: Vec<f64>, c2: Vec<f64>) -> Self {
        TangentField {
            variance: vec![variance],
            comps: vec![c1, c2],
        }
    }

    pub fn zeros(variance: Vec<Variance>, n: usize) -> Self {
        let m = 1 << variance.len();
        TangentField {
            variance,
            comps: vec![vec![0.0; n]; m],
        }
    }

    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    pub fn len(&self) -> usize {
        self.comps[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat component index from slot indices.
    pub fn index(slots: &[usize]) -> usize {
        slots.iter().fold(0, |acc, &s| (acc << 1) | s)
    }

    pub fn comp(&self, slots: &[usize]) -> &[f64] {
        &self.comps[Self::index(slots)]
    }

    pub fn at(&self, slots: &[usize], node: usize) -> f64 {
        self.comps[Self::index(slots)][node]
    }

    pub fn expect_rank(&self, rank: usize) -> Result<()> {
        if self.rank() != rank {
            return Err(Error::RankMismatch {
                expected: rank,
                got: self.rank(),
            });
        }
        Ok(())
    }

    pub fn scale(&self, s: f64) -> Self {
        TangentField {
            variance: self.variance.clone(),
            comps: self
                .comps
                .iter()
                .map(|c| c.iter().map(|v| v * s).collect())
                .collect(),
        }
    }

    /// Componentwise sum; both fields must share variance.
    pub fn add(&self, other: &TangentField) -> Result<Self> {
        if self.variance != other.variance {
            return Err(Error::BadConfig("adding fields of different variance".into()));
        }
        Ok(TangentField {
            variance: self.variance.clone(),
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Iterator over all slot-index tuples of a rank.
pub fn slot_tuples(rank: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..1usize << rank).map(move |c| (0..rank).map(|s| (c >> (rank - 1 - s)) & 1).collect())
}

//! Target family and model constants.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::GeometryError;

/// The division algebra K over which the hyperbolic space is built.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    R,
    C,
    H,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::R, Family::C, Family::H];

    /// Real dimension of K.
    pub fn dim(self) -> usize {
        match self {
            Family::R => 1,
            Family::C => 2,
            Family::H => 4,
        }
    }

    /// Number of imaginary units of K, i.e. the width of the `e^{4u}` block.
    pub fn vert_dim(self) -> usize {
        self.dim() - 1
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::R => "R",
            Family::C => "C",
            Family::H => "H",
        };
        f.write_str(s)
    }
}

impl FromStr for Family {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "R" | "r" | "real" => Ok(Family::R),
            "C" | "c" | "complex" => Ok(Family::C),
            "H" | "h" | "quaternion" | "quaternionic" => Ok(Family::H),
            other => Err(GeometryError::UnknownFamily(other.to_string())),
        }
    }
}

/// Family, rank and curvature pinching of the target `H^ℓ_K`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ModelParams {
    pub family: Family,
    pub rank: usize,
    /// Real dimension of the target.
    pub m: usize,
}

impl ModelParams {
    pub fn new(family: Family, rank: usize) -> Result<Self, GeometryError> {
        if rank < 2 {
            return Err(GeometryError::InvalidRank(rank));
        }
        Ok(ModelParams { family, rank, m: rank * family.dim() })
    }

    /// Lower curvature-pinching constant; the curvature is at most `-a²`.
    pub fn a(&self) -> f64 {
        1.0
    }

    /// Upper curvature-pinching constant; the curvature is at least `-b²`.
    pub fn b(&self) -> f64 {
        match self.family {
            Family::R => 1.0,
            Family::C | Family::H => 2.0,
        }
    }

    /// Dimension of the horospherical coordinate `v`.
    pub fn vdim(&self) -> usize {
        self.m - 1
    }

    /// Real dimension of K.
    pub fn block_dim(&self) -> usize {
        self.family.dim()
    }

    /// Number of leading `v` components carrying the `e^{4u}` weight.
    pub fn vert_dim(&self) -> usize {
        self.family.vert_dim()
    }

    /// Number of K-valued horizontal blocks in `v`.
    pub fn blocks(&self) -> usize {
        self.rank - 1
    }

    pub(crate) fn check_v(&self, v: &[f64]) -> Result<(), GeometryError> {
        if v.len() != self.vdim() {
            return Err(GeometryError::DimensionMismatch { expected: self.vdim(), got: v.len() });
        }
        Ok(())
    }
}

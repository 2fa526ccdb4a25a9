//! Uniform node lattices over axis-aligned boxes in two or three dimensions.

use serde::{Deserialize, Serialize};

use crate::PotentialError;

/// Nodes `lo + h·i` of a box `Π[lo_k, hi_k]`, stored in row-major order with
/// the last axis fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    lo: Vec<f64>,
    hi: Vec<f64>,
    h: f64,
    shape: Vec<usize>,
    strides: Vec<usize>,
}

impl Lattice {
    /// Builds the lattice; `h` must divide every edge of the box.
    pub fn new(lo: &[f64], hi: &[f64], h: f64) -> Result<Self, PotentialError> {
        let n = lo.len();
        if !(2..=3).contains(&n) || hi.len() != n {
            return Err(PotentialError::InvalidLattice(format!(
                "box must be two or three dimensional, got lo of length {} and hi of length {}",
                lo.len(),
                hi.len()
            )));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(PotentialError::InvalidLattice(format!("spacing must be positive, got {h}")));
        }
        let mut shape = Vec::with_capacity(n);
        for k in 0..n {
            let len = hi[k] - lo[k];
            if !(len > 0.0 && len.is_finite()) {
                return Err(PotentialError::InvalidLattice(format!("empty box along axis {k}")));
            }
            let cells = (len / h).round();
            if (cells * h - len).abs() > 1e-9 * len || cells < 2.0 {
                return Err(PotentialError::InvalidLattice(format!(
                    "spacing {h} does not divide edge {len} along axis {k} into at least two cells"
                )));
            }
            shape.push(cells as usize + 1);
        }
        let mut strides = vec![1; n];
        for k in (0..n - 1).rev() {
            strides[k] = strides[k + 1] * shape[k + 1];
        }
        Ok(Lattice { lo: lo.to_vec(), hi: hi.to_vec(), h, shape, strides })
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Linear index of a multi-index.
    pub fn index(&self, m: &[usize]) -> usize {
        m.iter().zip(&self.strides).map(|(a, b)| a * b).sum()
    }

    /// Multi-index of a linear index; unused trailing entries are zero.
    pub fn multi(&self, mut idx: usize) -> [usize; 3] {
        let mut m = [0; 3];
        for k in 0..self.dim() {
            m[k] = idx / self.strides[k];
            idx %= self.strides[k];
        }
        m
    }

    /// Coordinates of node `idx`; unused trailing entries are zero.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let m = self.multi(idx);
        let mut x = [0.0; 3];
        for k in 0..self.dim() {
            x[k] = if m[k] + 1 == self.shape[k] { self.hi[k] } else { self.lo[k] + self.h * m[k] as f64 };
        }
        x
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let m = self.multi(idx);
        (0..self.dim()).any(|k| m[k] == 0 || m[k] + 1 == self.shape[k])
    }

    /// Axis neighbours of `idx` that lie in the lattice, ordered by axis then direction.
    pub fn neighbors(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let m = self.multi(idx);
        (0..self.dim()).flat_map(move |k| {
            let s = self.strides[k];
            let down = (m[k] > 0).then(|| idx - s);
            let up = (m[k] + 1 < self.shape[k]).then(|| idx + s);
            down.into_iter().chain(up)
        })
    }

    /// Whether `x` lies in the closed box.
    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.dim()).all(|k| x[k] >= self.lo[k] && x[k] <= self.hi[k])
    }

    /// Euclidean distance from an interior point to the box boundary.
    pub fn distance_to_boundary(&self, x: &[f64]) -> f64 {
        (0..self.dim()).map(|k| (x[k] - self.lo[k]).min(self.hi[k] - x[k])).fold(f64::INFINITY, f64::min)
    }

    /// Multilinear interpolation of nodal values at `x` (clamped to the box).
    pub fn interpolate(&self, values: &[f64], x: &[f64]) -> f64 {
        let n = self.dim();
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for k in 0..n {
            let t = ((x[k] - self.lo[k]) / self.h).clamp(0.0, (self.shape[k] - 1) as f64);
            let i = (t.floor() as usize).min(self.shape[k] - 2);
            base[k] = i;
            frac[k] = t - i as f64;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = 0;
            for k in 0..n {
                let bit = (corner >> k) & 1;
                w *= if bit == 1 { frac[k] } else { 1.0 - frac[k] };
                idx += (base[k] + bit) * self.strides[k];
            }
            acc += w * values[idx];
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_indexing() {
        let l = Lattice::new(&[-1.0, -1.0], &[1.0, 1.0], 0.25).unwrap();
        assert_eq!(l.shape(), &[9, 9]);
        assert_eq!(l.len(), 81);
        let idx = l.index(&[3, 5]);
        assert_eq!(&l.multi(idx)[..2], &[3, 5]);
        let p = l.point(idx);
        assert_eq!((p[0], p[1]), (-0.25, 0.25));
        assert!(l.is_boundary(0) && !l.is_boundary(idx));
        assert_eq!(l.neighbors(idx).count(), 4);
        assert_eq!(l.neighbors(0).count(), 2);
    }

    #[test]
    fn rejects_non_dividing_spacing() {
        assert!(Lattice::new(&[0.0, 0.0], &[1.0, 1.0], 0.3).is_err());
        assert!(Lattice::new(&[0.0], &[1.0], 0.25).is_err());
        assert!(Lattice::new(&[0.0, 0.0], &[1.0, 1.0], 0.5).is_ok());
        assert!(Lattice::new(&[0.0, 0.0], &[1.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn interpolation_is_exact_for_multilinear_data() {
        let l = Lattice::new(&[0.0, 0.0, 0.0], &[1.0, 2.0, 1.0], 0.5).unwrap();
        let f = |x: &[f64]| 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[2] + x[0] * x[1] * x[2];
        let vals: Vec<f64> = (0..l.len()).map(|i| f(&l.point(i))).collect();
        for x in [[0.1, 0.2, 0.3], [0.77, 1.9, 0.01], [1.0, 2.0, 1.0]] {
            assert!((l.interpolate(&vals, &x) - f(&x)).abs() < 1e-13);
        }
    }

    #[test]
    fn boundary_distance() {
        let l = Lattice::new(&[-1.0, -1.0], &[1.0, 1.0], 0.5).unwrap();
        assert_eq!(l.distance_to_boundary(&[0.0, 0.0]), 1.0);
        assert_eq!(l.distance_to_boundary(&[0.5, -0.25]), 0.5);
    }
}

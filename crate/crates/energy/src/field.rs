//! Discrete maps `φ = (u_0 + û, v)` and their CSV/JSON serialization.

use std::io::{Read, Write};

use horomap_geometry::{Family, HoroPoint};
use serde::{Deserialize, Serialize};

use crate::grid::Grid;
use crate::EnergyError;

/// Nodal values of `û = u - u_0` and of `v ∈ R^{m-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MapField {
    pub uhat: Vec<f64>,
    /// Node-major: the `v` of node `i` is `v[i * vdim..(i + 1) * vdim]`.
    pub v: Vec<f64>,
    vdim: usize,
}

impl MapField {
    pub fn zeros(nodes: usize, vdim: usize) -> Self {
        MapField { uhat: vec![0.0; nodes], v: vec![0.0; nodes * vdim], vdim }
    }

    /// Every node at `(û, v) = (uhat, v)`.
    pub fn constant(nodes: usize, uhat: f64, v: &[f64]) -> Self {
        MapField { uhat: vec![uhat; nodes], v: v.repeat(nodes), vdim: v.len() }
    }

    pub fn from_parts(uhat: Vec<f64>, v: Vec<f64>, vdim: usize) -> Result<Self, EnergyError> {
        if v.len() != uhat.len() * vdim {
            return Err(EnergyError::DimensionMismatch { expected: uhat.len() * vdim, got: v.len() });
        }
        Ok(MapField { uhat, v, vdim })
    }

    pub fn len(&self) -> usize {
        self.uhat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.uhat.is_empty()
    }

    pub fn vdim(&self) -> usize {
        self.vdim
    }

    pub fn v_at(&self, i: usize) -> &[f64] {
        &self.v[i * self.vdim..(i + 1) * self.vdim]
    }

    pub fn v_at_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.v[i * self.vdim..(i + 1) * self.vdim]
    }

    /// The chart point `(u_0 + û, v)` of node `i`.
    pub fn point(&self, i: usize, u0: &[f64]) -> HoroPoint {
        HoroPoint::new(u0[i] + self.uhat[i], self.v_at(i).to_vec())
    }

    pub fn all_finite(&self) -> bool {
        self.uhat.iter().chain(&self.v).all(|x| x.is_finite())
    }

    /// Number of unknowns per node, `1 + vdim`.
    pub fn stride(&self) -> usize {
        1 + self.vdim
    }
}

/// Grid and problem parameters written next to a field CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldMetadata {
    pub family: Family,
    pub rank: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub h: f64,
    pub nodes: usize,
    pub vdim: usize,
}

impl FieldMetadata {
    pub fn to_json(&self) -> Result<String, EnergyError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, EnergyError> {
        Ok(serde_json::from_str(text)?)
    }
}

/// One row per node: index, coordinates, `û`, then the `v` components.
pub fn write_field_csv<W: Write>(out: W, grid: &Grid, field: &MapField) -> Result<(), EnergyError> {
    if field.len() != grid.len() {
        return Err(EnergyError::DimensionMismatch { expected: grid.len(), got: field.len() });
    }
    let n = grid.dim();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["index".to_string()];
    header.extend((0..n).map(|k| format!("x{k}")));
    header.push("uhat".into());
    header.extend((0..field.vdim()).map(|k| format!("v{k}")));
    w.write_record(&header)?;
    for i in 0..grid.len() {
        let x = grid.point(i);
        let mut row = vec![i.to_string()];
        row.extend(x[..n].iter().map(|c| format!("{c:?}")));
        row.push(format!("{:?}", field.uhat[i]));
        row.extend(field.v_at(i).iter().map(|c| format!("{c:?}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a field written by [`write_field_csv`], checking that it matches `grid`.
pub fn read_field_csv<R: Read>(input: R, grid: &Grid) -> Result<MapField, EnergyError> {
    let n = grid.dim();
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.len() < n + 2 || headers.get(n + 1) != Some("uhat") {
        return Err(EnergyError::Format("unexpected field CSV header".into()));
    }
    let vdim = headers.len() - n - 2;
    let mut uhat = Vec::with_capacity(grid.len());
    let mut v = Vec::with_capacity(grid.len() * vdim);
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |k: usize| -> Result<f64, EnergyError> {
            rec.get(k)
                .ok_or_else(|| EnergyError::Format(format!("row {row}: missing column {k}")))?
                .trim()
                .parse::<f64>()
                .map_err(|e| EnergyError::Format(format!("row {row}, column {k}: {e}")))
        };
        let idx: usize = rec
            .get(0)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| EnergyError::Format(format!("row {row}: bad index")))?;
        if idx != row || row >= grid.len() {
            return Err(EnergyError::Format(format!("row {row}: node index {idx} out of order")));
        }
        let x = grid.point(row);
        for k in 0..n {
            if (num(1 + k)? - x[k]).abs() > 1e-9 * grid.h() {
                return Err(EnergyError::Format(format!("row {row}: coordinates do not match the grid")));
            }
        }
        uhat.push(num(n + 1)?);
        for k in 0..vdim {
            v.push(num(n + 2 + k)?);
        }
    }
    if uhat.len() != grid.len() {
        return Err(EnergyError::DimensionMismatch { expected: grid.len(), got: uhat.len() });
    }
    MapField::from_parts(uhat, v, vdim)
}

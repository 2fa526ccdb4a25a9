//! Node classification and edge lists over `Ω ∖ Σ`.

use horomap_potentials::{boundary_distance, Lattice, SingularComponent};
use serde::{Deserialize, Serialize};

use crate::EnergyError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Interior,
    Boundary,
    /// Within `h/2` of `Σ` in the max norm; carries no unknowns and no edges.
    Excluded,
}

/// A lattice over the box with its classification and the edges of `Ω ∖ Σ`.
#[derive(Clone, Debug)]
pub struct Grid {
    lattice: Lattice,
    kind: Vec<NodeKind>,
    edges: Vec<[u32; 2]>,
    /// CSR adjacency: incident edges of each node, in edge order.
    offsets: Vec<u32>,
    incident: Vec<u32>,
    free: Vec<u32>,
}

/// Classifies nodes and collects the edges between non-excluded nodes.
pub fn build_grid(lattice: &Lattice, components: &[SingularComponent]) -> Result<Grid, EnergyError> {
    let n = lattice.dim();
    let h = lattice.h();
    for (i, c) in components.iter().enumerate() {
        if c.dim() != n {
            return Err(EnergyError::Configuration(format!(
                "component {i} lives in dimension {}, domain has dimension {n}",
                c.dim()
            )));
        }
        let inside = {
            let p = c.closest_point(lattice.lo());
            lattice.contains(&p[..n])
        };
        if !inside || boundary_distance(c, lattice) <= h {
            return Err(EnergyError::Configuration(format!(
                "component {i} touches the boundary (must stay more than one spacing inside)"
            )));
        }
    }
    let len = lattice.len();
    let mut kind = Vec::with_capacity(len);
    for i in 0..len {
        let x = lattice.point(i);
        let excluded = components.iter().any(|c| c.distance_max_norm(&x[..n]) <= 0.5 * h * (1.0 + 1e-9));
        kind.push(if excluded {
            NodeKind::Excluded
        } else if lattice.is_boundary(i) {
            NodeKind::Boundary
        } else {
            NodeKind::Interior
        });
    }
    let mut edges = Vec::new();
    for i in 0..len {
        if kind[i] == NodeKind::Excluded {
            continue;
        }
        let m = lattice.multi(i);
        for k in 0..n {
            if m[k] + 1 < lattice.shape()[k] {
                let j = i + lattice.strides()[k];
                if kind[j] != NodeKind::Excluded {
                    edges.push([i as u32, j as u32]);
                }
            }
        }
    }
    let mut count = vec![0u32; len + 1];
    for e in &edges {
        count[e[0] as usize + 1] += 1;
        count[e[1] as usize + 1] += 1;
    }
    for i in 0..len {
        count[i + 1] += count[i];
    }
    let offsets = count.clone();
    let mut fill = count;
    let mut incident = vec![0u32; 2 * edges.len()];
    for (k, e) in edges.iter().enumerate() {
        for &a in e {
            incident[fill[a as usize] as usize] = k as u32;
            fill[a as usize] += 1;
        }
    }
    let free = (0..len as u32).filter(|&i| kind[i as usize] == NodeKind::Interior).collect();
    Ok(Grid { lattice: lattice.clone(), kind, edges, offsets, incident, free })
}

impl Grid {
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    pub fn h(&self) -> f64 {
        self.lattice.h()
    }

    pub fn len(&self) -> usize {
        self.kind.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kind.is_empty()
    }

    pub fn kind(&self, i: usize) -> NodeKind {
        self.kind[i]
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.kind
    }

    pub fn edges(&self) -> &[[u32; 2]] {
        &self.edges
    }

    /// Indices of the edges incident to node `i`, in increasing order.
    pub fn incident_edges(&self, i: usize) -> &[u32] {
        &self.incident[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    /// The interior nodes, which carry the unknowns.
    pub fn free_nodes(&self) -> &[u32] {
        &self.free
    }

    pub fn excluded_count(&self) -> usize {
        self.kind.iter().filter(|k| **k == NodeKind::Excluded).count()
    }

    pub fn point(&self, i: usize) -> [f64; 3] {
        self.lattice.point(i)
    }

    /// `h^{n-2}`, the weight of one edge term.
    pub fn edge_weight(&self) -> f64 {
        self.h().powi(self.dim() as i32 - 2)
    }

    /// `h^n`, the volume of one node cell.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.dim() as i32)
    }

    /// Interior nodes whose lattice neighbours are all non-excluded.
    pub fn full_stencil(&self, i: usize) -> bool {
        self.kind[i] == NodeKind::Interior && self.incident_edges(i).len() == 2 * self.dim()
    }
}

//! Boundary-fitted structured grid `x1 = L(x2) + xi W(x2)`, `x2 = lo + eta b`,
//! where `L` is the inflow graph and `W` the width between the graphs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Domain;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeTag {
    Interior,
    Inflow,
    Outflow,
    Bottom,
    Top,
    /// junction of a graph with a flat piece
    Corner,
    /// grid row of zero width (singularity point)
    Collapsed,
}

impl NodeTag {
    pub fn is_boundary(self) -> bool {
        !matches!(self, NodeTag::Interior)
    }

    /// Boundary node with a well-defined normal.
    pub fn has_normal(self) -> bool {
        matches!(self, NodeTag::Inflow | NodeTag::Outflow | NodeTag::Bottom | NodeTag::Top)
    }
}

/// Row data at one `x2` level: values and two derivatives of `L` and `W`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowGeom {
    pub x2: f64,
    pub l: [f64; 3],
    pub w: [f64; 3],
    pub collapsed: bool,
}

#[derive(Debug, Clone)]
pub struct Grid {
    pub domain: Domain,
    /// number of cells in `xi` and `eta`
    pub nx: usize,
    pub ny: usize,
    pub rows: Vec<RowGeom>,
    pub x: Vec<[f64; 2]>,
    /// trapezoid (dual cell) areas
    pub weights: Vec<f64>,
    pub tags: Vec<NodeTag>,
    /// outward normals at boundary nodes with `has_normal`
    pub normals: Vec<[f64; 2]>,
}

impl Grid {
    pub fn new(domain: &Domain, nx: usize, ny: usize) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(Error::DegenerateGrid(format!("grid {nx}x{ny} too coarse")));
        }
        let cont_tol = 1e-10 * domain.height.max(1.0);
        if !domain.inflow.is_continuous(cont_tol) || !domain.outflow.is_continuous(cont_tol) {
            return Err(Error::DegenerateGrid(
                "boundary-fitted grid needs continuous inflow and outflow graphs".into(),
            ));
        }
        let b = domain.height;
        let collapse_tol = 1e-12 * b.max(1.0);
        let rows: Vec<RowGeom> = (0..=ny)
            .map(|j| {
                let x2 = domain.base + b * j as f64 / ny as f64;
                let l = domain.inflow.eval3(x2);
                let r = domain.outflow.eval3(x2);
                let w = [r[0] - l[0], r[1] - l[1], r[2] - l[2]];
                RowGeom {
                    x2,
                    l,
                    w,
                    collapsed: w[0] <= collapse_tol,
                }
            })
            .collect();
        for (j, row) in rows.iter().enumerate() {
            if row.collapsed && j != 0 && j != ny {
                return Err(Error::DegenerateGrid(format!(
                    "zero width at interior row x2 = {}",
                    row.x2
                )));
            }
        }
        let (nxi, n) = (nx + 1, (nx + 1) * (ny + 1));
        let mut x = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let mut tags = Vec::with_capacity(n);
        let mut normals = Vec::with_capacity(n);
        let (dxi, deta) = (1.0 / nx as f64, 1.0 / ny as f64);
        for (j, row) in rows.iter().enumerate() {
            for i in 0..nxi {
                let xi = i as f64 * dxi;
                x.push([row.l[0] + xi * row.w[0], row.x2]);
                let ti = if i == 0 || i == nx { 0.5 } else { 1.0 };
                let tj = if j == 0 || j == ny { 0.5 } else { 1.0 };
                weights.push(row.w[0].max(0.0) * b * dxi * deta * ti * tj);
                let edge_i = i == 0 || i == nx;
                let edge_j = j == 0 || j == ny;
                let tag = if row.collapsed {
                    NodeTag::Collapsed
                } else if edge_i && edge_j {
                    NodeTag::Corner
                } else if i == 0 {
                    NodeTag::Inflow
                } else if i == nx {
                    NodeTag::Outflow
                } else if j == 0 {
                    NodeTag::Bottom
                } else if j == ny {
                    NodeTag::Top
                } else {
                    NodeTag::Interior
                };
                let normal = match tag {
                    NodeTag::Inflow => {
                        let s = row.l[1];
                        let r = (1.0 + s * s).sqrt();
                        [-1.0 / r, s / r]
                    }
                    NodeTag::Outflow => {
                        let s = row.l[1] + row.w[1];
                        let r = (1.0 + s * s).sqrt();
                        [1.0 / r, -s / r]
                    }
                    NodeTag::Bottom => [0.0, -1.0],
                    NodeTag::Top => [0.0, 1.0],
                    _ => [0.0, 0.0],
                };
                tags.push(tag);
                normals.push(normal);
            }
        }
        Ok(Self {
            domain: domain.clone(),
            nx,
            ny,
            rows,
            x,
            weights,
            tags,
            normals,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn nxi(&self) -> usize {
        self.nx + 1
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn ij(&self, node: usize) -> (usize, usize) {
        (node % (self.nx + 1), node / (self.nx + 1))
    }

    pub fn dxi(&self) -> f64 {
        1.0 / self.nx as f64
    }

    pub fn deta(&self) -> f64 {
        1.0 / self.ny as f64
    }

    pub fn logical(&self, node: usize) -> [f64; 2] {
        let (i, j) = self.ij(node);
        [i as f64 * self.dxi(), j as f64 * self.deta()]
    }

    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Smallest physical spacing along grid lines over non-collapsed rows.
    pub fn min_spacing(&self) -> f64 {
        let wmax = self.rows.iter().map(|r| r.w[0]).fold(0.0, f64::max);
        (self.domain.height * self.deta()).min(wmax * self.dxi())
    }

    /// Logical coordinates of a physical point (`x2` clamped to the domain).
    pub fn to_logical(&self, x: [f64; 2]) -> [f64; 2] {
        let d = &self.domain;
        let x2 = x[1].clamp(d.base, d.top());
        let eta = (x2 - d.base) / d.height;
        let l = d.inflow.eval(x2);
        let w = d.outflow.eval(x2) - l;
        let xi = if w > 0.0 { (x[0] - l) / w } else { 0.5 };
        [xi, eta]
    }

    /// Bilinear interpolation weights in logical coordinates (clamped to the grid).
    pub fn bilinear(&self, x: [f64; 2]) -> [(usize, f64); 4] {
        let [xi, eta] = self.to_logical(x);
        let fx = (xi.clamp(0.0, 1.0) * self.nx as f64).min(self.nx as f64);
        let fy = (eta.clamp(0.0, 1.0) * self.ny as f64).min(self.ny as f64);
        let i = (fx.floor() as usize).min(self.nx - 1);
        let j = (fy.floor() as usize).min(self.ny - 1);
        let (a, b) = (fx - i as f64, fy - j as f64);
        [
            (self.idx(i, j), (1.0 - a) * (1.0 - b)),
            (self.idx(i + 1, j), a * (1.0 - b)),
            (self.idx(i, j + 1), (1.0 - a) * b),
            (self.idx(i + 1, j + 1), a * b),
        ]
    }

    pub fn interpolate(&self, values: &[f64], x: [f64; 2]) -> f64 {
        self.bilinear(x).iter().map(|&(k, w)| w * values[k]).sum()
    }

    /// Boundary nodes carrying a normal, in node order.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.tags[k].has_normal()).collect()
    }

    /// Quadrature weights for boundary integrals at nodes (trapezoid in the
    /// boundary parameter); zero away from the boundary.
    pub fn boundary_weights(&self) -> Vec<f64> {
        let mut wts = vec![0.0; self.len()];
        let b = self.domain.height;
        let (dxi, deta) = (self.dxi(), self.deta());
        for j in 0..=self.ny {
            let row = &self.rows[j];
            if row.collapsed {
                continue;
            }
            let tj = if j == 0 || j == self.ny { 0.5 } else { 1.0 };
            // graph sides: dS = sqrt(1 + x1'^2) dx2
            let sl = row.l[1];
            let sr = row.l[1] + row.w[1];
            let ds_in = (1.0 + sl * sl).sqrt() * b * deta * tj;
            let ds_out = (1.0 + sr * sr).sqrt() * b * deta * tj;
            wts[self.idx(0, j)] += ds_in;
            wts[self.idx(self.nx, j)] += ds_out;
            // flat sides
            if j == 0 || j == self.ny {
                for i in 0..=self.nx {
                    let ti = if i == 0 || i == self.nx { 0.5 } else { 1.0 };
                    wts[self.idx(i, j)] += row.w[0] * dxi * ti;
                }
            }
        }
        wts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_grid_basics() {
        let d = Domain::rectangle(1.0, 1.0).unwrap();
        let g = Grid::new(&d, 8, 8).unwrap();
        assert_eq!(g.len(), 81);
        assert!((g.area() - 1.0).abs() < 1e-14);
        assert_eq!(g.tags[0], NodeTag::Corner);
        assert_eq!(g.tags[g.idx(0, 3)], NodeTag::Inflow);
        assert_eq!(g.normals[g.idx(8, 3)], [1.0, 0.0]);
        let bw: f64 = g.boundary_weights().iter().sum();
        assert!((bw - 4.0).abs() < 1e-14);
    }

    #[test]
    fn lens_grid_collapses_at_tips() {
        let d = Domain::lens(1.0, 1.0).unwrap();
        let g = Grid::new(&d, 16, 16).unwrap();
        assert!(g.rows[0].collapsed && g.rows[16].collapsed);
        assert_eq!(g.tags[g.idx(5, 0)], NodeTag::Collapsed);
        // area of the lens is 2 * int x2(1-x2) = 1/3; trapezoid error O(h^2)
        assert!((g.area() - 1.0 / 3.0).abs() < 2e-3);
        for k in 0..g.len() {
            if g.tags[k] == NodeTag::Outflow {
                let x = g.x[k];
                assert!((x[0] - x[1] * (1.0 - x[1])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bilinear_reproduces_linear_functions() {
        let d = Domain::lens(1.0, 1.0).unwrap();
        let g = Grid::new(&d, 12, 10).unwrap();
        let f: Vec<f64> = (0..g.len())
            .map(|k| {
                let [a, b] = g.logical(k);
                2.0 * a - b
            })
            .collect();
        let x = [0.05, 0.37];
        let [a, b] = g.to_logical(x);
        assert!((g.interpolate(&f, x) - (2.0 * a - b)).abs() < 1e-12);
    }
}

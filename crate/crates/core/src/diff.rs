//! Second-order finite differences on the boundary-fitted grid.
//!
//! Logical derivatives use central stencils inside and one-sided ones on the
//! edges (four points for first derivatives, which keeps boundary flux terms
//! accurate on coarse grids); physical derivatives follow from the chain rule with the exact
//! inverse metric of the transfinite map.

use crate::grid::Grid;
use crate::sparse::Csr;

/// First-derivative weights at index `i` of `0..=n`, unit spacing.
pub fn d1_weights(i: usize, n: usize) -> Vec<(usize, f64)> {
    if i == 0 {
        vec![(0, -11.0 / 6.0), (1, 3.0), (2, -1.5), (3, 1.0 / 3.0)]
    } else if i == n {
        vec![(n, 11.0 / 6.0), (n - 1, -3.0), (n - 2, 1.5), (n - 3, -1.0 / 3.0)]
    } else {
        vec![(i - 1, -0.5), (i + 1, 0.5)]
    }
}

/// Second-derivative weights at index `i` of `0..=n`, unit spacing.
pub fn d2_weights(i: usize, n: usize) -> Vec<(usize, f64)> {
    if i == 0 {
        vec![(0, 2.0), (1, -5.0), (2, 4.0), (3, -1.0)]
    } else if i == n {
        vec![(n, 2.0), (n - 1, -5.0), (n - 2, 4.0), (n - 3, -1.0)]
    } else {
        vec![(i - 1, 1.0), (i, -2.0), (i + 1, 1.0)]
    }
}

/// Physical derivative operators as sparse matrices over grid nodes.
/// Rows of collapsed nodes are empty.
#[derive(Debug, Clone)]
pub struct DiffOps {
    pub d1: Csr,
    pub d2: Csr,
    pub d11: Csr,
    pub d12: Csr,
    pub d22: Csr,
}

/// Inverse metric terms at one node.
#[derive(Debug, Clone, Copy)]
pub struct Metric {
    pub xi_x1: f64,
    pub xi_x2: f64,
    pub eta_x2: f64,
    pub xi_x1x2: f64,
    pub xi_x2x2: f64,
}

pub fn metric(grid: &Grid, node: usize) -> Option<Metric> {
    let (i, j) = grid.ij(node);
    let row = &grid.rows[j];
    if row.collapsed {
        return None;
    }
    let xi = i as f64 * grid.dxi();
    let [_, l1, l2] = row.l;
    let [w, w1, w2] = row.w;
    let xi_x1 = 1.0 / w;
    let xi_x2 = -(l1 + xi * w1) / w;
    Some(Metric {
        xi_x1,
        xi_x2,
        eta_x2: 1.0 / grid.domain.height,
        xi_x1x2: -w1 / (w * w),
        xi_x2x2: -(l2 + xi * w2 + 2.0 * xi_x2 * w1) / w,
    })
}

impl DiffOps {
    pub fn new(grid: &Grid) -> Self {
        let (nx, ny) = (grid.nx, grid.ny);
        let (hx, hy) = (grid.dxi(), grid.deta());
        let n = grid.len();
        let mut rows: [Vec<Vec<(usize, f64)>>; 5] = Default::default();
        for node in 0..n {
            let (i, j) = grid.ij(node);
            let Some(m) = metric(grid, node) else {
                for r in rows.iter_mut() {
                    r.push(vec![]);
                }
                continue;
            };
            let dx: Vec<(usize, f64)> = d1_weights(i, nx)
                .into_iter()
                .map(|(a, w)| (grid.idx(a, j), w / hx))
                .collect();
            let dy: Vec<(usize, f64)> = d1_weights(j, ny)
                .into_iter()
                .map(|(b, w)| (grid.idx(i, b), w / hy))
                .collect();
            let dxx: Vec<(usize, f64)> = d2_weights(i, nx)
                .into_iter()
                .map(|(a, w)| (grid.idx(a, j), w / (hx * hx)))
                .collect();
            let dyy: Vec<(usize, f64)> = d2_weights(j, ny)
                .into_iter()
                .map(|(b, w)| (grid.idx(i, b), w / (hy * hy)))
                .collect();
            let mut dxy = Vec::new();
            for (a, wa) in d1_weights(i, nx) {
                for (b, wb) in d1_weights(j, ny) {
                    dxy.push((grid.idx(a, b), wa * wb / (hx * hy)));
                }
            }
            let comb = |parts: &[(&[(usize, f64)], f64)]| -> Vec<(usize, f64)> {
                let mut out = Vec::new();
                for (p, c) in parts {
                    if *c != 0.0 {
                        out.extend(p.iter().map(|&(k, w)| (k, w * c)));
                    }
                }
                out
            };
            rows[0].push(comb(&[(&dx, m.xi_x1)]));
            rows[1].push(comb(&[(&dx, m.xi_x2), (&dy, m.eta_x2)]));
            rows[2].push(comb(&[(&dxx, m.xi_x1 * m.xi_x1)]));
            rows[3].push(comb(&[
                (&dxx, m.xi_x1 * m.xi_x2),
                (&dxy, m.xi_x1 * m.eta_x2),
                (&dx, m.xi_x1x2),
            ]));
            rows[4].push(comb(&[
                (&dxx, m.xi_x2 * m.xi_x2),
                (&dxy, 2.0 * m.xi_x2 * m.eta_x2),
                (&dyy, m.eta_x2 * m.eta_x2),
                (&dx, m.xi_x2x2),
            ]));
        }
        let [r0, r1, r2, r3, r4] = rows;
        Self {
            d1: Csr::from_rows(n, r0),
            d2: Csr::from_rows(n, r1),
            d11: Csr::from_rows(n, r2),
            d12: Csr::from_rows(n, r3),
            d22: Csr::from_rows(n, r4),
        }
    }

    /// Gradient of a nodal field.
    pub fn grad(&self, f: &[f64]) -> [Vec<f64>; 2] {
        [self.d1.matvec(f), self.d2.matvec(f)]
    }

    pub fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        let a = self.d11.matvec(f);
        let b = self.d22.matvec(f);
        a.iter().zip(&b).map(|(x, y)| x + y).collect()
    }

    pub fn div(&self, u: &[Vec<f64>; 2]) -> Vec<f64> {
        let a = self.d1.matvec(&u[0]);
        let b = self.d2.matvec(&u[1]);
        a.iter().zip(&b).map(|(x, y)| x + y).collect()
    }

    /// `grad div u` as two nodal fields.
    pub fn grad_div(&self, u: &[Vec<f64>; 2]) -> [Vec<f64>; 2] {
        let a = self.d11.matvec(&u[0]);
        let b = self.d12.matvec(&u[1]);
        let c = self.d12.matvec(&u[0]);
        let d = self.d22.matvec(&u[1]);
        [
            a.iter().zip(&b).map(|(x, y)| x + y).collect(),
            c.iter().zip(&d).map(|(x, y)| x + y).collect(),
        ]
    }
}

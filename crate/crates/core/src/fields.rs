//! Nodal fields and their norms: `L_q`, Sobolev-Slobodetskii `W^s_p` with the
//! regularised kernel `eps + |x - y|^(2 + s p)`, `W^{1+s}_p`, `W^1_2`, and the
//! imbedding / interpolation inequality checks.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diff::DiffOps;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::quad::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub s: f64,
    pub p: f64,
    #[serde(default)]
    pub epsilon: f64,
}

impl NormParams {
    pub fn new(s: f64, p: f64, epsilon: f64) -> Result<Self> {
        let np = Self { s, p, epsilon };
        np.validate()?;
        Ok(np)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(Error::InvalidInput(format!("s = {} not in (0, 1)", self.s)));
        }
        if !(self.p >= 1.0) {
            return Err(Error::InvalidInput(format!("p = {} < 1", self.p)));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::InvalidInput("epsilon must be >= 0".into()));
        }
        Ok(())
    }

    /// `s p > 2`, the imbedding hypothesis in two dimensions.
    pub fn imbeds_in_linf(&self) -> bool {
        self.s * self.p > 2.0
    }
}

/// How the singular double integral is discretised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    /// product trapezoid rule over distinct node pairs
    #[default]
    NodePairs,
    /// node pairs, plus 3x3 subsampling of neighbouring cells and an
    /// analytic self-cell term from the local gradient
    Refined,
}

#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct VectorField {
    pub grid: Arc<Grid>,
    pub comps: [Vec<f64>; 2],
}

impl ScalarField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "field has {} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("field values must be finite".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        Self { grid, values: vec![0.0; n] }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = grid.x.iter().map(|&x| f(x)).collect();
        Self { grid, values }
    }
}

impl VectorField {
    pub fn new(grid: Arc<Grid>, comps: [Vec<f64>; 2]) -> Result<Self> {
        for c in &comps {
            if c.len() != grid.len() {
                return Err(Error::InvalidInput("component length mismatch".into()));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("field values must be finite".into()));
            }
        }
        Ok(Self { grid, comps })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        Self {
            grid,
            comps: [vec![0.0; n], vec![0.0; n]],
        }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        let v: Vec<[f64; 2]> = grid.x.iter().map(|&x| f(x)).collect();
        let comps = [v.iter().map(|a| a[0]).collect(), v.iter().map(|a| a[1]).collect()];
        Self { grid, comps }
    }
}

/// Cell-area-weighted `L_q` norm of a scalar nodal field; `q = INFINITY`
/// gives the max norm over nodes with positive weight.
pub fn lq_norm(grid: &Grid, f: &[f64], q: f64) -> Result<f64> {
    lq_norm_pointwise(grid, f.len(), |k| f[k].abs(), q)
}

/// `L_q` norm of the Euclidean length of a vector field.
pub fn lq_norm_vec(grid: &Grid, u: &[Vec<f64>; 2], q: f64) -> Result<f64> {
    lq_norm_pointwise(grid, u[0].len(), |k| u[0][k].hypot(u[1][k]), q)
}

fn lq_norm_pointwise(grid: &Grid, n: usize, abs: impl Fn(usize) -> f64, q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::InvalidInput(format!("L_q norm needs q >= 1, got {q}")));
    }
    if q.is_infinite() {
        return Ok((0..n)
            .filter(|&k| grid.weights[k] > 0.0)
            .map(&abs)
            .fold(0.0, f64::max));
    }
    let s: f64 = (0..n).map(|k| grid.weights[k] * abs(k).powf(q)).sum();
    Ok(s.powf(1.0 / q))
}

/// `(sum over node pairs x != y of |f(x) - f(y)|^p / (eps + |x - y|^{2+sp}) A_x A_y)^{1/p}`.
///
/// Pairs are tiled into blocks evaluated in parallel; partial sums are
/// reduced in a fixed order, so the result does not depend on the thread count.
pub fn seminorm(grid: &Grid, f: &[f64], np: &NormParams) -> f64 {
    seminorm_p(grid, f, np).powf(1.0 / np.p)
}

/// The seminorm raised to the power `p`.
pub fn seminorm_p(grid: &Grid, f: &[f64], np: &NormParams) -> f64 {
    let nodes: Vec<usize> = (0..grid.len()).filter(|&k| grid.weights[k] > 0.0).collect();
    let x: Vec<f64> = nodes.iter().map(|&k| grid.x[k][0]).collect();
    let y: Vec<f64> = nodes.iter().map(|&k| grid.x[k][1]).collect();
    let v: Vec<f64> = nodes.iter().map(|&k| f[k]).collect();
    let a: Vec<f64> = nodes.iter().map(|&k| grid.weights[k]).collect();
    pair_sum(&x, &y, &v, &a, np, |_, _| false)
}

const BLOCK: usize = 128;

/// Twice the sum over unordered pairs `i < j`, skipping pairs where `skip`
/// holds (indices into the compacted arrays).
fn pair_sum(
    x: &[f64],
    y: &[f64],
    v: &[f64],
    a: &[f64],
    np: &NormParams,
    skip: impl Fn(usize, usize) -> bool + Sync,
) -> f64 {
    let n = x.len();
    let half_exp = 0.5 * (2.0 + np.s * np.p);
    let p = np.p;
    let pint = (p.fract() == 0.0 && p <= 64.0).then_some(p as i32);
    let eps = np.epsilon;
    let nblocks = n.div_ceil(BLOCK);
    let partial: Vec<f64> = (0..nblocks)
        .into_par_iter()
        .map(|bi| {
            let i0 = bi * BLOCK;
            let i1 = (i0 + BLOCK).min(n);
            let mut acc = 0.0;
            for bj in bi..nblocks {
                let j0 = bj * BLOCK;
                let j1 = (j0 + BLOCK).min(n);
                for i in i0..i1 {
                    let (xi, yi, vi, ai) = (x[i], y[i], v[i], a[i]);
                    let start = if bj == bi { i + 1 } else { j0 };
                    let mut row = 0.0;
                    for j in start..j1 {
                        let dv = (vi - v[j]).abs();
                        if dv == 0.0 {
                            continue;
                        }
                        let (dx, dy) = (xi - x[j], yi - y[j]);
                        let d2 = dx * dx + dy * dy;
                        if d2 == 0.0 && eps == 0.0 {
                            continue;
                        }
                        if skip(i, j) {
                            continue;
                        }
                        let num = match pint {
                            Some(k) => dv.powi(k),
                            None => dv.powf(p),
                        };
                        row += num * a[j] / (eps + d2.powf(half_exp));
                    }
                    acc += row * ai;
                }
            }
            acc
        })
        .collect();
    2.0 * partial.iter().sum::<f64>()
}

/// `||f||_{L_p} + |f|_{W^s_p}`.
pub fn wsp_norm(grid: &Grid, f: &[f64], np: &NormParams) -> Result<f64> {
    Ok(lq_norm(grid, f, np.p)? + seminorm(grid, f, np))
}

/// `||u||_{L_p} + sum over components and first derivatives of ||d u_k||_{W^s_p}`.
pub fn w1sp_norm(grid: &Grid, ops: &DiffOps, u: &[Vec<f64>; 2], np: &NormParams) -> Result<f64> {
    let mut total = lq_norm_vec(grid, u, np.p)?;
    for c in u {
        for d in ops.grad(c) {
            total += wsp_norm(grid, &d, np)?;
        }
    }
    Ok(total)
}

/// `||f||_{L_p} + sum of ||d f||_{W^s_p}` for a scalar field.
pub fn w1sp_norm_scalar(grid: &Grid, ops: &DiffOps, f: &[f64], np: &NormParams) -> Result<f64> {
    let mut total = lq_norm(grid, f, np.p)?;
    for d in ops.grad(f) {
        total += wsp_norm(grid, &d, np)?;
    }
    Ok(total)
}

/// `(||u||_{L_2}^2 + ||grad u||_{L_2}^2)^{1/2}`.
pub fn w12_norm(grid: &Grid, ops: &DiffOps, u: &[Vec<f64>; 2]) -> f64 {
    let mut s = 0.0;
    for c in u {
        let [g1, g2] = ops.grad(c);
        for k in 0..grid.len() {
            s += grid.weights[k] * (c[k] * c[k] + g1[k] * g1[k] + g2[k] * g2[k]);
        }
    }
    s.sqrt()
}

/// Seminorm with near-diagonal correction, see [`Quadrature::Refined`].
///
/// Pairs of nodes within two logical cells of each other are replaced by the
/// average over 3x3 sub-points of both dual cells, with values from the linear
/// Taylor expansion at each node. The self-cell term integrates
/// `|grad f . z|^p / |z|^{2+sp}` exactly in the radius over the dual cell
/// (the regularisation `eps` is dropped there).
pub fn seminorm_refined(grid: &Grid, ops: &DiffOps, f: &[f64], np: &NormParams) -> f64 {
    let nodes: Vec<usize> = (0..grid.len()).filter(|&k| grid.weights[k] > 0.0).collect();
    let x: Vec<f64> = nodes.iter().map(|&k| grid.x[k][0]).collect();
    let y: Vec<f64> = nodes.iter().map(|&k| grid.x[k][1]).collect();
    let v: Vec<f64> = nodes.iter().map(|&k| f[k]).collect();
    let a: Vec<f64> = nodes.iter().map(|&k| grid.weights[k]).collect();
    let ij: Vec<(usize, usize)> = nodes.iter().map(|&k| grid.ij(k)).collect();
    let near = |i: usize, j: usize| {
        let (a, b) = (ij[i], ij[j]);
        a.0.abs_diff(b.0) <= 2 && a.1.abs_diff(b.1) <= 2
    };
    let far = pair_sum(&x, &y, &v, &a, np, near);

    let [gx, gy] = ops.grad(f);
    let cells: Vec<DualCell> = nodes.iter().map(|&k| DualCell::new(grid, k)).collect();
    let mut pos = vec![usize::MAX; grid.len()];
    for (c, &k) in nodes.iter().enumerate() {
        pos[k] = c;
    }
    let half_exp = 0.5 * (2.0 + np.s * np.p);
    let local: Vec<f64> = (0..nodes.len())
        .into_par_iter()
        .map(|c| {
            let k = nodes[c];
            let (i, j) = grid.ij(k);
            let g = [gx[k], gy[k]];
            let mut acc = self_cell(&cells[c], g, np);
            let sub_i = cells[c].subpoints(grid);
            for jj in j.saturating_sub(2)..=(j + 2).min(grid.ny) {
                for ii in i.saturating_sub(2)..=(i + 2).min(grid.nx) {
                    let m = grid.idx(ii, jj);
                    let cm = pos[m];
                    if m == k || cm == usize::MAX {
                        continue;
                    }
                    let gm = [gx[m], gy[m]];
                    let sub_m = cells[cm].subpoints(grid);
                    let (wi, wm) = (a[c] / 9.0, a[cm] / 9.0);
                    for p in &sub_i {
                        let fp = f[k] + g[0] * (p[0] - grid.x[k][0]) + g[1] * (p[1] - grid.x[k][1]);
                        for q in &sub_m {
                            let fq =
                                f[m] + gm[0] * (q[0] - grid.x[m][0]) + gm[1] * (q[1] - grid.x[m][1]);
                            let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
                            if d2 == 0.0 {
                                continue;
                            }
                            acc += (fp - fq).abs().powf(np.p) / (np.epsilon + d2.powf(half_exp))
                                * wi
                                * wm;
                        }
                    }
                }
            }
            acc
        })
        .collect();
    (far + local.iter().sum::<f64>()).powf(1.0 / np.p)
}

/// Dual cell of a node in logical coordinates with the local Jacobian.
struct DualCell {
    xi: [f64; 2],
    eta: [f64; 2],
    /// `[[x1_xi, x1_eta], [x2_xi, x2_eta]]`
    jac: [[f64; 2]; 2],
}

impl DualCell {
    fn new(grid: &Grid, k: usize) -> Self {
        let [xi, eta] = grid.logical(k);
        let (hx, hy) = (0.5 * grid.dxi(), 0.5 * grid.deta());
        let (j, row) = (grid.ij(k).1, &grid.rows[grid.ij(k).1]);
        let _ = j;
        let b = grid.domain.height;
        Self {
            xi: [(xi - hx).max(0.0), (xi + hx).min(1.0)],
            eta: [(eta - hy).max(0.0), (eta + hy).min(1.0)],
            jac: [[row.w[0], b * (row.l[1] + xi * row.w[1])], [0.0, b]],
        }
    }

    /// Physical images of the 3x3 sub-cell midpoints (exact map).
    fn subpoints(&self, grid: &Grid) -> [[f64; 2]; 9] {
        let d = &grid.domain;
        let mut out = [[0.0; 2]; 9];
        for a in 0..3 {
            for c in 0..3 {
                let xi = self.xi[0] + (a as f64 + 0.5) / 3.0 * (self.xi[1] - self.xi[0]);
                let eta = self.eta[0] + (c as f64 + 0.5) / 3.0 * (self.eta[1] - self.eta[0]);
                let x2 = d.base + eta * d.height;
                let l = d.inflow.eval(x2);
                let w = d.outflow.eval(x2) - l;
                out[3 * c + a] = [l + xi * w, x2];
            }
        }
        out
    }
}

/// `int_C int_C |g.(x - y)|^p / |x - y|^{2+sp} dx dy` over a dual cell,
/// linearising the map. In logical differences `z` the pair density is
/// `(a - |z1|)(b - |z2|)`; the radial integral is closed-form and the angle
/// is integrated by Gauss-Legendre between the corner directions.
fn self_cell(cell: &DualCell, g: [f64; 2], np: &NormParams) -> f64 {
    let (a, b) = (cell.xi[1] - cell.xi[0], cell.eta[1] - cell.eta[0]);
    let j = cell.jac;
    let det = (j[0][0] * j[1][1] - j[0][1] * j[1][0]).abs();
    if det == 0.0 || (g[0] == 0.0 && g[1] == 0.0) {
        return 0.0;
    }
    let alpha = np.p * (1.0 - np.s);
    let tc = b.atan2(a);
    let pi = std::f64::consts::PI;
    let breaks = [0.0, tc, pi - tc, pi, pi + tc, 2.0 * pi - tc, 2.0 * pi];
    let (nodes, wts) = gauss_legendre(24);
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        for (&t, &wt) in nodes.iter().zip(&wts) {
            let th = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * t;
            let (c, s) = (th.cos(), th.sin());
            let e = [j[0][0] * c + j[0][1] * s, j[1][0] * c + j[1][1] * s];
            let ge = (g[0] * e[0] + g[1] * e[1]).abs();
            let en = e[0].hypot(e[1]);
            let ang = ge.powf(np.p) / en.powf(2.0 + np.s * np.p);
            let (ac, as_) = (c.abs(), s.abs());
            let r = if ac * b > as_ * a { a / ac } else { b / as_ };
            let radial = a * b * r.powf(alpha) / alpha - (a * as_ + b * ac) * r.powf(alpha + 1.0) / (alpha + 1.0)
                + ac * as_ * r.powf(alpha + 2.0) / (alpha + 2.0);
            total += 0.5 * (t1 - t0) * wt * ang * radial;
        }
    }
    det * det * total
}

/// `||f||_{L_q} / ||f||_{W^s_p}` (imbedding constant lower bound).
pub fn check_imbedding(grid: &Grid, f: &[f64], np: &NormParams, q: f64) -> Result<f64> {
    let den = wsp_norm(grid, f, np)?;
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(lq_norm(grid, f, q)? / den)
}

/// `||f||_{L_q} - delta ||f||_{W^s_p} - c_delta ||f||_{L_2}`.
pub fn check_interpolation(
    grid: &Grid,
    f: &[f64],
    np: &NormParams,
    q: f64,
    delta: f64,
    c_delta: f64,
) -> Result<f64> {
    Ok(lq_norm(grid, f, q)? - delta * wsp_norm(grid, f, np)? - c_delta * lq_norm(grid, f, 2.0)?)
}

/// Smallest `C(delta)` making the interpolation residual nonpositive on a family.
pub fn calibrate_interpolation(
    grid: &Grid,
    family: &[Vec<f64>],
    np: &NormParams,
    q: f64,
    delta: f64,
) -> Result<f64> {
    let mut c: f64 = 0.0;
    for f in family {
        let l2 = lq_norm(grid, f, 2.0)?;
        if l2 > 0.0 {
            let need = (lq_norm(grid, f, q)? - delta * wsp_norm(grid, f, np)?) / l2;
            c = c.max(need);
        }
    }
    Ok(c)
}

/// Columnar text: `node,xi,eta,x1,x2,<names...>`.
pub fn dump_fields(grid: &Grid, names: &[&str], cols: &[&[f64]]) -> String {
    let mut s = String::from("node,xi,eta,x1,x2");
    for n in names {
        s.push(',');
        s.push_str(n);
    }
    s.push('\n');
    for k in 0..grid.len() {
        let [xi, eta] = grid.logical(k);
        let [x1, x2] = grid.x[k];
        let _ = write!(s, "{k},{xi:.17e},{eta:.17e},{x1:.17e},{x2:.17e}");
        for c in cols {
            let _ = write!(s, ",{:.17e}", c[k]);
        }
        s.push('\n');
    }
    s
}

pub fn write_fields(path: &Path, grid: &Grid, names: &[&str], cols: &[&[f64]]) -> Result<()> {
    std::fs::write(path, dump_fields(grid, names, cols))?;
    Ok(())
}

/// Parse a dump back into named columns (coordinates are skipped).
pub fn load_fields(text: &str) -> Result<Vec<(String, Vec<f64>)>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty field dump".into()))?;
    let names: Vec<&str> = header.split(',').collect();
    if names.len() < 5 || names[..5] != ["node", "xi", "eta", "x1", "x2"] {
        return Err(Error::Parse("field dump header must start with node,xi,eta,x1,x2".into()));
    }
    let mut cols: Vec<(String, Vec<f64>)> =
        names[5..].iter().map(|n| (n.to_string(), Vec::new())).collect();
    for (ln, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != names.len() {
            return Err(Error::Parse(format!("line {}: expected {} columns", ln + 2, names.len())));
        }
        for (c, p) in cols.iter_mut().zip(&parts[5..]) {
            c.1.push(
                p.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", ln + 2)))?,
            );
        }
    }
    Ok(cols)
}

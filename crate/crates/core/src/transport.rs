//! Steady transport `w_x1 + U.grad w = H` (and the damped form
//! `w + w_x1 + U.grad w = H`) solved along characteristics traced backwards
//! to the inflow boundary.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diff::DiffOps;
use crate::error::{Error, Result};
use crate::fields::{lq_norm, wsp_norm, NormParams};
use crate::geometry::{singularity_neighbourhood, Side};
use crate::grid::Grid;
use crate::report::EstimateReport;
use crate::sparse::Csr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ReachedInflow,
    /// reached the inflow boundary within the singularity radius, where the
    /// crossing is close to tangential
    NearSingularity,
    StepLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceOptions {
    /// step size; `None` uses the smallest grid spacing
    pub step: Option<f64>,
    /// step reduction factor inside singularity neighbourhoods
    pub sing_refine: f64,
    pub max_steps: usize,
    /// tolerance on `x1 - x1_in(x2)` at the crossing
    pub crossing_tol: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            step: None,
            sing_refine: 8.0,
            max_steps: 100_000,
            crossing_tol: 1e-12,
        }
    }
}

/// Polyline of a characteristic from `origin` back to the inflow boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicPath {
    pub origin: [f64; 2],
    pub nodes: Vec<[f64; 2]>,
    /// cumulative arclength at each node
    pub arclength: Vec<f64>,
    /// travel parameter `T` (time along `dx/dt = [1, 0] + U`)
    pub travel: f64,
    pub foot: [f64; 2],
    pub termination: Termination,
}

impl CharacteristicPath {
    pub fn length(&self) -> f64 {
        *self.arclength.last().unwrap_or(&0.0)
    }

    /// First intersection with the vertical line `x1 = c`.
    pub fn intersect_vertical(&self, c: f64) -> Option<[f64; 2]> {
        self.nodes.windows(2).find_map(|w| {
            let (a, b) = (w[0], w[1]);
            if (a[0] - c) * (b[0] - c) <= 0.0 && a[0] != b[0] {
                let t = (c - a[0]) / (b[0] - a[0]);
                Some([c, a[1] + t * (b[1] - a[1])])
            } else {
                None
            }
        })
    }
}

/// Advecting field, given on nodes or in closed form.
pub enum Velocity<'a> {
    Nodal(&'a [Vec<f64>; 2]),
    Func(&'a (dyn Fn([f64; 2]) -> [f64; 2] + Sync)),
    Zero,
}

impl Velocity<'_> {
    fn at(&self, grid: &Grid, x: [f64; 2]) -> [f64; 2] {
        match self {
            Velocity::Nodal(u) => {
                let w = grid.bilinear(x);
                let mut v = [0.0; 2];
                for &(k, a) in &w {
                    v[0] += a * u[0][k];
                    v[1] += a * u[1][k];
                }
                v
            }
            Velocity::Func(f) => f(x),
            Velocity::Zero => [0.0, 0.0],
        }
    }
}

struct Traced {
    path: Option<CharacteristicPath>,
    foot: [f64; 2],
    travel: f64,
    termination: Termination,
}

/// Backward RK4 from `x0`. `stage` receives `(point, weight)` so that the
/// source integral is `sum weight * H(point)`; damping multiplies the weight
/// by `exp(-sigma)` with `sigma` the backward travel parameter.
fn trace_core(
    grid: &Grid,
    vel: &Velocity<'_>,
    x0: [f64; 2],
    damped: bool,
    opts: &TraceOptions,
    keep_path: bool,
    mut stage: impl FnMut([f64; 2], f64),
) -> Traced {
    let d = &grid.domain;
    let (lo, hi) = (d.base, d.top());
    let clamp = |x: [f64; 2]| [x[0], x[1].clamp(lo, hi)];
    let gap = |x: [f64; 2]| x[0] - d.inflow.eval(x[1].clamp(lo, hi));
    let rate = |x: [f64; 2]| {
        let u = vel.at(grid, clamp(x));
        [-(1.0 + u[0]), -u[1]]
    };
    let h_max = opts.step.unwrap_or_else(|| grid.min_spacing());
    let r_sing = d.sing_radius();
    let damp = |s: f64| if damped { (-s).exp() } else { 1.0 };

    let mut x = clamp(x0);
    let mut sigma = 0.0;
    let mut nodes = vec![x];
    let mut arc = vec![0.0];
    let finish = |x: [f64; 2], sigma: f64, nodes: Vec<[f64; 2]>, arc: Vec<f64>, term: Termination| {
        let term = if term == Termination::ReachedInflow && d.near_singularity(x, r_sing) {
            Termination::NearSingularity
        } else {
            term
        };
        Traced {
            path: keep_path.then(|| CharacteristicPath {
                origin: x0,
                nodes,
                arclength: arc,
                travel: sigma,
                foot: x,
                termination: term,
            }),
            foot: x,
            travel: sigma,
            termination: term,
        }
    };
    if gap(x) <= opts.crossing_tol {
        return finish(x, 0.0, nodes, arc, Termination::ReachedInflow);
    }

    // one RK4 step of size h from x: end point and the four stage points
    let step = |x: [f64; 2], h: f64| {
        let k1 = rate(x);
        let x2 = clamp([x[0] + 0.5 * h * k1[0], x[1] + 0.5 * h * k1[1]]);
        let k2 = rate(x2);
        let x3 = clamp([x[0] + 0.5 * h * k2[0], x[1] + 0.5 * h * k2[1]]);
        let k3 = rate(x3);
        let x4 = clamp([x[0] + h * k3[0], x[1] + h * k3[1]]);
        let k4 = rate(x4);
        let xe = clamp([
            x[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            x[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ]);
        (xe, [x, x2, x3, x4])
    };

    for _ in 0..opts.max_steps {
        let h = if d.near_singularity(x, r_sing) {
            h_max / opts.sing_refine
        } else {
            h_max
        };
        let (mut xe, mut st) = step(x, h);
        let mut hh = h;
        let crossed = gap(xe) <= 0.0;
        if crossed {
            // bisection on the step fraction for the boundary crossing
            let (mut a, mut b) = (0.0, 1.0);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let (xm, _) = step(x, m * h);
                let g = gap(xm);
                if g.abs() <= opts.crossing_tol {
                    a = m;
                    b = m;
                    break;
                }
                if g > 0.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            hh = 0.5 * (a + b) * h;
            let r = step(x, hh);
            xe = r.0;
            st = r.1;
        }
        let wts = [1.0, 2.0, 2.0, 1.0];
        let sig = [sigma, sigma + 0.5 * hh, sigma + 0.5 * hh, sigma + hh];
        for s in 0..4 {
            stage(st[s], hh / 6.0 * wts[s] * damp(sig[s]));
        }
        sigma += hh;
        let seg = ((xe[0] - x[0]).powi(2) + (xe[1] - x[1]).powi(2)).sqrt();
        x = xe;
        if keep_path {
            arc.push(arc.last().unwrap() + seg);
            nodes.push(x);
        }
        if crossed || gap(x) <= opts.crossing_tol {
            return finish(x, sigma, nodes, arc, Termination::ReachedInflow);
        }
    }
    finish(x, sigma, nodes, arc, Termination::StepLimit)
}

/// Trace the characteristic through `x` back to `Gamma_in`.
pub fn trace_characteristic(
    grid: &Grid,
    vel: &Velocity<'_>,
    x: [f64; 2],
    opts: &TraceOptions,
) -> Result<CharacteristicPath> {
    let tol = 1e-12 * grid.domain.height.max(1.0);
    if !grid.domain.contains(x, tol) {
        return Err(Error::OutsideDomain { x1: x[0], x2: x[1] });
    }
    let t = trace_core(grid, vel, x, false, opts, true, |_, _| {});
    Ok(t.path.expect("path kept"))
}

/// Linear map `(w_in, H) -> w` for a fixed advecting field:
/// `w_k = m_k w_in(foot_k) + sum_j rows[k, j] H_j` with `m_k = 1` (undamped)
/// or `exp(-T_k)` (damped).
#[derive(Debug, Clone)]
pub struct TransportOperator {
    pub damped: bool,
    pub rows: Csr,
    pub feet: Vec<[f64; 2]>,
    pub travel: Vec<f64>,
    pub termination: Vec<Termination>,
}

impl TransportOperator {
    pub fn build(grid: &Grid, vel: &Velocity<'_>, damped: bool, opts: &TraceOptions) -> Self {
        let traced: Vec<(Vec<(usize, f64)>, [f64; 2], f64, Termination)> = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let mut entries: Vec<(usize, f64)> = Vec::new();
                let t = trace_core(grid, vel, grid.x[k], damped, opts, false, |p, w| {
                    for (m, b) in grid.bilinear(p) {
                        if b != 0.0 {
                            entries.push((m, w * b));
                        }
                    }
                });
                if t.termination == Termination::StepLimit {
                    entries.clear();
                }
                (entries, t.foot, t.travel, t.termination)
            })
            .collect();
        let mut rows = Vec::with_capacity(traced.len());
        let mut feet = Vec::with_capacity(traced.len());
        let mut travel = Vec::with_capacity(traced.len());
        let mut termination = Vec::with_capacity(traced.len());
        for (r, f, t, term) in traced {
            rows.push(r);
            feet.push(f);
            travel.push(t);
            termination.push(term);
        }
        Self {
            damped,
            rows: Csr::from_rows(grid.len(), rows),
            feet,
            travel,
            termination,
        }
    }

    /// Multiplier of the inflow value at each node.
    pub fn inflow_factor(&self, k: usize) -> f64 {
        if self.damped {
            (-self.travel[k]).exp()
        } else {
            1.0
        }
    }

    pub fn apply(&self, w_in: impl Fn([f64; 2]) -> f64, h: &[f64]) -> Vec<f64> {
        let mut w = self.rows.matvec(h);
        for (k, wk) in w.iter_mut().enumerate() {
            *wk += self.inflow_factor(k) * w_in(self.feet[k]);
        }
        w
    }

    /// Source part only (zero inflow data).
    pub fn apply_source(&self, h: &[f64]) -> Vec<f64> {
        self.rows.matvec(h)
    }

    pub fn untraced(&self) -> usize {
        self.termination
            .iter()
            .filter(|t| **t == Termination::StepLimit)
            .count()
    }
}

/// Solution with per-node quality information.
#[derive(Debug, Clone)]
pub struct TransportSolution {
    pub w: Vec<f64>,
    pub travel: Vec<f64>,
    pub termination: Vec<Termination>,
}

/// `w = w_in(foot) + int H dt` (undamped) or
/// `w = w_in(foot) e^{-T} + int_0^T e^{-(T - t)} H dt` (damped).
pub fn solve_transport(
    grid: &Grid,
    vel: &Velocity<'_>,
    h: &[f64],
    w_in: impl Fn([f64; 2]) -> f64,
    damped: bool,
    opts: &TraceOptions,
) -> TransportSolution {
    let op = TransportOperator::build(grid, vel, damped, opts);
    TransportSolution {
        w: op.apply(w_in, h),
        travel: op.travel,
        termination: op.termination,
    }
}

/// Checks near the singularity points: `(U.n) x1'` on both graphs, the
/// equivalent `|U2| |x1'|^2 / sqrt(1 + x1'^2)` form, and `w_in = 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SingReport {
    pub max_normal_slope_inflow: f64,
    pub max_normal_slope_outflow: f64,
    pub max_tangential_form: f64,
    pub max_inflow_density: f64,
    pub bound: f64,
    pub pass_normal: bool,
    pub pass_tangential: bool,
    pub pass_density: bool,
    pub pass: bool,
}

pub fn check_sing_conditions(
    grid: &Grid,
    u: &[Vec<f64>; 2],
    w_in: impl Fn([f64; 2]) -> f64,
    bound: f64,
) -> SingReport {
    let d = &grid.domain;
    let vel = Velocity::Nodal(u);
    let (mut mi, mut mo, mut mt, mut md) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for (side, x) in singularity_neighbourhood(d) {
        let v = vel.at(grid, x);
        let n = d.graph_normal(side, x[1]);
        let un = v[0] * n[0] + v[1] * n[1];
        let slope = match side {
            Side::Inflow => d.inflow.slope(x[1]),
            Side::Outflow => d.outflow.slope(x[1]),
        };
        let q = (un * slope).abs();
        match side {
            Side::Inflow => {
                mi = mi.max(q);
                md = md.max(w_in(x).abs());
                mt = mt.max(v[1].abs() * slope * slope / (1.0 + slope * slope).sqrt());
            }
            Side::Outflow => mo = mo.max(q),
        }
    }
    let pass_normal = mi.max(mo) <= bound;
    let pass_tangential = mt <= bound;
    let pass_density = md <= 1e-14;
    SingReport {
        max_normal_slope_inflow: mi,
        max_normal_slope_outflow: mo,
        max_tangential_form: mt,
        max_inflow_density: md,
        bound,
        pass_normal,
        pass_tangential,
        pass_density,
        pass: pass_normal && pass_tangential && pass_density,
    }
}

/// `||w||_{W^s_p} <= C (||H||_{W^s_p} + ||w||_{L_2})`, admissible for `s < delta`.
pub fn transport_estimate_report(
    grid: &Grid,
    ops: &DiffOps,
    w: &[f64],
    h: &[f64],
    u: &[Vec<f64>; 2],
    np: &NormParams,
    delta: Option<f64>,
) -> Result<EstimateReport> {
    let lhs = wsp_norm(grid, w, np)?;
    let rhs = wsp_norm(grid, h, np)? + lq_norm(grid, w, 2.0)?;
    let mut grad_inf: f64 = 0.0;
    for c in u {
        for g in ops.grad(c) {
            grad_inf = grad_inf.max(lq_norm(grid, &g, f64::INFINITY)?);
        }
    }
    let mut r = EstimateReport::new("transport_wsp", lhs, rhs, [grid.nx, grid.ny])
        .param("s", np.s)
        .param("p", np.p)
        .param("epsilon", np.epsilon)
        .with_extra("grad_u_inf", grad_inf);
    if let Some(dl) = delta {
        r = r.param("delta", dl);
    }
    r.admissible = Some(delta.map_or(true, |dl| np.s < dl));
    Ok(r)
}

/// `||w||_{L_2} <= C (||w_in||_{L_2(Gamma_in)} + ||H||_{L_2})`.
pub fn transport_l2_report(grid: &Grid, w: &[f64], h: &[f64], w_in_l2: f64) -> Result<EstimateReport> {
    let lhs = lq_norm(grid, w, 2.0)?;
    let rhs = w_in_l2 + lq_norm(grid, h, 2.0)?;
    Ok(EstimateReport::new("transport_l2", lhs, rhs, [grid.nx, grid.ny]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;

    fn square(n: usize) -> Grid {
        Grid::new(&Domain::rectangle(1.0, 1.0).unwrap(), n, n).unwrap()
    }

    #[test]
    fn straight_path_in_square() {
        let g = square(16);
        let p = trace_characteristic(&g, &Velocity::Zero, [0.5, 0.3], &TraceOptions::default()).unwrap();
        assert!(p.foot[0].abs() < 1e-12 && (p.foot[1] - 0.3).abs() < 1e-14);
        assert!((p.length() - 0.5).abs() < 1e-12);
        assert!((p.travel - 0.5).abs() < 1e-12);
        assert_eq!(p.termination, Termination::ReachedInflow);
    }

    #[test]
    fn linear_drift_foot_point() {
        let g = square(16);
        let f = |_: [f64; 2]| [0.0, 0.1];
        let p = trace_characteristic(&g, &Velocity::Func(&f), [0.5, 0.3], &TraceOptions::default()).unwrap();
        assert!((p.foot[1] - (0.3 - 0.1 * 0.5)).abs() < 1e-12);
    }

    #[test]
    fn outside_point_rejected() {
        let g = square(8);
        assert!(matches!(
            trace_characteristic(&g, &Velocity::Zero, [1.5, 0.3], &TraceOptions::default()),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn constant_inflow_no_source() {
        let g = square(8);
        let sol = solve_transport(&g, &Velocity::Zero, &vec![0.0; g.len()], |_| 2.5, false, &TraceOptions::default());
        assert!(sol.w.iter().all(|&v| (v - 2.5).abs() < 1e-14));
    }

    #[test]
    fn lens_tip_flagged() {
        let d = Domain::lens(1.0, 1.0).unwrap();
        let g = Grid::new(&d, 32, 32).unwrap();
        let p = trace_characteristic(&g, &Velocity::Zero, [0.001, 0.01], &TraceOptions::default()).unwrap();
        assert_eq!(p.termination, Termination::NearSingularity);
        let p = trace_characteristic(&g, &Velocity::Zero, [0.0, 0.5], &TraceOptions::default()).unwrap();
        assert_eq!(p.termination, Termination::ReachedInflow);
    }
}

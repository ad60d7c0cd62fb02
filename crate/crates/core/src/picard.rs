//! Fixed-point iteration for the perturbation `(u, w)` of the constant flow.
//!
//! Each step freezes the nonlinear terms at the current iterate and solves the
//! coupled linear system (momentum block + transport along `U = u + u0`)
//! exactly, by GMRES on the velocity with the transport eliminated.

use serde::{Deserialize, Serialize};

use crate::boundary::{compute_d0, BoundaryData, D0Report};
use crate::diff::DiffOps;
use crate::error::{Error, Result};
use crate::fields::{lq_norm, w12_norm, w1sp_norm, wsp_norm, NormParams};
use crate::grid::{Grid, NodeTag};
use crate::momentum::{tangent, unpack, FluidParams, MomentumSolver, RowKind};
use crate::report::{
    EstimateReport, IterationRecord, IterationReport, IterationStatus, ResidualNorms, ResidualPair,
};
use crate::sparse::{gmres, Csr, DirectSolver};
use crate::transport::{TraceOptions, TransportOperator, Velocity};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PicardOptions {
    /// stop when `||du||_{W^1_2} + ||dw||_{L_2}` drops below this
    pub tol: f64,
    pub max_iter: usize,
    /// under-relaxation of the iterate update, in `(0, 1]`
    pub theta: f64,
    /// fractional norms every this many iterations (and at the end)
    pub norm_every: usize,
    /// relative tolerance of the inner coupled linear solve
    pub linear_tol: f64,
    /// admission threshold on `D_0`
    pub d0_max: f64,
    /// boundary samples per piece for trace norms
    pub trace_samples: usize,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 30,
            theta: 1.0,
            norm_every: 3,
            linear_tol: 1e-12,
            d0_max: 0.05,
            trace_samples: 64,
        }
    }
}

impl PicardOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.linear_tol > 0.0 && self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::InvalidInput(format!("bad solver options {self:?}")));
        }
        if self.max_iter == 0 || self.norm_every == 0 || self.trace_samples < 2 {
            return Err(Error::InvalidInput("max_iter, norm_every, trace_samples must be positive".into()));
        }
        Ok(())
    }
}

/// Boundary data sampled on grid nodes.
#[derive(Debug, Clone)]
pub struct NodalData {
    /// `b - f tau1`
    pub stress: Vec<f64>,
    /// `d - n1`
    pub normal: Vec<f64>,
    pub friction: Vec<f64>,
}

impl NodalData {
    pub fn from_boundary(grid: &Grid, data: &BoundaryData) -> Self {
        let on = |k: usize| grid.tags[k].is_boundary();
        Self {
            stress: (0..grid.len()).map(|k| if on(k) { data.stress_pert(grid.x[k]) } else { 0.0 }).collect(),
            normal: (0..grid.len()).map(|k| if on(k) { data.normal_pert(grid.x[k]) } else { 0.0 }).collect(),
            friction: grid.x.iter().map(|&x| data.friction(x)).collect(),
        }
    }
}

/// The two normals meeting at a corner node.
fn corner_normals(grid: &Grid, k: usize) -> [[f64; 2]; 2] {
    let (i, j) = grid.ij(k);
    let d = &grid.domain;
    let x2 = grid.x[k][1];
    let side = if i == 0 {
        d.graph_normal(crate::geometry::Side::Inflow, x2)
    } else {
        d.graph_normal(crate::geometry::Side::Outflow, x2)
    };
    let flat = if j == 0 { [0.0, -1.0] } else { [0.0, 1.0] };
    [side, flat]
}

/// Extension `u0` of the normal trace: componentwise discrete Laplace
/// problem with `u0 = (d - n1) n` on boundary nodes. At corners both normal
/// conditions are imposed; collapsed tip rows get zero.
pub fn build_extension_u0(grid: &Grid, ops: &DiffOps, normal_trace: &[f64]) -> Result<[Vec<f64>; 2]> {
    let n = grid.len();
    if normal_trace.iter().all(|&v| v == 0.0) {
        return Ok([vec![0.0; n], vec![0.0; n]]);
    }
    let mut rows = Vec::with_capacity(n);
    let mut rhs = [vec![0.0; n], vec![0.0; n]];
    for k in 0..n {
        match grid.tags[k] {
            NodeTag::Interior => {
                let (a, av) = ops.d11.row(k);
                let (b, bv) = ops.d22.row(k);
                let mut r: Vec<(usize, f64)> = a.iter().copied().zip(av.iter().copied()).collect();
                r.extend(b.iter().copied().zip(bv.iter().copied()));
                rows.push(r);
            }
            t => {
                rows.push(vec![(k, 1.0)]);
                let g = normal_trace[k];
                match t {
                    NodeTag::Corner => {
                        let [na, nb] = corner_normals(grid, k);
                        let det = na[0] * nb[1] - na[1] * nb[0];
                        if det.abs() > 1e-12 {
                            rhs[0][k] = g * (nb[1] - na[1]) / det;
                            rhs[1][k] = g * (na[0] - nb[0]) / det;
                        }
                    }
                    NodeTag::Collapsed => {}
                    _ => {
                        let nv = grid.normals[k];
                        rhs[0][k] = g * nv[0];
                        rhs[1][k] = g * nv[1];
                    }
                }
            }
        }
    }
    let lap = Csr::from_rows(n, rows);
    let lu = DirectSolver::new(&lap)?;
    Ok([lu.solve(&rhs[0]), lu.solve(&rhs[1])])
}

/// `||u0||_{W^{1+s}_p} / ||d - n1||` for the trace norm of order `1 + s - 1/p`.
pub fn extension_report(
    grid: &Grid,
    ops: &DiffOps,
    u0: &[Vec<f64>; 2],
    d0: &D0Report,
    np: &NormParams,
) -> Result<EstimateReport> {
    let lhs = w1sp_norm(grid, ops, u0, np)?;
    Ok(EstimateReport::new("extension_u0", lhs, d0.normal_velocity, [grid.nx, grid.ny])
        .param("s", np.s)
        .param("p", np.p))
}

/// Density extension: `w_in` carried along straight characteristics
/// `x2 = const` (transport with zero source and zero advection perturbation).
pub fn build_extension_w0(grid: &Grid, w_in: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
    grid.x
        .iter()
        .map(|&x| w_in([grid.domain.inflow.eval(x[1]), x[1]]))
        .collect()
}

/// Right-hand sides of the linear system frozen at an iterate.
#[derive(Debug, Clone)]
pub struct Rhs {
    pub f: [Vec<f64>; 2],
    pub g: Vec<f64>,
    /// nodal slip data `B`, zero away from boundary nodes with a normal
    pub b: Vec<f64>,
}

/// `F, G, B` at `(u, w)` with extensions `(u0, w0)`:
///
/// `F = -d1 u0 + mu lap u0 + (nu+mu) grad div u0 - U.grad U - w (e1 + U).grad U
///      - [pi'(1 + w + w0) - pi'(1)] grad w` with `U = u + u0`,
/// `G = -(w + 1) div u0 - w div u`,
/// `B = (b - f tau1) - 2 mu n.D(u0).tau`.
#[allow(clippy::too_many_arguments)]
pub fn compute_rhs(
    grid: &Grid,
    ops: &DiffOps,
    params: &FluidParams,
    u: &[Vec<f64>; 2],
    w: &[f64],
    u0: &[Vec<f64>; 2],
    w0: &[f64],
    stress: &[f64],
) -> Result<Rhs> {
    let n = grid.len();
    let (mu, lam) = (params.mu, params.nu + params.mu);
    let ut = [add(&u[0], &u0[0]), add(&u[1], &u0[1])];
    let gu = [ops.grad(&ut[0]), ops.grad(&ut[1])];
    let g0 = [ops.grad(&u0[0]), ops.grad(&u0[1])];
    let lap0 = [ops.laplacian(&u0[0]), ops.laplacian(&u0[1])];
    let gd0 = ops.grad_div(u0);
    let gw = ops.grad(w);
    let div0 = ops.div(u0);
    let div = ops.div(u);
    let mut f = [vec![0.0; n], vec![0.0; n]];
    let mut g = vec![0.0; n];
    let mut min_rho = f64::INFINITY;
    for k in 0..n {
        let rho = 1.0 + w[k] + w0[k];
        if grid.tags[k] != NodeTag::Collapsed {
            min_rho = min_rho.min(rho);
        }
        let dp = if rho > 0.0 { params.dpressure(rho) - params.gamma } else { 0.0 };
        let adv = [1.0 + ut[0][k], ut[1][k]];
        for c in 0..2 {
            let conv = ut[0][k] * gu[c][0][k] + ut[1][k] * gu[c][1][k];
            let conv_w = w[k] * (adv[0] * gu[c][0][k] + adv[1] * gu[c][1][k]);
            f[c][k] = -g0[c][0][k] + mu * lap0[c][k] + lam * gd0[c][k] - conv - conv_w - dp * gw[c][k];
        }
        g[k] = -(w[k] + 1.0) * div0[k] - w[k] * div[k];
    }
    if min_rho <= 0.0 {
        return Err(Error::DensityPositivity { min_rho });
    }
    let b = slip_data(grid, ops, params, u0, stress);
    Ok(Rhs { f, g, b })
}

fn slip_data(grid: &Grid, ops: &DiffOps, params: &FluidParams, u0: &[Vec<f64>; 2], stress: &[f64]) -> Vec<f64> {
    let g0 = [ops.grad(&u0[0]), ops.grad(&u0[1])];
    (0..grid.len())
        .map(|k| {
            if !grid.tags[k].has_normal() {
                return 0.0;
            }
            stress[k] - 2.0 * params.mu * ndt(grid.normals[k], [[g0[0][0][k], g0[0][1][k]], [g0[1][0][k], g0[1][1][k]]])
        })
        .collect()
}

/// `n . D . tau` from the velocity gradient `grad[c][i] = d_i u_c`.
fn ndt(n: [f64; 2], grad: [[f64; 2]; 2]) -> f64 {
    let t = tangent(n);
    let mut s = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            s += n[i] * 0.5 * (grad[j][i] + grad[i][j]) * t[j];
        }
    }
    s
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Coupled linear solve for a fixed advecting field `U`:
/// momentum with `F - gamma grad w`, slip data `B`, and
/// `w_x1 + U.grad w = G - div u`, `w = w_in` on the inflow boundary.
pub struct LinearSolve<'a> {
    pub grid: &'a Grid,
    pub ops: &'a DiffOps,
    pub params: &'a FluidParams,
    pub momentum: &'a MomentumSolver,
    pub transport: TransportOperator,
}

impl<'a> LinearSolve<'a> {
    pub fn new(
        grid: &'a Grid,
        ops: &'a DiffOps,
        params: &'a FluidParams,
        momentum: &'a MomentumSolver,
        adv: &[Vec<f64>; 2],
        opts: &TraceOptions,
    ) -> Self {
        let transport = TransportOperator::build(grid, &Velocity::Nodal(adv), false, opts);
        Self { grid, ops, params, momentum, transport }
    }

    fn rhs_vec(&self, interior: &[Vec<f64>; 2], slip: Option<&[f64]>) -> Vec<f64> {
        let n = self.grid.len();
        let mut r = vec![0.0; 2 * n];
        for k in 0..n {
            for c in 0..2 {
                r[2 * k + c] = match self.momentum.rows[2 * k + c] {
                    RowKind::Interior => interior[c][k],
                    RowKind::Slip => slip.map_or(0.0, |b| b[k]),
                    _ => 0.0,
                };
            }
        }
        r
    }

    fn split(&self, x: &[f64]) -> [Vec<f64>; 2] {
        let n = self.grid.len();
        [(0..n).map(|k| x[2 * k]).collect(), (0..n).map(|k| x[2 * k + 1]).collect()]
    }

    /// Returns `(u, w, gmres iterations)`.
    pub fn solve(
        &self,
        rhs: &Rhs,
        w_in: &dyn Fn([f64; 2]) -> f64,
        guess: Option<&[Vec<f64>; 2]>,
        tol: f64,
    ) -> Result<([Vec<f64>; 2], Vec<f64>, usize)> {
        let gamma = self.params.gamma;
        let w_base = self.transport.apply(w_in, &rhs.g);
        let gwb = self.ops.grad(&w_base);
        let interior = [
            rhs.f[0].iter().zip(&gwb[0]).map(|(f, g)| f - gamma * g).collect(),
            rhs.f[1].iter().zip(&gwb[1]).map(|(f, g)| f - gamma * g).collect(),
        ];
        let b0 = self.momentum.solve_raw(&self.rhs_vec(&interior, Some(&rhs.b)))?;
        let coupling = |x: &[f64]| -> Vec<f64> {
            let u = self.split(x);
            let src = self.transport.apply_source(&self.ops.div(&u));
            let gs = self.ops.grad(&src);
            let interior = [
                gs[0].iter().map(|v| gamma * v).collect(),
                gs[1].iter().map(|v| gamma * v).collect(),
            ];
            let k = self.momentum.solve_raw(&self.rhs_vec(&interior, None)).unwrap_or_else(|_| vec![f64::NAN; x.len()]);
            x.iter().zip(&k).map(|(a, b)| a - b).collect()
        };
        let x0: Option<Vec<f64>> = guess.map(|u| {
            let mut v = vec![0.0; 2 * self.grid.len()];
            for k in 0..self.grid.len() {
                v[2 * k] = u[0][k];
                v[2 * k + 1] = u[1][k];
            }
            v
        });
        let (x, history, iters) = gmres(coupling, &b0, x0.as_deref(), tol, 60, 600)?;
        if history.last().is_some_and(|r| !r.is_finite()) {
            return Err(Error::SolverFailure { reason: "coupled solve produced non-finite residual".into(), history });
        }
        let u = unpack(self.grid, &x);
        let div = self.ops.div(&u);
        let h: Vec<f64> = rhs.g.iter().zip(&div).map(|(g, d)| g - d).collect();
        let w = self.transport.apply(w_in, &h);
        Ok((u, w, iters))
    }
}

/// Which form of the continuity residual to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuityForm {
    /// `d1 w + U.grad w + (1 + w) div U` by finite differences at interior nodes
    FiniteDifference,
    /// `w - T_U[w_in, -(1 + w) div U]` with the characteristic solver
    Characteristic,
}

fn pair(grid: &Grid, r: &[f64]) -> ResidualPair {
    ResidualPair {
        l2: lq_norm(grid, r, 2.0).unwrap_or(f64::NAN),
        linf: r.iter().fold(0.0, |m: f64, v| m.max(v.abs())),
    }
}

/// Residuals of the full steady system for velocity `e1 + u + u0` and
/// density `1 + w`.
#[allow(clippy::too_many_arguments)]
pub fn nonlinear_residual(
    grid: &Grid,
    ops: &DiffOps,
    params: &FluidParams,
    nodal: &NodalData,
    w_in: &dyn Fn([f64; 2]) -> f64,
    u: &[Vec<f64>; 2],
    w: &[f64],
    u0: &[Vec<f64>; 2],
    form: ContinuityForm,
) -> ResidualNorms {
    let n = grid.len();
    let (mu, lam) = (params.mu, params.nu + params.mu);
    let ut = [add(&u[0], &u0[0]), add(&u[1], &u0[1])];
    let gu = [ops.grad(&ut[0]), ops.grad(&ut[1])];
    let lap = [ops.laplacian(&ut[0]), ops.laplacian(&ut[1])];
    let gd = ops.grad_div(&ut);
    let gw = ops.grad(w);
    let div = ops.div(&ut);
    let mut rm = vec![0.0; n];
    let mut rc_fd = vec![0.0; n];
    let mut rs = vec![0.0; n];
    let mut rn = vec![0.0; n];
    for k in 0..n {
        let rho = 1.0 + w[k];
        let v = [1.0 + ut[0][k], ut[1][k]];
        match grid.tags[k] {
            NodeTag::Interior => {
                let dp = params.dpressure(rho.max(f64::MIN_POSITIVE));
                let mut r = [0.0; 2];
                for c in 0..2 {
                    r[c] = rho * (v[0] * gu[c][0][k] + v[1] * gu[c][1][k]) - mu * lap[c][k] - lam * gd[c][k]
                        + dp * gw[c][k];
                }
                rm[k] = r[0].hypot(r[1]);
                rc_fd[k] = v[0] * gw[0][k] + v[1] * gw[1][k] + rho * div[k];
            }
            t if t.has_normal() => {
                let nv = grid.normals[k];
                let tv = tangent(nv);
                let grad = [[gu[0][0][k], gu[0][1][k]], [gu[1][0][k], gu[1][1][k]]];
                rs[k] = 2.0 * mu * ndt(nv, grad) + nodal.friction[k] * (ut[0][k] * tv[0] + ut[1][k] * tv[1])
                    - nodal.stress[k];
                rn[k] = ut[0][k] * nv[0] + ut[1][k] * nv[1] - nodal.normal[k];
            }
            _ => {}
        }
    }
    let continuity = match form {
        ContinuityForm::FiniteDifference => pair(grid, &rc_fd),
        ContinuityForm::Characteristic => {
            let t = TransportOperator::build(grid, &Velocity::Nodal(&ut), false, &TraceOptions::default());
            let h: Vec<f64> = (0..n).map(|k| -(1.0 + w[k]) * div[k]).collect();
            let wt = t.apply(w_in, &h);
            let r: Vec<f64> = w.iter().zip(&wt).map(|(a, b)| a - b).collect();
            pair(grid, &r)
        }
    };
    let bw = grid.boundary_weights();
    let bpair = |r: &[f64]| ResidualPair {
        l2: (0..n).map(|k| bw[k] * r[k] * r[k]).sum::<f64>().sqrt(),
        linf: r.iter().fold(0.0, |m: f64, v| m.max(v.abs())),
    };
    ResidualNorms {
        momentum: pair(grid, &rm),
        continuity,
        slip: bpair(&rs),
        impermeability: bpair(&rn),
    }
}

/// Everything a Picard run needs.
pub struct PicardInput<'a> {
    pub grid: &'a Grid,
    pub ops: &'a DiffOps,
    pub params: &'a FluidParams,
    pub data: &'a BoundaryData,
    pub np: &'a NormParams,
    pub opts: &'a PicardOptions,
}

pub struct PicardOutput {
    pub u: [Vec<f64>; 2],
    pub w: Vec<f64>,
    pub u0: [Vec<f64>; 2],
    pub w0: Vec<f64>,
    pub d0: D0Report,
    pub report: IterationReport,
}

/// One frozen-coefficient step from `(u, w)`.
pub struct PicardStepper<'a> {
    input: &'a PicardInput<'a>,
    nodal: NodalData,
    momentum: MomentumSolver,
    pub u0: [Vec<f64>; 2],
    zeros: Vec<f64>,
}

impl<'a> PicardStepper<'a> {
    pub fn new(input: &'a PicardInput<'a>) -> Result<Self> {
        let nodal = NodalData::from_boundary(input.grid, input.data);
        let momentum = MomentumSolver::new(input.grid, input.ops, input.params, &nodal.friction)?;
        let u0 = build_extension_u0(input.grid, input.ops, &nodal.normal)?;
        Ok(Self { input, nodal, momentum, u0, zeros: vec![0.0; input.grid.len()] })
    }

    /// `(u_next, w_next, gmres iterations, untraced nodes)`
    pub fn step(&self, u: &[Vec<f64>; 2], w: &[f64]) -> Result<([Vec<f64>; 2], Vec<f64>, usize, usize)> {
        let inp = self.input;
        let rhs = compute_rhs(inp.grid, inp.ops, inp.params, u, w, &self.u0, &self.zeros, &self.nodal.stress)?;
        let adv = [add(&u[0], &self.u0[0]), add(&u[1], &self.u0[1])];
        let ls = LinearSolve::new(inp.grid, inp.ops, inp.params, &self.momentum, &adv, &TraceOptions::default());
        let w_in = |x: [f64; 2]| inp.data.density_pert(x);
        let (un, wn, it) = ls.solve(&rhs, &w_in, Some(u), inp.opts.linear_tol)?;
        Ok((un, wn, it, ls.transport.untraced()))
    }

    pub fn residual(&self, u: &[Vec<f64>; 2], w: &[f64], form: ContinuityForm) -> ResidualNorms {
        let inp = self.input;
        let w_in = |x: [f64; 2]| inp.data.density_pert(x);
        nonlinear_residual(inp.grid, inp.ops, inp.params, &self.nodal, &w_in, u, w, &self.u0, form)
    }
}

fn combined_step(grid: &Grid, ops: &DiffOps, a: &[Vec<f64>; 2], b: &[Vec<f64>; 2], wa: &[f64], wb: &[f64]) -> (f64, f64) {
    let du = [
        a[0].iter().zip(&b[0]).map(|(x, y)| x - y).collect(),
        a[1].iter().zip(&b[1]).map(|(x, y)| x - y).collect(),
    ];
    let dw: Vec<f64> = wa.iter().zip(wb).map(|(x, y)| x - y).collect();
    (w12_norm(grid, ops, &du), lq_norm(grid, &dw, 2.0).unwrap_or(f64::NAN))
}

fn min_rho(grid: &Grid, w: &[f64]) -> f64 {
    (0..grid.len())
        .filter(|&k| grid.tags[k] != NodeTag::Collapsed)
        .map(|k| 1.0 + w[k])
        .fold(f64::INFINITY, f64::min)
}

pub const DIVERGENCE_RUN: usize = 3;
pub const RHO_FLOOR: f64 = 0.5;

pub fn picard_solve(input: &PicardInput<'_>) -> Result<PicardOutput> {
    let n = input.grid.len();
    picard_solve_from(input, [vec![0.0; n], vec![0.0; n]], vec![0.0; n])
}

/// Picard iteration from a given initial guess.
pub fn picard_solve_from(input: &PicardInput<'_>, u_init: [Vec<f64>; 2], w_init: Vec<f64>) -> Result<PicardOutput> {
    let PicardInput { grid, ops, np, opts, data, .. } = *input;
    opts.validate()?;
    np.validate()?;
    input.params.validate()?;
    let n = grid.len();
    let d0 = compute_d0(data, &grid.domain, np, opts.trace_samples)?;
    if d0.total > opts.d0_max {
        return Err(Error::InvalidInput(format!(
            "D0 = {:.4e} exceeds d0_max = {:.4e}",
            d0.total, opts.d0_max
        )));
    }
    let w0 = build_extension_w0(grid, |x| data.density_pert(x));
    let zero_init = u_init.iter().all(|c| c.iter().all(|&v| v == 0.0)) && w_init.iter().all(|&v| v == 0.0);
    if data.is_background() && zero_init {
        let z = [vec![0.0; n], vec![0.0; n]];
        let report = IterationReport {
            d0: 0.0,
            status: IterationStatus::Trivial,
            iterations: vec![],
            residual: ResidualNorms::default(),
            e_lhs: 0.0,
            e_ratio: None,
            norm_u: 0.0,
            norm_w: 0.0,
            norm_u0: 0.0,
            min_rho: 1.0,
            untraced_nodes: 0,
        };
        return Ok(PicardOutput { u: z.clone(), w: vec![0.0; n], u0: z, w0, d0, report });
    }
    let stepper = PicardStepper::new(input)?;
    let (mut u, mut w) = (u_init, w_init);
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut prev_step: Option<f64> = None;
    let mut growth_run = 0;
    let mut status = IterationStatus::MaxIterations;
    let mut untraced = 0;
    for k in 1..=opts.max_iter {
        let (mut un, mut wn, gm, unt) = stepper.step(&u, &w)?;
        untraced = untraced.max(unt);
        if opts.theta < 1.0 {
            let t = opts.theta;
            for c in 0..2 {
                for i in 0..n {
                    un[c][i] = t * un[c][i] + (1.0 - t) * u[c][i];
                }
            }
            for i in 0..n {
                wn[i] = t * wn[i] + (1.0 - t) * w[i];
            }
        }
        let (su, sw) = combined_step(grid, ops, &un, &u, &wn, &w);
        let step = su + sw;
        let q = prev_step.map(|p| if p > 0.0 { step / p } else { 0.0 });
        let rho = min_rho(grid, &wn);
        if rho <= RHO_FLOOR {
            return Err(Error::DensityPositivity { min_rho: rho });
        }
        let converged = step < opts.tol;
        let (norm_u, norm_w) = if k % opts.norm_every == 0 || converged || k == opts.max_iter {
            (Some(w1sp_norm(grid, ops, &un, np)?), Some(wsp_norm(grid, &wn, np)?))
        } else {
            (None, None)
        };
        records.push(IterationRecord { k, step_u: su, step_w: sw, q, min_rho: rho, norm_u, norm_w, gmres_iterations: gm });
        u = un;
        w = wn;
        prev_step = Some(step);
        if converged {
            status = IterationStatus::Converged;
            break;
        }
        growth_run = if q.is_some_and(|q| q >= 1.0) { growth_run + 1 } else { 0 };
        if growth_run >= DIVERGENCE_RUN {
            status = IterationStatus::Diverged;
            break;
        }
    }
    let residual = stepper.residual(&u, &w, ContinuityForm::Characteristic);
    let ut = [add(&u[0], &stepper.u0[0]), add(&u[1], &stepper.u0[1])];
    let norm_u = w1sp_norm(grid, ops, &u, np)?;
    let norm_w = wsp_norm(grid, &w, np)?;
    let norm_u0 = w1sp_norm(grid, ops, &stepper.u0, np)?;
    let e_lhs = w1sp_norm(grid, ops, &ut, np)? + norm_w;
    let report = IterationReport {
        d0: d0.total,
        status,
        iterations: records,
        residual,
        e_lhs,
        e_ratio: (d0.total > 0.0).then(|| e_lhs / d0.total),
        norm_u,
        norm_w,
        norm_u0,
        min_rho: min_rho(grid, &w),
        untraced_nodes: untraced,
    };
    if status == IterationStatus::Diverged {
        return Err(Error::Divergence { iterations: report.iterations.len(), report: Box::new(report) });
    }
    Ok(PicardOutput { u, w, u0: stepper.u0, w0, d0, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::SpaceFn;
    use crate::geometry::Domain;

    #[test]
    fn zero_perturbation_rhs() {
        let g = Grid::new(&Domain::rectangle(1.0, 1.0).unwrap(), 8, 8).unwrap();
        let ops = DiffOps::new(&g);
        let z = vec![0.0; g.len()];
        let zz = [z.clone(), z.clone()];
        let stress: Vec<f64> = g.x.iter().map(|x| 0.1 * x[1]).collect();
        let r = compute_rhs(&g, &ops, &FluidParams::default(), &zz, &z, &zz, &z, &stress).unwrap();
        assert!(r.f[0].iter().chain(&r.f[1]).chain(&r.g).all(|&v| v == 0.0));
        for k in g.boundary_nodes() {
            assert_eq!(r.b[k], stress[k]);
        }
    }

    #[test]
    fn density_loss_is_fatal() {
        let g = Grid::new(&Domain::rectangle(1.0, 1.0).unwrap(), 8, 8).unwrap();
        let ops = DiffOps::new(&g);
        let z = vec![0.0; g.len()];
        let zz = [z.clone(), z.clone()];
        let w = vec![-1.5; g.len()];
        assert!(matches!(
            compute_rhs(&g, &ops, &FluidParams::default(), &zz, &w, &zz, &z, &z),
            Err(Error::DensityPositivity { .. })
        ));
    }

    #[test]
    fn extension_matches_trace() {
        let g = Grid::new(&Domain::rectangle(1.0, 1.0).unwrap(), 16, 16).unwrap();
        let ops = DiffOps::new(&g);
        let tr: Vec<f64> = (0..g.len())
            .map(|k| if g.tags[k] == NodeTag::Inflow { 0.01 * (std::f64::consts::PI * g.x[k][1]).sin() } else { 0.0 })
            .collect();
        let u0 = build_extension_u0(&g, &ops, &tr).unwrap();
        for k in g.boundary_nodes() {
            let nv = g.normals[k];
            assert!((u0[0][k] * nv[0] + u0[1][k] * nv[1] - tr[k]).abs() < 1e-10);
        }
        let z = build_extension_u0(&g, &ops, &vec![0.0; g.len()]).unwrap();
        assert!(z[0].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn background_data_is_trivial() {
        let g = Grid::new(&Domain::rectangle(1.0, 1.0).unwrap(), 8, 8).unwrap();
        let ops = DiffOps::new(&g);
        let data = BoundaryData::background(SpaceFn::Constant(1.0));
        let np = NormParams::new(0.5, 5.0, 0.0).unwrap();
        let inp = PicardInput {
            grid: &g,
            ops: &ops,
            params: &FluidParams::default(),
            data: &data,
            np: &np,
            opts: &PicardOptions::default(),
        };
        let out = picard_solve(&inp).unwrap();
        assert_eq!(out.report.status, IterationStatus::Trivial);
        assert!(out.u[0].iter().chain(&out.u[1]).chain(&out.w).all(|&v| v == 0.0));
    }
}

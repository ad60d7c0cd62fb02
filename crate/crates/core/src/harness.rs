//! Runs scenarios and writes `report.json`, field dumps and sweep tables.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::boundary::{compute_d0, trace_lp, D0Report};
use crate::diff::DiffOps;
use crate::error::{Error, Result};
use crate::fields::{lq_norm, write_fields, wsp_norm, NormParams};
use crate::geometry::{
    check_assumption1, domain_certificates, sample_boundary, Assumption1Report, Domain, FlatnessCertificate,
    Selection,
};
use crate::grid::Grid;
use crate::momentum::{
    assemble_momentum, energy_report, energy_terms, friction_regime, korn_report, solve_momentum, FluidParams,
    FrictionRegime, SolverKind,
};
use crate::oracle::mms_case;
use crate::picard::{
    build_extension_u0, build_extension_w0, compute_rhs, extension_report, picard_solve, NodalData, PicardInput,
    PicardOutput,
};
use crate::report::{EstimateReport, IterationReport, IterationStatus};
use crate::scenario::Scenario;
use crate::transport::{check_sing_conditions, transport_estimate_report, transport_l2_report, SingReport};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Picard solve, iteration report and the main estimate
    Solve,
    /// solve plus every estimate report and the MMS study
    VerifyEstimates,
    /// data norms and extensions only
    NormsOnly,
    /// certificates and boundary checks only
    GeometryCheck,
}

/// `name=v1,v2,...`
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub name: String,
    pub values: Vec<f64>,
}

impl FromStr for SweepSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, vals) = s
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("sweep `{s}` is not of the form name=v1,v2")))?;
        let values = vals
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("sweep value `{v}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if values.is_empty() || name.trim().is_empty() {
            return Err(Error::Parse(format!("empty sweep `{s}`")));
        }
        Ok(Self { name: name.trim().to_string(), values })
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: PathBuf,
    pub mode: Mode,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub out: PathBuf,
    pub deterministic: bool,
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeometryReport {
    pub singularity_points: Vec<[f64; 2]>,
    pub corners: Vec<[f64; 2]>,
    pub certificates: Vec<FlatnessCertificate>,
    /// admissible smoothness bound `s < delta`; absent without singularity points
    pub delta: Option<f64>,
    pub assumption1: Assumption1Report,
    /// conditions near the singularity points for the advecting field
    pub sing_conditions: SingReport,
    pub friction: FrictionRegime,
    pub nodes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MmsRow {
    pub case: String,
    pub n: usize,
    pub err_l2: f64,
    pub err_linf: f64,
    pub identity_residual: f64,
    /// orders against the previous row
    pub order_l2: Option<f64>,
    pub order_identity: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub scenario: String,
    pub mode: Mode,
    pub grid: [usize; 2],
    pub fluid: FluidParams,
    pub norms: NormParams,
    /// false when `s >= delta` or `D_0` exceeds the admission threshold
    pub admissible: bool,
    pub notes: Vec<String>,
    pub geometry: GeometryReport,
    pub d0: Option<D0Report>,
    pub estimates: Vec<EstimateReport>,
    pub iteration: Option<IterationReport>,
    pub mms: Vec<MmsRow>,
    pub error: Option<ErrorInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_s: Option<f64>,
}

impl RunReport {
    pub fn estimate(&self, name: &str) -> Option<&EstimateReport> {
        self.estimates.iter().find(|e| e.name == name)
    }

    pub fn exit_code(&self) -> i32 {
        match &self.error {
            Some(e) => e.exit_code,
            None if !self.admissible => 4,
            None => 0,
        }
    }
}

/// Nodal fields of a run, for the CSV dump.
pub struct RunFields {
    pub grid: Grid,
    pub names: Vec<&'static str>,
    pub cols: Vec<Vec<f64>>,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_)
        | Error::InvalidInput(_)
        | Error::NonContiguous(_)
        | Error::JunctionOrdering { .. }
        | Error::SelfIntersecting { .. }
        | Error::NotClosed(_)
        | Error::MissingTrace(_)
        | Error::UnknownCase(_)
        | Error::Io(_)
        | Error::Json(_) => 2,
        Error::Divergence { .. } | Error::DensityPositivity { .. } => 3,
        _ => 1,
    }
}

pub fn error_info(e: &Error) -> ErrorInfo {
    let kind = match e {
        Error::Parse(_) => "parse",
        Error::InvalidInput(_) => "invalid_input",
        Error::NonContiguous(_) | Error::JunctionOrdering { .. } | Error::SelfIntersecting { .. } | Error::NotClosed(_) => {
            "domain"
        }
        Error::MissingTrace(_) => "missing_trace",
        Error::UnknownCase(_) => "unknown_case",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
        Error::Divergence { .. } => "divergence",
        Error::DensityPositivity { .. } => "density_positivity",
        Error::SolverFailure { .. } => "linear_solver",
        Error::NoCertificate(_) => "no_certificate",
        Error::DegenerateGrid(_) => "degenerate_grid",
        _ => "other",
    };
    ErrorInfo { kind: kind.into(), message: e.to_string(), exit_code: exit_code(e) }
}

/// Cap rayon workers from `INFLOW_NS_THREADS`. Call once, before any work.
pub fn init_threads() {
    if let Some(n) = std::env::var("INFLOW_NS_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn geometry_report(grid: &Grid, sc: &Scenario, u_adv: &[Vec<f64>; 2], friction: &[f64]) -> Result<GeometryReport> {
    let domain = &grid.domain;
    let data = sc.boundary_data()?;
    let (certificates, delta) = domain_certificates(domain)?;
    let d_full = |x: [f64; 2]| data.normal_pert(x) + domain.normal_at(x).map_or(0.0, |n| n[0]);
    Ok(GeometryReport {
        singularity_points: domain.singularity_points.clone(),
        corners: domain.corners.clone(),
        certificates,
        delta,
        assumption1: check_assumption1(domain, d_full, sc.verify.sing_bound),
        sing_conditions: check_sing_conditions(grid, u_adv, |x| data.density_pert(x), sc.verify.sing_bound),
        friction: friction_regime(grid, friction),
        nodes: grid.len(),
    })
}

/// Momentum MMS study on the unit square (the manufactured fields satisfy
/// `u.n = 0` there).
pub fn mms_study(case: &str, grids: &[usize], params: &FluidParams) -> Result<Vec<MmsRow>> {
    let c = mms_case(case)?;
    let domain = Domain::rectangle(1.0, 1.0)?;
    let mut rows: Vec<MmsRow> = Vec::new();
    for &n in grids {
        let g = Grid::new(&domain, n, n)?;
        let ops = DiffOps::new(&g);
        let len = g.len();
        let fr = vec![1.0; len];
        let w: Vec<f64> = g.x.iter().map(|&x| c.w(x)).collect();
        let mut f = [vec![0.0; len], vec![0.0; len]];
        for k in 0..len {
            let v = c.momentum_forcing(g.x[k], params.mu, params.nu, params.gamma);
            f[0][k] = v[0];
            f[1][k] = v[1];
        }
        let b: Vec<f64> = (0..len)
            .map(|k| if g.tags[k].has_normal() { c.slip_forcing(g.x[k], g.normals[k], params.mu, 1.0) } else { 0.0 })
            .collect();
        let sys = assemble_momentum(&g, &ops, params, &fr, &w, &f, &b)?;
        let u = solve_momentum(&g, &sys, SolverKind::Direct)?;
        let e: Vec<f64> = (0..len)
            .map(|k| {
                let ue = c.u(g.x[k]);
                (u[0][k] - ue[0]).hypot(u[1][k] - ue[1])
            })
            .collect();
        let identity = energy_terms(&g, &ops, params, &fr, &u, &w, &f, &b).residual.abs();
        let err_l2 = lq_norm(&g, &e, 2.0)?;
        let prev = rows.last();
        let order = |a: f64, b: f64, na: usize| (a > 0.0 && b > 0.0).then(|| (a / b).ln() / (n as f64 / na as f64).ln());
        rows.push(MmsRow {
            case: case.to_string(),
            n,
            err_l2,
            err_linf: lq_norm(&g, &e, f64::INFINITY)?,
            identity_residual: identity,
            order_l2: prev.and_then(|p| order(p.err_l2, err_l2, p.n)),
            order_identity: prev.and_then(|p| order(p.identity_residual, identity, p.n)),
        });
    }
    Ok(rows)
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Run one scenario in memory. Errors that leave a meaningful partial
/// report (divergence, density loss) are recorded in `report.error`.
pub fn run_scenario(sc: &Scenario, mode: Mode) -> Result<(RunReport, Option<RunFields>)> {
    sc.validate()?;
    let domain = sc.build_domain()?;
    let grid = Grid::new(&domain, sc.grid.nx, sc.grid.ny)?;
    let ops = DiffOps::new(&grid);
    let data = sc.boundary_data()?;
    let np = sc.norms;
    let nodal = NodalData::from_boundary(&grid, &data);
    let zero = [vec![0.0; grid.len()], vec![0.0; grid.len()]];
    let mut report = RunReport {
        schema: SCHEMA,
        scenario: sc.name.clone(),
        mode,
        grid: [grid.nx, grid.ny],
        fluid: sc.fluid,
        norms: np,
        admissible: true,
        notes: vec![],
        geometry: geometry_report(&grid, sc, &zero, &nodal.friction)?,
        d0: None,
        estimates: vec![],
        iteration: None,
        mms: vec![],
        error: None,
        elapsed_s: None,
    };
    if let Some(dl) = report.geometry.delta {
        if np.s >= dl {
            report.admissible = false;
            report.notes.push(format!("s = {} is not below the flatness bound delta = {dl}", np.s));
        }
    }
    if mode == Mode::GeometryCheck {
        return Ok((report, None));
    }

    let d0 = compute_d0(&data, &domain, &np, sc.solver.trace_samples)?;
    report.d0 = Some(d0);
    let u0 = build_extension_u0(&grid, &ops, &nodal.normal)?;
    let w0 = build_extension_w0(&grid, |x| data.density_pert(x));
    report.geometry.sing_conditions = check_sing_conditions(&grid, &u0, |x| data.density_pert(x), sc.verify.sing_bound);
    report.estimates.push(extension_report(&grid, &ops, &u0, &d0, &np)?);
    report.estimates.push(
        EstimateReport::new("extension_w0", wsp_norm(&grid, &w0, &np)?, d0.density, [grid.nx, grid.ny])
            .param("s", np.s)
            .param("p", np.p),
    );
    if mode == Mode::NormsOnly {
        let fields = RunFields {
            names: vec!["u0_1", "u0_2", "w0"],
            cols: vec![u0[0].clone(), u0[1].clone(), w0],
            grid,
        };
        return Ok((report, Some(fields)));
    }

    if d0.total > sc.solver.d0_max {
        report.admissible = false;
        report
            .notes
            .push(format!("D0 = {:e} exceeds d0_max = {:e}; solve skipped", d0.total, sc.solver.d0_max));
        return Ok((report, None));
    }
    let input = PicardInput { grid: &grid, ops: &ops, params: &sc.fluid, data: &data, np: &np, opts: &sc.solver };
    let out: PicardOutput = match picard_solve(&input) {
        Ok(o) => o,
        Err(e @ Error::Divergence { .. }) => {
            report.error = Some(error_info(&e));
            if let Error::Divergence { report: it, .. } = e {
                report.iteration = Some(*it);
            }
            return Ok((report, None));
        }
        Err(e @ Error::DensityPositivity { .. }) => {
            report.error = Some(error_info(&e));
            return Ok((report, None));
        }
        Err(e) => return Err(e),
    };
    let it = out.report.clone();
    let ut = [
        out.u[0].iter().zip(&out.u0[0]).map(|(a, b)| a + b).collect(),
        out.u[1].iter().zip(&out.u0[1]).map(|(a, b)| a + b).collect(),
    ];
    report.geometry.sing_conditions = check_sing_conditions(&grid, &ut, |x| data.density_pert(x), sc.verify.sing_bound);
    let mut main = EstimateReport::new("main_estimate", it.e_lhs, it.d0, [grid.nx, grid.ny])
        .param("s", np.s)
        .param("p", np.p)
        .with_extra("norm_u", it.norm_u)
        .with_extra("norm_w", it.norm_w)
        .with_extra("norm_u0", it.norm_u0);
    main.trivial = it.status == IterationStatus::Trivial;
    report.estimates.push(main);
    report.iteration = Some(it);

    if mode == Mode::VerifyEstimates {
        let rhs = compute_rhs(&grid, &ops, &sc.fluid, &out.u, &out.w, &out.u0, &vec![0.0; grid.len()], &nodal.stress)?;
        let h = sub(&rhs.g, &ops.div(&out.u));
        let mut tr = transport_estimate_report(&grid, &ops, &out.w, &h, &ut, &np, report.geometry.delta)?;
        tr.trivial = tr.trivial || (out.w.iter().all(|&v| v == 0.0) && h.iter().all(|&v| v == 0.0));
        report.estimates.push(tr);
        let inflow = sample_boundary(&domain, Selection::Inflow, sc.solver.trace_samples);
        let w_in: Vec<f64> = inflow.points.iter().map(|&x| data.density_pert(x)).collect();
        let w_in_l2 = trace_lp(&w_in, &inflow, 2.0);
        report.estimates.push(transport_l2_report(&grid, &out.w, &h, w_in_l2)?);
        report.estimates.push(energy_report(
            &grid,
            &ops,
            &sc.fluid,
            &nodal.friction,
            &out.u,
            &out.w,
            &rhs.f,
            &rhs.g,
            &rhs.b,
            w_in_l2,
        )?);
        report.estimates.push(korn_report(&grid, &ops, &sc.fluid, &out.u));
        if let Some(case) = &sc.verify.mms {
            report.mms = mms_study(case, &sc.verify.mms_grids, &sc.fluid)?;
        }
    }

    let rho: Vec<f64> = out.w.iter().map(|w| 1.0 + w).collect();
    let fields = RunFields {
        names: vec!["u1", "u2", "w", "rho", "u0_1", "u0_2", "w0"],
        cols: vec![
            out.u[0].clone(),
            out.u[1].clone(),
            out.w.clone(),
            rho,
            out.u0[0].clone(),
            out.u0[1].clone(),
            out.w0.clone(),
        ],
        grid,
    };
    Ok((report, Some(fields)))
}

fn write_report(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

fn write_fields_dump(dir: &Path, f: &RunFields) -> Result<()> {
    let cols: Vec<&[f64]> = f.cols.iter().map(|c| c.as_slice()).collect();
    let name = if f.names.contains(&"u1") { "fields_solution.csv" } else { "fields_extension.csv" };
    write_fields(&dir.join(name), &f.grid, &f.names, &cols)
}

fn mms_csv(rows: &[MmsRow]) -> String {
    let mut s = String::from("case,n,err_l2,err_linf,identity_residual,order_l2,order_identity\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{:e},{:e},{:e},{},{}",
            r.case,
            r.n,
            r.err_l2,
            r.err_linf,
            r.identity_residual,
            opt(r.order_l2),
            opt(r.order_identity)
        );
    }
    s
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:e}"))
}

fn apply_overrides(sc: &mut Scenario, cfg: &RunConfig) -> Result<()> {
    if let Some(nx) = cfg.nx {
        sc.set("nx", nx as f64)?;
    }
    if let Some(ny) = cfg.ny {
        sc.set("ny", ny as f64)?;
    }
    Ok(())
}

/// One row of the sweep table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub scenario: String,
    pub parameter: String,
    pub value: f64,
    pub nx: usize,
    pub ny: usize,
    pub status: String,
    pub iterations: usize,
    pub d0: Option<f64>,
    pub e_lhs: Option<f64>,
    pub e_ratio: Option<f64>,
    pub max_q: Option<f64>,
    pub residual_linf: Option<f64>,
    pub c_main: Option<f64>,
    pub c_energy: Option<f64>,
    pub c_transport_wsp: Option<f64>,
    pub c_transport_l2: Option<f64>,
    pub c_korn: Option<f64>,
    pub c_extension_u0: Option<f64>,
    pub admissible: bool,
    /// `d log(e_lhs) / d log(value)` against the previous row
    pub slope_e_lhs: Option<f64>,
    pub exit_code: i32,
}

const SWEEP_HEADER: &str = "scenario,parameter,value,nx,ny,status,iterations,d0,e_lhs,e_ratio,max_q,residual_linf,\
c_main,c_energy,c_transport_wsp,c_transport_l2,c_korn,c_extension_u0,admissible,slope_e_lhs,exit_code";

fn sweep_row(name: &str, value: f64, r: &RunReport) -> SweepRow {
    let c = |n: &str| r.estimate(n).and_then(|e| e.constant);
    let it = r.iteration.as_ref();
    let status = match (&r.error, it) {
        (Some(e), _) => e.kind.clone(),
        (None, Some(i)) => serde_json::to_value(i.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
        (None, None) => "not_solved".into(),
    };
    SweepRow {
        scenario: r.scenario.clone(),
        parameter: name.to_string(),
        value,
        nx: r.grid[0],
        ny: r.grid[1],
        status,
        iterations: it.map_or(0, |i| i.iterations.len()),
        d0: r.d0.map(|d| d.total),
        e_lhs: it.map(|i| i.e_lhs),
        e_ratio: it.and_then(|i| i.e_ratio),
        max_q: it.and_then(|i| i.max_q()),
        residual_linf: it.map(|i| i.residual.max_linf()),
        c_main: c("main_estimate"),
        c_energy: c("energy"),
        c_transport_wsp: c("transport_wsp"),
        c_transport_l2: c("transport_l2"),
        c_korn: c("korn"),
        c_extension_u0: c("extension_u0"),
        admissible: r.admissible,
        slope_e_lhs: None,
        exit_code: r.exit_code(),
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{:e},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.scenario,
            r.parameter,
            r.value,
            r.nx,
            r.ny,
            r.status,
            r.iterations,
            opt(r.d0),
            opt(r.e_lhs),
            opt(r.e_ratio),
            opt(r.max_q),
            opt(r.residual_linf),
            opt(r.c_main),
            opt(r.c_energy),
            opt(r.c_transport_wsp),
            opt(r.c_transport_l2),
            opt(r.c_korn),
            opt(r.c_extension_u0),
            r.admissible,
            opt(r.slope_e_lhs),
            r.exit_code
        );
    }
    s
}

/// Repeat a run over the values of one parameter.
pub fn sweep(sc: &Scenario, mode: Mode, spec: &SweepSpec) -> Result<(Vec<SweepRow>, Vec<RunReport>)> {
    let mut rows: Vec<SweepRow> = Vec::new();
    let mut reports = Vec::new();
    for &v in &spec.values {
        let mut s = sc.clone();
        s.set(&spec.name, v)?;
        let (r, _) = run_scenario(&s, mode)?;
        let mut row = sweep_row(&spec.name, v, &r);
        if let (Some(prev), Some(e)) = (rows.last(), row.e_lhs) {
            if let Some(pe) = prev.e_lhs {
                if pe > 0.0 && e > 0.0 && prev.value > 0.0 && v > 0.0 && prev.value != v {
                    row.slope_e_lhs = Some((e / pe).ln() / (v / prev.value).ln());
                }
            }
        }
        rows.push(row);
        reports.push(r);
    }
    Ok((rows, reports))
}

#[derive(Serialize)]
struct SweepReport<'a> {
    schema: u32,
    scenario: &'a str,
    parameter: &'a str,
    mode: Mode,
    rows: &'a [SweepRow],
    runs: &'a [RunReport],
    #[serde(skip_serializing_if = "Option::is_none")]
    elapsed_s: Option<f64>,
}

/// Full CLI run: writes artifacts into `cfg.out` and returns the exit code.
/// Errors before any report exists are returned to the caller.
pub fn run(cfg: &RunConfig) -> Result<i32> {
    let start = Instant::now();
    let mut sc = Scenario::load(&cfg.scenario)?;
    apply_overrides(&mut sc, cfg)?;
    std::fs::create_dir_all(&cfg.out)?;
    let elapsed = || (!cfg.deterministic).then(|| start.elapsed().as_secs_f64());

    if let Some(spec) = &cfg.sweep {
        let (rows, runs) = sweep(&sc, cfg.mode, spec)?;
        std::fs::write(cfg.out.join("convergence.csv"), sweep_csv(&rows))?;
        let rep = SweepReport {
            schema: SCHEMA,
            scenario: &sc.name,
            parameter: &spec.name,
            mode: cfg.mode,
            rows: &rows,
            runs: &runs,
            elapsed_s: elapsed(),
        };
        write_report(&cfg.out.join("report.json"), &rep)?;
        // the most severe outcome wins: divergence, then inadmissibility
        let codes: Vec<i32> = rows.iter().map(|r| r.exit_code).collect();
        return Ok(if codes.contains(&3) {
            3
        } else if codes.contains(&4) {
            4
        } else {
            codes.into_iter().max().unwrap_or(0)
        });
    }

    let (mut report, fields) = run_scenario(&sc, cfg.mode)?;
    report.elapsed_s = elapsed();
    write_report(&cfg.out.join("report.json"), &report)?;
    if let Some(f) = &fields {
        write_fields_dump(&cfg.out, f)?;
    }
    if !report.mms.is_empty() {
        std::fs::write(cfg.out.join("convergence.csv"), mms_csv(&report.mms))?;
    }
    Ok(report.exit_code())
}

/// Machine-readable error for failures that leave no report.
pub fn error_json(e: &Error) -> String {
    #[derive(Serialize)]
    struct Wrapper {
        schema: u32,
        error: ErrorInfo,
    }
    serde_json::to_string(&Wrapper { schema: SCHEMA, error: error_info(e) }).unwrap_or_default()
}
